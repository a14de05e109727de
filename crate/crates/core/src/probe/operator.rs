use std::collections::HashSet;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::nn::{Loss, Network};
use super::train::{train, TrainConfig};
use super::ProbeReport;
use crate::encoders::{
    bittoken_decode, bittoken_payload, fone_decode, fone_encode, sigmoid, BitTokenConfig, Combine,
    FoneConfig, Scheme,
};
use crate::numeric::Radix;
use crate::{Error, Result};

/// Weight of the number loss in the composite objective.
pub const NUMBER_LOSS_WEIGHT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Add,
    Mult,
}

impl Operation {
    fn apply(self, x: u64, y: u64) -> u64 {
        match self {
            Operation::Add => x + y,
            Operation::Mult => x * y,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Operation::Add => "add",
            Operation::Mult => "mult",
        }
    }
}

impl std::str::FromStr for Operation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" => Ok(Operation::Add),
            "mult" => Ok(Operation::Mult),
            other => Err(Error::invalid(format!("unknown operation {other:?} (expected add or mult)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorConfig {
    pub scheme: Scheme,
    pub operation: Operation,
    /// Operands are integers in `[0, max_operand)`.
    pub max_operand: u64,
    pub train: usize,
    pub eval: usize,
    pub hidden: usize,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Fone,
            operation: Operation::Add,
            max_operand: 1 << 16,
            train: 100_000,
            eval: 2_000,
            hidden: 512,
            steps: 5_000,
            batch: 256,
            lr: 0.1,
            seed: 0,
        }
    }
}

enum Codec {
    Fone(FoneConfig),
    Bits(BitTokenConfig),
}

impl Codec {
    fn new(cfg: &OperatorConfig) -> Result<Self> {
        let max_result = cfg.operation.apply(cfg.max_operand - 1, cfg.max_operand - 1);
        match cfg.scheme {
            Scheme::Fone => {
                let digits = max_result.max(1).ilog10() + 1;
                Ok(Codec::Fone(FoneConfig {
                    base: 10,
                    int_freqs: digits,
                    frac_freqs: 0,
                }))
            }
            Scheme::BitToken => Ok(Codec::Bits(BitTokenConfig {
                include_reciprocal: false,
                radix: Radix::Binary,
                combine: Combine::Sum,
                d_model: 64,
            })),
            Scheme::Xval => Err(Error::invalid("operator demo supports bittoken and fone")),
        }
    }

    fn width(&self) -> usize {
        match self {
            Codec::Fone(c) => c.payload_width(),
            Codec::Bits(c) => c.payload_width(),
        }
    }

    fn loss(&self) -> Loss {
        match self {
            Codec::Fone(_) => Loss::Mse,
            Codec::Bits(_) => Loss::Bce,
        }
    }

    fn input(&self, v: u64) -> Result<Vec<f64>> {
        match self {
            Codec::Fone(c) => Ok(fone_encode(v as f64, c)?.values),
            Codec::Bits(c) => bittoken_payload(v as f64, c),
        }
    }

    fn target(&self, v: u64) -> Result<Vec<f64>> {
        let enc = self.input(v)?;
        Ok(match self {
            Codec::Fone(_) => enc,
            Codec::Bits(_) => enc.into_iter().map(|p| if p > 0.0 { 1.0 } else { 0.0 }).collect(),
        })
    }

    fn decode(&self, out: &[f64]) -> Result<f64> {
        match self {
            Codec::Fone(c) => fone_decode(out, c),
            Codec::Bits(c) => {
                let probs: Vec<f64> = out.iter().map(|&z| sigmoid(z)).collect();
                bittoken_decode(&probs, c)
            }
        }
    }
}

fn build(codec: &Codec, pairs: &[(u64, u64)], op: Operation) -> Result<(Array2<f64>, Array2<f64>)> {
    let w = codec.width();
    let mut x = Array2::zeros((pairs.len(), 2 * w));
    let mut t = Array2::zeros((pairs.len(), w));
    for (i, &(a, b)) in pairs.iter().enumerate() {
        for (j, v) in codec.input(a)?.into_iter().chain(codec.input(b)?).enumerate() {
            x[[i, j]] = v;
        }
        for (j, v) in codec.target(op.apply(a, b))?.into_iter().enumerate() {
            t[[i, j]] = v;
        }
    }
    Ok((x, t))
}

fn exact_rate(net: &Network, codec: &Codec, x: &Array2<f64>, pairs: &[(u64, u64)], op: Operation) -> Result<f64> {
    let out = net.forward(x);
    let mut hits = 0;
    for (row, &(a, b)) in out.rows().into_iter().zip(pairs) {
        let row: Vec<f64> = row.to_vec();
        if codec.decode(&row)? == op.apply(a, b) as f64 {
            hits += 1;
        }
    }
    Ok(hits as f64 / pairs.len().max(1) as f64)
}

/// Train a one-hidden-layer MLP mapping `(enc(x), enc(y))` to `enc(x op y)`
/// and report the held-out exact-decode rate.
pub fn operator_learn_demo(cfg: &OperatorConfig) -> Result<ProbeReport> {
    if cfg.max_operand < 2 || cfg.max_operand > 1 << 26 {
        return Err(Error::invalid("max_operand must be in [2, 2^26]"));
    }
    let codec = Codec::new(cfg)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let draw = |rng: &mut ChaCha20Rng| (rng.gen_range(0..cfg.max_operand), rng.gen_range(0..cfg.max_operand));
    let train_pairs: Vec<(u64, u64)> = (0..cfg.train).map(|_| draw(&mut rng)).collect();
    let seen: HashSet<(u64, u64)> = train_pairs.iter().copied().collect();
    let total = cfg.max_operand.saturating_mul(cfg.max_operand);
    if (seen.len() as u64).saturating_add(cfg.eval as u64) > total {
        return Err(Error::invalid("operand range too small for disjoint train and eval sets"));
    }
    let mut eval_pairs = Vec::with_capacity(cfg.eval);
    while eval_pairs.len() < cfg.eval {
        let p = draw(&mut rng);
        if !seen.contains(&p) {
            eval_pairs.push(p);
        }
    }
    let (x, t) = build(&codec, &train_pairs, cfg.operation)?;
    let (ex, _) = build(&codec, &eval_pairs, cfg.operation)?;

    let mut net = Network::mlp(&mut rng, x.ncols(), cfg.hidden, codec.width());
    let tc = TrainConfig {
        steps: cfg.steps,
        batch: cfg.batch,
        lr: cfg.lr,
        clip: 1.0,
        loss: codec.loss(),
        loss_weight: NUMBER_LOSS_WEIGHT,
        eval_every: cfg.steps.max(1),
    };
    let outcome = train(&mut net, &x, &t, &tc, &mut rng, |_| false)?;
    let exact_decode_rate = exact_rate(&net, &codec, &ex, &eval_pairs, cfg.operation)?;
    let bit_accuracy = match &codec {
        Codec::Bits(_) => {
            let (_, et) = build(&codec, &eval_pairs, cfg.operation)?;
            let out = net.forward(&ex);
            let correct = ndarray::Zip::from(&out)
                .and(&et)
                .fold(0usize, |acc, &z, &t| acc + usize::from((z >= 0.0) == (t > 0.5)));
            Some(correct as f64 / et.len() as f64)
        }
        Codec::Fone(_) => None,
    };
    Ok(ProbeReport {
        task: "operator_learn".into(),
        scheme: cfg.scheme.to_string(),
        operation: Some(cfg.operation.name().into()),
        steps: outcome.steps,
        final_loss: outcome.final_loss,
        bit_accuracy,
        exact_decode_rate,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encodings_decode_their_targets() {
        for scheme in [Scheme::Fone, Scheme::BitToken] {
            let cfg = OperatorConfig { scheme, ..OperatorConfig::default() };
            let codec = Codec::new(&cfg).unwrap();
            for v in [0u64, 7, 65_535, 131_070] {
                let t = codec.target(v).unwrap();
                let out: Vec<f64> = match codec {
                    Codec::Fone(_) => t,
                    Codec::Bits(_) => t.iter().map(|&b| if b > 0.5 { 20.0 } else { -20.0 }).collect(),
                };
                assert_eq!(codec.decode(&out).unwrap(), v as f64);
            }
        }
    }

    #[test]
    fn small_fone_addition_is_learned() {
        let cfg = OperatorConfig {
            max_operand: 1_000,
            train: 20_000,
            eval: 500,
            hidden: 128,
            steps: 1_500,
            seed: 1,
            ..OperatorConfig::default()
        };
        let r = operator_learn_demo(&cfg).unwrap();
        assert!(r.exact_decode_rate >= 0.95, "{r:?}");
        assert_eq!(r.operation.as_deref(), Some("add"));
    }

    #[test]
    fn xval_is_rejected() {
        let cfg = OperatorConfig { scheme: Scheme::Xval, ..OperatorConfig::default() };
        assert!(operator_learn_demo(&cfg).is_err());
    }
}
