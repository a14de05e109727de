use std::collections::HashSet;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::nn::{Loss, Network};
use super::train::{train, TrainConfig};
use super::{random_finite, ProbeReport};
use crate::encoders::{bittoken_decode, bittoken_payload, sigmoid, BitTokenConfig};
use crate::{Error, Result};

/// How the payload reaches the hidden state the head reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    /// Fixed random matrix with orthonormal columns, plus a random constant
    /// vector standing in for the `[NUM]` embedding.
    Orthogonal,
    /// Zero padding and nothing else.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentityConfig {
    pub d_model: usize,
    pub train: usize,
    pub eval: usize,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    /// Probability of flipping each training label bit.
    pub label_noise: f64,
    pub projection: Projection,
    pub seed: u64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            d_model: 256,
            train: 50_000,
            eval: 2_000,
            steps: 5_000,
            batch: 1024,
            lr: 200.0,
            label_noise: 0.0,
            projection: Projection::Orthogonal,
            seed: 0,
        }
    }
}

/// Columns of a random `rows x cols` matrix, orthonormalized by modified
/// Gram-Schmidt.
pub fn orthonormal_columns<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Result<Array2<f64>> {
    if cols > rows {
        return Err(Error::invalid(format!("cannot fit {cols} orthonormal columns in {rows} dims")));
    }
    let mut q = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-1.0..1.0));
    for j in 0..cols {
        for k in 0..j {
            let dot = q.column(k).dot(&q.column(j));
            let prev = q.column(k).to_owned();
            q.column_mut(j).scaled_add(-dot, &prev);
        }
        let norm: f64 = q.column(j).dot(&q.column(j));
        let norm = norm.sqrt();
        if norm < 1e-8 {
            return Err(Error::invalid("degenerate projection draw"));
        }
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    Ok(q)
}

struct Setup {
    projection: Array2<f64>,
    token: Array1<f64>,
    bits: BitTokenConfig,
}

impl Setup {
    fn hidden(&self, values: &[f64]) -> Result<(Array2<f64>, Array2<f64>)> {
        let width = self.bits.payload_width();
        let mut payload = Array2::zeros((values.len(), width));
        for (i, &v) in values.iter().enumerate() {
            for (j, p) in bittoken_payload(v, &self.bits)?.into_iter().enumerate() {
                payload[[i, j]] = p;
            }
        }
        let targets = payload.mapv(|p| if p > 0.0 { 1.0 } else { 0.0 });
        let hidden = payload.dot(&self.projection.t()) + &self.token;
        Ok((hidden, targets))
    }
}

/// Fraction of correct bits and of exactly decoded values on a held-out set.
fn evaluate(net: &Network, hidden: &Array2<f64>, targets: &Array2<f64>, values: &[f64], bits: &BitTokenConfig) -> Result<(f64, f64)> {
    let logits = net.forward(hidden);
    let correct = ndarray::Zip::from(&logits)
        .and(targets)
        .fold(0usize, |acc, &z, &t| acc + usize::from((z >= 0.0) == (t > 0.5)));
    let mut exact = 0;
    for (row, &v) in logits.rows().into_iter().zip(values) {
        let probs: Vec<f64> = row.iter().map(|&z| sigmoid(z)).collect();
        if bittoken_decode(&probs, bits)?.to_bits() == v.to_bits() {
            exact += 1;
        }
    }
    Ok((
        correct as f64 / targets.len() as f64,
        exact as f64 / values.len() as f64,
    ))
}

/// Train a linear number head to read BitToken bits back out of a fixed
/// linear view of the payload plus a constant `[NUM]` vector. Stops at the
/// first evaluation with every held-out bit correct.
pub fn train_identity_head(cfg: &IdentityConfig) -> Result<ProbeReport> {
    let bits = BitTokenConfig::with_d_model(cfg.d_model);
    bits.validate()?;
    if !(0.0..0.5).contains(&cfg.label_noise) {
        return Err(Error::invalid("label_noise must be in [0, 0.5)"));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let width = bits.payload_width();
    let projection = match cfg.projection {
        Projection::Orthogonal => orthonormal_columns(&mut rng, cfg.d_model, width)?,
        Projection::Identity => Array2::eye(cfg.d_model).slice_move(ndarray::s![.., ..width]),
    };
    let token = match cfg.projection {
        Projection::Orthogonal => Array1::from_shape_fn(cfg.d_model, |_| rng.gen_range(-1.0..1.0)),
        Projection::Identity => Array1::zeros(cfg.d_model),
    };
    let setup = Setup { projection, token, bits };

    let train_values: Vec<f64> = (0..cfg.train).map(|_| random_finite(&mut rng)).collect();
    let seen: HashSet<u64> = train_values.iter().map(|v| v.to_bits()).collect();
    let mut eval_values = Vec::with_capacity(cfg.eval);
    while eval_values.len() < cfg.eval {
        let v = random_finite(&mut rng);
        if !seen.contains(&v.to_bits()) {
            eval_values.push(v);
        }
    }
    let (x, mut t) = setup.hidden(&train_values)?;
    if cfg.label_noise > 0.0 {
        t.mapv_inplace(|b| if rng.gen_bool(cfg.label_noise) { 1.0 - b } else { b });
    }
    let (ex, et) = setup.hidden(&eval_values)?;

    let mut net = Network::linear(&mut rng, cfg.d_model, width);
    let tc = TrainConfig {
        steps: cfg.steps,
        batch: cfg.batch,
        lr: cfg.lr,
        clip: 1.0,
        loss: Loss::Bce,
        loss_weight: 1.0,
        eval_every: 50,
    };
    let outcome = train(&mut net, &x, &t, &tc, &mut rng, |n| {
        let logits = n.forward(&ex);
        ndarray::Zip::from(&logits)
            .and(&et)
            .all(|&z, &t| (z >= 0.0) == (t > 0.5))
    })?;
    let (bit_accuracy, exact_decode_rate) = evaluate(&net, &ex, &et, &eval_values, &setup.bits)?;
    Ok(ProbeReport {
        task: "identity_decode".into(),
        scheme: "bittoken".into(),
        operation: None,
        steps: outcome.steps,
        final_loss: outcome.final_loss,
        bit_accuracy: Some(bit_accuracy),
        exact_decode_rate,
        seed: cfg.seed,
    })
}
