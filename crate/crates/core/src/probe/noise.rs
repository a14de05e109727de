use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::encoders::{
    bittoken_decode, bittoken_payload, fone_decode, fone_encode, xval_decode, xval_encode,
    BitTokenConfig, FoneConfig, Scheme,
};
use crate::numeric::{round_sig, ANSWER_DIGITS};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub sigma: f64,
    pub exact_decode_rate: f64,
}

/// Log-uniform magnitude in `[1e-14, 1e15)` with a random sign; FoNE gets
/// the absolute value.
fn sample_value<R: Rng>(rng: &mut R) -> f64 {
    let v = 10f64.powf(rng.gen_range(-14.0..15.0));
    if rng.gen_bool(0.5) {
        -v
    } else {
        v
    }
}

fn same_at_answer_precision(a: f64, b: f64) -> bool {
    match (round_sig(a, ANSWER_DIGITS), round_sig(b, ANSWER_DIGITS)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Fraction of `n` values decoded exactly after adding `U(-σ, σ)` to every
/// payload entry.
///
/// * BitTokens: noise on the ideal bit probabilities; exact means identical bits.
/// * FoNE: noise on the cosine/sine entries; exact means the same value.
/// * xVal: noise on the scalar; exact means agreement at 15 significant digits.
pub fn noise_sweep(scheme: Scheme, sigmas: &[f64], n: usize, seed: u64) -> Result<Vec<NoisePoint>> {
    let bits = BitTokenConfig::default();
    let fone = FoneConfig::default();
    let mut out = Vec::with_capacity(sigmas.len());
    for (k, &sigma) in sigmas.iter().enumerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let noise = |rng: &mut ChaCha20Rng| {
            if sigma > 0.0 {
                rng.gen_range(-sigma..sigma)
            } else {
                0.0
            }
        };
        let mut exact = 0usize;
        for _ in 0..n {
            let v = sample_value(&mut rng);
            let ok = match scheme {
                Scheme::BitToken => {
                    let probs: Vec<f64> = bittoken_payload(v, &bits)?
                        .into_iter()
                        .map(|p| if p > 0.0 { 1.0 } else { 0.0 } + noise(&mut rng))
                        .collect();
                    bittoken_decode(&probs, &bits)?.to_bits() == v.to_bits()
                }
                Scheme::Fone => {
                    let v = v.abs();
                    let noisy: Vec<f64> = fone_encode(v, &fone)?
                        .values
                        .into_iter()
                        .map(|x| x + noise(&mut rng))
                        .collect();
                    fone_decode(&noisy, &fone)? == v
                }
                Scheme::Xval => {
                    let s = xval_encode(v)? + noise(&mut rng);
                    same_at_answer_precision(xval_decode(s)?, v)
                }
            };
            exact += usize::from(ok);
        }
        out.push(NoisePoint {
            sigma,
            exact_decode_rate: exact as f64 / n.max(1) as f64,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bittoken_survives_sub_threshold_noise() {
        let pts = noise_sweep(Scheme::BitToken, &[0.0, 0.3, 0.49], 2_000, 1).unwrap();
        assert!(pts.iter().all(|p| p.exact_decode_rate == 1.0));
    }

    #[test]
    fn fone_round_trips_without_noise() {
        let pts = noise_sweep(Scheme::Fone, &[0.0], 2_000, 2).unwrap();
        assert_eq!(pts[0].exact_decode_rate, 1.0);
    }

    #[test]
    fn xval_loses_digits_under_tiny_noise() {
        let pts = noise_sweep(Scheme::Xval, &[1e-6], 2_000, 3).unwrap();
        assert!(pts[0].exact_decode_rate < 0.01, "{pts:?}");
    }
}
