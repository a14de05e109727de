use ndarray::{Array1, Array2};

use crate::{Error, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before being
/// turned back into logits.
pub const PROB_CLAMP: f64 = 1e-12;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Mean bitwise binary cross entropy on logits, with its gradient.
pub fn bce_with_logits(logits: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if logits.len() != targets.len() || logits.is_empty() {
        return Err(Error::invalid(format!(
            "{} logits vs {} targets",
            logits.len(),
            targets.len()
        )));
    }
    let n = logits.len() as f64;
    let loss = logits
        .iter()
        .zip(targets)
        .map(|(&z, &t)| softplus(z) - t * z)
        .sum::<f64>()
        / n;
    let grad = logits
        .iter()
        .zip(targets)
        .map(|(&z, &t)| (sigmoid(z) - t) / n)
        .collect();
    Ok((loss, grad))
}

/// Same loss starting from probabilities; the gradient is taken with respect
/// to the pre-sigmoid logits.
pub fn bce_loss_grad(probs: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if probs.iter().any(|p| p.is_nan()) {
        return Err(Error::invalid("probabilities must not be NaN"));
    }
    let logits: Vec<f64> = probs
        .iter()
        .map(|&p| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            (p / (1.0 - p)).ln()
        })
        .collect();
    bce_with_logits(&logits, targets)
}

/// Linear number head: `sigmoid(hidden · W + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberHeadParams {
    weight: Array2<f64>,
    bias: Array1<f64>,
}

impl NumberHeadParams {
    pub fn new(weight: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        if weight.ncols() != bias.len() {
            return Err(Error::invalid(format!(
                "weight has {} output columns, bias has {}",
                weight.ncols(),
                bias.len()
            )));
        }
        Ok(Self { weight, bias })
    }

    pub fn d_model(&self) -> usize {
        self.weight.nrows()
    }

    pub fn n_bits(&self) -> usize {
        self.bias.len()
    }

    pub fn weight(&self) -> &Array2<f64> {
        &self.weight
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn logits(&self, hidden: &[f64]) -> Result<Vec<f64>> {
        if hidden.len() != self.d_model() {
            return Err(Error::invalid(format!(
                "hidden state has {} dims, head expects {}",
                hidden.len(),
                self.d_model()
            )));
        }
        let h = ndarray::ArrayView1::from(hidden);
        Ok((h.dot(&self.weight) + &self.bias).to_vec())
    }

    pub fn probs(&self, hidden: &[f64]) -> Result<Vec<f64>> {
        Ok(self.logits(hidden)?.into_iter().map(sigmoid).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn analytic_values() {
        let (l, g) = bce_loss_grad(&[0.5; 8], &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((g[0] + 0.5 / 8.0).abs() < 1e-15);
        let (l, _) = bce_loss_grad(&[1.0, 0.0, 1.0], &[1.0, 0.0, 1.0]).unwrap();
        assert!((0.0..1e-11).contains(&l));
        assert!(bce_loss_grad(&[0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-5;
        for _ in 0..50 {
            let z: Vec<f64> = (0..16).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let t: Vec<f64> = (0..16).map(|_| rng.gen_range(0..2) as f64).collect();
            let (_, g) = bce_with_logits(&z, &t).unwrap();
            for i in 0..z.len() {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[i] += h;
                zm[i] -= h;
                let num = (bce_with_logits(&zp, &t).unwrap().0 - bce_with_logits(&zm, &t).unwrap().0)
                    / (2.0 * h);
                let rel = (g[i] - num).abs() / (g[i].abs() + num.abs());
                assert!(rel < 1e-6, "{rel}");
            }
        }
    }

    #[test]
    fn extreme_logits_are_stable() {
        let (l, g) = bce_with_logits(&[800.0, -800.0], &[0.0, 1.0]).unwrap();
        assert_eq!(l, 800.0);
        assert_eq!(g, vec![0.5, -0.5]);
    }

    #[test]
    fn head_shapes() {
        let w = Array2::from_shape_fn((3, 2), |(i, j)| (i + j) as f64);
        let head = NumberHeadParams::new(w, Array1::from(vec![0.0, -1.0])).unwrap();
        assert_eq!(head.logits(&[1.0, 1.0, 1.0]).unwrap(), vec![3.0, 5.0]);
        assert!(head.logits(&[1.0]).is_err());
        assert!(NumberHeadParams::new(Array2::zeros((3, 2)), Array1::zeros(3)).is_err());
    }
}
