use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Serialize};

use super::{EmbeddingVector, Scheme};
use crate::numeric::hiprec::{ratio_from_f64, ratio_to_f64};
use crate::{Error, Result};

/// Fourier number embedding layout.
///
/// Frequency `φ` contributes `(cos 2π b^φ x, sin 2π b^φ x)`. The set is
/// `{-int_freqs, …, -1} ∪ {0, …, frac_freqs - 1}`, so `φ = -(k+1)` resolves the
/// digit at place `b^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoneConfig {
    pub base: u32,
    pub int_freqs: u32,
    pub frac_freqs: u32,
}

impl Default for FoneConfig {
    fn default() -> Self {
        Self {
            base: 10,
            int_freqs: 17,
            frac_freqs: 32,
        }
    }
}

impl FoneConfig {
    pub fn frequencies(&self) -> Vec<i32> {
        (-(self.int_freqs as i32)..self.frac_freqs as i32).collect()
    }

    pub fn n_freqs(&self) -> usize {
        (self.int_freqs + self.frac_freqs) as usize
    }

    pub fn payload_width(&self) -> usize {
        2 * self.n_freqs()
    }

    pub fn validate(&self) -> Result<()> {
        if self.base < 2 {
            return Err(Error::invalid("FoNE base must be at least 2"));
        }
        if self.n_freqs() == 0 {
            return Err(Error::invalid("FoNE needs at least one frequency"));
        }
        Ok(())
    }
}

/// `frac(b^φ · x)` for every frequency, reduced exactly before conversion.
pub fn fone_phases(x: &BigRational, cfg: &FoneConfig) -> Vec<f64> {
    let b = BigInt::from(cfg.base);
    let (num, den) = (x.numer(), x.denom());
    cfg.frequencies()
        .into_iter()
        .map(|phi| {
            let scale: BigInt = Pow::pow(&b, phi.unsigned_abs());
            let (n, d) = if phi >= 0 {
                (num * &scale, den.clone())
            } else {
                (num.clone(), den * &scale)
            };
            let r = n.mod_floor(&d);
            if r.is_zero() {
                0.0
            } else {
                ratio_to_f64(&BigRational::new_raw(r, d))
            }
        })
        .collect()
}

fn pairs(phases: &[f64]) -> Vec<f64> {
    phases
        .iter()
        .flat_map(|&t| {
            let (s, c) = (TAU * t).sin_cos();
            [c, s]
        })
        .collect()
}

pub fn fone_encode(v: f64, cfg: &FoneConfig) -> Result<EmbeddingVector> {
    cfg.validate()?;
    if !v.is_finite() {
        return Err(Error::invalid("FoNE input must be finite"));
    }
    if v < 0.0 {
        return Err(Error::invalid(
            "FoNE input must be non-negative; emit the sign as a separate token",
        ));
    }
    let x = ratio_from_f64(v).expect("finite");
    Ok(EmbeddingVector {
        values: pairs(&fone_phases(&x, cfg)),
        scheme: Scheme::Fone,
    })
}

/// Digit-wise nearest-phase decoding, finest place first.
///
/// The phase at place `b^k` is `(d_k + r) / b` where `r ∈ [0, 1)` is the part
/// contributed by the lower places, so each reference is shifted by the
/// already-decoded remainder. Ties go to the lower digit.
pub fn fone_decode(payload: &[f64], cfg: &FoneConfig) -> Result<f64> {
    cfg.validate()?;
    if payload.len() != cfg.payload_width() {
        return Err(Error::invalid(format!(
            "expected {} FoNE entries, got {}",
            cfg.payload_width(),
            payload.len()
        )));
    }
    if payload.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("FoNE payload contains non-finite entries"));
    }
    let b = cfg.base as f64;
    let freqs = cfg.frequencies();
    let base = BigInt::from(cfg.base);
    let mut remainder = 0.0;
    let mut value = BigInt::zero();
    // Walk from the finest place upward; `value` accumulates digits scaled by
    // b^frac_freqs so it stays an integer.
    let mut place_weight = BigInt::one();
    for (i, _phi) in freqs.iter().enumerate().rev() {
        let (c, s) = (payload[2 * i], payload[2 * i + 1]);
        let mut best = 0u32;
        let mut best_sim = f64::NEG_INFINITY;
        for d in 0..cfg.base {
            let (rs, rc) = (TAU * (d as f64 + remainder) / b).sin_cos();
            let sim = c * rc + s * rs;
            if sim > best_sim {
                best_sim = sim;
                best = d;
            }
        }
        value += &place_weight * best;
        place_weight *= &base;
        remainder = (best as f64 + remainder) / b;
    }
    let scale: BigInt = Pow::pow(&base, cfg.frac_freqs);
    Ok(ratio_to_f64(&BigRational::new(value, scale)))
}

/// `max_φ |F(x+y) − F(x)·F(y)|` with the complex product on each pair.
pub fn homomorphism_residual(x: f64, y: f64, cfg: &FoneConfig) -> Result<f64> {
    cfg.validate()?;
    let (rx, ry) = match (ratio_from_f64(x), ratio_from_f64(y)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::invalid("homomorphism residual needs finite inputs")),
    };
    let sum = &rx + &ry;
    let fx = pairs(&fone_phases(&rx, cfg));
    let fy = pairs(&fone_phases(&ry, cfg));
    let fs = pairs(&fone_phases(&sum, cfg));
    let mut worst = 0.0f64;
    for i in 0..cfg.n_freqs() {
        let (a, b) = (fx[2 * i], fx[2 * i + 1]);
        let (c, d) = (fy[2 * i], fy[2 * i + 1]);
        let (re, im) = (a * c - b * d, a * d + b * c);
        worst = worst.max((fs[2 * i] - re).hypot(fs[2 * i + 1] - im));
    }
    Ok(worst)
}
