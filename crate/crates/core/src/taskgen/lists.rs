use num_traits::{Signed, Zero};
use rand::Rng;

use super::oracle::written;
use super::sample::{in_range, pow10, round_to, sample_precision};
use crate::numeric::hiprec::{ratio_from_f64, ratio_from_int, Ratio};
use crate::numeric::Radix;

/// Candidate lists drawn per problem; the one with the closest mean wins.
pub const LIST_CANDIDATES: usize = 1000;
pub const LIST_LENGTHS: std::ops::RangeInclusive<usize> = 2..=5;

/// One unconstrained candidate: `l - 1` elements uniform in
/// `[m - 10^s, m + 10^s]`, a last element that restores the mean `m`, and a
/// per-element precision `p ~ U(1, 17)` (digits) or `U(1, 53)` (bits).
pub fn draw_candidate<R: Rng + ?Sized>(
    rng: &mut R,
    l: usize,
    spread: i32,
    target_mean: f64,
    radix: Radix,
) -> Vec<f64> {
    let width = pow10(spread);
    let mut raw = Vec::with_capacity(l);
    for _ in 1..l {
        raw.push(rng.gen_range(target_mean - width..=target_mean + width));
    }
    let partial: f64 = raw.iter().sum();
    raw.push(target_mean * l as f64 - partial);
    raw.into_iter()
        .map(|v| {
            let p = sample_precision(rng, radix);
            if v.is_finite() {
                round_to(v, p, radix)
            } else {
                v
            }
        })
        .collect()
}

/// Candidate constraints: every element in range, not all equal, and a
/// non-zero mean for even lengths.
pub fn candidate_is_valid(values: &[f64]) -> bool {
    if !values.iter().all(|&v| v.is_finite() && in_range(v)) {
        return false;
    }
    if values.iter().all(|&v| v == values[0]) {
        return false;
    }
    if values.len().is_multiple_of(2) {
        let approx: f64 = values.iter().sum();
        let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if approx.abs() <= scale * 1e-12 {
            let sum: Ratio = values.iter().map(|&v| written(v)).sum();
            if sum.is_zero() {
                return false;
            }
        }
    }
    true
}

/// `|mean(values) - m|` on the written decimals, exactly.
pub fn exact_mean_distance(values: &[f64], target_mean: f64) -> Ratio {
    let sum: Ratio = values.iter().map(|&v| written(v)).sum();
    let m = ratio_from_f64(target_mean).expect("finite target");
    (sum / ratio_from_int(values.len() as i64) - m).abs()
}

/// Neumaier-compensated `|Σ v - l·m|`, used to skip exact comparisons.
fn approx_distance(values: &[f64], target_mean: f64) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let terms = values
        .iter()
        .copied()
        .chain(std::iter::repeat_n(-target_mean, values.len()));
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    (sum + comp).abs()
}

/// Best of [`LIST_CANDIDATES`] valid candidates by distance of the mean to
/// `target_mean`; earlier candidates win ties. `None` if no candidate is valid.
pub fn gen_number_list<R: Rng + ?Sized>(
    rng: &mut R,
    l: usize,
    spread: i32,
    target_mean: f64,
    radix: Radix,
) -> Option<Vec<f64>> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..LIST_CANDIDATES {
        let cand = draw_candidate(rng, l, spread, target_mean, radix);
        if !candidate_is_valid(&cand) {
            continue;
        }
        let d = approx_distance(&cand, target_mean);
        let replace = match &best {
            None => true,
            Some((_, bd)) if d < bd * (1.0 - 1e-9) => true,
            Some((_, bd)) if d > bd * (1.0 + 1e-9) && d > 0.0 => false,
            Some((bv, _)) => {
                exact_mean_distance(&cand, target_mean) < exact_mean_distance(bv, target_mean)
            }
        };
        if replace {
            best = Some((cand, d));
        }
    }
    best.map(|(v, _)| v)
}
