use rand::Rng;

use crate::numeric::{round_sig, round_sig_bits, Radix};

/// Benchmark magnitudes live in `[MIN_MAGNITUDE, MAX_MAGNITUDE) ∪ {0}`.
pub const MIN_MAGNITUDE: f64 = 1e-14;
pub const MAX_MAGNITUDE: f64 = 1e15;
/// Integer decade exponents `x` drawn for operands.
pub const DECADES: std::ops::Range<i32> = -14..15;

pub fn in_range(v: f64) -> bool {
    v == 0.0 || (MIN_MAGNITUDE..MAX_MAGNITUDE).contains(&v.abs())
}

/// Correctly rounded `10^k`.
pub fn pow10(k: i32) -> f64 {
    format!("1e{k}").parse().expect("power of ten literal")
}

/// `U(10^x, 10^(x+1))`.
pub fn uniform_decade<R: Rng + ?Sized>(rng: &mut R, x: i32) -> f64 {
    rng.gen_range(pow10(x)..pow10(x + 1))
}

/// Largest significant digit (or bit) count in the given base.
pub fn max_precision(radix: Radix) -> u32 {
    match radix {
        Radix::Decimal => 17,
        Radix::Binary => 53,
    }
}

pub fn round_to(v: f64, p: u32, radix: Radix) -> f64 {
    match radix {
        Radix::Decimal => round_sig(v, p),
        Radix::Binary => round_sig_bits(v, p),
    }
    .expect("finite value and valid precision")
}

pub fn sample_precision<R: Rng + ?Sized>(rng: &mut R, radix: Radix) -> u32 {
    rng.gen_range(1..=max_precision(radix))
}

/// One operand: decade uniform over `[-14, 15)`, value uniform inside the
/// decade, rounded to a uniformly drawn precision.
pub fn sample_operand<R: Rng + ?Sized>(rng: &mut R, radix: Radix) -> f64 {
    loop {
        let x = rng.gen_range(DECADES);
        let p = sample_precision(rng, radix);
        let v = round_to(uniform_decade(rng, x), p, radix);
        if in_range(v) {
            return v;
        }
    }
}

/// Continuous triangular distribution by inverse CDF.
pub fn triangular<R: Rng + ?Sized>(rng: &mut R, left: f64, mode: f64, right: f64) -> f64 {
    if right <= left {
        return left;
    }
    let u: f64 = rng.gen();
    let cut = (mode - left) / (right - left);
    if u < cut {
        left + (u * (right - left) * (mode - left)).sqrt()
    } else {
        right - ((1.0 - u) * (right - left) * (right - mode)).sqrt()
    }
}

/// Combined and individual precisions `(p12, p1, p2)` for a binary operation.
pub fn split_precision<R: Rng + ?Sized>(rng: &mut R, radix: Radix) -> (u32, u32, u32) {
    let max = max_precision(radix);
    let p12 = rng.gen_range(2..=2 * max);
    let l = p12.div_ceil(2);
    let c = (p12 - 1).min(max);
    let mode = (l + 1).min(c);
    let draw = triangular(rng, l as f64, mode as f64, c as f64).floor() as u32;
    let p1 = draw.clamp(1, c);
    (p12, p1, p12 - p1)
}

/// Which operands are negated, following the 40/40/20 style schema
/// (both positive / exactly one negative / both negative).
pub fn sample_signs<R: Rng + ?Sized>(rng: &mut R, schema: &[u32; 3]) -> (bool, bool) {
    let r = rng.gen_range(0..100u32);
    if r < schema[0] {
        (false, false)
    } else if r < schema[0] + schema[1] {
        let first = rng.gen_bool(0.5);
        (first, !first)
    } else {
        (true, true)
    }
}
