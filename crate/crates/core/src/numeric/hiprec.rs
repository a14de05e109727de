//! Exact rational arithmetic with bounded-error square roots and real powers.
//!
//! Benchmark answers are computed from the decimal operands exactly where
//! the operation is rational (sum, product, quotient, mean, integer power)
//! and to roughly 60 significant digits otherwise (square root, real power).
//! Rounding to 15 digits is then decided on the exact value, or refused when
//! the error bracket straddles a rounding boundary.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Ratio = BigRational;

/// Fraction bits carried by the fixed-point transcendental routines.
const FIXED_BITS: u64 = 320;
/// Relative error bound claimed for `ln`/`exp` results (2^-200 ≈ 6e-61).
const TRANSCENDENTAL_REL_ERR_BITS: u64 = 200;
/// Fraction bits kept by `sqrt`.
const SQRT_BITS: u64 = 200;

pub fn ratio_from_f64(v: f64) -> Option<Ratio> {
    BigRational::from_float(v)
}

pub fn ratio_to_f64(q: &Ratio) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn ratio_from_int(n: i64) -> Ratio {
    BigRational::from_integer(BigInt::from(n))
}

fn pow10(k: u32) -> BigInt {
    BigInt::from(10u32).pow(k)
}

/// Exact value of a decimal literal such as `-12.5`, `.5`, `3e-20` or `1.5e+15`.
pub fn parse_decimal(s: &str) -> Option<Ratio> {
    let s = s.trim();
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let n = if neg { -n } else { n };
    let scale = exp - frac_part.len() as i32;
    let q = if scale >= 0 {
        BigRational::from_integer(n * pow10(scale as u32))
    } else {
        BigRational::new(n, pow10((-scale) as u32))
    };
    Some(q)
}

/// A decimal `(-1)^negative * mantissa * 10^scale` with at most 17 digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundedDecimal {
    pub negative: bool,
    pub mantissa: u64,
    pub scale: i32,
}

impl RoundedDecimal {
    pub fn is_zero(&self) -> bool {
        self.mantissa == 0
    }

    pub fn to_f64(&self) -> f64 {
        let s = format!(
            "{}{}e{}",
            if self.negative { "-" } else { "" },
            self.mantissa,
            self.scale
        );
        s.parse().expect("decimal literal")
    }

    pub fn to_ratio(&self) -> Ratio {
        let n = BigInt::from(self.mantissa);
        let n = if self.negative { -n } else { n };
        if self.scale >= 0 {
            BigRational::from_integer(n * pow10(self.scale as u32))
        } else {
            BigRational::new(n, pow10((-self.scale) as u32))
        }
    }
}

fn decimal_len(n: &BigInt) -> i32 {
    if n.is_zero() {
        1
    } else {
        n.magnitude().to_str_radix(10).len() as i32
    }
}

/// `floor(log10 |q|)` for non-zero `q`.
pub fn decimal_exponent(q: &Ratio) -> i32 {
    assert!(!q.is_zero(), "decimal_exponent of zero");
    let a = q.abs();
    let e0 = decimal_len(a.numer()) - decimal_len(a.denom());
    if a >= pow10_ratio(e0) {
        e0
    } else {
        e0 - 1
    }
}

fn pow10_ratio(e: i32) -> Ratio {
    if e >= 0 {
        BigRational::from_integer(pow10(e as u32))
    } else {
        BigRational::new(BigInt::one(), pow10((-e) as u32))
    }
}

/// Round `q` to `p` significant decimal digits, half-to-even.
pub fn round_ratio(q: &Ratio, p: u32) -> RoundedDecimal {
    assert!((1..=17).contains(&p), "p must be in 1..=17");
    if q.is_zero() {
        return RoundedDecimal {
            negative: false,
            mantissa: 0,
            scale: 0,
        };
    }
    let negative = q.is_negative();
    let a = q.abs();
    let mut scale = decimal_exponent(&a) - (p as i32 - 1);
    let scaled = a / pow10_ratio(scale);
    let (mut n, rem) = scaled.numer().div_rem(scaled.denom());
    let twice = rem * 2u32;
    let den = scaled.denom();
    if twice > *den || (twice == *den && n.is_odd()) {
        n += 1u32;
    }
    if n == pow10(p) {
        n /= 10u32;
        scale += 1;
    }
    RoundedDecimal {
        negative,
        mantissa: n.to_u64().expect("at most 17 digits"),
        scale,
    }
}

/// A real value known exactly or only within a bracket.
#[derive(Debug, Clone, PartialEq)]
pub enum HiValue {
    Exact(Ratio),
    Bounded { lo: Ratio, hi: Ratio },
}

impl HiValue {
    /// Round to `p` significant digits; `None` if the bracket does not decide
    /// the rounding.
    pub fn round_sig(&self, p: u32) -> Option<RoundedDecimal> {
        match self {
            HiValue::Exact(q) => Some(round_ratio(q, p)),
            HiValue::Bounded { lo, hi } => {
                let a = round_ratio(lo, p);
                let b = round_ratio(hi, p);
                (a == b).then_some(a)
            }
        }
    }

    /// Midpoint (or exact value) as a rational.
    pub fn approx(&self) -> Ratio {
        match self {
            HiValue::Exact(q) => q.clone(),
            HiValue::Bounded { lo, hi } => (lo + hi) / ratio_from_int(2),
        }
    }
}

/// Square root of a non-negative rational.
pub fn sqrt(q: &Ratio) -> Option<HiValue> {
    if q.is_negative() {
        return None;
    }
    if q.is_zero() {
        return Some(HiValue::Exact(Ratio::zero()));
    }
    // sqrt(a/b) = sqrt(a*b)/b
    let a = q.numer();
    let b = q.denom();
    let radicand: BigInt = (a * b) << (2 * SQRT_BITS);
    let s = radicand.sqrt();
    let den: BigInt = b << SQRT_BITS;
    if &s * &s == radicand {
        Some(HiValue::Exact(BigRational::new(s, den)))
    } else {
        Some(HiValue::Bounded {
            lo: BigRational::new(s.clone(), den.clone()),
            hi: BigRational::new(s + 1u32, den),
        })
    }
}

/// `q^k` for an integer exponent; `None` for `0^k` with `k < 0`.
pub fn pow_int(q: &Ratio, k: i32) -> Option<Ratio> {
    if k < 0 && q.is_zero() {
        return None;
    }
    let p = num_traits::pow(q.clone(), k.unsigned_abs() as usize);
    Some(if k < 0 { p.recip() } else { p })
}

/// `base^exponent` for a positive base and an arbitrary rational exponent.
/// Integer exponents are computed exactly.
pub fn pow_real(base: &Ratio, exponent: &Ratio) -> Option<HiValue> {
    if exponent.is_integer() {
        let k = exponent.to_integer().to_i32()?;
        return pow_int(base, k).map(HiValue::Exact);
    }
    if !base.is_positive() {
        return None;
    }
    if base.is_one() {
        return Some(HiValue::Exact(Ratio::one()));
    }
    let ln_b = ln_fixed(base);
    let y = (ln_b * exponent.numer()).div_floor(exponent.denom());
    let (mantissa, exp2) = exp_fixed(&y);
    let v = fixed_to_ratio(&mantissa, exp2);
    let slack = &v / BigRational::from_integer(BigInt::one() << TRANSCENDENTAL_REL_ERR_BITS);
    Some(HiValue::Bounded {
        lo: &v - &slack,
        hi: &v + slack,
    })
}

fn one_fixed() -> BigInt {
    BigInt::one() << FIXED_BITS
}

fn mul_fixed(a: &BigInt, b: &BigInt) -> BigInt {
    (a * b) >> FIXED_BITS
}

/// `atanh(z)` for a fixed-point `0 <= z < 1/2`.
fn atanh_fixed(z: &BigInt) -> BigInt {
    let z2 = mul_fixed(z, z);
    let mut term = z.clone();
    let mut sum = z.clone();
    let mut n: u32 = 1;
    loop {
        term = mul_fixed(&term, &z2);
        if term.is_zero() {
            break;
        }
        sum += &term / BigInt::from(2 * n + 1);
        n += 1;
    }
    sum
}

fn ln2_fixed() -> BigInt {
    // ln 2 = 2 atanh(1/3)
    atanh_fixed(&(one_fixed() / 3u32)) * 2u32
}

/// Natural log of a positive rational in fixed point.
fn ln_fixed(x: &Ratio) -> BigInt {
    let bits = |n: &BigInt| n.bits() as i64;
    let mut k = bits(x.numer()) - bits(x.denom());
    let two = BigInt::from(2);
    let scale = |k: i64| -> Ratio {
        if k >= 0 {
            BigRational::from_integer(two.pow(k as u32))
        } else {
            BigRational::new(BigInt::one(), two.pow((-k) as u32))
        }
    };
    let mut m = x / scale(k);
    while m < Ratio::one() {
        m *= ratio_from_int(2);
        k -= 1;
    }
    while m >= ratio_from_int(2) {
        m /= ratio_from_int(2);
        k += 1;
    }
    // ln m = 2 atanh((m-1)/(m+1)), (m-1)/(m+1) in [0, 1/3)
    let z = (&m - Ratio::one()) / (&m + Ratio::one());
    let zf = (z.numer() << FIXED_BITS).div_floor(z.denom());
    atanh_fixed(&zf) * 2u32 + ln2_fixed() * BigInt::from(k)
}

/// `exp(y)` for fixed-point `y`, returned as `mantissa * 2^exp2` with the
/// mantissa in fixed point.
fn exp_fixed(y: &BigInt) -> (BigInt, i64) {
    const HALVINGS: u32 = 24;
    let ln2 = ln2_fixed();
    let n = (y + (&ln2 >> 1u32)).div_floor(&ln2);
    let r = y - &n * &ln2;
    let r = r >> HALVINGS;
    let one = one_fixed();
    let mut term = one.clone();
    let mut sum = one.clone();
    let mut i: u32 = 1;
    loop {
        term = mul_fixed(&term, &r) / BigInt::from(i);
        if term.is_zero() {
            break;
        }
        sum += &term;
        i += 1;
    }
    for _ in 0..HALVINGS {
        sum = mul_fixed(&sum, &sum);
    }
    (sum, n.to_i64().expect("exponent fits"))
}

fn fixed_to_ratio(mantissa: &BigInt, exp2: i64) -> Ratio {
    let shift = exp2 - FIXED_BITS as i64;
    if shift >= 0 {
        BigRational::from_integer(mantissa << shift as u64)
    } else {
        BigRational::new(mantissa.clone(), BigInt::one() << (-shift) as u64)
    }
}
