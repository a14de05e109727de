use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Significant digits kept in benchmark answers (the metric cap `M`).
pub const ANSWER_DIGITS: u32 = 15;
/// Upper bound on significant decimal digits needed to round-trip an `f64`.
pub const MAX_SIG_DIGITS: u32 = 17;

/// Benchmark magnitudes render positionally inside `[1e-14, 1e15)`.
const POSITIONAL_MIN: f64 = 1e-14;
const POSITIONAL_MAX: f64 = 1e15;

/// Numeric base used for digit/bit precision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Radix {
    #[serde(rename = "2")]
    Binary,
    #[default]
    #[serde(rename = "10")]
    Decimal,
}

impl Radix {
    pub fn from_base(base: u32) -> Result<Self> {
        match base {
            2 => Ok(Radix::Binary),
            10 => Ok(Radix::Decimal),
            other => Err(Error::invalid(format!("base must be 2 or 10, got {other}"))),
        }
    }

    pub fn base(self) -> u32 {
        match self {
            Radix::Binary => 2,
            Radix::Decimal => 10,
        }
    }
}

/// A normalized decimal rendering of a number.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonicalDecimal {
    pub digits: String,
    pub sig_count: u32,
}

impl std::fmt::Display for CanonicalDecimal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.digits)
    }
}

/// Nearest `f64` to `v` rounded to `p` significant decimal digits
/// (round-half-to-even on the exact binary value).
pub fn round_sig(v: f64, p: u32) -> Result<f64> {
    if !(1..=MAX_SIG_DIGITS).contains(&p) {
        return Err(Error::invalid(format!(
            "significant digits must be in 1..=17, got {p}"
        )));
    }
    if !v.is_finite() {
        return Err(Error::invalid("round_sig requires a finite value"));
    }
    if v == 0.0 {
        return Ok(v);
    }
    // std's exponent formatting is exact and rounds half-to-even.
    let s = format!("{:.*e}", (p - 1) as usize, v);
    Ok(s.parse::<f64>().expect("std float formatting parses back"))
}

/// Round the significand of `v` to `bits` significant bits, half-to-even.
pub fn round_sig_bits(v: f64, bits: u32) -> Result<f64> {
    if !(1..=53).contains(&bits) {
        return Err(Error::invalid(format!(
            "significant bits must be in 1..=53, got {bits}"
        )));
    }
    if !v.is_finite() {
        return Err(Error::invalid("round_sig_bits requires a finite value"));
    }
    if v == 0.0 {
        return Ok(v);
    }
    let (mant, exp) = integer_significand(v);
    let len = 64 - mant.leading_zeros();
    if len <= bits {
        return Ok(v);
    }
    let shift = len - bits;
    let mut q = mant >> shift;
    let rem = mant & ((1u64 << shift) - 1);
    let half = 1u64 << (shift - 1);
    if rem > half || (rem == half && q & 1 == 1) {
        q += 1;
    }
    let magnitude = scale_pow2(q as f64, exp + shift as i32);
    Ok(if v.is_sign_negative() {
        -magnitude
    } else {
        magnitude
    })
}

/// `|v| = mant * 2^exp` with `mant` an integer (implicit bit included).
fn integer_significand(v: f64) -> (u64, i32) {
    let raw = v.to_bits();
    let field = ((raw >> 52) & 0x7ff) as i32;
    let frac = raw & ((1u64 << 52) - 1);
    if field == 0 {
        (frac, -1074)
    } else {
        (frac | 1u64 << 52, field - 1075)
    }
}

fn pow2(k: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

fn scale_pow2(x: f64, k: i32) -> f64 {
    if k < -1022 {
        x * pow2(k + 200) * pow2(-200)
    } else if k > 1023 {
        x * pow2(k - 200) * pow2(200)
    } else {
        x * pow2(k)
    }
}

/// Number of significant digits (base 10) or bits (base 2) of `v`.
///
/// Base 10 counts the digits of the shortest round-tripping decimal; base 2
/// counts the bits between the leading and trailing one of the significand.
/// Zero has one significant digit.
pub fn count_sig(v: f64, radix: Radix) -> u32 {
    if v == 0.0 || !v.is_finite() {
        return 1;
    }
    match radix {
        Radix::Decimal => {
            let s = format!("{:e}", v.abs());
            let mantissa = s.split('e').next().unwrap_or_default();
            mantissa.bytes().filter(u8::is_ascii_digit).count() as u32
        }
        Radix::Binary => {
            let (mant, _) = integer_significand(v);
            let stripped = mant >> mant.trailing_zeros();
            64 - stripped.leading_zeros()
        }
    }
}

/// Count of non-zero digits in the mantissa of a rendered number
/// (`"1.2300"` → 3, `"2e+20"` → 1).
pub fn nonzero_digit_count(rendered: &str) -> u32 {
    let mantissa = rendered.split(['e', 'E']).next().unwrap_or_default();
    mantissa.bytes().filter(|b| (b'1'..=b'9').contains(b)).count() as u32
}

/// Shortest round-tripping rendering of `v`: positional inside
/// `[1e-14, 1e15)`, `d.ddde±k` outside it.
pub fn format_decimal(v: f64) -> String {
    if v.is_nan() {
        return "NaN".to_owned();
    }
    if v.is_infinite() {
        return if v > 0.0 { "Infinity" } else { "-Infinity" }.to_owned();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.to_owned();
    }
    let a = v.abs();
    if (POSITIONAL_MIN..POSITIONAL_MAX).contains(&a) {
        format!("{v}")
    } else {
        let s = format!("{v:e}");
        match s.split_once('e') {
            Some((m, e)) if e.starts_with('-') => format!("{m}e{e}"),
            Some((m, e)) => format!("{m}e+{e}"),
            None => s,
        }
    }
}

/// Canonical answer string: `v` rounded to 15 significant digits, rendered
/// with [`format_decimal`].
pub fn format_canonical(v: f64) -> CanonicalDecimal {
    if !v.is_finite() {
        return CanonicalDecimal {
            digits: format_decimal(v),
            sig_count: 0,
        };
    }
    let r = round_sig(v, ANSWER_DIGITS).expect("finite input");
    CanonicalDecimal {
        digits: format_decimal(r),
        sig_count: count_sig(r, Radix::Decimal),
    }
}

/// Parse a number as written by a model or a user. Accepts plain and
/// scientific decimals plus `Infinity`, `-Infinity` and `NaN`.
pub fn parse_number(s: &str) -> Option<f64> {
    let t = s.trim();
    let t = t
        .strip_prefix('"')
        .and_then(|x| x.strip_suffix('"'))
        .unwrap_or(t)
        .trim();
    match t {
        "Infinity" | "+Infinity" => return Some(f64::INFINITY),
        "-Infinity" => return Some(f64::NEG_INFINITY),
        "NaN" => return Some(f64::NAN),
        _ => {}
    }
    let body = t.strip_prefix(['-', '+']).unwrap_or(t);
    let first = body.chars().next()?;
    if !(first.is_ascii_digit() || first == '.') {
        return None;
    }
    t.parse::<f64>().ok()
}
