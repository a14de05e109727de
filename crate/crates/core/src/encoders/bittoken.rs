use serde::{Deserialize, Serialize};

use super::{EmbeddingVector, Scheme};
use crate::numeric::{from_bits, to_bits, FloatBits, Radix};
use crate::{Error, Result};

/// Digits in the base-10 ablation layout: sign, two exponent digits, 17
/// significand digits.
const DECIMAL_BLOCK: usize = 20;
const DECIMAL_EXP_OFFSET: i32 = 50;
const DECIMAL_SIG_DIGITS: usize = 17;

/// How the payload is merged with the learned `[NUM]` token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combine {
    #[default]
    Sum,
    Product,
    Concat,
    ZeroPad,
    Weighted,
    WeightedSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitTokenConfig {
    pub include_reciprocal: bool,
    pub radix: Radix,
    pub combine: Combine,
    pub d_model: usize,
}

impl Default for BitTokenConfig {
    fn default() -> Self {
        Self {
            include_reciprocal: true,
            radix: Radix::Binary,
            combine: Combine::Sum,
            d_model: 768,
        }
    }
}

impl BitTokenConfig {
    pub fn with_d_model(d_model: usize) -> Self {
        Self {
            d_model,
            ..Self::default()
        }
    }

    /// Width of one value block (64 bits, or 20 digits for base 10).
    pub fn block_width(&self) -> usize {
        match self.radix {
            Radix::Binary => FloatBits::WIDTH,
            Radix::Decimal => DECIMAL_BLOCK,
        }
    }

    pub fn payload_width(&self) -> usize {
        self.block_width() * if self.include_reciprocal { 2 } else { 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model < self.payload_width() {
            return Err(Error::invalid(format!(
                "d_model {} is smaller than the payload width {}",
                self.d_model,
                self.payload_width()
            )));
        }
        Ok(())
    }
}

fn binary_block(v: f64, out: &mut Vec<f64>) {
    let raw = to_bits(v).raw();
    out.extend((0..64).map(|i| if raw >> (63 - i) & 1 == 1 { 1.0 } else { -1.0 }));
}

fn digit_level(d: u32) -> f64 {
    2.0 * d as f64 / 9.0 - 1.0
}

fn level_digit(x: f64) -> u32 {
    ((x + 1.0) * 4.5).round().clamp(0.0, 9.0) as u32
}

/// Base-10 ablation block. Non-finite values (the reciprocal of zero) encode
/// as an all-zero block.
fn decimal_block(v: f64, out: &mut Vec<f64>) -> Result<()> {
    if !v.is_finite() {
        out.extend(std::iter::repeat_n(0.0, DECIMAL_BLOCK));
        return Ok(());
    }
    out.push(if v.is_sign_negative() { 1.0 } else { -1.0 });
    let (digits, exp) = if v == 0.0 {
        (vec![0u32; DECIMAL_SIG_DIGITS], 0)
    } else {
        let s = format!("{:.*e}", DECIMAL_SIG_DIGITS - 1, v.abs());
        let (m, e) = s.split_once('e').expect("exponent form");
        let digits = m.bytes().filter(u8::is_ascii_digit).map(|b| (b - b'0') as u32).collect();
        (digits, e.parse::<i32>().expect("exponent"))
    };
    let field = exp + DECIMAL_EXP_OFFSET;
    if !(0..100).contains(&field) {
        return Err(Error::invalid(format!(
            "decimal exponent {exp} outside the base-10 layout range [-50, 49]"
        )));
    }
    out.push(digit_level(field as u32 / 10));
    out.push(digit_level(field as u32 % 10));
    out.extend(digits.into_iter().map(digit_level));
    Ok(())
}

/// Unpadded payload: bits of `v` (and `1/v`) mapped to ±1.
pub fn bittoken_payload(v: f64, cfg: &BitTokenConfig) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(cfg.payload_width());
    let blocks: &[f64] = if cfg.include_reciprocal {
        &[v, 1.0 / v]
    } else {
        &[v]
    };
    for &x in blocks {
        match cfg.radix {
            Radix::Binary => binary_block(x, &mut out),
            Radix::Decimal => decimal_block(x, &mut out)?,
        }
    }
    Ok(out)
}

/// Payload zero-padded to `d_model`, before any `[NUM]` token is combined.
pub fn bittoken_encode(v: f64, cfg: &BitTokenConfig) -> Result<EmbeddingVector> {
    cfg.validate()?;
    let mut values = bittoken_payload(v, cfg)?;
    values.resize(cfg.d_model, 0.0);
    Ok(EmbeddingVector {
        values,
        scheme: Scheme::BitToken,
    })
}

/// Decode number-head probabilities: each entry `>= 0.5` is a one bit.
/// Only the first block carries the value; reciprocal bits are ignored.
pub fn bittoken_decode(probs: &[f64], cfg: &BitTokenConfig) -> Result<f64> {
    if probs.len() != cfg.payload_width() {
        return Err(Error::invalid(format!(
            "expected {} probabilities, got {}",
            cfg.payload_width(),
            probs.len()
        )));
    }
    if probs.iter().any(|p| p.is_nan()) {
        return Err(Error::invalid("probabilities must not be NaN"));
    }
    match cfg.radix {
        Radix::Binary => Ok(from_bits(FloatBits::from_bit_iter(
            probs[..64].iter().map(|&p| p >= 0.5),
        ))),
        Radix::Decimal => {
            let levels: Vec<f64> = probs.iter().map(|p| 2.0 * p - 1.0).collect();
            decode_decimal_block(&levels[..DECIMAL_BLOCK])
        }
    }
}

/// Decode a payload in the ±1 domain (an encoded row, possibly noisy).
pub fn decode_payload(values: &[f64], cfg: &BitTokenConfig) -> Result<f64> {
    if values.len() < cfg.payload_width() {
        return Err(Error::invalid(format!(
            "payload has {} entries, need at least {}",
            values.len(),
            cfg.payload_width()
        )));
    }
    match cfg.radix {
        Radix::Binary => Ok(from_bits(FloatBits::from_bit_iter(
            values[..64].iter().map(|&x| x >= 0.0),
        ))),
        Radix::Decimal => decode_decimal_block(&values[..DECIMAL_BLOCK]),
    }
}

fn decode_decimal_block(levels: &[f64]) -> Result<f64> {
    let negative = levels[0] >= 0.0;
    let field = level_digit(levels[1]) * 10 + level_digit(levels[2]);
    let exp = field as i32 - DECIMAL_EXP_OFFSET;
    let digits: String = levels[3..DECIMAL_BLOCK]
        .iter()
        .map(|&x| char::from(b'0' + level_digit(x) as u8))
        .collect();
    let s = format!(
        "{}{}.{}e{}",
        if negative { "-" } else { "" },
        &digits[..1],
        &digits[1..],
        exp
    );
    s.parse::<f64>()
        .map_err(|e| Error::Format(format!("cannot assemble {s:?}: {e}")))
}

/// Caller-owned pieces for the combination strategies: the learned `[NUM]`
/// embedding and the projection used by the weighted variants
/// (`d_model` rows × payload-width columns).
#[derive(Debug, Clone, Default)]
pub struct NumToken {
    pub token: Option<Vec<f64>>,
    pub weight: Option<Vec<Vec<f64>>>,
}

/// Merge a padded payload with the `[NUM]` token.
///
/// * `Sum` adds the token; `ZeroPad` drops it.
/// * `Product` multiplies payload dimensions elementwise by the token and
///   passes the token through elsewhere.
/// * `Concat` zeroes the token in the payload dimensions before adding.
/// * `Weighted` projects the unpadded payload; `WeightedSum` also adds the token.
///
/// A missing token acts as zeros (ones for `Product`).
pub fn combine(
    padded: &EmbeddingVector,
    cfg: &BitTokenConfig,
    num: &NumToken,
) -> Result<Vec<f64>> {
    let d = padded.values.len();
    let width = cfg.payload_width().min(d);
    if let Some(t) = &num.token {
        if t.len() != d {
            return Err(Error::invalid(format!(
                "[NUM] token has {} dims, embedding has {d}",
                t.len()
            )));
        }
    }
    let token = |i: usize| num.token.as_ref().map_or(0.0, |t| t[i]);
    let p = &padded.values;
    let out = match cfg.combine {
        Combine::ZeroPad => p.clone(),
        Combine::Sum => (0..d).map(|i| p[i] + token(i)).collect(),
        Combine::Product => (0..d)
            .map(|i| {
                let t = num.token.as_ref().map_or(1.0, |t| t[i]);
                if i < width {
                    p[i] * t
                } else {
                    t
                }
            })
            .collect(),
        Combine::Concat => (0..d)
            .map(|i| if i < width { p[i] } else { token(i) })
            .collect(),
        Combine::Weighted | Combine::WeightedSum => {
            let w = num.weight.as_ref().ok_or_else(|| {
                Error::invalid("weighted combination needs a projection matrix")
            })?;
            if w.len() != d || w.iter().any(|row| row.len() != width) {
                return Err(Error::invalid(format!(
                    "projection must be {d} x {width}"
                )));
            }
            let add_token = cfg.combine == Combine::WeightedSum;
            w.iter()
                .enumerate()
                .map(|(i, row)| {
                    let proj: f64 = row.iter().zip(&p[..width]).map(|(a, b)| a * b).sum();
                    proj + if add_token { token(i) } else { 0.0 }
                })
                .collect()
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn no_recip(d_model: usize) -> BitTokenConfig {
        BitTokenConfig {
            include_reciprocal: false,
            d_model,
            ..BitTokenConfig::default()
        }
    }

    #[test]
    fn one_without_reciprocal() {
        let e = bittoken_encode(1.0, &no_recip(64)).unwrap();
        assert_eq!(e.values[0], -1.0);
        let exp: Vec<f64> = e.values[1..12].to_vec();
        let mut expect = vec![-1.0];
        expect.extend(std::iter::repeat_n(1.0, 10));
        assert_eq!(exp, expect);
        assert!(e.values[12..].iter().all(|&x| x == -1.0));
    }

    #[test]
    fn reciprocal_block_of_one_repeats() {
        let e = bittoken_encode(1.0, &BitTokenConfig::with_d_model(128)).unwrap();
        assert_eq!(e.values[..64], e.values[64..128]);
    }

    #[test]
    fn reciprocal_block_uses_hardware_division() {
        let e = bittoken_encode(0.1, &BitTokenConfig::with_d_model(256)).unwrap();
        let expect = bittoken_payload(1.0 / 0.1, &no_recip(64)).unwrap();
        assert_eq!(e.values[64..128], expect[..]);
        assert!(e.values[128..].iter().all(|&x| x == 0.0));
        // 1/0.1 rounds to exactly 10 in binary64
        assert_eq!(decode_payload(&e.values[64..], &no_recip(64)).unwrap(), 10.0);
    }

    #[test]
    fn reciprocal_specials_follow_ieee() {
        let cfg = BitTokenConfig::with_d_model(128);
        let e = bittoken_encode(0.0, &cfg).unwrap();
        assert_eq!(decode_payload(&e.values[64..], &no_recip(64)).unwrap(), f64::INFINITY);
        let e = bittoken_encode(f64::NEG_INFINITY, &cfg).unwrap();
        let r = decode_payload(&e.values[64..], &no_recip(64)).unwrap();
        assert_eq!(r.to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn d_model_too_small() {
        assert!(bittoken_encode(1.0, &BitTokenConfig::with_d_model(100)).is_err());
        assert!(bittoken_encode(1.0, &no_recip(63)).is_err());
    }

    #[test]
    fn decode_examples() {
        let cfg = no_recip(64);
        let bits: Vec<f64> = bittoken_payload(3.25, &cfg)
            .unwrap()
            .iter()
            .map(|x| (x + 1.0) / 2.0)
            .collect();
        assert_eq!(bittoken_decode(&bits, &cfg).unwrap(), 3.25);
        let noisy: Vec<f64> = bits
            .iter()
            .enumerate()
            .map(|(i, b)| if *b == 1.0 { 0.51 + (i % 3) as f64 * 0.1 } else { 0.49 - (i % 2) as f64 * 0.2 })
            .collect();
        assert_eq!(bittoken_decode(&noisy, &cfg).unwrap(), 3.25);
        let sevens = vec![0.7; 64];
        let v = bittoken_decode(&sevens, &cfg).unwrap();
        assert!(v.is_nan());
        assert_eq!(v.to_bits(), u64::MAX);
        assert!(bittoken_decode(&[0.5; 10], &cfg).is_err());
    }

    #[test]
    fn payload_rms_is_one() {
        let cfg = BitTokenConfig::with_d_model(768);
        for v in [0.0, -3.5, 1e300, f64::NAN, 5e-324] {
            let e = bittoken_encode(v, &cfg).unwrap();
            assert_eq!(e.rms(128), 1.0);
            assert!(e.values[128..].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn decimal_ablation_round_trip() {
        let cfg = BitTokenConfig {
            radix: Radix::Decimal,
            d_model: 64,
            ..BitTokenConfig::default()
        };
        assert_eq!(cfg.payload_width(), 40);
        for v in [1.0, -123.456, 1e-14, 9.99999999999999e14, 0.1, 0.0] {
            let e = bittoken_encode(v, &cfg).unwrap();
            assert!(e.values[..40].iter().all(|x| (-1.0..=1.0).contains(x)));
            assert_eq!(decode_payload(&e.values, &cfg).unwrap(), v, "{v}");
        }
        assert!(bittoken_encode(1e60, &cfg).is_err());
    }

    #[test]
    fn combination_strategies() {
        let cfg = BitTokenConfig {
            include_reciprocal: false,
            d_model: 66,
            ..BitTokenConfig::default()
        };
        let e = bittoken_encode(1.0, &cfg).unwrap();
        let token: Vec<f64> = (0..66).map(|i| i as f64 * 0.01).collect();
        let num = NumToken {
            token: Some(token.clone()),
            weight: None,
        };
        let with = |c: Combine| {
            combine(&e, &BitTokenConfig { combine: c, ..cfg }, &num).unwrap()
        };
        let sum = with(Combine::Sum);
        assert_eq!(sum[0], -1.0);
        assert_eq!(sum[65], 0.65);
        assert_eq!(with(Combine::ZeroPad), e.values);
        let concat = with(Combine::Concat);
        assert_eq!(concat[..64], e.values[..64]);
        assert_eq!(concat[64..], token[64..]);
        let prod = with(Combine::Product);
        assert_eq!(prod[1], -0.01);
        assert_eq!(prod[65], 0.65);
        assert!(combine(&e, &BitTokenConfig { combine: Combine::Weighted, ..cfg }, &num).is_err());
        let eye: Vec<Vec<f64>> = (0..66)
            .map(|i| (0..64).map(|j| if i == j { 2.0 } else { 0.0 }).collect())
            .collect();
        let num_w = NumToken {
            token: Some(token.clone()),
            weight: Some(eye),
        };
        let w = combine(&e, &BitTokenConfig { combine: Combine::WeightedSum, ..cfg }, &num_w).unwrap();
        assert_eq!(w[0], -2.0);
        assert_eq!(w[65], 0.65);
    }

    fn d8_case() -> impl Strategy<Value = (f64, Vec<f64>)> {
        (
            any::<u64>().prop_map(f64::from_bits).prop_filter("finite", |v| v.is_finite()),
            proptest::collection::vec(0.0f64..0.499_999, 128),
        )
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(raw in any::<u64>()) {
            let v = f64::from_bits(raw);
            let cfg = BitTokenConfig::with_d_model(128);
            let e = bittoken_encode(v, &cfg).unwrap();
            let d = decode_payload(&e.values, &cfg).unwrap();
            prop_assert_eq!(d.to_bits(), raw);
        }

        #[test]
        fn threshold_margin_is_robust((v, margin) in d8_case()) {
            let cfg = BitTokenConfig::with_d_model(128);
            let e = bittoken_encode(v, &cfg).unwrap();
            let probs: Vec<f64> = e.values.iter().zip(&margin)
                .map(|(x, m)| if *x > 0.0 { 1.0 - m } else { *m })
                .collect();
            prop_assert_eq!(bittoken_decode(&probs, &cfg).unwrap().to_bits(), v.to_bits());
        }
    }
}
