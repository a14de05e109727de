//! Exact answers computed from operands as they are written in the prompt.

use num_traits::Zero;

use super::sample::in_range;
use crate::metrics::smape;
use crate::numeric::format_decimal;
use crate::numeric::hiprec::{self, parse_decimal, ratio_from_int, HiValue, Ratio};

/// Samples whose plain `f64` evaluation drifts further than this (in sMAPE)
/// from the exact answer are rejected as vanishing-information cases.
pub const VANISHING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl Op {
    pub fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
            Op::Div => '/',
            Op::Pow => '^',
        }
    }

    pub fn from_symbol(c: &str) -> Option<Self> {
        Some(match c {
            "+" => Op::Add,
            "-" => Op::Sub,
            "*" => Op::Mul,
            "/" => Op::Div,
            "^" => Op::Pow,
            _ => return None,
        })
    }

    pub fn apply_f64(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => a / b,
            Op::Pow => a.powf(b),
        }
    }
}

/// Exact value of the decimal literal that renders `v`.
pub fn written(v: f64) -> Ratio {
    parse_decimal(&format_decimal(v)).expect("finite operand renders as a decimal literal")
}

pub fn binary(a: f64, op: Op, b: f64) -> Option<HiValue> {
    let (x, y) = (written(a), written(b));
    match op {
        Op::Add => Some(HiValue::Exact(x + y)),
        Op::Sub => Some(HiValue::Exact(x - y)),
        Op::Mul => Some(HiValue::Exact(x * y)),
        Op::Div => (!y.is_zero()).then(|| HiValue::Exact(x / y)),
        Op::Pow => hiprec::pow_real(&x, &y),
    }
}

pub fn mean(values: &[f64]) -> Ratio {
    let sum: Ratio = values.iter().map(|&v| written(v)).sum();
    sum / ratio_from_int(values.len() as i64)
}

/// Population standard deviation.
pub fn std(values: &[f64]) -> Option<HiValue> {
    let m = mean(values);
    let ss: Ratio = values
        .iter()
        .map(|&v| {
            let d = written(v) - &m;
            &d * &d
        })
        .sum();
    hiprec::sqrt(&(ss / ratio_from_int(values.len() as i64)))
}

pub fn mean_f64(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn std_f64(values: &[f64]) -> f64 {
    let m = mean_f64(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Round the exact value to 15 digits and apply the range and
/// vanishing-information checks. `None` means the sample must be redrawn.
pub fn accept(value: Option<HiValue>, f64_route: f64) -> Option<f64> {
    let rounded = value?.round_sig(crate::numeric::ANSWER_DIGITS)?;
    let answer = rounded.to_f64();
    if !in_range(answer) {
        return None;
    }
    if !f64_route.is_finite() || smape(f64_route, answer) > VANISHING_TOLERANCE {
        return None;
    }
    Some(answer)
}
