//! Bit-level and decimal-precision primitives for `f64`.

mod bits;
mod decimal;
pub mod hiprec;

pub use bits::{from_bits, to_bits, FloatBits};
pub use decimal::{
    count_sig, format_canonical, format_decimal, nonzero_digit_count, parse_number, round_sig,
    round_sig_bits, CanonicalDecimal, Radix, ANSWER_DIGITS, MAX_SIG_DIGITS,
};
