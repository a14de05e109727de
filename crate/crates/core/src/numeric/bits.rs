use crate::{Error, Result};

const SIGN_MASK: u64 = 1 << 63;
const EXP_MASK: u64 = 0x7ff << 52;
const FRAC_MASK: u64 = (1 << 52) - 1;

/// An `f64` split into its IEEE 754 fields.
///
/// The bit order used throughout the crate is most-significant first: the
/// sign, then the eleven exponent bits, then significand bits `b51..b0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FloatBits {
    sign: bool,
    exponent: u16,
    significand: u64,
}

impl FloatBits {
    pub const WIDTH: usize = 64;
    pub const EXPONENT_MAX: u16 = 2047;

    pub fn from_parts(sign: bool, exponent: u16, significand: u64) -> Result<Self> {
        if exponent > Self::EXPONENT_MAX {
            return Err(Error::invalid(format!(
                "exponent field {exponent} exceeds 11 bits"
            )));
        }
        if significand > FRAC_MASK {
            return Err(Error::invalid("significand exceeds 52 bits"));
        }
        Ok(Self {
            sign,
            exponent,
            significand,
        })
    }

    pub fn from_raw(raw: u64) -> Self {
        Self {
            sign: raw & SIGN_MASK != 0,
            exponent: ((raw & EXP_MASK) >> 52) as u16,
            significand: raw & FRAC_MASK,
        }
    }

    pub fn raw(self) -> u64 {
        ((self.sign as u64) << 63) | ((self.exponent as u64) << 52) | self.significand
    }

    pub fn sign(self) -> bool {
        self.sign
    }

    pub fn exponent_field(self) -> u16 {
        self.exponent
    }

    pub fn significand(self) -> u64 {
        self.significand
    }

    /// `true` for ±∞ and every NaN.
    pub fn is_special(self) -> bool {
        self.exponent == Self::EXPONENT_MAX
    }

    /// Bit `i` in MSB-first order (0 = sign, 1..=11 exponent, 12..=63 significand).
    pub fn bit(self, i: usize) -> bool {
        assert!(i < Self::WIDTH, "bit index {i} out of range");
        self.raw() >> (63 - i) & 1 == 1
    }

    /// All 64 bits, MSB first.
    pub fn bit_array(self) -> [bool; 64] {
        let raw = self.raw();
        std::array::from_fn(|i| raw >> (63 - i) & 1 == 1)
    }

    /// Inverse of [`FloatBits::bit_array`].
    pub fn from_bit_iter(bits: impl IntoIterator<Item = bool>) -> Self {
        let raw = bits
            .into_iter()
            .take(Self::WIDTH)
            .fold(0u64, |acc, b| (acc << 1) | b as u64);
        Self::from_raw(raw)
    }
}

pub fn to_bits(v: f64) -> FloatBits {
    FloatBits::from_raw(v.to_bits())
}

pub fn from_bits(bits: FloatBits) -> f64 {
    f64::from_bits(bits.raw())
}
