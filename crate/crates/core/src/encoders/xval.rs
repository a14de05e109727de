use crate::{Error, Result};

/// Largest magnitude of the rescaled scalar.
pub const XVAL_RANGE: f64 = 5.0;
const LOG_FLOOR: f64 = -14.0;
const LOG_SPAN: f64 = 29.0;

/// Sign-symmetric log map of `|v| ∈ [1e-14, 1e15]` onto `[0, 5]`.
pub fn xval_encode(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::invalid("xVal input must be finite"));
    }
    if v == 0.0 {
        return Ok(0.0);
    }
    let m = (XVAL_RANGE * (v.abs().log10() - LOG_FLOOR) / LOG_SPAN).clamp(0.0, XVAL_RANGE);
    Ok(m.copysign(v))
}

pub fn xval_decode(s: f64) -> Result<f64> {
    if !s.is_finite() || s.abs() > XVAL_RANGE {
        return Err(Error::invalid(format!("xVal scalar {s} outside [-5, 5]")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let mag = 10f64.powf(s.abs() * LOG_SPAN / XVAL_RANGE + LOG_FLOOR);
    Ok(mag.copysign(s))
}

/// Round the scalar through 32-bit storage, as a model would hold it.
pub fn xval_quantize_f32(s: f64) -> f64 {
    s as f32 as f64
}
