//! Single-token number encodings and the helpers around them.

mod bittoken;
mod digits;
mod fone;
mod head;
mod ntke;
mod xval;

pub use bittoken::{
    bittoken_decode, bittoken_encode, bittoken_payload, combine, decode_payload, BitTokenConfig,
    Combine, NumToken,
};
pub use digits::{digit_token_count, DigitScheme};
pub use fone::{
    fone_decode, fone_encode, fone_phases, homomorphism_residual, FoneConfig,
};
pub use head::{bce_loss_grad, bce_with_logits, sigmoid, NumberHeadParams, PROB_CLAMP};
pub use ntke::{read_ntke, write_ntke, EmbeddingMatrix, NTKE_MAGIC, NTKE_VERSION};
pub use xval::{xval_decode, xval_encode, xval_quantize_f32, XVAL_RANGE};

use serde::{Deserialize, Serialize};

/// Which encoding produced an [`EmbeddingVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[serde(rename = "bittoken")]
    BitToken,
    Fone,
    Xval,
}

impl std::str::FromStr for Scheme {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "bittoken" => Ok(Scheme::BitToken),
            "fone" => Ok(Scheme::Fone),
            "xval" => Ok(Scheme::Xval),
            other => Err(crate::Error::invalid(format!(
                "unknown scheme {other:?} (expected bittoken, fone or xval)"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::BitToken => "bittoken",
            Scheme::Fone => "fone",
            Scheme::Xval => "xval",
        })
    }
}

/// A fixed-width real vector representing one number.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub scheme: Scheme,
}

impl EmbeddingVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Zero-pad to `d_model` entries.
    pub fn padded(mut self, d_model: usize) -> crate::Result<Self> {
        if d_model < self.values.len() {
            return Err(crate::Error::invalid(format!(
                "d_model {d_model} is smaller than the payload width {}",
                self.values.len()
            )));
        }
        self.values.resize(d_model, 0.0);
        Ok(self)
    }

    /// Root mean square over the first `width` entries.
    pub fn rms(&self, width: usize) -> f64 {
        let w = width.min(self.values.len());
        if w == 0 {
            return 0.0;
        }
        (self.values[..w].iter().map(|x| x * x).sum::<f64>() / w as f64).sqrt()
    }
}
