//! Small-scale learnability checks: gradient-checked heads, a BitToken
//! identity decoder, noise sweeps and an operator-learning demo.

mod gradcheck;
mod identity;
mod nn;
mod noise;
mod operator;
mod train;

pub use gradcheck::{gradcheck, max_rel_error, TensorError, FD_STEP};
pub use identity::{orthonormal_columns, train_identity_head, IdentityConfig, Projection};
pub use nn::{Dense, Gradients, Loss, Network};
pub use noise::{noise_sweep, NoisePoint};
pub use operator::{operator_learn_demo, Operation, OperatorConfig, NUMBER_LOSS_WEIGHT};
pub use train::{train, TrainConfig, TrainOutcome};

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub task: String,
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<String>,
    pub steps: usize,
    pub final_loss: f64,
    /// `null` for encodings without a bitwise target.
    pub bit_accuracy: Option<f64>,
    pub exact_decode_rate: f64,
    pub seed: u64,
}

/// A uniformly random finite bit pattern.
pub fn random_finite<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let v = f64::from_bits(rng.gen());
        if v.is_finite() {
            return v;
        }
    }
}

/// Product of two bits over Z2.
pub fn gate_and(x: u8, y: u8) -> u8 {
    (x * y) % 2
}

/// Sum of two bits over Z2.
pub fn gate_xor(x: u8, y: u8) -> u8 {
    (x + y) % 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gates_match_boolean_logic() {
        for x in 0..2u8 {
            for y in 0..2u8 {
                assert_eq!(gate_and(x, y) == 1, x == 1 && y == 1);
                assert_eq!(gate_xor(x, y) == 1, (x == 1) != (y == 1));
            }
        }
    }

    #[test]
    fn report_json_shape() {
        let r = ProbeReport {
            task: "identity_decode".into(),
            scheme: "bittoken".into(),
            operation: None,
            steps: 10,
            final_loss: 0.5,
            bit_accuracy: Some(1.0),
            exact_decode_rate: 1.0,
            seed: 3,
        };
        let v = serde_json::to_value(&r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["task", "scheme", "steps", "final_loss", "bit_accuracy", "exact_decode_rate", "seed"]);
    }
}
