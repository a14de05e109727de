#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod api;
pub mod cli;
pub mod curriculum;
pub mod encoders;
mod error;
pub mod metrics;
pub mod numeric;
pub mod probe;
pub mod taskgen;
pub mod textparse;
pub use error::{Error, Result};
