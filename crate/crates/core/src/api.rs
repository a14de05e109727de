//! Batch entry points shared by the command line and foreign-language
//! bindings. Each call here produces exactly what the matching CLI
//! subcommand writes.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::curriculum::{PlanEntry, SchedulerState};
use crate::encoders::{
    bittoken_encode, decode_payload, fone_decode, fone_encode, xval_decode, xval_encode,
    BitTokenConfig, EmbeddingMatrix, FoneConfig, Scheme,
};
use crate::metrics::ScoreReport;
use crate::numeric::Radix;
use crate::taskgen::{dataset_to_jsonl, generate, DatasetHeader, SamplerConfig, Task};
use crate::{Error, Result};

/// Encoding scheme plus the per-scheme settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub scheme: Scheme,
    pub d_model: usize,
    #[serde(default = "default_true")]
    pub include_reciprocal: bool,
    #[serde(default = "default_radix")]
    pub radix: Radix,
    #[serde(default)]
    pub fone: FoneConfig,
}

fn default_true() -> bool {
    true
}

fn default_radix() -> Radix {
    Radix::Binary
}

impl EncoderSpec {
    pub fn new(scheme: Scheme, d_model: usize) -> Self {
        Self {
            scheme,
            d_model,
            include_reciprocal: true,
            radix: Radix::Binary,
            fone: FoneConfig::default(),
        }
    }

    pub fn bittoken(&self) -> BitTokenConfig {
        BitTokenConfig {
            include_reciprocal: self.include_reciprocal,
            radix: self.radix,
            d_model: self.d_model,
            ..BitTokenConfig::default()
        }
    }

    fn payload_width(&self) -> usize {
        match self.scheme {
            Scheme::BitToken => self.bittoken().payload_width(),
            Scheme::Fone => self.fone.payload_width(),
            Scheme::Xval => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.scheme {
            Scheme::BitToken => self.bittoken().validate()?,
            Scheme::Fone => self.fone.validate()?,
            Scheme::Xval => {}
        }
        if self.payload_width() > self.d_model {
            return Err(Error::invalid(format!(
                "{} payload needs {} dims but d_model is {}",
                self.scheme,
                self.payload_width(),
                self.d_model
            )));
        }
        Ok(())
    }
}

/// One zero-padded row per value. xVal rows carry the scalar in the first
/// dimension.
pub fn encode_batch(values: &[f64], spec: &EncoderSpec) -> Result<EmbeddingMatrix> {
    spec.validate()?;
    let bits = spec.bittoken();
    let mut data = Vec::with_capacity(values.len() * spec.d_model);
    for (i, &v) in values.iter().enumerate() {
        let row = match spec.scheme {
            Scheme::BitToken => bittoken_encode(v, &bits)?.values,
            Scheme::Fone => fone_encode(v, &spec.fone)
                .map_err(|e| at_value(i, v, e))?
                .padded(spec.d_model)?
                .values,
            Scheme::Xval => {
                let mut r = vec![0.0; spec.d_model];
                r[0] = xval_encode(v).map_err(|e| at_value(i, v, e))?;
                r
            }
        };
        data.extend(row.into_iter().map(|x| x as f32));
    }
    EmbeddingMatrix::new(values.len(), spec.d_model, data)
}

fn at_value(i: usize, v: f64, e: Error) -> Error {
    match e {
        Error::InvalidArgument(m) => Error::invalid(format!("value {i} ({v}): {m}")),
        other => other,
    }
}

/// Inverse of [`encode_batch`] on the stored rows.
pub fn decode_batch(m: &EmbeddingMatrix, spec: &EncoderSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if m.dims != spec.d_model {
        return Err(Error::Schema(format!(
            "matrix has {} dims, expected d_model {}",
            m.dims, spec.d_model
        )));
    }
    let bits = spec.bittoken();
    let width = spec.payload_width();
    (0..m.rows)
        .map(|i| {
            let row: Vec<f64> = m.row(i)[..width].iter().map(|&x| x as f64).collect();
            match spec.scheme {
                Scheme::BitToken => decode_payload(&row, &bits),
                Scheme::Fone => fone_decode(&row, &spec.fone),
                Scheme::Xval => xval_decode(row[0]),
            }
        })
        .collect()
}

/// Dataset JSONL bytes, header line first.
pub fn generate_dataset(seed: u64, task: Task, n: usize, shards: usize, base: Radix) -> Result<Vec<u8>> {
    let cfg = SamplerConfig {
        precision_base: base,
        ..SamplerConfig::new(seed, task, n)
    };
    let problems = generate(&cfg, shards)?;
    Ok(dataset_to_jsonl(&DatasetHeader::for_config(&cfg), &problems))
}

pub fn score_file(pred: &Path, reference: &Path) -> Result<ScoreReport> {
    crate::metrics::score_file(pred, reference)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub task: Task,
    pub difficulty: u32,
    pub performance: f64,
}

/// Everything observed since the previous scheduler step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInput {
    pub step: u64,
    pub lr: f64,
    #[serde(default)]
    pub measurements: Vec<Measurement>,
    /// Aggregated performance per task for the ratio update.
    pub task_performance: BTreeMap<Task, f64>,
    pub batch_tokens: u64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutput {
    pub advanced: Vec<Task>,
    pub ratios: BTreeMap<Task, f64>,
    pub plan: Vec<PlanEntry>,
}

/// Record progress and measurements, update task ratios, advance frontiers
/// and plan the next batch. The plan depends only on the state, the input
/// and `(seed, step)`.
pub fn scheduler_step(state: &mut SchedulerState, input: &StepInput) -> Result<StepOutput> {
    state.set_progress(input.step, input.lr)?;
    for m in &input.measurements {
        state.set_performance(m.task, m.difficulty, m.performance)?;
    }
    state.update_task_ratios(&input.task_performance)?;
    let before: Vec<u32> = state.tasks.iter().map(|t| t.frontier).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(input.seed);
    rng.set_stream(input.step);
    let plan = state.next_batch_plan(&mut rng, input.batch_tokens)?;
    let advanced = state
        .tasks
        .iter()
        .zip(before)
        .filter(|(t, f)| t.frontier > *f)
        .map(|(t, _)| t.task)
        .collect();
    Ok(StepOutput {
        advanced,
        ratios: state.tasks.iter().map(|t| (t.task, t.ratio)).collect(),
        plan,
    })
}
