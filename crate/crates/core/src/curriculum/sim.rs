use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{PlanEntry, SchedulerState};
use crate::taskgen::Task;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTask {
    pub task: Task,
    pub max_difficulty: u32,
    /// Steps between the learning curves of consecutive difficulty levels.
    #[serde(default = "default_lag")]
    pub lag: f64,
}

fn default_lag() -> f64 {
    100.0
}

/// Synthetic learning curves: `p(δ, t) = 1 / (1 + exp(-rate · (t - lag · δ)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub tasks: Vec<SimTask>,
    pub steps: u64,
    #[serde(default = "default_batch")]
    pub batch_tokens: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_lr")]
    pub lr_max: f64,
    #[serde(default = "default_rate")]
    pub rate: f64,
    /// Write every n-th step to the log.
    #[serde(default = "default_every")]
    pub log_every: u64,
}

fn default_batch() -> u64 {
    4096
}
fn default_lr() -> f64 {
    1e-3
}
fn default_rate() -> f64 {
    0.02
}
fn default_every() -> u64 {
    1
}

impl SimConfig {
    /// Cosine decay from `lr_max` toward zero over the run.
    pub fn lr_at(&self, step: u64) -> f64 {
        let t = step as f64 / self.steps.max(1) as f64;
        self.lr_max * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
    }

    pub fn performance(&self, t: &SimTask, difficulty: u32, step: u64) -> f64 {
        let z = self.rate * (step as f64 - t.lag * difficulty as f64);
        1.0 / (1.0 + (-z).exp())
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() || self.steps == 0 {
            return Err(Error::invalid("simulation needs tasks and at least one step"));
        }
        if self.log_every == 0 {
            return Err(Error::invalid("log_every must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLogLine {
    pub step: u64,
    pub lr: f64,
    pub frontiers: BTreeMap<Task, u32>,
    pub ratios: BTreeMap<Task, f64>,
    pub plan: Vec<PlanEntry>,
}

/// Run the scheduler against the synthetic curves, writing a JSONL plan log.
/// Returns the final state.
pub fn run_simulation<W: Write>(cfg: &SimConfig, out: &mut W) -> Result<SchedulerState> {
    cfg.validate()?;
    let specs: Vec<(Task, u32)> = cfg.tasks.iter().map(|t| (t.task, t.max_difficulty)).collect();
    let mut state = SchedulerState::new(&specs, cfg.steps, cfg.lr_max, cfg.lr_at(cfg.steps / 2))?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    for step in 1..=cfg.steps {
        let lr = cfg.lr_at(step).min(cfg.lr_max * (1.0 - f64::EPSILON));
        state.set_progress(step, lr)?;
        let mut task_perf = BTreeMap::new();
        for t in &cfg.tasks {
            for d in 0..=t.max_difficulty {
                state.set_performance(t.task, d, cfg.performance(t, d, step))?;
            }
            let f = state.task(t.task).expect("scheduled").frontier;
            task_perf.insert(t.task, cfg.performance(t, f, step));
        }
        state.update_task_ratios(&task_perf)?;
        let plan = state.next_batch_plan(&mut rng, cfg.batch_tokens)?;
        if step % cfg.log_every == 0 || step == cfg.steps {
            let line = SimLogLine {
                step,
                lr,
                frontiers: state.tasks.iter().map(|t| (t.task, t.frontier)).collect(),
                ratios: state.tasks.iter().map(|t| (t.task, t.ratio)).collect(),
                plan,
            };
            serde_json::to_writer(&mut *out, &line).map_err(|e| Error::json("plan log", e))?;
            out.write_all(b"\n").map_err(|e| Error::io("plan log", e))?;
        }
    }
    Ok(state)
}
