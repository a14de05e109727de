//! Difficulty heuristics, the curriculum frontier scheduler and multi-task
//! sampling-ratio control.

mod difficulty;
mod scheduler;
mod sim;

pub use difficulty::{difficulty_of, nonzero_digits};
pub use scheduler::{
    apportion, preview_ratios, preview_ratios_with, update_ratios, PlanEntry, SchedulerState,
    TaskState, DIFFICULTY_LAMBDA, INITIAL_FRONTIER_FRACTION, MOMENTUM, PREVIEW_BUDGET,
    PREVIEW_DECAY, RATIO_LAMBDA, ZETA0,
};
pub use sim::{run_simulation, SimConfig, SimLogLine, SimTask};
