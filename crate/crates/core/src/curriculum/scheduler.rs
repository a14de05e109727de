use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::taskgen::Task;
use crate::{Error, Result};

pub const ZETA0: f64 = 0.9;
pub const PREVIEW_BUDGET: f64 = 0.2;
pub const PREVIEW_DECAY: f64 = 0.8;
pub const MOMENTUM: f64 = 0.5;
pub const RATIO_LAMBDA: f64 = -1.0;
/// Exponent used for the within-task difficulty weights.
pub const DIFFICULTY_LAMBDA: f64 = 0.0;
/// Initial frontier as a fraction of the task's maximum difficulty.
pub const INITIAL_FRONTIER_FRACTION: f64 = 0.1;

/// Share of a task's budget for each difficulty above the frontier.
pub fn preview_ratios_with(frontier: u32, max_difficulty: u32, budget: f64, decay: f64) -> BTreeMap<u32, f64> {
    if frontier >= max_difficulty {
        return BTreeMap::new();
    }
    let levels = frontier + 1..=max_difficulty;
    let norm: f64 = levels.clone().map(|d| decay.powi((d - frontier) as i32)).sum();
    levels
        .map(|d| (d, budget * decay.powi((d - frontier) as i32) / norm))
        .collect()
}

pub fn preview_ratios(frontier: u32, max_difficulty: u32) -> BTreeMap<u32, f64> {
    preview_ratios_with(frontier, max_difficulty, PREVIEW_BUDGET, PREVIEW_DECAY)
}

/// `α·r_old + (1-α)·need`, where `need ∝ (1-p)^(1-λ)`. When every task is
/// perfect the need term is uniform.
pub fn update_ratios(perfs: &[f64], old: &[f64], alpha: f64, lambda: f64) -> Result<Vec<f64>> {
    if perfs.len() != old.len() || perfs.is_empty() {
        return Err(Error::invalid(format!(
            "{} performances for {} ratios",
            perfs.len(),
            old.len()
        )));
    }
    if perfs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::invalid("performances must lie in [0, 1]"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid("momentum must lie in [0, 1]"));
    }
    let need = normalized_need(perfs, lambda);
    Ok(old
        .iter()
        .zip(&need)
        .map(|(r, n)| alpha * r + (1.0 - alpha) * n)
        .collect())
}

fn normalized_need(perfs: &[f64], lambda: f64) -> Vec<f64> {
    let w: Vec<f64> = perfs.iter().map(|p| (1.0 - p).powf(1.0 - lambda)).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / perfs.len() as f64; perfs.len()]
    }
}

/// Integer counts summing to `total`, proportional to `weights`, by largest
/// remainder. Equal remainders are ordered by a shuffle from `rng`.
pub fn apportion<R: Rng + ?Sized>(rng: &mut R, weights: &[f64], total: u64) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa)
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        counts[i] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskState {
    pub task: Task,
    pub frontier: u32,
    pub max_difficulty: u32,
    /// Performance per difficulty `0..=max_difficulty`.
    pub performance: Vec<f64>,
    pub ratio: f64,
}

/// Curriculum and multi-task sampling state. Serialized as the checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerState {
    pub tasks: Vec<TaskState>,
    pub step: u64,
    pub lr: f64,
    pub lr_max: f64,
    pub zeta0: f64,
    pub preview_budget: f64,
    pub preview_decay: f64,
    pub alpha: f64,
    pub lambda: f64,
    /// Step threshold `S`.
    pub step_threshold: f64,
    /// Learning-rate threshold `L`.
    pub lr_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub task: Task,
    pub difficulty: u32,
    pub count: u64,
}

impl SchedulerState {
    /// Uniform ratios, frontiers at `floor(0.1 · δ_max)` and thresholds at the
    /// midpoint of training (`lr_half` is the learning rate at that point).
    /// Progress starts at step 1 with `lr = lr_half` until
    /// [`Self::set_progress`] is called.
    pub fn new(tasks: &[(Task, u32)], total_steps: u64, lr_max: f64, lr_half: f64) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::invalid("scheduler needs at least one task"));
        }
        if !(lr_max > 0.0) || !(lr_half < lr_max) {
            return Err(Error::invalid("need 0 < lr_max and lr_half < lr_max"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (t, _) in tasks {
            if !seen.insert(*t) {
                return Err(Error::invalid(format!("task {t} listed twice")));
            }
        }
        let r = 1.0 / tasks.len() as f64;
        Ok(Self {
            tasks: tasks
                .iter()
                .map(|&(task, max_difficulty)| TaskState {
                    task,
                    frontier: (INITIAL_FRONTIER_FRACTION * max_difficulty as f64).floor() as u32,
                    max_difficulty,
                    performance: vec![0.0; max_difficulty as usize + 1],
                    ratio: r,
                })
                .collect(),
            step: 1,
            lr: lr_half,
            lr_max,
            zeta0: ZETA0,
            preview_budget: PREVIEW_BUDGET,
            preview_decay: PREVIEW_DECAY,
            alpha: MOMENTUM,
            lambda: RATIO_LAMBDA,
            step_threshold: (total_steps as f64 / 2.0).max(1.0),
            lr_threshold: lr_max - lr_half,
        })
    }

    fn task_mut(&mut self, task: Task) -> Result<&mut TaskState> {
        self.tasks
            .iter_mut()
            .find(|t| t.task == task)
            .ok_or_else(|| Error::invalid(format!("task {task} is not scheduled")))
    }

    pub fn task(&self, task: Task) -> Option<&TaskState> {
        self.tasks.iter().find(|t| t.task == task)
    }

    pub fn set_progress(&mut self, step: u64, lr: f64) -> Result<()> {
        if step == 0 {
            return Err(Error::invalid("steps count from 1"));
        }
        if !(lr < self.lr_max) {
            return Err(Error::invalid("learning rate must stay below lr_max"));
        }
        self.step = step;
        self.lr = lr;
        Ok(())
    }

    pub fn set_performance(&mut self, task: Task, difficulty: u32, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid("performance must lie in [0, 1]"));
        }
        let t = self.task_mut(task)?;
        let slot = t.performance.get_mut(difficulty as usize).ok_or_else(|| {
            Error::invalid(format!("difficulty {difficulty} exceeds the maximum for {task}"))
        })?;
        *slot = p;
        Ok(())
    }

    /// `min(1, min(S/step, L/(lr_max - lr))) · ζ0 · δ/δ_max`.
    pub fn advancement_threshold(&self, difficulty: u32, max_difficulty: u32) -> Result<f64> {
        if self.step == 0 {
            return Err(Error::invalid("steps count from 1"));
        }
        let gap = self.lr_max - self.lr;
        if !(gap > 0.0) {
            return Err(Error::invalid("learning rate must stay below lr_max"));
        }
        let scale = (self.step_threshold / self.step as f64)
            .min(self.lr_threshold / gap)
            .min(1.0);
        let level = if max_difficulty == 0 {
            1.0
        } else {
            difficulty as f64 / max_difficulty as f64
        };
        Ok(scale * self.zeta0 * level)
    }

    /// Advance each frontier by at most one level when its performance beats
    /// the threshold evaluated at the frontier. Returns the tasks that moved.
    pub fn advance(&mut self) -> Result<Vec<Task>> {
        let mut moved = Vec::new();
        for i in 0..self.tasks.len() {
            let t = &self.tasks[i];
            if t.frontier >= t.max_difficulty {
                continue;
            }
            let zeta = self.advancement_threshold(t.frontier, t.max_difficulty)?;
            if t.performance[t.frontier as usize] > zeta {
                self.tasks[i].frontier += 1;
                moved.push(self.tasks[i].task);
            }
        }
        Ok(moved)
    }

    /// Momentum update of the task ratios from per-task performance.
    pub fn update_task_ratios(&mut self, perfs: &BTreeMap<Task, f64>) -> Result<()> {
        let p: Vec<f64> = self
            .tasks
            .iter()
            .map(|t| {
                perfs
                    .get(&t.task)
                    .copied()
                    .ok_or_else(|| Error::invalid(format!("missing performance for {}", t.task)))
            })
            .collect::<Result<_>>()?;
        let old: Vec<f64> = self.tasks.iter().map(|t| t.ratio).collect();
        let new = update_ratios(&p, &old, self.alpha, self.lambda)?;
        for (t, r) in self.tasks.iter_mut().zip(new) {
            t.ratio = r;
        }
        Ok(())
    }

    /// Per-difficulty weights for one task: 80% over admitted levels by
    /// `(1-p)^(1-λ)` with `λ = 0`, 20% previewing the levels above.
    pub fn difficulty_weights(&self, t: &TaskState) -> Vec<(u32, f64)> {
        let preview = preview_ratios_with(t.frontier, t.max_difficulty, self.preview_budget, self.preview_decay);
        let main_share = if preview.is_empty() { 1.0 } else { 1.0 - self.preview_budget };
        let admitted: Vec<f64> = t.performance[..=t.frontier as usize].to_vec();
        let need = normalized_need(&admitted, DIFFICULTY_LAMBDA);
        let mut out: Vec<(u32, f64)> = need
            .into_iter()
            .enumerate()
            .map(|(d, w)| (d as u32, main_share * w))
            .collect();
        out.extend(preview);
        out
    }

    /// Advance frontiers, then split `batch_tokens` across tasks by ratio and
    /// across difficulties by [`Self::difficulty_weights`].
    pub fn next_batch_plan<R: Rng + ?Sized>(&mut self, rng: &mut R, batch_tokens: u64) -> Result<Vec<PlanEntry>> {
        self.advance()?;
        let ratios: Vec<f64> = self.tasks.iter().map(|t| t.ratio).collect();
        let budgets = apportion(rng, &ratios, batch_tokens);
        let mut plan = Vec::new();
        for (t, &budget) in self.tasks.iter().zip(&budgets) {
            let weights = self.difficulty_weights(t);
            let w: Vec<f64> = weights.iter().map(|&(_, w)| w).collect();
            let counts = apportion(rng, &w, budget);
            for ((d, _), c) in weights.into_iter().zip(counts) {
                if c > 0 {
                    plan.push(PlanEntry {
                        task: t.task,
                        difficulty: d,
                        count: c,
                    });
                }
            }
        }
        Ok(plan)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let state: Self = serde_json::from_str(s).map_err(|e| Error::json("scheduler checkpoint", e))?;
        state.validate()?;
        Ok(state)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.tasks.iter().map(|t| t.ratio).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Schema(format!("task ratios sum to {sum}, expected 1")));
        }
        for t in &self.tasks {
            if t.frontier > t.max_difficulty || t.performance.len() != t.max_difficulty as usize + 1 {
                return Err(Error::Schema(format!("inconsistent curriculum state for {}", t.task)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn preview_example() {
        let r = preview_ratios(3, 5);
        assert!((r[&4] - 0.2 * 0.8 / 1.44).abs() < 1e-15);
        assert!((r[&5] - 0.2 * 0.64 / 1.44).abs() < 1e-15);
        assert!((r.values().sum::<f64>() - 0.2).abs() < 1e-15);
        assert!(preview_ratios(5, 5).is_empty());
    }

    #[test]
    fn ratio_example() {
        let r = update_ratios(&[0.5, 1.0], &[0.5, 0.5], 0.5, -1.0).unwrap();
        assert!((r[0] - 0.75).abs() < 1e-12 && (r[1] - 0.25).abs() < 1e-12);
        let r = update_ratios(&[1.0, 1.0], &[0.9, 0.1], 0.5, -1.0).unwrap();
        assert!((r[0] - 0.7).abs() < 1e-12);
        assert!(update_ratios(&[1.5], &[1.0], 0.5, -1.0).is_err());
    }

    #[test]
    fn threshold_examples() {
        let mut s = SchedulerState::new(&[(Task::Mult, 10)], 1000, 1.0, 0.5).unwrap();
        s.set_progress(100, 0.9).unwrap();
        assert!((s.advancement_threshold(10, 10).unwrap() - 0.9).abs() < 1e-15);
        assert!((s.advancement_threshold(5, 10).unwrap() - 0.45).abs() < 1e-15);
        s.set_progress(1000, 0.0).unwrap();
        assert!((s.advancement_threshold(10, 10).unwrap() - 0.45).abs() < 1e-15);
    }

    #[test]
    fn apportion_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = apportion(&mut rng, &[1.0, 1.0, 1.0], 10);
        assert_eq!(c.iter().sum::<u64>(), 10);
        assert!(c.iter().all(|&x| x == 3 || x == 4));
        assert_eq!(apportion(&mut rng, &[0.0, 0.0], 5), vec![0, 0]);
    }

    #[test]
    fn plan_at_max_frontier_stays_admitted() {
        let mut s = SchedulerState::new(&[(Task::Mean, 3)], 100, 1.0, 0.5).unwrap();
        s.tasks[0].frontier = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let plan = s.next_batch_plan(&mut rng, 1000).unwrap();
        assert_eq!(plan.iter().map(|e| e.count).sum::<u64>(), 1000);
        assert!(plan.iter().all(|e| e.difficulty <= 3));
    }

    #[test]
    fn perfect_frontier_advances() {
        let mut s = SchedulerState::new(&[(Task::Div, 20)], 100, 1.0, 0.5).unwrap();
        assert_eq!(s.tasks[0].frontier, 2);
        s.set_performance(Task::Div, 2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let plan = s.next_batch_plan(&mut rng, 1000).unwrap();
        assert_eq!(s.tasks[0].frontier, 3);
        let main: u64 = plan.iter().filter(|e| e.difficulty <= 3).map(|e| e.count).sum();
        // largest-remainder rounding moves at most one token per level
        assert!((798..=802).contains(&main), "{main}");
        assert!(plan.iter().all(|e| e.difficulty != 2));
    }

    #[test]
    fn checkpoint_round_trip() {
        let s = SchedulerState::new(&[(Task::Exp, 8), (Task::Std, 30)], 10, 1e-3, 5e-4).unwrap();
        let back = SchedulerState::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert!(SchedulerState::from_json("{}").is_err());
    }
}
