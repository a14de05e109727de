use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use super::nn::{Loss, Network};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub clip: f64,
    pub loss: Loss,
    pub loss_weight: f64,
    /// Call the stopping check every this many steps.
    pub eval_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOutcome {
    pub steps: usize,
    /// Loss over the full training set after the last step.
    pub final_loss: f64,
}

/// Minibatch gradient descent over shuffled epochs. Stops early once `done`
/// returns true at an evaluation point.
pub fn train<R: Rng>(
    net: &mut Network,
    x: &Array2<f64>,
    t: &Array2<f64>,
    cfg: &TrainConfig,
    rng: &mut R,
    mut done: impl FnMut(&Network) -> bool,
) -> Result<TrainOutcome> {
    if cfg.batch == 0 || cfg.eval_every == 0 || x.nrows() == 0 {
        return Err(Error::invalid("training needs a positive batch, eval interval and data"));
    }
    let n = x.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;
    let mut steps = 0;
    while steps < cfg.steps {
        if cursor + cfg.batch > n {
            order.shuffle(rng);
            cursor = 0;
        }
        let idx = &order[cursor..(cursor + cfg.batch).min(n)];
        cursor += idx.len();
        let xb = x.select(Axis(0), idx);
        let tb = t.select(Axis(0), idx);
        let (loss, grads) = net
            .loss_and_grad(&xb, &tb, cfg.loss, cfg.loss_weight)
            .map_err(|_| Error::Diverged { steps, loss: f64::NAN })?;
        if !loss.is_finite() {
            return Err(Error::Diverged { steps, loss });
        }
        net.step(&grads, cfg.lr, cfg.clip);
        steps += 1;
        if steps % cfg.eval_every == 0 && done(net) {
            break;
        }
    }
    let final_loss = net
        .loss(x, t, cfg.loss, cfg.loss_weight)
        .map_err(|_| Error::Diverged { steps, loss: f64::NAN })?;
    Ok(TrainOutcome { steps, final_loss })
}
