use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoders::sigmoid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// Bitwise binary cross entropy on logits.
    Bce,
    /// Mean squared error on raw outputs.
    Mse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    /// Uniform `(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn xavier<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Self {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Self {
            weight: Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-a..a)),
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }
}

/// Dense layers with rectifiers between them. One layer is a linear head;
/// two layers are a one-hidden-layer MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Dense>,
}

/// Gradients in the same layout as [`Network::layers`].
pub type Gradients = Vec<Dense>;

impl Network {
    pub fn linear<R: Rng>(rng: &mut R, inputs: usize, outputs: usize) -> Self {
        Self {
            layers: vec![Dense::xavier(rng, inputs, outputs)],
        }
    }

    pub fn mlp<R: Rng>(rng: &mut R, inputs: usize, hidden: usize, outputs: usize) -> Self {
        Self {
            layers: vec![Dense::xavier(rng, inputs, hidden), Dense::xavier(rng, hidden, outputs)],
        }
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().expect("at least one layer").bias.len()
    }

    /// Outputs before any squashing (logits for BCE).
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            a = layer.forward(&a);
            if i + 1 < self.layers.len() {
                a.mapv_inplace(|v| v.max(0.0));
            }
        }
        a
    }

    /// Loss, scaled by `weight`, and its gradient. Both losses average over
    /// every output entry of the batch.
    pub fn loss(&self, x: &Array2<f64>, t: &Array2<f64>, loss: Loss, weight: f64) -> Result<f64> {
        Ok(weight * output_loss(&self.forward(x), t, loss)?.0)
    }

    pub fn loss_and_grad(
        &self,
        x: &Array2<f64>,
        t: &Array2<f64>,
        loss: Loss,
        weight: f64,
    ) -> Result<(f64, Gradients)> {
        if x.ncols() != self.inputs() || x.nrows() != t.nrows() {
            return Err(Error::invalid(format!(
                "batch {}x{} with {} targets does not fit a {}-input network",
                x.nrows(),
                x.ncols(),
                t.nrows(),
                self.inputs()
            )));
        }
        let mut acts = vec![x.clone()];
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(acts.last().expect("input"));
            if i + 1 < self.layers.len() {
                z.mapv_inplace(|v| v.max(0.0));
            }
            acts.push(z);
        }
        let (value, mut dz) = output_loss(acts.last().expect("output"), t, loss)?;
        dz.mapv_inplace(|g| g * weight);
        let mut grads = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &acts[i];
            grads.push(Dense {
                weight: input.t().dot(&dz),
                bias: dz.sum_axis(Axis(0)),
            });
            if i > 0 {
                let mut da = dz.dot(&layer.weight.t());
                Zip::from(&mut da).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                dz = da;
            }
        }
        grads.reverse();
        Ok((weight * value, grads))
    }

    pub fn grad_norm(grads: &Gradients) -> f64 {
        grads
            .iter()
            .map(|g| g.weight.iter().chain(g.bias.iter()).map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// One plain gradient step with the global gradient norm clipped to `clip`.
    pub fn step(&mut self, grads: &Gradients, lr: f64, clip: f64) {
        let norm = Self::grad_norm(grads);
        let scale = if norm > clip { lr * clip / norm } else { lr };
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            layer.weight.scaled_add(-scale, &g.weight);
            layer.bias.scaled_add(-scale, &g.bias);
        }
    }
}

fn output_loss(z: &Array2<f64>, t: &Array2<f64>, loss: Loss) -> Result<(f64, Array2<f64>)> {
    if z.dim() != t.dim() {
        return Err(Error::invalid(format!(
            "outputs {:?} vs targets {:?}",
            z.dim(),
            t.dim()
        )));
    }
    let n = z.len() as f64;
    let (value, grad) = match loss {
        Loss::Bce => {
            let value = Zip::from(z)
                .and(t)
                .fold(0.0, |acc, &z, &t| acc + softplus(z) - t * z);
            let grad = Zip::from(z).and(t).map_collect(|&z, &t| (sigmoid(z) - t) / n);
            (value / n, grad)
        }
        Loss::Mse => {
            let value = Zip::from(z).and(t).fold(0.0, |acc, &z, &t| acc + (z - t) * (z - t));
            let grad = Zip::from(z).and(t).map_collect(|&z, &t| 2.0 * (z - t) / n);
            (value / n, grad)
        }
    };
    if !value.is_finite() {
        return Err(Error::invalid(format!("loss is not finite ({value})")));
    }
    Ok((value, grad))
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}
