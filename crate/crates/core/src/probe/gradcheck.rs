use ndarray::Array2;

use super::nn::{Loss, Network};
use crate::Result;

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Relative error of one parameter tensor: `|a - n| / (|a| + |n|)` in the
/// Euclidean norm, 0 when both gradients vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorError {
    pub name: String,
    pub rel_error: f64,
}

fn rel_error(a: &[f64], n: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(n).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()) + norm(&mut n.iter().copied());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Compare analytic gradients with central differences for every tensor.
pub fn gradcheck(net: &Network, x: &Array2<f64>, t: &Array2<f64>, loss: Loss) -> Result<Vec<TensorError>> {
    let (_, grads) = net.loss_and_grad(x, t, loss, 1.0)?;
    let mut probe = net.clone();
    let mut out = Vec::new();
    for (l, g) in grads.iter().enumerate() {
        let mut numeric_w = Vec::with_capacity(g.weight.len());
        for idx in 0..g.weight.len() {
            let (r, c) = (idx / g.weight.ncols(), idx % g.weight.ncols());
            let orig = probe.layers[l].weight[[r, c]];
            probe.layers[l].weight[[r, c]] = orig + FD_STEP;
            let up = probe.loss(x, t, loss, 1.0)?;
            probe.layers[l].weight[[r, c]] = orig - FD_STEP;
            let down = probe.loss(x, t, loss, 1.0)?;
            probe.layers[l].weight[[r, c]] = orig;
            numeric_w.push((up - down) / (2.0 * FD_STEP));
        }
        let mut numeric_b = Vec::with_capacity(g.bias.len());
        for j in 0..g.bias.len() {
            let orig = probe.layers[l].bias[j];
            probe.layers[l].bias[j] = orig + FD_STEP;
            let up = probe.loss(x, t, loss, 1.0)?;
            probe.layers[l].bias[j] = orig - FD_STEP;
            let down = probe.loss(x, t, loss, 1.0)?;
            probe.layers[l].bias[j] = orig;
            numeric_b.push((up - down) / (2.0 * FD_STEP));
        }
        let analytic_w: Vec<f64> = g.weight.iter().copied().collect();
        let analytic_b: Vec<f64> = g.bias.to_vec();
        out.push(TensorError {
            name: format!("layer{l}.weight"),
            rel_error: rel_error(&analytic_w, &numeric_w),
        });
        out.push(TensorError {
            name: format!("layer{l}.bias"),
            rel_error: rel_error(&analytic_b, &numeric_b),
        });
    }
    Ok(out)
}

pub fn max_rel_error(errors: &[TensorError]) -> f64 {
    errors.iter().map(|e| e.rel_error).fold(0.0, f64::max)
}
