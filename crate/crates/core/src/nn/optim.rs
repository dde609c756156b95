use super::mlp::{GradientSet, ParameterSet};
use crate::error::{Error, Result};

/// `θ ← θ − lr·g`, returning the updated copy.
pub fn sgd_step(params: &ParameterSet, grads: &GradientSet, lr: f64) -> Result<ParameterSet> {
    let mut out = params.clone();
    sgd_step_in_place(&mut out, grads, lr)?;
    Ok(out)
}

/// In-place variant used by the training loops. On failure `params` is left
/// partially updated only in layers before the offending one.
pub fn sgd_step_in_place(params: &mut ParameterSet, grads: &GradientSet, lr: f64) -> Result<()> {
    if params.layers.len() != grads.layers.len() {
        return Err(Error::input("gradient set does not match parameter set"));
    }
    for (i, (p, g)) in params.layers.iter().zip(&grads.layers).enumerate() {
        if p.weights.len() != g.weights.len() || p.bias.len() != g.bias.len() {
            return Err(Error::input(format!("gradient shape mismatch in layer {i}")));
        }
    }
    for (i, (p, g)) in params.layers.iter_mut().zip(&grads.layers).enumerate() {
        let finite = p
            .weights
            .iter()
            .zip(&g.weights)
            .chain(p.bias.iter().zip(&g.bias))
            .all(|(w, d)| (w - lr * d).is_finite());
        if !finite {
            return Err(Error::NonFiniteUpdate { layer: i });
        }
        for (w, d) in p.weights.iter_mut().zip(&g.weights) {
            *w -= lr * d;
        }
        for (b, d) in p.bias.iter_mut().zip(&g.bias) {
            *b -= lr * d;
        }
    }
    Ok(())
}
