//! Central-difference gradient oracle. Slow; meant for tests and diagnostics.

use super::mlp::{GradientSet, ParameterSet};

/// Estimates `∂loss/∂θ` for every parameter with `(f(θ+ε) − f(θ−ε)) / 2ε`.
pub fn finite_diff_grad<F>(params: &ParameterSet, mut loss: F, epsilon: f64) -> GradientSet
where
    F: FnMut(&ParameterSet) -> f64,
{
    let base = params.flatten();
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(base.len());
    for (i, &theta) in base.iter().enumerate() {
        set_flat(&mut probe, i, theta + epsilon);
        let up = loss(&probe);
        set_flat(&mut probe, i, theta - epsilon);
        let down = loss(&probe);
        set_flat(&mut probe, i, theta);
        out.push((up - down) / (2.0 * epsilon));
    }
    GradientSet::from_flat_like(params, &out).expect("same shape as params")
}

fn set_flat(params: &mut ParameterSet, mut index: usize, value: f64) {
    for l in &mut params.layers {
        if index < l.weights.len() {
            l.weights[index] = value;
            return;
        }
        index -= l.weights.len();
        if index < l.bias.len() {
            l.bias[index] = value;
            return;
        }
        index -= l.bias.len();
    }
    panic!("parameter index out of range");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::mlp::{Activation, MlpConfig};

    #[test]
    fn quadratic_loss_gradient_is_theta() {
        let cfg = MlpConfig::new(vec![3, 2, 1], Activation::Relu, 1.0, 4);
        let p = ParameterSet::init(&cfg).unwrap();
        let g = finite_diff_grad(&p, |q| q.flatten().iter().map(|v| v * v / 2.0).sum(), 1e-4);
        for (a, b) in g.flatten().iter().zip(p.flatten()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_loss_has_zero_gradient() {
        let cfg = MlpConfig::new(vec![2, 1], Activation::Relu, 1.0, 0);
        let p = ParameterSet::init(&cfg).unwrap();
        assert!(finite_diff_grad(&p, |_| 3.5, 1e-5).is_zero());
    }
}
