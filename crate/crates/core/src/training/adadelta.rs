use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Running averages of squared gradients and squared updates, one buffer
/// per parameter array in registry order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaDeltaState {
    pub names: Vec<String>,
    pub sq_grad: Vec<Vec<f64>>,
    pub sq_update: Vec<Vec<f64>>,
}

impl AdaDeltaState {
    pub fn new(params: &ModelParams) -> Self {
        let arrays = params.arrays();
        AdaDeltaState {
            names: arrays.iter().map(|(n, _)| n.clone()).collect(),
            sq_grad: arrays.iter().map(|(_, a)| vec![0.0; a.len()]).collect(),
            sq_update: arrays.iter().map(|(_, a)| vec![0.0; a.len()]).collect(),
        }
    }
}

/// The AdaDelta update of one scalar; returns the step `Δ` before `lr`.
#[inline]
pub fn adadelta_scalar(g: f64, sq_grad: &mut f64, sq_update: &mut f64, rho: f64, eps: f64) -> f64 {
    *sq_grad = rho * *sq_grad + (1.0 - rho) * g * g;
    let delta = -((*sq_update + eps).sqrt() / (*sq_grad + eps).sqrt()) * g;
    *sq_update = rho * *sq_update + (1.0 - rho) * delta * delta;
    delta
}

/// One AdaDelta step over every array. Nothing is modified if any gradient
/// entry is non-finite.
pub fn adadelta_step(
    state: &mut AdaDeltaState,
    grads: &ModelParams,
    params: &mut ModelParams,
    lr: f64,
    rho: f64,
    eps: f64,
) -> Result<()> {
    let g_arrays = grads.arrays();
    if g_arrays.len() != state.names.len()
        || g_arrays.iter().zip(&state.names).any(|((n, _), m)| n != m)
    {
        return Err(Error::Shape("gradient arrays do not match optimizer state".into()));
    }
    for (name, g) in &g_arrays {
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient {} in {name}[{i}]",
                g[i]
            )));
        }
    }
    for (k, ((name, x), (_, g))) in params.arrays_mut().into_iter().zip(&g_arrays).enumerate() {
        if x.len() != g.len() || state.sq_grad[k].len() != x.len() {
            return Err(Error::Shape(format!("{name}: parameter and gradient sizes differ")));
        }
        let (eg, ed) = (&mut state.sq_grad[k], &mut state.sq_update[k]);
        for j in 0..x.len() {
            x[j] += lr * adadelta_scalar(g[j], &mut eg[j], &mut ed[j], rho, eps);
        }
    }
    Ok(())
}
