use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learned mixing of stacked encoder layers:
/// `scale * Σ_j softmax(scalars)_j * layer_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMixParams {
    pub scalars: Vec<f64>,
    pub scale: f64,
}

impl LayerMixParams {
    /// Starts at the unweighted average: all scalars 0, scale 1.
    pub fn new(layers: usize) -> Self {
        LayerMixParams {
            scalars: vec![0.0; layers],
            scale: 1.0,
        }
    }

    pub fn layers(&self) -> usize {
        self.scalars.len()
    }

    /// Softmax of the task scalars.
    pub fn weights(&self) -> Vec<f64> {
        let max = self.scalars.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = self.scalars.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }
}

fn check_layers(layers: &[&[f64]], mix: &LayerMixParams) -> Result<usize> {
    if layers.is_empty() {
        return Err(Error::Shape("no layers to mix".into()));
    }
    if layers.len() != mix.layers() {
        return Err(Error::Shape(format!(
            "{} layers but {} mixing scalars",
            layers.len(),
            mix.layers()
        )));
    }
    let d = layers[0].len();
    if let Some(bad) = layers.iter().find(|l| l.len() != d) {
        return Err(Error::Shape(format!(
            "layer dimensions differ: {d} vs {}",
            bad.len()
        )));
    }
    Ok(d)
}

pub fn mix_layers(layers: &[&[f64]], mix: &LayerMixParams) -> Result<Vec<f64>> {
    let d = check_layers(layers, mix)?;
    let w = mix.weights();
    let mut out = vec![0.0; d];
    for (layer, wj) in layers.iter().zip(&w) {
        for (o, x) in out.iter_mut().zip(layer.iter()) {
            *o += wj * x;
        }
    }
    for o in &mut out {
        *o *= mix.scale;
    }
    Ok(out)
}

/// Accumulates gradients of the mixed vector into `d_scalars` and `d_scale`.
pub fn mix_layers_backward(
    layers: &[&[f64]],
    mix: &LayerMixParams,
    d_out: &[f64],
    d_scalars: &mut [f64],
    d_scale: &mut f64,
) -> Result<()> {
    check_layers(layers, mix)?;
    let w = mix.weights();
    // dot_j = <d_out, layer_j>
    let dots: Vec<f64> = layers
        .iter()
        .map(|l| l.iter().zip(d_out).map(|(a, b)| a * b).sum())
        .collect();
    let weighted: f64 = w.iter().zip(&dots).map(|(a, b)| a * b).sum();
    *d_scale += weighted;
    for ((ds, wj), dot) in d_scalars.iter_mut().zip(&w).zip(&dots) {
        *ds += mix.scale * wj * (dot - weighted);
    }
    Ok(())
}
