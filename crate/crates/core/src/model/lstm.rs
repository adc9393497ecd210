//! Standard LSTM cell and its backpropagation through time.
//!
//! Gate blocks are stacked in the order input, forget, output, candidate:
//! `w` is `(4H × I)`, `u` is `(4H × H)` and `b` has `4H` entries.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub w: Array2<f64>,
    pub u: Array2<f64>,
    pub b: Array1<f64>,
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..=limit))
}

impl LstmParams {
    /// Glorot-uniform weights, zero biases except a forget-gate bias of 1.
    pub fn init(input: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let w = glorot(4 * hidden, input, rng);
        let u = glorot(4 * hidden, hidden, rng);
        let mut b = Array1::zeros(4 * hidden);
        b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        LstmParams { w, u, b }
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            w: Array2::zeros((4 * hidden, input)),
            u: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.u.ncols()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One cell step: returns `(h_t, c_t)`.
pub fn lstm_cell_forward(
    p: &LstmParams,
    x: ArrayView1<f64>,
    h_prev: ArrayView1<f64>,
    c_prev: ArrayView1<f64>,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let h = p.hidden_dim();
    if x.len() != p.input_dim() || h_prev.len() != h || c_prev.len() != h {
        return Err(Error::Shape(format!(
            "cell expects input {} and state {h}, got {}/{}/{}",
            p.input_dim(),
            x.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    if x.iter().chain(h_prev).chain(c_prev).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite LSTM cell input".into()));
    }
    let a = p.w.dot(&x) + p.u.dot(&h_prev) + &p.b;
    let mut c = Array1::zeros(h);
    let mut out = Array1::zeros(h);
    for k in 0..h {
        let i = sigmoid(a[k]);
        let f = sigmoid(a[h + k]);
        let o = sigmoid(a[2 * h + k]);
        let g = a[3 * h + k].tanh();
        c[k] = f * c_prev[k] + i * g;
        out[k] = o * c[k].tanh();
    }
    Ok((out, c))
}

/// Activations of a sequence run, one row per time step.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    /// Post-activation gates `[i, f, o, g]`, `(T × 4H)`.
    pub gates: Array2<f64>,
    pub c: Array2<f64>,
    pub h: Array2<f64>,
}

/// Runs the cell over the rows of `xs` from a zero state.
pub fn lstm_forward(p: &LstmParams, xs: ArrayView2<f64>) -> LstmTrace {
    let t_len = xs.nrows();
    let h = p.hidden_dim();
    let mut pre = xs.dot(&p.w.t());
    pre += &p.b;
    let mut gates = Array2::zeros((t_len, 4 * h));
    let mut cs = Array2::zeros((t_len, h));
    let mut hs = Array2::zeros((t_len, h));
    let mut h_prev = Array1::<f64>::zeros(h);
    let mut c_prev = Array1::<f64>::zeros(h);
    for t in 0..t_len {
        let a = &pre.row(t) + &p.u.dot(&h_prev);
        let mut g_row = gates.row_mut(t);
        for k in 0..h {
            let i = sigmoid(a[k]);
            let f = sigmoid(a[h + k]);
            let o = sigmoid(a[2 * h + k]);
            let g = a[3 * h + k].tanh();
            let c = f * c_prev[k] + i * g;
            g_row[k] = i;
            g_row[h + k] = f;
            g_row[2 * h + k] = o;
            g_row[3 * h + k] = g;
            cs[[t, k]] = c;
            hs[[t, k]] = o * c.tanh();
        }
        h_prev.assign(&hs.row(t));
        c_prev.assign(&cs.row(t));
    }
    LstmTrace { gates, c: cs, h: hs }
}

/// Backpropagates `d_h` (gradient w.r.t. every output row) through the
/// sequence, accumulating into `grad` and returning the input gradient.
pub fn lstm_backward(
    p: &LstmParams,
    xs: ArrayView2<f64>,
    trace: &LstmTrace,
    d_h: ArrayView2<f64>,
    grad: &mut LstmParams,
) -> Array2<f64> {
    let t_len = xs.nrows();
    let h = p.hidden_dim();
    let mut d_pre = Array2::zeros((t_len, 4 * h));
    let mut dh_next = Array1::<f64>::zeros(h);
    let mut dc_next = Array1::<f64>::zeros(h);
    for t in (0..t_len).rev() {
        let g_row = trace.gates.row(t);
        let mut da = d_pre.row_mut(t);
        for k in 0..h {
            let (i, f, o, g) = (g_row[k], g_row[h + k], g_row[2 * h + k], g_row[3 * h + k]);
            let c = trace.c[[t, k]];
            let c_prev = if t > 0 { trace.c[[t - 1, k]] } else { 0.0 };
            let tc = c.tanh();
            let dh = d_h[[t, k]] + dh_next[k];
            let d_o = dh * tc;
            let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
            let d_i = dc * g;
            let d_g = dc * i;
            let d_f = dc * c_prev;
            dc_next[k] = dc * f;
            da[k] = d_i * i * (1.0 - i);
            da[h + k] = d_f * f * (1.0 - f);
            da[2 * h + k] = d_o * o * (1.0 - o);
            da[3 * h + k] = d_g * (1.0 - g * g);
        }
        dh_next = p.u.t().dot(&d_pre.row(t));
    }
    grad.w += &d_pre.t().dot(&xs);
    if t_len > 1 {
        let h_prev = trace.h.slice(s![..t_len - 1, ..]);
        grad.u += &d_pre.slice(s![1.., ..]).t().dot(&h_prev);
    }
    grad.b += &d_pre.sum_axis(Axis(0));
    d_pre.dot(&p.w)
}
