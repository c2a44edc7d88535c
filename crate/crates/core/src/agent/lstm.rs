//! Single-layer LSTM followed by two fully connected layers
//! (`h -> h/2` with ReLU, then `h/2 -> out` with tanh or identity), with
//! hand-written backpropagation through time.
//!
//! All parameters live in one flat vector so that optimiser steps, soft
//! target updates and checkpointing are plain slice operations.
//!
//! Flat layout, all matrices row-major:
//!
//! | block | shape        |
//! |-------|--------------|
//! | `wx`  | `4h x in`    |
//! | `wh`  | `4h x h`     |
//! | `b`   | `4h`         |
//! | `w1`  | `h/2 x h`    |
//! | `b1`  | `h/2`        |
//! | `w2`  | `out x h/2`  |
//! | `b2`  | `out`        |
//!
//! Gate rows are ordered input, forget, cell candidate, output.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AgentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Head {
    Tanh,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetShape {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub head: Head,
}

#[derive(Debug, Clone, Copy)]
struct Offsets {
    wx: usize,
    wh: usize,
    b: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    end: usize,
}

impl NetShape {
    pub fn new(input: usize, hidden: usize, output: usize, head: Head) -> Result<Self, AgentError> {
        if hidden == 0 || hidden % 2 != 0 {
            return Err(AgentError::Shape(format!("hidden size {hidden} must be even and positive")));
        }
        if input == 0 || output == 0 {
            return Err(AgentError::Shape("input and output sizes must be positive".into()));
        }
        Ok(NetShape { input, hidden, output, head })
    }

    fn offsets(&self) -> Offsets {
        let h = self.hidden;
        let half = h / 2;
        let wx = 0;
        let wh = wx + 4 * h * self.input;
        let b = wh + 4 * h * h;
        let w1 = b + 4 * h;
        let b1 = w1 + half * h;
        let w2 = b1 + half;
        let b2 = w2 + self.output * half;
        let end = b2 + self.output;
        Offsets { wx, wh, b, w1, b1, w2, b2, end }
    }

    pub fn param_count(&self) -> usize {
        self.offsets().end
    }
}

/// Activations of one timestep, kept for the backward pass.
#[derive(Debug, Clone)]
struct StepCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Post-activation gates `[i, f, g, o]`, each of length h.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    z1: Vec<f64>,
    a1: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    steps: Vec<StepCache>,
}

impl ForwardCache {
    pub fn outputs(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.y.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmNet {
    shape: NetShape,
    params: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `out += W v` for a row-major `rows x cols` matrix.
fn matvec_acc(w: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(v) {
            acc += a * b;
        }
        *o += acc;
    }
}

/// `out += W^T g` for a row-major `rows x cols` matrix, `g` of length rows.
fn matvec_t_acc(w: &[f64], g: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (gr, row) in g.iter().zip(w.chunks_exact(cols)) {
        if *gr == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += gr * a;
        }
    }
}

/// `dW += g v^T`.
fn outer_acc(dw: &mut [f64], g: &[f64], v: &[f64]) {
    let cols = v.len();
    for (gr, row) in g.iter().zip(dw.chunks_exact_mut(cols)) {
        if *gr == 0.0 {
            continue;
        }
        for (d, b) in row.iter_mut().zip(v) {
            *d += gr * b;
        }
    }
}

impl LstmNet {
    pub fn zeros(shape: NetShape) -> Self {
        LstmNet { params: vec![0.0; shape.param_count()], shape }
    }

    /// Uniform `[-k, k]` with `k = 1 / sqrt(fan_in)`; forget-gate biases
    /// shifted by +1.
    pub fn init<R: Rng + ?Sized>(shape: NetShape, rng: &mut R) -> Self {
        let mut net = LstmNet::zeros(shape);
        let o = shape.offsets();
        let h = shape.hidden;
        let k_lstm = 1.0 / ((shape.input + h) as f64).sqrt();
        let k_fc1 = 1.0 / (h as f64).sqrt();
        let k_fc2 = 1.0 / ((h / 2) as f64).sqrt();
        for (i, p) in net.params.iter_mut().enumerate() {
            let k = if i < o.w1 {
                k_lstm
            } else if i < o.w2 {
                k_fc1
            } else {
                k_fc2
            };
            *p = rng.random_range(-k..=k);
        }
        for p in &mut net.params[o.b + h..o.b + 2 * h] {
            *p += 1.0;
        }
        net
    }

    pub fn from_params(shape: NetShape, params: Vec<f64>) -> Result<Self, AgentError> {
        if params.len() != shape.param_count() {
            return Err(AgentError::Shape(format!(
                "expected {} parameters, found {}",
                shape.param_count(),
                params.len()
            )));
        }
        Ok(LstmNet { shape, params })
    }

    pub fn shape(&self) -> NetShape {
        self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// `theta' <- tau * theta + (1 - tau) * theta'`.
    pub fn soft_update_from(&mut self, online: &LstmNet, tau: f64) {
        for (t, &p) in self.params.iter_mut().zip(&online.params) {
            *t = tau * p + (1.0 - tau) * *t;
        }
    }

    /// Runs the recurrence from zero hidden and cell state over `seq`.
    pub fn forward(&self, seq: &[Vec<f64>]) -> Result<ForwardCache, AgentError> {
        let NetShape { input, hidden: h, output, head } = self.shape;
        let half = h / 2;
        let o = self.shape.offsets();
        let p = &self.params;
        let mut steps = Vec::with_capacity(seq.len());
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for x in seq {
            if x.len() != input {
                return Err(AgentError::Shape(format!("input width {} != {input}", x.len())));
            }
            let mut pre = p[o.b..o.b + 4 * h].to_vec();
            matvec_acc(&p[o.wx..o.wh], x, &mut pre);
            matvec_acc(&p[o.wh..o.b], &h_prev, &mut pre);
            let mut gates = vec![0.0; 4 * h];
            let mut c = vec![0.0; h];
            let mut tanh_c = vec![0.0; h];
            let mut hv = vec![0.0; h];
            for k in 0..h {
                let ig = sigmoid(pre[k]);
                let fg = sigmoid(pre[h + k]);
                let gg = pre[2 * h + k].tanh();
                let og = sigmoid(pre[3 * h + k]);
                gates[k] = ig;
                gates[h + k] = fg;
                gates[2 * h + k] = gg;
                gates[3 * h + k] = og;
                c[k] = fg * c_prev[k] + ig * gg;
                tanh_c[k] = c[k].tanh();
                hv[k] = og * tanh_c[k];
            }
            let mut z1 = p[o.b1..o.b1 + half].to_vec();
            matvec_acc(&p[o.w1..o.b1], &hv, &mut z1);
            let a1: Vec<f64> = z1.iter().map(|&z| z.max(0.0)).collect();
            let mut y = p[o.b2..o.b2 + output].to_vec();
            matvec_acc(&p[o.w2..o.b2], &a1, &mut y);
            if head == Head::Tanh {
                for v in &mut y {
                    *v = v.tanh();
                }
            }
            steps.push(StepCache {
                x: x.clone(),
                h_prev: std::mem::replace(&mut h_prev, hv.clone()),
                c_prev: std::mem::replace(&mut c_prev, c),
                gates,
                tanh_c,
                h: hv,
                z1,
                a1,
                y,
            });
        }
        Ok(ForwardCache { steps })
    }

    /// Backpropagation through time. `out_grads[t]` is dL/dy at step t.
    /// Parameter gradients are added into `param_grads`; the returned
    /// vectors are dL/dx per step.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        out_grads: &[Vec<f64>],
        param_grads: &mut [f64],
    ) -> Vec<Vec<f64>> {
        let NetShape { input, hidden: h, output, head } = self.shape;
        let half = h / 2;
        let o = self.shape.offsets();
        let p = &self.params;
        debug_assert_eq!(param_grads.len(), p.len());
        let n = cache.steps.len();
        let mut input_grads = vec![vec![0.0; input]; n];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz2 = vec![0.0; output];
        let mut da1 = vec![0.0; half];
        let mut dpre = vec![0.0; 4 * h];
        for t in (0..n).rev() {
            let s = &cache.steps[t];
            let gy = &out_grads[t];
            for k in 0..output {
                dz2[k] = match head {
                    Head::Tanh => gy[k] * (1.0 - s.y[k] * s.y[k]),
                    Head::Linear => gy[k],
                };
            }
            // FC2 and FC1
            let mut dh = dh_next.clone();
            if dz2.iter().any(|&g| g != 0.0) {
                {
                    let (_, rest) = param_grads.split_at_mut(o.w2);
                    let (dw2, db2) = rest.split_at_mut(o.b2 - o.w2);
                    outer_acc(dw2, &dz2, &s.a1);
                    for (d, g) in db2[..output].iter_mut().zip(&dz2) {
                        *d += g;
                    }
                }
                da1.iter_mut().for_each(|v| *v = 0.0);
                matvec_t_acc(&p[o.w2..o.b2], &dz2, &mut da1);
                for (d, z) in da1.iter_mut().zip(&s.z1) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
                {
                    let (_, rest) = param_grads.split_at_mut(o.w1);
                    let (dw1, db1) = rest.split_at_mut(o.b1 - o.w1);
                    outer_acc(dw1, &da1, &s.h);
                    for (d, g) in db1[..half].iter_mut().zip(&da1) {
                        *d += g;
                    }
                }
                matvec_t_acc(&p[o.w1..o.b1], &da1, &mut dh);
            }
            // LSTM cell
            for k in 0..h {
                let ig = s.gates[k];
                let fg = s.gates[h + k];
                let gg = s.gates[2 * h + k];
                let og = s.gates[3 * h + k];
                let tc = s.tanh_c[k];
                let dc = dh[k] * og * (1.0 - tc * tc) + dc_next[k];
                dpre[k] = dc * gg * ig * (1.0 - ig);
                dpre[h + k] = dc * s.c_prev[k] * fg * (1.0 - fg);
                dpre[2 * h + k] = dc * ig * (1.0 - gg * gg);
                dpre[3 * h + k] = dh[k] * tc * og * (1.0 - og);
                dc_next[k] = dc * fg;
            }
            {
                let (dwx, rest) = param_grads.split_at_mut(o.wh);
                let (dwh, rest) = rest.split_at_mut(o.b - o.wh);
                outer_acc(dwx, &dpre, &s.x);
                outer_acc(dwh, &dpre, &s.h_prev);
                for (d, g) in rest[..4 * h].iter_mut().zip(&dpre) {
                    *d += g;
                }
            }
            matvec_t_acc(&p[o.wx..o.wh], &dpre, &mut input_grads[t]);
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_acc(&p[o.wh..o.b], &dpre, &mut dh_next);
        }
        input_grads
    }

    /// Convenience wrapper returning fresh parameter gradients.
    pub fn backward(&self, cache: &ForwardCache, out_grads: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut grads = vec![0.0; self.params.len()];
        let inputs = self.backward_into(cache, out_grads, &mut grads);
        (grads, inputs)
    }
}
