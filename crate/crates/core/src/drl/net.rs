//! Q-function approximators with hand-rolled backpropagation over a single
//! flat `f64` parameter vector (which keeps SGD, norm clipping, soft target
//! updates, and checkpointing trivial).
//!
//! Three shapes share one interface:
//! * feedforward over the concatenated observation window,
//! * the dueling variant — shared trunk, scalar value head, advantage head,
//!   combined as `Q = V + (A - mean(A))`,
//! * an optional gated-recurrent front end that runs over the window's
//!   steps from a zero initial state (backpropagation through time is
//!   truncated at the window boundary by construction).
//!
//! Layout is row-major `W` then `b` per dense block; the recurrent block
//! stores update/reset/candidate gates in that order. Gradient correctness
//! is pinned by central-finite-difference tests.

use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arch {
    Feedforward,
    Dueling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub obs_dim: usize,
    /// Observation history length; the network input is the concatenation
    /// of the last `window` observations (zero-padded at episode start).
    pub window: usize,
    pub hidden: Vec<usize>,
    pub outputs: usize,
    pub arch: Arch,
    /// Recurrent front end consuming the window step by step.
    pub gru: bool,
}

impl NetSpec {
    pub fn input_len(&self) -> usize {
        self.obs_dim * self.window
    }

    pub fn validate(&self) -> Result<()> {
        if self.obs_dim == 0 || self.window == 0 || self.outputs == 0 {
            return Err(Error::Config("network dimensions must be positive".into()));
        }
        if self.hidden.contains(&0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        if self.gru && self.hidden.is_empty() {
            return Err(Error::Config(
                "recurrent mode needs at least one hidden width (the state size)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct DenseShape {
    inp: usize,
    out: usize,
    w: usize,
    b: usize,
}

#[derive(Debug, Clone, Copy)]
struct GruShape {
    inp: usize,
    h: usize,
    // Offsets: input weights, recurrent weights, bias for each gate.
    wz: usize,
    uz: usize,
    bz: usize,
    wr: usize,
    ur: usize,
    br: usize,
    wh: usize,
    uh: usize,
    bh: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    gru: Option<GruShape>,
    trunk: Vec<DenseShape>,
    /// Final linear layer (feedforward) or the two dueling heads.
    out: Option<DenseShape>,
    value: Option<DenseShape>,
    adv: Option<DenseShape>,
    total: usize,
}

fn take(off: &mut usize, len: usize) -> usize {
    let o = *off;
    *off += len;
    o
}

fn take_dense(off: &mut usize, inp: usize, out: usize) -> DenseShape {
    let w = take(off, inp * out);
    let b = take(off, out);
    DenseShape { inp, out, w, b }
}

fn layout(spec: &NetSpec) -> Layout {
    let mut off = 0usize;
    let gru = if spec.gru {
        let inp = spec.obs_dim;
        let h = spec.hidden[0];
        Some(GruShape {
            inp,
            h,
            wz: take(&mut off, h * inp),
            uz: take(&mut off, h * h),
            bz: take(&mut off, h),
            wr: take(&mut off, h * inp),
            ur: take(&mut off, h * h),
            br: take(&mut off, h),
            wh: take(&mut off, h * inp),
            uh: take(&mut off, h * h),
            bh: take(&mut off, h),
        })
    } else {
        None
    };
    let (start, rest): (usize, &[usize]) = if spec.gru {
        (spec.hidden[0], &spec.hidden[1..])
    } else {
        (spec.input_len(), &spec.hidden[..])
    };
    let mut trunk = Vec::new();
    let mut dim = start;
    for &hdim in rest {
        trunk.push(take_dense(&mut off, dim, hdim));
        dim = hdim;
    }
    let (out, value, adv) = match spec.arch {
        Arch::Feedforward => (Some(take_dense(&mut off, dim, spec.outputs)), None, None),
        Arch::Dueling => {
            let v = take_dense(&mut off, dim, 1);
            let a = take_dense(&mut off, dim, spec.outputs);
            (None, Some(v), Some(a))
        }
    };
    Layout { gru, trunk, out, value, adv, total: off }
}

/// One Q-network: spec plus flat parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNet {
    pub spec: NetSpec,
    pub params: Vec<f64>,
}

struct GruStep {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    hh: Vec<f64>,
}

/// Forward-pass activations kept for backpropagation. The dueling heads are
/// linear, so their layer inputs (the trunk output) are all backprop needs.
pub struct ForwardCache {
    gru_steps: Vec<GruStep>,
    /// `acts[0]` is the trunk input; `acts[i+1]` the post-activation output
    /// of trunk layer `i`.
    acts: Vec<Vec<f64>>,
    pub q: Vec<f64>,
}

fn dense_forward(params: &[f64], s: &DenseShape, x: &[f64], relu: bool) -> Vec<f64> {
    let mut out = vec![0.0; s.out];
    for (j, o) in out.iter_mut().enumerate() {
        let row = &params[s.w + j * s.inp..s.w + (j + 1) * s.inp];
        let mut acc = params[s.b + j];
        for (wi, xi) in row.iter().zip(x) {
            acc += wi * xi;
        }
        *o = if relu { acc.max(0.0) } else { acc };
    }
    out
}

/// dOut -> accumulate parameter grads, return dX.
fn dense_backward(
    params: &[f64],
    grad: &mut [f64],
    s: &DenseShape,
    x: &[f64],
    d_out: &[f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; s.inp];
    for (j, dj) in d_out.iter().enumerate() {
        grad[s.b + j] += dj;
        let w_row = &params[s.w + j * s.inp..s.w + (j + 1) * s.inp];
        let g_row = &mut grad[s.w + j * s.inp..s.w + (j + 1) * s.inp];
        for i in 0..s.inp {
            g_row[i] += dj * x[i];
            dx[i] += w_row[i] * dj;
        }
    }
    dx
}

fn matvec(params: &[f64], off: usize, rows: usize, cols: usize, x: &[f64], acc: &mut [f64]) {
    for j in 0..rows {
        let row = &params[off + j * cols..off + (j + 1) * cols];
        let mut s = 0.0;
        for (wi, xi) in row.iter().zip(x) {
            s += wi * xi;
        }
        acc[j] += s;
    }
}

/// grad += d ⊗ x at a matrix block, and dx += W^T d.
fn mat_backward(
    params: &[f64],
    grad: &mut [f64],
    off: usize,
    cols: usize,
    x: &[f64],
    d: &[f64],
    dx: Option<&mut Vec<f64>>,
) {
    for (j, dj) in d.iter().enumerate() {
        let g_row = &mut grad[off + j * cols..off + (j + 1) * cols];
        for i in 0..cols {
            g_row[i] += dj * x[i];
        }
    }
    if let Some(dx) = dx {
        for (j, dj) in d.iter().enumerate() {
            let w_row = &params[off + j * cols..off + (j + 1) * cols];
            for i in 0..cols {
                dx[i] += w_row[i] * dj;
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `Q_a = V + (A_a - mean(A))`, so the state value is shared and the
/// advantages are identifiable (they average to zero across actions).
pub fn dueling_combine(value: f64, adv: &[f64]) -> Vec<f64> {
    assert!(!adv.is_empty(), "advantage vector must be non-empty");
    let mean = adv.iter().sum::<f64>() / adv.len() as f64;
    adv.iter().map(|a| value + a - mean).collect()
}

impl QNet {
    /// Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
    pub fn new(spec: NetSpec, rng: &mut impl Rng) -> Result<QNet> {
        spec.validate()?;
        let lay = layout(&spec);
        let mut params = vec![0.0; lay.total];
        fn init_dense(params: &mut [f64], s: &DenseShape, rng: &mut impl Rng) {
            let bound = 1.0 / (s.inp as f64).sqrt();
            for p in params[s.w..s.b + s.out].iter_mut() {
                let u: f64 = rng.gen();
                *p = (2.0 * u - 1.0) * bound;
            }
        }
        if let Some(g) = &lay.gru {
            let bound_in = 1.0 / (g.inp as f64).sqrt();
            let bound_h = 1.0 / (g.h as f64).sqrt();
            let blocks = [
                (g.wz, g.h * g.inp, bound_in),
                (g.uz, g.h * g.h, bound_h),
                (g.bz, g.h, bound_h),
                (g.wr, g.h * g.inp, bound_in),
                (g.ur, g.h * g.h, bound_h),
                (g.br, g.h, bound_h),
                (g.wh, g.h * g.inp, bound_in),
                (g.uh, g.h * g.h, bound_h),
                (g.bh, g.h, bound_h),
            ];
            for (off, len, bound) in blocks {
                for p in params[off..off + len].iter_mut() {
                    let u: f64 = rng.gen();
                    *p = (2.0 * u - 1.0) * bound;
                }
            }
        }
        for s in &lay.trunk {
            init_dense(&mut params, s, rng);
        }
        for s in [&lay.out, &lay.value, &lay.adv].into_iter().flatten() {
            init_dense(&mut params, s, rng);
        }
        Ok(QNet { spec, params })
    }

    pub fn zeros(spec: NetSpec) -> Result<QNet> {
        spec.validate()?;
        let total = layout(&spec).total;
        Ok(QNet { spec, params: vec![0.0; total] })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(input)?.q)
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache> {
        if input.len() != self.spec.input_len() {
            return Err(Error::Training(format!(
                "input length {} does not match {} (= {} obs x {} window)",
                input.len(),
                self.spec.input_len(),
                self.spec.obs_dim,
                self.spec.window
            )));
        }
        let lay = layout(&self.spec);
        let p = &self.params;
        let mut gru_steps = Vec::new();
        let trunk_input: Vec<f64> = match &lay.gru {
            None => input.to_vec(),
            Some(g) => {
                let mut h = vec![0.0; g.h];
                for t in 0..self.spec.window {
                    let x = input[t * g.inp..(t + 1) * g.inp].to_vec();
                    let h_prev = h.clone();
                    let mut pre_z: Vec<f64> = p[g.bz..g.bz + g.h].to_vec();
                    matvec(p, g.wz, g.h, g.inp, &x, &mut pre_z);
                    matvec(p, g.uz, g.h, g.h, &h_prev, &mut pre_z);
                    let z: Vec<f64> = pre_z.iter().map(|&v| sigmoid(v)).collect();
                    let mut pre_r: Vec<f64> = p[g.br..g.br + g.h].to_vec();
                    matvec(p, g.wr, g.h, g.inp, &x, &mut pre_r);
                    matvec(p, g.ur, g.h, g.h, &h_prev, &mut pre_r);
                    let r: Vec<f64> = pre_r.iter().map(|&v| sigmoid(v)).collect();
                    let rh: Vec<f64> = r.iter().zip(&h_prev).map(|(a, b)| a * b).collect();
                    let mut pre_h: Vec<f64> = p[g.bh..g.bh + g.h].to_vec();
                    matvec(p, g.wh, g.h, g.inp, &x, &mut pre_h);
                    matvec(p, g.uh, g.h, g.h, &rh, &mut pre_h);
                    let hh: Vec<f64> = pre_h.iter().map(|v| v.tanh()).collect();
                    h = (0..g.h)
                        .map(|i| (1.0 - z[i]) * h_prev[i] + z[i] * hh[i])
                        .collect();
                    gru_steps.push(GruStep { x, h_prev, z, r, hh });
                }
                h
            }
        };
        let mut acts = vec![trunk_input];
        for s in &lay.trunk {
            let next = dense_forward(p, s, acts.last().expect("nonempty"), true);
            acts.push(next);
        }
        let top = acts.last().expect("nonempty").clone();
        let q = match self.spec.arch {
            Arch::Feedforward => {
                let out_shape = lay.out.expect("feedforward has an output layer");
                dense_forward(p, &out_shape, &top, false)
            }
            Arch::Dueling => {
                let v = dense_forward(p, &lay.value.expect("dueling"), &top, false)[0];
                let a = dense_forward(p, &lay.adv.expect("dueling"), &top, false);
                dueling_combine(v, &a)
            }
        };
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training("non-finite Q-values in forward pass".into()));
        }
        Ok(ForwardCache { gru_steps, acts, q })
    }

    /// Accumulate d(loss)/d(params) into `grad`, given d(loss)/d(Q).
    pub fn backward(&self, cache: &ForwardCache, dq: &[f64], grad: &mut [f64]) {
        assert_eq!(dq.len(), self.spec.outputs);
        assert_eq!(grad.len(), self.params.len());
        let lay = layout(&self.spec);
        let p = &self.params;
        let top = cache.acts.last().expect("nonempty");
        // Head gradients down to the trunk output.
        let mut d_top = match self.spec.arch {
            Arch::Feedforward => {
                dense_backward(p, grad, &lay.out.expect("ff"), top, dq)
            }
            Arch::Dueling => {
                // Q_a = V + A_a - mean(A):
                // dV = sum(dq); dA_a = dq_a - mean(dq).
                let n = dq.len() as f64;
                let sum: f64 = dq.iter().sum();
                let d_v = [sum];
                let d_a: Vec<f64> = dq.iter().map(|d| d - sum / n).collect();
                let mut dx = dense_backward(p, grad, &lay.value.expect("dueling"), top, &d_v);
                let dx2 = dense_backward(p, grad, &lay.adv.expect("dueling"), top, &d_a);
                for (a, b) in dx.iter_mut().zip(dx2) {
                    *a += b;
                }
                dx
            }
        };
        // Trunk (ReLU) layers in reverse.
        for (i, s) in lay.trunk.iter().enumerate().rev() {
            let out = &cache.acts[i + 1];
            let masked: Vec<f64> = d_top
                .iter()
                .zip(out)
                .map(|(d, o)| if *o > 0.0 { *d } else { 0.0 })
                .collect();
            d_top = dense_backward(p, grad, s, &cache.acts[i], &masked);
        }
        // Recurrent front end: BPTT across the window.
        if let Some(g) = &lay.gru {
            let mut dh = d_top;
            for step in cache.gru_steps.iter().rev() {
                let dz: Vec<f64> = (0..g.h)
                    .map(|i| dh[i] * (step.hh[i] - step.h_prev[i]) * step.z[i] * (1.0 - step.z[i]))
                    .collect();
                let dpre_h: Vec<f64> = (0..g.h)
                    .map(|i| dh[i] * step.z[i] * (1.0 - step.hh[i] * step.hh[i]))
                    .collect();
                let mut dh_prev: Vec<f64> =
                    (0..g.h).map(|i| dh[i] * (1.0 - step.z[i])).collect();
                // Candidate gate.
                let rh: Vec<f64> =
                    step.r.iter().zip(&step.h_prev).map(|(a, b)| a * b).collect();
                mat_backward(p, grad, g.wh, g.inp, &step.x, &dpre_h, None);
                let mut d_rh = vec![0.0; g.h];
                mat_backward(p, grad, g.uh, g.h, &rh, &dpre_h, Some(&mut d_rh));
                for i in 0..g.h {
                    grad[g.bh + i] += dpre_h[i];
                }
                let dpre_r: Vec<f64> = (0..g.h)
                    .map(|i| d_rh[i] * step.h_prev[i] * step.r[i] * (1.0 - step.r[i]))
                    .collect();
                for i in 0..g.h {
                    dh_prev[i] += d_rh[i] * step.r[i];
                }
                // Reset gate.
                mat_backward(p, grad, g.wr, g.inp, &step.x, &dpre_r, None);
                mat_backward(p, grad, g.ur, g.h, &step.h_prev, &dpre_r, Some(&mut dh_prev));
                for i in 0..g.h {
                    grad[g.br + i] += dpre_r[i];
                }
                // Update gate.
                mat_backward(p, grad, g.wz, g.inp, &step.x, &dz, None);
                mat_backward(p, grad, g.uz, g.h, &step.h_prev, &dz, Some(&mut dh_prev));
                for i in 0..g.h {
                    grad[g.bz + i] += dz[i];
                }
                dh = dh_prev;
            }
        }
    }
}

/// `target <- psi * source + (1 - psi) * target`, elementwise.
pub fn soft_update(source: &QNet, target: &mut QNet, psi: f64) -> Result<()> {
    if source.spec != target.spec || source.params.len() != target.params.len() {
        return Err(Error::Training(
            "soft update requires identically shaped networks".into(),
        ));
    }
    for (t, s) in target.params.iter_mut().zip(&source.params) {
        *t = psi * s + (1.0 - psi) * *t;
    }
    Ok(())
}
