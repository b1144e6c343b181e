//! Gated recurrent unit with the gate convention
//!
//! ```text
//! r  = sigmoid(W_r x + U_r h + b_r)
//! z  = sigmoid(W_z x + U_z h + b_z)
//! n  = tanh(W_n x + r * (U_n h + b_n))
//! h' = (1 - z) * n + z * h
//! ```
//!
//! Input and hidden widths are equal, so every matrix is `hidden x hidden`.

use super::ops::{dot, matvec, matvec_acc, matvec_t_acc, outer_acc, sigmoid};
use super::ParamStore;
use crate::error::{bail, Result};

/// Per-call cache width in multiples of `hidden`: `[r | z | n | U_n h + b_n]`.
pub const GRU_CACHE_BLOCKS: usize = 4;

const NAMES: [&str; 9] = ["w_r", "u_r", "b_r", "w_z", "u_z", "b_z", "w_n", "u_n", "b_n"];

/// Borrowed GRU weights.
#[derive(Debug, Clone, Copy)]
pub struct GruParams<'a> {
    pub hidden: usize,
    pub w_r: &'a [f64],
    pub u_r: &'a [f64],
    pub b_r: &'a [f64],
    pub w_z: &'a [f64],
    pub u_z: &'a [f64],
    pub b_z: &'a [f64],
    pub w_n: &'a [f64],
    pub u_n: &'a [f64],
    pub b_n: &'a [f64],
}

impl<'a> GruParams<'a> {
    /// Looks up `{prefix}w_r`, `{prefix}u_r`, ... in a store.
    pub fn from_store(store: &'a ParamStore, prefix: &str) -> Result<Self> {
        let mut found: Vec<&'a [f64]> = Vec::with_capacity(9);
        for name in NAMES {
            let key = format!("{prefix}{name}");
            match store.get(&key) {
                Some(t) => found.push(t.data()),
                None => bail!(Shape, "missing GRU parameter {key}"),
            }
        }
        let hidden = found[2].len();
        let p = Self {
            hidden,
            w_r: found[0],
            u_r: found[1],
            b_r: found[2],
            w_z: found[3],
            u_z: found[4],
            b_z: found[5],
            w_n: found[6],
            u_n: found[7],
            b_n: found[8],
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let hh = self.hidden * self.hidden;
        let mats = [self.w_r, self.u_r, self.w_z, self.u_z, self.w_n, self.u_n];
        let biases = [self.b_r, self.b_z, self.b_n];
        if mats.iter().any(|m| m.len() != hh) || biases.iter().any(|b| b.len() != self.hidden) {
            bail!(Shape, "GRU weights inconsistent with hidden size {}", self.hidden);
        }
        Ok(())
    }
}

/// Gradient accumulators mirroring [`GruParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GruGrads {
    pub w_r: Vec<f64>,
    pub u_r: Vec<f64>,
    pub b_r: Vec<f64>,
    pub w_z: Vec<f64>,
    pub u_z: Vec<f64>,
    pub b_z: Vec<f64>,
    pub w_n: Vec<f64>,
    pub u_n: Vec<f64>,
    pub b_n: Vec<f64>,
}

impl GruGrads {
    pub fn zeros(hidden: usize) -> Self {
        let m = || vec![0.0; hidden * hidden];
        let b = || vec![0.0; hidden];
        Self {
            w_r: m(),
            u_r: m(),
            b_r: b(),
            w_z: m(),
            u_z: m(),
            b_z: b(),
            w_n: m(),
            u_n: m(),
            b_n: b(),
        }
    }

    /// Buffers in the canonical `w_r, u_r, b_r, ...` order.
    pub fn buffers(&self) -> [&[f64]; 9] {
        [
            &self.w_r, &self.u_r, &self.b_r, &self.w_z, &self.u_z, &self.b_z, &self.w_n,
            &self.u_n, &self.b_n,
        ]
    }
}

/// Checked single-step GRU.
pub fn gru_cell(x: &[f64], h: &[f64], p: &GruParams<'_>) -> Result<Vec<f64>> {
    p.validate()?;
    if x.len() != p.hidden || h.len() != p.hidden {
        bail!(Shape, "GRU expects inputs of width {}, got x={} h={}", p.hidden, x.len(), h.len());
    }
    let mut out = vec![0.0; p.hidden];
    let mut cache = vec![0.0; GRU_CACHE_BLOCKS * p.hidden];
    gru_forward(x, h, p, &mut out, &mut cache);
    Ok(out)
}

/// Unchecked forward step writing `h'` into `out` and the gate values into
/// `cache` (length `4 * hidden`).
pub fn gru_forward(x: &[f64], h: &[f64], p: &GruParams<'_>, out: &mut [f64], cache: &mut [f64]) {
    let d = p.hidden;
    let (r, rest) = cache.split_at_mut(d);
    let (z, rest) = rest.split_at_mut(d);
    let (n, q) = rest.split_at_mut(d);

    r.copy_from_slice(p.b_r);
    matvec_acc(p.w_r, d, d, x, r);
    matvec_acc(p.u_r, d, d, h, r);
    z.copy_from_slice(p.b_z);
    matvec_acc(p.w_z, d, d, x, z);
    matvec_acc(p.u_z, d, d, h, z);
    matvec(p.u_n, d, d, h, q);
    for (qi, bi) in q.iter_mut().zip(p.b_n) {
        *qi += bi;
    }
    for k in 0..d {
        r[k] = sigmoid(r[k]);
        z[k] = sigmoid(z[k]);
        n[k] = dot(&p.w_n[k * d..(k + 1) * d], x) + r[k] * q[k];
        n[k] = n[k].tanh();
        out[k] = (1.0 - z[k]) * n[k] + z[k] * h[k];
    }
}

/// Backward step. Accumulates parameter gradients into `grads` and input
/// gradients into `dx` and `dh` (both `+=`).
#[allow(clippy::too_many_arguments)]
pub fn gru_backward(
    x: &[f64],
    h: &[f64],
    p: &GruParams<'_>,
    cache: &[f64],
    dh_out: &[f64],
    grads: &mut GruGrads,
    dx: &mut [f64],
    dh: &mut [f64],
    scratch: &mut [f64],
) {
    let d = p.hidden;
    let (r, rest) = cache.split_at(d);
    let (z, rest) = rest.split_at(d);
    let (n, q) = rest.split_at(d);
    let (da_r, rest) = scratch.split_at_mut(d);
    let (da_z, rest) = rest.split_at_mut(d);
    let (da_n, dq) = rest.split_at_mut(d);

    for k in 0..d {
        let g = dh_out[k];
        let dn = g * (1.0 - z[k]);
        let dz = g * (h[k] - n[k]);
        dh[k] += g * z[k];
        da_n[k] = dn * (1.0 - n[k] * n[k]);
        let dr = da_n[k] * q[k];
        dq[k] = da_n[k] * r[k];
        da_z[k] = dz * z[k] * (1.0 - z[k]);
        da_r[k] = dr * r[k] * (1.0 - r[k]);
    }

    outer_acc(&mut grads.w_n, da_n, x);
    matvec_t_acc(p.w_n, d, d, da_n, dx);
    outer_acc(&mut grads.u_n, dq, h);
    matvec_t_acc(p.u_n, d, d, dq, dh);
    add_into(&mut grads.b_n, dq);

    outer_acc(&mut grads.w_z, da_z, x);
    outer_acc(&mut grads.u_z, da_z, h);
    add_into(&mut grads.b_z, da_z);
    matvec_t_acc(p.w_z, d, d, da_z, dx);
    matvec_t_acc(p.u_z, d, d, da_z, dh);

    outer_acc(&mut grads.w_r, da_r, x);
    outer_acc(&mut grads.u_r, da_r, h);
    add_into(&mut grads.b_r, da_r);
    matvec_t_acc(p.w_r, d, d, da_r, dx);
    matvec_t_acc(p.u_r, d, d, da_r, dh);
}

#[inline]
fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}
