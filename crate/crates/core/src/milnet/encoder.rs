//! Edge-conditioned message passing with GRU updates.
//!
//! The message into atom `i` is `sum_j A(e_ij) h_j` with
//! `A(e) = reshape(W e + b)`. Writing `s_i[c, k] = sum_j h_j[c] e_ij[k]` and
//! `g_i = sum_j h_j`, it equals `W' s_i + B' g_i` where `W'` is `edge.weight`
//! viewed as `hidden x (hidden * edge_dim)` and `B'` is `edge.bias` viewed
//! as `hidden x hidden`, so no per-edge matrix is ever formed.

use super::params::ModelView;
use crate::error::{bail, Result};
use crate::numkern::{gru_backward, gru_forward, matvec, matvec_acc, matvec_t_acc, outer_acc, GruGrads, GRU_CACHE_BLOCKS};
use crate::spatialgraph::SpatialGraph;

/// Intermediates of one conformer's forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderCache {
    n_nodes: usize,
    n_edges: usize,
    /// `(iterations + 1) * n * hidden`
    states: Vec<f64>,
    /// `iterations * n * hidden * edge_dim`
    s: Vec<f64>,
    /// `iterations * n * hidden`
    g: Vec<f64>,
    /// `iterations * n * hidden`
    msg: Vec<f64>,
    /// `iterations * n * 4 * hidden`
    gates: Vec<f64>,
}

/// Gradients of the encoder parameters for one or more conformers.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGrads {
    pub embed: Vec<f64>,
    pub edge_w: Vec<f64>,
    pub edge_b: Vec<f64>,
    pub gru: GruGrads,
}

impl EncoderGrads {
    pub fn zeros(view: &ModelView<'_>) -> Self {
        Self {
            embed: vec![0.0; view.embed.len()],
            edge_w: vec![0.0; view.edge_w.len()],
            edge_b: vec![0.0; view.edge_b.len()],
            gru: GruGrads::zeros(view.dims.hidden),
        }
    }
}

fn check_graph(sg: &SpatialGraph, view: &ModelView<'_>) -> Result<()> {
    let d = &view.dims;
    if sg.node_dim != d.node_dim || sg.edge_dim != d.edge_dim {
        bail!(
            Shape,
            "graph features ({}, {}) do not match model ({}, {})",
            sg.node_dim,
            sg.edge_dim,
            d.node_dim,
            d.edge_dim
        );
    }
    if sg.n_nodes == 0 {
        bail!(Shape, "graph has no atoms");
    }
    Ok(())
}

/// Conformer embedding: the sum of atom states after the last round.
pub fn encode_conformer(sg: &SpatialGraph, view: &ModelView<'_>) -> Result<(Vec<f64>, EncoderCache)> {
    check_graph(sg, view)?;
    let h = view.dims.hidden;
    let de = view.dims.edge_dim;
    let hd = h * de;
    let rounds = view.dims.iterations;
    let n = sg.n_nodes;
    let mut cache = EncoderCache {
        n_nodes: n,
        n_edges: sg.n_edges(),
        states: vec![0.0; (rounds + 1) * n * h],
        s: vec![0.0; rounds * n * hd],
        g: vec![0.0; rounds * n * h],
        msg: vec![0.0; rounds * n * h],
        gates: vec![0.0; rounds * n * GRU_CACHE_BLOCKS * h],
    };
    for i in 0..n {
        matvec(view.embed, h, view.dims.node_dim, sg.node(i), &mut cache.states[i * h..(i + 1) * h]);
    }
    for t in 0..rounds {
        let (done, rest) = cache.states.split_at_mut((t + 1) * n * h);
        let cur = &done[t * n * h..];
        let next = &mut rest[..n * h];
        for i in 0..n {
            let s = &mut cache.s[(t * n + i) * hd..(t * n + i + 1) * hd];
            let g = &mut cache.g[(t * n + i) * h..(t * n + i + 1) * h];
            for e in sg.incoming(i) {
                let hj = &cur[sg.src[e] * h..(sg.src[e] + 1) * h];
                let ef = sg.edge(e);
                for (c, &hc) in hj.iter().enumerate() {
                    g[c] += hc;
                    for (sk, ek) in s[c * de..(c + 1) * de].iter_mut().zip(ef) {
                        *sk += hc * ek;
                    }
                }
            }
            let m = &mut cache.msg[(t * n + i) * h..(t * n + i + 1) * h];
            matvec(view.edge_w, h, hd, s, m);
            matvec_acc(view.edge_b, h, h, g, m);
            let gates = &mut cache.gates[(t * n + i) * 4 * h..(t * n + i + 1) * 4 * h];
            gru_forward(m, &cur[i * h..(i + 1) * h], &view.gru, &mut next[i * h..(i + 1) * h], gates);
        }
    }
    let last = &cache.states[rounds * n * h..];
    let mut emb = vec![0.0; h];
    for row in last.chunks_exact(h) {
        for (a, b) in emb.iter_mut().zip(row) {
            *a += b;
        }
    }
    Ok((emb, cache))
}

/// Accumulates encoder gradients given `d_emb = dL/d(embedding)`.
pub fn encode_backward(
    sg: &SpatialGraph,
    view: &ModelView<'_>,
    cache: &EncoderCache,
    d_emb: &[f64],
    grads: &mut EncoderGrads,
) -> Result<()> {
    check_graph(sg, view)?;
    if cache.n_nodes != sg.n_nodes || cache.n_edges != sg.n_edges() {
        bail!(State, "encoder cache was produced for a different graph");
    }
    let h = view.dims.hidden;
    let de = view.dims.edge_dim;
    let hd = h * de;
    let rounds = view.dims.iterations;
    let n = sg.n_nodes;
    if d_emb.len() != h {
        bail!(Shape, "embedding gradient has length {}, expected {h}", d_emb.len());
    }

    let mut dh_next: Vec<f64> = d_emb.iter().copied().cycle().take(n * h).collect();
    let mut dh_cur = vec![0.0; n * h];
    let mut dm = vec![0.0; h];
    let mut ds = vec![0.0; hd];
    let mut ds_t = vec![0.0; hd];
    let mut dg = vec![0.0; h];
    let mut scratch = vec![0.0; GRU_CACHE_BLOCKS * h];
    for t in (0..rounds).rev() {
        let cur = &cache.states[t * n * h..(t + 1) * n * h];
        dh_cur.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let m = &cache.msg[(t * n + i) * h..(t * n + i + 1) * h];
            let gates = &cache.gates[(t * n + i) * 4 * h..(t * n + i + 1) * 4 * h];
            dm.iter_mut().for_each(|v| *v = 0.0);
            gru_backward(
                m,
                &cur[i * h..(i + 1) * h],
                &view.gru,
                gates,
                &dh_next[i * h..(i + 1) * h],
                &mut grads.gru,
                &mut dm,
                &mut dh_cur[i * h..(i + 1) * h],
                &mut scratch,
            );
            let s = &cache.s[(t * n + i) * hd..(t * n + i + 1) * hd];
            let g = &cache.g[(t * n + i) * h..(t * n + i + 1) * h];
            outer_acc(&mut grads.edge_w, &dm, s);
            outer_acc(&mut grads.edge_b, &dm, g);
            ds.iter_mut().for_each(|v| *v = 0.0);
            dg.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_acc(view.edge_w, h, hd, &dm, &mut ds);
            matvec_t_acc(view.edge_b, h, h, &dm, &mut dg);
            // k-major copy so the per-edge loop runs over contiguous channels.
            for c in 0..h {
                for k in 0..de {
                    ds_t[k * h + c] = ds[c * de + k];
                }
            }
            for e in sg.incoming(i) {
                let j = sg.src[e];
                let dhj = &mut dh_cur[j * h..(j + 1) * h];
                for (a, b) in dhj.iter_mut().zip(&dg) {
                    *a += b;
                }
                for (k, &ek) in sg.edge(e).iter().enumerate() {
                    if ek == 0.0 {
                        continue;
                    }
                    for (a, b) in dhj.iter_mut().zip(&ds_t[k * h..(k + 1) * h]) {
                        *a += ek * b;
                    }
                }
            }
        }
        std::mem::swap(&mut dh_next, &mut dh_cur);
    }
    for i in 0..n {
        outer_acc(&mut grads.embed, &dh_next[i * h..(i + 1) * h], sg.node(i));
    }
    Ok(())
}
