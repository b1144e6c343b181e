//! Finite-difference check of the full model on small synthetic bags.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{backward_bag, bag_loss, forward_bag};
use super::params::{init_params, ModelDims, ModelView, HEAD_W};
use crate::error::Result;
use crate::numkern::{grad_check, GradCheckOptions, GradCheckReport, ParamStore};
use crate::spatialgraph::SpatialGraph;

/// Bag sizes cycled through by [`check_model`].
pub const CHECK_BAG_SIZES: [usize; 3] = [1, 2, 5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelCheckConfig {
    pub seed: u64,
    pub bags: usize,
    pub param_seeds: usize,
    pub coords_per_tensor: usize,
    /// Coarse central-difference step; differences are extrapolated.
    pub eps: f64,
    /// Relative-error denominator floor.
    pub floor: f64,
    /// Test hook: adds 1.0 to one analytic gradient entry before comparing.
    pub corrupt_gradient: bool,
}

impl Default for ModelCheckConfig {
    fn default() -> Self {
        Self { seed: 0, bags: 10, param_seeds: 25, coords_per_tensor: 20, eps: 1e-4, floor: 1e-6, corrupt_gradient: false }
    }
}

/// Random connected graph with `n` atoms, one-hot node features and dense
/// edge features in `[0, 1)`.
pub fn synthetic_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, dims: &ModelDims) -> SpatialGraph {
    let mut node_features = vec![0.0; n * dims.node_dim];
    for i in 0..n {
        node_features[i * dims.node_dim + rng.gen_range(0..dims.node_dim.max(2) - 1)] = 1.0;
        node_features[i * dims.node_dim + dims.node_dim - 1] = f64::from(rng.gen_range(0..2u8));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || rng.gen_bool(0.5) {
                let f: Vec<f64> = (0..dims.edge_dim).map(|_| rng.gen::<f64>()).collect();
                edges.push((i, j, f.clone()));
                edges.push((j, i, f));
            }
        }
    }
    edges.sort_by_key(|(dst, src, _)| (*dst, *src));
    let mut offsets = vec![0; n + 1];
    let (mut src, mut dst, mut edge_features) = (Vec::new(), Vec::new(), Vec::new());
    for (t, s, f) in edges {
        src.push(s);
        dst.push(t);
        edge_features.extend(f);
        offsets[t + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    SpatialGraph { n_nodes: n, node_dim: dims.node_dim, edge_dim: dims.edge_dim, node_features, src, dst, edge_features, offsets }
}

/// `k` synthetic conformer graphs of 4 to 6 atoms.
pub fn synthetic_bag<R: Rng + ?Sized>(rng: &mut R, k: usize, dims: &ModelDims) -> Vec<SpatialGraph> {
    (0..k)
        .map(|_| {
            let n = rng.gen_range(4..=6);
            synthetic_graph(rng, n, dims)
        })
        .collect()
}

/// Initialised parameters plus uniform noise in `[-0.1, 0.1)`, so biases are
/// nonzero and every path carries signal.
pub fn jittered_params(dims: &ModelDims, seed: u64) -> Result<ParamStore> {
    let mut p = init_params(dims, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for (_, t) in p.iter_mut() {
        for v in t.data_mut() {
            *v += rng.gen_range(-0.1..0.1);
        }
    }
    Ok(p)
}

/// Gradient check of one bag at one label.
pub fn check_bag(
    dims: &ModelDims,
    params: &ParamStore,
    bag: &[SpatialGraph],
    label: bool,
    opts: &GradCheckOptions,
    corrupt_gradient: bool,
) -> Result<GradCheckReport> {
    let view = ModelView::new(dims, params)?;
    let cache = forward_bag(&view, bag)?;
    let mut grads = params.zeros_like();
    backward_bag(&view, bag, &cache, label, &mut grads)?;
    if corrupt_gradient {
        grads.at_mut(HEAD_W).data_mut()[0] += 1.0;
    }
    let mut failure = None;
    let loss = |q: &ParamStore| {
        let v = ModelView::new(dims, q).and_then(|v| bag_loss(&v, bag, label));
        v.unwrap_or_else(|e| {
            failure.get_or_insert(e);
            f64::NAN
        })
    };
    let report = grad_check(loss, params, &grads, opts);
    if let Some(e) = failure {
        return Err(e);
    }
    report
}

/// Worst relative error over `param_seeds` parameter draws times `bags`
/// synthetic bags (sizes cycle through [`CHECK_BAG_SIZES`], labels alternate).
pub fn check_model(dims: &ModelDims, config: &ModelCheckConfig) -> Result<GradCheckReport> {
    let mut worst = GradCheckReport { max_rel_error: 0.0, worst: None, checked: 0 };
    for s in 0..config.param_seeds as u64 {
        let params = jittered_params(dims, config.seed.wrapping_add(s))?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(s));
        rng.set_stream(1);
        for b in 0..config.bags {
            let bag = synthetic_bag(&mut rng, CHECK_BAG_SIZES[b % CHECK_BAG_SIZES.len()], dims);
            let opts = GradCheckOptions {
                max_coords_per_tensor: Some(config.coords_per_tensor),
                seed: config.seed.wrapping_add(s * 1000 + b as u64),
                eps: config.eps,
                extrapolate: true,
                floor: config.floor,
            };
            let r = check_bag(dims, &params, &bag, b % 2 == 0, &opts, config.corrupt_gradient)?;
            worst.checked += r.checked;
            if worst.worst.is_none() || r.max_rel_error > worst.max_rel_error {
                worst.max_rel_error = r.max_rel_error;
                worst.worst = r.worst;
            }
        }
    }
    Ok(worst)
}
