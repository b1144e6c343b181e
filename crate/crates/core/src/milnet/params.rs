use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::numkern::{GruParams, ParamStore, Tensor};

/// Layer widths of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub node_dim: usize,
    pub edge_dim: usize,
    pub hidden: usize,
    pub attention: usize,
    /// Message passing rounds.
    pub iterations: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self { node_dim: 6, edge_dim: 12, hidden: 16, attention: 128, iterations: 3 }
    }
}

pub const EMBED: usize = 0;
pub const EDGE_W: usize = 1;
pub const EDGE_B: usize = 2;
/// First of the nine GRU tensors.
pub const GRU: usize = 3;
pub const ATTN_V: usize = 12;
pub const ATTN_W: usize = 13;
pub const HEAD_W: usize = 14;
pub const HEAD_B: usize = 15;
pub const PARAM_COUNT: usize = 16;

pub(crate) const GRU_PREFIX: &str = "gru.";

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        let d = [self.node_dim, self.edge_dim, self.hidden, self.attention, self.iterations];
        if d.contains(&0) {
            bail!(Shape, "model dimensions must be positive: {self:?}");
        }
        Ok(())
    }

    /// Name, shape, and `(fan_in, fan_out)` of every tensor; `None` marks a bias.
    pub fn param_specs(&self) -> Vec<(String, Vec<usize>, Option<(usize, usize)>)> {
        let h = self.hidden;
        let mut specs = vec![
            ("embed.weight".to_string(), vec![h, self.node_dim], Some((self.node_dim, h))),
            ("edge.weight".to_string(), vec![h * h, self.edge_dim], Some((self.edge_dim, h * h))),
            ("edge.bias".to_string(), vec![h * h], None),
        ];
        for gate in ["r", "z", "n"] {
            specs.push((format!("{GRU_PREFIX}w_{gate}"), vec![h, h], Some((h, h))));
            specs.push((format!("{GRU_PREFIX}u_{gate}"), vec![h, h], Some((h, h))));
            specs.push((format!("{GRU_PREFIX}b_{gate}"), vec![h], None));
        }
        specs.push(("attn.v".to_string(), vec![self.attention, h], Some((h, self.attention))));
        specs.push(("attn.w".to_string(), vec![self.attention], Some((self.attention, 1))));
        specs.push(("head.weight".to_string(), vec![h], Some((h, 1))));
        specs.push(("head.bias".to_string(), vec![1], None));
        specs
    }

    /// Checks that a store has exactly this model's tensors, in order.
    pub fn check_params(&self, params: &ParamStore) -> Result<()> {
        self.validate()?;
        let specs = self.param_specs();
        if params.len() != specs.len() {
            bail!(Shape, "expected {} parameter tensors, found {}", specs.len(), params.len());
        }
        for (i, (name, shape, _)) in specs.iter().enumerate() {
            if params.name_at(i) != name || params.at(i).shape() != shape.as_slice() {
                bail!(
                    Shape,
                    "parameter {i}: expected {name} {shape:?}, found {} {:?}",
                    params.name_at(i),
                    params.at(i).shape()
                );
            }
        }
        Ok(())
    }

    pub fn zero_params(&self) -> ParamStore {
        let mut store = ParamStore::new();
        for (name, shape, _) in self.param_specs() {
            // Names come from a fixed unique list.
            let _ = store.insert(name, Tensor::zeros(shape));
        }
        store
    }
}

/// Glorot-uniform weights and zero biases, reproducible per seed.
///
/// Each tensor draws from its own stream, so changing one shape leaves the
/// others untouched.
pub fn init_params(dims: &ModelDims, seed: u64) -> Result<ParamStore> {
    dims.validate()?;
    let mut store = dims.zero_params();
    for (i, (_, _, fans)) in dims.param_specs().into_iter().enumerate() {
        let Some((fan_in, fan_out)) = fans else { continue };
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for v in store.at_mut(i).data_mut() {
            *v = dist.sample(&mut rng);
        }
    }
    Ok(store)
}

/// Borrowed, shape-checked view of the parameters.
#[derive(Debug, Clone, Copy)]
pub struct ModelView<'a> {
    pub dims: ModelDims,
    pub embed: &'a [f64],
    pub edge_w: &'a [f64],
    pub edge_b: &'a [f64],
    pub gru: GruParams<'a>,
    pub attn_v: &'a [f64],
    pub attn_w: &'a [f64],
    pub head_w: &'a [f64],
    pub head_b: f64,
}

impl<'a> ModelView<'a> {
    pub fn new(dims: &ModelDims, params: &'a ParamStore) -> Result<Self> {
        dims.check_params(params)?;
        Ok(Self {
            dims: *dims,
            embed: params.at(EMBED).data(),
            edge_w: params.at(EDGE_W).data(),
            edge_b: params.at(EDGE_B).data(),
            gru: GruParams::from_store(params, GRU_PREFIX)?,
            attn_v: params.at(ATTN_V).data(),
            attn_w: params.at(ATTN_W).data(),
            head_w: params.at(HEAD_W).data(),
            head_b: params.at(HEAD_B).data()[0],
        })
    }
}
