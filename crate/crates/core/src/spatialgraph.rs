//! Conformer to attributed spatial graph.
//!
//! Edges are the covalent bonds plus every unbonded atom pair closer than
//! the cutoff, so that torsions show up in the edge set. Each edge carries a
//! type one-hot (single, double, aromatic, spatial) followed by a radial
//! basis expansion of its length.

use crate::error::{bail, Result};
use crate::molkit::{distance, BondOrder, Conformer, Element, MolecularGraph};

/// Element order of the node one-hot.
pub const ELEMENT_VOCAB: [Element; 5] = [Element::C, Element::N, Element::F, Element::Cl, Element::O];
pub const EDGE_TYPES: usize = 4;
pub const SPATIAL_EDGE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatConfig {
    pub vocab: Vec<Element>,
    /// Å, strictly increasing
    pub rbf_centers: Vec<f64>,
    /// Å
    pub rbf_gamma: f64,
    /// Å
    pub cutoff: f64,
}

impl Default for FeatConfig {
    fn default() -> Self {
        Self {
            vocab: ELEMENT_VOCAB.to_vec(),
            rbf_centers: (0..8).map(|m| 5.0 * m as f64 / 7.0).collect(),
            rbf_gamma: 0.5,
            cutoff: 4.0,
        }
    }
}

impl FeatConfig {
    pub fn node_dim(&self) -> usize {
        self.vocab.len() + 1
    }

    pub fn edge_dim(&self) -> usize {
        EDGE_TYPES + self.rbf_centers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab.is_empty() || self.rbf_centers.is_empty() {
            bail!(Domain, "empty vocabulary or rbf centers");
        }
        if self.rbf_centers.windows(2).any(|w| !(w[0] < w[1])) {
            bail!(Domain, "rbf centers must be strictly increasing");
        }
        if !(self.rbf_gamma > 0.0 && self.cutoff > 2.0) {
            bail!(Domain, "rbf width must be positive and cutoff above bond lengths");
        }
        Ok(())
    }
}

/// `out[m] = exp(-(d - c_m)^2 / gamma^2)`.
pub fn rbf_expand(d: f64, config: &FeatConfig) -> Vec<f64> {
    let g2 = config.rbf_gamma * config.rbf_gamma;
    config.rbf_centers.iter().map(|c| (-(d - c).powi(2) / g2).exp()).collect()
}

/// Directed graph with edges grouped by target atom.
///
/// Edge `e` carries a message from `src[e]` into `dst[e]`; the edges into
/// atom `i` are `offsets[i]..offsets[i + 1]`, ordered by source.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGraph {
    pub n_nodes: usize,
    pub node_dim: usize,
    pub edge_dim: usize,
    /// `n_nodes * node_dim`, row-major
    pub node_features: Vec<f64>,
    pub src: Vec<usize>,
    pub dst: Vec<usize>,
    /// `n_edges * edge_dim`, row-major
    pub edge_features: Vec<f64>,
    pub offsets: Vec<usize>,
}

impl SpatialGraph {
    pub fn n_edges(&self) -> usize {
        self.src.len()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.node_features[i * self.node_dim..(i + 1) * self.node_dim]
    }

    pub fn edge(&self, e: usize) -> &[f64] {
        &self.edge_features[e * self.edge_dim..(e + 1) * self.edge_dim]
    }

    /// Edge indices pointing into atom `i`.
    pub fn incoming(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Index of the edge `src -> dst`, if present.
    pub fn find_edge(&self, src: usize, dst: usize) -> Option<usize> {
        self.incoming(dst).find(|&e| self.src[e] == src)
    }
}

fn bond_type_index(order: BondOrder) -> usize {
    match order {
        BondOrder::Single => 0,
        BondOrder::Double => 1,
        BondOrder::Aromatic => 2,
    }
}

pub fn featurize(graph: &MolecularGraph, conformer: &Conformer, config: &FeatConfig) -> Result<SpatialGraph> {
    let n = graph.atom_count();
    if conformer.coords.len() != n {
        bail!(Shape, "conformer has {} coordinates for {n} atoms", conformer.coords.len());
    }
    let node_dim = config.node_dim();
    let edge_dim = config.edge_dim();
    let mut node_features = vec![0.0; n * node_dim];
    for (i, atom) in graph.atoms().iter().enumerate() {
        let Some(slot) = config.vocab.iter().position(|e| *e == atom.element) else {
            bail!(Vocabulary, "{}", atom.element.symbol());
        };
        node_features[i * node_dim + slot] = 1.0;
        node_features[i * node_dim + node_dim - 1] = f64::from(u8::from(atom.aromatic));
    }

    // (dst, src, type, length) for both directions of each undirected edge.
    let mut raw = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(conformer.coords[i], conformer.coords[j]);
            let kind = match graph.bond_order(i, j) {
                Some(order) => bond_type_index(order),
                None if d <= config.cutoff => SPATIAL_EDGE,
                None => continue,
            };
            raw.push((i, j, kind, d));
            raw.push((j, i, kind, d));
        }
    }
    raw.sort_by_key(|&(dst, src, _, _)| (dst, src));

    let mut src = Vec::with_capacity(raw.len());
    let mut dst = Vec::with_capacity(raw.len());
    let mut edge_features = Vec::with_capacity(raw.len() * edge_dim);
    let mut offsets = vec![0; n + 1];
    for &(t, s, kind, d) in &raw {
        src.push(s);
        dst.push(t);
        let mut onehot = [0.0; EDGE_TYPES];
        onehot[kind] = 1.0;
        edge_features.extend_from_slice(&onehot);
        edge_features.extend(rbf_expand(d, config));
        offsets[t + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    Ok(SpatialGraph { n_nodes: n, node_dim, edge_dim, node_features, src, dst, edge_features, offsets })
}
