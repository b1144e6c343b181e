//! Random forest of CART trees over binary fingerprint features.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::molkit::Fingerprint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RFConfig {
    pub n_trees: usize,
    /// Non-constant features examined per split.
    pub max_features: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RFConfig {
    fn default() -> Self {
        Self { n_trees: 100, max_features: 11, bootstrap: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { positive_fraction: f64 },
    /// Samples with the bit clear go left.
    Split { feature: usize, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Positive fraction of the leaf `fp` falls into.
    pub fn leaf_fraction(&self, fp: &Fingerprint) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { positive_fraction } => return positive_fraction,
                Node::Split { feature, left, right } => at = if fp.get(feature) { right } else { left },
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub nbits: usize,
    pub trees: Vec<Tree>,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Builder<'a> {
    x: &'a [Fingerprint],
    y: &'a [bool],
    max_features: usize,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, samples: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        let n = samples.len();
        let pos = samples.iter().filter(|&&i| self.y[i]).count();
        self.nodes.push(Node::Leaf { positive_fraction: pos as f64 / n as f64 });
        if pos == 0 || pos == n || n < 2 {
            return id;
        }
        let nbits = self.x[samples[0]].len();
        let mut features: Vec<usize> = (0..nbits).collect();
        features.shuffle(rng);
        let mut best: Option<(f64, usize)> = None;
        let mut examined = 0;
        for f in features {
            if examined == self.max_features {
                break;
            }
            let (mut n_right, mut pos_right) = (0, 0);
            for &i in &samples {
                if self.x[i].get(f) {
                    n_right += 1;
                    pos_right += usize::from(self.y[i]);
                }
            }
            if n_right == 0 || n_right == n {
                continue;
            }
            examined += 1;
            let n_left = n - n_right;
            let score = n_left as f64 * gini(pos - pos_right, n_left) + n_right as f64 * gini(pos_right, n_right);
            if best.map_or(true, |(s, _)| score < s) {
                best = Some((score, f));
            }
        }
        let Some((_, feature)) = best else { return id };
        let (right, left): (Vec<usize>, Vec<usize>) = samples.into_iter().partition(|&i| self.x[i].get(feature));
        let l = self.grow(left, rng);
        let r = self.grow(right, rng);
        self.nodes[id] = Node::Split { feature, left: l, right: r };
        id
    }
}

fn check_inputs(x: &[Fingerprint], y: &[bool]) -> Result<usize> {
    if x.is_empty() {
        bail!(Domain, "random forest needs at least one training sample");
    }
    if x.len() != y.len() {
        bail!(Shape, "{} fingerprints but {} labels", x.len(), y.len());
    }
    let nbits = x[0].len();
    if x.iter().any(|f| f.len() != nbits) {
        bail!(Shape, "fingerprints differ in length");
    }
    Ok(nbits)
}

pub fn rf_train(x: &[Fingerprint], y: &[bool], config: &RFConfig) -> Result<RandomForest> {
    let nbits = check_inputs(x, y)?;
    if config.n_trees == 0 || config.max_features == 0 {
        bail!(Domain, "forest needs at least one tree and one feature per split");
    }
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let samples: Vec<usize> = if config.bootstrap {
                (0..x.len()).map(|_| rng.gen_range(0..x.len())).collect()
            } else {
                (0..x.len()).collect()
            };
            let mut b = Builder { x, y, max_features: config.max_features, nodes: Vec::new() };
            b.grow(samples, &mut rng);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(RandomForest { nbits, trees })
}

/// Mean over trees of the leaf positive fraction.
pub fn rf_predict(forest: &RandomForest, fp: &Fingerprint) -> Result<f64> {
    if fp.len() != forest.nbits {
        bail!(Shape, "fingerprint has {} bits, forest expects {}", fp.len(), forest.nbits);
    }
    let sum: f64 = forest.trees.iter().map(|t| t.leaf_fraction(fp)).sum();
    Ok(sum / forest.trees.len() as f64)
}
