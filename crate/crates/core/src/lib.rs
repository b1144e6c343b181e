//! Multiple-instance learning on conformer ensembles.
//!
//! Each molecule is a bag of 3D conformers carrying a single binary label.
//! Conformers are encoded as spatial graphs by an edge-conditioned message
//! passing network with GRU updates, pooled into one bag embedding by
//! softmax attention, and classified by a logistic head. The attention
//! weights double as a ranking of conformers, which is scored against the
//! hidden per-conformer labels.
//!
//! Modules, bottom-up:
//!
//! - [`numkern`]: tensors, parameter stores, GRU cell, Adam, gradient checking
//! - [`molkit`]: molecular graphs, dihedrals, labeling rule, circular fingerprints
//! - [`bipygen`]: synthetic bipyridine dataset generator and file format
//! - [`spatialgraph`]: conformer to attributed graph featurization
//! - [`milnet`]: the network, forward and analytic backward passes, checkpoints
//! - [`trainer`]: splits, mini-batch training, early stopping
//! - [`evalsuite`]: metrics, key-instance retrieval, baselines

pub mod bipygen;
pub mod error;
pub mod evalsuite;
pub mod milnet;
pub mod molkit;
pub mod numkern;
pub mod provenance;
pub mod spatialgraph;
pub mod trainer;

pub use error::{Error, Result};

/// Version string stamped into every output file header.
pub const TOOL_VERSION: &str = concat!("confmil ", env!("CARGO_PKG_VERSION"));
