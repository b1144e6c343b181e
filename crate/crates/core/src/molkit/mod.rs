//! Molecular graphs, 3D geometry, the key-instance labeling rule, and
//! circular fingerprints.

mod ecfp;
mod geometry;
mod graph;
mod label;

pub use ecfp::{ecfp, environment_ids, fnv1a64, tanimoto, Fingerprint};
pub use geometry::{dihedral, distance, Point};
pub use graph::{Atom, Bond, BondOrder, Element, MolecularGraph};
pub use label::{
    is_key_instance, label_bag, motif_dihedral, Conformer, ConformerBag, KEY_DIHEDRAL_MAX_DEG,
    MAX_CONFORMERS,
};
