use super::geometry::{dihedral, Point};
use super::graph::MolecularGraph;
use crate::error::{bail, Result};

/// A conformer is a key instance when `|motif torsion|` is strictly below this.
pub const KEY_DIHEDRAL_MAX_DEG: f64 = 1.0;

/// Upper bound on conformers per molecule.
pub const MAX_CONFORMERS: usize = 30;

/// One 3D geometry of a molecule.
///
/// `instance_label` is ground truth for evaluation only; nothing in the
/// training path reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct Conformer {
    pub coords: Vec<Point>,
    /// Surrogate strain energy, kcal/mol.
    pub energy: f64,
    pub instance_label: bool,
}

/// A molecule as a set of conformers with one bag-level label.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformerBag {
    pub id: usize,
    pub graph: MolecularGraph,
    pub conformers: Vec<Conformer>,
    pub bag_label: bool,
}

impl ConformerBag {
    pub fn len(&self) -> usize {
        self.conformers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conformers.is_empty()
    }

    /// Checks conformer count, coordinate counts, finiteness, and that the
    /// stored labels agree with the torsions measured from coordinates.
    pub fn validate(&self) -> Result<()> {
        if self.conformers.is_empty() || self.conformers.len() > MAX_CONFORMERS {
            bail!(Integrity, "bag {} has {} conformers", self.id, self.conformers.len());
        }
        let mut any = false;
        for (k, c) in self.conformers.iter().enumerate() {
            if c.coords.len() != self.graph.atom_count() {
                bail!(Integrity, "bag {} conformer {k}: coordinate count mismatch", self.id);
            }
            if !c.energy.is_finite() || c.coords.iter().flatten().any(|v| !v.is_finite()) {
                bail!(Integrity, "bag {} conformer {k}: non-finite values", self.id);
            }
            let key = is_key_instance(c, &self.graph)?;
            if key != c.instance_label {
                bail!(Integrity, "bag {} conformer {k}: instance label disagrees with torsion", self.id);
            }
            any |= key;
        }
        if any != self.bag_label {
            bail!(Integrity, "bag {}: bag label is not the OR of instance labels", self.id);
        }
        Ok(())
    }
}

/// Signed N–C–C–N torsion of a conformer, degrees.
pub fn motif_dihedral(coords: &[Point], graph: &MolecularGraph) -> Result<f64> {
    if coords.len() != graph.atom_count() {
        bail!(Shape, "{} coordinates for {} atoms", coords.len(), graph.atom_count());
    }
    let [a, b, c, d] = graph.motif();
    dihedral(coords[a], coords[b], coords[c], coords[d])
}

pub fn is_key_instance(conformer: &Conformer, graph: &MolecularGraph) -> Result<bool> {
    Ok(motif_dihedral(&conformer.coords, graph)?.abs() < KEY_DIHEDRAL_MAX_DEG)
}

/// Recomputes every instance label from geometry and sets the bag label to
/// their OR. Returns the bag label.
pub fn label_bag(bag: &mut ConformerBag) -> Result<bool> {
    if bag.conformers.is_empty() {
        bail!(Domain, "bag {} has no conformers", bag.id);
    }
    let mut any = false;
    for c in &mut bag.conformers {
        c.instance_label = is_key_instance(c, &bag.graph)?;
        any |= c.instance_label;
    }
    bag.bag_label = any;
    Ok(any)
}
