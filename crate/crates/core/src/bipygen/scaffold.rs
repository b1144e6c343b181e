//! Biaryl scaffold enumeration.
//!
//! Atom numbering is fixed: ring A occupies atoms 0..6 and ring B atoms
//! 6..12, each listed by ring position (0 = ipso carbon on the inter-ring
//! bond, 1 = ring nitrogen, 2..=5 = carbons, 5 being the second ortho
//! position). Fused templates add two bridge atoms (12, 13); substituent
//! atoms follow in site order.

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::molkit::{Atom, Bond, BondOrder, Element, MolecularGraph};

pub const RING_SIZE: usize = 6;
/// Substitutable ring positions per ring (positions 2, 3, 4, 5).
pub const SITES_PER_RING: usize = 4;
pub const SITE_COUNT: usize = 2 * SITES_PER_RING;
/// Site indices of the ortho carbons (position 5 of each ring).
pub const ORTHO_SITES: [usize; 2] = [3, 7];

/// Cis-clash height with no ortho substituent (ring-nitrogen lone pairs).
pub const BASE_STERIC: f64 = 0.5;
pub const MAX_STERIC: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    /// Free biaryl axis, no ortho substituents.
    Plain,
    /// Free biaryl axis with at least one ortho substituent.
    OrthoSubstituted,
    /// Two-atom bridge between the ortho carbons locks the N–C–C–N torsion at 0°.
    FusedRigidCis,
    /// Two-atom bridge from ring-A nitrogen to ring-B ortho carbon locks it at 180°.
    FusedRigidTrans,
}

impl Template {
    pub const ALL: [Template; 4] =
        [Template::Plain, Template::OrthoSubstituted, Template::FusedRigidCis, Template::FusedRigidTrans];

    pub fn is_rigid(self) -> bool {
        self.fixed_dihedral().is_some()
    }

    /// The only torsion a rigid template can adopt.
    pub fn fixed_dihedral(self) -> Option<f64> {
        match self {
            Template::FusedRigidCis => Some(0.0),
            Template::FusedRigidTrans => Some(180.0),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Template::Plain => "plain",
            Template::OrthoSubstituted => "ortho-substituted",
            Template::FusedRigidCis => "fused-rigid-cis",
            Template::FusedRigidTrans => "fused-rigid-trans",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Substituent {
    #[serde(rename = "none")]
    None,
    C1,
    C2,
    F,
    Cl,
    O,
}

impl Substituent {
    pub const CHOICES: [Substituent; 5] =
        [Substituent::C1, Substituent::C2, Substituent::F, Substituent::Cl, Substituent::O];

    /// Heavy atoms, outward from the ring.
    pub fn atoms(self) -> &'static [Element] {
        match self {
            Substituent::None => &[],
            Substituent::C1 => &[Element::C],
            Substituent::C2 => &[Element::C, Element::C],
            Substituent::F => &[Element::F],
            Substituent::Cl => &[Element::Cl],
            Substituent::O => &[Element::O],
        }
    }

    /// Added cis-clash height (kcal/mol) when sitting on an ortho carbon.
    pub fn steric_bulk(self) -> f64 {
        match self {
            Substituent::None => 0.0,
            Substituent::F => 4.5,
            Substituent::O => 4.8,
            Substituent::C1 => 5.0,
            Substituent::Cl => 5.2,
            Substituent::C2 => 5.5,
        }
    }
}

/// Ring index (0 = A, 1 = B) and ring position of a substituent site.
pub fn site_position(site: usize) -> (usize, usize) {
    (site / SITES_PER_RING, 2 + site % SITES_PER_RING)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScaffoldSpec {
    pub template: Template,
    pub substituents: [Substituent; SITE_COUNT],
}

impl ScaffoldSpec {
    pub fn bare(template: Template) -> Self {
        Self { template, substituents: [Substituent::None; SITE_COUNT] }
    }

    pub fn with(mut self, site: usize, sub: Substituent) -> Self {
        self.substituents[site] = sub;
        self
    }

    pub fn is_rigid(&self) -> bool {
        self.template.is_rigid()
    }

    pub fn validate(&self) -> Result<()> {
        let ortho_used = ORTHO_SITES.iter().filter(|&&s| self.substituents[s] != Substituent::None).count();
        match self.template {
            Template::OrthoSubstituted if ortho_used == 0 => {
                bail!(Spec, "ortho-substituted template without an ortho substituent")
            }
            Template::OrthoSubstituted => Ok(()),
            t if ortho_used > 0 => bail!(Spec, "template {} does not allow ortho substituents", t.name()),
            _ => Ok(()),
        }
    }

    /// Height of the cis-clash Gaussian for this scaffold.
    pub fn steric_height(&self) -> f64 {
        let bulk: f64 = ORTHO_SITES.iter().map(|&s| self.substituents[s].steric_bulk()).sum();
        (BASE_STERIC + bulk).min(MAX_STERIC)
    }

    pub fn heavy_atom_count(&self) -> usize {
        let core = if self.is_rigid() { 14 } else { 12 };
        core + self.substituents.iter().map(|s| s.atoms().len()).sum::<usize>()
    }
}

/// Where a substituent atom hangs off the scaffold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubstituentAtom {
    pub atom: usize,
    /// Ring atom the substituent is attached to.
    pub anchor: usize,
    /// 1 for the atom bonded to the ring, 2 for the next one out.
    pub depth: usize,
}

/// A molecular graph together with the layout needed to embed it in 3D.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaffold {
    pub spec: ScaffoldSpec,
    pub graph: MolecularGraph,
    /// Bridge atoms and their ring anchors (`[anchor_a, anchor_b]`, `[atom_a, atom_b]`).
    pub bridge: Option<([usize; 2], [usize; 2])>,
    pub substituent_atoms: Vec<SubstituentAtom>,
}

pub fn ring_atom(ring: usize, position: usize) -> usize {
    ring * RING_SIZE + position
}

/// Builds the heavy-atom graph for a scaffold spec.
pub fn enumerate_scaffold(spec: &ScaffoldSpec) -> Result<MolecularGraph> {
    Ok(build_scaffold(spec)?.graph)
}

pub fn build_scaffold(spec: &ScaffoldSpec) -> Result<Scaffold> {
    spec.validate()?;
    let aromatic = |element| Atom { element, aromatic: true };
    let mut atoms = Vec::with_capacity(32);
    let mut bonds = Vec::with_capacity(36);
    for ring in 0..2 {
        for pos in 0..RING_SIZE {
            atoms.push(aromatic(if pos == 1 { Element::N } else { Element::C }));
        }
        for pos in 0..RING_SIZE {
            bonds.push(Bond {
                a: ring_atom(ring, pos),
                b: ring_atom(ring, (pos + 1) % RING_SIZE),
                order: BondOrder::Aromatic,
            });
        }
    }
    bonds.push(Bond { a: ring_atom(0, 0), b: ring_atom(1, 0), order: BondOrder::Single });

    let bridge_anchors = match spec.template {
        Template::FusedRigidCis => Some([ring_atom(0, 5), ring_atom(1, 5)]),
        Template::FusedRigidTrans => Some([ring_atom(0, 1), ring_atom(1, 5)]),
        _ => None,
    };
    let bridge = bridge_anchors.map(|anchors| {
        let first = atoms.len();
        atoms.push(aromatic(Element::C));
        atoms.push(aromatic(Element::C));
        let ar = BondOrder::Aromatic;
        bonds.push(Bond { a: anchors[0], b: first, order: ar });
        bonds.push(Bond { a: first, b: first + 1, order: ar });
        bonds.push(Bond { a: first + 1, b: anchors[1], order: ar });
        (anchors, [first, first + 1])
    });

    let mut substituent_atoms = Vec::new();
    for (site, sub) in spec.substituents.iter().enumerate() {
        let (ring, pos) = site_position(site);
        let anchor = ring_atom(ring, pos);
        let mut prev = anchor;
        for (depth, &element) in sub.atoms().iter().enumerate() {
            let atom = atoms.len();
            atoms.push(Atom { element, aromatic: false });
            bonds.push(Bond { a: prev, b: atom, order: BondOrder::Single });
            substituent_atoms.push(SubstituentAtom { atom, anchor, depth: depth + 1 });
            prev = atom;
        }
    }

    let motif = [ring_atom(0, 1), ring_atom(0, 0), ring_atom(1, 0), ring_atom(1, 1)];
    let graph = MolecularGraph::new(atoms, bonds, motif)?;
    Ok(Scaffold { spec: spec.clone(), graph, bridge, substituent_atoms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molkit::{ecfp, tanimoto};

    #[test]
    fn plain_bipyridine() {
        // Two six-membered rings joined by one bond: 6 + 6 heavy atoms.
        let g = enumerate_scaffold(&ScaffoldSpec::bare(Template::Plain)).unwrap();
        assert_eq!(g.atom_count(), 12);
        assert_eq!(g.bonds().len(), 13);
        assert_eq!(g.motif(), [1, 0, 6, 7]);
        assert_eq!(g.rotatable_bond_count(), 1);
        // C10H8N2
        let mw = 10.0 * 12.011 + 2.0 * 14.007 + 8.0 * 1.008;
        assert!((g.molecular_weight() - mw).abs() < 1e-9);
    }

    #[test]
    fn two_methyls_add_two_atoms() {
        let spec = ScaffoldSpec::bare(Template::Plain).with(1, Substituent::C1).with(5, Substituent::C1);
        assert_eq!(enumerate_scaffold(&spec).unwrap().atom_count(), 14);
        assert_eq!(spec.heavy_atom_count(), 14);
    }

    #[test]
    fn rigid_templates_have_no_rotatable_bond() {
        for t in [Template::FusedRigidCis, Template::FusedRigidTrans] {
            let g = enumerate_scaffold(&ScaffoldSpec::bare(t)).unwrap();
            assert_eq!(g.rotatable_bond_count(), 0, "{}", t.name());
            assert_eq!(g.atom_count(), 14);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(matches!(
            enumerate_scaffold(&ScaffoldSpec::bare(Template::OrthoSubstituted)),
            Err(crate::Error::Spec(_))
        ));
        let spec = ScaffoldSpec::bare(Template::Plain).with(ORTHO_SITES[0], Substituent::F);
        assert!(matches!(enumerate_scaffold(&spec), Err(crate::Error::Spec(_))));
        let spec = ScaffoldSpec::bare(Template::FusedRigidCis).with(ORTHO_SITES[1], Substituent::C1);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn steric_height_tracks_ortho_bulk() {
        assert_eq!(ScaffoldSpec::bare(Template::Plain).steric_height(), BASE_STERIC);
        let spec = ScaffoldSpec::bare(Template::OrthoSubstituted)
            .with(ORTHO_SITES[0], Substituent::C2)
            .with(ORTHO_SITES[1], Substituent::C2);
        assert_eq!(spec.steric_height(), MAX_STERIC);
        let single = ScaffoldSpec::bare(Template::OrthoSubstituted).with(ORTHO_SITES[0], Substituent::F);
        assert_eq!(single.steric_height(), BASE_STERIC + 4.5);
        let meta = ScaffoldSpec::bare(Template::Plain).with(1, Substituent::C2);
        assert_eq!(meta.steric_height(), BASE_STERIC);
    }

    #[test]
    fn one_substituent_lowers_similarity() {
        let plain = enumerate_scaffold(&ScaffoldSpec::bare(Template::Plain)).unwrap();
        let methyl =
            enumerate_scaffold(&ScaffoldSpec::bare(Template::Plain).with(1, Substituent::C1)).unwrap();
        let a = ecfp(&plain, 2, 128);
        let b = ecfp(&methyl, 2, 128);
        assert!(tanimoto(&a, &b) < 1.0);
        assert_eq!(tanimoto(&a, &a), 1.0);
    }
}
