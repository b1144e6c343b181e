use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    C,
    N,
    O,
    F,
    Cl,
}

impl Element {
    pub fn symbol(self) -> &'static str {
        match self {
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::Cl => "Cl",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "F" => Element::F,
            "Cl" => Element::Cl,
            _ => return None,
        })
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::Cl => 17,
        }
    }

    /// Standard atomic weight, g/mol.
    pub fn mass(self) -> f64 {
        match self {
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
            Element::Cl => 35.45,
        }
    }

    fn valence(self) -> u32 {
        match self {
            Element::C => 4,
            Element::N => 3,
            Element::O => 2,
            Element::F | Element::Cl => 1,
        }
    }
}

pub const HYDROGEN_MASS: f64 = 1.008;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BondOrder {
    Single,
    Double,
    Aromatic,
}

impl BondOrder {
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Aromatic => 4,
        }
    }

    /// Bond order in half-units (aromatic = 3, i.e. 1.5).
    fn half_units(self) -> u32 {
        match self {
            BondOrder::Single => 2,
            BondOrder::Double => 4,
            BondOrder::Aromatic => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

/// Connected heavy-atom graph with a marked N–C–C–N torsion motif.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    motif: [usize; 4],
    adjacency: Vec<Vec<(usize, BondOrder)>>,
}

impl MolecularGraph {
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>, motif: [usize; 4]) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            bail!(Domain, "molecule has no atoms");
        }
        let mut adjacency = vec![Vec::new(); n];
        for (k, bond) in bonds.iter().enumerate() {
            if bond.a >= n || bond.b >= n || bond.a == bond.b {
                bail!(Domain, "bond {k} ({}, {}) is invalid for {n} atoms", bond.a, bond.b);
            }
            if adjacency[bond.a].iter().any(|&(j, _)| j == bond.b) {
                bail!(Domain, "duplicate bond between {} and {}", bond.a, bond.b);
            }
            adjacency[bond.a].push((bond.b, bond.order));
            adjacency[bond.b].push((bond.a, bond.order));
        }
        let graph = Self { atoms, bonds, motif, adjacency };
        if !graph.is_connected() {
            bail!(Domain, "molecular graph is disconnected");
        }
        if motif.iter().any(|&i| i >= n) {
            bail!(Domain, "motif index out of range");
        }
        let expected = [Element::N, Element::C, Element::C, Element::N];
        for (k, &i) in motif.iter().enumerate() {
            if graph.atoms[i].element != expected[k] {
                bail!(Domain, "motif atom {k} must be {}", expected[k].symbol());
            }
        }
        for w in motif.windows(2) {
            if graph.bond_order(w[0], w[1]).is_none() {
                bail!(Domain, "motif atoms {} and {} are not bonded", w[0], w[1]);
            }
        }
        Ok(graph)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn motif(&self) -> [usize; 4] {
        self.motif
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, BondOrder)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn bond_order(&self, i: usize, j: usize) -> Option<BondOrder> {
        self.adjacency[i].iter().find(|&&(k, _)| k == j).map(|&(_, o)| o)
    }

    fn is_connected(&self) -> bool {
        self.reachable(0, None).iter().all(|&r| r)
    }

    fn reachable(&self, start: usize, skip_bond: Option<(usize, usize)>) -> Vec<bool> {
        let mut seen = vec![false; self.atoms.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.adjacency[i] {
                if let Some((a, b)) = skip_bond {
                    if (i == a && j == b) || (i == b && j == a) {
                        continue;
                    }
                }
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }

    /// True when the bond lies on a cycle.
    pub fn is_ring_bond(&self, bond: &Bond) -> bool {
        self.reachable(bond.a, Some((bond.a, bond.b)))[bond.b]
    }

    /// Torsionally sampled bonds: acyclic single bonds joining two ring atoms
    /// (the biaryl axis). Substituent rotors are not counted.
    pub fn rotatable_bond_count(&self) -> usize {
        let in_ring: Vec<bool> = (0..self.atoms.len())
            .map(|i| self.bonds.iter().any(|b| (b.a == i || b.b == i) && self.is_ring_bond(b)))
            .collect();
        self.bonds
            .iter()
            .filter(|b| b.order == BondOrder::Single && !self.is_ring_bond(b))
            .filter(|b| in_ring[b.a] && in_ring[b.b])
            .count()
    }

    /// Hydrogens needed to fill the default valence.
    pub fn implicit_hydrogens(&self, i: usize) -> u32 {
        let used: u32 = self.adjacency[i].iter().map(|&(_, o)| o.half_units()).sum();
        let valence = 2 * self.atoms[i].element.valence();
        valence.saturating_sub(used) / 2
    }

    pub fn molecular_weight(&self) -> f64 {
        (0..self.atoms.len())
            .map(|i| self.atoms[i].element.mass() + self.implicit_hydrogens(i) as f64 * HYDROGEN_MASS)
            .sum()
    }

    /// Relabels atoms so that old atom `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.atoms.len();
        let mut check = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut check[p], true)) {
            bail!(Domain, "not a permutation of {n} atoms");
        }
        let mut atoms = self.atoms.clone();
        for (old, &new) in perm.iter().enumerate() {
            atoms[new] = self.atoms[old];
        }
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond { a: perm[b.a], b: perm[b.b], order: b.order })
            .collect();
        Self::new(atoms, bonds, self.motif.map(|i| perm[i]))
    }
}
