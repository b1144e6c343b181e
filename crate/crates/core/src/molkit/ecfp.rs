//! Morgan-style circular fingerprints over heavy-atom graphs.
//!
//! Round 0 hashes `(atomic number, heavy degree, aromatic)` per atom. Round
//! `r` hashes the round number, the atom's previous identifier, and its
//! neighbors' `(bond code, identifier)` pairs in sorted order, so the result
//! does not depend on atom numbering. Identifiers from all rounds are
//! collected into a set (duplicates collapse) and folded modulo the bit
//! length. The hash is 64-bit FNV-1a over little-endian encodings.

use std::collections::BTreeSet;

use super::graph::MolecularGraph;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    nbits: usize,
    words: Vec<u64>,
}

impl Fingerprint {
    pub fn zeros(nbits: usize) -> Self {
        Self { nbits, words: vec![0; nbits.div_ceil(64)] }
    }

    pub fn len(&self) -> usize {
        self.nbits
    }

    pub fn is_empty(&self) -> bool {
        self.nbits == 0
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.nbits).map(|i| self.get(i)).collect()
    }
}

/// Jaccard similarity of set bits; two empty fingerprints are identical (1.0).
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let inter: u32 = a.words.iter().zip(&b.words).map(|(x, y)| (x & y).count_ones()).sum();
    let union: u32 = a.words.iter().zip(&b.words).map(|(x, y)| (x | y).count_ones()).sum();
    if union == 0 {
        1.0
    } else {
        f64::from(inter) / f64::from(union)
    }
}

/// Deduplicated environment identifiers up to `radius`.
pub fn environment_ids(graph: &MolecularGraph, radius: usize) -> BTreeSet<u64> {
    let n = graph.atom_count();
    let mut ids: Vec<u64> = (0..n)
        .map(|i| {
            let a = graph.atoms()[i];
            fnv1a64(&[a.element.atomic_number(), graph.degree(i) as u8, u8::from(a.aromatic)])
        })
        .collect();
    let mut envs: BTreeSet<u64> = ids.iter().copied().collect();
    let mut buf = Vec::with_capacity(64);
    for round in 1..=radius {
        let next: Vec<u64> = (0..n)
            .map(|i| {
                let mut pairs: Vec<(u8, u64)> =
                    graph.neighbors(i).iter().map(|&(j, o)| (o.code(), ids[j])).collect();
                pairs.sort_unstable();
                buf.clear();
                buf.extend_from_slice(&(round as u32).to_le_bytes());
                buf.extend_from_slice(&ids[i].to_le_bytes());
                for (code, id) in pairs {
                    buf.push(code);
                    buf.extend_from_slice(&id.to_le_bytes());
                }
                fnv1a64(&buf)
            })
            .collect();
        envs.extend(next.iter().copied());
        ids = next;
    }
    envs
}

pub fn ecfp(graph: &MolecularGraph, radius: usize, nbits: usize) -> Fingerprint {
    let mut fp = Fingerprint::zeros(nbits);
    if nbits == 0 {
        return fp;
    }
    for id in environment_ids(graph, radius) {
        fp.set((id % nbits as u64) as usize);
    }
    fp
}
