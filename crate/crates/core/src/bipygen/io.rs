//! Dataset file: JSON lines. The first line is a header, every further line
//! is one molecule with its conformers.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::dataset::{BagMeta, Dataset, DatasetStats, GeneratorConfig};
use crate::error::{bail, Result};
use crate::molkit::{Atom, Bond, BondOrder, Conformer, ConformerBag, Element, MolecularGraph, Point};
use crate::provenance::Provenance;

pub const DATASET_FORMAT: &str = "confmil-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub tool: String,
    pub command: String,
    pub seeds: Vec<(String, u64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub attempt: u32,
    pub generator: GeneratorConfig,
    pub stats: DatasetStats,
}

#[derive(Serialize, Deserialize)]
struct ConformerRecord {
    coords: Vec<Point>,
    energy: f64,
    instance_label: u8,
}

#[derive(Serialize, Deserialize)]
struct BagRecord {
    id: usize,
    atoms: Vec<(String, bool)>,
    bonds: Vec<(usize, usize, BondOrder)>,
    motif: [usize; 4],
    conformers: Vec<ConformerRecord>,
    bag_label: u8,
    meta: BagMeta,
}

/// A dataset read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub header: DatasetHeader,
    pub bags: Vec<ConformerBag>,
    pub meta: Vec<BagMeta>,
}

/// Rounds to 9 significant digits so the text form is short and stable.
fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn to_record(bag: &ConformerBag, meta: &BagMeta) -> BagRecord {
    BagRecord {
        id: bag.id,
        atoms: bag.graph.atoms().iter().map(|a| (a.element.symbol().to_string(), a.aromatic)).collect(),
        bonds: bag.graph.bonds().iter().map(|b| (b.a, b.b, b.order)).collect(),
        motif: bag.graph.motif(),
        conformers: bag
            .conformers
            .iter()
            .map(|c| ConformerRecord {
                coords: c.coords.iter().map(|p| p.map(round_sig)).collect(),
                energy: round_sig(c.energy),
                instance_label: c.instance_label as u8,
            })
            .collect(),
        bag_label: bag.bag_label as u8,
        meta: BagMeta { spec: meta.spec.clone(), s_steric: round_sig(meta.s_steric) },
    }
}

fn flag(v: u8, what: &str, line: usize) -> Result<bool> {
    match v {
        0 => Ok(false),
        1 => Ok(true),
        _ => bail!(Format, "line {line}: {what} must be 0 or 1, got {v}"),
    }
}

fn from_record(r: BagRecord, line: usize) -> Result<(ConformerBag, BagMeta)> {
    let atoms = r
        .atoms
        .iter()
        .map(|(sym, aromatic)| match Element::from_symbol(sym) {
            Some(element) => Ok(Atom { element, aromatic: *aromatic }),
            None => bail!(Format, "line {line}: unknown element {sym:?}"),
        })
        .collect::<Result<Vec<_>>>()?;
    let bonds = r.bonds.iter().map(|&(a, b, order)| Bond { a, b, order }).collect();
    let graph = MolecularGraph::new(atoms, bonds, r.motif)
        .map_err(|e| crate::Error::Format(format!("line {line}: {e}")))?;
    let conformers = r
        .conformers
        .into_iter()
        .map(|c| {
            Ok(Conformer {
                coords: c.coords,
                energy: c.energy,
                instance_label: flag(c.instance_label, "instance_label", line)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bag = ConformerBag { id: r.id, graph, conformers, bag_label: flag(r.bag_label, "bag_label", line)? };
    bag.validate().map_err(|e| match e {
        crate::Error::Integrity(m) => crate::Error::Integrity(format!("line {line}: {m}")),
        other => other,
    })?;
    Ok((bag, r.meta))
}

pub fn header_for(dataset: &Dataset, prov: &Provenance) -> DatasetHeader {
    DatasetHeader {
        format: DATASET_FORMAT.to_string(),
        version: DATASET_VERSION,
        tool: prov.tool.clone(),
        command: prov.command.clone(),
        seeds: prov.seeds.clone(),
        timestamp: prov.timestamp,
        attempt: dataset.attempt,
        generator: dataset.config.clone(),
        stats: dataset.stats.clone(),
    }
}

fn json_err(e: serde_json::Error) -> crate::Error {
    crate::Error::Format(e.to_string())
}

pub fn write_dataset<W: Write>(mut out: W, dataset: &Dataset, prov: &Provenance) -> Result<()> {
    serde_json::to_writer(&mut out, &header_for(dataset, prov)).map_err(json_err)?;
    out.write_all(b"\n")?;
    for (bag, meta) in dataset.bags.iter().zip(&dataset.meta) {
        serde_json::to_writer(&mut out, &to_record(bag, meta)).map_err(json_err)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<LoadedDataset> {
    let mut lines = input.lines().enumerate();
    let header_line = match lines.next() {
        Some((_, line)) => line?,
        None => bail!(Format, "empty dataset file"),
    };
    let raw: serde_json::Value =
        serde_json::from_str(&header_line).map_err(|e| crate::Error::Format(format!("header: {e}")))?;
    if raw.get("format").and_then(|v| v.as_str()) != Some(DATASET_FORMAT) {
        bail!(Format, "not a {DATASET_FORMAT} file");
    }
    let version = raw.get("version").and_then(|v| v.as_u64());
    if version != Some(DATASET_VERSION as u64) {
        bail!(Compatibility, "dataset version {version:?} is not supported (expected {DATASET_VERSION})");
    }
    let header: DatasetHeader =
        serde_json::from_value(raw).map_err(|e| crate::Error::Format(format!("header: {e}")))?;
    let mut bags = Vec::new();
    let mut meta = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: BagRecord =
            serde_json::from_str(&line).map_err(|e| crate::Error::Format(format!("line {}: {e}", i + 1)))?;
        let (bag, m) = from_record(record, i + 1)?;
        bags.push(bag);
        meta.push(m);
    }
    if bags.is_empty() {
        bail!(Format, "dataset holds no molecules");
    }
    Ok(LoadedDataset { header, bags, meta })
}
