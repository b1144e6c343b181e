//! Synthetic bipyridine conformer-ensemble dataset generator.

mod dataset;
mod embed;
mod io;
mod sample;
mod scaffold;
mod torsion;

pub use dataset::{
    generate_dataset, generate_molecule, molecule_rng, random_spec, BagMeta, Dataset, DatasetStats,
    GeneratorConfig, PropertyStats, TemplateWeights,
};
pub use embed::{embed_conformer, AROMATIC_BOND, BRIDGE_BOND, INTER_RING_BOND, SUBSTITUENT_BOND};
pub use io::{header_for, read_dataset, write_dataset, DatasetHeader, LoadedDataset, DATASET_FORMAT, DATASET_VERSION};
pub use sample::{
    boltzmann_weights, dedupe_bin, draw_without_replacement, relax_on_grid, sample_ensemble, sample_torsions,
    torsion_grid, SamplingConfig,
};
pub use scaffold::{
    build_scaffold, enumerate_scaffold, ring_atom, site_position, Scaffold, ScaffoldSpec, Substituent,
    SubstituentAtom, Template, BASE_STERIC, MAX_STERIC, ORTHO_SITES, SITE_COUNT,
};
pub use torsion::{torsion_energy, TorsionPotential};
