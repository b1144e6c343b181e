use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample::{sample_ensemble, SamplingConfig};
use super::scaffold::{
    build_scaffold, site_position, ScaffoldSpec, Substituent, Template, ORTHO_SITES, SITE_COUNT,
};
use super::torsion::TorsionPotential;
use crate::error::{bail, Result};
use crate::molkit::{ConformerBag, MAX_CONFORMERS};

/// Relative frequency of each scaffold template.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemplateWeights {
    pub plain: f64,
    pub ortho_substituted: f64,
    pub fused_rigid_cis: f64,
    pub fused_rigid_trans: f64,
}

impl Default for TemplateWeights {
    fn default() -> Self {
        Self { plain: 0.41, ortho_substituted: 0.58, fused_rigid_cis: 0.005, fused_rigid_trans: 0.005 }
    }
}

impl TemplateWeights {
    fn pairs(&self) -> [(Template, f64); 4] {
        [
            (Template::Plain, self.plain),
            (Template::OrthoSubstituted, self.ortho_substituted),
            (Template::FusedRigidCis, self.fused_rigid_cis),
            (Template::FusedRigidTrans, self.fused_rigid_trans),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_molecules: usize,
    pub max_conformers: usize,
    /// kcal/mol
    pub kt: f64,
    /// degrees
    pub grid_step: f64,
    /// degrees
    pub dedupe_bin: f64,
    /// Downhill grid steps applied to each drawn torsion.
    pub relax_steps: usize,
    /// kcal/mol
    pub k_planar: f64,
    /// degrees
    pub w_steric: f64,
    pub templates: TemplateWeights,
    /// Chance that a non-ortho ring position carries a substituent.
    pub substitution_prob: f64,
    /// Chance that an ortho-substituted scaffold is substituted on both rings.
    pub double_ortho_prob: f64,
    /// Accepted range of the positive fraction, inclusive.
    pub balance_window: (f64, f64),
    /// Full regenerations tried before giving up on the balance window.
    pub max_attempts: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_molecules: 1157,
            max_conformers: MAX_CONFORMERS,
            kt: 0.6,
            grid_step: 2.0,
            dedupe_bin: 5.0,
            relax_steps: 5,
            k_planar: 5.0,
            w_steric: 30.0,
            templates: TemplateWeights::default(),
            substitution_prob: 0.35,
            double_ortho_prob: 0.3,
            balance_window: (0.25, 0.45),
            max_attempts: 10,
        }
    }
}

impl GeneratorConfig {
    pub fn sampling(&self) -> SamplingConfig {
        SamplingConfig {
            max_conformers: self.max_conformers,
            kt: self.kt,
            grid_step: self.grid_step,
            dedupe_bin: self.dedupe_bin,
            relax_steps: self.relax_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sampling().validate()?;
        if self.n_molecules == 0 {
            bail!(Domain, "n_molecules must be positive");
        }
        let pot = TorsionPotential { k_planar: self.k_planar, s_steric: 0.0, w_steric: self.w_steric };
        if !pot.is_valid() {
            bail!(Domain, "torsion coefficients must be nonnegative with positive width");
        }
        let w = self.templates.pairs();
        if w.iter().any(|(_, x)| !(x.is_finite() && *x >= 0.0)) || w.iter().all(|(_, x)| *x == 0.0) {
            bail!(Domain, "template weights must be nonnegative and not all zero");
        }
        for p in [self.substitution_prob, self.double_ortho_prob] {
            if !(0.0..=1.0).contains(&p) {
                bail!(Domain, "probability {p} outside [0, 1]");
            }
        }
        let (lo, hi) = self.balance_window;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            bail!(Domain, "balance window ({lo}, {hi}) is not a sub-interval of [0, 1]");
        }
        if self.max_attempts == 0 {
            bail!(Domain, "max_attempts must be positive");
        }
        Ok(())
    }

    pub fn potential(&self, spec: &ScaffoldSpec) -> TorsionPotential {
        TorsionPotential { k_planar: self.k_planar, s_steric: spec.steric_height(), w_steric: self.w_steric }
    }
}

/// Generation details kept alongside each bag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagMeta {
    pub spec: ScaffoldSpec,
    pub s_steric: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1); 0 for a single value.
    pub std: f64,
}

impl PropertyStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            bail!(Domain, "no values to summarise");
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Ok(Self {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean,
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_molecules: usize,
    pub positives: usize,
    pub negatives: usize,
    pub conformers: PropertyStats,
    pub heavy_atoms: PropertyStats,
    pub molecular_weight: PropertyStats,
    pub rotatable_bonds: PropertyStats,
}

impl DatasetStats {
    pub fn compute(bags: &[ConformerBag]) -> Result<Self> {
        let collect = |f: &dyn Fn(&ConformerBag) -> f64| bags.iter().map(f).collect::<Vec<_>>();
        let positives = bags.iter().filter(|b| b.bag_label).count();
        Ok(Self {
            n_molecules: bags.len(),
            positives,
            negatives: bags.len() - positives,
            conformers: PropertyStats::from_values(&collect(&|b| b.len() as f64))?,
            heavy_atoms: PropertyStats::from_values(&collect(&|b| b.graph.atom_count() as f64))?,
            molecular_weight: PropertyStats::from_values(&collect(&|b| b.graph.molecular_weight()))?,
            rotatable_bonds: PropertyStats::from_values(&collect(&|b| {
                b.graph.rotatable_bond_count() as f64
            }))?,
        })
    }

    pub fn positive_fraction(&self) -> f64 {
        self.positives as f64 / self.n_molecules as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: GeneratorConfig,
    /// Zero-based regeneration attempt that met the balance window.
    pub attempt: u32,
    pub bags: Vec<ConformerBag>,
    pub meta: Vec<BagMeta>,
    pub stats: DatasetStats,
}

/// Random number stream for one molecule of one attempt.
pub fn molecule_rng(seed: u64, attempt: u32, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((attempt as u64) << 32) | index as u64);
    rng
}

/// Draws a scaffold spec from the configured template mix.
pub fn random_spec<R: Rng + ?Sized>(config: &GeneratorConfig, rng: &mut R) -> Result<ScaffoldSpec> {
    let pairs = config.templates.pairs();
    let template = pairs
        .choose_weighted(rng, |(_, w)| *w)
        .map_err(|e| crate::Error::Domain(format!("template weights: {e}")))?
        .0;
    let mut spec = ScaffoldSpec::bare(template);
    for site in 0..SITE_COUNT {
        if ORTHO_SITES.contains(&site) {
            continue;
        }
        let (_, pos) = site_position(site);
        if pos >= 2 && rng.gen_bool(config.substitution_prob) {
            spec.substituents[site] = *Substituent::CHOICES.choose(rng).unwrap_or(&Substituent::C1);
        }
    }
    if template == Template::OrthoSubstituted {
        let pick = |rng: &mut R| *Substituent::CHOICES.choose(rng).unwrap_or(&Substituent::C1);
        if rng.gen_bool(config.double_ortho_prob) {
            spec.substituents[ORTHO_SITES[0]] = pick(rng);
            spec.substituents[ORTHO_SITES[1]] = pick(rng);
        } else {
            let site = ORTHO_SITES[rng.gen_range(0..2)];
            spec.substituents[site] = pick(rng);
        }
    }
    spec.validate()?;
    Ok(spec)
}

/// Generates molecule `index` of regeneration `attempt`.
pub fn generate_molecule(config: &GeneratorConfig, attempt: u32, index: usize) -> Result<(ConformerBag, BagMeta)> {
    let mut rng = molecule_rng(config.seed, attempt, index);
    let spec = random_spec(config, &mut rng)?;
    let scaffold = build_scaffold(&spec)?;
    let pot = config.potential(&spec);
    let bag = sample_ensemble(index, &scaffold, &pot, &config.sampling(), &mut rng)?;
    Ok((bag, BagMeta { s_steric: pot.s_steric, spec }))
}

/// Generates a labelled dataset whose positive fraction lies in the balance window.
///
/// Each attempt regenerates every molecule from fresh random streams; the
/// first attempt inside the window is returned.
pub fn generate_dataset(config: &GeneratorConfig) -> Result<Dataset> {
    config.validate()?;
    let (lo, hi) = config.balance_window;
    let mut seen = Vec::new();
    for attempt in 0..config.max_attempts {
        let (bags, meta): (Vec<_>, Vec<_>) = (0..config.n_molecules)
            .into_par_iter()
            .map(|i| generate_molecule(config, attempt, i))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        let stats = DatasetStats::compute(&bags)?;
        let frac = stats.positive_fraction();
        if (lo..=hi).contains(&frac) {
            return Ok(Dataset { config: config.clone(), attempt, bags, meta, stats });
        }
        seen.push(format!("{frac:.4}"));
    }
    bail!(
        Generation,
        "positive fraction never reached [{lo}, {hi}] in {} attempts (got {})",
        config.max_attempts,
        seen.join(", ")
    )
}
