use rand::Rng;

use super::embed::embed_conformer;
use super::scaffold::Scaffold;
use super::torsion::{torsion_energy, TorsionPotential};
use crate::error::{bail, Result};
use crate::molkit::{label_bag, ConformerBag, MAX_CONFORMERS};

/// Sampling settings shared by every molecule in a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub max_conformers: usize,
    /// kcal/mol
    pub kt: f64,
    /// degrees; must divide 180 so that both 0 and 180 are on the grid
    pub grid_step: f64,
    /// degrees; must divide 360
    pub dedupe_bin: f64,
    /// Maximum number of downhill grid steps taken from each drawn angle.
    pub relax_steps: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { max_conformers: MAX_CONFORMERS, kt: 0.6, grid_step: 2.0, dedupe_bin: 5.0, relax_steps: 5 }
    }
}

fn divides(step: f64, total: f64) -> bool {
    let q = total / step;
    step > 0.0 && (q - q.round()).abs() < 1e-9
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_conformers == 0 || self.max_conformers > MAX_CONFORMERS {
            bail!(Domain, "max_conformers must be in 1..={MAX_CONFORMERS}, got {}", self.max_conformers);
        }
        if !(self.kt.is_finite() && self.kt > 0.0) {
            bail!(Domain, "kT must be positive, got {}", self.kt);
        }
        if !divides(self.grid_step, 180.0) {
            bail!(Domain, "grid step {} does not divide 180", self.grid_step);
        }
        if !divides(self.dedupe_bin, 360.0) {
            bail!(Domain, "dedupe bin {} does not divide 360", self.dedupe_bin);
        }
        Ok(())
    }
}

/// Torsion grid over (-180, 180]: `-180 + step, ..., 0, ..., 180`.
pub fn torsion_grid(step: f64) -> Vec<f64> {
    let n = (360.0 / step).round() as i64;
    (1..=n).map(|i| -180.0 + i as f64 * step).map(|p| if p.abs() < 1e-9 { 0.0 } else { p }).collect()
}

/// Unnormalised Boltzmann weights, shifted so the lowest-energy point has weight 1.
pub fn boltzmann_weights(grid: &[f64], pot: &TorsionPotential, kt: f64) -> Vec<f64> {
    let energies: Vec<f64> = grid.iter().map(|&p| torsion_energy(p, pot)).collect();
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    energies.iter().map(|e| (-(e - e_min) / kt).exp()).collect()
}

/// Draws `n` distinct indices, each draw proportional to the remaining weights.
pub fn draw_without_replacement<R: Rng + ?Sized>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut remaining = weights.to_vec();
    let mut total: f64 = remaining.iter().sum();
    let mut picked = Vec::with_capacity(n.min(weights.len()));
    while picked.len() < n && total > 0.0 {
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut choice = None;
        for (i, w) in remaining.iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            acc += w;
            choice = Some(i);
            if target < acc {
                break;
            }
        }
        let Some(i) = choice else { break };
        picked.push(i);
        remaining[i] = 0.0;
        // Re-summing avoids drift from repeated subtraction.
        total = remaining.iter().sum();
    }
    picked
}

/// Dedupe bin of a torsion: bins are centred on multiples of `width` and wrap at ±180.
pub fn dedupe_bin(phi: f64, width: f64) -> i64 {
    let bins = (360.0 / width).round() as i64;
    ((phi / width).round() as i64).rem_euclid(bins)
}

/// Walks downhill on the periodic grid from index `start`, one neighbour at a
/// time, for at most `steps` moves. Stops at a local minimum.
pub fn relax_on_grid(energies: &[f64], start: usize, steps: usize) -> usize {
    let n = energies.len();
    let mut i = start;
    for _ in 0..steps {
        let left = (i + n - 1) % n;
        let right = (i + 1) % n;
        let next = if energies[left] <= energies[right] { left } else { right };
        if energies[next] < energies[i] {
            i = next;
        } else {
            break;
        }
    }
    i
}

/// Distinct torsions for one molecule, in order of discovery.
///
/// A draw count is chosen uniformly from `1..=max_conformers`, then that many
/// grid angles are drawn without replacement with probability proportional
/// to `exp(-E/kT)`. Each draw is relaxed a few grid
/// steps downhill, then each dedupe bin that was reached contributes one
/// conformer at the lowest-energy grid angle inside that bin (ties go to the
/// earlier grid point).
pub fn sample_torsions<R: Rng + ?Sized>(
    pot: &TorsionPotential,
    config: &SamplingConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    config.validate()?;
    let grid = torsion_grid(config.grid_step);
    let weights = boltzmann_weights(&grid, pot, config.kt);
    let energies: Vec<f64> = grid.iter().map(|&p| torsion_energy(p, pot)).collect();
    let n_draws = rng.gen_range(1..=config.max_conformers);
    let draws = draw_without_replacement(&weights, n_draws, rng);
    let mut bins: Vec<i64> = Vec::new();
    for &i in &draws {
        let j = relax_on_grid(&energies, i, config.relax_steps);
        let b = dedupe_bin(grid[j], config.dedupe_bin);
        if !bins.contains(&b) {
            bins.push(b);
        }
    }
    let mut torsions = Vec::with_capacity(bins.len());
    for b in bins {
        let best = grid
            .iter()
            .filter(|&&p| dedupe_bin(p, config.dedupe_bin) == b)
            .map(|&p| (torsion_energy(p, pot), p))
            .fold(None, |acc: Option<(f64, f64)>, cur| match acc {
                Some(a) if a.0 <= cur.0 => Some(a),
                _ => Some(cur),
            });
        match best {
            Some((_, p)) => torsions.push(p),
            None => bail!(Numeric, "dedupe bin {b} holds no grid point"),
        }
    }
    Ok(torsions)
}

/// Builds the conformer bag of one molecule and labels it.
///
/// Rigid scaffolds yield exactly one conformer at their locked torsion.
pub fn sample_ensemble<R: Rng + ?Sized>(
    id: usize,
    scaffold: &Scaffold,
    pot: &TorsionPotential,
    config: &SamplingConfig,
    rng: &mut R,
) -> Result<ConformerBag> {
    let torsions = match scaffold.spec.template.fixed_dihedral() {
        Some(phi) => vec![phi],
        None => sample_torsions(pot, config, rng)?,
    };
    let conformers =
        torsions.iter().map(|&phi| embed_conformer(scaffold, phi, pot)).collect::<Result<Vec<_>>>()?;
    let mut bag = ConformerBag { id, graph: scaffold.graph.clone(), conformers, bag_label: false };
    label_bag(&mut bag)?;
    Ok(bag)
}
