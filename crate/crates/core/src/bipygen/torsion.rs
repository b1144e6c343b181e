use serde::{Deserialize, Serialize};

/// Surrogate energy of the biaryl torsion.
///
/// `E(phi) = k_planar (1 - cos 2 phi) / 2 + s_steric exp(-(phi / w_steric)^2)`:
/// a two-fold term favouring either planar form plus a Gaussian clash
/// penalty centred on the cis form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorsionPotential {
    /// kcal/mol
    pub k_planar: f64,
    /// kcal/mol
    pub s_steric: f64,
    /// degrees
    pub w_steric: f64,
}

impl TorsionPotential {
    pub fn is_valid(&self) -> bool {
        [self.k_planar, self.s_steric, self.w_steric].iter().all(|v| v.is_finite() && *v >= 0.0)
            && self.w_steric > 0.0
    }
}

/// Energy in kcal/mol for a torsion in degrees.
pub fn torsion_energy(phi: f64, pot: &TorsionPotential) -> f64 {
    let planar = pot.k_planar * (1.0 - (2.0 * phi.to_radians()).cos()) / 2.0;
    let steric = pot.s_steric * (-(phi / pot.w_steric).powi(2)).exp();
    planar + steric
}
