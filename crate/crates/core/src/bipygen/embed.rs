use super::scaffold::{ring_atom, Scaffold, RING_SIZE};
use super::torsion::{torsion_energy, TorsionPotential};
use crate::error::{bail, Result};
use crate::molkit::{is_key_instance, Conformer, Point};

pub const AROMATIC_BOND: f64 = 1.39;
pub const INTER_RING_BOND: f64 = 1.48;
pub const SUBSTITUENT_BOND: f64 = 1.50;
pub const BRIDGE_BOND: f64 = 1.40;

/// Angle tolerance (degrees) when matching a rigid template's fixed torsion.
const FIXED_PHI_TOL: f64 = 1e-9;

fn ring_center(ring: usize) -> Point {
    match ring {
        0 => [-AROMATIC_BOND, 0.0, 0.0],
        _ => [INTER_RING_BOND + AROMATIC_BOND, 0.0, 0.0],
    }
}

/// Unrotated position of a ring atom. Both nitrogens sit on the +y side.
fn ring_position(ring: usize, pos: usize) -> Point {
    let c = ring_center(ring);
    let deg = if ring == 0 { 60.0 * pos as f64 } else { 180.0 - 60.0 * pos as f64 };
    let (s, co) = deg.to_radians().sin_cos();
    [c[0] + AROMATIC_BOND * co, c[1] + AROMATIC_BOND * s, 0.0]
}

fn rotate_x(p: Point, phi_deg: f64) -> Point {
    let (s, c) = phi_deg.to_radians().sin_cos();
    [p[0], p[1] * c - p[2] * s, p[1] * s + p[2] * c]
}

fn unit(v: Point) -> Point {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Places every heavy atom for inter-ring torsion `phi` (degrees).
///
/// Ring A lies in the xy-plane with its ipso carbon at the origin; ring B
/// hangs off the +x axis and is turned about it by `phi`. Substituents
/// point radially away from their ring centre.
pub fn embed_conformer(scaffold: &Scaffold, phi: f64, pot: &TorsionPotential) -> Result<Conformer> {
    if !phi.is_finite() {
        bail!(Domain, "torsion must be finite, got {phi}");
    }
    if let Some(fixed) = scaffold.spec.template.fixed_dihedral() {
        if angle_distance(phi, fixed) > FIXED_PHI_TOL {
            bail!(Spec, "template {} is locked at {fixed} degrees, got {phi}", scaffold.spec.template.name());
        }
    }
    let n = scaffold.graph.atom_count();
    let mut coords = vec![[0.0; 3]; n];
    // Frame of each atom before the torsion is applied: which ring it rides on.
    let mut ring_of = vec![None; n];
    for ring in 0..2 {
        for pos in 0..RING_SIZE {
            let i = ring_atom(ring, pos);
            coords[i] = ring_position(ring, pos);
            ring_of[i] = Some(ring);
        }
    }
    for sa in &scaffold.substituent_atoms {
        let ring = sa.anchor / RING_SIZE;
        let anchor = coords[sa.anchor];
        let c = ring_center(ring);
        let u = unit([anchor[0] - c[0], anchor[1] - c[1], 0.0]);
        let first = [anchor[0] + SUBSTITUENT_BOND * u[0], anchor[1] + SUBSTITUENT_BOND * u[1], 0.0];
        coords[sa.atom] = match sa.depth {
            1 => first,
            _ => {
                // Bend away from the inter-ring bond.
                let mid_x = INTER_RING_BOND / 2.0;
                let bent = |deg: f64| {
                    let (s, co) = deg.to_radians().sin_cos();
                    let v = [u[0] * co - u[1] * s, u[0] * s + u[1] * co];
                    [first[0] + SUBSTITUENT_BOND * v[0], first[1] + SUBSTITUENT_BOND * v[1], 0.0]
                };
                let (a, b) = (bent(60.0), bent(-60.0));
                let reach = |p: Point| (p[0] - mid_x).powi(2) + p[1] * p[1];
                if reach(a) >= reach(b) { a } else { b }
            }
        };
        ring_of[sa.atom] = Some(ring);
    }
    for (p, ring) in coords.iter_mut().zip(&ring_of) {
        if *ring == Some(1) {
            *p = rotate_x(*p, phi);
        }
    }
    if let Some((anchors, atoms)) = scaffold.bridge {
        let p = coords[anchors[0]];
        let q = coords[anchors[1]];
        let d_vec = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
        let d = (d_vec[0] * d_vec[0] + d_vec[1] * d_vec[1] + d_vec[2] * d_vec[2]).sqrt();
        let axis = unit(d_vec);
        let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0];
        let out = unit([0.0, mid[1], mid[2]]);
        let half = BRIDGE_BOND / 2.0;
        let along = d / 2.0 - half;
        let h = (BRIDGE_BOND * BRIDGE_BOND - along * along).max(0.0).sqrt();
        for (atom, sign) in atoms.iter().zip([-1.0, 1.0]) {
            coords[*atom] = [
                mid[0] + sign * half * axis[0] + h * out[0],
                mid[1] + sign * half * axis[1] + h * out[1],
                mid[2] + sign * half * axis[2] + h * out[2],
            ];
        }
    }
    let mut conformer = Conformer { coords, energy: torsion_energy(phi, pot), instance_label: false };
    conformer.instance_label = is_key_instance(&conformer, &scaffold.graph)?;
    Ok(conformer)
}
