use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ParamStore;
use crate::error::{bail, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub eps: f64,
    /// Check at most this many randomly chosen coordinates per tensor.
    /// `None` checks every coordinate.
    pub max_coords_per_tensor: Option<usize>,
    /// Seeds the coordinate subsample.
    pub seed: u64,
    /// Richardson-extrapolate differences at `eps` and `eps / 2`, removing
    /// the leading truncation term at twice the cost.
    pub extrapolate: bool,
    /// Lower bound on the relative-error denominator. Gradients below it
    /// are compared on an absolute scale.
    pub floor: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { eps: 1e-5, max_coords_per_tensor: None, seed: 0, extrapolate: false, floor: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Tensor name and flat index of the worst coordinate.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Compares analytic gradients against central differences.
///
/// For each checked coordinate the relative error is
/// `|a - n| / max(|a|, |n|, floor)`; the report carries the maximum.
/// `params` is cloned once and every perturbed entry is restored bit-exactly.
pub fn grad_check<F>(
    mut loss: F,
    params: &ParamStore,
    analytic: &ParamStore,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> f64,
{
    params.check_layout(analytic)?;
    let mut work = params.clone();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst: None, checked: 0 };

    for ti in 0..params.len() {
        let len = params.at(ti).len();
        let coords: Vec<usize> = match opts.max_coords_per_tensor {
            Some(m) if m < len => {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(ti as u64);
                let mut picked = index::sample(&mut rng, len, m).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..len).collect(),
        };
        for k in coords {
            let mut diff = |h: f64| -> Result<f64> {
                let original = work.at(ti).data()[k];
                work.at_mut(ti).data_mut()[k] = original + h;
                let plus = loss(&work);
                work.at_mut(ti).data_mut()[k] = original - h;
                let minus = loss(&work);
                work.at_mut(ti).data_mut()[k] = original;
                if !plus.is_finite() || !minus.is_finite() {
                    bail!(Numeric, "loss is not finite while perturbing {}[{k}]", params.name_at(ti));
                }
                Ok((plus - minus) / (2.0 * h))
            };
            let coarse = diff(opts.eps)?;
            let numeric =
                if opts.extrapolate { (4.0 * diff(0.5 * opts.eps)? - coarse) / 3.0 } else { coarse };
            let a = analytic.at(ti).data()[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(opts.floor);
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((params.name_at(ti).to_string(), k));
            }
            report.checked += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkern::Tensor;

    fn scalar_store(v: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.insert("theta", Tensor::scalar(v)).unwrap();
        s
    }

    #[test]
    fn square_at_three() {
        let p = scalar_store(3.0);
        let g = scalar_store(6.0);
        let r = grad_check(|s| s.at(0).data()[0].powi(2), &p, &g, &GradCheckOptions::default())
            .unwrap();
        assert!(r.max_rel_error < 1e-8);
        assert_eq!(r.checked, 1);
    }

    #[test]
    fn constant_loss_has_zero_error() {
        let p = scalar_store(-1.25);
        let g = scalar_store(0.0);
        let r = grad_check(|_| 4.0, &p, &g, &GradCheckOptions::default()).unwrap();
        assert_eq!(r.max_rel_error, 0.0);
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let p = scalar_store(0.0);
        let g = scalar_store(0.0);
        let r = grad_check(|_| f64::NAN, &p, &g, &GradCheckOptions::default());
        assert!(matches!(r, Err(crate::Error::Numeric(_))));
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let p = scalar_store(2.0);
        let g = scalar_store(5.0);
        let r = grad_check(|s| s.at(0).data()[0].powi(2), &p, &g, &GradCheckOptions::default())
            .unwrap();
        assert!(r.max_rel_error > 0.1);
    }

    #[test]
    fn subsampling_limits_checked_coordinates() {
        let mut p = ParamStore::new();
        p.insert("w", Tensor::new(vec![50], (0..50).map(f64::from).collect()).unwrap()).unwrap();
        let g = p.clone();
        let opts = GradCheckOptions { max_coords_per_tensor: Some(7), ..Default::default() };
        let loss = |s: &ParamStore| s.at(0).data().iter().map(|x| 0.5 * x * x).sum::<f64>();
        let r = grad_check(loss, &p, &g, &opts).unwrap();
        assert_eq!(r.checked, 7);
    }

    #[test]
    fn extrapolation_cancels_cubic_truncation() {
        let p = scalar_store(1.0);
        let g = scalar_store(3.0);
        let cube = |s: &ParamStore| s.at(0).data()[0].powi(3);
        let plain = GradCheckOptions { eps: 1e-2, ..Default::default() };
        let r = grad_check(cube, &p, &g, &plain).unwrap();
        assert!(r.max_rel_error > 1e-5);
        let rich = GradCheckOptions { extrapolate: true, ..plain };
        let r = grad_check(cube, &p, &g, &rich).unwrap();
        assert!(r.max_rel_error < 1e-12);
        assert!(r.max_rel_error < 1e-8);
    }
}
