use crate::error::{bail, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before the log.
pub const PROB_CLAMP: f64 = 1e-7;

/// Dot product with four interleaved partial sums (fixed order, so results
/// are reproducible).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

/// `out = A x` with `A` row-major `rows x cols`.
#[inline]
pub fn matvec(a: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.len(), rows * cols);
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        *o = dot(&a[r * cols..(r + 1) * cols], x);
    }
}

/// `out += A x`.
#[inline]
pub fn matvec_acc(a: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.len(), rows * cols);
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        *o += dot(&a[r * cols..(r + 1) * cols], x);
    }
}

/// `out += A^T y`.
#[inline]
pub fn matvec_t_acc(a: &[f64], rows: usize, cols: usize, y: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.len(), rows * cols);
    for (r, &yr) in y.iter().enumerate().take(rows) {
        if yr == 0.0 {
            continue;
        }
        let row = &a[r * cols..(r + 1) * cols];
        for (o, w) in out.iter_mut().zip(row) {
            *o += w * yr;
        }
    }
}

/// `A += u v^T`.
#[inline]
pub fn outer_acc(a: &mut [f64], u: &[f64], v: &[f64]) {
    let cols = v.len();
    debug_assert_eq!(a.len(), u.len() * cols);
    for (r, &ur) in u.iter().enumerate() {
        if ur == 0.0 {
            continue;
        }
        let row = &mut a[r * cols..(r + 1) * cols];
        for (o, vc) in row.iter_mut().zip(v) {
            *o += ur * vc;
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax (max subtracted before exponentiation).
///
/// Permuting `z` permutes the output exactly.
pub fn softmax(z: &[f64]) -> Result<Vec<f64>> {
    if z.is_empty() {
        bail!(Domain, "softmax of an empty vector");
    }
    if z.iter().any(|v| !v.is_finite()) {
        bail!(Numeric, "softmax input is not finite");
    }
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    // Summing in sorted order makes the result independent of input order.
    let mut sorted = out.clone();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    Ok(out)
}

/// Vector-Jacobian product of softmax: `dz_k = a_k (da_k - sum_j a_j da_j)`.
pub fn softmax_backward(alpha: &[f64], dalpha: &[f64], dz: &mut [f64]) {
    let inner = dot(alpha, dalpha);
    for ((d, a), g) in dz.iter_mut().zip(alpha).zip(dalpha) {
        *d = a * (g - inner);
    }
}

/// Binary cross-entropy of a clamped probability against a 0/1 label.
pub fn bce_loss(p: f64, y: f64) -> Result<f64> {
    if y != 0.0 && y != 1.0 {
        bail!(Domain, "label must be 0 or 1, got {y}");
    }
    if !p.is_finite() {
        bail!(Numeric, "probability is not finite");
    }
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    Ok(-(y * p.ln() + (1.0 - y) * (1.0 - p).ln()))
}

/// d bce(sigmoid(l), y) / d l, where `p = sigmoid(l)`.
///
/// Zero while the clamp is active, `p - y` otherwise.
pub fn bce_grad_logit(p: f64, y: f64) -> f64 {
    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
        0.0
    } else {
        p - y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let s = softmax(&[2f64.ln(), 0.0]).unwrap();
        assert!((s[0] - 2.0 / 3.0).abs() < 1e-15 && (s[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(softmax(&[1000.0, 1000.0]).unwrap(), vec![0.5, 0.5]);
        assert!(matches!(softmax(&[]), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn bce_examples() {
        assert!((bce_loss(0.5, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let near_one = bce_loss(1.0 - 1e-7, 1.0).unwrap();
        assert!((near_one - 1e-7).abs() < 1e-12);
        assert!((bce_loss(0.9, 0.0).unwrap() + 0.1f64.ln()).abs() < 1e-12);
        assert!(matches!(bce_loss(0.5, 2.0), Err(crate::Error::Domain(_))));
        // clamped: saturated probabilities give a finite loss
        assert!(bce_loss(0.0, 1.0).unwrap().is_finite());
    }

    #[test]
    fn bce_grad_matches_central_difference() {
        for &(l, y) in &[(0.3, 1.0), (-1.7, 0.0), (2.2, 0.0)] {
            let f = |x: f64| bce_loss(sigmoid(x), y).unwrap();
            let h = 1e-6;
            let num = (f(l + h) - f(l - h)) / (2.0 * h);
            assert!((num - bce_grad_logit(sigmoid(l), y)).abs() < 1e-8);
        }
    }

    #[test]
    fn linear_algebra_helpers() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // 2x3
        let mut out = [0.0; 2];
        matvec(&a, 2, 3, &[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, [-2.0, -2.0]);
        let mut t = [0.0; 3];
        matvec_t_acc(&a, 2, 3, &[1.0, 1.0], &mut t);
        assert_eq!(t, [5.0, 7.0, 9.0]);
        let mut m = [0.0; 6];
        outer_acc(&mut m, &[1.0, 2.0], &[1.0, 0.0, 3.0]);
        assert_eq!(m, [1.0, 0.0, 3.0, 2.0, 0.0, 6.0]);
    }

    proptest! {
        #[test]
        fn softmax_is_a_simplex(z in prop::collection::vec(-1e4f64..1e4, 1..40)) {
            let s = softmax(&z).unwrap();
            let total: f64 = s.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert!(s.iter().all(|&v| v >= 0.0 && v <= 1.0));
        }
    }
}
