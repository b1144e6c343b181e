use crate::error::{bail, Result};

/// Cartesian coordinates in Ångström.
pub type Point = [f64; 3];

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn dot3(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Point, b: Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub(crate) fn norm(a: Point) -> f64 {
    dot3(a, a).sqrt()
}

#[inline]
pub fn distance(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Signed torsion angle of `p1-p2-p3-p4` in degrees, in `(-180, 180]`.
///
/// Positive when, looking down `p2 -> p3`, the far bond is rotated
/// counter-clockwise from the near bond.
pub fn dihedral(p1: Point, p2: Point, p3: Point, p4: Point) -> Result<f64> {
    let b1 = sub(p2, p1);
    let b2 = sub(p3, p2);
    let b3 = sub(p4, p3);
    let axis = norm(b2);
    if axis < 1e-10 {
        bail!(Geometry, "central bond has zero length");
    }
    let n1 = cross(b1, b2);
    let n2 = cross(b2, b3);
    let tol = 1e-10 * axis;
    if norm(n1) < tol * norm(b1).max(1e-300) || norm(n2) < tol * norm(b3).max(1e-300) {
        bail!(Geometry, "outer bond is collinear with the torsion axis");
    }
    let y = axis * dot3(b1, n2);
    let x = dot3(n1, n2);
    let deg = y.atan2(x).to_degrees();
    Ok(if deg <= -180.0 { deg + 360.0 } else { deg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() < tol
    }

    #[test]
    fn canonical_torsions() {
        let o = [0.0, 0.0, 0.0];
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        assert!(close(dihedral(x, o, y, [1.0, 1.0, 0.0]).unwrap(), 0.0, 1e-12));
        assert!(close(dihedral(x, o, y, [-1.0, 1.0, 0.0]).unwrap(), 180.0, 1e-12));
        assert!(close(dihedral(x, o, y, [0.0, 1.0, 1.0]).unwrap().abs(), 90.0, 1e-12));
    }

    #[test]
    fn trans_is_reported_as_plus_180() {
        let d = dihedral([1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 1.0, -0.0])
            .unwrap();
        assert_eq!(d, 180.0);
    }

    #[test]
    fn degenerate_geometry_is_rejected() {
        let o = [0.0, 0.0, 0.0];
        assert!(matches!(
            dihedral([1.0, 0.0, 0.0], o, o, [1.0, 1.0, 0.0]),
            Err(crate::Error::Geometry(_))
        ));
        assert!(matches!(
            dihedral([0.0, -1.0, 0.0], o, [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]),
            Err(crate::Error::Geometry(_))
        ));
    }

    fn add(a: Point, b: Point) -> Point {
        [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
    }

    fn scale(a: Point, s: f64) -> Point {
        [a[0] * s, a[1] * s, a[2] * s]
    }

    fn rotate(p: Point, axis: Point, angle: f64) -> Point {
        // Rodrigues rotation about a unit axis.
        let k = scale(axis, 1.0 / norm(axis));
        let (s, c) = angle.sin_cos();
        add(add(scale(p, c), scale(cross(k, p), s)), scale(k, dot3(k, p) * (1.0 - c)))
    }

    fn point() -> impl Strategy<Value = Point> {
        [-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0]
    }

    proptest! {
        #[test]
        fn rigid_motion_invariance(ps in [point(), point(), point(), point()],
                                   axis in point(), angle in -3.0f64..3.0, shift in point()) {
            prop_assume!(norm(axis) > 0.1);
            let Ok(before) = dihedral(ps[0], ps[1], ps[2], ps[3]) else { return Ok(()) };
            prop_assume!(before.abs() < 179.9);
            let moved: Vec<Point> = ps.iter().map(|&p| add(rotate(p, axis, angle), shift)).collect();
            let after = dihedral(moved[0], moved[1], moved[2], moved[3]).unwrap();
            prop_assert!((before - after).abs() < 1e-9);
        }

        #[test]
        fn reversal_flips_sign(ps in [point(), point(), point(), point()]) {
            let Ok(fwd) = dihedral(ps[0], ps[1], ps[2], ps[3]) else { return Ok(()) };
            prop_assume!(fwd.abs() < 179.9);
            let rev = dihedral(ps[3], ps[2], ps[1], ps[0]).unwrap();
            prop_assert!((fwd - rev).abs() < 1e-9);
        }
    }
}
