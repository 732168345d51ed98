//! Sectional curvatures of left-invariant metrics on SO(3).

use serde::Serialize;

use crate::{Error, Result, Scalar};

/// Curvatures of the coordinate planes for the left-invariant metric with
/// orthonormal frame lengths `a, b, c`, computed two ways.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BergerCurvatures<T> {
    pub k12: T,
    pub k23: T,
    pub k31: T,
    pub a: T,
    pub b: T,
    pub c: T,
    /// The same curvatures from the closed form in `u = a², v = b², w = c²`.
    pub k_uvw: [T; 3],
    /// Largest discrepancy between the two routes.
    pub cross_check: T,
}

/// `A = (b²+c²−a²)/(2abc)` and cyclic permutations, then
/// `K12 = AC + BC − AB` and cyclic permutations.
pub fn berger_curvatures<T: Scalar>(a: T, b: T, c: T) -> Result<BergerCurvatures<T>> {
    if !(a > T::zero() && b > T::zero() && c > T::zero()) || !(a * b * c).is_finite() {
        return Err(Error::BadParam(
            "frame lengths a, b, c must be positive and finite".into(),
        ));
    }
    let two_abc = T::of(2.0) * a * b * c;
    let (a2, b2, c2) = (a * a, b * b, c * c);
    let ca = (b2 + c2 - a2) / two_abc;
    let cb = (c2 + a2 - b2) / two_abc;
    let cc = (a2 + b2 - c2) / two_abc;
    let k12 = ca * cc + cb * cc - ca * cb;
    let k23 = cb * ca + cc * ca - cb * cc;
    let k31 = cc * cb + ca * cb - cc * ca;
    let f = |u: T, v: T, w: T| {
        let three = T::of(3.0);
        let d = u - v;
        let s = u + v;
        let e = three * w - u - v;
        (three * d * d + s * s - e * e) / (T::of(12.0) * u * v * w)
    };
    let k_uvw = [f(a2, b2, c2), f(b2, c2, a2), f(c2, a2, b2)];
    let cross_check = (k12 - k_uvw[0])
        .abs()
        .max((k23 - k_uvw[1]).abs())
        .max((k31 - k_uvw[2]).abs());
    Ok(BergerCurvatures {
        k12,
        k23,
        k31,
        a: ca,
        b: cb,
        c: cc,
        k_uvw,
        cross_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_metric() {
        let k = berger_curvatures(1.0f64, 1.0, 1.0).unwrap();
        for v in [k.k12, k.k23, k.k31] {
            assert!((v - 0.25).abs() < 1e-15);
        }
        assert!(k.cross_check < 1e-15);
    }

    #[test]
    fn stretched_metric() {
        let k = berger_curvatures(2.0f64, 1.0, 1.0).unwrap();
        assert!((k.k23 + 2.0).abs() < 1e-14);
        assert!((k.k12 - 1.0).abs() < 1e-14);
        assert!((k.k31 - 1.0).abs() < 1e-14);
        assert!(k.cross_check < 1e-14);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(berger_curvatures(0.0f64, 1.0, 1.0).is_err());
    }
}
