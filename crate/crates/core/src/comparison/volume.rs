use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{orthonormal_frame, Matrix};
use crate::manifold::MetricChart;
use crate::ode::OdeSettings;
use crate::tensor::{curvature, ricci};
use crate::transport::integrate_geodesic;
use crate::variation::{vanishing_fundamental, DrivingField};
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, Serialize)]
pub struct VolumeSettings<T> {
    /// Number of directions; `None` uses 512 angles for `n = 2` and 2048
    /// Fibonacci points for `n = 3`.
    pub directions: Option<usize>,
    /// RK4 step for the radial geodesics and their Jacobi fields.
    pub step: T,
}

impl<T: Scalar> Default for VolumeSettings<T> {
    fn default() -> Self {
        VolumeSettings {
            directions: None,
            step: T::of(1e-2),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VolumeReport<T> {
    pub point: Vec<T>,
    pub radius: T,
    pub kref: T,
    pub directions: usize,
    /// `∫ det J(r, u) dΩ(u)`, the measure of the geodesic sphere.
    pub area: T,
    /// `s_K(r)^{n−1} Ω_{n−1}`.
    pub reference: T,
    pub ratio: T,
    pub ratio_le_one: bool,
    /// `det J(r, u) ≤ s_K(r)^{n−1}` for every direction.
    pub pointwise_ok: bool,
    pub max_pointwise_excess: T,
    pub det_min: T,
    pub det_max: T,
    pub ric_min: T,
}

/// Unit-sphere area `Ω_{n−1}` for `n = 2, 3`.
fn omega<T: Scalar>(n: usize) -> T {
    if n == 2 {
        T::of(2.0) * T::PI()
    } else {
        T::of(4.0) * T::PI()
    }
}

/// `sin(√K r)/√K`, `r`, or `sinh(√−K r)/√−K`.
pub(crate) fn s_k<T: Scalar>(k: T, r: T) -> T {
    if k > T::zero() {
        (k.sqrt() * r).sin() / k.sqrt()
    } else if k < T::zero() {
        ((-k).sqrt() * r).sinh() / (-k).sqrt()
    } else {
        r
    }
}

/// Unit directions in frame components with equal quadrature weights.
fn directions<T: Scalar>(n: usize, count: usize) -> Vec<Vec<T>> {
    if n == 2 {
        (0..count)
            .map(|i| {
                let a = T::of(2.0) * T::PI() * T::of_usize(i) / T::of_usize(count);
                vec![a.cos(), a.sin()]
            })
            .collect()
    } else {
        let golden = T::PI() * (T::of(3.0) - T::of(5.0).sqrt());
        (0..count)
            .map(|i| {
                let z = T::one() - T::of_usize(2 * i + 1) / T::of_usize(count);
                let rho = (T::one() - z * z).max(T::zero()).sqrt();
                let phi = golden * T::of_usize(i);
                vec![rho * phi.cos(), rho * phi.sin(), z]
            })
            .collect()
    }
}

struct Sweep<T> {
    area: T,
    dets: Vec<T>,
    ric_min: T,
    count: usize,
}

/// `det J(r, u)` over a quadrature of unit directions at `p`.
fn sweep<T: Scalar>(chart: &MetricChart<T>, p: &[T], r: T, count: Option<usize>, step: T) -> Result<Sweep<T>> {
    let n = chart.dim();
    if n != 2 && n != 3 {
        return Err(Error::BadDimension { required: 3, got: n });
    }
    if !(r > T::zero()) {
        return Err(Error::BadParam("radius must be positive".into()));
    }
    let count = count.unwrap_or(if n == 2 { 512 } else { 2048 });
    let frame = orthonormal_frame(&chart.metric(p)?, None);
    let basis = Matrix::from_columns(&frame);
    let settings = OdeSettings::with_step(step.min(r / T::of(50.0)));
    let results = directions::<T>(n, count)
        .into_par_iter()
        .map(|u| {
            let v = basis.mul_vec(&u);
            let geo = integrate_geodesic(chart, p, &v, r, &settings)?;
            let drive = DrivingField::build(chart, &geo)?;
            let jm = vanishing_fundamental(&drive);
            let normal = |f: &Matrix<T>| Matrix::from_fn(n - 1, n - 1, |i, j| f[(i + 1, j + 1)]).det();
            // F ≈ t I near 0, so det > 0 until the first conjugate point
            for (t, f) in jm.times.iter().zip(&jm.f).skip(1) {
                if normal(f) <= T::zero() {
                    return Err(Error::BadParam(format!(
                        "radius {} reaches a conjugate point (t = {})",
                        r.as_f64(),
                        t.as_f64()
                    )));
                }
            }
            let ric = drive.grid.iter().map(|m| m.trace()).fold(T::infinity(), |a, b| a.min(b));
            Ok((normal(jm.f.last().unwrap()), ric))
        })
        .collect::<Result<Vec<_>>>()?;
    let weight = omega::<T>(n) / T::of_usize(count);
    let area = results.iter().fold(T::zero(), |a, x| a + x.0) * weight;
    Ok(Sweep {
        area,
        dets: results.iter().map(|x| x.0).collect(),
        ric_min: results.iter().map(|x| x.1).fold(T::infinity(), |a, b| a.min(b)),
        count,
    })
}

/// Bishop's comparison: with `Ric ≥ (n − 1)K_ref` the geodesic sphere of
/// radius `r` is no larger than in the model space of curvature `K_ref`.
pub fn volume_compare<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    r: T,
    kref: T,
    settings: &VolumeSettings<T>,
) -> Result<VolumeReport<T>> {
    let n = chart.dim();
    let s = sweep(chart, p, r, settings.directions, settings.step)?;
    let need = T::of_usize(n - 1) * kref;
    if s.ric_min < need - T::of(1e-8) {
        return Err(Error::InputOrderViolated(format!(
            "Ric = {} < (n-1)K = {} along the radial geodesics",
            s.ric_min.as_f64(),
            need.as_f64()
        )));
    }
    let model = s_k(kref, r).powi(n as i32 - 1);
    let reference = model * omega::<T>(n);
    let tol = T::of(1e-8) * model.max(T::one());
    let excess = s.dets.iter().map(|&d| d - model).fold(T::neg_infinity(), |a, b| a.max(b));
    let ratio = s.area / reference;
    Ok(VolumeReport {
        point: p.to_vec(),
        radius: r,
        kref,
        directions: s.count,
        area: s.area,
        reference,
        ratio,
        ratio_le_one: ratio <= T::one() + T::of(1e-8),
        pointwise_ok: excess <= tol,
        max_pointwise_excess: excess,
        det_min: s.dets.iter().copied().fold(T::infinity(), |a, b| a.min(b)),
        det_max: s.dets.iter().copied().fold(T::neg_infinity(), |a, b| a.max(b)),
        ric_min: s.ric_min,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalarFit<T> {
    pub radii: Vec<T>,
    /// `area / (r^{n−1} Ω_{n−1})` at each radius.
    pub normalized: Vec<T>,
    /// Extrapolated `r²` coefficient of the area deficit.
    pub coefficient: T,
    /// Scalar curvature at `p`.
    pub scalar: T,
    /// `coefficient / scalar`, when the scalar curvature is not negligible.
    pub c_n: Option<T>,
}

/// Fits `area(S_p(r)) = r^{n−1}Ω_{n−1}(1 − a r² + O(r⁴))` for `a`, which is
/// proportional to the scalar curvature.
pub fn scalar_expansion_fit<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    settings: &VolumeSettings<T>,
) -> Result<ScalarFit<T>> {
    let n = chart.dim();
    let radii = vec![T::of(0.05), T::of(0.1), T::of(0.2)];
    let mut normalized = Vec::new();
    let mut q = Vec::new();
    for &r in &radii {
        let s = sweep(chart, p, r, settings.directions, settings.step)?;
        let x = s.area / (r.powi(n as i32 - 1) * omega::<T>(n));
        normalized.push(x);
        q.push((T::one() - x) / (r * r));
    }
    let three = T::of(3.0);
    let r1 = (T::of(4.0) * q[0] - q[1]) / three;
    let r2 = (T::of(4.0) * q[1] - q[2]) / three;
    let coefficient = (T::of(16.0) * r1 - r2) / T::of(15.0);
    let scalar = ricci(&curvature(chart, p)?)?.scalar;
    Ok(ScalarFit {
        radii,
        normalized,
        coefficient,
        scalar,
        c_n: if scalar.abs() > T::of(1e-8) { Some(coefficient / scalar) } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{builtin, parse_params};
    use std::f64::consts::PI;

    fn chart(name: &str, params: &str) -> MetricChart<f64> {
        builtin(name, &parse_params(params).unwrap()).unwrap()
    }

    #[test]
    fn geodesic_circles_on_the_sphere() {
        let s = chart("sphere_stereo", "n=2,R=1");
        let set = VolumeSettings::default();
        let r = volume_compare(&s, &[0.2, -0.1], 1.0, 1.0, &set).unwrap();
        assert!((r.area - 2.0 * PI * 1f64.sin()).abs() < 1e-6);
        assert!((r.ratio - 1.0).abs() < 1e-6);
        let r = volume_compare(&s, &[0.2, -0.1], 1.0, 0.0, &set).unwrap();
        assert!(r.ratio < 0.9 && r.ratio_le_one && r.pointwise_ok);
        assert!(matches!(
            volume_compare(&s, &[0.0, 0.0], 1.0, 2.0, &set),
            Err(Error::InputOrderViolated(_))
        ));
        let e = chart("euclidean", "n=2");
        let r = volume_compare(&e, &[1.0, 2.0], 0.7, 0.0, &set).unwrap();
        assert!((r.area - 2.0 * PI * 0.7).abs() < 1e-10);
    }

    #[test]
    fn three_sphere_uses_fibonacci_points() {
        let s = chart("sphere_stereo", "n=3,R=1");
        let set = VolumeSettings {
            directions: Some(200),
            ..Default::default()
        };
        let r = volume_compare(&s, &[0.1, 0.0, 0.0], 0.8, 1.0, &set).unwrap();
        assert!((r.area - 4.0 * PI * 0.8f64.sin().powi(2)).abs() < 1e-6);
    }

    #[test]
    fn area_deficit_coefficient() {
        let set = VolumeSettings {
            directions: Some(64),
            ..Default::default()
        };
        let fit = scalar_expansion_fit(&chart("sphere_stereo", "n=2,R=1"), &[0.0, 0.0], &set).unwrap();
        assert!((fit.coefficient - 1.0 / 6.0).abs() < 1e-4);
        assert!((fit.c_n.unwrap() - 1.0 / 12.0).abs() < 1e-4);
        let fit = scalar_expansion_fit(&chart("hyperbolic_ball", "n=2"), &[0.0, 0.0], &set).unwrap();
        assert!((fit.coefficient + 1.0 / 6.0).abs() < 1e-4);
        let fit = scalar_expansion_fit(&chart("euclidean", "n=2"), &[0.0, 0.0], &set).unwrap();
        assert!(fit.coefficient.abs() < 1e-6 && fit.c_n.is_none());
    }
}
