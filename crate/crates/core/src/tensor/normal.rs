use serde::Serialize;

use crate::linalg::{orthonormal_frame, Matrix};
use crate::manifold::MetricChart;
use crate::ode::OdeSettings;
use crate::transport::exp_differential;
use crate::{Error, Result, Scalar};

use super::{curvature, Tensor4};

/// Second-order behaviour of the metric in normal coordinates at a point.
#[derive(Clone, Debug, Serialize)]
pub struct NormalTaylorReport<T> {
    pub point: Vec<T>,
    pub frame: Vec<Vec<T>>,
    pub epsilon: T,
    /// `fitted[i, j, h, k] ≈ ∂_h ∂_k g̃_ij(0)`.
    pub fitted: Tensor4<T>,
    /// `−(1/3)(R_ihjk + R_ikjh)` from the curvature in the frame.
    pub predicted: Tensor4<T>,
    pub max_deviation: T,
    /// `max |Γ̃(0)|`; zero in exact arithmetic.
    pub christoffel_at_origin: T,
    /// In dimension 2: `E_yy` and `K = −3E_yy/2`.
    pub e_yy: Option<T>,
    pub gaussian_fit: Option<T>,
}

struct NormalChart<'a, T: Scalar> {
    chart: &'a MetricChart<T>,
    p: &'a [T],
    basis: Matrix<T>,
    settings: &'a OdeSettings<T>,
}

impl<T: Scalar> NormalChart<'_, T> {
    /// Pulled-back metric `Dφᵀ g(φ) Dφ` for `φ(x) = exp_p(Bx)`, with `Dφ`
    /// from the linearized geodesic flow.
    fn metric(&self, x: &[T]) -> Result<Matrix<T>> {
        let v = self.basis.mul_vec(x);
        let (q, d) = exp_differential(self.chart, self.p, &v, self.settings)?;
        let jac = d.mul(&self.basis);
        let g = self.chart.metric(&q)?;
        Ok(jac.transpose().mul(&g).mul(&jac))
    }
}

/// Second derivatives `∂_h∂_k g̃` (and first derivatives) at the origin from
/// central stencils of radius `eps`.
fn stencil<T: Scalar>(nc: &NormalChart<'_, T>, n: usize, eps: T) -> Result<(Tensor4<T>, Vec<Matrix<T>>)> {
    let origin = vec![T::zero(); n];
    let g0 = nc.metric(&origin)?;
    let at = |pairs: &[(usize, T)]| -> Result<Matrix<T>> {
        let mut x = origin.clone();
        for &(a, s) in pairs {
            x[a] += s * eps;
        }
        nc.metric(&x)
    };
    let mut dd = Tensor4::zeros(n);
    let mut d1 = Vec::with_capacity(n);
    let one = T::one();
    for h in 0..n {
        let gp = at(&[(h, one)])?;
        let gm = at(&[(h, -one)])?;
        d1.push(gp.sub(&gm).scale(one / (T::of(2.0) * eps)));
        let second = gp.add(&gm).sub(&g0.scale(T::of(2.0))).scale(one / (eps * eps));
        for i in 0..n {
            for j in 0..n {
                dd[[i, j, h, h]] = second[(i, j)];
            }
        }
        for k in h + 1..n {
            let pp = at(&[(h, one), (k, one)])?;
            let pm = at(&[(h, one), (k, -one)])?;
            let mp = at(&[(h, -one), (k, one)])?;
            let mm = at(&[(h, -one), (k, -one)])?;
            let mixed = pp.sub(&pm).sub(&mp).add(&mm).scale(one / (T::of(4.0) * eps * eps));
            for i in 0..n {
                for j in 0..n {
                    dd[[i, j, h, k]] = mixed[(i, j)];
                    dd[[i, j, k, h]] = mixed[(i, j)];
                }
            }
        }
    }
    Ok((dd, d1))
}

/// Evaluates the metric in normal coordinates at `p` on stencils of radius
/// `epsilon` and `epsilon/2`, Richardson-extrapolates the quadratic
/// coefficients, and compares them with `−(1/3)(R_ihjk + R_ikjh)`.
pub fn normal_taylor_check<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    frame: Option<&[Vec<T>]>,
    epsilon: T,
    settings: &OdeSettings<T>,
) -> Result<NormalTaylorReport<T>> {
    let n = chart.dim();
    let g = chart.metric(p)?;
    let frame = match frame {
        Some(f) => {
            if f.len() != n || f.iter().any(|e| e.len() != n) {
                return Err(Error::BadParam(format!("frame needs {n} vectors of length {n}")));
            }
            let defect = (0..n)
                .flat_map(|a| (0..n).map(move |b| (a, b)))
                .map(|(a, b)| {
                    let want = if a == b { T::one() } else { T::zero() };
                    (g.form(&f[a], &f[b]) - want).abs()
                })
                .fold(T::zero(), |m, x| m.max(x));
            if defect > T::of(1e-8) {
                return Err(Error::BadParam("frame is not orthonormal".into()));
            }
            f.to_vec()
        }
        None => orthonormal_frame(&g, None),
    };
    if !(epsilon > T::zero()) {
        return Err(Error::BadParam("epsilon must be positive".into()));
    }
    let nc = NormalChart {
        chart,
        p,
        basis: Matrix::from_columns(&frame),
        settings,
    };
    let (d_big, g1_big) = stencil(&nc, n, epsilon)?;
    let (d_small, g1_small) = stencil(&nc, n, epsilon * T::of(0.5))?;
    let third = T::one() / T::of(3.0);
    let four = T::of(4.0);
    let fitted = d_small.scale(four).sub(&d_big).scale(third);
    let first: Vec<Matrix<T>> = g1_small
        .iter()
        .zip(&g1_big)
        .map(|(s, b)| s.scale(four).sub(b).scale(third))
        .collect();

    let r = curvature(chart, p)?;
    let low = r.low.in_basis(&nc.basis);
    let predicted = Tensor4::from_fn(n, |i, j, h, k| -third * (low[[i, h, j, k]] + low[[i, k, j, h]]));
    let max_deviation = fitted.sub(&predicted).max_abs();

    // Γ̃^i_jk(0) = ½(∂_j g̃_ik + ∂_k g̃_ij − ∂_i g̃_jk), since g̃(0) = I
    let mut gamma0 = T::zero();
    let half = T::of(0.5);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = half * (first[j][(i, k)] + first[k][(i, j)] - first[i][(j, k)]);
                gamma0 = gamma0.max(v.abs());
            }
        }
    }
    let (e_yy, gaussian_fit) = if n == 2 {
        let e = fitted[[0, 0, 1, 1]];
        (Some(e), Some(-T::of(1.5) * e))
    } else {
        (None, None)
    };
    Ok(NormalTaylorReport {
        point: p.to_vec(),
        frame,
        epsilon,
        fitted,
        predicted,
        max_deviation,
        christoffel_at_origin: gamma0,
        e_yy,
        gaussian_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{builtin, parse_params};

    fn chart(name: &str, p: &str) -> MetricChart<f64> {
        builtin(name, &parse_params(p).unwrap()).unwrap()
    }

    #[test]
    fn sphere_recovers_unit_curvature() {
        let c = chart("sphere_stereo", "n=2,R=1");
        let r = normal_taylor_check(&c, &[0.3, -0.2], None, 0.1, &OdeSettings::default()).unwrap();
        assert!((r.e_yy.unwrap() + 2.0 / 3.0).abs() < 1e-3);
        assert!((r.gaussian_fit.unwrap() - 1.0).abs() < 1e-3);
        assert!(r.max_deviation < 1e-3);
        assert!(r.christoffel_at_origin < 1e-4);
    }

    #[test]
    fn hyperbolic_recovers_minus_one() {
        let c = chart("hyperbolic_ball", "n=2");
        let r = normal_taylor_check(&c, &[0.1, 0.2], None, 0.1, &OdeSettings::default()).unwrap();
        assert!((r.gaussian_fit.unwrap() + 1.0).abs() < 1e-3);
    }

    #[test]
    fn flat_space_has_no_quadratic_term() {
        let c = chart("euclidean", "n=3");
        let r = normal_taylor_check(&c, &[1.0, 0.0, -1.0], None, 0.1, &OdeSettings::default()).unwrap();
        assert!(r.fitted.max_abs() < 1e-9);
        assert!(r.gaussian_fit.is_none());
    }
}
