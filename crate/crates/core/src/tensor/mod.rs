//! Christoffel symbols, the curvature tensor and its contractions.
//!
//! Conventions. `R_XY = D_[X,Y] − D_X D_Y + D_Y D_X`. In coordinates
//! `up[i, j, h, k] = R^i_jhk` with `R_{∂h ∂k} ∂j = Σ_i R^i_jhk ∂i`, and
//!
//! ```text
//! R^i_jhk = ∂_k Γ^i_hj − ∂_h Γ^i_kj + Γ^m_hj Γ^i_km − Γ^m_kj Γ^i_hm.
//! ```
//!
//! The lowered array is `low[a, b, c, d] = g(R_{∂a ∂b} ∂c, ∂d)`, so the
//! sectional curvature of the plane spanned by `x, y` is
//! `low(x, y, x, y) / (g(x,x) g(y,y) − g(x,y)²)` and the round unit sphere
//! has `K = +1`.

mod array;
mod berger;
mod normal;
mod weyl;

use serde::Serialize;

use crate::expr::Expr;
use crate::linalg::Matrix;
use crate::manifold::{MetricChart, MetricJet, MetricJet1};
use crate::{Error, Result, Scalar};

pub use array::{Tensor3, Tensor4};
pub use berger::{berger_curvatures, BergerCurvatures};
pub use normal::{normal_taylor_check, NormalTaylorReport};
pub use weyl::{
    curvature_space_dim, ricci_contraction, w_perp, wedge, weyl_decompose, CurvatureAlgebraElement, WeylDecomposition,
};

/// Christoffel symbols `gamma[i, j, k] = Γ^i_jk` at a point.
#[derive(Clone, Debug, Serialize)]
pub struct ChristoffelField<T> {
    pub point: Vec<T>,
    pub gamma: Tensor3<T>,
}

/// Christoffel symbols of the first kind, `Γ_{m,jk} = ½(∂_j g_mk + ∂_k g_mj − ∂_m g_jk)`.
fn first_kind<T: Scalar>(dg: &[Matrix<T>]) -> Tensor3<T> {
    let n = dg.len();
    let half = T::of(0.5);
    let mut out = Tensor3::zeros(n);
    for m in 0..n {
        for j in 0..n {
            for k in j..n {
                let v = half * (dg[j][(m, k)] + dg[k][(m, j)] - dg[m][(j, k)]);
                out[[m, j, k]] = v;
                out[[m, k, j]] = v;
            }
        }
    }
    out
}

fn raise<T: Scalar>(ginv: &Matrix<T>, low: &Tensor3<T>) -> Tensor3<T> {
    let n = ginv.rows();
    let mut out = Tensor3::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut s = T::zero();
                for m in 0..n {
                    s += ginv[(i, m)] * low[[m, j, k]];
                }
                out[[i, j, k]] = s;
                out[[i, k, j]] = s;
            }
        }
    }
    out
}

pub(crate) fn christoffel_from_jet<T: Scalar>(jet: &MetricJet1<T>) -> Tensor3<T> {
    raise(&jet.ginv, &first_kind(&jet.dg))
}

/// `Γ^i_jk(p)`. Symmetric in `j, k` by construction.
pub fn christoffel<T: Scalar>(chart: &MetricChart<T>, p: &[T]) -> Result<ChristoffelField<T>> {
    let jet = chart.metric_d1(p)?;
    Ok(ChristoffelField {
        point: p.to_vec(),
        gamma: christoffel_from_jet(&jet),
    })
}

/// `Σ_jk Γ^i_jk v^j w^k`.
pub fn contract_gamma<T: Scalar>(gamma: &Tensor3<T>, v: &[T], w: &[T]) -> Vec<T> {
    let n = gamma.dim();
    (0..n)
        .map(|i| {
            let mut s = T::zero();
            for j in 0..n {
                for k in 0..n {
                    s += gamma[[i, j, k]] * v[j] * w[k];
                }
            }
            s
        })
        .collect()
}

/// Curvature at a point, with raised and lowered component arrays.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureTensor<T> {
    pub point: Vec<T>,
    /// `up[i, j, h, k] = R^i_jhk`.
    pub up: Tensor4<T>,
    /// `low[a, b, c, d] = g(R_{∂a ∂b} ∂c, ∂d)`.
    pub low: Tensor4<T>,
    pub metric: Matrix<T>,
}

impl<T: Scalar> CurvatureTensor<T> {
    pub fn dim(&self) -> usize {
        self.up.dim()
    }

    /// `g(R_xy z, w)` for coordinate vectors.
    pub fn form(&self, x: &[T], y: &[T], z: &[T], w: &[T]) -> T {
        let n = self.dim();
        let mut s = T::zero();
        for a in 0..n {
            if x[a] == T::zero() {
                continue;
            }
            for b in 0..n {
                if y[b] == T::zero() {
                    continue;
                }
                for c in 0..n {
                    for d in 0..n {
                        s += self.low[[a, b, c, d]] * x[a] * y[b] * z[c] * w[d];
                    }
                }
            }
        }
        s
    }

    /// `R_xy z` as a coordinate vector.
    pub fn operator(&self, x: &[T], y: &[T], z: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = T::zero();
                for j in 0..n {
                    for h in 0..n {
                        for k in 0..n {
                            s += self.up[[i, j, h, k]] * z[j] * x[h] * y[k];
                        }
                    }
                }
                s
            })
            .collect()
    }
}

/// `Γ` and its coordinate derivatives, `dgamma[l][i, j, k] = ∂_l Γ^i_jk`.
pub(crate) fn christoffel_with_derivatives<T: Scalar>(jet: &MetricJet<T>) -> (Tensor3<T>, Vec<Tensor3<T>>) {
    let n = jet.g.rows();
    let gamma1 = first_kind(&jet.dg);
    let gamma = raise(&jet.ginv, &gamma1);
    let half = T::of(0.5);
    let mut dgamma = vec![Tensor3::zeros(n); n];
    for l in 0..n {
        // ∂_l g^{im} = −g^{ia} ∂_l g_ab g^{bm}
        let dginv = jet.ginv.mul(&jet.dg[l]).mul(&jet.ginv).scale(-T::one());
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    let mut s = T::zero();
                    for m in 0..n {
                        let d1 = half
                            * (jet.ddg[l][j][(m, k)] + jet.ddg[l][k][(m, j)] - jet.ddg[l][m][(j, k)]);
                        s += dginv[(i, m)] * gamma1[[m, j, k]] + jet.ginv[(i, m)] * d1;
                    }
                    dgamma[l][[i, j, k]] = s;
                    dgamma[l][[i, k, j]] = s;
                }
            }
        }
    }
    (gamma, dgamma)
}

/// Curvature from a full metric jet.
pub(crate) fn curvature_from_jet<T: Scalar>(p: &[T], jet: &MetricJet<T>) -> CurvatureTensor<T> {
    let n = jet.g.rows();
    let (gamma, dgamma) = christoffel_with_derivatives(jet);
    let mut up = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for h in 0..n {
                for k in 0..n {
                    if h == k {
                        continue;
                    }
                    let mut s = dgamma[k][[i, h, j]] - dgamma[h][[i, k, j]];
                    for m in 0..n {
                        s += gamma[[m, h, j]] * gamma[[i, k, m]] - gamma[[m, k, j]] * gamma[[i, h, m]];
                    }
                    up[[i, j, h, k]] = s;
                }
            }
        }
    }
    let low = lower(&up, &jet.g);
    CurvatureTensor {
        point: p.to_vec(),
        up,
        low,
        metric: jet.g.clone(),
    }
}

/// `low[a, b, c, d] = g_dm R^m_cab`.
fn lower<T: Scalar>(up: &Tensor4<T>, g: &Matrix<T>) -> Tensor4<T> {
    let n = up.dim();
    Tensor4::from_fn(n, |a, b, c, d| {
        let mut s = T::zero();
        for m in 0..n {
            s += g[(d, m)] * up[[m, c, a, b]];
        }
        s
    })
}

/// Full curvature tensor at `p`.
pub fn curvature<T: Scalar>(chart: &MetricChart<T>, p: &[T]) -> Result<CurvatureTensor<T>> {
    let jet = chart.metric_at(p)?;
    Ok(curvature_from_jet(p, &jet))
}

/// Residuals of the four algebraic curvature identities, each normalized by
/// the largest component (absolute when the tensor vanishes).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymmetryReport<T> {
    /// `R_ab = −R_ba`
    pub r1: T,
    /// `g(R_ab c, d) = −g(R_ab d, c)`
    pub r2: T,
    /// cyclic sum `R_ab c + R_bc a + R_ca b = 0`
    pub r3: T,
    /// pair symmetry `g(R_ab c, d) = g(R_cd a, b)`
    pub r4: T,
}

impl<T: Scalar> SymmetryReport<T> {
    pub fn max(&self) -> T {
        self.r1.max(self.r2).max(self.r3).max(self.r4)
    }
}

pub fn check_symmetries<T: Scalar>(r: &CurvatureTensor<T>) -> SymmetryReport<T> {
    check_symmetries_low(&r.low)
}

/// [`check_symmetries`] on a bare lowered array.
pub fn check_symmetries_low<T: Scalar>(low: &Tensor4<T>) -> SymmetryReport<T> {
    let n = low.dim();
    let scale = {
        let m = low.max_abs();
        if m > T::zero() {
            m
        } else {
            T::one()
        }
    };
    let mut rep = SymmetryReport {
        r1: T::zero(),
        r2: T::zero(),
        r3: T::zero(),
        r4: T::zero(),
    };
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let v = low[[a, b, c, d]];
                    rep.r1 = rep.r1.max((v + low[[b, a, c, d]]).abs());
                    rep.r2 = rep.r2.max((v + low[[a, b, d, c]]).abs());
                    rep.r3 = rep.r3.max((v + low[[b, c, a, d]] + low[[c, a, b, d]]).abs());
                    rep.r4 = rep.r4.max((v - low[[c, d, a, b]]).abs());
                }
            }
        }
    }
    rep.r1 /= scale;
    rep.r2 /= scale;
    rep.r3 /= scale;
    rep.r4 /= scale;
    rep
}

/// Second Bianchi identity residual
/// `max |R^i_jhk|l + R^i_jkl|h + R^i_jlh|k|`, normalized by `max |R^i_jhk|`
/// (absolute when the curvature vanishes). Partial derivatives of the
/// curvature are central differences with step `cbrt(ε)·max(1, |p_l|)`.
pub fn bianchi_residual<T: Scalar>(chart: &MetricChart<T>, p: &[T]) -> Result<T> {
    let n = chart.dim();
    let jet = chart.metric_at(p)?;
    let r0 = curvature_from_jet(p, &jet);
    let gamma = christoffel_from_jet(&MetricJet1 {
        g: jet.g.clone(),
        ginv: jet.ginv.clone(),
        dg: jet.dg.clone(),
    });
    let mut dr = Vec::with_capacity(n);
    for l in 0..n {
        let h = T::epsilon().cbrt() * p[l].abs().max(T::one());
        let mut pp = p.to_vec();
        let mut pm = p.to_vec();
        pp[l] += h;
        pm[l] -= h;
        let width = pp[l] - pm[l];
        let rp = curvature(chart, &pp)?;
        let rm = curvature(chart, &pm)?;
        dr.push(rp.up.sub(&rm.up).scale(T::one() / width));
    }
    // covariant derivative R^i_jhk|l
    let cov = |i: usize, j: usize, h: usize, k: usize, l: usize| -> T {
        let up = &r0.up;
        let mut s = dr[l][[i, j, h, k]];
        for m in 0..n {
            s += gamma[[i, l, m]] * up[[m, j, h, k]];
            s -= gamma[[m, l, j]] * up[[i, m, h, k]];
            s -= gamma[[m, l, h]] * up[[i, j, m, k]];
            s -= gamma[[m, l, k]] * up[[i, j, h, m]];
        }
        s
    };
    let mut worst = T::zero();
    for i in 0..n {
        for j in 0..n {
            for h in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let c = cov(i, j, h, k, l) + cov(i, j, k, l, h) + cov(i, j, l, h, k);
                        worst = worst.max(c.abs());
                    }
                }
            }
        }
    }
    let scale = r0.up.max_abs();
    Ok(if scale > T::of(1e-12) { worst / scale } else { worst })
}

/// Sectional curvature of the plane spanned by `x` and `y`.
pub fn sectional<T: Scalar>(r: &CurvatureTensor<T>, x: &[T], y: &[T]) -> Result<T> {
    let g = &r.metric;
    let gxx = g.form(x, x);
    let gyy = g.form(y, y);
    let gxy = g.form(x, y);
    let den = gxx * gyy - gxy * gxy;
    if !(den > T::of(1e-12) * gxx * gyy) {
        return Err(Error::DegeneratePlane);
    }
    Ok(r.form(x, y, x, y) / den)
}

#[derive(Clone, Debug, Serialize)]
pub struct RicciData<T> {
    pub point: Vec<T>,
    pub ric: Matrix<T>,
    pub scalar: T,
}

/// Ricci tensor `Ric(v, w) = tr(x ↦ R_vx w)` and scalar curvature.
pub fn ricci<T: Scalar>(r: &CurvatureTensor<T>) -> Result<RicciData<T>> {
    let n = r.dim();
    let ginv = r
        .metric
        .inverse()
        .ok_or_else(|| Error::SingularMetric {
            point: crate::scalar::to_f64_vec(&r.point),
        })?;
    let mut ric = Matrix::zeros(n, n);
    for v in 0..n {
        for w in 0..n {
            let mut s = T::zero();
            for i in 0..n {
                s += r.up[[i, w, v, i]];
            }
            ric[(v, w)] = s;
        }
    }
    // symmetric up to rounding; store the symmetric part
    let ric = ric.add(&ric.transpose()).scale(T::of(0.5));
    let scalar = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .map(|(a, b)| ginv[(a, b)] * ric[(a, b)])
        .sum();
    Ok(RicciData {
        point: r.point.clone(),
        ric,
        scalar,
    })
}

/// Killing-equation residual of the vector field with component expressions
/// `field`: the maximum over `points` and coordinate pairs `(a, b)` of
/// `|g(D_a J, ∂_b) + g(∂_a, D_b J)|`.
pub fn killing_residual<T: Scalar>(
    chart: &MetricChart<T>,
    field: &[Expr],
    points: &[Vec<T>],
) -> Result<T> {
    let n = chart.dim();
    if field.len() != n {
        return Err(Error::BadParam(format!(
            "vector field has {} components, chart dimension is {n}",
            field.len()
        )));
    }
    let mut worst = T::zero();
    for p in points {
        let jet = chart.metric_d1(p)?;
        let gamma = christoffel_from_jet(&jet);
        let comps: Vec<_> = field.iter().map(|e| e.eval1(p)).collect::<Result<_>>()?;
        // dj[a][i] = (D_{∂a} J)^i
        let dj: Vec<Vec<T>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|i| {
                        let mut s = comps[i].grad[a];
                        for m in 0..n {
                            s += gamma[[i, a, m]] * comps[m].value;
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        for a in 0..n {
            for b in 0..n {
                let mut s = T::zero();
                for i in 0..n {
                    s += jet.g[(b, i)] * dj[a][i] + jet.g[(a, i)] * dj[b][i];
                }
                worst = worst.max(s.abs());
            }
        }
    }
    Ok(worst)
}
