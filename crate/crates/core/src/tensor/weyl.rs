//! Algebraic curvature tensors and the Weyl decomposition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{check_symmetries_low, CurvatureTensor, SymmetryReport, Tensor4};
use crate::linalg::Matrix;
use crate::{Error, Result, Scalar};

/// A 4-index covariant tensor on one inner-product space, stored in the
/// lowered layout of [`CurvatureTensor::low`].
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureAlgebraElement<T> {
    pub metric: Matrix<T>,
    pub components: Tensor4<T>,
}

/// `A ∧ B = ½ Q_{A,B}` with
/// `Q_{A,B}(x,y,z,w) = A(x,z)B(y,w) + A(y,w)B(x,z) − A(x,w)B(y,z) − A(y,z)B(x,w)`.
/// The factor ½ makes `C_Ric(A∧g + g∧A) = (n−2)A + (tr A) g`.
pub fn wedge<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Tensor4<T> {
    let half = T::of(0.5);
    Tensor4::from_fn(a.rows(), |x, y, z, w| {
        half * (a[(x, z)] * b[(y, w)] + a[(y, w)] * b[(x, z)]
            - a[(x, w)] * b[(y, z)]
            - a[(y, z)] * b[(x, w)])
    })
}

impl<T: Scalar> CurvatureAlgebraElement<T> {
    pub fn new(metric: Matrix<T>, components: Tensor4<T>) -> Self {
        CurvatureAlgebraElement { metric, components }
    }

    pub fn from_curvature(r: &CurvatureTensor<T>) -> Self {
        CurvatureAlgebraElement {
            metric: r.metric.clone(),
            components: r.low.clone(),
        }
    }

    /// `K g∧g`, the constant-curvature tensor.
    pub fn constant_curvature(metric: Matrix<T>, k: T) -> Self {
        let components = wedge(&metric, &metric).scale(k);
        CurvatureAlgebraElement { metric, components }
    }

    pub fn dim(&self) -> usize {
        self.metric.rows()
    }

    fn ginv(&self) -> Result<Matrix<T>> {
        self.metric.inverse().ok_or(Error::SingularMetric { point: Vec::new() })
    }

    /// Random element with the skew and pair symmetries. With `cyclic` set the
    /// totally antisymmetric part is projected out as well, giving a tensor of
    /// curvature type.
    pub fn random(metric: Matrix<T>, seed: u64, cyclic: bool) -> Self {
        let n = metric.rows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = Tensor4::from_fn(n, |_, _, _, _| T::of(rng.gen_range(-1.0..1.0)));
        let quarter = T::of(0.25);
        let half = T::of(0.5);
        // skew in (a,b) and (c,d)
        let skew = Tensor4::from_fn(n, |a, b, c, d| {
            quarter * (raw[[a, b, c, d]] - raw[[b, a, c, d]] - raw[[a, b, d, c]] + raw[[b, a, d, c]])
        });
        let mut t = Tensor4::from_fn(n, |a, b, c, d| half * (skew[[a, b, c, d]] + skew[[c, d, a, b]]));
        if cyclic {
            let third = T::one() / T::of(3.0);
            let b = Tensor4::from_fn(n, |a, b, c, d| {
                third * (t[[a, b, c, d]] + t[[b, c, a, d]] + t[[c, a, b, d]])
            });
            t = t.sub(&b);
        }
        CurvatureAlgebraElement {
            metric,
            components: t,
        }
    }

    pub fn symmetries(&self) -> SymmetryReport<T> {
        check_symmetries_low(&self.components)
    }

    /// Ricci contraction `C_Ric(R)_bd = Σ g^{ac} R_abcd`.
    pub fn ricci_contraction(&self) -> Result<Matrix<T>> {
        Ok(ricci_contraction(&self.components, &self.ginv()?))
    }

    /// `⟨R, S⟩ = ¼ Σ R_abcd S^abcd`.
    pub fn inner(&self, other: &Tensor4<T>) -> Result<T> {
        Ok(inner(&self.components, other, &self.ginv()?))
    }
}

pub fn ricci_contraction<T: Scalar>(r: &Tensor4<T>, ginv: &Matrix<T>) -> Matrix<T> {
    let n = r.dim();
    Matrix::from_fn(n, n, |b, d| {
        let mut s = T::zero();
        for a in 0..n {
            for c in 0..n {
                s += ginv[(a, c)] * r[[a, b, c, d]];
            }
        }
        s
    })
}

fn inner<T: Scalar>(r: &Tensor4<T>, s: &Tensor4<T>, ginv: &Matrix<T>) -> T {
    let raised = s.in_basis(ginv);
    r.as_slice()
        .iter()
        .zip(raised.as_slice())
        .map(|(&a, &b)| a * b)
        .sum::<T>()
        * T::of(0.25)
}

fn trace<T: Scalar>(a: &Matrix<T>, ginv: &Matrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            s += ginv[(i, j)] * a[(i, j)];
        }
    }
    s
}

/// The right inverse of `C_Ric` on the Ricci-type summand:
/// `W⊥(A) = (A∧g + g∧A − (tr A/(n−1)) g∧g) / (n−2)`.
pub fn w_perp<T: Scalar>(a: &Matrix<T>, g: &Matrix<T>, ginv: &Matrix<T>) -> Tensor4<T> {
    let n = T::of_usize(g.rows());
    let tr = trace(a, ginv);
    let ag = wedge(a, g);
    let ga = wedge(g, a);
    let gg = wedge(g, g);
    ag.add(&ga)
        .sub(&gg.scale(tr / (n - T::one())))
        .scale(T::one() / (n - T::of(2.0)))
}

/// The three orthogonal pieces of a curvature tensor.
#[derive(Clone, Debug, Serialize)]
pub struct WeylDecomposition<T> {
    pub weyl: Tensor4<T>,
    pub traceless_ricci_part: Tensor4<T>,
    pub scalar_part: Tensor4<T>,
    pub weyl_norm: T,
    pub traceless_ricci_norm: T,
    pub scalar_norm: T,
    /// Largest |inner product| between two different pieces.
    pub max_cross_inner: T,
    /// `max |R − (weyl + traceless + scalar)|`.
    pub reassembly_error: T,
    /// `max |C_Ric(weyl)|`.
    pub weyl_contraction: T,
}

/// Splits `R = W + W⊥(Ric₀) + S/(n(n−1)) g∧g`.
pub fn weyl_decompose<T: Scalar>(r: &CurvatureAlgebraElement<T>) -> Result<WeylDecomposition<T>> {
    let n = r.dim();
    if n < 3 {
        return Err(Error::BadDimension { required: 3, got: n });
    }
    let g = &r.metric;
    let ginv = r.ginv()?;
    let ric = ricci_contraction(&r.components, &ginv);
    let s = trace(&ric, &ginv);
    let nf = T::of_usize(n);
    let ric0 = ric.sub(&g.scale(s / nf));
    let scalar_part = wedge(g, g).scale(s / (nf * (nf - T::one())));
    let traceless = w_perp(&ric0, g, &ginv);
    let weyl = r.components.sub(&scalar_part).sub(&traceless);
    let norm = |t: &Tensor4<T>| inner(t, t, &ginv).max(T::zero()).sqrt();
    let cross = [
        inner(&weyl, &traceless, &ginv),
        inner(&weyl, &scalar_part, &ginv),
        inner(&traceless, &scalar_part, &ginv),
    ]
    .iter()
    .fold(T::zero(), |m, x| m.max(x.abs()));
    let reassembly_error = weyl
        .add(&traceless)
        .add(&scalar_part)
        .sub(&r.components)
        .max_abs();
    let weyl_contraction = ricci_contraction(&weyl, &ginv).max_abs();
    Ok(WeylDecomposition {
        weyl_norm: norm(&weyl),
        traceless_ricci_norm: norm(&traceless),
        scalar_norm: norm(&scalar_part),
        weyl,
        traceless_ricci_part: traceless,
        scalar_part,
        max_cross_inner: cross,
        reassembly_error,
        weyl_contraction,
    })
}

/// Dimension of the space of curvature-type tensors, `n²(n²−1)/12`.
pub fn curvature_space_dim(n: usize) -> usize {
    n * n * (n * n - 1) / 12
}
