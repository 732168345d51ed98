use std::sync::Arc;

use serde::Serialize;

use crate::linalg::{dot, svd, Matrix};
use crate::manifold::MetricChart;
use crate::quad::gauss_legendre_composite;
use crate::transport::Trajectory;
use crate::{Error, Result, Scalar};

use super::{
    driving_matrix_at, locate_conjugates, require_frame, vanishing_fundamental, DrivingField, FrameField,
    JacobiMatrix,
};

const CELL: f64 = 0.05;
const NODES: usize = 8;

fn pieces<T: Scalar>(a: T, b: T, fields: &[&FrameField<T>]) -> Vec<T> {
    let mut cuts = vec![a, b];
    for f in fields {
        cuts.extend(f.breakpoints().iter().copied().filter(|&t| t > a && t < b));
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    cuts
}

/// `I(V, Z) = ∫₀^L [g(V′, Z′) − g(R_{XV}X, Z)] ds` in arclength along the
/// whole geodesic (`X` the unit tangent). The fields are functions of the
/// geodesic parameter; the conversion to arclength uses the initial speed.
pub fn index_form<T: Scalar>(
    chart: &MetricChart<T>,
    geo: &Trajectory<T>,
    v: &FrameField<T>,
    z: &FrameField<T>,
) -> Result<T> {
    require_frame(geo)?;
    let t0 = geo.times()[0];
    let t1 = geo.t_end();
    let v0 = geo.velocity_at(0);
    let speed = chart.metric(geo.point_at(0))?.form(v0, v0).sqrt();
    let cuts = pieces(t0, t1, &[v, z]);
    let half = T::of(0.5);
    let mut total = T::zero();
    for w in cuts.windows(2) {
        let cells = ((w[1] - w[0]) / T::of(CELL)).ceil().to_usize().unwrap_or(1).max(2);
        total += gauss_legendre_composite(
            |t| {
                let m = driving_matrix_at(chart, geo, t)?;
                let m = m.add(&m.transpose()).scale(half);
                let (vv, zz) = (v.value(t), z.value(t));
                let kinetic = dot(&v.derivative(t), &z.derivative(t));
                Ok(kinetic - m.form(&vv, &zz))
            },
            w[0],
            w[1],
            cells,
            NODES,
        )?;
    }
    Ok(total / speed)
}

/// Fields `V_i = sin(√c s) E_i`, `i = 2..n`, in the geodesic parameter of a
/// geodesic with speed `speed`.
pub fn myers_fields<T: Scalar>(n: usize, c: T, speed: T) -> Vec<FrameField<T>> {
    let k = c.sqrt() * speed;
    (1..n)
        .map(|i| {
            let e: Vec<T> = (0..n).map(|j| if j == i { T::one() } else { T::zero() }).collect();
            FrameField::profiled(e, move |t| (k * t).sin(), move |t| k * (k * t).cos())
        })
        .collect()
}

fn jacobi_field<T: Scalar>(jm: Arc<JacobiMatrix<T>>, coeff: Vec<T>) -> FrameField<T> {
    let (j1, c1) = (jm.clone(), coeff.clone());
    FrameField::new(
        move |t| j1.interp(t).0.mul_vec(&c1),
        move |t| jm.interp(t).1.mul_vec(&coeff),
    )
}

/// The two sides of the Basic Inequality for a field `V` with `V(0) = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct BasicInequality<T> {
    pub iv: T,
    pub iy: T,
    /// `I(V) − I(Y)`; nonnegative up to quadrature error.
    pub gap: T,
    /// Drift of `g(Y′, Z) − g(Y, Z′)` over pairs of vanishing Jacobi fields.
    pub lemma1_drift: T,
    /// Frame components of `V(L) = Y(L)`.
    pub end_value: Vec<T>,
}

/// Compares `I(V)` with `I(Y)` for the Jacobi field `Y` with `Y(0) = 0`
/// and `Y(L) = V(L)`.
pub fn basic_inequality_check<T: Scalar>(
    chart: &MetricChart<T>,
    geo: &Trajectory<T>,
    v: &FrameField<T>,
) -> Result<BasicInequality<T>> {
    let drive = DrivingField::build(chart, geo)?;
    let t0 = geo.times()[0];
    if v.value(t0).iter().any(|x| x.abs() > T::of(1e-12)) {
        return Err(Error::BadParam("the field must vanish at the start".into()));
    }
    let jm = vanishing_fundamental(&drive);
    let (conj, _, _) = locate_conjugates(&jm);
    if let Some((t, _)) = conj.first() {
        return Err(Error::ConjugatePresent(t.as_f64()));
    }
    let l = geo.t_end();
    let end = v.value(l);
    let f_end = jm.f.last().unwrap();
    let coeff = f_end
        .solve(&end)
        .ok_or(Error::ConjugatePresent(l.as_f64()))?;
    let mut lemma1 = T::zero();
    for (f, fp) in jm.f.iter().zip(&jm.fp) {
        let w = fp.transpose().mul(f).sub(&f.transpose().mul(fp));
        lemma1 = lemma1.max(w.max_abs());
    }
    let y = jacobi_field(Arc::new(jm), coeff);
    let iv = index_form(chart, geo, v, v)?;
    let iy = index_form(chart, geo, &y, &y)?;
    Ok(BasicInequality {
        iv,
        iy,
        gap: iv - iy,
        lemma1_drift: lemma1,
        end_value: end,
    })
}

/// A broken field along a geodesic through an interior conjugate point
/// whose index is negative.
#[derive(Clone, Debug, Serialize)]
pub struct Witness<T> {
    /// The conjugate point.
    pub s2: T,
    /// Where the corner is cut.
    pub s1: T,
    pub length: T,
    /// Index of `(Y, Y, 0)`: zero in exact arithmetic.
    pub base_index: T,
    /// Index of `(Y, W, W)`.
    pub index: T,
    #[serde(skip)]
    pub field: Option<FrameField<T>>,
}

/// Builds `(Y, W, W)` on `[0, s1], [s1, s2], [s2, L]` where `Y` vanishes at
/// `0` and at the conjugate point `s2`, and `W` is the Jacobi field with
/// `W(s1) = Y(s1)`, `W(L) = 0`.
pub fn nonminimality_witness<T: Scalar>(chart: &MetricChart<T>, geo: &Trajectory<T>) -> Result<Witness<T>> {
    let drive = DrivingField::build(chart, geo)?;
    let n = drive.dim();
    let l = geo.t_end();
    let jm = vanishing_fundamental(&drive);
    let (conj, _, _) = locate_conjugates(&jm);
    let s2 = conj
        .iter()
        .map(|c| c.0)
        .find(|&t| t < l - T::of(1e-6))
        .ok_or(Error::ConjugateNotFound)?;
    // null direction of the normal block at s2
    let (f_s2, _) = jm.interp(s2);
    let block = Matrix::from_fn(n - 1, n - 1, |i, j| f_s2[(i + 1, j + 1)]);
    let null = svd(&block).v.column(n - 2);
    let mut coeff = vec![T::zero(); n];
    coeff[1..].copy_from_slice(&null);
    let jm = Arc::new(jm);
    let y = jacobi_field(jm.clone(), coeff);
    let zero = FrameField::parallel(vec![T::zero(); n]);
    let base = FrameField::join(y.clone(), zero, s2);
    let base_index = index_form(chart, geo, &base, &base)?;

    // full fundamental system Φ = [J(0)=E_a, J'(0)=0 | J(0)=0, J'(0)=E_a]
    let mut f0 = Matrix::zeros(n, 2 * n);
    let mut fp0 = Matrix::zeros(n, 2 * n);
    for a in 0..n {
        f0[(a, a)] = T::one();
        fp0[(a, n + a)] = T::one();
    }
    let phi = Arc::new(JacobiMatrix::solve(&drive, f0, fp0));
    let phi_l = phi.f.last().unwrap().clone();
    let mut delta = T::of(0.5) * s2.min(l - s2);
    for _ in 0..8 {
        let s1 = s2 - delta;
        let (phi_s1, _) = phi.interp(s1);
        let sys = Matrix::from_fn(2 * n, 2 * n, |i, j| {
            if i < n {
                phi_s1[(i, j)]
            } else {
                phi_l[(i - n, j)]
            }
        });
        let mut rhs = y.value(s1);
        rhs.extend(std::iter::repeat(T::zero()).take(n));
        if let Some(w) = sys.solve(&rhs) {
            let wf = jacobi_field(phi.clone(), w);
            let field = FrameField::join(y.clone(), wf, s1);
            let index = index_form(chart, geo, &field, &field)?;
            return Ok(Witness {
                s2,
                s1,
                length: l,
                base_index,
                index,
                field: Some(field),
            });
        }
        delta *= T::of(0.5);
    }
    Err(Error::NoConvergence {
        iterations: 8,
        best_residual: f64::NAN,
    })
}
