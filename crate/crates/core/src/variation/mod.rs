//! Jacobi fields, conjugate points, energy, first and second variation.
//!
//! Everything along a geodesic is written in the parallel orthonormal frame
//! carried by its [`Trajectory`], where the Jacobi equation becomes
//! `f″ = −M(t) f` with `M_ij = g(R_{γ′E_j}γ′, E_i)`.

mod field;
mod first;
mod index;

use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{svd, Matrix};
use crate::manifold::MetricChart;
use crate::ode::{hermite, OdeSettings};
use crate::tensor::curvature;
use crate::transport::{integrate_geodesic, Trajectory};
use crate::{Error, Result, Scalar};

pub use field::FrameField;
pub use first::{energy_report, first_variation, EndCondition, EnergyReport, FirstVariation, RectangleSpec};
pub use index::{
    basic_inequality_check, index_form, myers_fields, nonminimality_witness, BasicInequality, Witness,
};

/// `M(t)` for the frame and velocity given.
fn driving_from_state<T: Scalar>(chart: &MetricChart<T>, x: &[T], v: &[T], frame: &[Vec<T>]) -> Result<Matrix<T>> {
    let r = curvature(chart, x)?;
    let n = frame.len();
    Ok(Matrix::from_fn(n, n, |i, j| r.form(v, &frame[j], v, &frame[i])))
}

/// The driving matrix at an arbitrary parameter value of a framed geodesic.
pub fn driving_matrix_at<T: Scalar>(chart: &MetricChart<T>, geo: &Trajectory<T>, t: T) -> Result<Matrix<T>> {
    let (x, v, frame) = geo.state(t);
    driving_from_state(chart, &x, &v, &frame)
}

fn require_frame<T: Scalar>(geo: &Trajectory<T>) -> Result<()> {
    if !geo.has_frame() {
        return Err(Error::BadParam(
            "the geodesic must carry a parallel frame".into(),
        ));
    }
    Ok(())
}

/// `M(t)` on the trajectory grid and at every step midpoint, which is what
/// an RK4 step on the same grid consumes.
#[derive(Clone, Debug, Serialize)]
pub struct DrivingField<T> {
    pub times: Vec<T>,
    pub grid: Vec<Matrix<T>>,
    pub mid: Vec<Matrix<T>>,
    /// Initial speed of the geodesic.
    pub speed: T,
    /// `max |M − Mᵀ|` over all samples.
    pub symmetry_defect: T,
}

impl<T: Scalar> DrivingField<T> {
    pub fn build(chart: &MetricChart<T>, geo: &Trajectory<T>) -> Result<Self> {
        require_frame(geo)?;
        let times = geo.times().to_vec();
        let grid = (0..times.len())
            .into_par_iter()
            .map(|k| driving_from_state(chart, geo.point_at(k), geo.velocity_at(k), &geo.frame_at(k)))
            .collect::<Result<Vec<_>>>()?;
        let mid = (0..times.len().saturating_sub(1))
            .into_par_iter()
            .map(|k| driving_matrix_at(chart, geo, (times[k] + times[k + 1]) * T::of(0.5)))
            .collect::<Result<Vec<_>>>()?;
        let symmetry_defect = grid
            .iter()
            .chain(&mid)
            .map(|m| m.symmetry_defect())
            .fold(T::zero(), |a, b| a.max(b));
        let v0 = geo.velocity_at(0);
        let speed = chart.metric(geo.point_at(0))?.form(v0, v0).sqrt();
        Ok(DrivingField {
            times,
            grid,
            mid,
            speed,
            symmetry_defect,
        })
    }

    pub fn dim(&self) -> usize {
        self.grid[0].rows()
    }
}

/// Solutions `F(t)` (`n × m`, frame components) of `F″ = −M F`.
#[derive(Clone, Debug, Serialize)]
pub struct JacobiMatrix<T> {
    pub times: Vec<T>,
    pub f: Vec<Matrix<T>>,
    pub fp: Vec<Matrix<T>>,
    pub fpp: Vec<Matrix<T>>,
}

fn stack<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Vec<T> {
    let mut v = a.as_slice().to_vec();
    v.extend_from_slice(b.as_slice());
    v
}

impl<T: Scalar> JacobiMatrix<T> {
    /// RK4 on the grid of `drive`, one step per grid interval.
    pub fn solve(drive: &DrivingField<T>, f0: Matrix<T>, fp0: Matrix<T>) -> Self {
        let (n, m) = (f0.rows(), f0.cols());
        let times = drive.times.clone();
        let mut f = vec![f0];
        let mut fp = vec![fp0];
        let mut fpp = vec![drive.grid[0].mul(&f[0]).scale(-T::one())];
        let half = T::of(0.5);
        let sixth = T::one() / T::of(6.0);
        for k in 0..times.len().saturating_sub(1) {
            let h = times[k + 1] - times[k];
            let (x, xp) = (&f[k], &fp[k]);
            let acc = |mm: &Matrix<T>, y: &Matrix<T>| mm.mul(y).scale(-T::one());
            let k1x = xp.clone();
            let k1v = acc(&drive.grid[k], x);
            let x2 = x.add(&k1x.scale(half * h));
            let v2 = xp.add(&k1v.scale(half * h));
            let k2x = v2.clone();
            let k2v = acc(&drive.mid[k], &x2);
            let x3 = x.add(&k2x.scale(half * h));
            let v3 = xp.add(&k2v.scale(half * h));
            let k3x = v3.clone();
            let k3v = acc(&drive.mid[k], &x3);
            let x4 = x.add(&k3x.scale(h));
            let v4 = xp.add(&k3v.scale(h));
            let k4x = v4;
            let k4v = acc(&drive.grid[k + 1], &x4);
            let comb = |a: &Matrix<T>, b: &Matrix<T>, c: &Matrix<T>, d: &Matrix<T>| {
                a.add(&b.scale(T::of(2.0)))
                    .add(&c.scale(T::of(2.0)))
                    .add(d)
                    .scale(sixth * h)
            };
            let nx = x.add(&comb(&k1x, &k2x, &k3x, &k4x));
            let nv = xp.add(&comb(&k1v, &k2v, &k3v, &k4v));
            fpp.push(acc(&drive.grid[k + 1], &nx));
            f.push(nx);
            fp.push(nv);
        }
        debug_assert!(f.iter().all(|x| x.rows() == n && x.cols() == m));
        JacobiMatrix { times, f, fp, fpp }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Hermite interpolation of `(F, F′)` at `t`.
    pub fn interp(&self, t: T) -> (Matrix<T>, Matrix<T>) {
        let (n, m) = (self.f[0].rows(), self.f[0].cols());
        if self.times.len() == 1 {
            return (self.f[0].clone(), self.fp[0].clone());
        }
        let k = self
            .times
            .partition_point(|&s| s <= t)
            .saturating_sub(1)
            .min(self.times.len() - 2);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let y0 = stack(&self.f[k], &self.fp[k]);
        let y1 = stack(&self.f[k + 1], &self.fp[k + 1]);
        let d0 = stack(&self.fp[k], &self.fpp[k]);
        let d1 = stack(&self.fp[k + 1], &self.fpp[k + 1]);
        let y = hermite(t0, t1, &y0, &d0, &y1, &d1, t);
        let nm = n * m;
        let f = Matrix::from_fn(n, m, |i, j| y[i * m + j]);
        let fp = Matrix::from_fn(n, m, |i, j| y[nm + i * m + j]);
        (f, fp)
    }
}

/// One Jacobi field along a framed geodesic.
#[derive(Clone, Debug, Serialize)]
pub struct JacobiSolution<T> {
    pub times: Vec<T>,
    /// Frame components of `J` at each sample.
    pub f: Vec<Vec<T>>,
    /// Frame components of `J′`.
    pub fp: Vec<Vec<T>>,
    /// `M(t)` at each sample.
    pub driving: Vec<Matrix<T>>,
    pub symmetry_defect: T,
    /// `max |f_1(t) − (f_1(0) + f_1′(0) t)|` for the tangential component.
    pub tangential_residual: T,
}

impl<T: Scalar> JacobiSolution<T> {
    /// `g(J, J)` at sample `k`.
    pub fn norm_sq(&self, k: usize) -> T {
        self.f[k].iter().map(|&x| x * x).sum()
    }
}

/// Frame components of a coordinate vector at the start of the geodesic.
pub fn frame_components<T: Scalar>(chart: &MetricChart<T>, geo: &Trajectory<T>, w: &[T]) -> Result<Vec<T>> {
    let g = chart.metric(geo.point_at(0))?;
    Ok(geo.frame_at(0).iter().map(|e| g.form(e, w)).collect())
}

/// Solves `J″ + R_{γ′J}γ′ = 0` with `J(0) = j0`, `J′(0) = j0p` (coordinate
/// vectors at the start of `geo`).
pub fn jacobi_solve<T: Scalar>(
    chart: &MetricChart<T>,
    geo: &Trajectory<T>,
    j0: &[T],
    j0p: &[T],
) -> Result<JacobiSolution<T>> {
    require_frame(geo)?;
    let drive = DrivingField::build(chart, geo)?;
    let f0 = frame_components(chart, geo, j0)?;
    let fp0 = frame_components(chart, geo, j0p)?;
    Ok(jacobi_from_frame(&drive, &f0, &fp0))
}

/// As [`jacobi_solve`] with initial data already in frame components.
pub fn jacobi_from_frame<T: Scalar>(drive: &DrivingField<T>, f0: &[T], fp0: &[T]) -> JacobiSolution<T> {
    let n = f0.len();
    let col = |v: &[T]| Matrix::from_fn(n, 1, |i, _| v[i]);
    let sol = JacobiMatrix::solve(drive, col(f0), col(fp0));
    let f: Vec<Vec<T>> = sol.f.iter().map(|m| m.column(0)).collect();
    let fp: Vec<Vec<T>> = sol.fp.iter().map(|m| m.column(0)).collect();
    let tangential_residual = sol
        .times
        .iter()
        .zip(&f)
        .map(|(&t, v)| (v[0] - (f0[0] + fp0[0] * (t - sol.times[0]))).abs())
        .fold(T::zero(), |a, b| a.max(b));
    JacobiSolution {
        times: sol.times,
        f,
        fp,
        driving: drive.grid.clone(),
        symmetry_defect: drive.symmetry_defect,
        tangential_residual,
    }
}

/// Conjugate points of the start along a geodesic.
#[derive(Clone, Debug, Serialize)]
pub struct ConjugateReport<T> {
    pub label: String,
    pub t_conjugate: Vec<T>,
    pub multiplicities: Vec<usize>,
    /// `(t, det)` of the normal block of the Jacobi matrix.
    pub det_samples: Vec<(T, T)>,
    /// Largest singular value met; the rank threshold is `1e-7` times this.
    pub scale: T,
    pub tmax: T,
}

impl<T: Scalar> ConjugateReport<T> {
    pub fn first(&self) -> Option<T> {
        self.t_conjugate.first().copied()
    }

    pub fn det_csv(&self) -> String {
        let mut s = String::from("t,det\n");
        for (t, d) in &self.det_samples {
            s.push_str(&format!("{:.16e},{:.16e}\n", t.as_f64(), d.as_f64()));
        }
        s
    }
}

/// Normal block of the Jacobi matrix with `J(0) = 0`, `J′(0) = E_a`.
fn normal_block<T: Scalar>(f: &Matrix<T>) -> Matrix<T> {
    let n = f.rows();
    Matrix::from_fn(n - 1, n - 1, |i, j| f[(i + 1, j + 1)])
}

fn smallest_singular<T: Scalar>(m: &Matrix<T>) -> T {
    *svd(m).singular_values.last().unwrap()
}

/// Fundamental matrix with `J(0) = 0` and `J′(0)` running over the frame.
pub(crate) fn vanishing_fundamental<T: Scalar>(drive: &DrivingField<T>) -> JacobiMatrix<T> {
    let n = drive.dim();
    JacobiMatrix::solve(drive, Matrix::zeros(n, n), Matrix::identity(n))
}

/// Zeros of the normal block on `(0, tmax]` with their rank drops.
pub(crate) fn locate_conjugates<T: Scalar>(jm: &JacobiMatrix<T>) -> (Vec<(T, usize)>, T, Vec<(T, T)>) {
    let n = jm.f[0].rows();
    if n < 2 {
        return (Vec::new(), T::zero(), Vec::new());
    }
    let blocks: Vec<Matrix<T>> = jm.f.iter().map(normal_block).collect();
    let sv: Vec<Vec<T>> = blocks.iter().map(|b| svd(b).singular_values).collect();
    let smin: Vec<T> = sv.iter().map(|s| *s.last().unwrap()).collect();
    let scale = sv.iter().map(|s| s[0]).fold(T::zero(), |a, b| a.max(b));
    let det: Vec<(T, T)> = jm.times.iter().zip(&blocks).map(|(&t, b)| (t, b.det())).collect();
    let threshold = T::of(1e-7) * scale;
    let last = jm.len() - 1;
    let mut out: Vec<(T, usize)> = Vec::new();
    let sigma_at = |t: T| smallest_singular(&normal_block(&jm.interp(t).0));
    for k in 1..=last {
        let left = smin[k] <= smin[k - 1];
        let right = k == last || smin[k] <= smin[k + 1];
        if !(left && right) {
            continue;
        }
        // coarse filter: a genuine zero makes the sampled minimum small
        if smin[k] > T::of(0.1) * scale {
            continue;
        }
        let lo = jm.times[k - 1];
        let hi = if k == last { jm.times[k] } else { jm.times[k + 1] };
        let t = golden_min(&sigma_at, lo, hi);
        let block = normal_block(&jm.interp(t).0);
        let s = svd(&block).singular_values;
        if *s.last().unwrap() < threshold {
            let mult = s.iter().filter(|&&x| x < threshold).count();
            if out.last().map_or(true, |(p, _)| (t - *p).abs() > T::of(1e-6)) {
                out.push((t, mult));
            }
        }
    }
    (out, scale, det)
}

fn golden_min<T: Scalar>(f: &impl Fn(T) -> T, mut a: T, mut b: T) -> T {
    let r = T::of(0.618_033_988_749_894_9);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let tol = T::of(1e-13) * b.abs().max(T::one());
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    // the endpoints themselves may be the minimum (zero at tmax)
    let mid = (a + b) * T::of(0.5);
    let mut best = (mid, f(mid));
    for x in [a, b] {
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    best.0
}

/// First conjugate points of `p` along the unit-speed geodesic with initial
/// velocity `v_unit`, up to `tmax`.
pub fn conjugate_points<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    v_unit: &[T],
    tmax: T,
    settings: &OdeSettings<T>,
) -> Result<ConjugateReport<T>> {
    let g = chart.metric(p)?;
    let speed2 = g.form(v_unit, v_unit);
    if (speed2 - T::one()).abs() > T::of(1e-8) {
        return Err(Error::BadParam(format!(
            "initial velocity must have unit length, |v|^2 = {}",
            speed2.as_f64()
        )));
    }
    let geo = integrate_geodesic(chart, p, v_unit, tmax, settings)?;
    conjugate_points_along(chart, &geo)
}

/// Conjugate points of the start of an existing framed geodesic.
pub fn conjugate_points_along<T: Scalar>(chart: &MetricChart<T>, geo: &Trajectory<T>) -> Result<ConjugateReport<T>> {
    let drive = DrivingField::build(chart, geo)?;
    let jm = vanishing_fundamental(&drive);
    let (found, scale, det_samples) = locate_conjugates(&jm);
    Ok(ConjugateReport {
        label: geo.label().to_string(),
        t_conjugate: found.iter().map(|x| x.0).collect(),
        multiplicities: found.iter().map(|x| x.1).collect(),
        det_samples,
        scale,
        tmax: geo.t_end(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{builtin, parse_params};
    use std::f64::consts::PI;

    fn chart(name: &str, p: &str) -> MetricChart<f64> {
        builtin(name, &parse_params(p).unwrap()).unwrap()
    }

    fn unit(c: &MetricChart<f64>, p: &[f64], dir: &[f64]) -> Vec<f64> {
        let g = c.metric(p).unwrap();
        let s = g.form(dir, dir).sqrt();
        dir.iter().map(|x| x / s).collect()
    }

    #[test]
    fn sphere_jacobi_is_sine() {
        let c = chart("sphere_stereo", "n=2,R=1");
        let p = [0.1, 0.2];
        let v = unit(&c, &p, &[1.0, 0.3]);
        let geo = integrate_geodesic(&c, &p, &v, PI, &OdeSettings::default()).unwrap();
        let e = geo.frame_at(0);
        let j = jacobi_solve(&c, &geo, &[0.0, 0.0], &e[1]).unwrap();
        for (t, f) in j.times.iter().zip(&j.f) {
            assert!((f[1] - t.sin()).abs() < 1e-6);
        }
        assert!(j.symmetry_defect < 1e-8);
        assert!(j.tangential_residual < 1e-7);
    }

    #[test]
    fn euclidean_jacobi_is_linear() {
        let c = chart("euclidean", "n=3");
        let p = [0.0, 1.0, 2.0];
        let geo = integrate_geodesic(&c, &p, &[1.0, 0.0, 0.0], 2.0, &OdeSettings::default()).unwrap();
        let j = jacobi_solve(&c, &geo, &[0.5, 1.0, 0.0], &[0.25, 0.0, -1.0]).unwrap();
        let f0 = frame_components(&c, &geo, &[0.5, 1.0, 0.0]).unwrap();
        let fp0 = frame_components(&c, &geo, &[0.25, 0.0, -1.0]).unwrap();
        for (t, f) in j.times.iter().zip(&j.f) {
            for i in 0..3 {
                assert!((f[i] - (f0[i] + t * fp0[i])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hyperbolic_jacobi_is_sinh() {
        let c = chart("hyperbolic_ball", "n=2");
        let p = [0.0, 0.0];
        let v = unit(&c, &p, &[1.0, 0.0]);
        let geo = integrate_geodesic(&c, &p, &v, 5.0, &OdeSettings::default()).unwrap();
        let e = geo.frame_at(0);
        let j = jacobi_solve(&c, &geo, &[0.0, 0.0], &e[1]).unwrap();
        for (t, f) in j.times.iter().zip(&j.f).skip(1) {
            assert!((f[1] / t.sinh() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn conjugate_points_on_spheres() {
        let c = chart("sphere_stereo", "n=2,R=1");
        let p = [0.2, 0.0];
        let v = unit(&c, &p, &[0.0, 1.0]);
        let r = conjugate_points(&c, &p, &v, 4.0, &OdeSettings::default()).unwrap();
        assert_eq!(r.t_conjugate.len(), 1);
        assert!((r.t_conjugate[0] - PI).abs() < 1e-4);
        assert_eq!(r.multiplicities, vec![1]);

        let c3 = chart("sphere_stereo", "n=3,R=1");
        let p = [0.1, 0.0, 0.2];
        let v = unit(&c3, &p, &[0.3, 1.0, 0.0]);
        let r = conjugate_points(&c3, &p, &v, 4.0, &OdeSettings::default()).unwrap();
        assert_eq!(r.t_conjugate.len(), 1);
        assert!((r.t_conjugate[0] - PI).abs() < 1e-4);
        assert_eq!(r.multiplicities, vec![2]);
    }

    #[test]
    fn no_conjugate_points_without_positive_curvature() {
        for (name, params, p) in [("euclidean", "n=2", [3.0, 1.0]), ("hyperbolic_ball", "n=2", [0.0, 0.0])] {
            let c = chart(name, params);
            let v = unit(&c, &p, &[1.0, 0.5]);
            let r = conjugate_points(&c, &p, &v, 10.0, &OdeSettings::default());
            // the hyperbolic geodesic of length 10 stays inside the ball
            let r = r.unwrap();
            assert!(r.t_conjugate.is_empty(), "{name}");
        }
    }

    #[test]
    fn unit_speed_is_required() {
        let c = chart("euclidean", "n=2");
        assert!(conjugate_points(&c, &[0.0, 0.0], &[2.0, 0.0], 1.0, &OdeSettings::default()).is_err());
    }
}
