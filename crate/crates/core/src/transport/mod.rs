//! Geodesics with parallel frames, the exponential and log maps, parallel
//! transport along arbitrary curves, and development.

mod develop;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{self, orthonormal_frame, Matrix};
use crate::manifold::{Curve, MetricChart};
use crate::ode::{integrate, OdeSettings, OdeSolution, OdeSystem};
use crate::scalar::to_f64_vec;
use crate::tensor::{christoffel_from_jet, christoffel_with_derivatives, contract_gamma};
use crate::{Error, Result, Scalar};

pub use develop::{develop, parallel_transport, reverse_develop, Development, TransportedVectors};

/// Geodesic equation, optionally carrying `frames` vectors transported
/// along with the velocity. State layout: `[x, v, E_1, …, E_m]`.
struct GeodesicSystem<'a, T: Scalar> {
    chart: &'a MetricChart<T>,
    frames: usize,
    /// `g(v, v)` at the start; the flow conserves it.
    speed2: T,
}

impl<T: Scalar> OdeSystem<T> for GeodesicSystem<'_, T> {
    fn dim(&self) -> usize {
        let n = self.chart.dim();
        n * (2 + self.frames)
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) -> Result<()> {
        let n = self.chart.dim();
        let (x, rest) = y.split_at(n);
        let v = &rest[..n];
        let jet = self.chart.metric_d1(x)?;
        let gamma = christoffel_from_jet(&jet);
        dy[..n].copy_from_slice(v);
        let acc = contract_gamma(&gamma, v, v);
        for i in 0..n {
            dy[n + i] = -acc[i];
        }
        for a in 0..self.frames {
            let off = n * (2 + a);
            let e = &y[off..off + n];
            let de = contract_gamma(&gamma, v, e);
            for i in 0..n {
                dy[off + i] = -de[i];
            }
        }
        Ok(())
    }

    fn accept(&self, _t: T, y: &[T]) -> Result<()> {
        let n = self.chart.dim();
        let x = &y[..n];
        self.chart.check_domain(x)?;
        // a step that lost half the conserved speed ran through chart infinity
        if self.speed2 > T::zero() {
            let s2 = self.chart.metric(x)?.form(&y[n..2 * n], &y[n..2 * n]);
            if !((s2 - self.speed2).abs() <= T::of(0.5) * self.speed2) {
                return Err(Error::DomainFault("geodesic left the chart".into()));
            }
        }
        Ok(())
    }
}

/// A geodesic sampled on the integrator grid, with an optional parallel
/// orthonormal frame whose first vector is the unit tangent.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    label: String,
    n: usize,
    frames: usize,
    solution: OdeSolution<T>,
    speed_drift: T,
}

impl<T: Scalar> Trajectory<T> {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn has_frame(&self) -> bool {
        self.frames == self.n
    }

    pub fn len(&self) -> usize {
        self.solution.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solution.is_empty()
    }

    pub fn times(&self) -> &[T] {
        &self.solution.t
    }

    pub fn t_end(&self) -> T {
        self.solution.t_end()
    }

    pub fn solution(&self) -> &OdeSolution<T> {
        &self.solution
    }

    /// Largest deviation of `√g(γ′, γ′)` from its initial value.
    pub fn speed_drift(&self) -> T {
        self.speed_drift
    }

    pub fn point_at(&self, k: usize) -> &[T] {
        &self.solution.y[k][..self.n]
    }

    pub fn velocity_at(&self, k: usize) -> &[T] {
        &self.solution.y[k][self.n..2 * self.n]
    }

    fn frame_of(&self, y: &[T]) -> Vec<Vec<T>> {
        let n = self.n;
        (0..self.frames)
            .map(|a| y[n * (2 + a)..n * (3 + a)].to_vec())
            .collect()
    }

    /// Parallel frame at sample `k`.
    pub fn frame_at(&self, k: usize) -> Vec<Vec<T>> {
        self.frame_of(&self.solution.y[k])
    }

    /// Interpolated state `(x, v, frame)` at `t`.
    pub fn state(&self, t: T) -> (Vec<T>, Vec<T>, Vec<Vec<T>>) {
        let y = self.solution.interp(t);
        let n = self.n;
        (y[..n].to_vec(), y[n..2 * n].to_vec(), self.frame_of(&y))
    }

    pub fn last_point(&self) -> Vec<T> {
        self.point_at(self.len() - 1).to_vec()
    }

    pub fn last_velocity(&self) -> Vec<T> {
        self.velocity_at(self.len() - 1).to_vec()
    }

    /// CSV with header `t,x1..xn,v1..vn[,e{a}_{i}…]` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.n;
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        for i in 1..=n {
            let _ = write!(out, ",v{i}");
        }
        for a in 1..=self.frames {
            for i in 1..=n {
                let _ = write!(out, ",e{a}_{i}");
            }
        }
        out.push('\n');
        for (t, y) in self.solution.t.iter().zip(&self.solution.y) {
            let _ = write!(out, "{:.16e}", t.as_f64());
            for v in y {
                let _ = write!(out, ",{:.16e}", v.as_f64());
            }
            out.push('\n');
        }
        out
    }

    /// Gram matrix defect `max |g(E_a, E_b) − δ_ab|` over all samples.
    pub fn frame_defect(&self, chart: &MetricChart<T>) -> Result<T> {
        let mut worst = T::zero();
        for k in 0..self.len() {
            let g = chart.metric(self.point_at(k))?;
            let e = self.frame_at(k);
            for a in 0..e.len() {
                for b in 0..e.len() {
                    let want = if a == b { T::one() } else { T::zero() };
                    worst = worst.max((g.form(&e[a], &e[b]) - want).abs());
                }
            }
        }
        Ok(worst)
    }
}

impl<T: Scalar> Curve<T> for Trajectory<T> {
    fn interval(&self) -> (T, T) {
        (self.solution.t_start(), self.solution.t_end())
    }

    fn point(&self, t: T) -> Vec<T> {
        self.solution.interp(t)[..self.n].to_vec()
    }

    fn velocity(&self, t: T) -> Vec<T> {
        self.solution.interp(t)[self.n..2 * self.n].to_vec()
    }

    fn acceleration(&self, t: T) -> Vec<T> {
        self.solution.interp_derivative(t)[self.n..2 * self.n].to_vec()
    }

    fn breakpoints(&self) -> Vec<T> {
        self.solution.t.clone()
    }
}

fn check_vector<T: Scalar>(chart: &MetricChart<T>, v: &[T]) -> Result<()> {
    if v.len() != chart.dim() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::BadParam(format!(
            "tangent vector must have {} finite components",
            chart.dim()
        )));
    }
    Ok(())
}

fn run_geodesic<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    v: &[T],
    frame: Option<Vec<Vec<T>>>,
    tmax: T,
    settings: &OdeSettings<T>,
) -> Result<Trajectory<T>> {
    check_vector(chart, v)?;
    let g0 = chart.metric(p)?;
    let n = chart.dim();
    let frame = frame.unwrap_or_default();
    let mut y0 = Vec::with_capacity(n * (2 + frame.len()));
    y0.extend_from_slice(p);
    y0.extend_from_slice(v);
    for e in &frame {
        y0.extend_from_slice(e);
    }
    let sys = GeodesicSystem {
        chart,
        frames: frame.len(),
        speed2: g0.form(v, v),
    };
    let sol = integrate(&sys, T::zero(), y0, tmax, settings).map_err(|f| match f.error {
        Error::DomainExit { t, last_point, .. } if last_point.len() >= 2 * n => Error::DomainExit {
            t,
            last_velocity: last_point[n..2 * n].to_vec(),
            last_point: last_point[..n].to_vec(),
        },
        e => e,
    })?;
    let s0 = g0.form(v, v).sqrt();
    let mut drift = T::zero();
    for y in &sol.y {
        let g = chart.metric(&y[..n])?;
        let s = g.form(&y[n..2 * n], &y[n..2 * n]).sqrt();
        drift = drift.max((s - s0).abs());
    }
    Ok(Trajectory {
        label: chart.label().to_string(),
        n,
        frames: frame.len(),
        solution: sol,
        speed_drift: drift,
    })
}

/// Geodesic from `p` with initial velocity `v` on `[0, tmax]`, carrying a
/// parallel orthonormal frame whose first vector is `v/|v|` (for `v ≠ 0`).
///
/// Leaving the chart stops the integration with [`Error::DomainExit`]
/// holding the last interior state.
pub fn integrate_geodesic<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    v: &[T],
    tmax: T,
    settings: &OdeSettings<T>,
) -> Result<Trajectory<T>> {
    check_vector(chart, v)?;
    let g = chart.metric(p)?;
    let lead = if linalg::norm(v) > T::zero() { Some(v) } else { None };
    let frame = orthonormal_frame(&g, lead);
    run_geodesic(chart, p, v, Some(frame), tmax, settings)
}

/// As [`integrate_geodesic`] with a caller-supplied frame at `p`.
pub fn integrate_geodesic_with_frame<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    v: &[T],
    frame: Vec<Vec<T>>,
    tmax: T,
    settings: &OdeSettings<T>,
) -> Result<Trajectory<T>> {
    run_geodesic(chart, p, v, Some(frame), tmax, settings)
}

/// Geodesic without a frame (cheaper; used by the shooting solvers).
pub fn integrate_geodesic_frameless<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    v: &[T],
    tmax: T,
    settings: &OdeSettings<T>,
) -> Result<Trajectory<T>> {
    run_geodesic(chart, p, v, None, tmax, settings)
}

/// `exp_p(v)`: the time-one point of the geodesic with initial velocity `v`.
pub fn exp_map<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    v: &[T],
    settings: &OdeSettings<T>,
) -> Result<Vec<T>> {
    check_vector(chart, v)?;
    chart.metric(p)?;
    if v.iter().all(|&x| x == T::zero()) {
        return Ok(p.to_vec());
    }
    let traj = integrate_geodesic_frameless(chart, p, v, T::one(), settings)?;
    Ok(traj.last_point())
}

/// Geodesic flow with its linearization along `cols` directions in the
/// initial state. State: `[x, v, X_1, V_1, …, X_cols, V_cols]`.
struct VariationalSystem<'a, T: Scalar> {
    chart: &'a MetricChart<T>,
    cols: usize,
}

impl<T: Scalar> OdeSystem<T> for VariationalSystem<'_, T> {
    fn dim(&self) -> usize {
        let n = self.chart.dim();
        2 * n * (self.cols + 1)
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) -> Result<()> {
        let n = self.chart.dim();
        let x = &y[..n];
        let v = &y[n..2 * n];
        let jet = self.chart.metric_at(x)?;
        let (gamma, dgamma) = christoffel_with_derivatives(&jet);
        dy[..n].copy_from_slice(v);
        let acc = contract_gamma(&gamma, v, v);
        let dacc: Vec<Vec<T>> = dgamma.iter().map(|dg| contract_gamma(dg, v, v)).collect();
        for i in 0..n {
            dy[n + i] = -acc[i];
        }
        let two = T::of(2.0);
        for a in 0..self.cols {
            let off = 2 * n * (a + 1);
            let xa = &y[off..off + n];
            let va = &y[off + n..off + 2 * n];
            let gv = contract_gamma(&gamma, v, va);
            for i in 0..n {
                dy[off + i] = va[i];
                let mut s = two * gv[i];
                for l in 0..n {
                    s += dacc[l][i] * xa[l];
                }
                dy[off + n + i] = -s;
            }
        }
        Ok(())
    }

    fn accept(&self, _t: T, y: &[T]) -> Result<()> {
        self.chart.check_domain(&y[..self.chart.dim()])
    }
}

/// `exp_p(v)` with its partial derivatives in the base point and in the
/// initial velocity (column `a` is the image of `∂_a`).
#[derive(Clone, Debug, Serialize)]
pub struct ExpJacobian<T> {
    pub point: Vec<T>,
    pub d_base: Matrix<T>,
    pub d_velocity: Matrix<T>,
}

fn linearized_exp<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    v: &[T],
    with_base: bool,
    settings: &OdeSettings<T>,
) -> Result<(Vec<T>, Vec<Matrix<T>>)> {
    check_vector(chart, v)?;
    chart.metric(p)?;
    let n = chart.dim();
    let cols = if with_base { 2 * n } else { n };
    let mut y0 = Vec::with_capacity(2 * n * (cols + 1));
    y0.extend_from_slice(p);
    y0.extend_from_slice(v);
    for c in 0..cols {
        for i in 0..2 * n {
            let hit = if with_base { i == c } else { i == n + c };
            y0.push(if hit { T::one() } else { T::zero() });
        }
    }
    let sol = integrate(&VariationalSystem { chart, cols }, T::zero(), y0, T::one(), settings)
        .map_err(|f| f.error)?;
    let y = sol.y.last().unwrap();
    let block = |first: usize| Matrix::from_fn(n, n, |i, a| y[2 * n * (first + a + 1) + i]);
    let mats = if with_base { vec![block(0), block(n)] } else { vec![block(0)] };
    Ok((y[..n].to_vec(), mats))
}

/// `exp_p(v)` together with its differential `d(exp_p)_v` in coordinates
/// (column `a` is the image of `∂_a`).
pub fn exp_differential<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    v: &[T],
    settings: &OdeSettings<T>,
) -> Result<(Vec<T>, Matrix<T>)> {
    let (q, mut m) = linearized_exp(chart, p, v, false, settings)?;
    Ok((q, m.pop().unwrap()))
}

/// `exp_p(v)` and both of its partial derivatives.
pub fn exp_jacobian<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    v: &[T],
    settings: &OdeSettings<T>,
) -> Result<ExpJacobian<T>> {
    let (point, mut m) = linearized_exp(chart, p, v, true, settings)?;
    let d_velocity = m.pop().unwrap();
    let d_base = m.pop().unwrap();
    Ok(ExpJacobian {
        point,
        d_base,
        d_velocity,
    })
}

/// Result of inverting the exponential map.
#[derive(Clone, Debug, Serialize)]
pub struct LogResult<T> {
    /// Initial velocity in chart coordinates.
    pub velocity: Vec<T>,
    /// The same vector in the orthonormal frame (normal coordinates of `q`).
    pub normal: Vec<T>,
    /// `|exp_p(v) − q|` in coordinates.
    pub residual: T,
    pub iterations: usize,
}

/// Settings for the shooting Newton iteration in [`log_map`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LogSettings<T> {
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Scalar> Default for LogSettings<T> {
    fn default() -> Self {
        LogSettings {
            tolerance: T::of(1e-10),
            max_iterations: 50,
        }
    }
}

/// Finds `v` with `exp_p(v) = q` by Newton's method on the shooting
/// residual, with a central finite-difference Jacobian and backtracking.
/// The initial guess is `initial` or the coordinate difference `q − p`.
pub fn log_map<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    frame: Option<&[Vec<T>]>,
    q: &[T],
    initial: Option<&[T]>,
    settings: &OdeSettings<T>,
    log: &LogSettings<T>,
) -> Result<LogResult<T>> {
    let n = chart.dim();
    let g = chart.metric(p)?;
    chart.check_domain(q)?;
    let own_frame;
    let frame = match frame {
        Some(f) => f,
        None => {
            own_frame = orthonormal_frame(&g, None);
            &own_frame
        }
    };
    let to_normal = |v: &[T]| -> Vec<T> { frame.iter().map(|e| g.form(e, v)).collect() };
    let mut v: Vec<T> = match initial {
        Some(v) => v.to_vec(),
        None => linalg::sub(q, p),
    };
    let residual = |v: &[T]| -> Result<(Vec<T>, T)> {
        let x = exp_map(chart, p, v, settings)?;
        let r = linalg::sub(&x, q);
        let m = r.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        Ok((r, m))
    };
    let (mut r, mut rn) = match residual(&v) {
        Ok(x) => x,
        Err(_) => {
            // fall back to a short guess that stays inside the chart
            v = linalg::scaled(T::of(0.5), &v);
            residual(&v)?
        }
    };
    let mut best = rn;
    for it in 0..=log.max_iterations {
        if rn <= log.tolerance {
            return Ok(LogResult {
                normal: to_normal(&v),
                velocity: v,
                residual: rn,
                iterations: it,
            });
        }
        if it == log.max_iterations {
            break;
        }
        let scale = linalg::norm(&v).max(T::one());
        let h = T::of(1e-6) * scale;
        let mut jac = Matrix::zeros(n, n);
        for k in 0..n {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[k] += h;
            vm[k] -= h;
            let xp = exp_map(chart, p, &vp, settings)?;
            let xm = exp_map(chart, p, &vm, settings)?;
            let width = vp[k] - vm[k];
            for i in 0..n {
                jac[(i, k)] = (xp[i] - xm[i]) / width;
            }
        }
        let delta = jac.solve(&r).ok_or(Error::NoConvergence {
            iterations: it,
            best_residual: best.as_f64(),
        })?;
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..12 {
            let trial: Vec<T> = v.iter().zip(&delta).map(|(&a, &d)| a - lambda * d).collect();
            if let Ok((rt, rtn)) = residual(&trial) {
                if rtn < rn {
                    v = trial;
                    r = rt;
                    rn = rtn;
                    accepted = true;
                    break;
                }
            }
            lambda *= T::of(0.5);
        }
        best = best.min(rn);
        if !accepted {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: log.max_iterations,
        best_residual: best.as_f64(),
    })
}

/// Best connecting geodesic found by multi-start shooting.
#[derive(Clone, Debug)]
pub struct ShortestGeodesic<T> {
    pub trajectory: Trajectory<T>,
    pub velocity: Vec<T>,
    pub length: T,
    pub converged: usize,
    pub tries: usize,
    pub seed: u64,
}

/// Shoots from `tries` seeded initial guesses and keeps the shortest
/// converged geodesic. The result is only a candidate minimizer.
pub fn shortest_geodesic<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    q: &[T],
    tries: usize,
    seed: u64,
    settings: &OdeSettings<T>,
) -> Result<ShortestGeodesic<T>> {
    let n = chart.dim();
    let g = chart.metric(p)?;
    let diff = linalg::sub(q, p);
    let base_len = g.form(&diff, &diff).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(T, Vec<T>)> = None;
    let mut converged = 0;
    let mut best_residual = f64::INFINITY;
    for k in 0..tries.max(1) {
        let guess: Vec<T> = if k == 0 {
            diff.clone()
        } else {
            // random direction with a random length up to a few times the chord
            let dir: Vec<T> = (0..n).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
            let len = g.form(&dir, &dir).sqrt();
            let target = T::of(rng.gen_range(0.2..3.0)) * base_len.max(T::of(0.1));
            if len > T::zero() {
                linalg::scaled(target / len, &dir)
            } else {
                diff.clone()
            }
        };
        match log_map(chart, p, None, q, Some(&guess), settings, &LogSettings::default()) {
            Ok(res) => {
                converged += 1;
                let l = g.form(&res.velocity, &res.velocity).sqrt();
                if best.as_ref().map_or(true, |(bl, _)| l < *bl) {
                    best = Some((l, res.velocity));
                }
            }
            Err(Error::NoConvergence { best_residual: r, .. }) => {
                best_residual = best_residual.min(r);
            }
            Err(_) => {}
        }
    }
    let (length, velocity) = best.ok_or(Error::NoConvergence {
        iterations: tries,
        best_residual,
    })?;
    let trajectory = integrate_geodesic(chart, p, &velocity, T::one(), settings)?;
    Ok(ShortestGeodesic {
        trajectory,
        velocity,
        length,
        converged,
        tries,
        seed,
    })
}

/// Summary used by reports.
pub fn describe_exit<T: Scalar>(traj: &Trajectory<T>) -> (f64, Vec<f64>) {
    (traj.t_end().as_f64(), to_f64_vec(&traj.last_point()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{builtin, curve_length, parse_params};

    fn chart(name: &str, p: &str) -> MetricChart<f64> {
        builtin(name, &parse_params(p).unwrap()).unwrap()
    }

    #[test]
    fn straight_lines() {
        let c = chart("euclidean", "n=3");
        let t = integrate_geodesic(&c, &[1.0, 2.0, 3.0], &[0.5, -1.0, 2.0], 2.0, &OdeSettings::default())
            .unwrap();
        let end = t.last_point();
        assert!(linalg::max_abs_diff(&end, &[2.0, 0.0, 7.0]) < 1e-12);
        assert!(t.frame_defect(&c).unwrap() < 1e-12);
    }

    #[test]
    fn great_circle_closes() {
        let c = chart("sphere_stereo", "n=2,R=1");
        let p = [0.5, 0.0];
        let g = c.metric(&p).unwrap();
        let v = [0.0, 1.0 / g[(1, 1)].sqrt()];
        let tau = 2.0 * std::f64::consts::PI;
        let t = integrate_geodesic(&c, &p, &v, tau, &OdeSettings::default()).unwrap();
        assert!(linalg::max_abs_diff(&t.last_point(), &p) < 1e-6);
        assert!(t.speed_drift() < 1e-8);
        assert!(t.frame_defect(&c).unwrap() < 1e-7);
    }

    #[test]
    fn radial_sphere_geodesic_matches_closed_form() {
        // unit-speed radial geodesic from the chart origin: x = R tan(t / 2R)
        let r = 1.5f64;
        let c = chart("sphere_stereo", "n=2,R=1.5");
        let v = [1.0 / 2.0, 0.0];
        let t = integrate_geodesic(&c, &[0.0, 0.0], &v, 2.0, &OdeSettings::default()).unwrap();
        assert!((t.last_point()[0] - r * (2.0 / (2.0 * r)).tan()).abs() < 1e-10);
    }

    #[test]
    fn exp_and_log() {
        let c = chart("torus", "R=2,r=1");
        let p = [0.3, 1.0];
        assert_eq!(exp_map(&c, &p, &[0.0, 0.0], &OdeSettings::default()).unwrap(), p.to_vec());
        let v = [0.06, 0.02];
        let q = exp_map(&c, &p, &v, &OdeSettings::default()).unwrap();
        let l = log_map(&c, &p, None, &q, None, &OdeSettings::default(), &LogSettings::default()).unwrap();
        assert!(linalg::max_abs_diff(&l.velocity, &v) < 1e-9);
        let l0 = log_map(&c, &p, None, &p, None, &OdeSettings::default(), &LogSettings::default()).unwrap();
        assert_eq!(l0.velocity, vec![0.0, 0.0]);
    }

    #[test]
    fn log_distance_on_sphere() {
        let c = chart("sphere_stereo", "n=2,R=1");
        let p = [0.2, 0.1];
        let g = c.metric(&p).unwrap();
        let dir = [0.6, 0.8];
        let s = g.form(&dir, &dir).sqrt();
        let v = [0.5 * dir[0] / s, 0.5 * dir[1] / s];
        let q = exp_map(&c, &p, &v, &OdeSettings::default()).unwrap();
        let l = log_map(&c, &p, None, &q, None, &OdeSettings::default(), &LogSettings::default()).unwrap();
        assert!((linalg::norm(&l.normal) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn shortest_on_euclid_and_sphere() {
        let c = chart("euclidean", "n=2");
        let s = shortest_geodesic(&c, &[0.0, 0.0], &[3.0, 4.0], 3, 1, &OdeSettings::default()).unwrap();
        assert!((s.length - 5.0).abs() < 1e-9);
        assert!((curve_length(&c, &s.trajectory).unwrap() - 5.0).abs() < 1e-9);
        let t = chart("torus", "R=2,r=1");
        let s = shortest_geodesic(&t, &[0.2, 0.1], &[0.2, 0.1], 2, 1, &OdeSettings::default()).unwrap();
        assert_eq!(s.length, 0.0);
    }

    #[test]
    fn exp_jacobian_matches_differences() {
        let c = chart("torus", "R=2,r=1");
        let (p, v) = ([0.4, 0.2], [0.3, -0.2]);
        let s = OdeSettings::default();
        let jac = exp_jacobian(&c, &p, &v, &s).unwrap();
        let h = 1e-6;
        for a in 0..2 {
            let mut pp = p;
            let mut pm = p;
            pp[a] += h;
            pm[a] -= h;
            let fp = exp_map(&c, &pp, &v, &s).unwrap();
            let fm = exp_map(&c, &pm, &v, &s).unwrap();
            for i in 0..2 {
                assert!((jac.d_base[(i, a)] - (fp[i] - fm[i]) / (2.0 * h)).abs() < 1e-7);
            }
            let mut vp = v;
            let mut vm = v;
            vp[a] += h;
            vm[a] -= h;
            let fp = exp_map(&c, &p, &vp, &s).unwrap();
            let fm = exp_map(&c, &p, &vm, &s).unwrap();
            for i in 0..2 {
                assert!((jac.d_velocity[(i, a)] - (fp[i] - fm[i]) / (2.0 * h)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn csv_header() {
        let c = chart("euclidean", "n=2");
        let t = integrate_geodesic(&c, &[0.0, 0.0], &[1.0, 0.0], 0.01, &OdeSettings::default()).unwrap();
        let csv = t.to_csv();
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "t,x1,x2,v1,v2,e1_1,e1_2,e2_1,e2_2");
        assert_eq!(csv.lines().count(), 1 + t.len());
    }

    #[test]
    fn hyperbolic_exit_is_reported() {
        let c = chart("hyperbolic_ball", "n=2");
        // coordinate speed 1 at the origin reaches the boundary only as t → ∞,
        // but a huge initial speed leaves numerically
        let err = integrate_geodesic(&c, &[0.9, 0.0], &[50.0, 0.0], 10.0, &OdeSettings::default());
        if let Err(e) = err {
            assert_eq!(e.kind(), "DomainExit");
        }
    }
}
