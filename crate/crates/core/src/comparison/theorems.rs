use serde::Serialize;

use super::{check_order, riccati_solve, CurvatureProfile, RiccatiSettings, RiccatiStart, RiccatiTrace};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::manifold::MetricChart;
use crate::ode::{hermite, OdeSettings};
use crate::transport::{integrate_geodesic, Trajectory};
use crate::variation::{conjugate_points_along, driving_matrix_at, DrivingField, JacobiMatrix};
use crate::{Error, Result, Scalar};

const TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct DrivingComparison<T> {
    /// `f ≤ g` at every sample before the first pole of `f`, and `g` has no
    /// earlier pole.
    pub verified: bool,
    /// Largest `f − g` seen (negative when strictly ordered).
    pub max_violation: T,
    /// Smallest sampled `H − K`.
    pub order_margin: T,
    pub f_first_pole: Option<T>,
    pub g_first_pole: Option<T>,
    pub f: RiccatiTrace<T>,
    pub g: RiccatiTrace<T>,
}

/// With `H ≥ K`, the solution `g` of `g′ = −g² − K` lives at least as long
/// as `f` (driven by `H`) and stays above it.
pub fn compare_driving<T: Scalar>(
    h: &CurvatureProfile<T>,
    k: &CurvatureProfile<T>,
    start: RiccatiStart<T>,
    tmax: T,
    settings: &RiccatiSettings<T>,
) -> Result<DrivingComparison<T>> {
    let order_margin = check_order(h, k, T::zero(), tmax)?;
    let f = riccati_solve(h, start, tmax, settings)?;
    let g = riccati_solve(k, start, tmax, settings)?;
    let (fp, gp) = (f.first_pole(), g.first_pole());
    let mut max_violation = T::neg_infinity();
    let mut covered = true;
    if let Some(seg) = f.segments.first() {
        for (&t, &fv) in seg.times.iter().zip(&seg.values) {
            if fp.is_some_and(|p| t >= p) {
                break;
            }
            match g.eval(t) {
                Some(gv) => max_violation = max_violation.max(fv - gv),
                None => covered = false,
            }
        }
    }
    let g_lives = match (fp, gp) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(a), Some(b)) => b >= a - T::of(TOL),
    };
    Ok(DrivingComparison {
        verified: covered && g_lives && max_violation <= T::of(TOL),
        max_violation,
        order_margin,
        f_first_pole: fp,
        g_first_pole: gp,
        f,
        g,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SturmReport<T> {
    pub zero_j: Option<T>,
    pub zero_k: Option<T>,
    /// `zero_j ≤ zero_k`; vacuously true when `k` has no zero.
    pub ordered: bool,
    pub tmax: T,
    pub note: Option<String>,
}

/// First positive zero of `y″ = −H y`, `y(0) = 0`, `y′(0) = 1` on `(0, tmax]`.
fn first_zero<T: Scalar>(h: &CurvatureProfile<T>, tmax: T, step: T) -> Option<T> {
    let rhs = |t: T, y: [T; 2]| [y[1], -h.eval(t) * y[0]];
    let half = T::of(0.5);
    let steps = (tmax / step - T::of(1e-9)).ceil().to_usize().unwrap_or(1).max(1);
    let dt = tmax / T::of_usize(steps);
    let mut y = [T::zero(), T::one()];
    for i in 0..steps {
        let t = dt * T::of_usize(i);
        let k1 = rhs(t, y);
        let k2 = rhs(t + half * dt, [y[0] + half * dt * k1[0], y[1] + half * dt * k1[1]]);
        let k3 = rhs(t + half * dt, [y[0] + half * dt * k2[0], y[1] + half * dt * k2[1]]);
        let k4 = rhs(t + dt, [y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        let sixth = dt / T::of(6.0);
        let y1 = [
            y[0] + sixth * (k1[0] + T::of(2.0) * (k2[0] + k3[0]) + k4[0]),
            y[1] + sixth * (k1[1] + T::of(2.0) * (k2[1] + k3[1]) + k4[1]),
        ];
        if y1[0] <= T::zero() {
            let t1 = t + dt;
            let at = |s: T| hermite(t, t1, &[y[0]], &[y[1]], &[y1[0]], &[y1[1]], s)[0];
            let (mut a, mut b) = (t, t1);
            for _ in 0..200 {
                let m = (a + b) * half;
                if m <= a || m >= b {
                    break;
                }
                if at(m) > T::zero() {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some((a + b) * half);
        }
        y = y1;
    }
    None
}

/// With `H ≥ K`, the first zero of `j″ = −H j` comes no later than that of
/// `k″ = −K k` (both vanishing at 0).
pub fn sturm_check<T: Scalar>(
    h: &CurvatureProfile<T>,
    k: &CurvatureProfile<T>,
    tmax: T,
    step: T,
) -> Result<SturmReport<T>> {
    check_order(h, k, T::zero(), tmax)?;
    let zj = first_zero(h, tmax, step);
    let zk = first_zero(k, tmax, step);
    let ordered = match (zj, zk) {
        (Some(a), Some(b)) => a <= b + T::of(TOL),
        (_, None) => true,
        (None, Some(_)) => false,
    };
    let note = match (zj, zk) {
        (None, None) => Some("no zero found for either equation".to_string()),
        (Some(_), None) => Some("no zero found for the K equation".to_string()),
        (None, Some(_)) => Some("no zero found for the H equation".to_string()),
        _ => None,
    };
    Ok(SturmReport {
        zero_j: zj,
        zero_k: zk,
        ordered,
        tmax,
        note,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ValueComparison<T> {
    pub verified: bool,
    pub max_violation: T,
    /// End of the interval on which both solutions are finite.
    pub interval_end: T,
}

/// Same driving function, ordered initial values: `f0 ≤ g0` gives `f ≤ g`.
pub fn value_compare<T: Scalar>(
    h: &CurvatureProfile<T>,
    f0: T,
    g0: T,
    tmax: T,
    settings: &RiccatiSettings<T>,
) -> Result<ValueComparison<T>> {
    if f0 > g0 {
        return Err(Error::InputOrderViolated(format!(
            "f0 = {} exceeds g0 = {}",
            f0.as_f64(),
            g0.as_f64()
        )));
    }
    let f = riccati_solve(h, RiccatiStart::Finite(f0), tmax, settings)?;
    let g = riccati_solve(h, RiccatiStart::Finite(g0), tmax, settings)?;
    let end = [f.first_pole(), g.first_pole()]
        .into_iter()
        .flatten()
        .fold(tmax, |a, b| a.min(b));
    let mut max_violation = T::neg_infinity();
    let seg = &f.segments[0];
    for (&t, &fv) in seg.times.iter().zip(&seg.values) {
        if t >= end {
            break;
        }
        if let Some(gv) = g.eval(t) {
            max_violation = max_violation.max(fv - gv);
        }
    }
    Ok(ValueComparison {
        verified: max_violation <= T::of(TOL),
        max_violation,
        interval_end: end,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RauchReport<T> {
    pub times: Vec<T>,
    /// `g_M(J, J) / g_N(L, L)` at each time.
    pub ratio: Vec<T>,
    pub monotone: bool,
    /// Largest drop between consecutive samples (0 when nondecreasing).
    pub max_decrease: T,
    /// Smallest sampled `min K_N − max K_M` over planes containing the velocity.
    pub curvature_margin: T,
}

fn unit_speed<T: Scalar>(chart: &MetricChart<T>, geo: &Trajectory<T>) -> Result<()> {
    let v = geo.velocity_at(0);
    let s = chart.metric(geo.point_at(0))?.form(v, v);
    if (s - T::one()).abs() > T::of(1e-8) {
        return Err(Error::BadParam(format!("geodesic must have unit speed, |v|^2 = {}", s.as_f64())));
    }
    Ok(())
}

fn normal_range<T: Scalar>(m: &Matrix<T>) -> (T, T) {
    let n = m.rows();
    let block = Matrix::from_fn(n - 1, n - 1, |i, j| (m[(i + 1, j + 1)] + m[(j + 1, i + 1)]) * T::of(0.5));
    let (ev, _) = symmetric_eigen(&block);
    (ev[0], ev[n - 2])
}

/// Jacobi fields `J` on `M` and `L` on `N`, vanishing at 0 with
/// `|J′(0)| = |L′(0)| = j0p_len`. If the curvature of `M` along its geodesic
/// is at most that of `N`, `|J|²/|L|²` is nondecreasing.
pub fn rauch_ratio<T: Scalar>(
    chart_m: &MetricChart<T>,
    geo_m: &Trajectory<T>,
    chart_n: &MetricChart<T>,
    geo_n: &Trajectory<T>,
    j0p_len: T,
    tmax: T,
) -> Result<RauchReport<T>> {
    unit_speed(chart_m, geo_m)?;
    unit_speed(chart_n, geo_n)?;
    let (nm, nn) = (chart_m.dim(), chart_n.dim());
    if nm < 2 || nn < nm {
        return Err(Error::BadDimension { required: nm.max(2), got: nn });
    }
    let dm = DrivingField::build(chart_m, geo_m)?;
    let dn = DrivingField::build(chart_n, geo_n)?;
    let init = |n: usize| {
        let mut fp = Matrix::zeros(n, 1);
        fp[(1, 0)] = j0p_len;
        fp
    };
    let jm = JacobiMatrix::solve(&dm, Matrix::zeros(nm, 1), init(nm));
    let jn = JacobiMatrix::solve(&dn, Matrix::zeros(nn, 1), init(nn));
    let end = tmax.min(geo_m.t_end()).min(geo_n.t_end());
    let mut times = Vec::new();
    let mut ratio = Vec::new();
    let mut margin = T::infinity();
    for (k, &t) in dm.times.iter().enumerate() {
        if t > end + T::of(1e-12) {
            break;
        }
        let (kn_min, _) = normal_range(&driving_matrix_at(chart_n, geo_n, t)?);
        let (_, km_max) = normal_range(&dm.grid[k]);
        margin = margin.min(kn_min - km_max);
        if kn_min < km_max - T::of(TOL) {
            return Err(Error::InputOrderViolated(format!(
                "curvature of M ({}) exceeds that of N ({}) at t = {}",
                km_max.as_f64(),
                kn_min.as_f64(),
                t.as_f64()
            )));
        }
        if t <= T::zero() {
            continue;
        }
        let a: T = jm.f[k].as_slice().iter().map(|&x| x * x).sum();
        let b: T = jn.interp(t).0.as_slice().iter().map(|&x| x * x).sum();
        times.push(t);
        ratio.push(a / b);
    }
    let max_decrease = ratio
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(T::zero(), |a, b| a.max(b));
    Ok(RauchReport {
        times,
        ratio,
        monotone: max_decrease <= T::of(TOL),
        max_decrease,
        curvature_margin: margin,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MyersReport<T> {
    /// Smallest sampled `Ric(γ′, γ′)` along the geodesic.
    pub ric_min: T,
    pub conjugate_distance: Option<T>,
    /// `π/√c`.
    pub bound: T,
    pub satisfied: bool,
}

/// Checks `Ric ≥ (n − 1)c` along the unit-speed geodesic from `p` and that
/// a conjugate point appears by `π/√c`.
pub fn myers_check<T: Scalar>(
    chart: &MetricChart<T>,
    p: &[T],
    v_unit: &[T],
    c: T,
    settings: &OdeSettings<T>,
) -> Result<MyersReport<T>> {
    if !(c > T::zero()) {
        return Err(Error::BadParam("Myers: c must be positive".into()));
    }
    let speed2 = chart.metric(p)?.form(v_unit, v_unit);
    if (speed2 - T::one()).abs() > T::of(1e-8) {
        return Err(Error::BadParam(format!(
            "initial velocity must have unit length, |v|^2 = {}",
            speed2.as_f64()
        )));
    }
    let n = chart.dim();
    let bound = T::PI() / c.sqrt();
    let geo = integrate_geodesic(chart, p, v_unit, bound * T::of(1.05), settings)?;
    let drive = DrivingField::build(chart, &geo)?;
    let need = T::of_usize(n - 1) * c;
    let mut ric_min = T::infinity();
    for (t, m) in drive.times.iter().zip(&drive.grid) {
        let ric = m.trace();
        ric_min = ric_min.min(ric);
        if ric < need - T::of(TOL) {
            return Err(Error::InputOrderViolated(format!(
                "Ric = {} < (n-1)c = {} at t = {}",
                ric.as_f64(),
                need.as_f64(),
                t.as_f64()
            )));
        }
    }
    let report = conjugate_points_along(chart, &geo)?;
    let first = report.first();
    Ok(MyersReport {
        ric_min,
        conjugate_distance: first,
        bound,
        satisfied: first.is_some_and(|t| t <= bound + T::of(1e-4)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{builtin, parse_params};
    use crate::surfrev::Profile;
    use std::f64::consts::PI;

    fn k(x: f64) -> CurvatureProfile<f64> {
        CurvatureProfile::constant(x)
    }

    #[test]
    fn driving_comparisons() {
        let s = RiccatiSettings::default();
        let r = compare_driving(&k(1.0), &k(0.0), RiccatiStart::PlusInfinity, 3.1, &s).unwrap();
        assert!(r.verified, "{}", r.max_violation);
        let r = compare_driving(&k(0.7), &k(0.7), RiccatiStart::Finite(0.3), 3.0, &s).unwrap();
        assert!(r.max_violation.abs() < 1e-9);
        let r = compare_driving(&k(1.0), &k(-1.0), RiccatiStart::PlusInfinity, 4.0, &s).unwrap();
        assert!(r.verified);
        assert!((r.f_first_pole.unwrap() - PI).abs() < 1e-6);
        assert!(r.g_first_pole.is_none());
        assert!(matches!(
            compare_driving(&k(0.0), &k(1.0), RiccatiStart::PlusInfinity, 1.0, &s),
            Err(Error::InputOrderViolated(_))
        ));
    }

    #[test]
    fn sturm() {
        let r = sturm_check(&k(1.0), &k(0.25), 7.0, 1e-3).unwrap();
        assert!((r.zero_j.unwrap() - PI).abs() < 1e-6);
        assert!((r.zero_k.unwrap() - 2.0 * PI).abs() < 1e-6);
        assert!(r.ordered);
        let r = sturm_check(&k(1.0), &k(1.0), 4.0, 1e-3).unwrap();
        assert_eq!(r.zero_j, r.zero_k);
        let r = sturm_check(&k(1.0), &k(0.0), 10.0, 1e-3).unwrap();
        assert!(r.zero_k.is_none() && r.ordered && r.note.is_some());
    }

    #[test]
    fn value_comparisons() {
        let s = RiccatiSettings::default();
        assert!(value_compare(&k(1.0), 0.0, 1.0, 3.0, &s).unwrap().verified);
        assert!(value_compare(&k(1.0), 0.5, 0.5, 3.0, &s).unwrap().max_violation.abs() < 1e-15);
        let r = value_compare(&k(-1.0), -2.0, 0.0, 5.0, &s).unwrap();
        assert!(r.verified);
        assert!(value_compare(&k(1.0), 1.0, 0.0, 3.0, &s).is_err());
    }

    fn unit_geodesic(name: &str, params: &str, p: &[f64], dir: &[f64], len: f64) -> (MetricChart<f64>, Trajectory<f64>) {
        let c: MetricChart<f64> = builtin(name, &parse_params(params).unwrap()).unwrap();
        let g = c.metric(p).unwrap();
        let s = g.form(dir, dir).sqrt();
        let v: Vec<f64> = dir.iter().map(|x| x / s).collect();
        let geo = integrate_geodesic(&c, p, &v, len, &OdeSettings::default()).unwrap();
        (c, geo)
    }

    #[test]
    fn rauch() {
        let l = PI - 0.05;
        let (e, ge) = unit_geodesic("euclidean", "n=2", &[0.0, 0.0], &[1.0, 0.0], l);
        let (s, gs) = unit_geodesic("sphere_stereo", "n=2,R=1", &[0.5, 0.0], &[0.0, 1.0], l);
        let r = rauch_ratio(&e, &ge, &s, &gs, 1.0, l).unwrap();
        assert!(r.monotone);
        for (t, q) in r.times.iter().zip(&r.ratio).step_by(97) {
            assert!((q - t * t / t.sin().powi(2)).abs() < 1e-6 * q, "{t}");
        }
        let same = rauch_ratio(&s, &gs, &s, &gs, 2.0, l).unwrap();
        assert!(same.ratio.iter().all(|q| (q - 1.0).abs() < 1e-12));
        let (h, gh) = unit_geodesic("hyperbolic_ball", "n=2", &[0.0, 0.0], &[1.0, 1.0], 3.0);
        let r = rauch_ratio(&h, &gh, &e, &ge, 1.0, 3.0).unwrap();
        assert!(r.monotone);
        assert!(matches!(rauch_ratio(&s, &gs, &e, &ge, 1.0, 2.0), Err(Error::InputOrderViolated(_))));
    }

    #[test]
    fn myers() {
        let c: MetricChart<f64> = builtin("sphere_stereo", &parse_params("n=3,R=2").unwrap()).unwrap();
        let p = [1.0, 0.0, 0.0];
        let g = c.metric(&p).unwrap();
        let v = [0.0, 1.0 / g[(0, 0)].sqrt(), 0.0];
        let r = myers_check(&c, &p, &v, 0.25, &OdeSettings::default()).unwrap();
        assert!(r.satisfied);
        assert!((r.conjugate_distance.unwrap() - 2.0 * PI).abs() < 1e-4);
        assert!((r.ric_min - 0.5).abs() < 1e-8);

        let torus = Profile::<f64>::torus(2.0, 1.0).unwrap();
        let tc = torus.chart().unwrap();
        assert!(matches!(
            myers_check(&tc, &[0.0, 0.0], &[1.0, 0.0], 1.0, &OdeSettings::default()),
            Err(Error::InputOrderViolated(_))
        ));
    }
}
