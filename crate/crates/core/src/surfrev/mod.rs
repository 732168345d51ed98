//! Surfaces of revolution `r = f(u), z = h(u)` in the chart `(u, θ)` with
//! `ds² = du² + f(u)² dθ²`, the Clairaut integral, barriers and the
//! classification of geodesics.

mod profile;

use serde::Serialize;

use crate::manifold::MetricChart;
use crate::ode::OdeSettings;
use crate::quad::gauss_legendre_integrate;
use crate::transport::{integrate_geodesic_frameless, Trajectory};
use crate::{Error, Result, Scalar};

pub use profile::{Profile, ProfileDefinition};

const SCAN_CELLS: usize = 2048;
const ROOT_TOL: f64 = 1e-10;

/// `c(t) = f(u)² θ′` along a geodesic.
#[derive(Clone, Debug, Serialize)]
pub struct ClairautRecord<T> {
    pub c: T,
    pub samples: Vec<T>,
    pub drift: T,
    /// Smallest and largest `f` met along the trajectory.
    pub f_min: T,
    pub f_max: T,
}

pub fn clairaut_constant<T: Scalar>(profile: &Profile<T>, traj: &Trajectory<T>) -> Result<ClairautRecord<T>> {
    let mut samples = Vec::with_capacity(traj.len());
    let mut f_min = T::infinity();
    let mut f_max = T::neg_infinity();
    for k in 0..traj.len() {
        let u = traj.point_at(k)[0];
        let th = traj.velocity_at(k)[1];
        let f = profile.radius(u)?;
        f_min = f_min.min(f);
        f_max = f_max.max(f);
        samples.push(f * f * th);
    }
    let c = samples[0];
    let drift = samples.iter().fold(T::zero(), |m, &s| m.max((s - c).abs()));
    Ok(ClairautRecord {
        c,
        samples,
        drift,
        f_min,
        f_max,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    /// `f′ = 0` at the barrier: the parallel there is itself a geodesic.
    ParallelGeodesic,
    /// `f′ ≠ 0`: geodesics touch the barrier and turn back.
    Transversal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Barrier<T> {
    pub u: T,
    #[serde(rename = "tag")]
    pub kind: BarrierKind,
}

fn bisect<T: Scalar>(mut f: impl FnMut(T) -> Result<T>, mut lo: T, mut hi: T) -> Result<T> {
    let mut flo = f(lo)?;
    let tol = T::of(ROOT_TOL);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) * T::of(0.5);
        let fm = f(mid)?;
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm < T::zero()) == (flo < T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::of(0.5))
}

fn kind_at<T: Scalar>(profile: &Profile<T>, u: T) -> Result<BarrierKind> {
    let (f, fp, _) = profile.radius_jet(u)?;
    Ok(if fp.abs() <= T::of(1e-7) * f.abs().max(T::one()) {
        BarrierKind::ParallelGeodesic
    } else {
        BarrierKind::Transversal
    })
}

/// Roots of `f(u) = |c|` in `[lo, hi]`: sign changes refined by bisection,
/// plus critical points of `f` where `f` touches `|c|`.
fn roots_between<T: Scalar>(profile: &Profile<T>, c: T, lo: T, hi: T, cells: usize) -> Result<Vec<Barrier<T>>> {
    let target = c.abs();
    let touch = T::of(1e-9) * target.max(T::one());
    let width = (hi - lo) / T::of_usize(cells);
    let g = |u: T| -> Result<T> { Ok(profile.radius(u)? - target) };
    let gp = |u: T| -> Result<T> { Ok(profile.radius_jet(u)?.1) };
    let mut found: Vec<T> = Vec::new();
    let mut prev_u = lo;
    let mut prev = g(lo)?;
    let mut prev_d = gp(lo)?;
    if prev.abs() <= touch {
        found.push(lo);
    }
    for k in 1..=cells {
        let u = if k == cells { hi } else { lo + width * T::of_usize(k) };
        let cur = g(u)?;
        let cur_d = gp(u)?;
        if cur.abs() <= touch {
            found.push(u);
        } else if prev.abs() > touch && (cur < T::zero()) != (prev < T::zero()) {
            found.push(bisect(g, prev_u, u)?);
        }
        if (cur_d < T::zero()) != (prev_d < T::zero()) && cur_d != T::zero() && prev_d != T::zero() {
            let crit = bisect(gp, prev_u, u)?;
            if g(crit)?.abs() <= touch {
                found.push(crit);
            }
        }
        prev_u = u;
        prev = cur;
        prev_d = cur_d;
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    found.dedup_by(|a, b| (*a - *b).abs() <= T::of(1e-7));
    found
        .into_iter()
        .map(|u| Ok(Barrier { u, kind: kind_at(profile, u)? }))
        .collect()
}

/// All `u` in the profile range with `f(u) = |c|`.
pub fn barriers<T: Scalar>(profile: &Profile<T>, c: T) -> Result<Vec<Barrier<T>>> {
    if !c.is_finite() {
        return Err(Error::BadParam("Clairaut constant must be finite".into()));
    }
    let (a, b) = profile.range();
    let mut out = roots_between(profile, c, a, b, SCAN_CELLS)?;
    if profile.is_periodic() && out.len() >= 2 {
        // a and b are the same parallel
        let first = out[0].u;
        let last = out[out.len() - 1].u;
        if (first - a).abs() <= T::of(1e-7) && (b - last).abs() <= T::of(1e-7) {
            out.pop();
        }
    }
    Ok(out)
}

/// The barriers on either side of `u0` bounding the strip `f ≥ |c|` that
/// contains it. For a periodic profile the search covers one period each way.
fn enclosing<T: Scalar>(
    profile: &Profile<T>,
    c: T,
    u0: T,
    dir_hint: T,
) -> Result<(Option<Barrier<T>>, Option<Barrier<T>>)> {
    let (a, b) = profile.range();
    let (lo, hi) = if profile.is_periodic() {
        let len = b - a;
        (u0 - len, u0 + len)
    } else {
        (a, b)
    };
    let roots = roots_between(profile, c, lo, hi, 2 * SCAN_CELLS)?;
    let eps = T::of(1e-7);
    let at_start = roots.iter().find(|r| (r.u - u0).abs() <= eps).copied();
    let below = roots.iter().rev().find(|r| r.u < u0 - eps).copied();
    let above = roots.iter().find(|r| r.u > u0 + eps).copied();
    Ok(match at_start {
        // starting tangent to a barrier: the strip lies on the side where f grows
        Some(s) if dir_hint > T::zero() => (Some(s), above),
        Some(s) if dir_hint < T::zero() => (below, Some(s)),
        Some(s) => (Some(s), Some(s)),
        None => (below, above),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeodesicClass {
    Meridian,
    ParallelGeodesic,
    Oscillating,
    AsymptoticToParallel,
    Unbounded,
}

impl GeodesicClass {
    pub fn name(self) -> &'static str {
        match self {
            GeodesicClass::Meridian => "meridian",
            GeodesicClass::ParallelGeodesic => "parallel_geodesic",
            GeodesicClass::Oscillating => "oscillating",
            GeodesicClass::AsymptoticToParallel => "asymptotic_to_parallel",
            GeodesicClass::Unbounded => "unbounded",
        }
    }
}

/// Result of [`classify_geodesic`].
#[derive(Clone, Debug, Serialize)]
pub struct Classification<T> {
    pub u0: T,
    pub theta0: T,
    pub phi0: T,
    pub c: T,
    pub class: GeodesicClass,
    pub barriers: Vec<Barrier<T>>,
    /// Angular change between barrier collisions, for oscillating geodesics.
    pub delta_theta: Option<T>,
    /// `p/q` approximating `Δθ/2π` within `1e-6`, if any with `q ≤ 50`.
    pub rational_hint: Option<(i64, i64)>,
    pub confirmation: Confirmation<T>,
}

/// What the confirming integration saw.
#[derive(Clone, Debug, Serialize)]
pub struct Confirmation<T> {
    pub length: T,
    pub completed: bool,
    pub exit_time: Option<T>,
    pub u_min: T,
    pub u_max: T,
    pub barrier_violation: T,
    pub u_turns: usize,
    pub consistent: bool,
}

/// Unit-speed initial velocity at `(u0, θ0)` making angle `φ0` with the
/// meridian direction `∂_u`.
pub fn initial_velocity<T: Scalar>(profile: &Profile<T>, u0: T, phi0: T) -> Result<Vec<T>> {
    let f = profile.radius(u0)?;
    Ok(vec![phi0.cos(), phi0.sin() / f])
}

/// Classifies the geodesic from `(u0, θ0)` at angle `φ0` from the meridian.
/// The class is decided from the barrier structure; a geodesic of length
/// `confirm_length` is integrated to cross-check it.
pub fn classify_geodesic<T: Scalar>(
    profile: &Profile<T>,
    u0: T,
    theta0: T,
    phi0: T,
    confirm_length: T,
    settings: &OdeSettings<T>,
) -> Result<Classification<T>> {
    let (f, fp, _) = profile.radius_jet(u0)?;
    let c = f * phi0.sin();
    let tiny = T::of(1e-12);
    let tangent_to_parallel = phi0.cos().abs() <= T::of(1e-12);
    let critical = fp.abs() <= T::of(1e-7) * f.max(T::one());
    let mut bars = Vec::new();
    let class = if c.abs() <= tiny {
        GeodesicClass::Meridian
    } else if tangent_to_parallel && critical {
        bars.push(Barrier {
            u: u0,
            kind: BarrierKind::ParallelGeodesic,
        });
        GeodesicClass::ParallelGeodesic
    } else {
        let (lo, hi) = enclosing(profile, c, u0, fp)?;
        bars.extend(lo.iter().copied());
        bars.extend(hi.iter().copied());
        match (lo, hi) {
            (Some(l), Some(h)) => {
                if l.kind == BarrierKind::ParallelGeodesic || h.kind == BarrierKind::ParallelGeodesic {
                    GeodesicClass::AsymptoticToParallel
                } else {
                    GeodesicClass::Oscillating
                }
            }
            _ => GeodesicClass::Unbounded,
        }
    };
    let delta_theta = if class == GeodesicClass::Oscillating {
        Some(delta_theta_between(profile, c, bars[0].u, bars[1].u)?)
    } else {
        None
    };
    let rational_hint = delta_theta.and_then(|d| rational_hint(d.as_f64() / std::f64::consts::TAU, 50, 1e-6));
    let confirmation = confirm(profile, u0, theta0, phi0, c, class, confirm_length, settings)?;
    Ok(Classification {
        u0,
        theta0,
        phi0,
        c,
        class,
        barriers: bars,
        delta_theta,
        rational_hint,
        confirmation,
    })
}

#[allow(clippy::too_many_arguments)]
fn confirm<T: Scalar>(
    profile: &Profile<T>,
    u0: T,
    theta0: T,
    phi0: T,
    c: T,
    class: GeodesicClass,
    length: T,
    settings: &OdeSettings<T>,
) -> Result<Confirmation<T>> {
    let chart = profile.chart()?;
    let v = initial_velocity(profile, u0, phi0)?;
    let (traj, exit_time) = match integrate_geodesic_frameless(&chart, &[u0, theta0], &v, length, settings) {
        Ok(t) => (Some(t), None),
        Err(Error::DomainExit { t, .. }) => (None, Some(T::of(t))),
        Err(e) => return Err(e),
    };
    let Some(traj) = traj else {
        return Ok(Confirmation {
            length,
            completed: false,
            exit_time,
            u_min: u0,
            u_max: u0,
            barrier_violation: T::zero(),
            u_turns: 0,
            consistent: class == GeodesicClass::Unbounded,
        });
    };
    let mut u_min = T::infinity();
    let mut u_max = T::neg_infinity();
    let mut violation = T::zero();
    let mut turns = 0;
    let mut last_sign = T::zero();
    for k in 0..traj.len() {
        let u = traj.point_at(k)[0];
        u_min = u_min.min(u);
        u_max = u_max.max(u);
        violation = violation.max(c.abs() - profile.radius(u)?);
        let du = traj.velocity_at(k)[0];
        if du.abs() > T::of(1e-9) {
            let s = du.signum();
            if last_sign != T::zero() && s != last_sign {
                turns += 1;
            }
            last_sign = s;
        }
    }
    let barrier_ok = violation <= T::of(1e-7);
    let consistent = match class {
        GeodesicClass::Meridian => traj.velocity_at(traj.len() - 1)[1].abs() <= T::of(1e-9),
        GeodesicClass::ParallelGeodesic => (u_max - u_min) <= T::of(1e-6),
        GeodesicClass::Oscillating => barrier_ok && turns >= 2,
        GeodesicClass::AsymptoticToParallel => barrier_ok,
        GeodesicClass::Unbounded => barrier_ok,
    };
    Ok(Confirmation {
        length,
        completed: true,
        exit_time,
        u_min,
        u_max,
        barrier_violation: violation.max(T::zero()),
        u_turns: turns,
        consistent,
    })
}

/// Best `p/q` with `q ≤ max_den` and `|x − p/q| ≤ tol`.
pub fn rational_hint(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    (1..=max_den).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() <= tol).then_some((p as i64, q))
    })
}

fn improper_half<T: Scalar>(profile: &Profile<T>, c: T, end: T, toward: T, nodes: usize) -> Result<T> {
    // u = end + s ξ², s = ±1 pointing into the gap
    let s = (toward - end).signum();
    let top = (toward - end).abs().sqrt();
    gauss_legendre_integrate(
        |xi: T| {
            if xi == T::zero() {
                return Ok(T::zero());
            }
            let u = end + s * xi * xi;
            let f = profile.radius(u)?;
            let d = (f * f - c * c).max(T::zero()).sqrt();
            if d == T::zero() {
                return Ok(T::zero());
            }
            Ok(T::of(2.0) * xi * c / (f * d))
        },
        T::zero(),
        top,
        nodes,
    )
}

/// `Δθ = ∫ c / (f √(f² − c²)) du` between two transversal barriers, with the
/// inverse square-root endpoint singularities removed by `u = u± ∓ ξ²`.
pub fn delta_theta_between<T: Scalar>(profile: &Profile<T>, c: T, lo: T, hi: T) -> Result<T> {
    for u in [lo, hi] {
        if kind_at(profile, u)? == BarrierKind::ParallelGeodesic {
            return Err(Error::BarrierNotTransversal(u.as_f64()));
        }
    }
    let mid = (lo + hi) * T::of(0.5);
    let eval = |n: usize| -> Result<T> {
        Ok(improper_half(profile, c, lo, mid, n)? + improper_half(profile, c, hi, mid, n)?)
    };
    let mut n = 16;
    let mut prev = eval(n)?;
    loop {
        n *= 2;
        let cur = eval(n)?;
        if (cur - prev).abs() <= T::of(1e-10) * cur.abs().max(T::one()) || n >= 1024 {
            return Ok(cur);
        }
        prev = cur;
    }
}

/// `Δθ(c)` for the barrier strip containing `u_inside` (default: the point
/// of the profile with the largest radius).
pub fn delta_theta<T: Scalar>(profile: &Profile<T>, c: T, u_inside: Option<T>) -> Result<T> {
    let u0 = match u_inside {
        Some(u) => u,
        None => profile.widest_point()?,
    };
    if profile.radius(u0)? <= c.abs() {
        return Err(Error::BadParam(format!(
            "f({}) does not exceed |c| = {}",
            u0.as_f64(),
            c.abs().as_f64()
        )));
    }
    match enclosing(profile, c, u0, T::zero())? {
        (Some(l), Some(h)) => {
            if l.kind == BarrierKind::ParallelGeodesic {
                return Err(Error::BarrierNotTransversal(l.u.as_f64()));
            }
            if h.kind == BarrierKind::ParallelGeodesic {
                return Err(Error::BarrierNotTransversal(h.u.as_f64()));
            }
            delta_theta_between(profile, c, l.u, h.u)
        }
        _ => Err(Error::BadParam("no pair of barriers around the start".into())),
    }
}

/// Times, `u` and `θ` where `u′` changes sign, located by bisection on the
/// dense output.
pub fn turning_points<T: Scalar>(traj: &Trajectory<T>) -> Vec<(T, T, T)> {
    let sol = traj.solution();
    let mut out = Vec::new();
    for k in 1..sol.len() {
        let a = sol.y[k - 1][2];
        let b = sol.y[k][2];
        if (a < T::zero()) != (b < T::zero()) {
            let (mut lo, mut hi) = (sol.t[k - 1], sol.t[k]);
            let flo_neg = a < T::zero();
            for _ in 0..60 {
                let mid = (lo + hi) * T::of(0.5);
                let du = sol.interp(mid)[2];
                if (du < T::zero()) == flo_neg {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = (lo + hi) * T::of(0.5);
            let y = sol.interp(t);
            out.push((t, y[0], y[1]));
        }
    }
    out
}

/// Geodesic on the chart of `profile` from `(u0, θ0)` at angle `φ0`.
pub fn geodesic_from_angle<T: Scalar>(
    chart: &MetricChart<T>,
    profile: &Profile<T>,
    u0: T,
    theta0: T,
    phi0: T,
    length: T,
    settings: &OdeSettings<T>,
) -> Result<Trajectory<T>> {
    let v = initial_velocity(profile, u0, phi0)?;
    integrate_geodesic_frameless(chart, &[u0, theta0], &v, length, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus() -> Profile<f64> {
        Profile::torus(2.0, 1.0).unwrap()
    }

    #[test]
    fn torus_barriers() {
        let p = torus();
        let b = barriers(&p, 3.0).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b[0].u.abs() < 1e-7);
        assert_eq!(b[0].kind, BarrierKind::ParallelGeodesic);

        let b = barriers(&p, 2.5).unwrap();
        assert_eq!(b.len(), 2);
        let want = (0.5f64).acos();
        assert!((b[0].u + want).abs() < 1e-9 && (b[1].u - want).abs() < 1e-9);
        assert!(b.iter().all(|x| x.kind == BarrierKind::Transversal));

        assert!(barriers(&p, 4.0).unwrap().is_empty());
    }

    #[test]
    fn clairaut_on_outer_equator() {
        let p = torus();
        let chart = p.chart().unwrap();
        let traj = geodesic_from_angle(&chart, &p, 0.0, 0.0, PI / 2.0, 5.0, &OdeSettings::default()).unwrap();
        let rec = clairaut_constant(&p, &traj).unwrap();
        assert!((rec.c - 3.0).abs() < 1e-12);
        assert!(rec.drift < 1e-9);
    }

    #[test]
    fn classification_of_scripted_starts() {
        let p = torus();
        let s = OdeSettings::default();
        let cases = [
            (0.0, 0.0, GeodesicClass::Meridian),
            (1.0, 0.0, GeodesicClass::Meridian),
            (0.0, PI / 2.0, GeodesicClass::ParallelGeodesic),
            (PI, PI / 2.0, GeodesicClass::ParallelGeodesic),
            (PI / 3.0, PI / 2.0, GeodesicClass::Oscillating),
            (0.0, (2.5f64 / 3.0).asin(), GeodesicClass::Oscillating),
            (0.0, (1.0f64 / 3.0).asin(), GeodesicClass::AsymptoticToParallel),
            (PI / 2.0, 0.5f64.asin(), GeodesicClass::AsymptoticToParallel),
        ];
        for (u0, phi0, want) in cases {
            let c = classify_geodesic(&p, u0, 0.3, phi0, 20.0, &s).unwrap();
            assert_eq!(c.class, want, "u0 = {u0}, phi0 = {phi0}");
            assert!(c.confirmation.consistent, "u0 = {u0}, phi0 = {phi0}");
        }
    }

    #[test]
    fn delta_theta_matches_integration() {
        let p = torus();
        let c = 2.5;
        let dt = delta_theta(&p, c, None).unwrap();
        let chart = p.chart().unwrap();
        let phi0 = (c / 3.0f64).asin();
        let traj = geodesic_from_angle(&chart, &p, 0.0, 0.0, phi0, 30.0, &OdeSettings::default()).unwrap();
        let turns = turning_points(&traj);
        assert!(turns.len() >= 2);
        let measured = turns[1].2 - turns[0].2;
        assert!((measured - dt).abs() < 1e-4, "{measured} vs {dt}");
    }

    #[test]
    fn asymptotic_gap_is_rejected() {
        let p = torus();
        assert!(matches!(delta_theta(&p, 1.0, None), Err(Error::BarrierNotTransversal(_))));
    }

    #[test]
    fn rational_hints() {
        assert_eq!(rational_hint(0.25, 50, 1e-9), Some((1, 4)));
        assert_eq!(rational_hint(std::f64::consts::SQRT_2 - 1.0, 10, 1e-9), None);
    }
}
