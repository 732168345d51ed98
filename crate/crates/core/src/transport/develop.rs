use serde::Serialize;

use crate::linalg::{self, orthonormal_frame};
use crate::manifold::{Curve, MetricChart, SampledCurve};
use crate::ode::{integrate, OdeSettings, OdeSolution, OdeSystem};
use crate::tensor::{christoffel_from_jet, contract_gamma};
use crate::{Error, Result, Scalar};

/// Integrates `sys` across every breakpoint interval of `curve`, so that
/// kinks in a piecewise curve land on step boundaries.
pub(crate) fn integrate_piecewise<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    breaks: &[T],
    y0: Vec<T>,
    settings: &OdeSettings<T>,
) -> Result<OdeSolution<T>> {
    let mut out: Option<OdeSolution<T>> = None;
    let mut y = y0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let mut local = *settings;
        let len = w[1] - w[0];
        if local.step > len {
            local.step = len;
        }
        let seg = integrate(sys, w[0], y, w[1], &local).map_err(|f| f.error)?;
        y = seg.y.last().unwrap().clone();
        match out.as_mut() {
            None => out = Some(seg),
            Some(acc) => {
                acc.t.extend_from_slice(&seg.t[1..]);
                acc.y.extend_from_slice(&seg.y[1..]);
                acc.dy.extend_from_slice(&seg.dy[1..]);
            }
        }
    }
    match out {
        Some(sol) => Ok(sol),
        None => {
            let t0 = breaks.first().copied().unwrap_or_else(T::zero);
            integrate(sys, t0, y, t0, settings).map_err(|f| f.error)
        }
    }
}

/// Transport of `m` vectors along a curve, optionally accumulating the
/// development `σ' = (g(γ′, E_a))_a`. State: `[E_1, …, E_m, σ]`.
struct TransportSystem<'a, T: Scalar, C: ?Sized> {
    chart: &'a MetricChart<T>,
    curve: &'a C,
    count: usize,
    develop: bool,
}

impl<T: Scalar, C: Curve<T> + ?Sized> OdeSystem<T> for TransportSystem<'_, T, C> {
    fn dim(&self) -> usize {
        let n = self.chart.dim();
        n * self.count + if self.develop { n } else { 0 }
    }

    fn rhs(&self, t: T, y: &[T], dy: &mut [T]) -> Result<()> {
        let n = self.chart.dim();
        let x = self.curve.point(t);
        let xd = self.curve.velocity(t);
        let jet = self.chart.metric_d1(&x)?;
        let gamma = christoffel_from_jet(&jet);
        for a in 0..self.count {
            let e = &y[a * n..(a + 1) * n];
            let de = contract_gamma(&gamma, &xd, e);
            for i in 0..n {
                dy[a * n + i] = -de[i];
            }
        }
        if self.develop {
            let off = n * self.count;
            for a in 0..n {
                dy[off + a] = jet.g.form(&xd, &y[a * n..(a + 1) * n]);
            }
        }
        Ok(())
    }
}

/// Vectors transported along a curve, sampled at the integration grid.
#[derive(Clone, Debug, Serialize)]
pub struct TransportedVectors<T> {
    pub times: Vec<T>,
    /// `vectors[k][a]` is the `a`-th transported vector at `times[k]`.
    pub vectors: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> TransportedVectors<T> {
    pub fn last(&self) -> &[Vec<T>] {
        self.vectors.last().unwrap()
    }

    /// Largest change of any pairwise inner product `g(w_a, w_b)`.
    pub fn gram_drift<C: Curve<T> + ?Sized>(&self, chart: &MetricChart<T>, curve: &C) -> Result<T> {
        let g0 = chart.metric(&curve.point(self.times[0]))?;
        let first = &self.vectors[0];
        let mut worst = T::zero();
        for (t, vs) in self.times.iter().zip(&self.vectors) {
            let g = chart.metric(&curve.point(*t))?;
            for a in 0..vs.len() {
                for b in a..vs.len() {
                    let d = g.form(&vs[a], &vs[b]) - g0.form(&first[a], &first[b]);
                    worst = worst.max(d.abs());
                }
            }
        }
        Ok(worst)
    }
}

fn check_vectors<T: Scalar>(chart: &MetricChart<T>, ws: &[Vec<T>]) -> Result<()> {
    for w in ws {
        if w.len() != chart.dim() || w.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadParam(format!(
                "tangent vector must have {} finite components",
                chart.dim()
            )));
        }
    }
    Ok(())
}

/// Parallel translation of `w0` (vectors at the curve's start) by solving
/// `ẇ^i + Γ^i_jk ẋ^j w^k = 0`.
pub fn parallel_transport<T: Scalar, C: Curve<T> + ?Sized>(
    chart: &MetricChart<T>,
    curve: &C,
    w0: &[Vec<T>],
    settings: &OdeSettings<T>,
) -> Result<TransportedVectors<T>> {
    check_vectors(chart, w0)?;
    let n = chart.dim();
    let sys = TransportSystem {
        chart,
        curve,
        count: w0.len(),
        develop: false,
    };
    let y0: Vec<T> = w0.iter().flatten().copied().collect();
    let sol = integrate_piecewise(&sys, &curve.breakpoints(), y0, settings)?;
    let vectors = sol
        .y
        .iter()
        .map(|y| (0..w0.len()).map(|a| y[a * n..(a + 1) * n].to_vec()).collect())
        .collect();
    Ok(TransportedVectors { times: sol.t, vectors })
}

/// Development of a curve into the tangent space at its start, written in
/// the components of the initial frame.
#[derive(Clone, Debug, Serialize)]
pub struct Development<T> {
    pub times: Vec<T>,
    pub sigma: Vec<Vec<T>>,
    /// `σ′` at each sample (the frame components of `γ′`).
    pub sigma_velocity: Vec<Vec<T>>,
    pub frames: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> Development<T> {
    pub fn as_curve(&self) -> Result<SampledCurve<T>> {
        SampledCurve::new(
            self.times.clone(),
            self.sigma.clone(),
            Some(self.sigma_velocity.clone()),
        )
    }

    /// Distance of `σ` from the linearly parametrized segment joining its
    /// endpoints, relative to the segment length.
    pub fn ray_residual(&self) -> T {
        let t0 = self.times[0];
        let t1 = *self.times.last().unwrap();
        let end = self.sigma.last().unwrap();
        let start = &self.sigma[0];
        let scale = linalg::norm(&linalg::sub(end, start)).max(T::epsilon());
        let mut worst = T::zero();
        for (t, s) in self.times.iter().zip(&self.sigma) {
            let lambda = (*t - t0) / (t1 - t0);
            let line: Vec<T> = start
                .iter()
                .zip(end)
                .map(|(&a, &b)| a + lambda * (b - a))
                .collect();
            worst = worst.max(linalg::max_abs_diff(s, &line) / scale);
        }
        worst
    }

    /// Radius of the circle through three samples at 0, 1/3 and 2/3 of the grid.
    pub fn circle_radius(&self) -> T {
        let m = self.sigma.len();
        let (a, b, c) = (&self.sigma[0], &self.sigma[m / 3], &self.sigma[2 * m / 3]);
        let ab = linalg::norm(&linalg::sub(a, b));
        let bc = linalg::norm(&linalg::sub(b, c));
        let ca = linalg::norm(&linalg::sub(c, a));
        // twice the triangle area via Heron-free cross products in the first two axes
        let area2 = ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
        ab * bc * ca / (T::of(2.0) * area2)
    }
}

/// `σ(t) = ∫ b̄(u)⁻¹γ′(u) du`, with `b̄` the parallel translate of `frame`
/// (default: orthonormal frame led by `γ′(a)`).
pub fn develop<T: Scalar, C: Curve<T> + ?Sized>(
    chart: &MetricChart<T>,
    curve: &C,
    frame: Option<&[Vec<T>]>,
    settings: &OdeSettings<T>,
) -> Result<Development<T>> {
    let n = chart.dim();
    let (a, _) = curve.interval();
    let p = curve.point(a);
    let g = chart.metric(&p)?;
    let frame = match frame {
        Some(f) => {
            check_vectors(chart, f)?;
            if f.len() != n {
                return Err(Error::BadParam(format!("frame needs {n} vectors")));
            }
            f.to_vec()
        }
        None => {
            let v = curve.velocity(a);
            let lead = if linalg::norm(&v) > T::zero() { Some(v.as_slice()) } else { None };
            orthonormal_frame(&g, lead)
        }
    };
    let sys = TransportSystem {
        chart,
        curve,
        count: n,
        develop: true,
    };
    let mut y0: Vec<T> = frame.iter().flatten().copied().collect();
    y0.extend(std::iter::repeat(T::zero()).take(n));
    let sol = integrate_piecewise(&sys, &curve.breakpoints(), y0, settings)?;
    let off = n * n;
    Ok(Development {
        sigma: sol.y.iter().map(|y| y[off..].to_vec()).collect(),
        sigma_velocity: sol.dy.iter().map(|d| d[off..].to_vec()).collect(),
        frames: sol
            .y
            .iter()
            .map(|y| (0..n).map(|k| y[k * n..(k + 1) * n].to_vec()).collect())
            .collect(),
        times: sol.t,
    })
}

/// `x′ = Σ σ′^a E_a`, `E_a′ = −Γ(x′, E_a)`. State: `[x, E_1, …, E_n]`.
struct ReverseSystem<'a, T: Scalar, C: ?Sized> {
    chart: &'a MetricChart<T>,
    sigma: &'a C,
}

impl<T: Scalar, C: Curve<T> + ?Sized> OdeSystem<T> for ReverseSystem<'_, T, C> {
    fn dim(&self) -> usize {
        let n = self.chart.dim();
        n * (n + 1)
    }

    fn rhs(&self, t: T, y: &[T], dy: &mut [T]) -> Result<()> {
        let n = self.chart.dim();
        let x = &y[..n];
        let beta = self.sigma.velocity(t);
        let mut xd = vec![T::zero(); n];
        for a in 0..n {
            let e = &y[n * (a + 1)..n * (a + 2)];
            for i in 0..n {
                xd[i] += beta[a] * e[i];
            }
        }
        let jet = self.chart.metric_d1(x)?;
        let gamma = christoffel_from_jet(&jet);
        dy[..n].copy_from_slice(&xd);
        for a in 0..n {
            let off = n * (a + 1);
            let de = contract_gamma(&gamma, &xd, &y[off..off + n]);
            for i in 0..n {
                dy[off + i] = -de[i];
            }
        }
        Ok(())
    }

    fn accept(&self, _t: T, y: &[T]) -> Result<()> {
        self.chart.check_domain(&y[..self.chart.dim()])
    }
}

/// Reverse development of a curve `σ` in `R^n` (with `σ(a) = 0`) from `p`
/// with the frame `frame` at `p`.
pub fn reverse_develop<T: Scalar, C: Curve<T> + ?Sized>(
    chart: &MetricChart<T>,
    sigma: &C,
    p: &[T],
    frame: &[Vec<T>],
    settings: &OdeSettings<T>,
) -> Result<SampledCurve<T>> {
    let n = chart.dim();
    chart.metric(p)?;
    check_vectors(chart, frame)?;
    if frame.len() != n {
        return Err(Error::BadParam(format!("frame needs {n} vectors")));
    }
    let (a, _) = sigma.interval();
    let s0 = sigma.point(a);
    if s0.len() != n {
        return Err(Error::BadParam(format!("planar curve must live in R^{n}")));
    }
    if linalg::norm(&s0) > T::of(1e-12) {
        return Err(Error::BadParam("reverse development needs sigma(0) = 0".into()));
    }
    let sys = ReverseSystem { chart, sigma };
    let mut y0 = p.to_vec();
    for e in frame {
        y0.extend_from_slice(e);
    }
    let sol = integrate_piecewise(&sys, &sigma.breakpoints(), y0, settings)?;
    let points = sol.y.iter().map(|y| y[..n].to_vec()).collect();
    let velocities = sol.dy.iter().map(|d| d[..n].to_vec()).collect();
    SampledCurve::new(sol.t, points, Some(velocities))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{builtin, parse_params, FnCurve};
    use crate::transport::integrate_geodesic;
    use std::f64::consts::PI;

    fn chart(name: &str, p: &str) -> MetricChart<f64> {
        builtin(name, &parse_params(p).unwrap()).unwrap()
    }

    /// Latitude circle at polar angle `alpha` on the unit sphere, in the
    /// stereographic chart from the south pole: chart radius `tan(alpha/2)`.
    fn latitude(alpha: f64) -> FnCurve<f64> {
        let rho = (alpha / 2.0).tan();
        FnCurve::new(
            0.0,
            2.0 * PI,
            move |t: f64| vec![rho * t.cos(), rho * t.sin()],
            move |t: f64| vec![-rho * t.sin(), rho * t.cos()],
        )
    }

    #[test]
    fn flat_transport_is_constant() {
        let c = chart("euclidean", "n=2");
        let curve = latitude(1.0);
        let w = parallel_transport(&c, &curve, &[vec![0.3, -0.7]], &OdeSettings::default()).unwrap();
        for vs in &w.vectors {
            assert!(linalg::max_abs_diff(&vs[0], &[0.3, -0.7]) < 1e-13);
        }
    }

    #[test]
    fn latitude_holonomy_flips_vector() {
        // rotation by 2π cos α = π at α = π/3
        let c = chart("sphere_stereo", "n=2,R=1");
        let curve = latitude(PI / 3.0);
        let p = curve.point(0.0);
        let g = c.metric(&p).unwrap();
        let w0 = vec![1.0 / g[(0, 0)].sqrt(), 0.0];
        let w = parallel_transport(&c, &curve, &[w0.clone()], &OdeSettings::default()).unwrap();
        let end = &w.last()[0];
        assert!(linalg::max_abs_diff(end, &linalg::scaled(-1.0, &w0)) < 1e-5);
        assert!(w.gram_drift(&c, &curve).unwrap() < 1e-8);
    }

    #[test]
    fn latitude_develops_to_circle() {
        let alpha = PI / 3.0;
        let c = chart("sphere_stereo", "n=2,R=1");
        let d = develop(&c, &latitude(alpha), None, &OdeSettings::default()).unwrap();
        assert!((d.circle_radius() - alpha.tan()).abs() < 1e-5);
    }

    #[test]
    fn geodesic_develops_to_ray() {
        let c = chart("torus", "R=2,r=1");
        let traj = integrate_geodesic(&c, &[0.4, 0.1], &[0.3, 0.5], 3.0, &OdeSettings::default()).unwrap();
        let d = develop(&c, &traj, None, &OdeSettings::default()).unwrap();
        assert!(d.ray_residual() < 1e-8);
    }

    #[test]
    fn euclidean_development_is_translation() {
        let c = chart("euclidean", "n=2");
        let curve = FnCurve::new(
            0.0,
            1.0,
            |t: f64| vec![1.0 + t, 2.0 + t * t],
            |t: f64| vec![1.0, 2.0 * t],
        );
        let e = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let d = develop(&c, &curve, Some(&e), &OdeSettings::default()).unwrap();
        for (t, s) in d.times.iter().zip(&d.sigma) {
            assert!(linalg::max_abs_diff(s, &[*t, t * t]) < 1e-12);
        }
    }

    #[test]
    fn reverse_of_ray_is_geodesic() {
        let c = chart("sphere_stereo", "n=2,R=1");
        let p = [0.2, -0.1];
        let g = c.metric(&p).unwrap();
        let frame = orthonormal_frame(&g, None);
        let ray = FnCurve::new(0.0, 2.0, |t: f64| vec![0.6 * t, 0.8 * t], |_t: f64| vec![0.6, 0.8]);
        let gamma = reverse_develop(&c, &ray, &p, &frame, &OdeSettings::default()).unwrap();
        let v: Vec<f64> = (0..2).map(|i| 0.6 * frame[0][i] + 0.8 * frame[1][i]).collect();
        let geo = integrate_geodesic(&c, &p, &v, 2.0, &OdeSettings::default()).unwrap();
        assert!(linalg::max_abs_diff(&gamma.point(2.0), &geo.last_point()) < 1e-7);
    }

    #[test]
    fn hyperbolic_ray_stays_inside() {
        let c = chart("hyperbolic_ball", "n=2");
        let g = c.metric(&[0.0, 0.0]).unwrap();
        let frame = orthonormal_frame(&g, None);
        let ray = FnCurve::new(0.0, 10.0, |t: f64| vec![t, 0.0], |_t: f64| vec![1.0, 0.0]);
        let gamma = reverse_develop(&c, &ray, &[0.0, 0.0], &frame, &OdeSettings::default()).unwrap();
        let end = gamma.point(10.0);
        assert!(linalg::norm(&end) < 1.0);
        assert!((end[0] - 5.0f64.tanh()).abs() < 1e-6);
    }

    #[test]
    fn develop_round_trip() {
        let c = chart("torus", "R=2,r=1");
        let curve = FnCurve::new(
            0.0,
            1.5,
            |t: f64| vec![0.5 + 0.4 * t.sin(), 0.2 + t + 0.1 * t * t],
            |t: f64| vec![0.4 * t.cos(), 1.0 + 0.2 * t],
        );
        let p = curve.point(0.0);
        let frame = orthonormal_frame(&c.metric(&p).unwrap(), None);
        let d = develop(&c, &curve, Some(&frame), &OdeSettings::default()).unwrap();
        let sigma = d.as_curve().unwrap();
        let back = reverse_develop(&c, &sigma, &p, &frame, &OdeSettings::default()).unwrap();
        for t in [0.3, 0.9, 1.5] {
            assert!(linalg::max_abs_diff(&back.point(t), &curve.point(t)) < 1e-5);
        }
    }
}
