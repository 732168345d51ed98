use std::sync::Arc;

use super::MetricChart;
use crate::ode::{hermite, hermite_derivative};
use crate::quad::simpson_refined;
use crate::{Error, Result, Scalar};

/// A parametrized curve in chart coordinates.
pub trait Curve<T: Scalar>: Send + Sync {
    fn interval(&self) -> (T, T);
    fn point(&self, t: T) -> Vec<T>;
    fn velocity(&self, t: T) -> Vec<T>;

    /// Coordinate acceleration. The default is a central difference of
    /// [`Curve::velocity`], one-sided at the ends.
    fn acceleration(&self, t: T) -> Vec<T> {
        let (a, b) = self.interval();
        let h = T::of(1e-5) * (b - a).abs().max(T::one());
        let lo = (t - h).max(a);
        let hi = (t + h).min(b);
        let vl = self.velocity(lo);
        let vh = self.velocity(hi);
        vl.iter().zip(&vh).map(|(&l, &r)| (r - l) / (hi - lo)).collect()
    }

    /// Parameter values where the curve may fail to be smooth. Quadrature is
    /// split at these points. Always includes both ends.
    fn breakpoints(&self) -> Vec<T> {
        let (a, b) = self.interval();
        vec![a, b]
    }
}

/// Curve through sample points, interpolated by cubic Hermite pieces.
///
/// Nodal velocities are either supplied or estimated by second-order
/// finite differences on the (possibly nonuniform) grid.
#[derive(Clone, Debug)]
pub struct SampledCurve<T> {
    grid: Vec<T>,
    points: Vec<Vec<T>>,
    velocities: Vec<Vec<T>>,
    supplied_velocities: bool,
}

impl<T: Scalar> SampledCurve<T> {
    pub fn new(grid: Vec<T>, points: Vec<Vec<T>>, velocities: Option<Vec<Vec<T>>>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::BadParam("a sampled curve needs at least two samples".into()));
        }
        if points.len() != grid.len() {
            return Err(Error::BadParam("grid and points differ in length".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::BadParam("curve grid must be strictly increasing".into()));
        }
        let n = points[0].len();
        if points.iter().any(|p| p.len() != n) {
            return Err(Error::BadParam("points differ in dimension".into()));
        }
        let supplied = velocities.is_some();
        let velocities = match velocities {
            Some(v) => {
                if v.len() != grid.len() || v.iter().any(|x| x.len() != n) {
                    return Err(Error::BadParam("velocities do not match the points".into()));
                }
                v
            }
            None => fd_velocities(&grid, &points),
        };
        Ok(SampledCurve {
            grid,
            points,
            velocities,
            supplied_velocities: supplied,
        })
    }

    /// Samples `point` and `velocity` closures on a uniform grid of `m` intervals.
    pub fn from_fn(
        a: T,
        b: T,
        m: usize,
        point: impl Fn(T) -> Vec<T>,
        velocity: impl Fn(T) -> Vec<T>,
    ) -> Result<Self> {
        let m = m.max(1);
        let grid: Vec<T> = (0..=m)
            .map(|k| a + (b - a) * T::of_usize(k) / T::of_usize(m))
            .collect();
        let points = grid.iter().map(|&t| point(t)).collect();
        let vels = grid.iter().map(|&t| velocity(t)).collect();
        SampledCurve::new(grid, points, Some(vels))
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn velocities(&self) -> &[Vec<T>] {
        &self.velocities
    }

    pub fn has_supplied_velocities(&self) -> bool {
        self.supplied_velocities
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Checks that every sample lies in the chart domain.
    pub fn validate(&self, chart: &MetricChart<T>) -> Result<()> {
        for p in &self.points {
            chart.check_domain(p)?;
        }
        Ok(())
    }

    fn segment(&self, t: T) -> usize {
        let k = self.grid.partition_point(|&s| s <= t);
        k.saturating_sub(1).min(self.grid.len() - 2)
    }
}

fn fd_velocities<T: Scalar>(grid: &[T], points: &[Vec<T>]) -> Vec<Vec<T>> {
    let m = grid.len();
    let n = points[0].len();
    let mut out = vec![vec![T::zero(); n]; m];
    if m == 2 {
        let h = grid[1] - grid[0];
        let d: Vec<T> = (0..n).map(|i| (points[1][i] - points[0][i]) / h).collect();
        out[0] = d.clone();
        out[1] = d;
        return out;
    }
    let three_point = |y0: &[T], y1: &[T], y2: &[T], h0: T, h1: T, at: usize| -> Vec<T> {
        // derivative of the quadratic through (−h0, y0), (0, y1), (h1, y2)
        // evaluated at node `at` (0, 1, 2)
        let s = h0 + h1;
        let (c0, c1, c2) = match at {
            0 => (-(T::of(2.0) * h0 + h1) / (h0 * s), s / (h0 * h1), -h0 / (h1 * s)),
            1 => (-h1 / (h0 * s), (h1 - h0) / (h0 * h1), h0 / (h1 * s)),
            _ => (h1 / (h0 * s), -s / (h0 * h1), (h0 + T::of(2.0) * h1) / (h1 * s)),
        };
        (0..y0.len()).map(|i| c0 * y0[i] + c1 * y1[i] + c2 * y2[i]).collect()
    };
    for k in 0..m {
        let c = k.clamp(1, m - 2);
        let h0 = grid[c] - grid[c - 1];
        let h1 = grid[c + 1] - grid[c];
        let at = if k == 0 { 0 } else if k == m - 1 { 2 } else { 1 };
        out[k] = three_point(&points[c - 1], &points[c], &points[c + 1], h0, h1, at);
    }
    out
}

impl<T: Scalar> Curve<T> for SampledCurve<T> {
    fn interval(&self) -> (T, T) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    fn point(&self, t: T) -> Vec<T> {
        let k = self.segment(t);
        hermite(
            self.grid[k],
            self.grid[k + 1],
            &self.points[k],
            &self.velocities[k],
            &self.points[k + 1],
            &self.velocities[k + 1],
            t,
        )
    }

    fn velocity(&self, t: T) -> Vec<T> {
        let k = self.segment(t);
        hermite_derivative(
            self.grid[k],
            self.grid[k + 1],
            &self.points[k],
            &self.velocities[k],
            &self.points[k + 1],
            &self.velocities[k + 1],
            t,
        )
    }

    fn acceleration(&self, t: T) -> Vec<T> {
        let k = self.segment(t);
        let (t0, t1) = (self.grid[k], self.grid[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (two, four, six) = (T::of(2.0), T::of(4.0), T::of(6.0));
        // second derivatives of the Hermite basis, in s, divided by h²
        let h00 = (T::of(12.0) * s - six) / (h * h);
        let h10 = (six * s - four) / h;
        let h01 = (six - T::of(12.0) * s) / (h * h);
        let h11 = (six * s - two) / h;
        (0..self.dim())
            .map(|i| {
                h00 * self.points[k][i]
                    + h10 * self.velocities[k][i]
                    + h01 * self.points[k + 1][i]
                    + h11 * self.velocities[k + 1][i]
            })
            .collect()
    }

    fn breakpoints(&self) -> Vec<T> {
        self.grid.clone()
    }
}

type PathFn<T> = Arc<dyn Fn(T) -> Vec<T> + Send + Sync>;

/// Curve given by closures.
#[derive(Clone)]
pub struct FnCurve<T> {
    a: T,
    b: T,
    point: PathFn<T>,
    velocity: PathFn<T>,
    acceleration: Option<PathFn<T>>,
    breaks: Vec<T>,
}

impl<T: Scalar> FnCurve<T> {
    pub fn new(
        a: T,
        b: T,
        point: impl Fn(T) -> Vec<T> + Send + Sync + 'static,
        velocity: impl Fn(T) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        FnCurve {
            a,
            b,
            point: Arc::new(point),
            velocity: Arc::new(velocity),
            acceleration: None,
            breaks: Vec::new(),
        }
    }

    pub fn with_acceleration(mut self, acc: impl Fn(T) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.acceleration = Some(Arc::new(acc));
        self
    }

    /// Adds interior breakpoints (corners).
    pub fn with_breakpoints(mut self, breaks: Vec<T>) -> Self {
        self.breaks = breaks;
        self
    }
}

impl<T: Scalar> Curve<T> for FnCurve<T> {
    fn interval(&self) -> (T, T) {
        (self.a, self.b)
    }
    fn point(&self, t: T) -> Vec<T> {
        (self.point)(t)
    }
    fn velocity(&self, t: T) -> Vec<T> {
        (self.velocity)(t)
    }
    fn acceleration(&self, t: T) -> Vec<T> {
        match &self.acceleration {
            Some(f) => f(t),
            None => {
                let (a, b) = (self.a, self.b);
                let h = T::of(1e-5) * (b - a).abs().max(T::one());
                let lo = (t - h).max(a);
                let hi = (t + h).min(b);
                let vl = (self.velocity)(lo);
                let vh = (self.velocity)(hi);
                vl.iter().zip(&vh).map(|(&l, &r)| (r - l) / (hi - lo)).collect()
            }
        }
    }
    fn breakpoints(&self) -> Vec<T> {
        let mut b = vec![self.a];
        b.extend(self.breaks.iter().copied().filter(|&t| t > self.a && t < self.b));
        b.push(self.b);
        b
    }
}

/// Integrates `integrand(point, velocity)` along the curve, split at breakpoints.
pub(crate) fn integrate_along<T: Scalar, C: Curve<T> + ?Sized>(
    curve: &C,
    rtol: T,
    mut integrand: impl FnMut(&[T], &[T]) -> Result<T>,
) -> Result<T> {
    let bp = curve.breakpoints();
    let mut total = T::zero();
    for w in bp.windows(2) {
        if !(w[1] > w[0]) {
            continue;
        }
        total += simpson_refined(
            |t| {
                let p = curve.point(t);
                let v = curve.velocity(t);
                integrand(&p, &v)
            },
            w[0],
            w[1],
            rtol,
        )?;
    }
    Ok(total)
}

/// Riemannian length `∫ √g(γ′, γ′) dt`, Simpson with refinement to 1e-8.
pub fn curve_length<T: Scalar, C: Curve<T> + ?Sized>(chart: &MetricChart<T>, curve: &C) -> Result<T> {
    integrate_along(curve, T::of(1e-10), |p, v| {
        Ok(chart.metric(p)?.form(v, v).max(T::zero()).sqrt())
    })
}

/// Energy `∫ g(γ′, γ′) dt`.
pub fn energy<T: Scalar, C: Curve<T> + ?Sized>(chart: &MetricChart<T>, curve: &C) -> Result<T> {
    integrate_along(curve, T::of(1e-10), |p, v| Ok(chart.metric(p)?.form(v, v)))
}

/// Inscribed-polygon lengths under dyadic refinement: entry `k` sums the
/// distance oracle over `2^k` equal parameter intervals, `k = 0..=depth`.
pub fn rectifiable_length<T: Scalar, C: Curve<T> + ?Sized>(
    mut distance: impl FnMut(&[T], &[T]) -> Result<T>,
    curve: &C,
    depth: usize,
) -> Result<Vec<T>> {
    let (a, b) = curve.interval();
    let mut out = Vec::with_capacity(depth + 1);
    for k in 0..=depth {
        let m = 1usize << k;
        let pts: Vec<Vec<T>> = (0..=m)
            .map(|i| curve.point(a + (b - a) * T::of_usize(i) / T::of_usize(m)))
            .collect();
        let mut s = T::zero();
        for w in pts.windows(2) {
            s += distance(&w[0], &w[1])?;
        }
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm, sub};
    use crate::manifold::{builtin, parse_params};

    fn euclid() -> MetricChart<f64> {
        builtin("euclidean", &parse_params("n=2").unwrap()).unwrap()
    }

    #[test]
    fn segment_length_without_velocities() {
        let c = SampledCurve::new(vec![0.0, 1.0], vec![vec![0.0, 0.0], vec![3.0, 4.0]], None).unwrap();
        assert!((curve_length(&euclid(), &c).unwrap() - 5.0).abs() < 1e-10);
    }

    #[test]
    fn fd_velocities_exact_on_quadratics() {
        let grid = vec![0.0, 0.3, 0.5, 1.2, 2.0];
        let pts: Vec<Vec<f64>> = grid.iter().map(|&t| vec![t * t, 1.0 - t]).collect();
        let c = SampledCurve::new(grid.clone(), pts, None).unwrap();
        for (k, &t) in grid.iter().enumerate() {
            assert!((c.velocities()[k][0] - 2.0 * t).abs() < 1e-12);
            assert!((c.velocities()[k][1] + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reparametrization_invariance() {
        // unit circle quarter, parametrized by t and by t³
        let q = std::f64::consts::FRAC_PI_2;
        let a = SampledCurve::from_fn(0.0, 1.0, 40, |t| vec![(q * t).cos(), (q * t).sin()], |t| {
            vec![-q * (q * t).sin(), q * (q * t).cos()]
        })
        .unwrap();
        let b = FnCurve::new(
            0.0,
            1.0,
            move |t: f64| vec![(q * t.powi(3)).cos(), (q * t.powi(3)).sin()],
            move |t: f64| {
                let s = 3.0 * t * t * q;
                vec![-s * (q * t.powi(3)).sin(), s * (q * t.powi(3)).cos()]
            },
        );
        let la = curve_length(&euclid(), &a).unwrap();
        let lb = curve_length(&euclid(), &b).unwrap();
        assert!((la - q).abs() < 1e-7);
        assert!((la - lb).abs() < 1e-7);
    }

    #[test]
    fn polygon_lengths_increase_to_arc() {
        let q = std::f64::consts::FRAC_PI_2;
        let c = FnCurve::new(0.0, q, |t: f64| vec![t.cos(), t.sin()], |t: f64| vec![-t.sin(), t.cos()]);
        let seq = rectifiable_length(|p, q| Ok(norm(&sub(p, q))), &c, 6).unwrap();
        assert!((seq[0] - 2f64.sqrt()).abs() < 1e-15);
        for w in seq.windows(2) {
            assert!(w[1] >= w[0]);
        }
        for (k, s) in seq.iter().enumerate() {
            let m = (1 << k) as f64;
            let want = 2.0 * m * (q / (2.0 * m)).sin();
            assert!((s - want).abs() < 1e-13);
        }
        assert!((seq[6] - q).abs() < 1e-3);
        assert!(seq[6] <= curve_length(&euclid(), &c).unwrap());
    }

    #[test]
    fn hermite_acceleration_on_cubic() {
        let grid: Vec<f64> = (0..=4).map(|k| k as f64 * 0.25).collect();
        let pts = grid.iter().map(|&t| vec![t.powi(3)]).collect();
        let vel = grid.iter().map(|&t| vec![3.0 * t * t]).collect();
        let c = SampledCurve::new(grid, pts, Some(vel)).unwrap();
        for t in [0.1, 0.4, 0.9] {
            assert!((c.acceleration(t)[0] - 6.0 * t).abs() < 1e-12);
        }
    }
}
