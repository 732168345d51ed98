use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::expr::Expr;
use crate::linalg::Matrix;
use crate::manifold::{MetricChart, NativeMetric};
use crate::quad::gauss_legendre;
use crate::{Error, Result, Scalar};

/// Profile file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileDefinition {
    /// Distance from the axis, an expression in `u`.
    pub f: String,
    /// Height, an expression in `u`.
    pub h: String,
    pub u_range: [f64; 2],
    #[serde(default)]
    pub arclength: bool,
    /// The profile closes up: `u_range` is one period.
    #[serde(default)]
    pub periodic: bool,
}

const SAMPLES: usize = 257;
const TABLE_CELLS: usize = 512;
const TABLE_NODES: usize = 8;

/// Cumulative arclength `s(u)` on a table, inverted by safeguarded Newton.
#[derive(Debug)]
struct Arclength<T> {
    u: Vec<T>,
    s: Vec<T>,
    nodes: (Vec<T>, Vec<T>),
}

/// A profile curve `r = f(u), z = h(u)`, `u ∈ [a, b]`. Chart coordinates
/// are `(s, θ)` with `s` the arclength from `a` (equal to `u` when the
/// profile is already arclength-parametrized).
#[derive(Clone, Debug)]
pub struct Profile<T> {
    f: Expr,
    h: Expr,
    range: (T, T),
    periodic: bool,
    arclength: bool,
    table: Option<Arc<Arclength<T>>>,
    definition: ProfileDefinition,
}

fn speed<T: Scalar>(f: &Expr, h: &Expr, u: T) -> Result<(T, T, T, T, T)> {
    let fj = f.eval2(&[u])?;
    let hj = h.eval2(&[u])?;
    let (fu, hu) = (fj.grad[0], hj.grad[0]);
    Ok((fj.value, fu, fj.hess(0, 0), hu, hj.hess(0, 0)))
}

impl<T: Scalar> Arclength<T> {
    fn build(f: &Expr, h: &Expr, a: T, b: T) -> Result<Self> {
        let nodes = gauss_legendre::<T>(TABLE_NODES);
        let width = (b - a) / T::of_usize(TABLE_CELLS);
        let mut u = vec![a];
        let mut s = vec![T::zero()];
        for k in 0..TABLE_CELLS {
            let lo = a + width * T::of_usize(k);
            let hi = if k + 1 == TABLE_CELLS { b } else { lo + width };
            let piece = Self::gl(f, h, &nodes, lo, hi)?;
            u.push(hi);
            s.push(s[k] + piece);
        }
        Ok(Arclength { u, s, nodes })
    }

    fn gl(f: &Expr, h: &Expr, nodes: &(Vec<T>, Vec<T>), lo: T, hi: T) -> Result<T> {
        let half = (hi - lo) * T::of(0.5);
        let mid = (hi + lo) * T::of(0.5);
        let mut acc = T::zero();
        for (x, w) in nodes.0.iter().zip(&nodes.1) {
            let (_, fu, _, hu, _) = speed(f, h, mid + half * *x)?;
            acc += *w * (fu * fu + hu * hu).sqrt();
        }
        Ok(acc * half)
    }

    fn total(&self) -> T {
        *self.s.last().unwrap()
    }

    fn s_of_u(&self, f: &Expr, h: &Expr, u: T) -> Result<T> {
        let k = self.u.partition_point(|&x| x <= u).saturating_sub(1).min(self.u.len() - 2);
        Ok(self.s[k] + Self::gl(f, h, &self.nodes, self.u[k], u)?)
    }

    /// `u(s)` for `s` in `[0, total]`.
    fn u_of_s(&self, f: &Expr, h: &Expr, s: T) -> Result<T> {
        let k = self.s.partition_point(|&x| x <= s).saturating_sub(1).min(self.s.len() - 2);
        let (mut lo, mut hi) = (self.u[k], self.u[k + 1]);
        let span = self.s[k + 1] - self.s[k];
        let mut u = if span > T::zero() {
            lo + (hi - lo) * (s - self.s[k]) / span
        } else {
            lo
        };
        for _ in 0..50 {
            let r = self.s_of_u(f, h, u)? - s;
            if r.abs() <= T::epsilon() * T::of(8.0) * self.total().max(T::one()) {
                break;
            }
            if r > T::zero() {
                hi = u;
            } else {
                lo = u;
            }
            let (_, fu, _, hu, _) = speed(f, h, u)?;
            let mut next = u - r / (fu * fu + hu * hu).sqrt();
            if !(next > lo && next < hi) {
                next = (lo + hi) * T::of(0.5);
            }
            u = next;
        }
        Ok(u)
    }
}

impl<T: Scalar> Profile<T> {
    /// Torus of revolution with center-circle radius `big` and tube radius
    /// `small`: `f(u) = R + r cos(u/r)`, `h(u) = r sin(u/r)`, `u ∈ [−πr, πr]`.
    pub fn torus(big: f64, small: f64) -> Result<Self> {
        if !(small > 0.0 && big > small) {
            return Err(Error::BadParam(format!(
                "torus needs R > r > 0, got R = {big}, r = {small}"
            )));
        }
        let def = ProfileDefinition {
            f: format!("{big:?} + {small:?} * cos(u / {small:?})"),
            h: format!("{small:?} * sin(u / {small:?})"),
            u_range: [-std::f64::consts::PI * small, std::f64::consts::PI * small],
            arclength: true,
            periodic: true,
        };
        Self::from_definition(&def)
    }

    pub fn from_definition(def: &ProfileDefinition) -> Result<Self> {
        let coords = ["u"];
        let f = Expr::parse(&def.f, &coords)?;
        let h = Expr::parse(&def.h, &coords)?;
        let [a, b] = def.u_range;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::BadProfile(format!("u_range [{a}, {b}] is not an interval")));
        }
        let (ta, tb) = (T::of(a), T::of(b));
        let mut max_defect = T::zero();
        for k in 0..SAMPLES {
            let u = ta + (tb - ta) * T::of_usize(k) / T::of_usize(SAMPLES - 1);
            let (fv, fu, _, hu, _) = speed(&f, &h, u)?;
            if !(fv > T::zero()) {
                return Err(Error::BadProfile(format!(
                    "f({}) = {} is not positive",
                    u.as_f64(),
                    fv.as_f64()
                )));
            }
            let sp2 = fu * fu + hu * hu;
            if !(sp2 > T::zero()) {
                return Err(Error::BadProfile(format!(
                    "profile is singular at u = {}",
                    u.as_f64()
                )));
            }
            max_defect = max_defect.max((sp2 - T::one()).abs());
        }
        let table = if def.arclength {
            if max_defect > T::of(1e-9) {
                return Err(Error::BadProfile(format!(
                    "profile flagged arclength but |f'|^2 + |h'|^2 deviates from 1 by {:e}",
                    max_defect.as_f64()
                )));
            }
            None
        } else {
            Some(Arc::new(Arclength::build(&f, &h, ta, tb)?))
        };
        let range = match &table {
            None => (ta, tb),
            Some(t) => (T::zero(), t.total()),
        };
        Ok(Profile {
            f,
            h,
            range,
            periodic: def.periodic,
            arclength: def.arclength,
            table,
            definition: def.clone(),
        })
    }

    pub fn definition(&self) -> &ProfileDefinition {
        &self.definition
    }

    /// Range of the chart coordinate `s`.
    pub fn range(&self) -> (T, T) {
        self.range
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn is_arclength(&self) -> bool {
        self.arclength
    }

    /// Profile parameter `u` for the chart coordinate `s`.
    pub fn parameter(&self, s: T) -> Result<T> {
        match &self.table {
            None => Ok(s),
            Some(t) => {
                let s = self.wrap(s)?;
                t.u_of_s(&self.f, &self.h, s)
            }
        }
    }

    fn wrap(&self, s: T) -> Result<T> {
        let (a, b) = self.range;
        if s >= a && s <= b {
            return Ok(s);
        }
        if !self.periodic {
            return Err(Error::DomainExit {
                t: f64::NAN,
                last_point: vec![s.as_f64()],
                last_velocity: Vec::new(),
            });
        }
        let len = b - a;
        let k = ((s - a) / len).floor();
        Ok((s - k * len).max(a).min(b))
    }

    /// `(f, f′, f″)` in the chart coordinate.
    pub fn radius_jet(&self, s: T) -> Result<(T, T, T)> {
        match &self.table {
            None => {
                let j = self.f.eval2(&[s])?;
                Ok((j.value, j.grad[0], j.hess(0, 0)))
            }
            Some(_) => {
                let u = self.parameter(s)?;
                let (fv, fu, fuu, hu, huu) = speed(&self.f, &self.h, u)?;
                let sp2 = fu * fu + hu * hu;
                let du = T::one() / sp2.sqrt();
                let ddu = -(fu * fuu + hu * huu) / (sp2 * sp2);
                Ok((fv, fu * du, fuu * du * du + fu * ddu))
            }
        }
    }

    pub fn radius(&self, s: T) -> Result<T> {
        Ok(self.radius_jet(s)?.0)
    }

    /// Height `z` at the chart coordinate `s`.
    pub fn height(&self, s: T) -> Result<T> {
        let u = self.parameter(s)?;
        self.h.eval(&[u])
    }

    /// `K = −f″/f`.
    pub fn gaussian_curvature(&self, s: T) -> Result<T> {
        let (f, _, fpp) = self.radius_jet(s)?;
        Ok(-fpp / f)
    }

    /// Chart coordinate of the largest sampled radius.
    pub fn widest_point(&self) -> Result<T> {
        let (a, b) = self.range;
        let mut best = (a, T::neg_infinity());
        for k in 0..=2048 {
            let s = a + (b - a) * T::of_usize(k) / T::of(2048.0);
            let r = self.radius(s)?;
            if r > best.1 {
                best = (s, r);
            }
        }
        Ok(best.0)
    }

    /// The chart `(u, θ)` with `g = diag(1, f²)`.
    pub fn chart(&self) -> Result<MetricChart<T>> {
        let coords = ["u".to_string(), "theta".to_string()];
        let (a, b) = self.range;
        let domain = if self.periodic {
            None
        } else {
            Some(format!("(u - ({:?})) * (({:?}) - u)", a.as_f64(), b.as_f64()))
        };
        let label = format!("surface_of_revolution(f = {}, h = {})", self.definition.f, self.definition.h);
        if self.table.is_none() {
            let metric = vec![
                vec!["1".to_string(), "0".to_string()],
                vec!["0".to_string(), format!("({})^2", self.f)],
            ];
            MetricChart::from_expressions(&label, &coords, &metric, domain.as_deref())
        } else {
            let domain = domain.map(|d| Expr::parse(&d, &coords)).transpose()?;
            MetricChart::from_native(&label, coords.to_vec(), Arc::new(self.clone()), domain)
        }
    }
}

impl<T: Scalar> NativeMetric<T> for Profile<T> {
    fn dim(&self) -> usize {
        2
    }

    fn jet(&self, p: &[T]) -> Result<(Matrix<T>, Vec<Matrix<T>>, Vec<Vec<Matrix<T>>>)> {
        let (f, fp, fpp) = self.radius_jet(p[0])?;
        let two = T::of(2.0);
        let diag = |x: T, y: T| Matrix::from_rows(&[vec![x, T::zero()], vec![T::zero(), y]]);
        let z = Matrix::zeros(2, 2);
        let g = diag(T::one(), f * f);
        let dg = vec![diag(T::zero(), two * f * fp), z.clone()];
        let ddg = vec![
            vec![diag(T::zero(), two * (fp * fp + f * fpp)), z.clone()],
            vec![z.clone(), z],
        ];
        Ok((g, dg, ddg))
    }
}
