//! Metrics on a single coordinate chart, the builtin model spaces, curve
//! length, and the Finsler-norm tools.

mod curve;
mod finsler;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::expr::{DualValue1, DualValue2, Expr};
use crate::linalg::Matrix;
use crate::scalar::to_f64_vec;
use crate::{Error, Result, Scalar};

pub use curve::{
    curve_length, energy, rectifiable_length, Curve, FnCurve, SampledCurve,
};
pub use finsler::{parallelogram_check, parallelogram_violation, polarize, FinslerNorm, ParallelogramReport};

/// Metric with its inverse and first derivatives; `dg[k]` is `∂_k g`.
#[derive(Clone, Debug)]
pub struct MetricJet1<T> {
    pub g: Matrix<T>,
    pub ginv: Matrix<T>,
    pub dg: Vec<Matrix<T>>,
}

/// Metric, inverse, first and second partials; `ddg[k][l]` is `∂_k ∂_l g`.
#[derive(Clone, Debug)]
pub struct MetricJet<T> {
    pub g: Matrix<T>,
    pub ginv: Matrix<T>,
    pub dg: Vec<Matrix<T>>,
    pub ddg: Vec<Vec<Matrix<T>>>,
}

/// Metric coefficients supplied by code rather than by expressions.
pub trait NativeMetric<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    /// `g`, `∂g` and `∂²g` at `p`.
    fn jet(&self, p: &[T]) -> Result<(Matrix<T>, Vec<Matrix<T>>, Vec<Vec<Matrix<T>>>)>;
    fn value(&self, p: &[T]) -> Result<Matrix<T>> {
        Ok(self.jet(p)?.0)
    }
}

#[derive(Clone)]
enum MetricSource<T: Scalar> {
    /// Upper triangle, row by row.
    Expr(Vec<Expr>),
    Native(Arc<dyn NativeMetric<T>>),
}

/// A Riemannian metric on one coordinate chart.
#[derive(Clone)]
pub struct MetricChart<T: Scalar> {
    label: String,
    coords: Vec<String>,
    source: MetricSource<T>,
    domain: Option<Expr>,
    definition: Option<String>,
}

impl<T: Scalar> fmt::Debug for MetricChart<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart")
            .field("label", &self.label)
            .field("coords", &self.coords)
            .finish_non_exhaustive()
    }
}

fn tri(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl<T: Scalar> MetricChart<T> {
    /// Builds a chart from coefficient expressions. The full square array is
    /// required and must be symmetric; the check evaluates both triangles at
    /// seeded random points of the domain.
    pub fn from_expressions<S: AsRef<str>>(
        label: &str,
        coords: &[S],
        metric: &[Vec<S>],
        domain: Option<&str>,
    ) -> Result<Self> {
        let coords: Vec<String> = coords.iter().map(|s| s.as_ref().to_string()).collect();
        let n = coords.len();
        if n == 0 {
            return Err(Error::Format("at least one coordinate is required".into()));
        }
        if metric.len() != n || metric.iter().any(|row| row.len() != n) {
            return Err(Error::Format(format!("metric must be a {n}x{n} array")));
        }
        let mut full = Vec::with_capacity(n * n);
        for row in metric {
            for s in row {
                full.push(Expr::parse(s.as_ref(), &coords)?);
            }
        }
        let domain = domain.map(|d| Expr::parse(d, &coords)).transpose()?;
        check_symmetric(&full, n, domain.as_ref())?;
        let mut upper = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                upper.push(full[i * n + j].clone());
            }
        }
        Ok(MetricChart {
            label: label.to_string(),
            coords,
            source: MetricSource::Expr(upper),
            domain,
            definition: None,
        })
    }

    pub fn from_native(
        label: &str,
        coords: Vec<String>,
        metric: Arc<dyn NativeMetric<T>>,
        domain: Option<Expr>,
    ) -> Result<Self> {
        if metric.dim() != coords.len() {
            return Err(Error::BadParam("native metric dimension mismatch".into()));
        }
        Ok(MetricChart {
            label: label.to_string(),
            coords,
            source: MetricSource::Native(metric),
            domain,
            definition: None,
        })
    }

    /// Attaches the raw definition text the chart was loaded from.
    pub fn with_definition(mut self, text: String) -> Self {
        self.definition = Some(text);
        self
    }

    pub fn definition(&self) -> Option<&str> {
        self.definition.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn domain(&self) -> Option<&Expr> {
        self.domain.as_ref()
    }

    /// Coefficient expression `g_ij`, when the chart is expression based.
    pub fn coefficient(&self, i: usize, j: usize) -> Option<&Expr> {
        match &self.source {
            MetricSource::Expr(e) => Some(&e[tri(self.dim(), i, j)]),
            MetricSource::Native(_) => None,
        }
    }

    fn check_len(&self, p: &[T]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::BadParam(format!(
                "point has {} components, chart dimension is {}",
                p.len(),
                self.dim()
            )));
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadParam("point has non-finite components".into()));
        }
        Ok(())
    }

    /// Whether the domain predicate is positive at `p`.
    pub fn in_domain(&self, p: &[T]) -> Result<bool> {
        self.check_len(p)?;
        match &self.domain {
            None => Ok(true),
            Some(d) => match d.eval(p) {
                Ok(v) => Ok(v > T::zero()),
                Err(Error::DomainFault(_)) => Ok(false),
                Err(e) => Err(e),
            },
        }
    }

    pub fn check_domain(&self, p: &[T]) -> Result<()> {
        if self.in_domain(p)? {
            Ok(())
        } else {
            Err(outside(p))
        }
    }

    fn finish(&self, p: &[T], g: &Matrix<T>) -> Result<Matrix<T>> {
        if g.cholesky().is_none() {
            return Err(Error::SingularMetric {
                point: to_f64_vec(p),
            });
        }
        g.inverse().ok_or_else(|| Error::SingularMetric {
            point: to_f64_vec(p),
        })
    }

    /// Metric matrix at `p`, checked positive definite.
    pub fn metric(&self, p: &[T]) -> Result<Matrix<T>> {
        self.check_domain(p)?;
        let n = self.dim();
        let g = match &self.source {
            MetricSource::Expr(e) => {
                let mut g = Matrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        let v = e[tri(n, i, j)].eval(p)?;
                        g[(i, j)] = v;
                        g[(j, i)] = v;
                    }
                }
                g
            }
            MetricSource::Native(m) => m.value(p)?,
        };
        if g.cholesky().is_none() {
            return Err(Error::SingularMetric {
                point: to_f64_vec(p),
            });
        }
        Ok(g)
    }

    /// Metric, inverse and first partials (what the geodesic equation needs).
    pub fn metric_d1(&self, p: &[T]) -> Result<MetricJet1<T>> {
        self.check_domain(p)?;
        let n = self.dim();
        let (g, dg) = match &self.source {
            MetricSource::Expr(e) => {
                let mut g = Matrix::zeros(n, n);
                let mut dg = vec![Matrix::zeros(n, n); n];
                for i in 0..n {
                    for j in i..n {
                        let d: DualValue1<T> = e[tri(n, i, j)].eval1(p)?;
                        g[(i, j)] = d.value;
                        g[(j, i)] = d.value;
                        for k in 0..n {
                            dg[k][(i, j)] = d.grad[k];
                            dg[k][(j, i)] = d.grad[k];
                        }
                    }
                }
                (g, dg)
            }
            MetricSource::Native(m) => {
                let (g, dg, _) = m.jet(p)?;
                (g, dg)
            }
        };
        let ginv = self.finish(p, &g)?;
        Ok(MetricJet1 { g, ginv, dg })
    }

    /// Metric with inverse and all first and second partials.
    pub fn metric_at(&self, p: &[T]) -> Result<MetricJet<T>> {
        self.check_domain(p)?;
        let n = self.dim();
        let (g, dg, ddg) = match &self.source {
            MetricSource::Expr(e) => {
                let mut g = Matrix::zeros(n, n);
                let mut dg = vec![Matrix::zeros(n, n); n];
                let mut ddg = vec![vec![Matrix::zeros(n, n); n]; n];
                for i in 0..n {
                    for j in i..n {
                        let d: DualValue2<T> = e[tri(n, i, j)].eval2(p)?;
                        g[(i, j)] = d.value;
                        g[(j, i)] = d.value;
                        for k in 0..n {
                            dg[k][(i, j)] = d.grad[k];
                            dg[k][(j, i)] = d.grad[k];
                            for l in 0..n {
                                let h = d.hess(k, l);
                                ddg[k][l][(i, j)] = h;
                                ddg[k][l][(j, i)] = h;
                            }
                        }
                    }
                }
                (g, dg, ddg)
            }
            MetricSource::Native(m) => m.jet(p)?,
        };
        let ginv = self.finish(p, &g)?;
        Ok(MetricJet { g, ginv, dg, ddg })
    }

    /// `g_p(v, w)`.
    pub fn inner(&self, p: &[T], v: &[T], w: &[T]) -> Result<T> {
        Ok(self.metric(p)?.form(v, w))
    }

    /// Seeded random points of the domain inside the box `[-scale, scale]^n`.
    pub fn sample_points(&self, count: usize, scale: f64, seed: u64) -> Vec<Vec<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let n = self.dim();
        for _ in 0..count.saturating_mul(200) {
            if out.len() == count {
                break;
            }
            let p: Vec<T> = (0..n).map(|_| T::of(rng.gen_range(-scale..scale))).collect();
            if self.metric(&p).is_ok() {
                out.push(p);
            }
        }
        out
    }
}

fn outside<T: Scalar>(p: &[T]) -> Error {
    Error::DomainExit {
        t: f64::NAN,
        last_point: to_f64_vec(p),
        last_velocity: Vec::new(),
    }
}

fn check_symmetric(full: &[Expr], n: usize, domain: Option<&Expr>) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut tested = 0;
    for _ in 0..2000 {
        if tested == 100 {
            break;
        }
        let p: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(d) = domain {
            if !matches!(d.eval(&p), Ok(v) if v > 0.0) {
                continue;
            }
        }
        let mut ok = true;
        for i in 0..n {
            for j in i + 1..n {
                match (full[i * n + j].eval(&p), full[j * n + i].eval(&p)) {
                    (Ok(a), Ok(b)) => {
                        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                            return Err(Error::Format(format!(
                                "metric is not symmetric: g[{i}][{j}] != g[{j}][{i}] at {p:?}"
                            )));
                        }
                    }
                    _ => ok = false,
                }
            }
        }
        if ok {
            tested += 1;
        }
    }
    Ok(())
}

fn lit(x: f64) -> String {
    if x < 0.0 {
        format!("(-{:?})", -x)
    } else {
        format!("{x:?}")
    }
}

fn param(params: &BTreeMap<String, f64>, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(v) if v.is_finite() => Ok(*v),
        Some(v) => Err(Error::BadParam(format!("{key} = {v} is not finite"))),
        None => default.ok_or_else(|| Error::BadParam(format!("missing parameter `{key}`"))),
    }
}

fn dim_param(params: &BTreeMap<String, f64>, default: usize) -> Result<usize> {
    let n = param(params, "n", Some(default as f64))?;
    if n < 1.0 || n.fract() != 0.0 || n > 16.0 {
        return Err(Error::BadParam(format!("n = {n} must be an integer in 1..=16")));
    }
    Ok(n as usize)
}

fn check_known(params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::BadParam(format!(
                "unknown parameter `{k}` (expected one of {allowed:?})"
            )));
        }
    }
    Ok(())
}

fn coord_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn diagonal(n: usize, factor: &str) -> Vec<Vec<String>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { factor.to_string() } else { "0".to_string() })
                .collect()
        })
        .collect()
}

/// Names accepted by [`builtin`].
pub const BUILTINS: [&str; 5] = [
    "euclidean",
    "sphere_stereo",
    "hyperbolic_ball",
    "torus",
    "surface_of_revolution",
];

/// Builtin model spaces.
///
/// * `euclidean` (`n`, default 2): identity metric.
/// * `sphere_stereo` (`n` default 2, `R` default 1): stereographic chart of the
///   round sphere of radius `R`, conformal factor `(2R²/(R²+|x|²))²`.
/// * `hyperbolic_ball` (`n` default 2): Poincaré ball, factor `(2/(1−|x|²))²`.
/// * `torus` (`R` default 2, `r` default 1): the torus of revolution.
///
/// `surface_of_revolution` needs a profile and is only available through a
/// definition file.
pub fn builtin<T: Scalar>(name: &str, params: &BTreeMap<String, f64>) -> Result<MetricChart<T>> {
    match name {
        "euclidean" => {
            check_known(params, &["n"])?;
            let n = dim_param(params, 2)?;
            let coords = coord_names(n);
            let metric = diagonal(n, "1");
            MetricChart::from_expressions(&format!("euclidean(n={n})"), &coords, &metric, None)
        }
        "sphere_stereo" => {
            check_known(params, &["n", "R"])?;
            let n = dim_param(params, 2)?;
            let r = param(params, "R", Some(1.0))?;
            if r <= 0.0 {
                return Err(Error::BadParam(format!("R = {r} must be positive")));
            }
            let coords = coord_names(n);
            let r2 = lit(r * r);
            let sq = sum_of_squares(&coords);
            let factor = format!("(2 * {r2} / ({r2} + {sq}))^2");
            let metric = diagonal(n, &factor);
            MetricChart::from_expressions(
                &format!("sphere_stereo(n={n}, R={r:?})"),
                &coords,
                &metric,
                None,
            )
        }
        "hyperbolic_ball" => {
            check_known(params, &["n"])?;
            let n = dim_param(params, 2)?;
            let coords = coord_names(n);
            let sq = sum_of_squares(&coords);
            let factor = format!("(2 / (1 - {sq}))^2");
            let domain = format!("1 - {sq}");
            let metric = diagonal(n, &factor);
            MetricChart::from_expressions(
                &format!("hyperbolic_ball(n={n})"),
                &coords,
                &metric,
                Some(&domain),
            )
        }
        "torus" => {
            check_known(params, &["R", "r"])?;
            let big = param(params, "R", Some(2.0))?;
            let small = param(params, "r", Some(1.0))?;
            crate::surfrev::Profile::<T>::torus(big, small)?.chart()
        }
        "surface_of_revolution" => Err(Error::BadParam(
            "surface_of_revolution needs a profile; use a definition file with a \"profile\" object"
                .into(),
        )),
        other => Err(Error::UnknownBuiltin(other.to_string())),
    }
}

fn sum_of_squares(coords: &[String]) -> String {
    let terms: Vec<String> = coords.iter().map(|c| format!("{c}^2")).collect();
    format!("({})", terms.join(" + "))
}

/// Parses `k=v,k=v` parameter lists.
pub fn parse_params(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::BadParam(format!("expected key=value, got `{item}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::BadParam(format!("`{v}` is not a number")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// Loads a chart from a JSON definition document.
///
/// Accepted shapes:
/// `{"label", "dim", "coords", "metric", "domain"}`,
/// `{"builtin", "params"}`, and
/// `{"builtin": "surface_of_revolution", "profile": {...}}`.
/// The raw text is kept on the chart for verbatim echoing.
pub fn load_definition<T: Scalar>(text: &str) -> Result<MetricChart<T>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Format("definition must be a JSON object".into()))?;
    let chart = if let Some(name) = obj.get("builtin") {
        let name = name
            .as_str()
            .ok_or_else(|| Error::Format("`builtin` must be a string".into()))?;
        if name == "surface_of_revolution" {
            let profile = obj
                .get("profile")
                .ok_or_else(|| Error::Format("surface_of_revolution needs a `profile`".into()))?;
            let def: crate::surfrev::ProfileDefinition = serde_json::from_value(profile.clone())
                .map_err(|e| Error::Format(format!("profile: {e}")))?;
            crate::surfrev::Profile::<T>::from_definition(&def)?.chart()?
        } else {
            let params: BTreeMap<String, f64> = match obj.get("params") {
                None => BTreeMap::new(),
                Some(p) => serde_json::from_value(p.clone())
                    .map_err(|e| Error::Format(format!("params: {e}")))?,
            };
            builtin(name, &params)?
        }
    } else {
        let coords: Vec<String> = field(obj, "coords")?;
        let metric: Vec<Vec<String>> = field(obj, "metric")?;
        if let Some(d) = obj.get("dim") {
            let d = d
                .as_u64()
                .ok_or_else(|| Error::Format("`dim` must be a positive integer".into()))?;
            if d as usize != coords.len() {
                return Err(Error::Format(format!(
                    "dim = {d} but {} coordinates were given",
                    coords.len()
                )));
            }
        }
        let label = obj.get("label").and_then(Value::as_str).unwrap_or("chart");
        let domain = match obj.get("domain") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.as_str()),
            Some(_) => return Err(Error::Format("`domain` must be a string".into())),
        };
        MetricChart::from_expressions(label, &coords, &metric, domain)?
    };
    Ok(chart.with_definition(text.to_string()))
}

fn field<D: serde::de::DeserializeOwned>(
    obj: &serde_json::Map<String, Value>,
    key: &str,
) -> Result<D> {
    let v = obj
        .get(key)
        .ok_or_else(|| Error::Format(format!("missing `{key}`")))?;
    serde_json::from_value(v.clone()).map_err(|e| Error::Format(format!("{key}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(s: &str) -> BTreeMap<String, f64> {
        parse_params(s).unwrap()
    }

    #[test]
    fn euclidean_is_flat() {
        let c: MetricChart<f64> = builtin("euclidean", &params("n=2")).unwrap();
        let j = c.metric_at(&[7.0, -3.0]).unwrap();
        assert_eq!(j.g, Matrix::identity(2));
        assert!(j.dg.iter().all(|m| m.max_abs() == 0.0));
    }

    #[test]
    fn sphere_origin_factor() {
        let c: MetricChart<f64> = builtin("sphere_stereo", &params("n=2,R=1")).unwrap();
        assert_eq!(c.metric(&[0.0, 0.0]).unwrap(), Matrix::identity(2).scale(4.0));
        let g = c.metric(&[1.0, 0.0]).unwrap();
        assert!(g.sub(&Matrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_domain() {
        let c: MetricChart<f64> = builtin("hyperbolic_ball", &params("n=2")).unwrap();
        assert_eq!(c.metric(&[1.5, 0.0]).unwrap_err().kind(), "DomainExit");
        assert_eq!(c.metric_at(&[0.0, 1.0]).unwrap_err().kind(), "DomainExit");
        assert!(c.metric(&[0.5, 0.5]).is_ok());
    }

    #[test]
    fn bad_params() {
        assert_eq!(
            builtin::<f64>("sphere_stereo", &params("R=-1")).unwrap_err().kind(),
            "BadParam"
        );
        assert_eq!(
            builtin::<f64>("klein_bottle", &params("")).unwrap_err().kind(),
            "UnknownBuiltin"
        );
        assert_eq!(
            builtin::<f64>("euclidean", &params("n=2.5")).unwrap_err().kind(),
            "BadParam"
        );
    }

    #[test]
    fn torus_metric() {
        let c: MetricChart<f64> = builtin("torus", &params("R=2,r=1")).unwrap();
        let g = c.metric(&[0.0, 0.0]).unwrap();
        assert!(g.sub(&Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 9.0]])).max_abs() < 1e-14);
    }

    #[test]
    fn second_derivatives_match_finite_differences() {
        let c: MetricChart<f64> = builtin("sphere_stereo", &params("n=2,R=1.3")).unwrap();
        let p = [0.3, -0.2];
        let j = c.metric_at(&p).unwrap();
        let h = 1e-5;
        for k in 0..2 {
            let mut pp = p;
            let mut pm = p;
            pp[k] += h;
            pm[k] -= h;
            let dp = c.metric_d1(&pp).unwrap().dg;
            let dm = c.metric_d1(&pm).unwrap().dg;
            for l in 0..2 {
                let fd = dp[l].sub(&dm[l]).scale(0.5 / h);
                assert!(fd.sub(&j.ddg[k][l]).max_abs() < 1e-7);
            }
        }
    }

    #[test]
    fn definition_file_round_trip() {
        let text = r#"{"label": "warped", "dim": 2, "coords": ["r", "t"],
            "metric": [["1", "0"], ["0", "r^2"]], "domain": "r"}"#;
        let c: MetricChart<f64> = load_definition(text).unwrap();
        assert_eq!(c.definition(), Some(text));
        assert_eq!(c.label(), "warped");
        assert!(c.metric(&[2.0, 0.1]).unwrap()[(1, 1)] == 4.0);
        assert_eq!(c.metric(&[-1.0, 0.0]).unwrap_err().kind(), "DomainExit");
    }

    #[test]
    fn asymmetric_metric_rejected() {
        let text = r#"{"coords": ["x", "y"], "metric": [["1", "x"], ["0", "1"]]}"#;
        assert_eq!(load_definition::<f64>(text).unwrap_err().kind(), "Format");
    }

    #[test]
    fn parse_error_surfaces() {
        let text = r#"{"coords": ["x1"], "metric": [["x1 +"]]}"#;
        assert_eq!(load_definition::<f64>(text).unwrap_err().kind(), "ParseError");
    }

    #[test]
    fn indefinite_metric_is_singular() {
        let text = r#"{"coords": ["x", "y"], "metric": [["1", "0"], ["0", "-1"]]}"#;
        let c: MetricChart<f64> = load_definition(text).unwrap();
        assert_eq!(c.metric(&[0.0, 0.0]).unwrap_err().kind(), "SingularMetric");
    }
}
