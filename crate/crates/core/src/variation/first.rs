use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::axpy;
use crate::manifold::{curve_length, energy, Curve, MetricChart};
use crate::ode::OdeSettings;
use crate::quad::gauss_legendre;
use crate::tensor::{christoffel, contract_gamma};
use crate::transport::exp_jacobian;
use crate::{Error, Result, Scalar};

type VectorFn<T> = Arc<dyn Fn(T) -> Vec<T> + Send + Sync>;

/// Energy, length and the Schwarz gap `(b − a)E − L²` of a curve. The gap
/// vanishes exactly for constant-speed parametrizations.
#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport<T> {
    pub energy: T,
    pub length: T,
    pub a: T,
    pub b: T,
    pub schwarz_gap: T,
}

pub fn energy_report<T: Scalar, C: Curve<T> + ?Sized>(chart: &MetricChart<T>, curve: &C) -> Result<EnergyReport<T>> {
    let (a, b) = curve.interval();
    let e = energy(chart, curve)?;
    let l = curve_length(chart, curve)?;
    Ok(EnergyReport {
        energy: e,
        length: l,
        a,
        b,
        schwarz_gap: (b - a) * e - l * l,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCondition {
    FixedEnds,
    GeodesicTransversals,
}

/// A variation `Q(s, t) = exp_{γ(s)}(t V(s))` of a base curve. `V` is given
/// in chart coordinates as a function of the base parameter.
#[derive(Clone)]
pub struct RectangleSpec<T: Scalar> {
    base: Arc<dyn Curve<T>>,
    field: VectorFn<T>,
    field_derivative: Option<VectorFn<T>>,
    end: EndCondition,
}

impl<T: Scalar> std::fmt::Debug for RectangleSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RectangleSpec").field("end", &self.end).finish_non_exhaustive()
    }
}

impl<T: Scalar> RectangleSpec<T> {
    pub fn new(
        base: Arc<dyn Curve<T>>,
        field: impl Fn(T) -> Vec<T> + Send + Sync + 'static,
        end: EndCondition,
    ) -> Result<Self> {
        if end == EndCondition::FixedEnds {
            let (a, b) = base.interval();
            for s in [a, b] {
                if field(s).iter().any(|x| x.abs() > T::of(1e-12)) {
                    return Err(Error::BadParam(format!(
                        "fixed ends: the variation field does not vanish at s = {}",
                        s.as_f64()
                    )));
                }
            }
        }
        Ok(RectangleSpec {
            base,
            field: Arc::new(field),
            field_derivative: None,
            end,
        })
    }

    /// Supplies `dV/ds` in coordinates; otherwise it is differenced.
    pub fn with_derivative(mut self, d: impl Fn(T) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.field_derivative = Some(Arc::new(d));
        self
    }

    pub fn base(&self) -> &dyn Curve<T> {
        self.base.as_ref()
    }

    pub fn end_condition(&self) -> EndCondition {
        self.end
    }

    pub fn field(&self, s: T) -> Vec<T> {
        (self.field)(s)
    }

    pub fn field_derivative(&self, s: T) -> Vec<T> {
        if let Some(d) = &self.field_derivative {
            return d(s);
        }
        let (a, b) = self.base.interval();
        let h = T::of(1e-5) * (b - a).abs().max(T::one());
        let lo = (s - h).max(a);
        let hi = (s + h).min(b);
        let (vl, vh) = ((self.field)(lo), (self.field)(hi));
        vl.iter().zip(&vh).map(|(&l, &r)| (r - l) / (hi - lo)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FirstVariation<T> {
    pub analytic: T,
    pub fd: T,
    pub mismatch: T,
    pub t_step: T,
    pub boundary_term: T,
}

fn nodes<T: Scalar>(curve: &dyn Curve<T>) -> Vec<(T, T)> {
    let (x, w) = gauss_legendre::<T>(8);
    // dense breakpoints (sampled curves) are merged into pieces of at least 0.05
    let bp = curve.breakpoints();
    let end = *bp.last().unwrap();
    let mut cuts = vec![bp[0]];
    for &t in &bp[1..] {
        if t - *cuts.last().unwrap() >= T::of(0.05) && end - t >= T::of(0.05) {
            cuts.push(t);
        }
    }
    cuts.push(end);
    let mut out = Vec::new();
    for piece in cuts.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        if !(b > a) {
            continue;
        }
        let cells = ((b - a) / T::of(0.1)).ceil().to_usize().unwrap_or(1).max(16);
        let width = (b - a) / T::of_usize(cells);
        let half = width / T::of(2.0);
        for c in 0..cells {
            let mid = a + width * (T::of_usize(c) + T::of(0.5));
            for (xi, wi) in x.iter().zip(&w) {
                out.push((mid + half * *xi, *wi * half));
            }
        }
    }
    out
}

fn varied_energy<T: Scalar>(
    chart: &MetricChart<T>,
    rect: &RectangleSpec<T>,
    quad: &[(T, T)],
    t: T,
    settings: &OdeSettings<T>,
) -> Result<T> {
    let base = rect.base();
    let terms: Result<Vec<T>> = quad
        .par_iter()
        .map(|&(s, w)| {
            let p = base.point(s);
            let v: Vec<T> = rect.field(s).iter().map(|&x| x * t).collect();
            let jac = exp_jacobian(chart, &p, &v, settings)?;
            let dv: Vec<T> = rect.field_derivative(s).iter().map(|&x| x * t).collect();
            let ds = axpy(T::one(), &jac.d_base.mul_vec(&base.velocity(s)), &jac.d_velocity.mul_vec(&dv));
            Ok(w * chart.metric(&jac.point)?.form(&ds, &ds))
        })
        .collect();
    Ok(terms?.into_iter().fold(T::zero(), |a, b| a + b))
}

/// `dE/dt(0)` for the variation both from the first variation formula and
/// by central differences of the energy of `Q(·, ±t)`.
pub fn first_variation<T: Scalar>(
    chart: &MetricChart<T>,
    rect: &RectangleSpec<T>,
    settings: &OdeSettings<T>,
) -> Result<FirstVariation<T>> {
    let base = rect.base();
    let (a, b) = base.interval();
    let quad = nodes(base);

    let boundary = |s: T| -> Result<T> { chart.inner(&base.point(s), &rect.field(s), &base.velocity(s)) };
    let boundary_term = boundary(b)? - boundary(a)?;
    let mut bulk = T::zero();
    for &(s, w) in &quad {
        let p = base.point(s);
        let vel = base.velocity(s);
        let gamma = christoffel(chart, &p)?.gamma;
        let acc = axpy(T::one(), &base.acceleration(s), &contract_gamma(&gamma, &vel, &vel));
        bulk += w * chart.inner(&p, &rect.field(s), &acc)?;
    }
    let two = T::of(2.0);
    let analytic = two * (boundary_term - bulk);

    let t = T::of(1e-4);
    let mut exp_settings = settings.clone();
    exp_settings.step = settings.step.max(T::of(0.05));
    let plus = varied_energy(chart, rect, &quad, t, &exp_settings)?;
    let minus = varied_energy(chart, rect, &quad, -t, &exp_settings)?;
    let fd = (plus - minus) / (two * t);
    Ok(FirstVariation {
        analytic,
        fd,
        mismatch: (analytic - fd).abs(),
        t_step: t,
        boundary_term: two * boundary_term,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{builtin, parse_params, FnCurve};
    use crate::surfrev::Profile;
    use crate::transport::integrate_geodesic;
    use std::f64::consts::PI;

    #[test]
    fn schwarz_equality_and_strictness() {
        let e: MetricChart<f64> = builtin("euclidean", &parse_params("n=2").unwrap()).unwrap();
        let seg = FnCurve::new(0.0, 1.0, |t: f64| vec![t, 0.0], |_| vec![1.0, 0.0]);
        let r = energy_report(&e, &seg).unwrap();
        assert!((r.energy - 1.0).abs() < 1e-12);
        assert!(r.schwarz_gap.abs() < 1e-9);
        let slow = FnCurve::new(0.0, 1.0, |t: f64| vec![t * t, 0.0], |t| vec![2.0 * t, 0.0]);
        let r = energy_report(&e, &slow).unwrap();
        assert!((r.length - 1.0).abs() < 1e-9);
        assert!(r.schwarz_gap > 0.3);
    }

    #[test]
    fn geodesic_is_critical_for_fixed_ends() {
        let c: MetricChart<f64> = builtin("sphere_stereo", &parse_params("n=2,R=1").unwrap()).unwrap();
        let geo = Arc::new(integrate_geodesic(&c, &[0.1, 0.0], &[0.2, 0.3], 2.0, &OdeSettings::default()).unwrap());
        let rect = RectangleSpec::new(
            geo.clone(),
            |s: f64| vec![(PI * s / 2.0).sin() * 0.3, (PI * s / 2.0).sin() * s],
            EndCondition::FixedEnds,
        )
        .unwrap();
        let fv = first_variation(&c, &rect, &OdeSettings::default()).unwrap();
        assert!(fv.analytic.abs() < 1e-6, "{fv:?}");
        assert!(fv.fd.abs() < 1e-6, "{fv:?}");

        assert!(RectangleSpec::new(geo, |_: f64| vec![1.0, 0.0], EndCondition::FixedEnds).is_err());
    }

    #[test]
    fn boundary_term_for_stretching_variation() {
        let c: MetricChart<f64> = builtin("hyperbolic_ball", &parse_params("n=2").unwrap()).unwrap();
        let geo = Arc::new(integrate_geodesic(&c, &[0.0, 0.1], &[0.3, 0.1], 1.0, &OdeSettings::default()).unwrap());
        let g = geo.clone();
        let rect = RectangleSpec::new(geo.clone(), move |s: f64| Curve::velocity(g.as_ref(), s).iter().map(|x| x * s).collect(), EndCondition::GeodesicTransversals).unwrap();
        let fv = first_variation(&c, &rect, &OdeSettings::default()).unwrap();
        let end = geo.len() - 1;
        let want = 2.0 * c.inner(geo.point_at(end), geo.velocity_at(end), geo.velocity_at(end)).unwrap();
        assert!((fv.analytic - want).abs() < 1e-8);
        assert!(fv.mismatch < 1e-6, "{fv:?}");
    }

    #[test]
    fn latitude_on_torus_is_not_critical() {
        let torus = Profile::<f64>::torus(3.0, 1.0).unwrap();
        let chart = torus.chart().unwrap();
        let u0 = 1.0;
        let lat = Arc::new(FnCurve::new(0.0, 2.0 * PI, move |s: f64| vec![u0, s], |_| vec![0.0, 1.0]));
        let rect = RectangleSpec::new(lat, |s: f64| vec![(s / 2.0).sin(), 0.0], EndCondition::FixedEnds).unwrap();
        let fv = first_variation(&chart, &rect, &OdeSettings::default()).unwrap();
        // D_{γ'}γ' = -f f' ∂_u on a latitude; ∫ sin(s/2) ds = 4
        let (f, fp, _) = torus.radius_jet(u0).unwrap();
        let want = 2.0 * f * fp * 4.0;
        assert!((fv.analytic - want).abs() < 1e-8, "{fv:?} vs {want}");
        assert!(fv.mismatch < 1e-5, "{fv:?}");
    }
}
