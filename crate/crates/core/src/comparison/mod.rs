//! Scalar Riccati equations with pole continuation, and sampled checks of
//! the comparison theorems: driving function, Sturm, value, Rauch, Myers
//! and Bishop.

mod riccati;
mod theorems;
mod volume;

use std::fmt;
use std::sync::Arc;

use crate::manifold::MetricChart;
use crate::transport::Trajectory;
use crate::variation::DrivingField;
use crate::{Error, Result, Scalar};

pub use riccati::{riccati_solve, Pole, RiccatiSegment, RiccatiSettings, RiccatiStart, RiccatiTrace};
pub use theorems::{
    compare_driving, myers_check, rauch_ratio, sturm_check, value_compare, DrivingComparison, MyersReport,
    RauchReport, SturmReport, ValueComparison,
};
pub use volume::{scalar_expansion_fit, volume_compare, ScalarFit, VolumeReport, VolumeSettings};

/// A driving function `t ↦ H(t)`, usually a sectional curvature along a
/// unit-speed geodesic.
#[derive(Clone)]
pub struct CurvatureProfile<T> {
    label: String,
    eval: Arc<dyn Fn(T) -> T + Send + Sync>,
}

impl<T> fmt::Debug for CurvatureProfile<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CurvatureProfile").field("label", &self.label).finish()
    }
}

impl<T: Scalar> CurvatureProfile<T> {
    pub fn new(label: impl Into<String>, eval: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        CurvatureProfile {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn constant(k: T) -> Self {
        CurvatureProfile::new(format!("constant({})", k.as_f64()), move |_| k)
    }

    /// Piecewise-linear interpolation of samples (times ascending).
    pub fn from_samples(label: impl Into<String>, times: Vec<T>, values: Vec<T>) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::BadParam("profile samples: times and values must match".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::BadParam("profile samples: times must increase".into()));
        }
        Ok(CurvatureProfile::new(label, move |t| {
            let k = times.partition_point(|&s| s <= t);
            if k == 0 {
                return values[0];
            }
            if k == times.len() {
                return values[k - 1];
            }
            let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
            values[k - 1] + w * (values[k] - values[k - 1])
        }))
    }

    /// Sectional curvature of the plane spanned by the velocity and the
    /// frame vector `normal` (an index `≥ 1`) along a framed geodesic, in
    /// arclength.
    pub fn along_geodesic(chart: &MetricChart<T>, geo: &Trajectory<T>, normal: usize) -> Result<Self> {
        let drive = DrivingField::build(chart, geo)?;
        let n = drive.dim();
        if normal == 0 || normal >= n {
            return Err(Error::BadParam(format!("normal index {normal} out of range 1..{n}")));
        }
        let s2 = drive.speed * drive.speed;
        // grid and midpoints interleaved, in arclength
        let mut times = Vec::with_capacity(2 * drive.times.len());
        let mut values = Vec::with_capacity(2 * drive.times.len());
        for k in 0..drive.times.len() {
            times.push((drive.times[k] - drive.times[0]) * drive.speed);
            values.push(drive.grid[k][(normal, normal)] / s2);
            if k + 1 < drive.times.len() {
                let mid = (drive.times[k] + drive.times[k + 1]) * T::of(0.5);
                times.push((mid - drive.times[0]) * drive.speed);
                values.push(drive.mid[k][(normal, normal)] / s2);
            }
        }
        CurvatureProfile::from_samples(format!("sectional along {}", geo.label()), times, values)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: T) -> T {
        (self.eval)(t)
    }

    /// Sanity check that `H` is finite and has no visible jumps on `[a, b]`:
    /// the largest change between neighbouring samples must shrink when
    /// the sampling is refined.
    pub fn check_continuity(&self, a: T, b: T) -> Result<()> {
        let jump = |m: usize| -> Result<T> {
            let mut prev = self.eval(a);
            let mut worst = T::zero();
            for k in 1..=m {
                let x = self.eval(a + (b - a) * T::of_usize(k) / T::of_usize(m));
                if !x.is_finite() {
                    return Err(Error::BadParam(format!("profile {} is not finite", self.label)));
                }
                worst = worst.max((x - prev).abs());
                prev = x;
            }
            Ok(worst)
        };
        let coarse = jump(1000)?;
        let fine = jump(4000)?;
        if fine > T::of(1e-6) && fine > T::of(0.9) * coarse {
            return Err(Error::BadParam(format!(
                "profile {} looks discontinuous on [{}, {}]",
                self.label,
                a.as_f64(),
                b.as_f64()
            )));
        }
        Ok(())
    }
}

/// `H(t) ≥ K(t)` on a uniform sample of `[a, b]`; returns the smallest margin.
pub(crate) fn check_order<T: Scalar>(h: &CurvatureProfile<T>, k: &CurvatureProfile<T>, a: T, b: T) -> Result<T> {
    let m = 2000;
    let mut margin = T::infinity();
    for i in 0..=m {
        let t = a + (b - a) * T::of_usize(i) / T::of_usize(m);
        let d = h.eval(t) - k.eval(t);
        margin = margin.min(d);
        if d < -T::of(1e-12) {
            return Err(Error::InputOrderViolated(format!(
                "{} < {} at t = {}",
                h.label,
                k.label,
                t.as_f64()
            )));
        }
    }
    Ok(margin)
}
