use serde::Serialize;

use super::CurvatureProfile;
use crate::ode::{hermite, hermite_derivative};
use crate::{Error, Result, Scalar};

/// Initial value `f(0+)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RiccatiStart<T> {
    Finite(T),
    PlusInfinity,
}

#[derive(Clone, Debug, Serialize)]
pub struct RiccatiSettings<T> {
    /// RK4 step.
    pub step: T,
    /// Samples with `|f| ≥ 1/ε` are treated as belonging to a pole.
    pub epsilon: T,
    /// Start time for `f(0+) = +∞`.
    pub t0: T,
}

impl<T: Scalar> Default for RiccatiSettings<T> {
    fn default() -> Self {
        RiccatiSettings {
            step: T::of(1e-3),
            epsilon: T::of(1e-8),
            t0: T::of(1e-6),
        }
    }
}

/// Samples of `f` between two poles, with `f′` for interpolation.
#[derive(Clone, Debug, Serialize)]
pub struct RiccatiSegment<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub derivatives: Vec<T>,
}

impl<T: Scalar> RiccatiSegment<T> {
    fn new() -> Self {
        RiccatiSegment {
            times: Vec::new(),
            values: Vec::new(),
            derivatives: Vec::new(),
        }
    }

    pub fn start(&self) -> T {
        self.times[0]
    }

    pub fn end(&self) -> T {
        *self.times.last().unwrap()
    }
}

/// A pole `f → −∞` as `t → a⁻`, `f → +∞` as `t → a⁺`.
#[derive(Clone, Debug, Serialize)]
pub struct Pole<T> {
    pub t: T,
    /// `(t − a) f(t)` at the last sample before the pole; tends to 1.
    pub left_residue: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct RiccatiTrace<T> {
    pub profile: String,
    pub initial: RiccatiStart<T>,
    pub tmax: T,
    pub settings: RiccatiSettings<T>,
    pub segments: Vec<RiccatiSegment<T>>,
    pub poles: Vec<Pole<T>>,
}

impl<T: Scalar> RiccatiTrace<T> {
    pub fn first_pole(&self) -> Option<T> {
        self.poles.first().map(|p| p.t)
    }

    /// Distances between consecutive poles.
    pub fn pole_gaps(&self) -> Vec<T> {
        self.poles.windows(2).map(|w| w[1].t - w[0].t).collect()
    }

    /// `(t, f, segment)` for every stored sample.
    pub fn samples(&self) -> impl Iterator<Item = (T, T, usize)> + '_ {
        self.segments
            .iter()
            .enumerate()
            .flat_map(|(k, s)| s.times.iter().zip(&s.values).map(move |(&t, &f)| (t, f, k)))
    }

    /// `f(t)` by Hermite interpolation inside a segment; `None` outside all
    /// segments (before the start, past `tmax`, or at a pole).
    pub fn eval(&self, t: T) -> Option<T> {
        let seg = self
            .segments
            .iter()
            .find(|s| s.times.len() > 1 && t >= s.start() && t <= s.end())?;
        let k = seg.times.partition_point(|&s| s <= t).saturating_sub(1).min(seg.times.len() - 2);
        let y = hermite(
            seg.times[k],
            seg.times[k + 1],
            &[seg.values[k]],
            &[seg.derivatives[k]],
            &[seg.values[k + 1]],
            &[seg.derivatives[k + 1]],
            t,
        );
        Some(y[0])
    }

    /// Largest `|(t − a) f(t) − 1|` over the last `count` samples before each pole.
    pub fn left_asymptotics(&self, count: usize) -> T {
        let mut worst = T::zero();
        for (pole, seg) in self.poles.iter().zip(&self.segments) {
            let m = seg.times.len();
            for i in m.saturating_sub(count)..m {
                worst = worst.max(((seg.times[i] - pole.t) * seg.values[i] - T::one()).abs());
            }
        }
        worst
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,f,segment_id\n");
        for (t, f, k) in self.samples() {
            s.push_str(&format!("{:.16e},{:.16e},{}\n", t.as_f64(), f.as_f64(), k));
        }
        s
    }
}

#[derive(Clone, Copy)]
enum State<T> {
    /// `f` itself, used while `|f| ≤ 2`.
    Direct(T),
    /// `u = 1/f`, which solves `u′ = 1 + H u²` and passes smoothly through
    /// the poles of `f`.
    Reciprocal(T),
}

fn rk4<T: Scalar>(rhs: impl Fn(T, T) -> T, t: T, y: T, h: T) -> T {
    let half = T::of(0.5);
    let k1 = rhs(t, y);
    let k2 = rhs(t + half * h, y + half * h * k1);
    let k3 = rhs(t + half * h, y + half * h * k2);
    let k4 = rhs(t + h, y + h * k3);
    y + h / T::of(6.0) * (k1 + T::of(2.0) * (k2 + k3) + k4)
}

/// Integrates `f′ = −f² − H` on `(0, tmax]`, continuing through poles.
pub fn riccati_solve<T: Scalar>(
    h: &CurvatureProfile<T>,
    start: RiccatiStart<T>,
    tmax: T,
    settings: &RiccatiSettings<T>,
) -> Result<RiccatiTrace<T>> {
    if !(tmax > T::zero()) || !(settings.step > T::zero()) || !(settings.epsilon > T::zero()) {
        return Err(Error::BadParam("riccati: tmax, step and epsilon must be positive".into()));
    }
    let (t_start, mut state) = match start {
        RiccatiStart::Finite(f0) if f0.abs() <= T::of(2.0) => (T::zero(), State::Direct(f0)),
        RiccatiStart::Finite(f0) => (T::zero(), State::Reciprocal(T::one() / f0)),
        RiccatiStart::PlusInfinity => {
            let t0 = settings.t0;
            // f = 1/t − H(0) t/3 + …, so u = t + H(0) t³/3 + …
            (t0, State::Reciprocal(t0 + h.eval(T::zero()) * t0 * t0 * t0 / T::of(3.0)))
        }
    };
    let limit = T::one() / settings.epsilon;
    let direct = |t: T, f: T| -f * f - h.eval(t);
    let recip = |t: T, u: T| T::one() + h.eval(t) * u * u;

    let mut segments = vec![RiccatiSegment::new()];
    let mut poles = Vec::new();
    let record = |segs: &mut Vec<RiccatiSegment<T>>, t: T, s: State<T>| {
        let f = match s {
            State::Direct(f) => f,
            State::Reciprocal(u) => T::one() / u,
        };
        if f.is_finite() && f.abs() < limit {
            let seg = segs.last_mut().unwrap();
            seg.times.push(t);
            seg.values.push(f);
            seg.derivatives.push(-f * f - h.eval(t));
        }
    };
    record(&mut segments, t_start, state);
    let steps = ((tmax - t_start) / settings.step - T::of(1e-9)).ceil().to_usize().unwrap_or(0).max(1);
    let width = (tmax - t_start) / T::of_usize(steps);
    for k in 0..steps {
        let t = t_start + width * T::of_usize(k);
        let t1 = if k + 1 == steps { tmax } else { t_start + width * T::of_usize(k + 1) };
        let dt = t1 - t;
        state = match state {
            State::Direct(f) => {
                let f1 = rk4(direct, t, f, dt);
                if !f1.is_finite() {
                    return Err(Error::StepFault { t: t1.as_f64() });
                }
                if f1.abs() > T::of(2.0) {
                    State::Reciprocal(T::one() / f1)
                } else {
                    State::Direct(f1)
                }
            }
            State::Reciprocal(u) => {
                let u1 = rk4(recip, t, u, dt);
                if !u1.is_finite() {
                    return Err(Error::StepFault { t: t1.as_f64() });
                }
                if u < T::zero() && u1 >= T::zero() {
                    let a = pole_in_step(t, t1, u, recip(t, u), u1, recip(t1, u1));
                    let seg = segments.last().unwrap();
                    let left_residue = match seg.times.last() {
                        Some(&tl) => (tl - a) * *seg.values.last().unwrap(),
                        None => T::nan(),
                    };
                    poles.push(Pole { t: a, left_residue });
                    segments.push(RiccatiSegment::new());
                }
                if u1.abs() > T::one() {
                    State::Direct(T::one() / u1)
                } else {
                    State::Reciprocal(u1)
                }
            }
        };
        record(&mut segments, t1, state);
    }
    segments.retain(|s| !s.times.is_empty());
    Ok(RiccatiTrace {
        profile: h.label().to_string(),
        initial: start,
        tmax,
        settings: settings.clone(),
        segments,
        poles,
    })
}

/// Zero of the Hermite cubic through `(u0, d0)` and `(u1, d1)`; `u0 < 0 ≤ u1`.
fn pole_in_step<T: Scalar>(t0: T, t1: T, u0: T, d0: T, u1: T, d1: T) -> T {
    let (mut a, mut b) = (t0, t1);
    let at = |t: T| hermite(t0, t1, &[u0], &[d0], &[u1], &[d1], t)[0];
    for _ in 0..200 {
        let m = (a + b) * T::of(0.5);
        if m <= a || m >= b {
            break;
        }
        if at(m) < T::zero() {
            a = m;
        } else {
            b = m;
        }
    }
    // one Newton polish on the cubic
    let m = (a + b) * T::of(0.5);
    let slope = hermite_derivative(t0, t1, &[u0], &[d0], &[u1], &[d1], m)[0];
    if slope != T::zero() {
        let x = m - at(m) / slope;
        if x >= t0 && x <= t1 {
            return x;
        }
    }
    m
}
