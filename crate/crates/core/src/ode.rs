//! Explicit Runge–Kutta integration with cubic Hermite dense output.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Classical fourth-order Runge–Kutta on a uniform grid.
    Rk4Fixed,
    /// Runge–Kutta–Fehlberg 4(5) with step-size control.
    Rkf45Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeSettings<T> {
    pub method: Method,
    /// Fixed step for RK4; initial step for RKF45.
    pub step: T,
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

impl<T: Scalar> Default for OdeSettings<T> {
    fn default() -> Self {
        OdeSettings {
            method: Method::Rk4Fixed,
            step: T::of(1e-3),
            rtol: T::of(1e-9),
            atol: T::of(1e-11),
            max_steps: 10_000_000,
        }
    }
}

impl<T: Scalar> OdeSettings<T> {
    pub fn with_step(step: T) -> Self {
        OdeSettings {
            step,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > T::zero()) || !(self.rtol > T::zero()) || !(self.atol > T::zero()) {
            return Err(Error::BadParam(
                "step and tolerances must be positive".into(),
            ));
        }
        if self.max_steps == 0 {
            return Err(Error::BadParam("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// First-order system `y' = F(t, y)`.
pub trait OdeSystem<T> {
    fn dim(&self) -> usize;
    fn rhs(&self, t: T, y: &[T], dy: &mut [T]) -> Result<()>;
    /// Validates an accepted state (chart domain, finiteness).
    fn accept(&self, _t: T, _y: &[T]) -> Result<()> {
        Ok(())
    }
}

/// Accepted steps with derivative samples for Hermite interpolation.
#[derive(Clone, Debug, Serialize)]
pub struct OdeSolution<T> {
    pub t: Vec<T>,
    pub y: Vec<Vec<T>>,
    pub dy: Vec<Vec<T>>,
}

/// Integration stopped early; `partial` holds every accepted step.
#[derive(Clone, Debug)]
pub struct OdeFailure<T> {
    pub error: Error,
    pub partial: OdeSolution<T>,
}

impl<T: Scalar> OdeSolution<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t_start(&self) -> T {
        self.t[0]
    }

    pub fn t_end(&self) -> T {
        *self.t.last().unwrap()
    }

    /// Index `k` of the step `[t_k, t_{k+1}]` containing `t` (clamped).
    pub fn segment(&self, t: T) -> usize {
        let n = self.t.len();
        if n < 2 {
            return 0;
        }
        let k = self.t.partition_point(|&s| s <= t);
        k.saturating_sub(1).min(n - 2)
    }

    /// Cubic Hermite interpolant of the state at `t`.
    pub fn interp(&self, t: T) -> Vec<T> {
        if self.t.len() == 1 {
            return self.y[0].clone();
        }
        let k = self.segment(t);
        hermite(
            self.t[k],
            self.t[k + 1],
            &self.y[k],
            &self.dy[k],
            &self.y[k + 1],
            &self.dy[k + 1],
            t,
        )
    }

    /// Time derivative of the Hermite interpolant at `t`.
    pub fn interp_derivative(&self, t: T) -> Vec<T> {
        if self.t.len() == 1 {
            return self.dy[0].clone();
        }
        let k = self.segment(t);
        hermite_derivative(
            self.t[k],
            self.t[k + 1],
            &self.y[k],
            &self.dy[k],
            &self.y[k + 1],
            &self.dy[k + 1],
            t,
        )
    }
}

/// Cubic Hermite interpolation on `[t0, t1]`.
pub fn hermite<T: Scalar>(t0: T, t1: T, y0: &[T], d0: &[T], y1: &[T], d1: &[T], t: T) -> Vec<T> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (two, three) = (T::of(2.0), T::of(3.0));
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = -two * s3 + three * s2;
    let h11 = s3 - s2;
    (0..y0.len())
        .map(|i| h00 * y0[i] + h10 * h * d0[i] + h01 * y1[i] + h11 * h * d1[i])
        .collect()
}

pub fn hermite_derivative<T: Scalar>(
    t0: T,
    t1: T,
    y0: &[T],
    d0: &[T],
    y1: &[T],
    d1: &[T],
    t: T,
) -> Vec<T> {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let s2 = s * s;
    let six = T::of(6.0);
    let dh00 = (six * s2 - six * s) / h;
    let dh10 = T::of(3.0) * s2 - T::of(4.0) * s + T::one();
    let dh01 = (-six * s2 + six * s) / h;
    let dh11 = T::of(3.0) * s2 - T::of(2.0) * s;
    (0..y0.len())
        .map(|i| dh00 * y0[i] + dh10 * d0[i] + dh01 * y1[i] + dh11 * d1[i])
        .collect()
}

fn lin<T: Scalar>(y: &[T], h: T, terms: &[(T, &[T])]) -> Vec<T> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        let ch = *c * h;
        for (o, &ki) in out.iter_mut().zip(k.iter()) {
            *o += ch * ki;
        }
    }
    out
}

fn all_finite<T: Scalar>(y: &[T]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Classical RK4 step; returns the new state.
pub fn rk4_step<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    k1: &[T],
    h: T,
) -> Result<Vec<T>> {
    let n = y.len();
    let half = T::of(0.5);
    let mut k2 = vec![T::zero(); n];
    let mut k3 = vec![T::zero(); n];
    let mut k4 = vec![T::zero(); n];
    sys.rhs(t + half * h, &lin(y, h, &[(half, k1)]), &mut k2)?;
    sys.rhs(t + half * h, &lin(y, h, &[(half, &k2)]), &mut k3)?;
    sys.rhs(t + h, &lin(y, h, &[(T::one(), &k3)]), &mut k4)?;
    let sixth = T::one() / T::of(6.0);
    let third = T::one() / T::of(3.0);
    Ok(lin(
        y,
        h,
        &[(sixth, k1), (third, &k2), (third, &k3), (sixth, &k4)],
    ))
}

fn is_boundary(e: &Error) -> bool {
    matches!(
        e,
        Error::DomainExit { .. } | Error::DomainFault(_) | Error::SingularMetric { .. }
    )
}

fn exit_error<T: Scalar>(t: T, y: &[T]) -> Error {
    Error::DomainExit {
        t: t.as_f64(),
        last_point: crate::scalar::to_f64_vec(y),
        last_velocity: Vec::new(),
    }
}

/// Integrates `sys` from `t0` to `t1 > t0`.
///
/// Faults that mean the state left the chart (domain exit, domain faults in
/// the metric, loss of positive-definiteness, non-finite state) stop the
/// integration with [`Error::DomainExit`] at the last accepted time.
pub fn integrate<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t0: T,
    y0: Vec<T>,
    t1: T,
    settings: &OdeSettings<T>,
) -> std::result::Result<OdeSolution<T>, OdeFailure<T>> {
    let mut sol = OdeSolution {
        t: Vec::new(),
        y: Vec::new(),
        dy: Vec::new(),
    };
    if let Err(error) = settings.validate() {
        return Err(OdeFailure { error, partial: sol });
    }
    let n = y0.len();
    let mut d0 = vec![T::zero(); n];
    if let Err(e) = sys.accept(t0, &y0).and_then(|_| sys.rhs(t0, &y0, &mut d0)) {
        let error = if is_boundary(&e) { exit_error(t0, &y0) } else { e };
        return Err(OdeFailure { error, partial: sol });
    }
    sol.t.push(t0);
    sol.y.push(y0);
    sol.dy.push(d0);
    if t1 <= t0 {
        return Ok(sol);
    }
    let result = match settings.method {
        Method::Rk4Fixed => run_rk4(sys, &mut sol, t1, settings),
        Method::Rkf45Adaptive => run_rkf45(sys, &mut sol, t1, settings),
    };
    match result {
        Ok(()) => Ok(sol),
        Err(e) => {
            let error = if is_boundary(&e) {
                exit_error(sol.t_end(), sol.y.last().unwrap())
            } else {
                e
            };
            Err(OdeFailure { error, partial: sol })
        }
    }
}

fn push_step<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    sol: &mut OdeSolution<T>,
    t: T,
    y: Vec<T>,
) -> Result<()> {
    if !all_finite(&y) {
        return Err(exit_error(t, &y));
    }
    sys.accept(t, &y)?;
    let mut d = vec![T::zero(); y.len()];
    sys.rhs(t, &y, &mut d)?;
    if !all_finite(&d) {
        return Err(exit_error(t, &y));
    }
    sol.t.push(t);
    sol.y.push(y);
    sol.dy.push(d);
    Ok(())
}

fn run_rk4<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    sol: &mut OdeSolution<T>,
    t1: T,
    settings: &OdeSettings<T>,
) -> Result<()> {
    let t0 = sol.t[0];
    let span = t1 - t0;
    let steps = (span / settings.step - T::of(1e-9)).ceil().max(T::one());
    let steps = steps.to_usize().unwrap_or(usize::MAX);
    if steps > settings.max_steps {
        return Err(Error::BadParam(format!(
            "{steps} steps exceed max_steps = {}",
            settings.max_steps
        )));
    }
    let h = span / T::of_usize(steps);
    for k in 0..steps {
        let t = sol.t_end();
        let y = sol.y.last().unwrap().clone();
        let d = sol.dy.last().unwrap().clone();
        let next = rk4_step(sys, t, &y, &d, h)?;
        let t_next = if k + 1 == steps {
            t1
        } else {
            t0 + h * T::of_usize(k + 1)
        };
        push_step(sys, sol, t_next, next)?;
    }
    Ok(())
}

fn run_rkf45<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    sol: &mut OdeSolution<T>,
    t1: T,
    settings: &OdeSettings<T>,
) -> Result<()> {
    let c = |x: f64| T::of(x);
    let mut h = settings.step.min(t1 - sol.t[0]);
    let mut steps = 0usize;
    while sol.t_end() < t1 {
        steps += 1;
        if steps > settings.max_steps {
            return Err(Error::StepFault {
                t: sol.t_end().as_f64(),
            });
        }
        let t = sol.t_end();
        if h <= T::of(1e-14) * t.abs().max(T::one()) {
            return Err(Error::StepFault { t: t.as_f64() });
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        let y = sol.y.last().unwrap().clone();
        let k1 = sol.dy.last().unwrap().clone();
        let n = y.len();
        let mut k2 = vec![T::zero(); n];
        let mut k3 = vec![T::zero(); n];
        let mut k4 = vec![T::zero(); n];
        let mut k5 = vec![T::zero(); n];
        let mut k6 = vec![T::zero(); n];
        let stage = (|| -> Result<()> {
            sys.rhs(t + c(0.25) * h, &lin(&y, h, &[(c(0.25), &k1)]), &mut k2)?;
            sys.rhs(
                t + c(3.0 / 8.0) * h,
                &lin(&y, h, &[(c(3.0 / 32.0), &k1), (c(9.0 / 32.0), &k2)]),
                &mut k3,
            )?;
            sys.rhs(
                t + c(12.0 / 13.0) * h,
                &lin(
                    &y,
                    h,
                    &[
                        (c(1932.0 / 2197.0), &k1),
                        (c(-7200.0 / 2197.0), &k2),
                        (c(7296.0 / 2197.0), &k3),
                    ],
                ),
                &mut k4,
            )?;
            sys.rhs(
                t + h,
                &lin(
                    &y,
                    h,
                    &[
                        (c(439.0 / 216.0), &k1),
                        (c(-8.0), &k2),
                        (c(3680.0 / 513.0), &k3),
                        (c(-845.0 / 4104.0), &k4),
                    ],
                ),
                &mut k5,
            )?;
            sys.rhs(
                t + c(0.5) * h,
                &lin(
                    &y,
                    h,
                    &[
                        (c(-8.0 / 27.0), &k1),
                        (c(2.0), &k2),
                        (c(-3544.0 / 2565.0), &k3),
                        (c(1859.0 / 4104.0), &k4),
                        (c(-11.0 / 40.0), &k5),
                    ],
                ),
                &mut k6,
            )?;
            Ok(())
        })();
        if let Err(e) = stage {
            if is_boundary(&e) {
                // shrink toward the boundary before giving up
                h = h * c(0.25);
                if h <= T::of(1e-12) * t.abs().max(T::one()) {
                    return Err(e);
                }
                continue;
            }
            return Err(e);
        }
        let y5 = lin(
            &y,
            h,
            &[
                (c(16.0 / 135.0), &k1),
                (c(6656.0 / 12825.0), &k3),
                (c(28561.0 / 56430.0), &k4),
                (c(-9.0 / 50.0), &k5),
                (c(2.0 / 55.0), &k6),
            ],
        );
        let y4 = lin(
            &y,
            h,
            &[
                (c(25.0 / 216.0), &k1),
                (c(1408.0 / 2565.0), &k3),
                (c(2197.0 / 4104.0), &k4),
                (c(-0.2), &k5),
            ],
        );
        let mut err = T::zero();
        for i in 0..n {
            let sc = settings.atol + settings.rtol * y[i].abs().max(y5[i].abs());
            err = err.max(((y5[i] - y4[i]) / sc).abs());
        }
        if !err.is_finite() {
            h = h * c(0.25);
            continue;
        }
        if err <= T::one() {
            let t_next = if last { t1 } else { t + h };
            push_step(sys, sol, t_next, y5)?;
        }
        let factor = if err == T::zero() {
            c(5.0)
        } else {
            (c(0.9) * err.powf(c(-0.2))).max(c(0.2)).min(c(5.0))
        };
        h = h * factor;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;
    impl OdeSystem<f64> for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
            dy[0] = y[1];
            dy[1] = -y[0];
            Ok(())
        }
    }

    #[test]
    fn rk4_oscillator() {
        let sol = integrate(&Oscillator, 0.0, vec![0.0, 1.0], 3.0, &OdeSettings::with_step(1e-2)).unwrap();
        let end = sol.y.last().unwrap();
        assert!((end[0] - 3f64.sin()).abs() < 1e-9);
        // dense output
        let mid = sol.interp(1.2345);
        assert!((mid[0] - 1.2345f64.sin()).abs() < 1e-9);
        let dmid = sol.interp_derivative(1.2345);
        assert!((dmid[0] - 1.2345f64.cos()).abs() < 1e-7);
    }

    #[test]
    fn rkf45_oscillator() {
        let settings = OdeSettings {
            method: Method::Rkf45Adaptive,
            step: 0.1,
            ..Default::default()
        };
        let sol = integrate(&Oscillator, 0.0, vec![0.0, 1.0], 10.0, &settings).unwrap();
        assert!((sol.t_end() - 10.0).abs() < 1e-15);
        assert!((sol.y.last().unwrap()[0] - 10f64.sin()).abs() < 1e-7);
        assert!(sol.len() < 2000);
    }

    #[test]
    fn bad_settings_are_rejected() {
        let s = OdeSettings::<f64>::with_step(0.0);
        let err = integrate(&Oscillator, 0.0, vec![0.0, 1.0], 1.0, &s).unwrap_err();
        assert_eq!(err.error.kind(), "BadParam");
    }
}
