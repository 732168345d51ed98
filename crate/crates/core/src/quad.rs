//! One-dimensional quadrature.

use crate::{Error, Result, Scalar};

/// Composite Simpson rule with interval doubling until successive estimates
/// agree to `rtol`; the returned value carries the Richardson correction.
pub fn simpson_refined<T: Scalar>(
    mut f: impl FnMut(T) -> Result<T>,
    a: T,
    b: T,
    rtol: T,
) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let atol = T::of(1e-15);
    let mut n = 2usize;
    let h0 = b - a;
    // cached samples at the current resolution: f(a + k h), k = 0..=n
    let mut samples = vec![f(a)?, f(a + h0 / T::of(2.0))?, f(b)?];
    let simpson = |s: &[T], h: T| -> T {
        let mut acc = s[0] + s[s.len() - 1];
        for (k, &v) in s.iter().enumerate().take(s.len() - 1).skip(1) {
            acc += if k % 2 == 1 { T::of(4.0) * v } else { T::of(2.0) * v };
        }
        acc * h / T::of(3.0)
    };
    let mut prev = simpson(&samples, h0 / T::of_usize(n));
    for _level in 0..22 {
        let n2 = 2 * n;
        let h = h0 / T::of_usize(n2);
        let mut next = Vec::with_capacity(n2 + 1);
        for (k, &v) in samples.iter().enumerate() {
            next.push(v);
            if k + 1 < samples.len() {
                next.push(f(a + h * T::of_usize(2 * k + 1))?);
            }
        }
        samples = next;
        n = n2;
        let cur = simpson(&samples, h);
        let diff = cur - prev;
        if diff.abs() <= rtol * cur.abs() + atol && n >= 8 {
            return Ok(cur + diff / T::of(15.0));
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        iterations: 22,
        best_residual: f64::NAN,
    })
}

/// Fixed composite Simpson rule on `intervals` (rounded up to even) panels.
pub fn simpson_fixed<T: Scalar>(
    mut f: impl FnMut(T) -> Result<T>,
    a: T,
    b: T,
    intervals: usize,
) -> Result<T> {
    let n = intervals.max(2) + intervals % 2;
    let h = (b - a) / T::of_usize(n);
    let mut acc = f(a)? + f(b)?;
    for k in 1..n {
        let w = if k % 2 == 1 { T::of(4.0) } else { T::of(2.0) };
        acc += w * f(a + h * T::of_usize(k))?;
    }
    Ok(acc * h / T::of(3.0))
}

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre polynomial.
pub fn gauss_legendre<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = T::of(-x);
        nodes[n - 1 - i] = T::of(x);
        weights[i] = T::of(w);
        weights[n - 1 - i] = T::of(w);
    }
    (nodes, weights)
}

/// Gauss–Legendre rule with `n` nodes mapped to [a, b].
pub fn gauss_legendre_integrate<T: Scalar>(
    mut f: impl FnMut(T) -> Result<T>,
    a: T,
    b: T,
    n: usize,
) -> Result<T> {
    let (x, w) = gauss_legendre::<T>(n);
    let half = (b - a) / T::of(2.0);
    let mid = (a + b) / T::of(2.0);
    let mut acc = T::zero();
    for (xi, wi) in x.iter().zip(&w) {
        acc += *wi * f(mid + half * *xi)?;
    }
    Ok(acc * half)
}

/// Composite Gauss–Legendre: `cells` equal panels with `n` nodes each.
pub fn gauss_legendre_composite<T: Scalar>(
    mut f: impl FnMut(T) -> Result<T>,
    a: T,
    b: T,
    cells: usize,
    n: usize,
) -> Result<T> {
    let (x, w) = gauss_legendre::<T>(n);
    let cells = cells.max(1);
    let width = (b - a) / T::of_usize(cells);
    let half = width / T::of(2.0);
    let mut acc = T::zero();
    for c in 0..cells {
        let mid = a + width * (T::of_usize(c) + T::of(0.5));
        for (xi, wi) in x.iter().zip(&w) {
            acc += *wi * f(mid + half * *xi)?;
        }
    }
    Ok(acc * half)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_sine() {
        let v = simpson_refined(|x: f64| Ok(x.sin()), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre::<f64>(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((i - 2.0 / 9.0).abs() < 1e-14);
        let v = gauss_legendre_integrate(|x: f64| Ok(x.exp()), 0.0, 1.0, 12).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
    }
}
