use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::Matrix;
use crate::Scalar;

type NormFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// A norm on one tangent space, not necessarily coming from an inner product.
#[derive(Clone)]
pub struct FinslerNorm<T> {
    dim: usize,
    norm: NormFn<T>,
    homogeneity_checked: bool,
}

impl<T: Scalar> fmt::Debug for FinslerNorm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FinslerNorm")
            .field("dim", &self.dim)
            .field("homogeneity_checked", &self.homogeneity_checked)
            .finish()
    }
}

impl<T: Scalar> FinslerNorm<T> {
    /// Wraps `norm` and checks positive homogeneity and positivity on
    /// seeded samples; the outcome is kept in [`FinslerNorm::homogeneity_checked`].
    pub fn new(dim: usize, norm: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        let mut out = FinslerNorm {
            dim,
            norm: Arc::new(norm),
            homogeneity_checked: false,
        };
        out.homogeneity_checked = out.homogeneity_defect(200, 7) <= T::of(1e-9);
        out
    }

    /// `√(vᵀ g v)`.
    pub fn riemannian(g: Matrix<T>) -> Self {
        let n = g.rows();
        FinslerNorm::new(n, move |v| g.form(v, v).max(T::zero()).sqrt())
    }

    pub fn euclidean(dim: usize) -> Self {
        FinslerNorm::riemannian(Matrix::identity(dim))
    }

    /// `max |v_i|`.
    pub fn max_norm(dim: usize) -> Self {
        FinslerNorm::new(dim, |v: &[T]| v.iter().fold(T::zero(), |m, x| m.max(x.abs())))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn homogeneity_checked(&self) -> bool {
        self.homogeneity_checked
    }

    pub fn eval(&self, v: &[T]) -> T {
        (self.norm)(v)
    }

    /// Largest relative deviation from `L(αv) = |α| L(v)`; infinite if some
    /// sampled nonzero vector has `L(v) ≤ 0`.
    pub fn homogeneity_defect(&self, samples: usize, seed: u64) -> T {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = T::zero();
        for _ in 0..samples {
            let v = random_vector::<T>(&mut rng, self.dim);
            let alpha = T::of(rng.gen_range(-3.0..3.0));
            let l = self.eval(&v);
            if !(l > T::zero()) {
                return T::infinity();
            }
            let av: Vec<T> = v.iter().map(|&x| alpha * x).collect();
            let d = (self.eval(&av) - alpha.abs() * l).abs() / l.max(T::one());
            worst = worst.max(d);
        }
        worst
    }
}

fn random_vector<T: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    (0..n).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ParallelogramReport<T> {
    pub samples: usize,
    pub seed: u64,
    pub max_violation: T,
    pub witness: (Vec<T>, Vec<T>),
}

/// `|L²(v+w) + L²(v−w) − 2L²(v) − 2L²(w)|`.
pub fn parallelogram_violation<T: Scalar>(l: &FinslerNorm<T>, v: &[T], w: &[T]) -> T {
    let sum: Vec<T> = v.iter().zip(w).map(|(&a, &b)| a + b).collect();
    let diff: Vec<T> = v.iter().zip(w).map(|(&a, &b)| a - b).collect();
    let sq = |x: &[T]| {
        let n = l.eval(x);
        n * n
    };
    let two = T::of(2.0);
    (sq(&sum) + sq(&diff) - two * sq(v) - two * sq(w)).abs()
}

/// Evaluates the parallelogram law on seeded random pairs in `[-1, 1]^n`.
pub fn parallelogram_check<T: Scalar>(
    l: &FinslerNorm<T>,
    samples: usize,
    seed: u64,
) -> ParallelogramReport<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ParallelogramReport {
        samples,
        seed,
        max_violation: T::zero(),
        witness: (vec![T::zero(); l.dim], vec![T::zero(); l.dim]),
    };
    for _ in 0..samples {
        let v = random_vector(&mut rng, l.dim);
        let w = random_vector(&mut rng, l.dim);
        let d = parallelogram_violation(l, &v, &w);
        if d > report.max_violation || report.max_violation.is_nan() {
            report.max_violation = d;
            report.witness = (v, w);
        }
    }
    report
}

/// `(L²(v+w) − L²(v) − L²(w)) / 2`, the inner product when `L` comes from one.
pub fn polarize<T: Scalar>(l: &FinslerNorm<T>, v: &[T], w: &[T]) -> T {
    let sum: Vec<T> = v.iter().zip(w).map(|(&a, &b)| a + b).collect();
    let sq = |x: &[T]| {
        let n = l.eval(x);
        n * n
    };
    (sq(&sum) - sq(v) - sq(w)) / T::of(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_passes() {
        let l = FinslerNorm::<f64>::euclidean(3);
        assert!(l.homogeneity_checked());
        assert!(parallelogram_check(&l, 1000, 1).max_violation <= 1e-9);
    }

    #[test]
    fn max_norm_fails() {
        let l = FinslerNorm::<f64>::max_norm(2);
        assert!(l.homogeneity_checked());
        assert_eq!(parallelogram_violation(&l, &[1.0, 0.0], &[0.0, 1.0]), 2.0);
        let r = parallelogram_check(&l, 1000, 1);
        assert!(r.max_violation >= 1.0);
        let (v, w) = &r.witness;
        assert_eq!(parallelogram_violation(&l, v, w), r.max_violation);
    }

    #[test]
    fn polarization() {
        let l = FinslerNorm::<f64>::euclidean(2);
        assert!(polarize(&l, &[1.0, 0.0], &[0.0, 1.0]).abs() < 1e-15);
        assert!((polarize(&l, &[2.0, 0.0], &[2.0, 0.0]) - 4.0).abs() < 1e-14);
        let g = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let l = FinslerNorm::riemannian(g.clone());
        let (v, w) = ([0.3f64, -1.2], [0.7f64, 0.4]);
        assert!((polarize(&l, &v, &w) - g.form(&v, &w)).abs() < 1e-12);
    }

    #[test]
    fn non_homogeneous_flagged() {
        let l = FinslerNorm::<f64>::new(2, |v| v[0] * v[0] + v[1] * v[1]);
        assert!(!l.homogeneity_checked());
    }
}
