//! Forward-mode jets: plain values, first-order duals and second-order duals.

use serde::Serialize;

use crate::linalg::Matrix;
use crate::Scalar;

/// Number type the expression evaluator can run on.
pub trait Jet<T: Scalar>: Clone {
    fn constant(c: T, n: usize) -> Self;
    fn variable(i: usize, x: T, n: usize) -> Self;
    fn value(&self) -> T;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Composition with a scalar function whose value, first and second
    /// derivative at `self.value()` are `f0`, `f1`, `f2`.
    fn chain(&self, f0: T, f1: T, f2: T) -> Self;
}

impl<T: Scalar> Jet<T> for T {
    fn constant(c: T, _n: usize) -> Self {
        c
    }
    fn variable(_i: usize, x: T, _n: usize) -> Self {
        x
    }
    fn value(&self) -> T {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        *self + *o
    }
    fn sub(&self, o: &Self) -> Self {
        *self - *o
    }
    fn mul(&self, o: &Self) -> Self {
        *self * *o
    }
    fn neg(&self) -> Self {
        -*self
    }
    fn chain(&self, f0: T, _f1: T, _f2: T) -> Self {
        f0
    }
}

/// Value and gradient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualValue1<T> {
    pub value: T,
    pub grad: Vec<T>,
}

impl<T: Scalar> Jet<T> for DualValue1<T> {
    fn constant(c: T, n: usize) -> Self {
        DualValue1 {
            value: c,
            grad: vec![T::zero(); n],
        }
    }
    fn variable(i: usize, x: T, n: usize) -> Self {
        let mut grad = vec![T::zero(); n];
        grad[i] = T::one();
        DualValue1 { value: x, grad }
    }
    fn value(&self) -> T {
        self.value
    }
    fn add(&self, o: &Self) -> Self {
        DualValue1 {
            value: self.value + o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(&a, &b)| a + b).collect(),
        }
    }
    fn sub(&self, o: &Self) -> Self {
        DualValue1 {
            value: self.value - o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(&a, &b)| a - b).collect(),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        DualValue1 {
            value: self.value * o.value,
            grad: self
                .grad
                .iter()
                .zip(&o.grad)
                .map(|(&a, &b)| self.value * b + o.value * a)
                .collect(),
        }
    }
    fn neg(&self) -> Self {
        DualValue1 {
            value: -self.value,
            grad: self.grad.iter().map(|&a| -a).collect(),
        }
    }
    fn chain(&self, f0: T, f1: T, _f2: T) -> Self {
        DualValue1 {
            value: f0,
            grad: self.grad.iter().map(|&a| f1 * a).collect(),
        }
    }
}

/// Value, gradient and Hessian (upper triangle, row-major).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualValue2<T> {
    pub value: T,
    pub grad: Vec<T>,
    hess: Vec<T>,
}

#[inline]
fn tri(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl<T: Scalar> DualValue2<T> {
    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hess(&self, i: usize, j: usize) -> T {
        self.hess[tri(self.dim(), i, j)]
    }

    pub fn hessian(&self) -> Matrix<T> {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| self.hess(i, j))
    }
}

impl<T: Scalar> Jet<T> for DualValue2<T> {
    fn constant(c: T, n: usize) -> Self {
        DualValue2 {
            value: c,
            grad: vec![T::zero(); n],
            hess: vec![T::zero(); n * (n + 1) / 2],
        }
    }
    fn variable(i: usize, x: T, n: usize) -> Self {
        let mut d = Self::constant(x, n);
        d.grad[i] = T::one();
        d
    }
    fn value(&self) -> T {
        self.value
    }
    fn add(&self, o: &Self) -> Self {
        DualValue2 {
            value: self.value + o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(&a, &b)| a + b).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(&a, &b)| a + b).collect(),
        }
    }
    fn sub(&self, o: &Self) -> Self {
        DualValue2 {
            value: self.value - o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(&a, &b)| a - b).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(&a, &b)| a - b).collect(),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        let n = self.dim();
        let (a, b) = (self.value, o.value);
        let grad = (0..n).map(|i| a * o.grad[i] + b * self.grad[i]).collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..n {
            for j in i..n {
                let k = tri(n, i, j);
                hess.push(
                    a * o.hess[k]
                        + b * self.hess[k]
                        + self.grad[i] * o.grad[j]
                        + self.grad[j] * o.grad[i],
                );
            }
        }
        DualValue2 {
            value: a * b,
            grad,
            hess,
        }
    }
    fn neg(&self) -> Self {
        DualValue2 {
            value: -self.value,
            grad: self.grad.iter().map(|&a| -a).collect(),
            hess: self.hess.iter().map(|&a| -a).collect(),
        }
    }
    fn chain(&self, f0: T, f1: T, f2: T) -> Self {
        let n = self.dim();
        let grad = self.grad.iter().map(|&g| f1 * g).collect();
        let mut hess = Vec::with_capacity(self.hess.len());
        for i in 0..n {
            for j in i..n {
                hess.push(f1 * self.hess[tri(n, i, j)] + f2 * self.grad[i] * self.grad[j]);
            }
        }
        DualValue2 {
            value: f0,
            grad,
            hess,
        }
    }
}
