use std::ops::{Index, IndexMut};

use serde::Serialize;

use crate::linalg::Matrix;
use crate::Scalar;

/// Dense `n×n×n` array, `[i, j, k]` indexing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tensor3<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Tensor3<T> {
    pub fn zeros(n: usize) -> Self {
        Tensor3 {
            n,
            data: vec![T::zero(); n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T> Index<[usize; 3]> for Tensor3<T> {
    type Output = T;
    fn index(&self, [i, j, k]: [usize; 3]) -> &T {
        &self.data[(i * self.n + j) * self.n + k]
    }
}

impl<T> IndexMut<[usize; 3]> for Tensor3<T> {
    fn index_mut(&mut self, [i, j, k]: [usize; 3]) -> &mut T {
        &mut self.data[(i * self.n + j) * self.n + k]
    }
}

/// Dense `n⁴` array, `[a, b, c, d]` indexing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tensor4<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Tensor4<T> {
    pub fn zeros(n: usize) -> Self {
        Tensor4 {
            n,
            data: vec![T::zero(); n * n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Self {
        let mut t = Tensor4::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        t[[a, b, c, d]] = f(a, b, c, d);
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn add(&self, o: &Tensor4<T>) -> Self {
        Tensor4 {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Tensor4<T>) -> Self {
        Tensor4 {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Tensor4 {
            n: self.n,
            data: self.data.iter().map(|&a| a * s).collect(),
        }
    }

    /// Components against the basis given by the columns of `basis`:
    /// `T'(a,b,c,d) = Σ T(i,j,k,l) B_ia B_jb B_kc B_ld`.
    pub fn in_basis(&self, basis: &Matrix<T>) -> Self {
        let n = self.n;
        let mut cur = self.clone();
        // contract one slot at a time
        for slot in 0..4 {
            let mut next = Tensor4::zeros(n);
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            let mut idx = [a, b, c, d];
                            let target = idx[slot];
                            let mut s = T::zero();
                            for i in 0..n {
                                idx[slot] = i;
                                s += cur[idx] * basis[(i, target)];
                            }
                            next[[a, b, c, d]] = s;
                        }
                    }
                }
            }
            cur = next;
        }
        cur
    }
}

impl<T> Index<[usize; 4]> for Tensor4<T> {
    type Output = T;
    fn index(&self, [a, b, c, d]: [usize; 4]) -> &T {
        &self.data[((a * self.n + b) * self.n + c) * self.n + d]
    }
}

impl<T> IndexMut<[usize; 4]> for Tensor4<T> {
    fn index_mut(&mut self, [a, b, c, d]: [usize; 4]) -> &mut T {
        &mut self.data[((a * self.n + b) * self.n + c) * self.n + d]
    }
}
