//! Dense matrix and vector helpers sized for low-dimensional parameter
//! spaces (tens of coordinates): symmetric eigendecomposition by cyclic
//! Jacobi rotations, Cholesky factorization, and the handful of vector ops
//! the estimators need. Everything is deterministic and allocation-light.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Row-major dense n×n matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from a flat row-major buffer of length n².
    pub fn from_flat(n: usize, data: impl Into<Vec<f64>>) -> Self {
        let data = data.into();
        assert_eq!(data.len(), n * n, "flat buffer must hold n*n entries");
        Self { n, data }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, &x| acc.max(math::abs(x)))
    }

    pub fn scale(&mut self, factor: f64) {
        for x in &mut self.data {
            *x *= factor;
        }
    }

    /// self ← self + factor·other.
    pub fn add_scaled(&mut self, factor: f64, other: &Matrix) {
        assert_eq!(self.n, other.n, "dimension mismatch");
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += factor * y;
        }
    }

    /// self ← (1−weight)·self + weight·other. The fast-timescale recursion.
    pub fn blend(&mut self, weight: f64, other: &Matrix) {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let keep = 1.0 - weight;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = keep * *a + weight * *b;
        }
    }

    /// (A + Aᵀ)/2. Entries already equal across the diagonal pass through
    /// bit-exactly: (a+a)/2 = a.
    pub fn symmetrized(&self) -> Matrix {
        let n = self.n;
        Matrix::from_fn(n, |i, j| (self.get(i, j) + self.get(j, i)) / 2.0)
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "dimension mismatch");
        self.data
            .chunks_exact(self.n)
            .map(|row| dot(row, v))
            .collect()
    }

    /// A + s·I.
    pub fn plus_scaled_identity(&self, s: f64) -> Matrix {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += s;
        }
        out
    }

    /// Lower-triangular Cholesky factor; `None` when the matrix (read as
    /// symmetric) is not positive definite.
    pub fn cholesky(&self) -> Option<CholeskyFactor> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    // NaN pivots fail here too, not just nonpositive ones.
                    if sum.is_nan() || sum <= 0.0 {
                        return None;
                    }
                    l[i * n + i] = math::sqrt(sum);
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        Some(CholeskyFactor {
            l: Matrix { n, data: l },
        })
    }

    /// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Reads the full matrix, which the caller must supply symmetric.
    /// Eigenvalues are returned in ascending order with matching columns of
    /// the (orthogonal) eigenvector matrix.
    pub fn sym_eigen(&self) -> SymEigen {
        let n = self.n;
        let mut a = self.data.clone();
        let mut v = Matrix::identity(n).data;
        let scale = self.frobenius_norm().max(1.0);

        for _sweep in 0..100 {
            let mut off_sq = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    let x = a[p * n + q];
                    off_sq += x * x;
                }
            }
            if math::sqrt(2.0 * off_sq) <= 1e-14 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if math::abs(apq) <= 1e-300 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = if math::abs(theta) > 1e10 {
                        1.0 / (2.0 * theta)
                    } else {
                        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                        sign / (math::abs(theta) + math::sqrt(theta * theta + 1.0))
                    };
                    let c = 1.0 / math::sqrt(t * t + 1.0);
                    let s = t * c;
                    // A ← Gᵀ A G and V ← V G with G the (p,q) rotation.
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            a[i * n + i]
                .partial_cmp(&a[j * n + j])
                .expect("finite eigenvalues")
        });
        let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
        let mut vectors = Matrix::zeros(n);
        for (new_col, &old_col) in order.iter().enumerate() {
            for row in 0..n {
                vectors.set(row, new_col, v[row * n + old_col]);
            }
        }
        SymEigen { values, vectors }
    }
}

pub struct CholeskyFactor {
    l: Matrix,
}

impl CholeskyFactor {
    /// Solve A x = b where A = L Lᵀ.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.n;
        assert_eq!(b.len(), n, "dimension mismatch");
        let l = &self.l.data;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut sum = b[i];
            for k in 0..i {
                sum -= l[i * n + k] * y[k];
            }
            y[i] = sum / l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in (i + 1)..n {
                sum -= l[k * n + i] * x[k];
            }
            x[i] = sum / l[i * n + i];
        }
        x
    }
}

pub struct SymEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthogonal matrix whose column j is the eigenvector for `values[j]`.
    pub vectors: Matrix,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(v: &[f64]) -> f64 {
    dot(v, v)
}

pub fn norm(v: &[f64]) -> f64 {
    math::sqrt(norm_sq(v))
}

pub fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}
