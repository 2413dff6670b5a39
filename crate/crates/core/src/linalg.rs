//! Small dense complex matrices and compensated summation.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::C64;

/// Neumaier-compensated accumulator for complex sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    re: (f64, f64),
    im: (f64, f64),
}

#[inline]
fn neumaier(acc: &mut (f64, f64), x: f64) {
    let (sum, comp) = *acc;
    let t = sum + x;
    let c = if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
    *acc = (t, comp + c);
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: C64) {
        neumaier(&mut self.re, z.re);
        neumaier(&mut self.im, z.im);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re.0 + self.re.1, self.im.0 + self.im.1)
    }
}

impl Extend<C64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = C64>>(&mut self, iter: I) {
        for z in iter {
            self.add(z);
        }
    }
}

/// Compensated sum of `Σ a_i b_i` together with `Σ |a_i||b_i|`, the natural
/// scale against which cancellation in the sum is judged.
pub fn dot_with_scale(a: impl IntoIterator<Item = (C64, C64)>) -> (C64, f64) {
    let mut acc = CompensatedSum::new();
    let mut scale = 0.0;
    for (x, y) in a {
        acc.add(x * y);
        scale += x.norm() * y.norm();
    }
    (acc.value(), scale)
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "dimension mismatch");
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: C64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "dimension mismatch");
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Determinant by LU with partial pivoting. The empty matrix has determinant 1.
    pub fn determinant(&self) -> C64 {
        self.pivoted_determinant().0
    }

    /// Determinant together with the smallest pivot measured against the
    /// ∞-norm of the original row it was taken from (1 for the empty matrix,
    /// 0 when the elimination hits an exact zero column).
    pub fn pivoted_determinant(&self) -> (C64, f64) {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut origin: Vec<usize> = (0..n).collect();
        let row_scale: Vec<f64> = (0..n).map(|i| self.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max)).collect();
        let mut min_pivot = 1.0f64;
        let mut det = C64::new(1.0, 0.0);
        for col in 0..n {
            let pivot =
                (col..n).max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm())).unwrap_or(col);
            if a[pivot * n + col] == C64::new(0.0, 0.0) {
                return (C64::new(0.0, 0.0), 0.0);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                origin.swap(col, pivot);
                det = -det;
            }
            let d = a[col * n + col];
            let scale = row_scale[origin[col]];
            if scale > 0.0 {
                min_pivot = min_pivot.min(d.norm() / scale);
            }
            det *= d;
            for i in col + 1..n {
                let factor = a[i * n + col] / d;
                if factor == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in col + 1..n {
                    let v = a[col * n + j];
                    a[i * n + j] -= factor * v;
                }
            }
        }
        (det, min_pivot)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}
