//! Small dense kernels shared by the statistics and filter modules.
//!
//! Matrices are square `ndarray` arrays; Cholesky factors are kept as packed
//! row-major lower triangles so solves stay cache friendly for a few hundred
//! bands.

use ndarray::Array2;

use crate::Scalar;

/// Dot product with four independent accumulators.
///
/// The accumulation order depends only on the slice length, so results are
/// reproducible across runs and thread counts.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail += *x * *y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `(a - b) . v`, accumulated like [`dot`].
#[inline]
pub fn dot_diff<T: Scalar>(a: &[T], b: &[T], v: &[T]) -> T {
    debug_assert!(a.len() == b.len() && b.len() == v.len());
    let mut acc = [T::zero(); 4];
    let n4 = a.len() / 4 * 4;
    let mut k = 0;
    while k < n4 {
        acc[0] += (a[k] - b[k]) * v[k];
        acc[1] += (a[k + 1] - b[k + 1]) * v[k + 1];
        acc[2] += (a[k + 2] - b[k + 2]) * v[k + 2];
        acc[3] += (a[k + 3] - b[k + 3]) * v[k + 3];
        k += 4;
    }
    let mut tail = T::zero();
    for k in n4..a.len() {
        tail += (a[k] - b[k]) * v[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += a * x`
#[inline]
pub fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * *xi;
    }
}

/// Accumulate the upper triangle (row-major, `j >= i`) of `x x^T` into `acc`.
#[inline]
pub fn syr_upper<T: Scalar>(x: &[T], acc: &mut [T]) {
    let n = x.len();
    let mut offset = 0;
    for i in 0..n {
        let xi = x[i];
        let row = &mut acc[offset..offset + (n - i)];
        for (a, xj) in row.iter_mut().zip(&x[i..]) {
            *a += xi * *xj;
        }
        offset += n - i;
    }
}

/// Length of a packed upper triangle for an `n x n` matrix.
#[inline]
pub fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Expand a packed upper triangle into a full symmetric matrix scaled by `scale`.
pub fn unpack_symmetric<T: Scalar>(n: usize, packed: &[T], scale: T) -> Array2<T> {
    let mut m = Array2::zeros((n, n));
    let mut offset = 0;
    for i in 0..n {
        for j in i..n {
            let v = packed[offset + j - i] * scale;
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
        offset += n - i;
    }
    m
}

pub fn trace<T: Scalar>(m: &Array2<T>) -> T {
    m.diag().iter().copied().sum()
}

/// Lower-triangular Cholesky factor `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    // row-major lower triangle, row i holds entries 0..=i
    lower: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Relative pivot floor: pivots at or below `floor * trace / n` mark the
    /// matrix as numerically singular.
    pub fn default_floor() -> T {
        T::epsilon().sqrt() * T::c(1e-4)
    }

    /// Factor `a + shift * I`. Returns `None` if any pivot falls below the
    /// relative floor.
    pub fn factor_shifted(a: &Array2<T>, shift: T) -> Option<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Cholesky of a non-square matrix");
        if n == 0 {
            return Some(Self { n, lower: Vec::new() });
        }
        let mean_diag = (trace(a) + shift * T::from_usize_lossy(n)) / T::from_usize_lossy(n);
        let floor = Self::default_floor() * mean_diag.abs();
        let mut lower = vec![T::zero(); packed_len(n)];
        let row_start = |i: usize| i * (i + 1) / 2;
        for i in 0..n {
            let ri = row_start(i);
            for j in 0..=i {
                let rj = row_start(j);
                let mut s = a[[i, j]];
                if i == j {
                    s += shift;
                }
                s -= dot(&lower[ri..ri + j], &lower[rj..rj + j]);
                if i == j {
                    if !(s > floor) || !s.is_finite() {
                        return None;
                    }
                    lower[ri + i] = s.sqrt();
                } else {
                    lower[ri + j] = s / lower[rj + j];
                }
            }
        }
        Some(Self { n, lower })
    }

    pub fn factor(a: &Array2<T>) -> Option<Self> {
        Self::factor_shifted(a, T::zero())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [T]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        // L y = b
        for i in 0..n {
            let ri = i * (i + 1) / 2;
            let s = x[i] - dot(&self.lower[ri..ri + i], &x[..i]);
            x[i] = s / self.lower[ri + i];
        }
        // L^T x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lower[k * (k + 1) / 2 + i] * x[k];
            }
            x[i] = s / self.lower[i * (i + 1) / 2 + i];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Natural log of the determinant.
    pub fn log_det(&self) -> T {
        let two = T::c(2.0);
        (0..self.n).map(|i| self.lower[i * (i + 1) / 2 + i].ln()).sum::<T>() * two
    }

    /// `trace(A^-1 M)` for a square `M`, via one solve per column.
    pub fn trace_solve(&self, m: &Array2<T>) -> T {
        let n = self.n;
        let mut total = T::zero();
        let mut col = vec![T::zero(); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = m[[i, j]];
            }
            self.solve_in_place(&mut col);
            total += col[j];
        }
        total
    }
}
