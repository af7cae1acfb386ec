//! Dense row-major matrices and the Cholesky machinery behind the exact GP.
//!
//! The factorization, triangular inverse and `L^-T L^-1` product are blocked
//! so that nearly all flops go through [`Real::gemm`].

use crate::error::{Error, Result};
use crate::scalar::Real;

const BLOCK: usize = 128;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        // SAFETY: all three views are the full, distinct buffers with their
        // natural row-major strides.
        unsafe {
            T::gemm(
                self.rows,
                self.cols,
                other.cols,
                T::one(),
                self.data.as_ptr(),
                self.cols as isize,
                1,
                other.data.as_ptr(),
                other.cols as isize,
                1,
                T::zero(),
                out.data.as_mut_ptr(),
                out.cols as isize,
                1,
            );
        }
        Ok(out)
    }

    /// Relative Frobenius distance `||self - other|| / ||other||`.
    pub fn relative_frobenius_distance(&self, other: &Self) -> T {
        let mut num = T::zero();
        let mut den = T::zero();
        for (a, b) in self.data.iter().zip(&other.data) {
            num = num + (*a - *b) * (*a - *b);
            den = den + *b * *b;
        }
        if den == T::zero() {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }

    fn add_to_diagonal(&mut self, v: T) {
        for i in 0..self.rows.min(self.cols) {
            let idx = i * self.cols + i;
            self.data[idx] = self.data[idx] + v;
        }
    }

    fn mean_diagonal(&self) -> T {
        let n = self.rows.min(self.cols);
        if n == 0 {
            return T::zero();
        }
        let s: T = (0..n).map(|i| self.get(i, i)).sum();
        s / T::from_usize(n).unwrap()
    }
}

/// Lower-triangular Cholesky factor `L` with `L L^T = A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    factor: Matrix<T>,
    /// Jitter that had to be added to the diagonal before factorization succeeded.
    jitter: T,
}

impl<T: Real> Cholesky<T> {
    /// Factorizes a symmetric positive-definite matrix (only the lower
    /// triangle is read).
    pub fn new(a: Matrix<T>) -> Result<Self> {
        let mut factor = a;
        cholesky_in_place(&mut factor)?;
        Ok(Self {
            factor,
            jitter: T::zero(),
        })
    }

    /// Factorizes `a`, escalating a diagonal jitter from `min_jitter` to
    /// `max_jitter` (decades, relative to the mean diagonal) on failure.
    pub fn with_jitter(a: Matrix<T>, min_jitter: f64, max_jitter: f64) -> Result<Self> {
        let mut work = a.clone();
        if cholesky_in_place(&mut work).is_ok() {
            return Ok(Self {
                factor: work,
                jitter: T::zero(),
            });
        }
        let scale = a.mean_diagonal().abs().max(T::min_positive_value());
        let mut rel = min_jitter;
        while rel <= max_jitter * (1.0 + 1e-12) {
            let jitter = scale * T::lit(rel);
            let mut work = a.clone();
            work.add_to_diagonal(jitter);
            if cholesky_in_place(&mut work).is_ok() {
                return Ok(Self {
                    factor: work,
                    jitter,
                });
            }
            rel *= 10.0;
        }
        Err(Error::NotPositiveDefinite { max_jitter })
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.factor
    }

    pub fn jitter(&self) -> T {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.factor.rows
    }

    /// `log |A|`.
    pub fn log_det(&self) -> T {
        let two = T::lit(2.0);
        (0..self.dim()).map(|i| self.factor.get(i, i).ln()).sum::<T>() * two
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let row = self.factor.row(i);
            let mut s = y[i];
            for j in 0..i {
                s = s - row[j] * y[j];
            }
            y[i] = s / row[i];
        }
        y
    }

    /// Solves `L^T x = y`.
    pub fn solve_upper_transposed(&self, y: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(y.len(), n);
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            x[i] = x[i] / self.factor.get(i, i);
            let xi = x[i];
            let row = self.factor.row(i);
            for j in 0..i {
                x[j] = x[j] - row[j] * xi;
            }
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_upper_transposed(&self.solve_lower(b))
    }

    /// Full symmetric `A^-1 = L^-T L^-1`.
    pub fn inverse(&self) -> Matrix<T> {
        let linv = lower_triangular_inverse(&self.factor);
        gram_of_lower(&linv)
    }
}

/// Blocked right-looking Cholesky. On success the strict upper triangle is zeroed.
fn cholesky_in_place<T: Real>(a: &mut Matrix<T>) -> Result<()> {
    let n = a.rows;
    if n != a.cols {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols,
        });
    }
    let ld = n;
    let mut kb = 0;
    while kb < n {
        let b = BLOCK.min(n - kb);
        // Diagonal block.
        for j in kb..kb + b {
            let mut d = a.data[j * ld + j];
            for t in kb..j {
                let v = a.data[j * ld + t];
                d = d - v * v;
            }
            if !(d > T::zero()) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { max_jitter: 0.0 });
            }
            let d = d.sqrt();
            a.data[j * ld + j] = d;
            for i in j + 1..kb + b {
                let mut s = a.data[i * ld + j];
                for t in kb..j {
                    s = s - a.data[i * ld + t] * a.data[j * ld + t];
                }
                a.data[i * ld + j] = s / d;
            }
        }
        // Panel below the diagonal block: row-wise L21 = A21 L11^-T.
        for i in kb + b..n {
            for j in kb..kb + b {
                let mut s = a.data[i * ld + j];
                for t in kb..j {
                    s = s - a.data[i * ld + t] * a.data[j * ld + t];
                }
                a.data[i * ld + j] = s / a.data[j * ld + j];
            }
        }
        // Trailing update A22 -= L21 L21^T, lower trapezoid strips only.
        let mut jb = kb + b;
        while jb < n {
            let w = (2 * BLOCK).min(n - jb);
            let base = a.data.as_mut_ptr();
            // SAFETY: A reads columns kb..kb+b of rows jb..n, B reads the same
            // columns of rows jb..jb+w, and C writes columns jb..jb+w of rows
            // jb..n. Since jb >= kb + b the written region never overlaps the
            // read regions, and every index stays inside the n x n buffer.
            unsafe {
                T::gemm(
                    n - jb,
                    b,
                    w,
                    -T::one(),
                    base.add(jb * ld + kb),
                    ld as isize,
                    1,
                    base.add(jb * ld + kb),
                    1,
                    ld as isize,
                    T::one(),
                    base.add(jb * ld + jb),
                    ld as isize,
                    1,
                );
            }
            jb += w;
        }
        kb += b;
    }
    for i in 0..n {
        for j in i + 1..n {
            a.data[i * ld + j] = T::zero();
        }
    }
    Ok(())
}

/// Inverse of a non-singular lower-triangular matrix, blocked by rows.
fn lower_triangular_inverse<T: Real>(l: &Matrix<T>) -> Matrix<T> {
    let n = l.rows;
    let mut x = Matrix::<T>::zeros(n, n);
    let blocks: Vec<(usize, usize)> = (0..n)
        .step_by(BLOCK)
        .map(|s| (s, BLOCK.min(n - s)))
        .collect();
    // Diagonal block inverses, unblocked.
    for &(s, b) in &blocks {
        for j in s..s + b {
            x.data[j * n + j] = T::one() / l.data[j * n + j];
            for i in j + 1..s + b {
                let mut acc = T::zero();
                for t in j..i {
                    acc = acc + l.data[i * n + t] * x.data[t * n + j];
                }
                x.data[i * n + j] = -acc / l.data[i * n + i];
            }
        }
    }
    // Off-diagonal blocks: X_ij = -X_ii * sum_{k=j}^{i-1} L_ik X_kj.
    let mut tmp = vec![T::zero(); BLOCK * n];
    for (bi, &(is, ib)) in blocks.iter().enumerate() {
        if bi == 0 {
            continue;
        }
        // T = L[is..is+ib, 0..is] * X[0..is, 0..is], all block columns at once.
        let width = is;
        // SAFETY: L and X are distinct buffers; tmp is a separate scratch
        // buffer of at least ib * width elements.
        unsafe {
            T::gemm(
                ib,
                is,
                width,
                T::one(),
                l.data.as_ptr().add(is * n),
                n as isize,
                1,
                x.data.as_ptr(),
                n as isize,
                1,
                T::zero(),
                tmp.as_mut_ptr(),
                width as isize,
                1,
            );
        }
        // X[is.., 0..is] = -X_ii * T
        let xii: Vec<T> = (0..ib * ib)
            .map(|q| x.data[(is + q / ib) * n + is + q % ib])
            .collect();
        let mut out = vec![T::zero(); ib * width];
        // SAFETY: three distinct local buffers with row-major strides.
        unsafe {
            T::gemm(
                ib,
                ib,
                width,
                -T::one(),
                xii.as_ptr(),
                ib as isize,
                1,
                tmp.as_ptr(),
                width as isize,
                1,
                T::zero(),
                out.as_mut_ptr(),
                width as isize,
                1,
            );
        }
        for r in 0..ib {
            x.data[(is + r) * n..(is + r) * n + width]
                .copy_from_slice(&out[r * width..(r + 1) * width]);
        }
    }
    x
}

/// `X^T X` for lower-triangular `X`, symmetric output.
fn gram_of_lower<T: Real>(x: &Matrix<T>) -> Matrix<T> {
    let n = x.rows;
    let mut out = Matrix::<T>::zeros(n, n);
    let mut is = 0;
    while is < n {
        let ib = BLOCK.min(n - is);
        // Rows is..is+ib of X^T X, columns 0..is+ib; rows of X below `is`
        // are zero in columns >= is, so the sum starts at row `is`.
        let k = n - is;
        let width = is + ib;
        // SAFETY: reads from `x`, writes to the distinct `out` buffer.
        unsafe {
            T::gemm(
                ib,
                k,
                width,
                T::one(),
                x.data.as_ptr().add(is * n + is),
                1,
                n as isize,
                x.data.as_ptr().add(is * n),
                n as isize,
                1,
                T::zero(),
                out.data.as_mut_ptr().add(is * n),
                n as isize,
                1,
            );
        }
        is += ib;
    }
    for i in 0..n {
        for j in i + 1..n {
            out.data[i * n + j] = out.data[j * n + i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let mut a = b.matmul(&b.transpose()).unwrap();
        a.add_to_diagonal(n as f64 * 0.1);
        a
    }

    #[test]
    fn factor_reconstructs_across_block_boundaries() {
        for &n in &[1, 5, 127, 128, 129, 300] {
            let a = random_spd(n, n as u64);
            let chol = Cholesky::new(a.clone()).unwrap();
            let l = chol.factor();
            let rec = l.matmul(&l.transpose()).unwrap();
            assert!(rec.relative_frobenius_distance(&a) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        for &n in &[3, 130, 260] {
            let a = random_spd(n, 7 + n as u64);
            let inv = Cholesky::new(a.clone()).unwrap().inverse();
            let id = a.matmul(&inv).unwrap();
            let eye = Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 });
            assert!(id.relative_frobenius_distance(&eye) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn solve_matches_inverse() {
        let a = random_spd(40, 3);
        let chol = Cholesky::new(a.clone()).unwrap();
        let b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let x = chol.solve(&b);
        let inv = chol.inverse();
        for i in 0..40 {
            let y: f64 = (0..40).map(|j| inv.get(i, j) * b[j]).sum();
            assert!((x[i] - y).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_needs_jitter() {
        let a = Matrix::from_rows(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(Cholesky::new(a.clone()).is_err());
        let chol = Cholesky::with_jitter(a, 1e-8, 1e-4).unwrap();
        assert!(chol.jitter() > 0.0);
    }

    #[test]
    fn indefinite_matrix_fails_after_escalation() {
        let a = Matrix::from_rows(2, 2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(
            Cholesky::with_jitter(a, 1e-8, 1e-4),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::<f32>::from_rows(2, 2, vec![4.0, 2.0, 2.0, 3.0]).unwrap();
        let chol = Cholesky::new(a).unwrap();
        assert!((chol.factor().get(0, 0) - 2.0).abs() < 1e-6);
        assert!((chol.factor().get(1, 0) - 1.0).abs() < 1e-6);
        assert!((chol.log_det() - 8f32.ln()).abs() < 1e-5);
    }
}
