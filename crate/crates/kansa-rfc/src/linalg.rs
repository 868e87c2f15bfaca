//! Dense direct linear algebra: row-major matrices, LU with partial
//! pivoting, a Hager-style 1-norm condition estimate and a smallest
//! singular value probe via inverse iteration on `AᵀA`.

use std::io::{self, Write};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("vector length {got} does not match matrix dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("factorization is exactly singular (min |pivot| = {min_abs_pivot})")]
    Singular { min_abs_pivot: f64 },
    #[error("inverse iteration did not converge; last estimate {last_estimate}")]
    NonConvergence { last_estimate: f64 },
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
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

    pub fn from_rows(rows: &[&[T]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_fn(rows.len(), cols, |i, j| rows[i][j])
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn transpose_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> T {
        let mut sums = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            for (s, &a) in sums.iter_mut().zip(self.row(i)) {
                *s += a.abs();
            }
        }
        sums.into_iter().fold(T::zero(), T::max)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&a| a * a).sum::<T>().sqrt()
    }

    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|a| !a.is_finite())
            .map(|k| (k / self.cols, k % self.cols))
    }

    /// Plain text dump, one row per line, shortest round-trip decimals.
    pub fn write_text<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for i in 0..self.rows {
            let mut first = true;
            for &a in self.row(i) {
                if !first {
                    write!(w, " ")?;
                }
                write!(w, "{a}")?;
                first = false;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Row-pivoted LU factorization `PA = LU` stored packed.
#[derive(Clone, Debug)]
pub struct LuFactorization<T> {
    lu: DenseMatrix<T>,
    /// LAPACK-style pivot sequence: at step k, row k was swapped with `pivots[k]`.
    pivots: Vec<usize>,
    min_abs_pivot: T,
    max_abs_pivot: T,
    singular: bool,
}

impl<T: Real> LuFactorization<T> {
    pub fn n(&self) -> usize {
        self.lu.n_rows()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn min_abs_pivot(&self) -> T {
        self.min_abs_pivot
    }

    pub fn max_abs_pivot(&self) -> T {
        self.max_abs_pivot
    }

    /// True iff an exact zero pivot was encountered.
    pub fn is_singular(&self) -> bool {
        self.singular
    }

    /// Solves `Ax = b` by forward/back substitution. Caller checks
    /// `is_singular` first; here we only debug-assert.
    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.n();
        debug_assert!(!self.singular);
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
        }
        // Ly = Pb, unit lower triangular
        for i in 1..n {
            let (head, tail) = x.split_at_mut(i);
            let s: T = self.lu.row(i)[..i].iter().zip(head.iter()).map(|(&l, &y)| l * y).sum();
            tail[0] -= s;
        }
        // Ux = y
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: T = row[i + 1..].iter().zip(&x[i + 1..]).map(|(&u, &y)| u * y).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `Aᵀx = b` using `Aᵀ = Uᵀ Lᵀ P`.
    pub fn solve_transpose_vec(&self, b: &[T]) -> Vec<T> {
        let n = self.n();
        debug_assert!(!self.singular);
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        // Uᵀ z = b (forward, non-unit diagonal); column access on U
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lu[(k, i)] * x[k];
            }
            x[i] = s / self.lu[(i, i)];
        }
        // Lᵀ w = z (backward, unit diagonal)
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lu[(k, i)] * x[k];
            }
            x[i] = s;
        }
        // x = P⁻¹ w: undo the row swaps in reverse order
        for k in (0..n).rev() {
            x.swap(k, self.pivots[k]);
        }
        x
    }
}

/// Panel width of the blocked factorization.
const LU_BLOCK: usize = 64;

/// Blocked LU with partial pivoting (right-looking panel algorithm).
/// An exact zero pivot flags the factorization as singular without
/// aborting; elimination skips the dead column.
pub fn lu_factor<T: Real>(a: &DenseMatrix<T>) -> Result<LuFactorization<T>, LinalgError> {
    if a.n_rows() != a.n_cols() {
        return Err(LinalgError::NotSquare {
            rows: a.n_rows(),
            cols: a.n_cols(),
        });
    }
    if let Some((row, col)) = a.find_non_finite() {
        return Err(LinalgError::NonFiniteEntry { row, col });
    }
    let n = a.n_rows();
    let mut lu = a.clone();
    let mut pivots = vec![0usize; n];
    let mut min_piv = T::infinity();
    let mut max_piv = T::zero();
    let mut singular = false;

    let mut k0 = 0;
    while k0 < n {
        let nb = LU_BLOCK.min(n - k0);
        // factor the panel [k0..n) x [k0..k0+nb) unblocked
        for k in k0..k0 + nb {
            let mut best = k;
            let mut best_abs = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best_abs {
                    best_abs = v;
                    best = i;
                }
            }
            pivots[k] = best;
            if best != k {
                // swap the full rows so the trailing update stays simple
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(best, j)];
                    lu[(best, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            let abs_pivot = pivot.abs();
            min_piv = min_piv.min(abs_pivot);
            max_piv = max_piv.max(abs_pivot);
            if abs_pivot == T::zero() {
                singular = true;
                continue;
            }
            let inv = T::one() / pivot;
            // eliminate within the panel only
            let cols = n;
            let (top, bottom) = lu.data.split_at_mut((k + 1) * cols);
            let pivot_row = &top[k * cols + k + 1..k * cols + k0 + nb];
            for row in bottom.chunks_exact_mut(cols) {
                let m = row[k] * inv;
                row[k] = m;
                if m != T::zero() {
                    for (x, &p) in row[k + 1..k0 + nb].iter_mut().zip(pivot_row) {
                        *x -= m * p;
                    }
                }
            }
        }
        let k1 = k0 + nb;
        if k1 >= n {
            break;
        }
        // U12 = L11^{-1} A12 (unit lower triangular solve on the panel rows)
        for k in k0..k1 {
            let (top, rest) = lu.data.split_at_mut((k + 1) * n);
            let row_k = &top[k * n..(k + 1) * n];
            for (i, row_i) in rest.chunks_exact_mut(n).enumerate() {
                let i_abs = k + 1 + i;
                if i_abs >= k1 {
                    break;
                }
                let m = row_i[k];
                if m != T::zero() {
                    for (x, &u) in row_i[k1..].iter_mut().zip(&row_k[k1..]) {
                        *x -= m * u;
                    }
                }
            }
        }
        // A22 -= L21 * U12 as dot products, with U12 packed column-major
        // so each inner product runs over contiguous memory
        let width = n - k1;
        let (panel_rows, trailing) = lu.data.split_at_mut(k1 * n);
        let mut u_t = vec![T::zero(); width * nb];
        for (kk, k) in (k0..k1).enumerate() {
            for j in 0..width {
                u_t[j * nb + kk] = panel_rows[k * n + k1 + j];
            }
        }
        for row_i in trailing.chunks_exact_mut(n) {
            let (l_row, c_row) = row_i.split_at_mut(k1);
            let l_row = &l_row[k0..];
            for (x, u_col) in c_row.iter_mut().zip(u_t.chunks_exact(nb)) {
                let mut acc = T::zero();
                for (&l, &u) in l_row.iter().zip(u_col) {
                    acc += l * u;
                }
                *x -= acc;
            }
        }
        k0 = k1;
    }

    if n == 0 {
        min_piv = T::zero();
    }
    Ok(LuFactorization {
        lu,
        pivots,
        min_abs_pivot: min_piv,
        max_abs_pivot: max_piv,
        singular,
    })
}

/// Outcome of a linear solve with diagnostics.
#[derive(Clone, Debug)]
pub struct SolveReport<T> {
    pub solution: Vec<T>,
    /// Hager-style estimate of the 1-norm condition number.
    pub condition_estimate: T,
    pub min_abs_pivot: T,
    /// `‖Ax - b‖₂ / ‖b‖₂` against the original matrix.
    pub residual_norm: T,
    pub singular_flag: bool,
}

/// Solves `Ax = b` from a factorization, with residual and condition
/// diagnostics. `a` must be the matrix that was factored.
pub fn solve<T: Real>(
    factor: &LuFactorization<T>,
    a: &DenseMatrix<T>,
    b: &[T],
) -> Result<SolveReport<T>, LinalgError> {
    let n = factor.n();
    if factor.is_singular() {
        return Err(LinalgError::Singular {
            min_abs_pivot: factor.min_abs_pivot().to_f64_lossy(),
        });
    }
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let x = factor.solve_vec(b);
    let ax = a.mul_vec(&x);
    let num = ax
        .iter()
        .zip(b)
        .map(|(&p, &q)| (p - q) * (p - q))
        .sum::<T>()
        .sqrt();
    let den = b.iter().map(|&q| q * q).sum::<T>().sqrt();
    let residual = if den > T::zero() { num / den } else { num };
    Ok(SolveReport {
        solution: x,
        condition_estimate: condition_estimate_1(factor, a),
        min_abs_pivot: factor.min_abs_pivot(),
        residual_norm: residual,
        singular_flag: false,
    })
}

/// Hager-style 1-norm condition estimate from the factorization,
/// capped at 5 refinement iterations.
pub fn condition_estimate_1<T: Real>(factor: &LuFactorization<T>, a: &DenseMatrix<T>) -> T {
    let n = factor.n();
    if n == 0 || factor.is_singular() {
        return T::infinity();
    }
    let a_norm = a.norm_1();
    let inv_n = T::one() / T::from_usize(n).unwrap();
    let mut x = vec![inv_n; n];
    let mut est = T::zero();
    for _ in 0..5 {
        let y = factor.solve_vec(&x);
        est = y.iter().map(|&v| v.abs()).sum();
        let xi: Vec<T> = y
            .iter()
            .map(|&v| if v < T::zero() { -T::one() } else { T::one() })
            .collect();
        let z = factor.solve_transpose_vec(&xi);
        let (j, zmax) = z
            .iter()
            .enumerate()
            .fold((0, T::zero()), |(bj, bv), (i, &v)| {
                if v.abs() > bv {
                    (i, v.abs())
                } else {
                    (bj, bv)
                }
            });
        let ztx: T = z.iter().zip(&x).map(|(&p, &q)| p * q).sum();
        if zmax <= ztx {
            break;
        }
        x.iter_mut().for_each(|v| *v = T::zero());
        x[j] = T::one();
    }
    a_norm * est
}

/// Smallest singular value by inverse iteration on `AᵀA` through the LU
/// factors of `A`. Relative accuracy around 1e-4, which is tighter than
/// the order-of-magnitude use this supports.
pub fn smallest_singular_value<T: Real>(a: &DenseMatrix<T>) -> Result<T, LinalgError> {
    let factor = lu_factor(a)?;
    let n = factor.n();
    if n == 0 {
        return Err(LinalgError::NotSquare { rows: 0, cols: 0 });
    }
    if factor.is_singular() {
        // exact zero pivot under partial pivoting means an exactly
        // singular matrix
        return Ok(T::zero());
    }
    // deterministic start vector with no special alignment
    let mut v: Vec<T> = (0..n)
        .map(|i| {
            let t = (i as f64 * 0.7390851332151607 + 0.41).sin();
            T::from_f64_lossy(t + 0.5)
        })
        .collect();
    normalize(&mut v);
    let mut sigma = T::zero();
    let max_iter = 500;
    for it in 0..max_iter {
        // w = (AᵀA)⁻¹ v = A⁻¹ A⁻ᵀ v
        let z = factor.solve_transpose_vec(&v);
        let mut w = factor.solve_vec(&z);
        let norm_w = w.iter().map(|&x| x * x).sum::<T>().sqrt();
        if !norm_w.is_finite() || norm_w == T::zero() {
            return Err(LinalgError::NonConvergence {
                last_estimate: sigma.to_f64_lossy(),
            });
        }
        let new_sigma = (T::one() / norm_w).sqrt();
        let done = it > 0 && (new_sigma - sigma).abs() <= T::from_f64_lossy(1e-4) * new_sigma;
        sigma = new_sigma;
        if done {
            return Ok(sigma);
        }
        normalize(&mut w);
        v = w;
    }
    Err(LinalgError::NonConvergence {
        last_estimate: sigma.to_f64_lossy(),
    })
}

fn normalize<T: Real>(v: &mut [T]) {
    let n: T = v.iter().map(|&x| x * x).sum::<T>().sqrt();
    if n > T::zero() {
        v.iter_mut().for_each(|x| *x /= n);
    }
}
