//! Dense real matrices and the factorization primitives shared by the
//! Schur engine, the commutant oracle and the perturbation builder.
//!
//! Storage is row-major: `data[i * cols + j] = A[i, j]`. Every `vec`
//! operation in this crate uses column stacking, so `vec(X)[i + j * rows]`
//! is `X[i, j]` regardless of the storage layout. With that convention
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Sweep cap for the one-sided Jacobi SVD.
pub const SVD_MAX_SWEEPS: usize = 80;

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidData {
                rows,
                cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices.
    ///
    /// Panics on ragged or empty input; intended for literals.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty(), "at least one row required");
        let cols = rows[0].len();
        assert!(cols > 0, "at least one column required");
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(
                r.len(),
                cols,
                "row {i} has {} entries, expected {cols}",
                r.len()
            );
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Block-diagonal matrix with the given square blocks in order.
    pub fn block_diag(blocks: &[Matrix]) -> Self {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let mut m = Self::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            m.set_block(off, off, b);
            off += b.rows;
        }
        m
    }

    /// Companion matrix of the monic polynomial
    /// `x^d + coeffs[0] x^(d-1) + ... + coeffs[d-1]`.
    pub fn companion(coeffs: &[f64]) -> Self {
        let d = coeffs.len();
        let mut m = Self::zeros(d, d);
        for (j, &c) in coeffs.iter().enumerate() {
            m[(0, j)] = -c;
        }
        for i in 1..d {
            m[(i, i - 1)] = 1.0;
        }
        m
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Returns the order `n` of a square matrix.
    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product. The inner loop accumulates `k` in increasing order,
    /// so results are bitwise reproducible for identical inputs.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "matmul",
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let aik = self.data[i * self.cols + k];
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += aik * b;
                }
            }
        }
        Ok(out)
    }

    fn zip_with(
        &self,
        other: &Matrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                op,
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Matrix) -> Result<Matrix> {
        let rows = self.rows.checked_mul(other.rows).ok_or(Error::Overflow)?;
        let cols = self.cols.checked_mul(other.cols).ok_or(Error::Overflow)?;
        rows.checked_mul(cols).ok_or(Error::Overflow)?;
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == 0.0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        // scaled accumulation avoids overflow for huge entries
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let ssq: f64 = self.data.iter().map(|x| (x / scale) * (x / scale)).sum();
        scale * ssq.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Column-stacking vectorization.
    pub fn vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self[(i, j)]);
            }
        }
        v
    }

    /// Inverse of [`Matrix::vec`].
    pub fn from_vec(rows: usize, cols: usize, v: &[f64]) -> Result<Matrix> {
        if v.len() != rows * cols {
            return Err(Error::InvalidData {
                rows,
                cols,
                got: v.len(),
            });
        }
        Ok(Matrix::from_fn(rows, cols, |i, j| v[i + j * rows]))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                op: "mul_vec",
                left: (self.rows, self.cols),
                right: (x.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Serializes to the whitespace text format read by [`Matrix::from_str`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|x| format!("{x:e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|x| format!("{x:>12.6}")).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Text format: a header line `rows cols`, then `rows` lines of `cols`
/// whitespace-separated decimals. Blank lines are ignored; NaN and
/// infinities are rejected.
impl FromStr for Matrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: hline,
                message: format!("header must be `rows cols`, got {header:?}"),
            });
        }
        let parse_dim = |t: &str| {
            t.parse::<usize>().map_err(|e| Error::Parse {
                line: hline,
                message: format!("bad dimension {t:?}: {e}"),
            })
        };
        let rows = parse_dim(dims[0])?;
        let cols = parse_dim(dims[1])?;
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix { rows, cols });
        }

        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (ln, line) = lines.next().ok_or(Error::Parse {
                line: hline + r + 1,
                message: format!("expected {rows} rows, found {r}"),
            })?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let x: f64 = tok.parse().map_err(|_| Error::Parse {
                    line: ln,
                    message: format!("bad number {tok:?}"),
                })?;
                if !x.is_finite() {
                    return Err(Error::Parse {
                        line: ln,
                        message: format!("non-finite value {tok:?}"),
                    });
                }
                data.push(x);
            }
            if data.len() - before != cols {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("expected {cols} values, found {}", data.len() - before),
                });
            }
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::Parse {
                line: ln,
                message: "trailing data after last row".into(),
            });
        }
        Matrix::new(rows, cols, data)
    }
}

/// Tolerance for [`numerical_rank`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankTolerance {
    /// `max(rows, cols) · ε · σ_max`
    Auto,
    Absolute(f64),
}

impl RankTolerance {
    pub fn resolve(self, rows: usize, cols: usize, sigma_max: f64) -> f64 {
        match self {
            RankTolerance::Auto => rows.max(cols) as f64 * f64::EPSILON * sigma_max,
            RankTolerance::Absolute(t) => t,
        }
    }
}

/// Singular values in descending order, by one-sided (Hestenes) Jacobi.
///
/// Column pairs are rotated until every pair is orthogonal to within
/// `max(rows,cols) · ε` relative to their norms, which puts the computed
/// values well inside 1e-12 relative accuracy.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_finite() {
        return Err(Error::NonFinite { row: 0, col: 0 });
    }
    // work on the orientation with fewer columns; σ(A) = σ(Aᵀ)
    let work = if a.rows >= a.cols {
        a.clone()
    } else {
        a.transpose()
    };
    let (m, n) = (work.rows, work.cols);
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..m).map(|i| work[(i, j)]).collect())
        .collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    let tol = m as f64 * f64::EPSILON;
    // columns this far below the total norm carry only rounding residue;
    // rotating them chases subnormal noise forever
    let negligible = norms.iter().sum::<f64>() * 1e-300;

    let mut converged = n < 2;
    let mut sweeps = 0;
    while !converged && sweeps < SVD_MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let scale = alpha.sqrt() * beta.sqrt();
                let (cp, cq) = pair_mut(&mut cols, p, q);
                let gamma = dot(cp, cq);
                if gamma.abs() <= tol * scale {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (xp, yq) = (*x, *y);
                    *x = c * xp - s * yq;
                    *y = s * xp + c * yq;
                }
                norms[p] = dot(cp, cp);
                norms[q] = dot(cq, cq);
            }
        }
        converged = !rotated;
    }

    let mut sv: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    if converged {
        Ok(sv)
    } else {
        Err(Error::SvdNoConvergence {
            sweeps,
            partial: sv,
        })
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn pair_mut<T>(v: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    debug_assert!(p < q);
    let (lo, hi) = v.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}

/// Number of singular values strictly above the tolerance.
pub fn numerical_rank(a: &Matrix, tol: RankTolerance) -> Result<usize> {
    let sv = singular_values(a)?;
    let cutoff = tol.resolve(a.rows, a.cols, sv.first().copied().unwrap_or(0.0));
    Ok(sv.iter().filter(|&&s| s > cutoff).count())
}

/// 2-norm condition number `σ_max / σ_min`; numerically singular input
/// (rank below `n` at the AUTO tolerance) is an error.
pub fn condition_number(a: &Matrix) -> Result<f64> {
    let n = a.require_square()?;
    let sv = singular_values(a)?;
    let smax = sv[0];
    let smin = sv[n - 1];
    let cutoff = RankTolerance::Auto.resolve(n, n, smax);
    if smax == 0.0 || smin <= cutoff {
        return Err(Error::Singular);
    }
    Ok(smax / smin)
}

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse(a: &Matrix) -> Result<Matrix> {
    let n = a.require_square()?;
    let mut m = a.clone();
    let mut inv = Matrix::identity(n);
    let scale = a.max_abs();
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    for col in 0..n {
        let (piv, pval) = (col..n)
            .map(|r| (r, m[(r, col)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pval <= n as f64 * f64::EPSILON * scale {
            return Err(Error::Singular);
        }
        if piv != col {
            for j in 0..n {
                m.data.swap(piv * n + j, col * n + j);
                inv.data.swap(piv * n + j, col * n + j);
            }
        }
        let d = m[(col, col)];
        for j in 0..n {
            m[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[(r, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                m[(r, j)] -= f * m[(col, j)];
                inv[(r, j)] -= f * inv[(col, j)];
            }
        }
    }
    Ok(inv)
}

/// Orthogonal factor `Q` of a Householder QR factorization of a square
/// matrix, with column signs chosen so that `R` has a nonnegative diagonal.
pub fn orthogonal_factor(a: &Matrix) -> Result<Matrix> {
    let n = a.require_square()?;
    let mut r = a.clone();
    let mut q = Matrix::identity(n);
    for k in 0..n.saturating_sub(1) {
        let x: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
        let Some((v, tau)) = householder_vector(&x) else {
            continue;
        };
        apply_left(&mut r, &v, tau, k, k);
        apply_right(&mut q, &v, tau, k, 0);
    }
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}

/// Householder vector `v` (with `v[0] = 1`) and `tau` such that
/// `(I - tau v vᵀ) x = -sign(x0) ‖x‖ e1`. `None` when `x[1..]` is already zero.
pub(crate) fn householder_vector(x: &[f64]) -> Option<(Vec<f64>, f64)> {
    let tail: f64 = x[1..].iter().map(|t| t * t).sum();
    if tail == 0.0 {
        return None;
    }
    let norm = (x[0] * x[0] + tail).sqrt();
    let beta = if x[0] >= 0.0 { -norm } else { norm };
    let u0 = x[0] - beta;
    let mut v = Vec::with_capacity(x.len());
    v.push(1.0);
    v.extend(x[1..].iter().map(|t| t / u0));
    let tau = (beta - x[0]) / beta;
    Some((v, tau))
}

/// `A[r0.., c0..] ← (I - tau v vᵀ) A[r0.., c0..]`
pub(crate) fn apply_left(a: &mut Matrix, v: &[f64], tau: f64, r0: usize, c0: usize) {
    for j in c0..a.cols {
        let s: f64 = v
            .iter()
            .enumerate()
            .map(|(k, vk)| vk * a[(r0 + k, j)])
            .sum();
        let s = tau * s;
        for (k, vk) in v.iter().enumerate() {
            a[(r0 + k, j)] -= s * vk;
        }
    }
}

/// `A[r0.., c0..] ← A[r0.., c0..] (I - tau v vᵀ)`
pub(crate) fn apply_right(a: &mut Matrix, v: &[f64], tau: f64, c0: usize, r0: usize) {
    for i in r0..a.rows {
        let row = &mut a.data[i * a.cols + c0..i * a.cols + c0 + v.len()];
        let s: f64 = row.iter().zip(v).map(|(x, vk)| x * vk).sum();
        let s = tau * s;
        for (x, vk) in row.iter_mut().zip(v) {
            *x -= s * vk;
        }
    }
}
