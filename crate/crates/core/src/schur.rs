//! Real Schur decomposition `A = Q T Qᵀ`.
//!
//! Householder reduction to upper Hessenberg form followed by Francis
//! implicit double-shift QR. Converged 2×2 blocks are put in standard form:
//! a block whose eigenvalues are real is rotated to upper triangular (two
//! 1×1 blocks), otherwise it is left as `[[a, b], [c, a]]` with `b·c < 0`.
//! So every 2×2 diagonal block of `T` carries a genuine conjugate pair, and
//! the number of 1×1 blocks is the number of real eigenvalues.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{apply_left, apply_right, householder_vector, Matrix};

pub const DEFAULT_MAX_SWEEPS: usize = 30;

/// Relative deflation threshold on subdiagonal entries.
pub const DEFLATION_EPS: f64 = f64::EPSILON;

/// Stalled-iteration counts at which exceptional shifts replace the
/// Francis shifts.
const EXCEPTIONAL_PERIOD: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct RealSchurForm {
    q: Matrix,
    t: Matrix,
    block_sizes: Vec<usize>,
    eigenvalues: Vec<Complex64>,
}

impl RealSchurForm {
    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn t(&self) -> &Matrix {
        &self.t
    }

    /// Diagonal block sizes (1 or 2) from top-left to bottom-right.
    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Eigenvalues in diagonal order; each 2×2 block lists `+i` first.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn real_count(&self) -> usize {
        self.block_sizes.iter().filter(|&&b| b == 1).count()
    }

    pub fn pair_count(&self) -> usize {
        self.block_sizes.iter().filter(|&&b| b == 2).count()
    }

    /// `‖QᵀQ − I‖_F`
    pub fn orthogonality_residual(&self) -> f64 {
        let n = self.q.rows();
        self.q
            .transpose()
            .matmul(&self.q)
            .and_then(|g| g.sub(&Matrix::identity(n)))
            .map(|r| r.frobenius_norm())
            .unwrap_or(f64::INFINITY)
    }

    /// `‖QᵀAQ − T‖_F` for the source matrix `a`.
    pub fn reconstruction_residual(&self, a: &Matrix) -> Result<f64> {
        let qtaq = self.q.transpose().matmul(a)?.matmul(&self.q)?;
        Ok(qtaq.sub(&self.t)?.frobenius_norm())
    }
}

/// Block structure and eigenvalues without the Schur vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurSpectrum {
    pub block_sizes: Vec<usize>,
    pub eigenvalues: Vec<Complex64>,
}

impl SchurSpectrum {
    pub fn real_count(&self) -> usize {
        self.block_sizes.iter().filter(|&&b| b == 1).count()
    }
}

/// Reduces `a` to upper Hessenberg form `h = qᵀ a q`.
///
/// Reflectors are skipped for columns that are already reduced, so a
/// Hessenberg input comes back unchanged with `q = I`.
pub fn hessenberg(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let n = a.require_square()?;
    let mut h = a.clone();
    let mut q = Matrix::identity(n);
    reduce_hessenberg(&mut h, Some(&mut q));
    Ok((q, h))
}

fn reduce_hessenberg(h: &mut Matrix, mut q: Option<&mut Matrix>) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let Some((v, tau)) = householder_vector(&x) else {
            continue;
        };
        apply_left(h, &v, tau, k + 1, k);
        apply_right(h, &v, tau, k + 1, 0);
        if let Some(q) = q.as_deref_mut() {
            apply_right(q, &v, tau, k + 1, 0);
        }
        for i in k + 2..n {
            h[(i, k)] = 0.0;
        }
    }
}

/// Full real Schur decomposition.
pub fn real_schur(a: &Matrix, max_sweeps: usize) -> Result<RealSchurForm> {
    let n = a.require_square()?;
    check_finite(a)?;
    let mut t = a.clone();
    let mut q = Matrix::identity(n);
    reduce_hessenberg(&mut t, Some(&mut q));
    let spec = francis(&mut t, Some(&mut q), true, max_sweeps)?;
    Ok(RealSchurForm {
        q,
        t,
        block_sizes: spec.block_sizes,
        eigenvalues: spec.eigenvalues,
    })
}

/// Block sizes and eigenvalues only. Updates are confined to the active
/// window and no Schur vectors are accumulated; the diagonal blocks come
/// out bitwise identical to [`real_schur`].
pub fn schur_spectrum(a: &Matrix, max_sweeps: usize) -> Result<SchurSpectrum> {
    a.require_square()?;
    check_finite(a)?;
    let mut h = a.clone();
    reduce_hessenberg(&mut h, None);
    francis(&mut h, None, false, max_sweeps)
}

/// Eigenvalues in canonical order (real part ascending, then imaginary part).
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>> {
    let mut ev = schur_spectrum(a, DEFAULT_MAX_SWEEPS)?.eigenvalues;
    canonical_sort(&mut ev);
    Ok(ev)
}

pub fn canonical_sort(ev: &mut [Complex64]) {
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
}

/// Largest distance between matched eigenvalues of two spectra of equal
/// length, matching each element of `a` greedily to its nearest unused
/// element of `b`. Infinite when the lengths differ.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("lengths match");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

fn check_finite(a: &Matrix) -> Result<()> {
    let n = a.cols();
    match a.as_slice().iter().position(|x| !x.is_finite()) {
        Some(p) => Err(Error::NonFinite {
            row: p / n,
            col: p % n,
        }),
        None => Ok(()),
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix.
///
/// With `full` the whole of `h` is transformed (so it ends as `T`);
/// otherwise only the active window is touched. `q`, when given, receives
/// the accumulated transformations.
fn francis(
    h: &mut Matrix,
    mut q: Option<&mut Matrix>,
    full: bool,
    max_sweeps: usize,
) -> Result<SchurSpectrum> {
    let n = h.rows();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut block = vec![0usize; n];
    let budget = max_sweeps.max(1) * n;

    let mut hi = n as isize - 1;
    let mut its = 0usize;
    while hi >= 0 {
        let hu = hi as usize;
        let lo = find_split(h, hu);

        if lo == hu {
            wr[hu] = h[(hu, hu)];
            wi[hu] = 0.0;
            block[hu] = 1;
            hi -= 1;
            its = 0;
            continue;
        }
        if lo + 1 == hu {
            standardize_block(
                h,
                q.as_deref_mut(),
                full,
                hu - 1,
                &mut wr,
                &mut wi,
                &mut block,
            );
            hi -= 2;
            its = 0;
            continue;
        }

        its += 1;
        if its > budget {
            return Err(Error::SchurNoConvergence {
                lo,
                hi: hu,
                iterations: its - 1,
            });
        }

        let (s, p) = shifts(h, lo, hu, its);
        double_shift_sweep(h, q.as_deref_mut(), full, lo, hu, s, p);
    }

    let mut block_sizes = Vec::new();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let b = block[i];
        debug_assert!(b == 1 || b == 2);
        block_sizes.push(b);
        for k in i..i + b {
            eigenvalues.push(Complex64::new(wr[k], wi[k]));
        }
        i += b;
    }
    Ok(SchurSpectrum {
        block_sizes,
        eigenvalues,
    })
}

/// Start of the unreduced block ending at `hi`. Negligible subdiagonal
/// entries are set to exactly zero.
fn find_split(h: &mut Matrix, hi: usize) -> usize {
    let mut l = hi;
    while l > 0 {
        let sub = h[(l, l - 1)].abs();
        if sub == 0.0 {
            break;
        }
        let mut scale = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
        if scale == 0.0 {
            // zero diagonal pair: fall back to the neighbouring subdiagonals
            if l >= 2 {
                scale += h[(l - 1, l - 2)].abs();
            }
            if l < hi {
                scale += h[(l + 1, l)].abs();
            }
        }
        if sub <= DEFLATION_EPS * scale {
            h[(l, l - 1)] = 0.0;
            break;
        }
        l -= 1;
    }
    l
}

/// Sum and product of the two shifts.
fn shifts(h: &Matrix, lo: usize, hi: usize, its: usize) -> (f64, f64) {
    let (h11, h12, h21, h22) = if its % (2 * EXCEPTIONAL_PERIOD) == EXCEPTIONAL_PERIOD {
        // ad hoc shift from the top of the window
        let s = h[(lo + 1, lo)].abs() + h[(lo + 2, lo + 1)].abs();
        let d = 0.75 * s + h[(lo, lo)];
        (d, -0.4375 * s, s, d)
    } else if its.is_multiple_of(2 * EXCEPTIONAL_PERIOD) {
        // ad hoc shift from the bottom of the window
        let s = h[(hi, hi - 1)].abs() + h[(hi - 1, hi - 2)].abs();
        let d = 0.75 * s + h[(hi, hi)];
        (d, -0.4375 * s, s, d)
    } else {
        (
            h[(hi - 1, hi - 1)],
            h[(hi - 1, hi)],
            h[(hi, hi - 1)],
            h[(hi, hi)],
        )
    };
    (h11 + h22, h11 * h22 - h12 * h21)
}

/// One implicit double-shift bulge chase over rows/columns `lo..=hi`.
fn double_shift_sweep(
    h: &mut Matrix,
    mut q: Option<&mut Matrix>,
    full: bool,
    lo: usize,
    hi: usize,
    s: f64,
    p: f64,
) {
    let n = h.rows();
    let col_end = if full { n } else { hi + 1 };
    let row_start = if full { 0 } else { lo };

    // first column of (H - σ1 I)(H - σ2 I), scaled to avoid overflow
    let h00 = h[(lo, lo)];
    let h10 = h[(lo + 1, lo)];
    let mut x = h00 * h00 + h[(lo, lo + 1)] * h10 - s * h00 + p;
    let mut y = h10 * (h00 + h[(lo + 1, lo + 1)] - s);
    let mut z = h10 * h[(lo + 2, lo + 1)];
    let sc = x.abs() + y.abs() + z.abs();
    if sc > 0.0 {
        x /= sc;
        y /= sc;
        z /= sc;
    }

    for k in lo..hi {
        let nr = (hi - k + 1).min(3);
        if k > lo {
            x = h[(k, k - 1)];
            y = h[(k + 1, k - 1)];
            z = if nr == 3 { h[(k + 2, k - 1)] } else { 0.0 };
        }
        let xs = [x, y, z];
        let Some((v, tau)) = householder_vector(&xs[..nr]) else {
            continue;
        };
        if k > lo {
            let norm = xs[..nr].iter().map(|t| t * t).sum::<f64>().sqrt();
            h[(k, k - 1)] = if x >= 0.0 { -norm } else { norm };
            h[(k + 1, k - 1)] = 0.0;
            if nr == 3 {
                h[(k + 2, k - 1)] = 0.0;
            }
        }
        reflect_rows(h, &v, tau, k, k, col_end);
        let row_end = (k + 4).min(hi + 1);
        reflect_cols(h, &v, tau, k, row_start, row_end);
        if let Some(q) = q.as_deref_mut() {
            reflect_cols(q, &v, tau, k, 0, n);
        }
    }
}

/// Rows `r0..r0+v.len()`, columns `c0..c1`, from the left.
#[inline]
fn reflect_rows(a: &mut Matrix, v: &[f64], tau: f64, r0: usize, c0: usize, c1: usize) {
    for j in c0..c1 {
        let mut s = 0.0;
        for (k, vk) in v.iter().enumerate() {
            s += vk * a[(r0 + k, j)];
        }
        let s = tau * s;
        for (k, vk) in v.iter().enumerate() {
            a[(r0 + k, j)] -= s * vk;
        }
    }
}

/// Columns `c0..c0+v.len()`, rows `r0..r1`, from the right.
#[inline]
fn reflect_cols(a: &mut Matrix, v: &[f64], tau: f64, c0: usize, r0: usize, r1: usize) {
    for i in r0..r1 {
        let mut s = 0.0;
        for (k, vk) in v.iter().enumerate() {
            s += vk * a[(i, c0 + k)];
        }
        let s = tau * s;
        for (k, vk) in v.iter().enumerate() {
            a[(i, c0 + k)] -= s * vk;
        }
    }
}

/// Standardizes the converged 2×2 block at rows/columns `i, i+1` and
/// applies the rotation to the rest of `h` (when `full`) and to `q`.
fn standardize_block(
    h: &mut Matrix,
    q: Option<&mut Matrix>,
    full: bool,
    i: usize,
    wr: &mut [f64],
    wi: &mut [f64],
    block: &mut [usize],
) {
    let n = h.rows();
    let j = i + 1;
    let std = standardize_2x2(h[(i, i)], h[(i, j)], h[(j, i)], h[(j, j)]);
    h[(i, i)] = std.a;
    h[(i, j)] = std.b;
    h[(j, i)] = std.c;
    h[(j, j)] = std.d;

    if full {
        for col in j + 1..n {
            let (x, y) = (h[(i, col)], h[(j, col)]);
            h[(i, col)] = std.cs * x + std.sn * y;
            h[(j, col)] = std.cs * y - std.sn * x;
        }
        for row in 0..i {
            let (x, y) = (h[(row, i)], h[(row, j)]);
            h[(row, i)] = std.cs * x + std.sn * y;
            h[(row, j)] = std.cs * y - std.sn * x;
        }
    }
    if let Some(q) = q {
        for row in 0..n {
            let (x, y) = (q[(row, i)], q[(row, j)]);
            q[(row, i)] = std.cs * x + std.sn * y;
            q[(row, j)] = std.cs * y - std.sn * x;
        }
    }

    if std.c == 0.0 {
        wr[i] = std.a;
        wr[j] = std.d;
        wi[i] = 0.0;
        wi[j] = 0.0;
        block[i] = 1;
        block[j] = 1;
    } else {
        let im = std.b.abs().sqrt() * std.c.abs().sqrt();
        wr[i] = std.a;
        wr[j] = std.d;
        wi[i] = im;
        wi[j] = -im;
        block[i] = 2;
        block[j] = 2;
    }
}

/// Standardized 2×2 block and the rotation producing it:
/// `[[a0,b0],[c0,d0]] = [[cs,-sn],[sn,cs]] [[a,b],[c,d]] [[cs,sn],[-sn,cs]]`.
#[derive(Debug, Clone, Copy)]
struct Standard2x2 {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    cs: f64,
    sn: f64,
}

/// Fortran `SIGN(x, s)`.
#[inline]
fn sign(x: f64, s: f64) -> f64 {
    if s >= 0.0 || (s == 0.0 && s.is_sign_positive()) {
        x.abs()
    } else {
        -x.abs()
    }
}

/// Schur factorization of a real 2×2 matrix in standard form, after
/// LAPACK's `dlanv2`: either `c = 0` (real eigenvalues `a`, `d`), or
/// `a = d` with `b·c < 0` (eigenvalues `a ± sqrt(|b c|) i`).
fn standardize_2x2(mut a: f64, mut b: f64, mut c: f64, mut d: f64) -> Standard2x2 {
    const MULTPL: f64 = 4.0;
    let eps = f64::EPSILON;
    let (mut cs, mut sn);

    if c == 0.0 {
        cs = 1.0;
        sn = 0.0;
    } else if b == 0.0 {
        // swap rows and columns
        cs = 0.0;
        sn = 1.0;
        std::mem::swap(&mut a, &mut d);
        b = -c;
        c = 0.0;
    } else if a - d == 0.0 && b.signum() != c.signum() {
        cs = 1.0;
        sn = 0.0;
    } else {
        let temp = a - d;
        let mut p = 0.5 * temp;
        let bcmax = b.abs().max(c.abs());
        let bcmis = b.abs().min(c.abs()) * sign(1.0, b) * sign(1.0, c);
        let scale = p.abs().max(bcmax);
        let mut z = p / scale * p + bcmax / scale * bcmis;

        if z >= MULTPL * eps {
            // real eigenvalues
            z = p + sign(scale.sqrt() * z.sqrt(), p);
            a = d + z;
            d -= bcmax / z * bcmis;
            let tau = c.hypot(z);
            cs = z / tau;
            sn = c / tau;
            b -= c;
            c = 0.0;
        } else {
            // complex or nearly equal real eigenvalues: equalize the diagonal
            let sigma = b + c;
            let tau = sigma.hypot(temp);
            cs = (0.5 * (1.0 + sigma.abs() / tau)).sqrt();
            sn = -(p / (tau * cs)) * sign(1.0, sigma);

            let aa = a * cs + b * sn;
            let bb = -a * sn + b * cs;
            let cc = c * cs + d * sn;
            let dd = -c * sn + d * cs;

            a = aa * cs + cc * sn;
            b = bb * cs + dd * sn;
            c = -aa * sn + cc * cs;
            d = -bb * sn + dd * cs;

            let mid = 0.5 * (a + d);
            a = mid;
            d = mid;

            if c != 0.0 {
                if b != 0.0 {
                    if b.signum() == c.signum() {
                        // real eigenvalues: reduce to upper triangular
                        let sab = b.abs().sqrt();
                        let sac = c.abs().sqrt();
                        p = sign(sab * sac, c);
                        let tau = 1.0 / (b + c).abs().sqrt();
                        a = mid + p;
                        d = mid - p;
                        b -= c;
                        c = 0.0;
                        let cs1 = sab * tau;
                        let sn1 = sac * tau;
                        let t = cs * cs1 - sn * sn1;
                        sn = cs * sn1 + sn * cs1;
                        cs = t;
                    }
                } else {
                    b = -c;
                    c = 0.0;
                    let t = cs;
                    cs = -sn;
                    sn = t;
                }
            }
        }
    }
    Standard2x2 { a, b, c, d, cs, sn }
}
