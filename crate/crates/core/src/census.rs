//! Real-eigenvalue counting and generic-bundle classification.
//!
//! A matrix with `n` distinct eigenvalues lies in exactly one generic
//! bundle, identified by its number `t` of conjugate pairs (and `n − 2t`
//! real eigenvalues). Matrices whose eigenvalue gaps fall below the
//! distinctness threshold are reported as boundary cases with no signature.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{condition_number, Matrix};
use crate::schur::{schur_spectrum, SchurSpectrum, DEFAULT_MAX_SWEEPS};

/// Multiplier of `n · ε · ‖A‖_F` below which two eigenvalues are not
/// considered distinct.
pub const DISTINCTNESS_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BundleSignature {
    pub n: usize,
    /// Number of conjugate pairs.
    pub t: usize,
}

impl BundleSignature {
    pub fn new(n: usize, t: usize) -> Result<Self> {
        if n == 0 || t > n / 2 {
            return Err(Error::InvalidArgument(format!(
                "no generic bundle (n={n}, t={t})"
            )));
        }
        Ok(Self { n, t })
    }

    pub fn real_count(&self) -> usize {
        self.n - 2 * self.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CountMethod {
    /// 1×1 diagonal blocks of the real Schur form.
    #[default]
    SchurBlocks,
    /// `|e/|e| ∓ 1| ≤ ε·κ(A)` on each eigenvalue.
    RatioTolerance,
}

impl fmt::Display for CountMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMethod::SchurBlocks => "schur",
            CountMethod::RatioTolerance => "ratio",
        })
    }
}

impl FromStr for CountMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "schur" => Ok(CountMethod::SchurBlocks),
            "ratio" => Ok(CountMethod::RatioTolerance),
            other => Err(Error::InvalidArgument(format!(
                "unknown method {other:?} (schur|ratio)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub signature: Option<BundleSignature>,
    pub real_count: usize,
    /// Smallest distance between two eigenvalues; infinite for `n = 1`
    /// (serialized as `null`).
    #[serde(with = "gap_serde")]
    pub min_eigengap: f64,
    pub threshold: f64,
    pub method: CountMethod,
    pub boundary: bool,
}

mod gap_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// `1e3 · n · ε · ‖A‖_F`
pub fn distinctness_threshold(a: &Matrix) -> f64 {
    DISTINCTNESS_FACTOR * a.rows() as f64 * f64::EPSILON * a.frobenius_norm()
}

/// Number of 1×1 blocks in the real Schur form of `a`.
pub fn count_real_schur(a: &Matrix) -> Result<usize> {
    Ok(schur_spectrum(a, DEFAULT_MAX_SWEEPS)?.real_count())
}

/// Real-eigenvalue count by the ratio rule `|e/|e| ∓ 1| ≤ ε·κ₂(a)`.
pub fn count_real_ratio(a: &Matrix) -> Result<usize> {
    let spec = schur_spectrum(a, DEFAULT_MAX_SWEEPS)?;
    ratio_count(a, &spec)
}

fn ratio_count(a: &Matrix, spec: &SchurSpectrum) -> Result<usize> {
    if spec.eigenvalues.iter().any(|e| e.norm() == 0.0) {
        return Err(Error::ZeroEigenvalue);
    }
    let tol = f64::EPSILON * condition_number(a)?;
    Ok(spec
        .eigenvalues
        .iter()
        .filter(|e| {
            let unit = *e / e.norm();
            (unit - 1.0).norm() <= tol || (unit + 1.0).norm() <= tol
        })
        .count())
}

/// Smallest pairwise eigenvalue distance (complex modulus). A conjugate
/// pair contributes its own separation `2|Im|`.
pub fn min_eigengap(spec: &SchurSpectrum) -> f64 {
    let ev = &spec.eigenvalues;
    let mut gap = f64::INFINITY;
    for i in 0..ev.len() {
        for j in i + 1..ev.len() {
            gap = gap.min((ev[i] - ev[j]).norm());
        }
    }
    gap
}

pub fn classify(a: &Matrix) -> Result<ClassificationResult> {
    classify_with(a, CountMethod::SchurBlocks)
}

pub fn classify_with(a: &Matrix, method: CountMethod) -> Result<ClassificationResult> {
    let n = a.require_square()?;
    let spec = schur_spectrum(a, DEFAULT_MAX_SWEEPS)?;
    let real_count = match method {
        CountMethod::SchurBlocks => spec.real_count(),
        CountMethod::RatioTolerance => ratio_count(a, &spec)?,
    };
    let min_eigengap = min_eigengap(&spec);
    let threshold = distinctness_threshold(a);
    // a zero gap is a repeated eigenvalue even when the threshold is zero
    let boundary = min_eigengap < threshold || min_eigengap == 0.0;
    let signature = if boundary {
        None
    } else {
        debug_assert_eq!((n - real_count) % 2, 0);
        Some(BundleSignature {
            n,
            t: (n - real_count) / 2,
        })
    };
    Ok(ClassificationResult {
        signature,
        real_count,
        min_eigengap,
        threshold,
        method,
        boundary,
    })
}
