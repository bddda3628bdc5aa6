//! Explicit perturbation sequences that move a structured matrix into a
//! generic bundle.
//!
//! For a structure realized as `A = P·J·P⁻¹`, the sequence is
//! `A_m = P·(J + D_m)·P⁻¹` where `D_m` is block diagonal: the `j`-th block
//! `J_k(c)` of an eigenvalue group receives `diag(1/(m+j), 1/(2m+j), …,
//! 1/(km+j))` and the `j`-th block `C_ℓ(a, b)` receives
//! `C(x₁, x₁) ⊕ … ⊕ C(x_ℓ, x_ℓ)` with `x_p = 1/(pm+j)`. Every eigenvalue of
//! `A_m` is simple for large `m` and the real ones stay real, so `A_m` lands
//! in the bundle with `t = Σℓ` conjugate pairs.

use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::census::{classify, BundleSignature};
use crate::error::{Error, Result};
use crate::jordan::{realize_unchecked, JordanStructure};
use crate::linalg::{condition_number, inverse, numerical_rank, Matrix, RankTolerance};
use crate::rng::{gaussian_matrix, NormalStream};
use crate::schur::{schur_spectrum, DEFAULT_MAX_SWEEPS};

pub const DEFAULT_M_GRID: [u64; 4] = [10, 100, 1_000, 10_000];

/// Largest structure dimension accepted by [`verify_sequence`].
pub const MAX_SEQUENCE_DIM: usize = 30;

/// Random conjugators are resampled until `κ₂(P)` is at most this.
pub const MAX_CONDITION: f64 = 1e3;

const MAX_RESAMPLES: u64 = 1000;

/// Which conjugating matrix to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conjugator {
    #[default]
    Identity,
    Random(u64),
}

impl FromStr for Conjugator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "identity" {
            return Ok(Conjugator::Identity);
        }
        if let Some(seed) = s.strip_prefix("random:") {
            return seed
                .parse()
                .map(Conjugator::Random)
                .map_err(|_| Error::InvalidArgument(format!("bad seed in {s:?}")));
        }
        Err(Error::InvalidArgument(format!(
            "unknown conjugator {s:?} (identity|random:<seed>)"
        )))
    }
}

#[derive(Debug, Clone)]
pub struct PerturbationPlan {
    structure: JordanStructure,
    /// `None` stands for the identity.
    p: Option<(Matrix, Matrix)>,
    m_values: Vec<u64>,
}

impl PerturbationPlan {
    pub fn new(structure: JordanStructure, p: Option<Matrix>, m_values: Vec<u64>) -> Result<Self> {
        structure.validate()?;
        Self::build(structure, p, m_values)
    }

    /// Like [`PerturbationPlan::new`] but skips the distinct-eigenvalue
    /// check, so two groups may share an eigenvalue.
    pub fn new_unchecked(
        structure: JordanStructure,
        p: Option<Matrix>,
        m_values: Vec<u64>,
    ) -> Result<Self> {
        structure.validate_shape()?;
        Self::build(structure, p, m_values)
    }

    pub fn with_conjugator(
        structure: JordanStructure,
        conj: Conjugator,
        m_values: Vec<u64>,
    ) -> Result<Self> {
        let p = match conj {
            Conjugator::Identity => None,
            Conjugator::Random(seed) => Some(random_conditioned_p(structure.dim(), seed)?),
        };
        Self::new(structure, p, m_values)
    }

    fn build(structure: JordanStructure, p: Option<Matrix>, m_values: Vec<u64>) -> Result<Self> {
        let n = structure.dim();
        if m_values.is_empty() || m_values[0] == 0 {
            return Err(Error::InvalidArgument(
                "m values must be positive and non-empty".into(),
            ));
        }
        if m_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "m values must be strictly increasing".into(),
            ));
        }
        let p = match p {
            None => None,
            Some(p) => {
                if p.rows() != n || p.cols() != n {
                    return Err(Error::DimensionMismatch {
                        op: "conjugator",
                        left: (n, n),
                        right: (p.rows(), p.cols()),
                    });
                }
                Some(checked_inverse(p)?)
            }
        };
        Ok(Self {
            structure,
            p,
            m_values,
        })
    }

    pub fn structure(&self) -> &JordanStructure {
        &self.structure
    }

    pub fn m_values(&self) -> &[u64] {
        &self.m_values
    }

    pub fn p(&self) -> Option<&Matrix> {
        self.p.as_ref().map(|(p, _)| p)
    }

    /// `‖P‖_F · ‖P⁻¹‖_F`, which is `n` for the identity.
    pub fn kappa_f(&self) -> f64 {
        match &self.p {
            None => self.structure.dim() as f64,
            Some((p, pi)) => p.frobenius_norm() * pi.frobenius_norm(),
        }
    }

    fn conjugate(&self, x: Matrix) -> Matrix {
        match &self.p {
            None => x,
            Some((p, pi)) => p
                .matmul(&x)
                .and_then(|y| y.matmul(pi))
                .expect("square factors"),
        }
    }

    /// `A = P·J·P⁻¹`
    pub fn limit(&self) -> Matrix {
        self.conjugate(realize_unchecked(&self.structure))
    }
}

/// Inverts `p` after checking full numerical rank, and enforces
/// `‖P·P⁻¹ − I‖_F ≤ 1e-10·n`.
fn checked_inverse(p: Matrix) -> Result<(Matrix, Matrix)> {
    let n = p.require_square()?;
    if numerical_rank(&p, RankTolerance::Auto)? < n {
        return Err(Error::Singular);
    }
    let pi = inverse(&p)?;
    let residual = p.matmul(&pi)?.sub(&Matrix::identity(n))?.frobenius_norm();
    if residual > 1e-10 * n as f64 {
        return Err(Error::Singular);
    }
    Ok((p, pi))
}

/// Gaussian `n×n` matrix with `κ₂ ≤ 1e3`, resampling on successive streams
/// of `seed` until one qualifies.
pub fn random_conditioned_p(n: usize, seed: u64) -> Result<Matrix> {
    for attempt in 0..MAX_RESAMPLES {
        let p = gaussian_matrix(n, &mut NormalStream::new(seed, attempt));
        match condition_number(&p) {
            Ok(k) if k <= MAX_CONDITION => return Ok(p),
            Ok(_) | Err(Error::Singular) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::InvalidArgument(format!(
        "no conditioned {n}x{n} matrix found in {MAX_RESAMPLES} draws for seed {seed}"
    )))
}

/// `J + D_m` before conjugation.
pub fn perturbed_jordan_form(structure: &JordanStructure, m: u64) -> Matrix {
    let mut a = realize_unchecked(structure);
    let m = m as f64;
    let mut at = 0;
    for g in &structure.pairs {
        for (j, &l) in g.sizes.iter().enumerate() {
            let j = (j + 1) as f64;
            for p in 0..l {
                let x = 1.0 / ((p + 1) as f64 * m + j);
                let r = at + 2 * p;
                a[(r, r)] += x;
                a[(r + 1, r + 1)] += x;
                a[(r, r + 1)] += x;
                a[(r + 1, r)] -= x;
            }
            at += 2 * l;
        }
    }
    for g in &structure.reals {
        for (j, &k) in g.sizes.iter().enumerate() {
            let j = (j + 1) as f64;
            for p in 0..k {
                a[(at + p, at + p)] += 1.0 / ((p + 1) as f64 * m + j);
            }
            at += k;
        }
    }
    a
}

/// `A_m = P·(J + D_m)·P⁻¹`
pub fn perturb(plan: &PerturbationPlan, m: u64) -> Result<Matrix> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be positive".into()));
    }
    Ok(plan.conjugate(perturbed_jordan_form(&plan.structure, m)))
}

/// Eigenvalues of `A_m` read off the perturbed blocks: `c + 1/(pm+j)` for
/// real blocks and `(a + x) ± (b + x)i` with `x = 1/(pm+j)` for pair blocks.
pub fn predicted_eigenvalues(structure: &JordanStructure, m: u64) -> Vec<Complex64> {
    let m = m as f64;
    let mut out = Vec::with_capacity(structure.dim());
    for g in &structure.pairs {
        for (j, &l) in g.sizes.iter().enumerate() {
            for p in 1..=l {
                let x = 1.0 / (p as f64 * m + (j + 1) as f64);
                out.push(Complex64::new(g.a + x, g.b + x));
                out.push(Complex64::new(g.a + x, -(g.b + x)));
            }
        }
    }
    out.extend(
        predicted_real_eigenvalues(structure, m as u64)
            .into_iter()
            .map(|c| Complex64::new(c, 0.0)),
    );
    out
}

pub fn predicted_real_eigenvalues(structure: &JordanStructure, m: u64) -> Vec<f64> {
    let m = m as f64;
    let mut out = Vec::with_capacity(structure.real_dim());
    for g in &structure.reals {
        for (j, &k) in g.sizes.iter().enumerate() {
            for p in 1..=k {
                out.push(g.c + 1.0 / (p as f64 * m + (j + 1) as f64));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub m: u64,
    pub real_count: Option<usize>,
    pub schur_real_count: Option<usize>,
    pub boundary: Option<bool>,
    pub min_eigengap: Option<f64>,
    pub signature: Option<BundleSignature>,
    pub distance_to_limit: f64,
    /// `κ_F(P)·√n/m`
    pub bound: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub n: usize,
    pub expected_signature: BundleSignature,
    pub expected_real_count: usize,
    pub kappa_f: f64,
    pub entries: Vec<SequenceEntry>,
    /// Smallest grid value from which every later entry is non-boundary.
    pub onset: Option<u64>,
    pub bounds_hold: bool,
    /// Schur real count never below `Σk`, with equality at the last `m`.
    pub real_lower_bound_holds: bool,
    pub passed: bool,
}

fn entry(plan: &PerturbationPlan, limit: &Matrix, m: u64) -> SequenceEntry {
    let n = plan.structure.dim();
    let bound = plan.kappa_f() * (n as f64).sqrt() / m as f64;
    let am = perturb(plan, m).expect("m is positive");
    let distance_to_limit = am.sub(limit).expect("same shape").frobenius_norm();
    let mut e = SequenceEntry {
        m,
        real_count: None,
        schur_real_count: None,
        boundary: None,
        min_eigengap: None,
        signature: None,
        distance_to_limit,
        bound,
        error: None,
    };
    match classify(&am) {
        Ok(c) => {
            e.real_count = Some(c.real_count);
            e.boundary = Some(c.boundary);
            e.min_eigengap = c.min_eigengap.is_finite().then_some(c.min_eigengap);
            e.signature = c.signature;
        }
        Err(err) => e.error = Some(err.to_string()),
    }
    match schur_spectrum(&am, DEFAULT_MAX_SWEEPS) {
        Ok(s) => e.schur_real_count = Some(s.real_count()),
        Err(err) => e.error = e.error.or(Some(err.to_string())),
    }
    e
}

/// Classifies `A_m` for every `m` in the plan's grid.
///
/// Failures at one `m` are recorded in that entry. The report passes when
/// the last entry is non-boundary with signature `(n, Σℓ)` and real count
/// `Σk`.
pub fn verify_sequence(plan: &PerturbationPlan) -> Result<SequenceReport> {
    let js = &plan.structure;
    let n = js.dim();
    if n > MAX_SEQUENCE_DIM {
        return Err(Error::DimensionCap {
            n,
            cap: MAX_SEQUENCE_DIM,
        });
    }
    let expected_signature = BundleSignature::new(n, js.pair_dim())?;
    let expected_real_count = js.real_dim();
    let limit = plan.limit();
    let entries: Vec<SequenceEntry> = plan
        .m_values
        .par_iter()
        .map(|&m| entry(plan, &limit, m))
        .collect();

    let onset = entries
        .iter()
        .rposition(|e| e.boundary != Some(false))
        .map_or(Some(0), |i| Some(i + 1))
        .and_then(|i| entries.get(i))
        .map(|e| e.m);
    let bounds_hold = entries.iter().all(|e| e.distance_to_limit <= e.bound);
    let last = entries.last().expect("grid is non-empty");
    let real_lower_bound_holds = entries
        .iter()
        .all(|e| e.schur_real_count.is_some_and(|k| k >= expected_real_count))
        && last.schur_real_count == Some(expected_real_count);
    let passed = last.boundary == Some(false)
        && last.signature == Some(expected_signature)
        && last.real_count == Some(expected_real_count);

    Ok(SequenceReport {
        n,
        expected_signature,
        expected_real_count,
        kappa_f: plan.kappa_f(),
        entries,
        onset,
        bounds_hold,
        real_lower_bound_holds,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::{generic_structure, PairGroup, RealGroup};

    fn reals(c: f64, sizes: &[usize]) -> JordanStructure {
        JordanStructure {
            pairs: vec![],
            reals: vec![RealGroup {
                c,
                sizes: sizes.to_vec(),
            }],
        }
    }

    fn pairs(a: f64, b: f64, sizes: &[usize]) -> JordanStructure {
        JordanStructure {
            pairs: vec![PairGroup {
                a,
                b,
                sizes: sizes.to_vec(),
            }],
            reals: vec![],
        }
    }

    fn grid() -> Vec<u64> {
        DEFAULT_M_GRID.to_vec()
    }

    #[test]
    fn jordan_two_block_example() {
        let plan = PerturbationPlan::new(reals(0.0, &[2]), None, grid()).unwrap();
        for m in [1u64, 7, 1000] {
            let mf = m as f64;
            let expected =
                Matrix::from_rows(&[&[1.0 / (mf + 1.0), 1.0], &[0.0, 1.0 / (2.0 * mf + 1.0)]]);
            assert_eq!(perturb(&plan, m).unwrap(), expected);
        }
    }

    #[test]
    fn rotation_block_example() {
        let plan = PerturbationPlan::new(pairs(0.0, 1.0, &[1]), None, grid()).unwrap();
        let m = 9.0;
        let x = 1.0 / (m + 1.0);
        let expected = Matrix::from_rows(&[&[x, 1.0 + x], &[-1.0 - x, x]]);
        assert_eq!(perturb(&plan, 9).unwrap(), expected);
    }

    #[test]
    fn block_index_within_group_shifts_the_denominator() {
        let a = perturbed_jordan_form(&reals(2.0, &[1, 1, 2]), 10);
        assert_eq!(a[(0, 0)], 2.0 + 1.0 / 11.0);
        assert_eq!(a[(1, 1)], 2.0 + 1.0 / 12.0);
        assert_eq!(a[(2, 2)], 2.0 + 1.0 / 13.0);
        assert_eq!(a[(3, 3)], 2.0 + 1.0 / 23.0);
        assert_eq!(a[(2, 3)], 1.0);
    }

    #[test]
    fn plan_validation() {
        assert!(PerturbationPlan::new(reals(0.0, &[1]), None, vec![10, 10]).is_err());
        assert!(PerturbationPlan::new(reals(0.0, &[1]), None, vec![0, 10]).is_err());
        assert!(PerturbationPlan::new(reals(0.0, &[1]), None, vec![]).is_err());
        let singular = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert_eq!(
            PerturbationPlan::new(reals(0.0, &[2]), Some(singular), grid()).unwrap_err(),
            Error::Singular
        );
        assert!(matches!(
            PerturbationPlan::new(reals(0.0, &[2]), Some(Matrix::identity(3)), grid()),
            Err(Error::DimensionMismatch { .. })
        ));
        let plan = PerturbationPlan::new(reals(0.0, &[2]), None, grid()).unwrap();
        assert!(perturb(&plan, 0).is_err());
    }

    #[test]
    fn conjugator_parsing() {
        assert_eq!(
            "identity".parse::<Conjugator>().unwrap(),
            Conjugator::Identity
        );
        assert_eq!(
            "random:17".parse::<Conjugator>().unwrap(),
            Conjugator::Random(17)
        );
        assert!("random:x".parse::<Conjugator>().is_err());
        assert!("ones".parse::<Conjugator>().is_err());
    }

    #[test]
    fn random_p_is_conditioned_and_deterministic() {
        for n in [1, 3, 8, 12] {
            let p = random_conditioned_p(n, 5).unwrap();
            assert!(condition_number(&p).unwrap() <= MAX_CONDITION);
            assert_eq!(p, random_conditioned_p(n, 5).unwrap());
        }
    }

    #[test]
    fn mixed_structure_example() {
        let js = JordanStructure {
            pairs: vec![PairGroup {
                a: 0.0,
                b: 1.0,
                sizes: vec![2],
            }],
            reals: vec![RealGroup {
                c: 1.0,
                sizes: vec![3],
            }],
        };
        let plan = PerturbationPlan::new(js, None, vec![10, 100, 1000]).unwrap();
        let report = verify_sequence(&plan).unwrap();
        let last = report.entries.last().unwrap();
        assert_eq!(last.signature, Some(BundleSignature { n: 7, t: 2 }));
        assert_eq!(last.real_count, Some(3));
        assert_eq!(last.boundary, Some(false));
        assert!(report.passed);
        assert!(report.bounds_hold);
        assert!(report.real_lower_bound_holds);
    }

    #[test]
    fn generic_structure_keeps_its_signature() {
        let js = generic_structure(6, 2, 11).unwrap();
        let plan = PerturbationPlan::new(js, None, grid()).unwrap();
        let report = verify_sequence(&plan).unwrap();
        for e in &report.entries {
            assert_eq!(
                e.signature,
                Some(BundleSignature { n: 6, t: 2 }),
                "m = {}",
                e.m
            );
        }
        assert_eq!(report.onset, Some(10));
    }

    #[test]
    fn shared_eigenvalue_groups_are_separated_by_block_index() {
        // two 1×1 blocks at the same c inside one group
        let plan = PerturbationPlan::new(reals(0.5, &[1, 1]), None, grid()).unwrap();
        let report = verify_sequence(&plan).unwrap();
        for e in &report.entries {
            let m = e.m as f64;
            let gap = 1.0 / ((m + 1.0) * (m + 2.0));
            let got = e.min_eigengap.unwrap();
            assert!(
                (got - gap).abs() <= 1e-12 * gap.max(1e-4),
                "m {m}: {got} vs {gap}"
            );
            assert!(got > 0.0);
        }
        assert!(report.passed);

        // two groups forced onto the same c both get j = 1, so they coincide
        let forced = JordanStructure {
            pairs: vec![],
            reals: vec![
                RealGroup {
                    c: 0.5,
                    sizes: vec![1],
                },
                RealGroup {
                    c: 0.5,
                    sizes: vec![1],
                },
            ],
        };
        assert!(PerturbationPlan::new(forced.clone(), None, grid()).is_err());
        let plan = PerturbationPlan::new_unchecked(forced, None, grid()).unwrap();
        let report = verify_sequence(&plan).unwrap();
        assert!(report.entries.iter().all(|e| e.boundary == Some(true)));
        assert!(!report.passed);
        assert_eq!(report.onset, None);
    }

    #[test]
    fn identity_plan_eigenvalues_match_prediction() {
        use crate::schur::{eigenvalues, spectrum_distance};
        for seed in 0..30 {
            let js = JordanStructure::random(8, seed);
            for m in DEFAULT_M_GRID {
                let plan = PerturbationPlan::new(js.clone(), None, vec![m]).unwrap();
                let ev = eigenvalues(&perturb(&plan, m).unwrap()).unwrap();
                let predicted = predicted_eigenvalues(&js, m);
                assert!(
                    spectrum_distance(&ev, &predicted) <= 1e-10,
                    "{js:?} at m={m}"
                );
            }
        }
    }

    #[test]
    fn distance_to_limit_shrinks_within_bound() {
        for seed in 0..10 {
            let js = JordanStructure::random(6, seed);
            let plan =
                PerturbationPlan::with_conjugator(js, Conjugator::Random(seed), grid()).unwrap();
            let report = verify_sequence(&plan).unwrap();
            assert!(report.bounds_hold);
            let d: Vec<f64> = report.entries.iter().map(|e| e.distance_to_limit).collect();
            assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
        }
    }

    #[test]
    fn dimension_cap() {
        let plan = PerturbationPlan::new(reals(0.0, &[31]), None, vec![10]).unwrap();
        assert!(matches!(
            verify_sequence(&plan),
            Err(Error::DimensionCap { .. })
        ));
    }
}
