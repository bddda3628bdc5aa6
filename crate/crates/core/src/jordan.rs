//! Real Jordan structures: symbolic block descriptions, their exact
//! matrix realizations, and orbit/bundle codimensions.
//!
//! A structure lists conjugate-pair groups `(a, b > 0, [ℓ₁, ℓ₂, …])`, each
//! contributing blocks `C_ℓ(a, b)`, and real groups `(c, [k₁, k₂, …])`,
//! each contributing blocks `J_k(c)`. The realization is block diagonal,
//! pair groups first, in list order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{singular_values, Matrix, RankTolerance};
use crate::rng::NormalStream;

/// Largest matrix order accepted by [`commutant_dim_oracle`]; the kernel
/// computation works on an `n² × n²` operator.
pub const ORACLE_DIM_CAP: usize = 14;

/// Minimum ratio between the smallest accepted and the largest rejected
/// singular value of the commutator operator.
pub const RANK_GAP: f64 = 1e3;

/// Minimum separation between eigenvalue parameters drawn by
/// [`generic_structure`].
pub const GENERIC_SEPARATION: f64 = 1e-3;

/// Nonce used for structure-generation streams, kept away from the trial
/// indices used by the census.
const STRUCTURE_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairGroup {
    pub a: f64,
    pub b: f64,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealGroup {
    pub c: f64,
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct JordanStructure {
    #[serde(default)]
    pub pairs: Vec<PairGroup>,
    #[serde(default)]
    pub reals: Vec<RealGroup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodimMethod {
    Oracle,
    #[default]
    ClosedForm,
}

impl std::str::FromStr for CodimMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(CodimMethod::Oracle),
            "closed" | "closed_form" => Ok(CodimMethod::ClosedForm),
            other => Err(Error::InvalidArgument(format!(
                "unknown codim method {other:?} (oracle|closed)"
            ))),
        }
    }
}

impl JordanStructure {
    pub fn from_json(s: &str) -> Result<Self> {
        let js: JordanStructure = serde_json::from_str(s).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        js.validate()?;
        Ok(js)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("structure serializes")
    }

    /// Total matrix order `Σ 2ℓ + Σ k`.
    pub fn dim(&self) -> usize {
        2 * self.pair_dim() + self.real_dim()
    }

    /// `Σ ℓ` over all pair blocks: the number of conjugate pairs.
    pub fn pair_dim(&self) -> usize {
        self.pairs.iter().flat_map(|g| &g.sizes).sum()
    }

    /// `Σ k` over all real blocks: the number of real eigenvalues.
    pub fn real_dim(&self) -> usize {
        self.reals.iter().flat_map(|g| &g.sizes).sum()
    }

    /// Number of distinct eigenvalues, `2r + s`.
    pub fn distinct_eigenvalues(&self) -> usize {
        2 * self.pairs.len() + self.reals.len()
    }

    /// Checks block sizes, finiteness and `b > 0`, but not distinctness.
    pub fn validate_shape(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidStructure(m));
        for (i, g) in self.pairs.iter().enumerate() {
            if !(g.a.is_finite() && g.b.is_finite()) {
                return bad(format!("pair group {i} has non-finite parameters"));
            }
            if g.b <= 0.0 {
                return bad(format!("pair group {i} has b = {} (must be > 0)", g.b));
            }
            if g.sizes.is_empty() || g.sizes.contains(&0) {
                return bad(format!("pair group {i} needs positive block sizes"));
            }
        }
        for (i, g) in self.reals.iter().enumerate() {
            if !g.c.is_finite() {
                return bad(format!("real group {i} has non-finite c"));
            }
            if g.sizes.is_empty() || g.sizes.contains(&0) {
                return bad(format!("real group {i} needs positive block sizes"));
            }
        }
        if self.dim() == 0 {
            return bad("empty structure".into());
        }
        Ok(())
    }

    /// Full validation: shape plus pairwise distinct eigenvalue groups.
    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        for i in 0..self.pairs.len() {
            for k in i + 1..self.pairs.len() {
                let (p, q) = (&self.pairs[i], &self.pairs[k]);
                if p.a == q.a && p.b == q.b {
                    return Err(Error::InvalidStructure(format!(
                        "pair groups {i} and {k} share (a, b)"
                    )));
                }
            }
        }
        for i in 0..self.reals.len() {
            for k in i + 1..self.reals.len() {
                if self.reals[i].c == self.reals[k].c {
                    return Err(Error::InvalidStructure(format!(
                        "real groups {i} and {k} share c"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Random structure of order `1..=max_dim` with random block partitions.
    ///
    /// Eigenvalue parameters are kept at least 0.25 apart (and `b ≥ 0.25`)
    /// so the realization's commutator operator has a clean rank gap.
    pub fn random(max_dim: usize, seed: u64) -> Self {
        assert!(max_dim >= 1);
        const SEP: f64 = 0.25;
        let mut rng = NormalStream::new(seed, STRUCTURE_STREAM);
        let target = 1 + rng.below(max_dim);
        let mut remaining = target;
        let mut js = JordanStructure::default();

        while remaining > 0 {
            let as_pair = remaining >= 2 && rng.below(2) == 0;
            if as_pair {
                let budget = 1 + rng.below(remaining / 2);
                let sizes = random_partition(budget, &mut rng);
                let (a, b) = loop {
                    let a = -3.0 + 6.0 * rng.uniform();
                    let b = SEP + (2.0 - SEP) * rng.uniform();
                    if js.pairs.iter().all(|g| (g.a - a).hypot(g.b - b) >= SEP) {
                        break (a, b);
                    }
                };
                js.pairs.push(PairGroup { a, b, sizes });
                remaining -= 2 * budget;
            } else {
                let budget = 1 + rng.below(remaining);
                let sizes = random_partition(budget, &mut rng);
                let c = loop {
                    let c = -3.0 + 6.0 * rng.uniform();
                    if js.reals.iter().all(|g| (g.c - c).abs() >= SEP) {
                        break c;
                    }
                };
                js.reals.push(RealGroup { c, sizes });
                remaining -= budget;
            }
        }
        js
    }
}

/// Random composition of `total` into positive parts, sorted descending.
fn random_partition(total: usize, rng: &mut NormalStream) -> Vec<usize> {
    let mut parts = Vec::new();
    let mut left = total;
    while left > 0 {
        let p = 1 + rng.below(left);
        parts.push(p);
        left -= p;
    }
    parts.sort_unstable_by(|x, y| y.cmp(x));
    parts
}

/// `C(a, b) = [[a, b], [-b, a]]`
pub fn pair_block(a: f64, b: f64) -> Matrix {
    Matrix::from_rows(&[&[a, b], &[-b, a]])
}

/// `J_k(c)`: `c` on the diagonal, ones on the superdiagonal.
pub fn jordan_block(k: usize, c: f64) -> Matrix {
    let mut m = Matrix::zeros(k, k);
    for i in 0..k {
        m[(i, i)] = c;
        if i + 1 < k {
            m[(i, i + 1)] = 1.0;
        }
    }
    m
}

/// `C_ℓ(a, b)`: `C(a, b)` repeated on the 2×2 diagonal, `I₂` on the block
/// superdiagonal.
pub fn real_jordan_pair_block(l: usize, a: f64, b: f64) -> Matrix {
    let mut m = Matrix::zeros(2 * l, 2 * l);
    let c = pair_block(a, b);
    for p in 0..l {
        m.set_block(2 * p, 2 * p, &c);
        if p + 1 < l {
            m[(2 * p, 2 * p + 2)] = 1.0;
            m[(2 * p + 1, 2 * p + 3)] = 1.0;
        }
    }
    m
}

/// Block-diagonal realization of a structure.
pub fn realize(js: &JordanStructure) -> Result<Matrix> {
    js.validate()?;
    Ok(realize_unchecked(js))
}

pub(crate) fn realize_unchecked(js: &JordanStructure) -> Matrix {
    let mut blocks = Vec::new();
    for g in &js.pairs {
        for &l in &g.sizes {
            blocks.push(real_jordan_pair_block(l, g.a, g.b));
        }
    }
    for g in &js.reals {
        for &k in &g.sizes {
            blocks.push(jordan_block(k, g.c));
        }
    }
    Matrix::block_diag(&blocks)
}

/// Representative of the generic bundle with `t` conjugate pairs and
/// `n − 2t` real eigenvalues, all simple. Parameters are drawn from `seed`
/// with pairwise separation at least [`GENERIC_SEPARATION`].
pub fn generic_structure(n: usize, t: usize, seed: u64) -> Result<JordanStructure> {
    if n == 0 || t > n / 2 {
        return Err(Error::InvalidArgument(format!(
            "no generic bundle (n={n}, t={t})"
        )));
    }
    let mut rng = NormalStream::new(seed, STRUCTURE_STREAM);
    let mut js = JordanStructure::default();
    while js.pairs.len() < t {
        let a = -2.0 + 4.0 * rng.uniform();
        let b = GENERIC_SEPARATION + (2.0 - GENERIC_SEPARATION) * rng.uniform();
        if js
            .pairs
            .iter()
            .all(|g| (g.a - a).hypot(g.b - b) >= GENERIC_SEPARATION)
        {
            js.pairs.push(PairGroup {
                a,
                b,
                sizes: vec![1],
            });
        }
    }
    while js.reals.len() < n - 2 * t {
        let c = -3.0 + 6.0 * rng.uniform();
        if js
            .reals
            .iter()
            .all(|g| (g.c - c).abs() >= GENERIC_SEPARATION)
        {
            js.reals.push(RealGroup { c, sizes: vec![1] });
        }
    }
    Ok(js)
}

/// `dim {X : XA = AX}` computed as the nullity of `Iₙ ⊗ A − Aᵀ ⊗ Iₙ`.
///
/// The rank uses the AUTO tolerance and must be backed by a singular-value
/// gap of at least [`RANK_GAP`], otherwise the result is rejected as
/// ill-determined.
pub fn commutant_dim_oracle(a: &Matrix) -> Result<usize> {
    let n = a.require_square()?;
    if n > ORACLE_DIM_CAP {
        return Err(Error::DimensionCap {
            n,
            cap: ORACLE_DIM_CAP,
        });
    }
    let id = Matrix::identity(n);
    let op = id.kron(a)?.sub(&a.transpose().kron(&id)?)?;
    let sv = singular_values(&op)?;
    let cutoff = RankTolerance::Auto.resolve(op.rows(), op.cols(), sv[0]);
    let rank = sv.iter().filter(|&&s| s > cutoff).count();
    if rank > 0 && rank < sv.len() {
        let accepted = sv[rank - 1];
        let rejected = sv[rank];
        if rejected > 0.0 && accepted < RANK_GAP * rejected {
            return Err(Error::IllDeterminedRank {
                accepted,
                rejected,
                required: RANK_GAP,
            });
        }
    }
    Ok(n * n - rank)
}

/// Commutant dimension from the block structure:
/// `Σ_real Σ_{j,j'} min(k_j, k_j') + 2 Σ_pair Σ_{j,j'} min(ℓ_j, ℓ_j')`.
pub fn closed_form_commutant_dim(js: &JordanStructure) -> usize {
    fn min_sum(sizes: &[usize]) -> usize {
        sizes
            .iter()
            .map(|&x| sizes.iter().map(|&y| x.min(y)).sum::<usize>())
            .sum()
    }
    let real: usize = js.reals.iter().map(|g| min_sum(&g.sizes)).sum();
    let pair: usize = js.pairs.iter().map(|g| 2 * min_sum(&g.sizes)).sum();
    real + pair
}

/// Codimension of the real similarity orbit of the realization.
pub fn codim_orbit(js: &JordanStructure, method: CodimMethod) -> Result<usize> {
    js.validate()?;
    match method {
        CodimMethod::Oracle => {
            let n = js.dim();
            if n > ORACLE_DIM_CAP {
                return Err(Error::DimensionCap {
                    n,
                    cap: ORACLE_DIM_CAP,
                });
            }
            commutant_dim_oracle(&realize_unchecked(js))
        }
        CodimMethod::ClosedForm => Ok(closed_form_commutant_dim(js)),
    }
}

/// Orbit codimension minus the number of distinct eigenvalues `2r + s`.
pub fn codim_bundle(js: &JordanStructure, method: CodimMethod) -> Result<i64> {
    let orbit = codim_orbit(js, method)?;
    Ok(orbit as i64 - js.distinct_eigenvalues() as i64)
}
