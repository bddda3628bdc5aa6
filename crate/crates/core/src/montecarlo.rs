//! Monte Carlo census of real-eigenvalue counts over Gaussian ensembles.
//!
//! Trial `i` draws its matrix from stream `i` of the run seed, so a report
//! depends only on the [`EnsembleSpec`] and never on the worker count.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::census::{count_real_ratio, CountMethod};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{gaussian_matrix, NormalStream};
use crate::schur::{schur_spectrum, DEFAULT_MAX_SWEEPS};

/// Reference probabilities `p_{8,k}`.
pub const REFERENCE_N8: [(usize, f64); 5] = [
    (8, 6.10e-5),
    (6, 2.05e-2),
    (4, 3.46e-1),
    (2, 5.71e-1),
    (0, 6.21e-2),
];

/// Reference probabilities `p_{9,k}`.
pub const REFERENCE_N9: [(usize, f64); 5] = [
    (9, 3.81e-6),
    (7, 2.56e-3),
    (5, 1.46e-1),
    (3, 5.93e-1),
    (1, 2.57e-1),
];

/// Reference ratios for `randn(15) + diag(2, 4, …, 30)`.
pub const REFERENCE_N15_DIAG_EVEN: [(usize, f64); 8] = [
    (15, 1.12e-2),
    (13, 9.17e-2),
    (11, 2.70e-1),
    (9, 3.52e-1),
    (7, 2.13e-1),
    (5, 5.66e-2),
    (3, 5.48e-3),
    (1, 1.21e-4),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Shift {
    #[default]
    None,
    /// Adds `diag(2, 4, …, 2n)`.
    DiagEven,
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shift::None => "none",
            Shift::DiagEven => "diag-even",
        })
    }
}

impl FromStr for Shift {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Shift::None),
            "diag-even" => Ok(Shift::DiagEven),
            other => Err(Error::InvalidArgument(format!(
                "unknown shift {other:?} (none|diag-even)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub trials: u64,
    pub shift: Shift,
    pub seed: u64,
    pub workers: usize,
    #[serde(default)]
    pub method: CountMethod,
}

impl EnsembleSpec {
    pub fn new(n: usize, trials: u64, seed: u64) -> Self {
        Self {
            n,
            trials,
            shift: Shift::None,
            seed,
            workers: 1,
            method: CountMethod::SchurBlocks,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("workers must be positive".into()));
        }
        Ok(())
    }

    /// The matrix for trial `index`.
    pub fn draw(&self, index: u64) -> Matrix {
        let mut a = gaussian_matrix(self.n, &mut NormalStream::new(self.seed, index));
        if self.shift == Shift::DiagEven {
            for i in 0..self.n {
                a[(i, i)] += 2.0 * (i + 1) as f64;
            }
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub spec: EnsembleSpec,
    pub counts: BTreeMap<usize, u64>,
    pub ratios: BTreeMap<usize, f64>,
    pub mean_real: f64,
    pub reference: Option<BTreeMap<usize, f64>>,
    pub z_scores: Option<BTreeMap<usize, f64>>,
    pub boundary_count: u64,
    pub failures: u64,
}

/// Reference table for an ensemble, if one is embedded.
pub fn reference_for(n: usize, shift: Shift) -> Option<BTreeMap<usize, f64>> {
    let table: &[(usize, f64)] = match (n, shift) {
        (8, Shift::None) => &REFERENCE_N8,
        (9, Shift::None) => &REFERENCE_N9,
        (15, Shift::DiagEven) => &REFERENCE_N15_DIAG_EVEN,
        _ => return None,
    };
    Some(table.iter().copied().collect())
}

/// Binomial z-score of an observed frequency against probability `p`.
pub fn z_score(count: u64, trials: u64, p: f64) -> f64 {
    let t = trials as f64;
    (count as f64 / t - p) * t.sqrt() / (p * (1.0 - p)).sqrt()
}

#[derive(Debug, Clone, Default)]
struct Tally {
    hist: Vec<u64>,
    boundary: u64,
    failures: u64,
}

impl Tally {
    fn new(n: usize) -> Self {
        Self {
            hist: vec![0; n + 1],
            ..Self::default()
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.hist.iter_mut().zip(other.hist) {
            *a += b;
        }
        self.boundary += other.boundary;
        self.failures += other.failures;
        self
    }
}

fn run_range(spec: &EnsembleSpec, range: std::ops::Range<u64>) -> Tally {
    let mut tally = Tally::new(spec.n);
    for i in range {
        let a = spec.draw(i);
        let counted = match spec.method {
            CountMethod::SchurBlocks => {
                schur_spectrum(&a, DEFAULT_MAX_SWEEPS).map(|s| s.real_count())
            }
            CountMethod::RatioTolerance => count_real_ratio(&a),
        };
        match counted {
            Ok(k) => tally.hist[k] += 1,
            Err(Error::SchurNoConvergence { .. }) | Err(Error::SvdNoConvergence { .. }) => {
                tally.failures += 1
            }
            // ratio test undefined (zero eigenvalue or singular matrix)
            Err(_) => tally.boundary += 1,
        }
    }
    tally
}

pub fn run_census(spec: &EnsembleSpec) -> Result<CensusReport> {
    spec.validate()?;
    let workers = spec.workers as u64;
    let chunk = spec.trials.div_ceil(workers);
    let ranges: Vec<_> = (0..workers)
        .map(|w| (w * chunk).min(spec.trials)..((w + 1) * chunk).min(spec.trials))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let tally = pool.install(|| {
        ranges
            .into_par_iter()
            .map(|r| run_range(spec, r))
            .reduce(|| Tally::new(spec.n), Tally::merge)
    });
    log::debug!("census n={} trials={} done", spec.n, spec.trials);
    Ok(assemble(spec, tally))
}

fn assemble(spec: &EnsembleSpec, tally: Tally) -> CensusReport {
    let t = spec.trials;
    let counts: BTreeMap<usize, u64> = tally
        .hist
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0)
        .map(|(k, &f)| (k, f))
        .collect();
    for &k in counts.keys() {
        assert_eq!(
            k % 2,
            spec.n % 2,
            "real count {k} has the wrong parity for n = {}",
            spec.n
        );
    }
    let counted: u64 = counts.values().sum();
    assert_eq!(counted + tally.boundary + tally.failures, t);

    let ratios = counts
        .iter()
        .map(|(&k, &f)| (k, f as f64 / t as f64))
        .collect();
    let mean_real = if counted == 0 {
        f64::NAN
    } else {
        counts
            .iter()
            .map(|(&k, &f)| k as f64 * f as f64)
            .sum::<f64>()
            / counted as f64
    };
    let reference = reference_for(spec.n, spec.shift);
    let z_scores = reference.as_ref().map(|r| {
        r.iter()
            .map(|(&k, &p)| (k, z_score(counts.get(&k).copied().unwrap_or(0), t, p)))
            .collect()
    });
    CensusReport {
        spec: *spec,
        counts,
        ratios,
        mean_real,
        reference,
        z_scores,
        boundary_count: tally.boundary,
        failures: tally.failures,
    }
}

/// Monte Carlo estimate of the expected number of real eigenvalues.
pub fn expected_real(spec: &EnsembleSpec) -> Result<f64> {
    Ok(run_census(spec)?.mean_real)
}

impl CensusReport {
    /// Every `k` with the parity of `n`, descending.
    fn rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=self.spec.n).rev().filter(|k| k % 2 == self.spec.n % 2)
    }

    fn frequency(&self, k: usize) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    /// CSV with columns `k,F,F/T,p_ref,z`; the last two are empty without a
    /// reference.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        w.write_record(["k", "F", "F/T", "p_ref", "z"])
            .map_err(io)?;
        for k in self.rows() {
            let f = self.frequency(k);
            let p = self.reference.as_ref().and_then(|r| r.get(&k));
            let z = self.z_scores.as_ref().and_then(|z| z.get(&k));
            w.write_record([
                k.to_string(),
                f.to_string(),
                format!("{:e}", f as f64 / self.spec.trials as f64),
                p.map_or(String::new(), |p| format!("{p:e}")),
                z.map_or(String::new(), |z| format!("{z:.4}")),
            ])
            .map_err(io)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Aligned text table with columns `k`, `F`, `F/T` (and reference
    /// columns when available).
    pub fn to_pretty(&self) -> String {
        let mut s = String::new();
        let has_ref = self.reference.is_some();
        let _ = write!(s, "{:>4} {:>10} {:>12}", "k", "F", "F/T");
        if has_ref {
            let _ = write!(s, " {:>12} {:>8}", "p_ref", "z");
        }
        s.push('\n');
        for k in self.rows() {
            let f = self.frequency(k);
            let _ = write!(
                s,
                "{k:>4} {f:>10} {:>12.4e}",
                f as f64 / self.spec.trials as f64
            );
            if has_ref {
                match (
                    self.reference.as_ref().and_then(|r| r.get(&k)),
                    self.z_scores.as_ref().and_then(|z| z.get(&k)),
                ) {
                    (Some(p), Some(z)) => {
                        let _ = write!(s, " {p:>12.3e} {z:>8.2}");
                    }
                    _ => {
                        let _ = write!(s, " {:>12} {:>8}", "-", "-");
                    }
                }
            }
            s.push('\n');
        }
        let _ = writeln!(
            s,
            "trials {}  mean_real {:.4}  boundary {}  failures {}",
            self.spec.trials, self.mean_real, self.boundary_count, self.failures
        );
        s
    }
}
