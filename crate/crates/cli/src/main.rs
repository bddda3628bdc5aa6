use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use rjcf::census::{classify_with, CountMethod, DISTINCTNESS_FACTOR};
use rjcf::jordan::{
    codim_bundle, codim_orbit, CodimMethod, JordanStructure, ORACLE_DIM_CAP, RANK_GAP,
};
use rjcf::linalg::SVD_MAX_SWEEPS;
use rjcf::montecarlo::{run_census, EnsembleSpec, Shift};
use rjcf::perturbation::{
    verify_sequence, Conjugator, PerturbationPlan, DEFAULT_M_GRID, MAX_CONDITION,
};
use rjcf::schur::{real_schur, DEFAULT_MAX_SWEEPS, DEFLATION_EPS};
use rjcf::{Error, Matrix};

const SEED_ENV: &str = "BUNDLE_CENSUS_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "rjcf",
    about = "Real Jordan form bundles and real-eigenvalue census",
    disable_version_flag = true
)]
struct Cli {
    /// Print version and engine parameters
    #[arg(long)]
    version: bool,

    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
    Pretty,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    Schur,
    Ratio,
}

impl From<MethodArg> for CountMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Schur => CountMethod::SchurBlocks,
            MethodArg::Ratio => CountMethod::RatioTolerance,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CodimArg {
    Oracle,
    Closed,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ShiftArg {
    None,
    DiagEven,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Real Schur form of a matrix file: block structure, eigenvalues, residuals
    Schur {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_SWEEPS)]
        max_sweeps: usize,
    },
    /// Generic-bundle signature of a matrix file
    Classify {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Schur)]
        method: MethodArg,
    },
    /// Orbit and bundle codimension of a Jordan structure (JSON)
    Codim {
        structure: PathBuf,
        #[arg(long, value_enum, default_value_t = CodimArg::Closed)]
        method: CodimArg,
    },
    /// Perturbation sequence into the generic bundle, one JSON line per m
    Perturb {
        structure: PathBuf,
        /// `identity` or `random:<seed>`
        #[arg(long = "p", default_value = "identity")]
        p: String,
        /// Comma-separated, strictly increasing
        #[arg(long, value_delimiter = ',')]
        m_grid: Option<Vec<u64>>,
    },
    /// Monte Carlo census of real-eigenvalue counts of Gaussian matrices
    Census {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = ShiftArg::None)]
        shift: ShiftArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Schur)]
        method: MethodArg,
        /// Write the report here instead of stdout; a `.csv` extension selects CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with its exit code: 1 for input errors, 2 for numerical ones.
struct Failure {
    kind: &'static str,
    message: String,
    code: u8,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            kind: e.kind(),
            message: e.to_string(),
            code: if e.is_input_error() { 1 } else { 2 },
        }
    }
}

fn input_failure(kind: &'static str, message: impl Into<String>) -> Failure {
    Failure {
        kind,
        message: message.into(),
        code: 1,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_failure("io", format!("{}: {e}", path.display())))
}

fn read_matrix(path: &Path) -> Result<Matrix, Failure> {
    Ok(read(path)?.parse::<Matrix>()?)
}

fn render<T: Serialize>(value: &T, format: Format) -> Result<String, Failure> {
    let s = match format {
        Format::Json => serde_json::to_string(value),
        Format::Pretty => serde_json::to_string_pretty(value),
        Format::Csv => {
            return Err(input_failure(
                "invalid_argument",
                "csv output is only available for census",
            ))
        }
    };
    Ok(s.expect("report serializes") + "\n")
}

#[derive(Serialize)]
struct Eigenvalue {
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct SchurOutput {
    n: usize,
    block_sizes: Vec<usize>,
    eigenvalues: Vec<Eigenvalue>,
    real_count: usize,
    orthogonality_residual: f64,
    reconstruction_residual: f64,
}

#[derive(Serialize)]
struct CodimOutput {
    orbit: usize,
    bundle: i64,
}

fn version_report() -> String {
    let v = json!({
        "name": "rjcf",
        "version": env!("CARGO_PKG_VERSION"),
        "deflation_eps": DEFLATION_EPS,
        "max_sweeps": DEFAULT_MAX_SWEEPS,
        "svd_max_sweeps": SVD_MAX_SWEEPS,
        "distinctness_factor": DISTINCTNESS_FACTOR,
        "rank_gap": RANK_GAP,
        "oracle_dim_cap": ORACLE_DIM_CAP,
        "max_conditioner_kappa": MAX_CONDITION,
        "default_m_grid": DEFAULT_M_GRID,
    });
    serde_json::to_string_pretty(&v).expect("version serializes") + "\n"
}

fn run(cli: Cli) -> Result<String, Failure> {
    if cli.version {
        return Ok(version_report());
    }
    let Some(command) = cli.command else {
        return Err(input_failure(
            "usage",
            "a subcommand is required (see --help)",
        ));
    };
    match command {
        Command::Schur { file, max_sweeps } => {
            let a = read_matrix(&file)?;
            let f = real_schur(&a, max_sweeps)?;
            let out = SchurOutput {
                n: a.rows(),
                block_sizes: f.block_sizes().to_vec(),
                eigenvalues: f
                    .eigenvalues()
                    .iter()
                    .map(|e| Eigenvalue { re: e.re, im: e.im })
                    .collect(),
                real_count: f.real_count(),
                orthogonality_residual: f.orthogonality_residual(),
                reconstruction_residual: f.reconstruction_residual(&a)?,
            };
            render(&out, cli.format)
        }
        Command::Classify { file, method } => {
            let a = read_matrix(&file)?;
            render(&classify_with(&a, method.into())?, cli.format)
        }
        Command::Codim { structure, method } => {
            let js = JordanStructure::from_json(&read(&structure)?)?;
            let method = match method {
                CodimArg::Oracle => CodimMethod::Oracle,
                CodimArg::Closed => CodimMethod::ClosedForm,
            };
            let orbit = codim_orbit(&js, method)?;
            let bundle = codim_bundle(&js, method)?;
            render(&CodimOutput { orbit, bundle }, cli.format)
        }
        Command::Perturb {
            structure,
            p,
            m_grid,
        } => {
            if cli.format == Format::Csv {
                return Err(input_failure(
                    "invalid_argument",
                    "csv output is only available for census",
                ));
            }
            let js = JordanStructure::from_json(&read(&structure)?)?;
            let conj: Conjugator = p.parse()?;
            let grid = m_grid.unwrap_or_else(|| DEFAULT_M_GRID.to_vec());
            let plan = PerturbationPlan::with_conjugator(js, conj, grid)?;
            let report = verify_sequence(&plan)?;
            let mut out = String::new();
            for e in &report.entries {
                out += &serde_json::to_string(e).expect("entry serializes");
                out.push('\n');
            }
            let summary = json!({
                "n": report.n,
                "expected_signature": report.expected_signature,
                "expected_real_count": report.expected_real_count,
                "kappa_f": report.kappa_f,
                "onset": report.onset,
                "bounds_hold": report.bounds_hold,
                "real_lower_bound_holds": report.real_lower_bound_holds,
                "passed": report.passed,
            });
            out += &serde_json::to_string(&summary).expect("summary serializes");
            out.push('\n');
            Ok(out)
        }
        Command::Census {
            n,
            trials,
            shift,
            seed,
            workers,
            method,
            out,
        } => {
            let seed = match std::env::var(SEED_ENV) {
                Ok(v) => v.trim().parse().map_err(|_| {
                    input_failure("invalid_argument", format!("{SEED_ENV}={v:?} is not a u64"))
                })?,
                Err(_) => seed,
            };
            let spec = EnsembleSpec {
                n,
                trials,
                shift: match shift {
                    ShiftArg::None => Shift::None,
                    ShiftArg::DiagEven => Shift::DiagEven,
                },
                seed,
                workers,
                method: method.into(),
            };
            log::info!("census {spec:?}");
            let report = run_census(&spec)?;
            let csv_out = cli.format == Format::Csv
                || out
                    .as_ref()
                    .is_some_and(|p| p.extension().is_some_and(|e| e == "csv"));
            let text = if csv_out {
                report.to_csv()?
            } else if cli.format == Format::Pretty {
                report.to_pretty()
            } else {
                render(&report, Format::Json)?
            };
            match out {
                Some(path) => {
                    fs::write(&path, text)
                        .map_err(|e| input_failure("io", format!("{}: {e}", path.display())))?;
                    Ok(String::new())
                }
                None => Ok(text),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = json!({ "error": { "kind": "usage", "message": e.to_string().trim_end() } });
            eprintln!("{err}");
            return ExitCode::from(1);
        }
    };

    match run(cli) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            let err = json!({ "error": { "kind": f.kind, "message": f.message } });
            eprintln!("{err}");
            ExitCode::from(f.code)
        }
    }
}
