//! Command-line driver: `verify`, `reconstruct` and `torus`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use hyperkahler_core::reconstruct::{self, ReconstructionResult, SymplecticTriple, Verdict};
use hyperkahler_core::torus::{self, lattice_harmonic_oracle, tangent_model, HolonomyTuple, OracleResult};
use hyperkahler_core::Axis;
use serde::Serialize;

use crate::io::{read_json, InputError, TripleFile, TupleFile};
use crate::num::{nums, Mat, Num};
use crate::report::{CheckRecord, Report};
use crate::suite::{run_suite, Suite, SuiteConfig, Tolerances};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "hyperkahler",
    version,
    about = "Numerical checks of hyper-Kähler linear algebra"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed for randomized trials.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance override.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the JSON report here.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the JSON report to stdout instead of the summary.
    #[arg(long, global = true)]
    pub json_only: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a randomized verification suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        /// Quaternionic dimensions, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Lattice size for the harmonic oracle, 0 to skip.
        #[arg(long, default_value_t = 6)]
        oracle_grid: usize,
    },
    /// Rebuild metric and complex structures from a symplectic triple.
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
    },
    /// Tangent model and hyper-Kähler check at a flat SU(2) connection.
    Torus {
        /// Holonomy angles, comma separated.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required_unless_present = "tuple"
        )]
        angles: Option<Vec<f64>>,
        /// Holonomy tuple as JSON.
        #[arg(long, conflicts_with = "angles")]
        tuple: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Also run the lattice harmonic oracle on an N^4 grid.
        #[arg(long, value_name = "N")]
        oracle: Option<usize>,
    },
}

/// Parses `args` and runs; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(out) => emit(&cli, out, stdout, stderr),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}

/// A finished command: JSON text, human summary, pass flag.
pub struct Outcome {
    pub json: String,
    pub summary: String,
    pub pass: bool,
}

fn emit(cli: &Cli, out: Outcome, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    if let Some(path) = &cli.out {
        if let Err(e) = fs::write(path, &out.json) {
            let _ = writeln!(stderr, "error: cannot write {}: {e}", path.display());
            return EXIT_INPUT;
        }
    }
    let text = if cli.json_only { &out.json } else { &out.summary };
    let _ = stdout.write_all(text.as_bytes());
    if out.pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn finish<C: Serialize, D: Serialize>(report: Report<C, D>, header: String) -> Outcome {
    Outcome {
        json: report.to_json(),
        summary: header + &report.human_summary(),
        pass: report.all_pass(),
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome, InputError> {
    match &cli.command {
        Command::Verify {
            suite,
            k,
            trials,
            oracle_grid,
        } => {
            let mut tolerances = Tolerances::default();
            if let Some(t) = cli.tol {
                tolerances.identity = Num(t);
            }
            let config = SuiteConfig {
                suite: *suite,
                k: k.clone(),
                seed: cli.seed,
                trials: *trials,
                tolerances,
                oracle_grid: *oracle_grid,
            };
            Ok(verify(&config)?)
        }
        Command::Reconstruct { input } => reconstruct_cmd(input, cli.tol.unwrap_or(1e-9)),
        Command::Torus {
            angles,
            tuple,
            scale,
            oracle,
        } => {
            let (phi, source) = match (angles, tuple) {
                (Some(a), _) => (torus::su2_holonomy_from_angles(a)?, TupleSource::Angles(nums(a))),
                (None, Some(path)) => (
                    read_json::<TupleFile>(path)?.to_tuple()?,
                    TupleSource::File(path.display().to_string()),
                ),
                (None, None) => unreachable!("clap requires one of --angles, --tuple"),
            };
            torus_cmd(&phi, source, *scale, *oracle, cli.tol.unwrap_or(1e-9))
        }
    }
}

pub fn verify(config: &SuiteConfig) -> Result<Outcome, InputError> {
    config.validate().map_err(|message| InputError::Field {
        field: "config".into(),
        message,
    })?;
    let rows = run_suite(config);
    let report: Report<_, ()> = Report::new("verify", config, rows, None);
    Ok(finish(report, format!("suite {} seed {}\n", config.suite, config.seed)))
}

pub fn verdict_line(v: Verdict) -> String {
    match v {
        Verdict::HyperKahler => "hyper-Kähler".into(),
        Verdict::PseudoHyperKahler { plus, minus } => {
            format!("pseudo-hyper-Kähler (signature {plus},{minus})")
        }
        Verdict::NotQuaternionic => "invalid triple".into(),
    }
}

#[derive(Serialize)]
struct ReconstructConfig {
    input: String,
    tol: Num,
}

#[derive(Serialize)]
struct ValidationOut {
    skew: Vec<Num>,
    condition: Vec<Num>,
    relations: Vec<Num>,
    tolerance: Num,
    pass: bool,
}

#[derive(Serialize)]
struct QuaternionicOut {
    square: Vec<Num>,
    triple_product: Num,
    compatibility: Option<Vec<Num>>,
    ijk_plus: Num,
    pass: bool,
}

#[derive(Serialize)]
struct ResultOut {
    metric: Mat,
    symmetric_residual: Num,
    signature: [usize; 2],
    min_eigenvalue: Num,
    positive_definite: bool,
    #[serde(rename = "I")]
    i: Mat,
    #[serde(rename = "J")]
    j: Mat,
    #[serde(rename = "K")]
    k: Mat,
    quaternionic: QuaternionicOut,
}

#[derive(Serialize)]
struct ReconstructDetails {
    verdict: String,
    dim: usize,
    validation: Option<ValidationOut>,
    result: Option<ResultOut>,
    error: Option<String>,
}

fn result_out(r: &ReconstructionResult) -> ResultOut {
    let q = &r.structures.quaternionic;
    ResultOut {
        metric: Mat(r.metric.g.clone()),
        symmetric_residual: Num(r.metric.symmetric_residual),
        signature: [r.metric.signature.0, r.metric.signature.1],
        min_eigenvalue: Num(r.metric.min_eigenvalue),
        positive_definite: r.positivity.pass,
        i: Mat(r.structures.structure(Axis::I).clone()),
        j: Mat(r.structures.structure(Axis::J).clone()),
        k: Mat(r.structures.structure(Axis::K).clone()),
        quaternionic: QuaternionicOut {
            square: nums(&q.square),
            triple_product: Num(q.triple_product),
            compatibility: q.compatibility.map(|c| nums(&c)),
            ijk_plus: Num(r.structures.ijk_plus_residual),
            pass: q.pass,
        },
    }
}

pub fn reconstruct_cmd(input: &Path, tol: f64) -> Result<Outcome, InputError> {
    let triple: SymplecticTriple = read_json::<TripleFile>(input)?.to_triple()?;
    let config = ReconstructConfig {
        input: input.display().to_string(),
        tol: Num(tol),
    };
    let mut details = ReconstructDetails {
        verdict: "invalid triple".into(),
        dim: triple.dim(),
        validation: None,
        result: None,
        error: None,
    };
    let mut checks = Vec::new();
    match reconstruct::validate_triple(&triple, tol) {
        Ok(v) => {
            checks.push(CheckRecord::new("reconstruct.validation", "e:conds", v.worst(), tol));
            details.validation = Some(ValidationOut {
                skew: nums(&v.skew),
                condition: nums(&v.condition),
                relations: nums(&v.relations),
                tolerance: Num(v.tolerance),
                pass: v.pass,
            });
        }
        Err(e) => {
            checks.push(CheckRecord::new(
                "reconstruct.validation",
                "e:conds",
                f64::INFINITY,
                tol,
            ));
            details.error = Some(e.to_string());
        }
    }
    if checks[0].pass {
        match reconstruct::reconstruct(&triple, tol) {
            Ok(r) => {
                checks.push(CheckRecord::new(
                    "reconstruct.symmetry",
                    "p:hyper-kahler",
                    r.metric.symmetric_residual,
                    reconstruct::SYMMETRY_GATE,
                ));
                checks.push(CheckRecord::new(
                    "reconstruct.quaternionic",
                    "e:quaternionic",
                    r.structures.quaternionic.worst(),
                    reconstruct::QUATERNIONIC_TOL,
                ));
                checks.push(CheckRecord::flag(
                    "reconstruct.positive_definite",
                    "e:posdef",
                    r.positivity.pass,
                ));
                details.verdict = verdict_line(r.verdict);
                details.result = Some(result_out(&r));
            }
            Err(e) => details.error = Some(e.to_string()),
        }
    }
    let header = match &details.error {
        Some(e) => format!("verdict: {}\nreason: {e}\n", details.verdict),
        None => format!("verdict: {}\n", details.verdict),
    };
    let report = Report::new("reconstruct", config, checks, Some(details));
    Ok(finish(report, header))
}

#[derive(Serialize)]
#[serde(untagged)]
pub enum TupleSource {
    Angles(Vec<Num>),
    File(String),
}

#[derive(Serialize)]
struct TorusConfig {
    holonomy: TupleSource,
    scale: Num,
    oracle: Option<usize>,
    tol: Num,
}

#[derive(Serialize)]
struct OracleOut {
    #[serde(rename = "N")]
    n: usize,
    kernel_dim: usize,
    expected_kernel_dim: usize,
    spectral_gap: Num,
    gap_ratio: Num,
    eigenvalues_head: Vec<Num>,
}

impl OracleOut {
    fn new(r: &OracleResult, expected: usize) -> Self {
        OracleOut {
            n: r.grid,
            kernel_dim: r.kernel_dim,
            expected_kernel_dim: expected,
            spectral_gap: Num(r.spectral_gap),
            gap_ratio: Num(r.gap_ratio),
            eigenvalues_head: nums(&r.eigenvalues_head),
        }
    }
}

#[derive(Serialize)]
struct TorusDetails {
    verdict: String,
    k: usize,
    r: usize,
    group_rank: usize,
    generic: bool,
    tangent_dim: usize,
    invariant_singular_values: Vec<Num>,
    volume: Num,
    l2_gram: Mat,
    metric_scale: Num,
    reconstructed_metric: Mat,
    signature: [usize; 2],
    oracle: Option<OracleOut>,
}

pub fn torus_cmd(
    phi: &HolonomyTuple,
    holonomy: TupleSource,
    scale: f64,
    oracle: Option<usize>,
    tol: f64,
) -> Result<Outcome, InputError> {
    let k = phi.len() / 4;
    if phi.len() % 4 != 0 || k == 0 {
        return Err(hyperkahler_core::Error::GeneratorCount {
            expected: 4 * k.max(1),
            found: phi.len(),
        }
        .into());
    }
    let model = tangent_model(phi, k, scale)?;
    let oracle_result = match oracle {
        Some(n) => Some(lattice_harmonic_oracle(phi, k, n)?),
        None => None,
    };
    let report = torus::moduli_hyperkahler_check(&model, tol)?;
    let rec = &report.reconstruction;
    let r = model.rank();
    let mut checks = vec![
        CheckRecord::new(
            "torus.l2_metric",
            "p:linalg",
            report.metric_residual,
            reconstruct::SYMMETRY_GATE,
        ),
        CheckRecord::flag("torus.positive_definite", "e:posdef", rec.positivity.pass),
        CheckRecord::new(
            "torus.quaternionic",
            "e:quaternionic",
            rec.structures.quaternionic.worst(),
            tol,
        ),
        CheckRecord::flag("torus.verdict", "t:moduli", rec.verdict == Verdict::HyperKahler),
    ];
    let expected = 4 * r;
    if let Some(o) = &oracle_result {
        checks.push(CheckRecord::new(
            "torus.oracle_kernel",
            "e:hodge",
            o.kernel_dim.abs_diff(expected) as f64,
            0.0,
        ));
    }
    let mut verdict = verdict_line(rec.verdict);
    if !model.generic {
        verdict.push_str(&format!(
            " (non-generic: r = {r} > rank {}, smoothness not claimed)",
            phi.group.rank
        ));
    }
    let details = TorusDetails {
        verdict: verdict.clone(),
        k,
        r,
        group_rank: phi.group.rank,
        generic: model.generic,
        tangent_dim: model.dim(),
        invariant_singular_values: nums(&model.invariant.singular_values),
        volume: Num(model.volume),
        l2_gram: Mat(model.l2_gram.clone()),
        metric_scale: Num(report.metric_scale),
        reconstructed_metric: Mat(rec.metric.g.clone()),
        signature: [rec.metric.signature.0, rec.metric.signature.1],
        oracle: oracle_result.as_ref().map(|o| OracleOut::new(o, expected)),
    };
    let mut header = format!("r = {r}, tangent dimension {}\nverdict: {verdict}\n", model.dim());
    if let Some(o) = &oracle_result {
        header.push_str(&format!(
            "oracle N = {}: kernel_dim {} (expected {expected}), gap ratio {:.3e}\n",
            o.grid, o.kernel_dim, o.gap_ratio
        ));
    }
    let config = TorusConfig {
        holonomy,
        scale: Num(scale),
        oracle,
        tol: Num(tol),
    };
    Ok(finish(Report::new("torus", config, checks, Some(details)), header))
}
