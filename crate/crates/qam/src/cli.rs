//! Batch command-line front end.
//!
//! Five subcommands cover the batch workflows:
//!
//! * `eval` — evaluate a stationary model at lag points, write a value table;
//! * `gram` — assemble the model's Gram matrix on a point set;
//! * `validate` — run the admissibility / complete-monotonicity checks on a
//!   spec and emit a JSON report;
//! * `simulate` — draw replicates of a product random field;
//! * `nonstat` — evaluate a nonstationary mixture covariance on locations.
//!
//! Exit codes: 0 on success, 1 when a validation check ran and failed, 2 on
//! usage, configuration, or numeric-infeasibility errors. Diagnostics go to
//! standard error; data goes to `--out` files or standard output. Identical
//! arguments and seed produce byte-identical data files; JSON reports add a
//! timestamp that `SOURCE_DATE_EPOCH` pins for reproducible runs. The
//! environment variable `QAM_THREADS` caps internal parallelism (0 = auto).

use crate::config::{self, Model};
use crate::error::{QamError, Result};
use crate::kernel::Kernel;
use crate::permissibility::{self, Case, CheckReport};
use crate::report::{base_report, json_f64, write_report};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "qam",
    version,
    about = "Composable covariance models: evaluate, validate, and simulate"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a stationary model at lag points and write a value table
    Eval(EvalArgs),
    /// Assemble the Gram matrix of a stationary model on a point set
    Gram(GramArgs),
    /// Run admissibility or complete-monotonicity checks on a spec
    Validate(ValidateArgs),
    /// Draw replicates of a product random field
    Simulate(SimulateArgs),
    /// Evaluate a nonstationary mixture covariance on locations
    Nonstat(NonstatArgs),
}

/// Points come from a CSV table or an inline grid, never both.
#[derive(Args)]
struct PointSource {
    /// CSV point table with a header row, one point per row
    #[arg(long)]
    points: Option<PathBuf>,
    /// Inline grid: per-axis start:stop:count, axes joined by ';'
    #[arg(long)]
    grid: Option<String>,
}

impl PointSource {
    fn load(&self) -> Result<Vec<Vec<f64>>> {
        match (&self.points, &self.grid) {
            (Some(path), None) => config::read_points(path),
            (None, Some(text)) => config::parse_grid(text),
            (Some(_), Some(_)) => Err(QamError::Config(
                "--points and --grid are mutually exclusive".into(),
            )),
            (None, None) => Err(QamError::Config(
                "one of --points or --grid is required".into(),
            )),
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Model spec JSON
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    source: PointSource,
    /// Output CSV (standard output when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GramArgs {
    /// Model spec JSON
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    source: PointSource,
    /// Output CSV (standard output when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an eigenvalue report JSON here
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Model spec JSON
    #[arg(long)]
    spec: PathBuf,
    /// Admissibility case for compositions: a (mixture variogram),
    /// b (one-dimensional profile), or c (log-concavity)
    #[arg(long, default_value = "b")]
    case: String,
    /// Highest derivative order for the complete-monotonicity check
    #[arg(long, default_value_t = 4)]
    max_order: usize,
    /// Report JSON path (standard output when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Product-field spec JSON
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    source: PointSource,
    /// Number of independent replicates
    #[arg(long)]
    replicates: usize,
    /// Base seed; replicate r and process i use stream r·256+i
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV of replicate rows (standard output when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Point-index pairs "i:j,k:l" whose product moments are summarized
    #[arg(long)]
    summary_pairs: Option<String>,
    /// Summary report JSON path (standard output when omitted)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct NonstatArgs {
    /// Mixture spec JSON
    #[arg(long)]
    spec: PathBuf,
    #[command(flatten)]
    source: PointSource,
    /// Engine: quadrature | closed-form
    #[arg(long, default_value = "quadrature")]
    oracle: String,
    /// Relative tolerance of the mixing-variable quadrature
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    /// Output covariance matrix CSV (standard output when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Run the command line. Returns the process exit code; diagnostics go to
/// standard error, data to files or standard output.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    // The thread cap applies to every subcommand, so a malformed value is a
    // configuration error even on code paths that never spawn workers.
    let outcome = permissibility::thread_cap().and_then(|_| match cli.cmd {
        Cmd::Eval(args) => cmd_eval(&args),
        Cmd::Gram(args) => cmd_gram(&args),
        Cmd::Validate(args) => cmd_validate(&args),
        Cmd::Simulate(args) => cmd_simulate(&args),
        Cmd::Nonstat(args) => cmd_nonstat(&args),
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn write_output<F>(out: Option<&Path>, emit: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| {
                QamError::Config(format!("cannot create {}: {e}", path.display()))
            })?;
            let mut w = std::io::BufWriter::new(file);
            emit(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            emit(&mut w)
        }
    }
}

fn check_point_dims(points: &[Vec<f64>], dim: usize, what: &str) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(QamError::Dimension(format!(
                "point {i} has {} coordinates but the {what} expects {dim}",
                p.len()
            )));
        }
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<i32> {
    let spec = config::load_spec(&args.spec)?;
    let kernel = spec.model.lag_kernel()?;
    let points = args.source.load()?;
    check_point_dims(&points, kernel.dim(), "model")?;
    let mut rows = Vec::with_capacity(points.len());
    for p in &points {
        let mut row = p.clone();
        row.push(kernel.eval(p)?);
        rows.push(row);
    }
    let mut header: Vec<String> = (1..=kernel.dim()).map(|i| format!("x{i}")).collect();
    header.push("value".into());
    write_output(args.out.as_deref(), |w| {
        config::write_table(w, &header, &rows)
    })?;
    Ok(0)
}

fn cmd_gram(args: &GramArgs) -> Result<i32> {
    let spec = config::load_spec(&args.spec)?;
    let kernel = spec.model.lag_kernel()?;
    let points = args.source.load()?;
    check_point_dims(&points, kernel.dim(), "model")?;
    let n = points.len();
    let mut matrix = vec![vec![0.0; n]; n];
    let mut lag = vec![0.0; kernel.dim()];
    for i in 0..n {
        for j in i..n {
            for (k, slot) in lag.iter_mut().enumerate() {
                *slot = points[i][k] - points[j][k];
            }
            let value = kernel
                .eval(&lag)
                .map_err(|e| QamError::GramEntry {
                    i,
                    j,
                    source: Box::new(e),
                })?;
            matrix[i][j] = value;
            matrix[j][i] = value;
        }
    }
    // Eigenvalue analysis before any output so a failure leaves no file.
    let psd_report = match &args.report {
        Some(_) => Some(permissibility::gram_psd(kernel.as_ref(), &points)?),
        None => None,
    };
    write_output(args.out.as_deref(), |w| config::write_matrix(w, &matrix))?;
    if let (Some(path), Some(g)) = (&args.report, psd_report) {
        let mut report = base_report("gram")?;
        report.insert("n".into(), json!(g.n));
        report.insert("duplicates_removed".into(), json!(g.duplicates_removed));
        report.insert("min_eigenvalue".into(), json_f64(g.min_eigenvalue));
        report.insert("max_eigenvalue".into(), json_f64(g.max_eigenvalue));
        report.insert("psd".into(), json!(g.psd));
        write_report(Some(path), &Value::Object(report))?;
    }
    Ok(0)
}

fn parse_case(text: &str) -> Result<Case> {
    match text {
        "a" => Ok(Case::A),
        "b" => Ok(Case::B),
        "c" => Ok(Case::C),
        other => Err(QamError::Config(format!(
            "unknown admissibility case '{other}'; valid cases: a, b, c"
        ))),
    }
}

fn cmd_validate(args: &ValidateArgs) -> Result<i32> {
    let spec = config::load_spec(&args.spec)?;
    let (check_name, case_label, report): (String, Option<String>, CheckReport) = match &spec.model
    {
        Model::Kernel(kernel) => {
            let kernel = std::sync::Arc::clone(kernel);
            let dim = kernel.dim();
            let profile = move |t: f64| {
                let mut lag = vec![0.0; dim];
                lag[0] = t;
                kernel.eval(&lag).unwrap_or(f64::NAN)
            };
            let grid = permissibility::default_radial_grid();
            let report =
                permissibility::check_completely_monotone(profile, &grid, args.max_order)?;
            ("complete_monotonicity".into(), None, report)
        }
        Model::Composition(comp) => {
            let case = parse_case(&args.case)?;
            let report = permissibility::admissibility(comp, case)?;
            ("admissibility".into(), Some(args.case.clone()), report)
        }
        Model::SpaceTime(cov) => {
            let case = parse_case(&args.case)?;
            let comp = cov.to_composition()?;
            let report = permissibility::admissibility(&comp, case)?;
            ("admissibility".into(), Some(args.case.clone()), report)
        }
        Model::Qarf(_) | Model::Mixture(_) => {
            return Err(QamError::Config(
                "validate applies to kernel, composition, and space-time family specs; \
                 probe other models numerically with gram or nonstat"
                    .into(),
            ))
        }
    };
    let mut out = base_report("validate")?;
    out.insert("check".into(), json!(check_name));
    if let Some(case) = case_label {
        out.insert("case".into(), json!(case));
    }
    out.insert("passed".into(), json!(report.passed));
    out.insert("worst_margin".into(), json_f64(report.worst_margin));
    out.insert("max_order_checked".into(), json!(report.max_order_checked));
    out.insert(
        "witness".into(),
        match report.witness {
            Some((at, value)) => json!([json_f64(at), json_f64(value)]),
            None => Value::Null,
        },
    );
    write_report(args.out.as_deref(), &Value::Object(out))?;
    Ok(if report.passed { 0 } else { 1 })
}

fn parse_pairs(text: &str, n: usize) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for part in text.split(',') {
        let (a, b) = part.split_once(':').ok_or_else(|| {
            QamError::Config(format!(
                "summary pair '{part}' must be two point indices joined by ':'"
            ))
        })?;
        let i: usize = a.trim().parse().map_err(|_| {
            QamError::Config(format!("summary pair '{part}': '{a}' is not an index"))
        })?;
        let j: usize = b.trim().parse().map_err(|_| {
            QamError::Config(format!("summary pair '{part}': '{b}' is not an index"))
        })?;
        if i >= n || j >= n {
            return Err(QamError::Config(format!(
                "summary pair {i}:{j} is out of range for {n} points"
            )));
        }
        pairs.push((i, j));
    }
    Ok(pairs)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32> {
    let spec = config::load_spec(&args.spec)?;
    let field = match &spec.model {
        Model::Qarf(q) => q,
        _ => {
            return Err(QamError::Config(
                "simulate requires a product-field spec (marker key 'nu_s')".into(),
            ))
        }
    };
    if args.replicates == 0 {
        return Err(QamError::Config("--replicates must be at least 1".into()));
    }
    let points = args.source.load()?;
    let pairs = match &args.summary_pairs {
        Some(text) => parse_pairs(text, points.len())?,
        None => Vec::new(),
    };
    let sims = field.simulate(&points, args.replicates, args.seed)?;
    write_output(args.out.as_deref(), |w| config::write_matrix(w, &sims))?;
    if !pairs.is_empty() || args.report.is_some() {
        let mut summaries = Vec::with_capacity(pairs.len());
        for (i, j) in pairs {
            let mean = sims.iter().map(|row| row[i] * row[j]).sum::<f64>() / sims.len() as f64;
            let var = sims
                .iter()
                .map(|row| {
                    let p = row[i] * row[j] - mean;
                    p * p
                })
                .sum::<f64>()
                / (sims.len() as f64 - 1.0).max(1.0);
            let se = (var / sims.len() as f64).sqrt();
            let lag: Vec<f64> = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| a - b)
                .collect();
            let theoretical = Kernel::eval(field, &lag)?;
            summaries.push(json!({
                "i": i,
                "j": j,
                "empirical": json_f64(mean),
                "standard_error": json_f64(se),
                "theoretical": json_f64(theoretical),
                "z_score": json_f64(if se > 0.0 { (mean - theoretical) / se } else { f64::NAN }),
            }));
        }
        let mut report = base_report("simulate")?;
        report.insert("replicates".into(), json!(args.replicates));
        report.insert("seed".into(), json!(args.seed));
        report.insert("points".into(), json!(points.len()));
        report.insert("pairs".into(), Value::Array(summaries));
        write_report(args.report.as_deref(), &Value::Object(report))?;
    }
    Ok(0)
}

fn cmd_nonstat(args: &NonstatArgs) -> Result<i32> {
    let spec = config::load_spec(&args.spec)?;
    let mixture = match &spec.model {
        Model::Mixture(m) => m,
        _ => {
            return Err(QamError::Config(
                "nonstat requires a mixture spec (marker key 'model')".into(),
            ))
        }
    };
    if !(args.rel_tol > 0.0 && args.rel_tol < 1.0) {
        return Err(QamError::Config(format!(
            "--rel-tol must lie in (0, 1), got {}",
            args.rel_tol
        )));
    }
    let closed = match args.oracle.as_str() {
        "quadrature" => false,
        "closed-form" => true,
        other => {
            return Err(QamError::Config(format!(
                "unknown oracle '{other}'; valid oracles: quadrature, closed-form"
            )))
        }
    };
    let points = args.source.load()?;
    check_point_dims(&points, mixture.dim(), "mixture model")?;
    let n = points.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            // The closed forms are defined for distinct locations; coincident
            // pairs always come from the mixture quadrature, whose diagonal
            // convention keeps the matrix finite whenever ∫g² dF converges.
            let value = if closed && points[i] != points[j] {
                mixture.closed_form(&points[i], &points[j])
            } else {
                mixture.quadrature(&points[i], &points[j], args.rel_tol)
            }
            .map_err(|e| QamError::GramEntry {
                i,
                j,
                source: Box::new(e),
            })?;
            matrix[i][j] = value;
            matrix[j][i] = value;
        }
    }
    write_output(args.out.as_deref(), |w| config::write_matrix(w, &matrix))?;
    Ok(0)
}
