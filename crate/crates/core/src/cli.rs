//! The `tempering` command-line tool.
//!
//! Every subcommand except the sweeps prints a JSON report to stdout:
//!
//! ```text
//! { "command": ..., "config": ..., "results": ..., "version": ...,
//!   "wall_time_seconds": ..., "timestamp_unix": ... }
//! ```
//!
//! `--no-timestamp` drops the last two fields so that reports are
//! byte-identical across runs. Sweeps stream CSV instead. Diagnostics go to
//! stderr.
//!
//! | Exit code | Meaning |
//! |---|---|
//! | 0 | success, or the scaler conforms |
//! | 1 | degenerate fit, or an argmax-changing scaler |
//! | 2 | usage, parse, invalid-input, domain, precondition or resource error |
//! | 3 | numeric range or divergence error |
//!
//! # File formats
//!
//! - Datasets, CSV: header-free rows of `K` logits followed by an integer
//!   label (0-based unless `--one-based`). Lines starting with `#` are
//!   skipped.
//! - Datasets, JSON: `{"logits": [[...], ...], "labels": [...]}`.
//! - Vectors and bias files: header-free CSV holding one row or one column.
//! - Weight matrices: header-free CSV, one row per line.
//! - Autoregressive models: `{"vocab_size", "horizon", "initial", "transitions"}`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::autoregressive::{entropy_curve, ARModel, TemperingMode};
use crate::calibrate::{
    fit_temperature_ec, fit_temperature_nll, metrics, CalibrationSet, Degeneracy, Example, FitConfig, Metrics,
    Solver, TemperatureFit,
};
use crate::error::{Error, Result};
use crate::geometry::{
    majorisation_compare, project_to_entropy, projection_optimality_check, MajorisationVerdict, ProjectionResult,
};
use crate::grid::geometric_grid;
use crate::scalers::{check_structure, find_argmax_violation, InputSpace, LinearScaler, StructureReport};
use crate::simplex::{entropy, InverseTemperature, LogitVector, ProbVector};

#[derive(Debug, Parser, Serialize)]
#[command(name = "tempering", version, about = "Temperature scaling toolkit")]
pub struct Cli {
    /// Omit wall time and timestamp from JSON reports.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Fit the inverse temperature of a classifier.
    Fit(FitArgs),
    /// Project a distribution onto an entropy level set.
    Project(ProjectArgs),
    /// Stream a CSV of entropies over a beta grid for a dataset or a model.
    Sweep(SweepArgs),
    /// Check whether a linear scaler preserves every argmax.
    CheckLinear(CheckLinearArgs),
    /// Compare two distributions in the majorisation order.
    Majorize(MajorizeArgs),
    /// Entropy curve of an autoregressive model (a sweep on a model file).
    ArEntropy(ArEntropyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DatasetArgs {
    /// Dataset of logits and labels.
    #[arg(long)]
    pub input: PathBuf,

    /// File format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<DatasetFormat>,

    /// Labels in the file start at 1.
    #[arg(long)]
    pub one_based: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Nll,
    Ec,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverArg {
    Newton,
    Bisection,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DatasetArgs,

    #[arg(long, value_enum, default_value = "nll")]
    pub method: MethodArg,

    #[arg(long, value_enum, default_value = "newton")]
    pub solver: SolverArg,

    #[arg(long, default_value_t = 1e-4)]
    pub beta_min: f64,

    #[arg(long, default_value_t = 1e4)]
    pub beta_max: f64,

    #[arg(long, default_value_t = 1e-10)]
    pub grad_tol: f64,

    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,

    /// Never sharpen: clamp the fitted beta at 1.
    #[arg(long)]
    pub cap_at_one: bool,

    /// Mix each prediction with the uniform distribution at this weight.
    #[arg(long, default_value_t = 0.0)]
    pub laplace_epsilon: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyUnit {
    Nats,
    Bits,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProjectArgs {
    /// Comma-separated probabilities.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "probs_file", required_unless_present = "probs_file")]
    pub probs: Option<Vec<f64>>,

    /// File holding the probabilities.
    #[arg(long)]
    pub probs_file: Option<PathBuf>,

    /// Target entropy.
    #[arg(long, allow_negative_numbers = true)]
    pub entropy: f64,

    #[arg(long, value_enum, default_value = "nats")]
    pub unit: EntropyUnit,

    /// Tolerance on the achieved entropy, in nats.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    /// Also write the projected distribution to this file.
    #[arg(long)]
    pub write_projected: Option<PathBuf>,

    /// Number of random level-set points used to audit optimality.
    #[arg(long, default_value_t = 0)]
    pub audit_trials: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Exact,
    Myopic,
}

impl From<ModeArg> for TemperingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => TemperingMode::ExactJoint,
            ModeArg::Myopic => TemperingMode::Myopic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Auto,
    Classifier,
    Ar,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    #[arg(long, default_value_t = 0.01)]
    pub beta_min: f64,

    #[arg(long, default_value_t = 100.0)]
    pub beta_max: f64,

    /// Number of log-spaced grid points.
    #[arg(long, default_value_t = 512)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DatasetArgs,

    /// What the input file holds; `auto` treats JSON objects with a
    /// `vocab_size` key as models.
    #[arg(long, value_enum, default_value = "auto")]
    pub kind: SweepKind,

    /// Tempering of autoregressive models.
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,

    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ArEntropyArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,

    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,

    #[command(flatten)]
    pub grid: GridArgs,

    /// Write the parsed model back out as JSON.
    #[arg(long)]
    pub echo_model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceArg {
    Logits,
    LogProbs,
}

impl From<SpaceArg> for InputSpace {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::Logits => InputSpace::Logits,
            SpaceArg::LogProbs => InputSpace::LogProbs,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckLinearArgs {
    /// Weight matrix, one row per line.
    #[arg(long)]
    pub w: PathBuf,

    /// Bias vector.
    #[arg(long)]
    pub b: PathBuf,

    #[arg(long, value_enum, default_value = "logits")]
    pub space: SpaceArg,

    /// Random probes tried after the deterministic ones.
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MajorizeArgs {
    /// First distribution.
    #[arg(long)]
    pub a: PathBuf,

    /// Second distribution.
    #[arg(long)]
    pub b: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct RunReport<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub config: C,
    pub results: R,
    pub version: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NumericRange(_) | Error::Divergence(_) => 3,
        _ => 2,
    }
}

fn csv_rows(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, record.iter().map(str::to_owned).collect()));
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(format!("{}: {e}", path.display()))),
        _ => Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        },
    }
}

fn parse_float(row: usize, field: &str) -> Result<f64> {
    let x: f64 = field.parse().map_err(|_| Error::Parse {
        row,
        message: format!("`{field}` is not a number"),
    })?;
    if !x.is_finite() {
        return Err(Error::Parse {
            row,
            message: format!("`{field}` is not finite"),
        });
    }
    Ok(x)
}

fn parse_label(row: usize, field: &str, one_based: bool) -> Result<usize> {
    let label: usize = field.parse().map_err(|_| Error::Parse {
        row,
        message: format!("label `{field}` is not a nonnegative integer"),
    })?;
    if one_based {
        label.checked_sub(1).ok_or_else(|| Error::Parse {
            row,
            message: "label 0 with --one-based".into(),
        })
    } else {
        Ok(label)
    }
}

/// Reads a flat vector stored as one CSV row or one CSV column.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let rows = csv_rows(path)?;
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!("{} holds no values", path.display())));
    }
    if rows.len() > 1 {
        if let Some((line, _)) = rows.iter().find(|(_, r)| r.len() != 1) {
            return Err(Error::Parse {
                row: *line,
                message: "a vector file must hold a single row or a single column".into(),
            });
        }
    }
    rows.iter()
        .flat_map(|(line, r)| r.iter().map(move |f| parse_float(*line, f)))
        .collect()
}

/// Writes a vector as one value per line with 17 significant digits.
pub fn write_vector<W: Write>(values: &[f64], mut out: W) -> Result<()> {
    for v in values {
        writeln!(out, "{v:.16e}")?;
    }
    Ok(())
}

/// Reads a header-free CSV matrix.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let rows = csv_rows(path)?;
    let width = rows.first().map(|(_, r)| r.len()).unwrap_or(0);
    rows.iter()
        .map(|(line, r)| {
            if r.len() != width {
                return Err(Error::Parse {
                    row: *line,
                    message: format!("expected {width} columns, found {}", r.len()),
                });
            }
            r.iter().map(|f| parse_float(*line, f)).collect()
        })
        .collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetJson {
    logits: Vec<Vec<f64>>,
    labels: Vec<i64>,
}

fn infer_format(path: &Path, format: Option<DatasetFormat>) -> DatasetFormat {
    format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => DatasetFormat::Json,
        _ => DatasetFormat::Csv,
    })
}

/// Loads a calibration set from CSV or JSON.
pub fn read_dataset(path: &Path, format: Option<DatasetFormat>, one_based: bool) -> Result<CalibrationSet> {
    let examples = match infer_format(path, format) {
        DatasetFormat::Csv => {
            let rows = csv_rows(path)?;
            let mut width = None;
            rows.iter()
                .map(|(line, r)| {
                    let k = r.len().saturating_sub(1);
                    if k < 2 {
                        return Err(Error::Parse {
                            row: *line,
                            message: format!("expected at least 2 logits and a label, found {} fields", r.len()),
                        });
                    }
                    if *width.get_or_insert(k) != k {
                        return Err(Error::Parse {
                            row: *line,
                            message: format!("expected {} logits, found {k}", width.unwrap_or(k)),
                        });
                    }
                    let logits = r[..k].iter().map(|f| parse_float(*line, f)).collect::<Result<Vec<_>>>()?;
                    let label = parse_label(*line, &r[k], one_based)?;
                    example(*line, logits, label)
                })
                .collect::<Result<Vec<_>>>()?
        }
        DatasetFormat::Json => {
            let file: DatasetJson = serde_json::from_reader(BufReader::new(File::open(path)?))?;
            if file.logits.len() != file.labels.len() {
                return Err(Error::InvalidInput(format!(
                    "{} logit rows but {} labels",
                    file.logits.len(),
                    file.labels.len()
                )));
            }
            file.logits
                .into_iter()
                .zip(file.labels)
                .enumerate()
                .map(|(i, (logits, label))| {
                    let row = i + 1;
                    let label = usize::try_from(label).map_err(|_| Error::Parse {
                        row,
                        message: format!("label {label} is negative"),
                    })?;
                    let label = parse_label(row, &label.to_string(), one_based)?;
                    example(row, logits, label)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    if examples.is_empty() {
        return Err(Error::InvalidInput(format!("{} holds no examples", path.display())));
    }
    CalibrationSet::new(examples)
}

fn example(row: usize, logits: Vec<f64>, label: usize) -> Result<Example> {
    let logits = LogitVector::new(logits).map_err(|e| Error::Parse {
        row,
        message: e.to_string(),
    })?;
    if label >= logits.len() {
        return Err(Error::Parse {
            row,
            message: format!("label {label} out of range for {} classes", logits.len()),
        });
    }
    Ok(Example { logits, label })
}

/// Writes a calibration set in the CSV dataset format (0-based labels).
pub fn write_dataset_csv<W: Write>(cal: &CalibrationSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for ex in cal.examples() {
        let mut record: Vec<String> = ex.logits.values().iter().map(|x| format!("{x:.16e}")).collect();
        record.push(ex.label.to_string());
        w.write_record(&record)
            .map_err(|e| Error::InvalidInput(format!("cannot write dataset: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

fn read_model(path: &Path) -> Result<ARModel> {
    let file = File::open(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

#[derive(Serialize)]
struct FitResults {
    examples: usize,
    classes: usize,
    fit: TemperatureFit,
    metrics_at_one: Metrics,
    metrics_at_fit: Metrics,
}

#[derive(Serialize)]
struct ProjectResults {
    input_entropy: f64,
    target_entropy: f64,
    #[serde(flatten)]
    projection: ProjectionResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    audit_passed: Option<bool>,
}

#[derive(Serialize)]
struct CheckLinearResults {
    classes: usize,
    #[serde(flatten)]
    structure: StructureReport,
    witness: Option<Vec<f64>>,
    witness_image: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct MajorizeResults {
    #[serde(flatten)]
    verdict: MajorisationVerdict,
    first_entropy: f64,
    second_entropy: f64,
}

struct Reporter<'a> {
    started: Instant,
    timestamps: bool,
    out: &'a mut dyn Write,
}

impl Reporter<'_> {
    fn emit<C: Serialize, R: Serialize>(&mut self, command: &str, config: C, results: R) -> Result<()> {
        let (wall_time_seconds, timestamp_unix) = if self.timestamps {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            (Some(self.started.elapsed().as_secs_f64()), Some(now))
        } else {
            (None, None)
        };
        let report = RunReport {
            command,
            config,
            results,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_seconds,
            timestamp_unix,
        };
        serde_json::to_writer_pretty(&mut *self.out, &report)?;
        writeln!(self.out)?;
        Ok(())
    }
}

fn cmd_fit(args: &FitArgs, rep: &mut Reporter<'_>) -> Result<i32> {
    let cal = read_dataset(&args.data.input, args.data.format, args.data.one_based)?;
    let cfg = FitConfig {
        beta_min: args.beta_min,
        beta_max: args.beta_max,
        grad_tol: args.grad_tol,
        max_iter: args.max_iter,
        cap_at_one: args.cap_at_one,
        laplace_epsilon: args.laplace_epsilon,
        solver: match args.solver {
            SolverArg::Newton => Solver::Newton,
            SolverArg::Bisection => Solver::Bisection,
        },
    };
    let fit = match args.method {
        MethodArg::Nll => fit_temperature_nll(&cal, &cfg)?,
        MethodArg::Ec => fit_temperature_ec(&cal, &cfg)?,
    };
    let results = FitResults {
        examples: cal.len(),
        classes: cal.classes(),
        fit,
        metrics_at_one: metrics(&cal, InverseTemperature::ONE),
        metrics_at_fit: metrics(&cal, InverseTemperature::new(fit.beta_hat)?),
    };
    rep.emit("fit", args, results)?;
    Ok(if fit.degeneracy == Degeneracy::None { 0 } else { 1 })
}

fn cmd_project(args: &ProjectArgs, rep: &mut Reporter<'_>) -> Result<i32> {
    let raw = match (&args.probs, &args.probs_file) {
        (Some(v), _) => v.clone(),
        (None, Some(path)) => read_vector(path)?,
        (None, None) => return Err(Error::InvalidInput("give --probs or --probs-file".into())),
    };
    let p = ProbVector::new(raw)?;
    let target = match args.unit {
        EntropyUnit::Nats => args.entropy,
        EntropyUnit::Bits => args.entropy * std::f64::consts::LN_2,
    };
    let projection = project_to_entropy(&p, target, args.tol)?;
    let audit_passed =
        (args.audit_trials > 0).then(|| projection_optimality_check(&p, &projection, args.audit_trials, args.seed));
    if let Some(path) = &args.write_projected {
        write_vector(projection.projected.probs(), File::create(path)?)?;
    }
    let results = ProjectResults {
        input_entropy: entropy(&p),
        target_entropy: target,
        projection,
        audit_passed,
    };
    rep.emit("project", args, results)?;
    Ok(if audit_passed == Some(false) { 1 } else { 0 })
}

fn beta_grid(g: &GridArgs) -> Result<Vec<f64>> {
    if g.points == 1 {
        InverseTemperature::new(g.beta_min)?;
    }
    geometric_grid(g.beta_min, g.beta_max, g.points)
}

#[derive(Serialize)]
struct ClassifierRow {
    beta: String,
    entropy: String,
    cross_entropy: String,
    accuracy: String,
}

fn classifier_sweep(cal: &CalibrationSet, betas: &[f64], out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for &b in betas {
        let m = metrics(cal, InverseTemperature::new(b)?);
        w.serialize(ClassifierRow {
            beta: format!("{b:.16e}"),
            entropy: format!("{:.16e}", m.mean_entropy),
            cross_entropy: format!("{:.16e}", m.cross_entropy),
            accuracy: format!("{:.16e}", m.accuracy),
        })
        .map_err(|e| Error::InvalidInput(format!("cannot write sweep: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

fn looks_like_model(path: &Path) -> Result<bool> {
    if infer_format(path, None) != DatasetFormat::Json {
        return Ok(false);
    }
    let value: serde_json::Value = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    Ok(value.get("vocab_size").is_some())
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let betas = beta_grid(&args.grid)?;
    let is_model = match args.kind {
        SweepKind::Ar => true,
        SweepKind::Classifier => false,
        SweepKind::Auto => looks_like_model(&args.data.input)?,
    };
    if is_model {
        let model = read_model(&args.data.input)?;
        entropy_curve(&model, &betas, args.mode.into())?.write_csv(out)?;
    } else {
        let cal = read_dataset(&args.data.input, args.data.format, args.data.one_based)?;
        classifier_sweep(&cal, &betas, out)?;
    }
    Ok(0)
}

fn cmd_ar_entropy(args: &ArEntropyArgs, out: &mut dyn Write) -> Result<i32> {
    let betas = beta_grid(&args.grid)?;
    let model = read_model(&args.model)?;
    if let Some(path) = &args.echo_model {
        let mut f = File::create(path)?;
        serde_json::to_writer_pretty(&mut f, &model)?;
        writeln!(f)?;
    }
    entropy_curve(&model, &betas, args.mode.into())?.write_csv(out)?;
    Ok(0)
}

fn cmd_check_linear(args: &CheckLinearArgs, rep: &mut Reporter<'_>) -> Result<i32> {
    let w = read_matrix(&args.w)?;
    let b = read_vector(&args.b)?;
    let scaler = LinearScaler::new(w, b, args.space.into())?;
    let structure = check_structure(&scaler, args.tol);
    let witness = find_argmax_violation(&scaler, args.budget, args.seed);
    let witness_image = witness.as_ref().map(|z| scaler.affine(z.values()));
    let conforms = structure.conforms;
    let results = CheckLinearResults {
        classes: scaler.classes(),
        structure,
        witness: witness.map(LogitVector::into_inner),
        witness_image,
    };
    rep.emit("check-linear", args, results)?;
    Ok(if conforms { 0 } else { 1 })
}

fn cmd_majorize(args: &MajorizeArgs, rep: &mut Reporter<'_>) -> Result<i32> {
    let a = ProbVector::new(read_vector(&args.a)?)?;
    let b = ProbVector::new(read_vector(&args.b)?)?;
    let verdict = majorisation_compare(&a, &b)?;
    let results = MajorizeResults {
        verdict,
        first_entropy: entropy(&a),
        second_entropy: entropy(&b),
    };
    rep.emit("majorize", args, results)?;
    Ok(0)
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let mut rep = Reporter {
        started: Instant::now(),
        timestamps: !cli.no_timestamp,
        out,
    };
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, &mut rep),
        Command::Project(a) => cmd_project(a, &mut rep),
        Command::CheckLinear(a) => cmd_check_linear(a, &mut rep),
        Command::Majorize(a) => cmd_majorize(a, &mut rep),
        Command::Sweep(a) => cmd_sweep(a, rep.out),
        Command::ArEntropy(a) => cmd_ar_entropy(a, rep.out),
    }
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return 2;
            }
            let _ = write!(out, "{text}");
            return 0;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point used by the binary.
pub fn main_with_std() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    code
}
