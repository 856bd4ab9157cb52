//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 usage or parse error,
//! 3 numerical failure (singular point, no path, quadrature). Data goes to
//! stdout, diagnostics to stderr.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{self, regular_points, Tolerances, VerifyReport};
use crate::error::{Error, Result};
use crate::exprlang::{evaluate, parse, Expr, ParameterSet};
use crate::moutard::{
    chain, find_basepoint, make_oneform, verify_seed, ChainOptions, ChainStep, FieldOptions, SolutionSource,
    TransformStep, TransformedSolutionField, DEFAULT_MARGIN, DEFAULT_QUAD_TOL, SEED_TOLERANCE,
};
use crate::quadrature::GridSpec;
use crate::schrodinger::{
    residual_report, scan, Potential, ResidualReport, ScanReport, SeedSolution, SingularSet, DEFAULT_SINGULAR_THRESHOLD,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "MOUTARD_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "moutard",
    version,
    about = "Generalized Moutard transformation for the axially symmetric Schrödinger equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Transform a potential with a verified seed solution.
    Transform(TransformArgs),
    /// Evaluate a transformed solution by line integration.
    Solve(SolveArgs),
    /// Residual of a closed-form solution under a potential.
    Verify(VerifyArgs),
    /// Range, sign changes and singular points of an expression on a grid.
    Scan(ScanArgs),
    /// Run a multi-stage pipeline described by a JSON config.
    Chain(ChainArgs),
    /// Evaluate an expression at points.
    Eval(EvalArgs),
    /// Built-in regression entries.
    #[command(subcommand)]
    Catalog(CatalogCommand),
}

#[derive(Args, Debug)]
pub struct ParamArgs {
    /// Parameter binding, repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
}

impl ParamArgs {
    fn set(&self) -> ParameterSet {
        let mut p = ParameterSet::new();
        for (k, v) in &self.params {
            p.insert(k.clone(), *v);
        }
        p
    }
}

#[derive(Args, Debug)]
pub struct TransformArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub potential: String,
    /// Seed solution `Y_h`.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "seed_file")]
    pub seed: Option<String>,
    #[arg(long, conflicts_with = "seed")]
    pub seed_file: Option<PathBuf>,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Verification grid `r_min:r_max:n_r,z_min:z_max:n_z`.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
    #[arg(long, default_value_t = SEED_TOLERANCE)]
    pub tol: f64,
    /// Also evaluate the new potential here, repeatable.
    #[arg(long, value_name = "R,Z", value_parser = parse_point, allow_hyphen_values = true)]
    pub at: Vec<(f64, f64)>,
    #[arg(long, value_enum, default_value_t = TextOrJson::Text)]
    pub out: TextOrJson,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub potential: String,
    /// Seed solution `Y_h` defining the transformation.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "seed_file")]
    pub seed: Option<String>,
    #[arg(long, conflicts_with = "seed")]
    pub seed_file: Option<PathBuf>,
    /// Solution `Y` to transport.
    #[arg(long, allow_hyphen_values = true)]
    pub solution: String,
    /// Basepoint where `P = additive constant`; picked automatically if absent.
    #[arg(long, value_name = "R,Z", value_parser = parse_point, allow_hyphen_values = true)]
    pub base: Option<(f64, f64)>,
    #[arg(long, value_name = "R,Z", value_parser = parse_point, allow_hyphen_values = true, required_unless_present = "grid")]
    pub at: Vec<(f64, f64)>,
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, conflicts_with = "at")]
    pub grid: Option<GridSpec>,
    /// Grid the seed and the solution are verified on.
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub check_grid: Option<GridSpec>,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = DEFAULT_QUAD_TOL)]
    pub quad_tol: f64,
    #[arg(long, default_value_t = SEED_TOLERANCE)]
    pub residual_tol: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub additive_constant: f64,
    #[arg(long, value_enum, default_value_t = CsvOrJson::Csv)]
    pub out: CsvOrJson,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub potential: String,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "solution_file")]
    pub solution: Option<String>,
    #[arg(long, conflicts_with = "solution")]
    pub solution_file: Option<PathBuf>,
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Option<GridSpec>,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = SEED_TOLERANCE)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub expr: String,
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: GridSpec,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = DEFAULT_SINGULAR_THRESHOLD)]
    pub threshold: f64,
    /// Exit 1 unless the scan shows this property.
    #[arg(long, value_enum)]
    pub expect: Option<ScanExpectation>,
}

#[derive(Args, Debug)]
pub struct ChainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's parameters.
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub expr: String,
    #[arg(long, value_name = "R,Z", value_parser = parse_point, allow_hyphen_values = true, required = true)]
    pub at: Vec<(f64, f64)>,
    #[command(flatten)]
    pub params: ParamArgs,
}

#[derive(Subcommand, Debug)]
pub enum CatalogCommand {
    /// Names and one-line summaries.
    List,
    /// One entry as JSON.
    Show { name: String },
    /// Every entry as a JSON array.
    Export,
    /// Run entries and print their reports.
    Verify {
        #[arg(required_unless_present = "all")]
        names: Vec<String>,
        #[arg(long, conflicts_with = "names")]
        all: bool,
        #[command(flatten)]
        params: ParamArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TextOrJson {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CsvOrJson {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScanExpectation {
    Finite,
    Negative,
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(format!("bad parameter name `{name}`"));
    }
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("bad value for `{name}`: `{value}`"))?;
    if !v.is_finite() {
        return Err(format!("value for `{name}` must be finite"));
    }
    Ok((name.to_string(), v))
}

/// `r,z`.
pub fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected R,Z, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad coordinate `{t}`"));
    Ok((num(a)?, num(b)?))
}

fn parse_axis(s: &str) -> std::result::Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(format!("expected min:max:count, got `{s}`"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad bound `{t}`"));
    let n = n.trim().parse::<usize>().map_err(|_| format!("bad count `{n}`"))?;
    Ok((num(lo)?, num(hi)?, n))
}

/// `r_min:r_max:n_r,z_min:z_max:n_z`.
pub fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    let (r, z) = s
        .split_once(',')
        .ok_or_else(|| format!("expected r_min:r_max:n_r,z_min:z_max:n_z, got `{s}`"))?;
    let (r0, r1, nr) = parse_axis(r)?;
    let (z0, z1, nz) = parse_axis(z)?;
    GridSpec::new((r0, r1), (z0, z1), nr, nz).map_err(|e| e.to_string())
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "nan".to_string()
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Stage { source, .. } => exit_code(source),
        Error::SeedNotSolution { .. } | Error::DegenerateSeed => EXIT_VERIFY,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Failure of a command: a library error, or a usage problem found after
/// flag parsing (unreadable file, bad config).
#[derive(Debug)]
enum Failure {
    Lib(Error),
    Usage(String),
    /// Ran to completion but a check did not pass.
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<crate::exprlang::ParseError> for Failure {
    fn from(e: crate::exprlang::ParseError) -> Self {
        Failure::Lib(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Sets up the global thread pool from [`THREADS_ENV`]. Later calls are
/// no-ops.
pub fn init_threads() {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("warning: ignoring {THREADS_ENV}={v}"),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(Failure::Verify) => EXIT_VERIFY,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Transform(a) => cmd_transform(a, out, err),
        Command::Solve(a) => cmd_solve(a, out, err),
        Command::Verify(a) => cmd_verify(a, out, err),
        Command::Scan(a) => cmd_scan(a, out, err),
        Command::Chain(a) => cmd_chain(a, out, err),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Catalog(c) => cmd_catalog(c, out, err),
    }
}

fn read_text(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn expr_arg(inline: Option<String>, file: Option<PathBuf>) -> std::result::Result<String, Failure> {
    match (inline, file) {
        (Some(s), _) => Ok(s),
        (None, Some(p)) => Ok(read_text(&p)?.trim().to_string()),
        (None, None) => Err(Failure::Usage("missing expression".into())),
    }
}

fn json_line<T: Serialize>(out: &mut dyn Write, v: &T) -> CmdResult {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(out, "{text}")?;
    Ok(())
}

#[derive(Serialize)]
struct PointValue {
    r: f64,
    z: f64,
    value: Option<f64>,
}

fn values_at(e: &Expr, points: &[(f64, f64)], params: &ParameterSet) -> Result<Vec<PointValue>> {
    points
        .iter()
        .map(|&(r, z)| {
            Ok(PointValue {
                r,
                z,
                value: Some(evaluate(e, r, z, params)?),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct TransformOutput<'a> {
    #[serde(flatten)]
    step: &'a TransformStep,
    values: Vec<PointValue>,
}

fn cmd_transform(a: TransformArgs, out: &mut dyn Write, _err: &mut dyn Write) -> CmdResult {
    let params = a.params.set();
    let grid = a.grid.unwrap_or_else(|| GridSpec::standard(5.0, 41));
    let u = Potential::parse(&a.potential)?.with_region(grid);
    let y_h = SeedSolution::parse(&expr_arg(a.seed, a.seed_file)?)?.with_region(grid);
    let step = TransformStep::new(&u, &y_h, &params, &grid, a.tol)?;
    let values = values_at(&step.u_tilde.expr, &a.at, &params)?;
    match a.out {
        TextOrJson::Json => json_line(out, &TransformOutput { step: &step, values })?,
        TextOrJson::Text => {
            let v = &step.verification;
            writeln!(out, "u_tilde = {}", step.u_tilde.expr)?;
            writeln!(
                out,
                "seed verified: max_rel = {:.3e} on {}x{} grid ({} points, {} skipped)",
                v.max_rel_residual, grid.n_r, grid.n_z, v.n_evaluated, v.n_skipped_singular
            )?;
            for p in values {
                writeln!(out, "u_tilde({}, {}) = {}", p.r, p.z, p.value.unwrap_or(f64::NAN))?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput {
    basepoint: (f64, f64),
    seed_verification: ResidualReport,
    solution_verification: ResidualReport,
    points: Vec<PointValue>,
}

fn cmd_solve(a: SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let params = a.params.set();
    let check = a.check_grid.unwrap_or_else(|| GridSpec::standard(5.0, 41));
    let u = Potential::parse(&a.potential)?;
    let y_h = SeedSolution::parse(&expr_arg(a.seed, a.seed_file)?)?;
    let y = SeedSolution::parse(&a.solution)?;
    let seed_report = verify_seed(&u, &y_h, &params, &check, a.residual_tol)?;
    let sol_report = verify_seed(&u, &y, &params, &check, a.residual_tol)?;

    let hint = a.grid.unwrap_or(check);
    let base = match a.base {
        Some(b) => b,
        None => {
            let form = make_oneform(&y, &y_h).singular_set();
            let zero = SingularSet::of([&y_h.expr]);
            find_basepoint(&[&form, &zero], &hint, &params).ok_or(Error::EmptyDomain)?
        }
    };
    let opts = FieldOptions {
        additive_constant: a.additive_constant,
        tol: a.quad_tol,
        grid_hint: hint,
        ..FieldOptions::at(base)
    };
    let field = TransformedSolutionField::new(SolutionSource::Closed(y), &y_h, &params, opts)?;

    let targets = match a.grid {
        Some(g) => g.points(),
        None => a.at.clone(),
    };
    let results: Vec<Result<f64>> = targets.par_iter().map(|&(r, z)| field.value(r, z)).collect();
    let mut points = Vec::with_capacity(targets.len());
    let mut unreachable = 0;
    for (&(r, z), res) in targets.iter().zip(results) {
        let value = match res {
            Ok(v) => Some(v),
            // a single requested point must succeed; grid sweeps report gaps
            Err(e) if a.grid.is_none() || !e.is_numerical() => return Err(e.into()),
            Err(_) => {
                unreachable += 1;
                None
            }
        };
        points.push(PointValue { r, z, value });
    }
    if unreachable > 0 {
        writeln!(
            err,
            "warning: {unreachable} grid points are singular or unreachable from the basepoint"
        )?;
    }
    match a.out {
        CsvOrJson::Csv => {
            writeln!(out, "r,z,value")?;
            for p in &points {
                writeln!(
                    out,
                    "{},{},{}",
                    fmt17(p.r),
                    fmt17(p.z),
                    fmt17(p.value.unwrap_or(f64::NAN))
                )?;
            }
        }
        CsvOrJson::Json => json_line(
            out,
            &SolveOutput {
                basepoint: base,
                seed_verification: seed_report,
                solution_verification: sol_report,
                points,
            },
        )?,
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput {
    #[serde(flatten)]
    report: ResidualReport,
    tol: f64,
    passed: bool,
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let params = a.params.set();
    let grid = a.grid.unwrap_or_else(|| GridSpec::standard(5.0, 41));
    let u = Potential::parse(&a.potential)?;
    let y = SeedSolution::parse(&expr_arg(a.solution, a.solution_file)?)?;
    let report = residual_report(&u, &y, &grid, &params)?;
    let passed = report.passes(a.tol);
    json_line(
        out,
        &VerifyOutput {
            report,
            tol: a.tol,
            passed,
        },
    )?;
    if passed {
        Ok(())
    } else {
        writeln!(err, "verification failed: residual above {:.1e}", a.tol)?;
        Err(Failure::Verify)
    }
}

#[derive(Serialize)]
struct ScanOutput {
    #[serde(flatten)]
    report: ScanReport,
    finite_everywhere: bool,
    negative_everywhere: bool,
}

fn cmd_scan(a: ScanArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let params = a.params.set();
    let e = parse(&a.expr)?;
    let report = scan(&e, &a.grid, &params, a.threshold)?;
    let finite = report.finite_everywhere();
    let negative = report.negative_everywhere();
    json_line(
        out,
        &ScanOutput {
            report,
            finite_everywhere: finite,
            negative_everywhere: negative,
        },
    )?;
    let ok = match a.expect {
        None => true,
        Some(ScanExpectation::Finite) => finite,
        Some(ScanExpectation::Negative) => negative,
    };
    if ok {
        Ok(())
    } else {
        writeln!(err, "scan expectation not met")?;
        Err(Failure::Verify)
    }
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> CmdResult {
    let params = a.params.set();
    let e = parse(&a.expr)?;
    writeln!(out, "r,z,value")?;
    for p in values_at(&e, &a.at, &params)? {
        writeln!(
            out,
            "{},{},{}",
            fmt17(p.r),
            fmt17(p.z),
            fmt17(p.value.unwrap_or(f64::NAN))
        )?;
    }
    Ok(())
}

/// JSON pipeline description for the `chain` command.
///
/// ```json
/// {
///   "u0": "0",
///   "params": {"C1": 1},
///   "seeds": {"ys": "1/sqrt(r^2+z^2)"},
///   "steps": [
///     {"carry": "ys"},
///     {"y_h": "r^2-2*z^2"},
///     {"y_h": "...", "basepoint": [1, 2], "expect": "..."}
///   ],
///   "basepoint": [1, 0],
///   "tolerances": {"residual": 1e-7, "quadrature": 1e-10, "equality": 1e-9},
///   "samples": [[1, 1]]
/// }
/// ```
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub u0: String,
    pub steps: Vec<StepConfig>,
    #[serde(default)]
    pub seeds: BTreeMap<String, String>,
    #[serde(default)]
    pub params: ParameterSet,
    /// Grid for seed verification and the random points of `expect`.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Grid for residuals of carried solutions.
    #[serde(default)]
    pub carried_grid: Option<GridSpec>,
    #[serde(default)]
    pub basepoint: Option<(f64, f64)>,
    #[serde(default)]
    pub tolerances: ChainTolerances,
    /// Points at which carried solutions are reported.
    #[serde(default)]
    pub samples: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum StepConfig {
    Transform {
        y_h: String,
        #[serde(default)]
        basepoint: Option<(f64, f64)>,
        /// Published form of the new potential, compared at random points.
        #[serde(default)]
        expect: Option<String>,
    },
    Carry {
        carry: String,
    },
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ChainTolerances {
    #[serde(default = "default_residual")]
    pub residual: f64,
    #[serde(default = "default_quadrature")]
    pub quadrature: f64,
    #[serde(default = "default_equality")]
    pub equality: f64,
}

fn default_residual() -> f64 {
    SEED_TOLERANCE
}
fn default_quadrature() -> f64 {
    DEFAULT_QUAD_TOL
}
fn default_equality() -> f64 {
    1e-9
}

impl Default for ChainTolerances {
    fn default() -> Self {
        ChainTolerances {
            residual: default_residual(),
            quadrature: default_quadrature(),
            equality: default_equality(),
        }
    }
}

impl ChainConfig {
    pub fn from_json(text: &str) -> std::result::Result<ChainConfig, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid chain config: {e}"))
    }

    fn options(&self) -> ChainOptions {
        let d = ChainOptions::default();
        ChainOptions {
            grid: self.grid.unwrap_or(d.grid),
            carried_grid: self.carried_grid.unwrap_or(d.carried_grid),
            residual_tol: self.tolerances.residual,
            quad_tol: self.tolerances.quadrature,
            margin: DEFAULT_MARGIN,
            basepoint: self.basepoint.unwrap_or(d.basepoint),
        }
    }

    /// Library steps, with every expression parsed and every carried name
    /// resolved.
    pub fn steps(&self) -> std::result::Result<Vec<ChainStep>, String> {
        let grid = self.options().grid;
        self.steps
            .iter()
            .map(|s| match s {
                StepConfig::Transform { y_h, basepoint, .. } => Ok(ChainStep::Transform {
                    y_h: SeedSolution::parse(y_h).map_err(|e| e.to_string())?.with_region(grid),
                    basepoint: *basepoint,
                }),
                StepConfig::Carry { carry } => {
                    let text = self.seeds.get(carry).ok_or_else(|| format!("unknown seed `{carry}`"))?;
                    Ok(ChainStep::Carry {
                        name: carry.clone(),
                        solution: SeedSolution::parse(text).map_err(|e| e.to_string())?.with_region(grid),
                    })
                }
            })
            .collect()
    }
}

#[derive(Serialize)]
struct CarriedOutput {
    name: String,
    stage: usize,
    basepoint: (f64, f64),
    verification: ResidualReport,
    samples: Vec<PointValue>,
}

#[derive(Serialize)]
struct Expectation {
    stage: usize,
    n_points: usize,
    max_rel: f64,
    worst_point: Option<(f64, f64)>,
    tol: f64,
    passed: bool,
}

#[derive(Serialize)]
struct ChainOutput {
    params: ParameterSet,
    stages: Vec<TransformStep>,
    carried: Vec<CarriedOutput>,
    expectations: Vec<Expectation>,
    final_potential: Option<String>,
    passed: bool,
}

struct Comparison {
    n_points: usize,
    max_rel: f64,
    worst_point: Option<(f64, f64)>,
}

fn compare_at_random(got: &Expr, want: &Expr, grid: &GridSpec, params: &ParameterSet, n: usize) -> Result<Comparison> {
    let points = regular_points(&[got, want], grid, &[], params, n, Tolerances::default().seed);
    let mut worst = (0.0, None);
    for &(r, z) in &points {
        let a = evaluate(got, r, z, params)?;
        let b = evaluate(want, r, z, params)?;
        let rel = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        if rel > worst.0 {
            worst = (rel, Some((r, z)));
        }
    }
    Ok(Comparison {
        n_points: points.len(),
        max_rel: worst.0,
        worst_point: worst.1,
    })
}

fn cmd_chain(a: ChainArgs, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let cfg = ChainConfig::from_json(&read_text(&a.config)?).map_err(Failure::Usage)?;
    let params = cfg.params.merged(&a.params.set());
    let steps = cfg.steps().map_err(Failure::Usage)?;
    let u0 = Potential::parse(&cfg.u0)?;
    let opts = cfg.options();
    let result = chain(&u0, &steps, &params, &opts)?;

    let mut expectations = Vec::new();
    let transforms = cfg.steps.iter().filter_map(|s| match s {
        StepConfig::Transform { expect, .. } => Some(expect),
        StepConfig::Carry { .. } => None,
    });
    for (i, (expect, step)) in transforms.zip(&result.steps).enumerate() {
        let Some(text) = expect else { continue };
        let want = parse(text)?;
        let c =
            compare_at_random(&step.u_tilde.expr, &want, &opts.grid, &params, 100).map_err(|e| e.at_stage(i + 1))?;
        let passed = c.n_points > 0 && c.max_rel < cfg.tolerances.equality;
        expectations.push(Expectation {
            stage: i + 1,
            n_points: c.n_points,
            max_rel: c.max_rel,
            worst_point: c.worst_point,
            tol: cfg.tolerances.equality,
            passed,
        });
    }

    let mut carried = Vec::new();
    for c in &result.carried {
        let samples = cfg
            .samples
            .iter()
            .map(|&(r, z)| {
                Ok(PointValue {
                    r,
                    z,
                    value: Some(c.field.value(r, z)?),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at_stage(c.stage))?;
        carried.push(CarriedOutput {
            name: c.name.clone(),
            stage: c.stage,
            basepoint: c.field.options().basepoint,
            verification: c.verification.clone(),
            samples,
        });
    }
    let passed = expectations.iter().all(|e| e.passed);
    for e in expectations.iter().filter(|e| !e.passed) {
        writeln!(
            err,
            "stage {}: potential differs from the expected form (max_rel {:.3e}, tol {:.1e})",
            e.stage, e.max_rel, e.tol
        )?;
    }
    json_line(
        out,
        &ChainOutput {
            params,
            final_potential: result.final_potential().map(|p| p.expr.to_string()),
            stages: result.steps,
            carried,
            expectations,
            passed,
        },
    )?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn cmd_catalog(c: CatalogCommand, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match c {
        CatalogCommand::List => {
            for e in catalog::entries() {
                writeln!(out, "{:<14} {}", e.name, e.summary)?;
            }
        }
        CatalogCommand::Show { name } => json_line(out, catalog::get_entry(&name)?)?,
        CatalogCommand::Export => writeln!(out, "{}", catalog::export_json())?,
        CatalogCommand::Verify { names, all, params } => {
            let names: Vec<String> = if all {
                catalog::list_entries().into_iter().map(String::from).collect()
            } else {
                names
            };
            // unknown names are usage errors, caught before any work
            for n in &names {
                catalog::get_entry(n)?;
            }
            let overrides = params.set();
            let tol = Tolerances::default();
            let mut reports: Vec<VerifyReport> = Vec::new();
            for n in &names {
                let report = catalog::verify_entry(n, &overrides, &tol)?;
                let failed = report.checks.iter().filter(|c| !c.passed).count();
                if failed == 0 {
                    writeln!(err, "{n}: pass ({} checks)", report.checks.len())?;
                } else {
                    writeln!(err, "{n}: FAIL ({failed} of {} checks)", report.checks.len())?;
                    for c in report.checks.iter().filter(|c| !c.passed) {
                        writeln!(err, "  {}: {:.3e} (tol {:.1e})", c.name, c.measured, c.tolerance)?;
                    }
                }
                reports.push(report);
            }
            json_line(out, &reports)?;
            if !reports.iter().all(|r| r.passed) {
                return Err(Failure::Verify);
            }
        }
    }
    Ok(())
}
