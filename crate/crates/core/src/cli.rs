//! Command-line front end.
//!
//! Every command accepts `--config PATH`, a JSON object whose keys are the
//! command's long flag names in snake case. Flags given on the command line
//! override values from the file; unknown keys are rejected.
//!
//! Exit codes: 0 success, 1 internal solver error, 2 invalid input,
//! 3 closed-form disagreement (`verify`), 4 iteration did not converge
//! (`kernel-solve`).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::asymptotics::{closed_form, Regime};
use crate::kernel::{
    branch_scan, quadratic_dispersion, self_consistent_solve, DiscreteKernel, GapProblem,
    InitialGuess, IterationControls, KernelError, KernelSolution, MomentumGrid, Scheme,
    TabulatedKernel,
};
use crate::params::ModelParams;
use crate::phase::{
    equilibrium_curve, scan, write_csv, write_json, Axis, MultiplicityClass, Region, ScanSpec,
};
use crate::scalar::{solve_all, ScalarError, SolveOptions, DEFAULT_TOL};
use crate::solution::{GapSolution, InvariantCheck};

const INVARIANT_TOL: f64 = 1e-8;
const LARGE_ARGUMENT_TOL: f64 = 1e-3;
const LINEARIZED_TOL: f64 = 5e-2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Solver(String),
    Disagreement(String),
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Disagreement(_) => 3,
            CliError::NotConverged(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Solver(m) | CliError::Disagreement(m) | CliError::NotConverged(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<ScalarError> for CliError {
    fn from(e: ScalarError) -> Self {
        match e {
            ScalarError::Param(_) => CliError::Usage(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::Scalar(s) => s.into(),
            KernelError::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_error(e: impl std::fmt::Display) -> CliError {
    CliError::Solver(format!("output error: {e}"))
}

#[derive(Parser, Debug)]
#[command(name = "gapforge", version, about = "Gap-equation solver for competing mean-field and pairing interactions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate every solution of the Fermi-surface gap equations.
    Solve(SolveArgs),
    /// Sweep a parameter grid, or sample the tangency curve.
    Scan(ScanArgs),
    /// Compare a closed-form regime against the numeric solution.
    Verify(VerifyArgs),
    /// Solve the momentum-resolved gap equations by iteration.
    KernelSolve(KernelArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveArgs {
    #[arg(long, allow_hyphen_values = true)]
    lambda_b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda_m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    temp: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Root tolerance in reduced units.
    #[arg(long)]
    tol: Option<f64>,
    /// Drop mixed solutions with mu + delta_m < 0.
    #[arg(long)]
    #[serde(default)]
    require_nonnegative_mean_field: bool,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanArgs {
    /// Value or min:max:steps.
    #[arg(long, allow_hyphen_values = true)]
    lambda_b: Option<Axis>,
    #[arg(long, allow_hyphen_values = true)]
    lambda_m: Option<Axis>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<Axis>,
    #[arg(long, allow_hyphen_values = true)]
    temp: Option<Axis>,
    /// Fixed inverse temperature (instead of --temp).
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    require_nonnegative_mean_field: bool,
    /// Sample the tangency curve in reduced variables instead.
    #[arg(long)]
    #[serde(default)]
    equilibrium: bool,
    /// Reduced coupling range min:max:steps for --equilibrium (min > 1).
    #[arg(long, allow_hyphen_values = true)]
    lambda_b_bar: Option<Axis>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyArgs {
    /// ia, ib, iia or iib.
    #[arg(long)]
    regime: Option<Regime>,
    #[arg(long, allow_hyphen_values = true)]
    lambda_b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda_m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    temp: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Relative agreement required (default 1e-3 for ia/iia, 5e-2 for ib/iib).
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelArgs {
    #[arg(long, allow_hyphen_values = true)]
    lambda_b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda_m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    temp: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Half-width of the shell kernels around sqrt(mu) (default 0.01).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Grid size for shell kernels (default 2000).
    #[arg(long)]
    grid_points: Option<usize>,
    /// Grid cutoff for shell kernels (default 3 max(1, sqrt(mu))).
    #[arg(long)]
    p_max: Option<f64>,
    /// Tabulated mean-field kernel: header row of momenta, then one row per momentum.
    #[arg(long)]
    kernel_m_csv: Option<PathBuf>,
    /// Tabulated pairing kernel, same layout; must be symmetric.
    #[arg(long)]
    kernel_b_csv: Option<PathBuf>,
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Sup-norm residual bound (default 1e-10).
    #[arg(long)]
    kernel_tol: Option<f64>,
    /// zero, scalar or seed:VALUE.
    #[arg(long)]
    init: Option<String>,
    /// picard, anderson or anderson:DEPTH.
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated pairing seeds; runs a branch scan.
    #[arg(long, allow_hyphen_values = true)]
    seeds: Option<String>,
    /// Where to write the summary JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

/// Overlays explicitly given flags on the config file's values.
fn merge<T: Serialize + DeserializeOwned>(flags: T, config: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = config else {
        return Ok(flags);
    };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut base: Value = serde_json::from_str(&text)
        .map_err(|e| usage(format!("{}: invalid JSON: {e}", path.display())))?;
    if !base.is_object() {
        return Err(usage(format!("{}: config must be a JSON object", path.display())));
    }
    serde_json::from_value::<T>(base.clone())
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let over = serde_json::to_value(&flags).map_err(|e| usage(e.to_string()))?;
    let obj = base.as_object_mut().expect("checked above");
    if let Value::Object(flags) = over {
        for (k, v) in flags {
            if !v.is_null() && v != Value::Bool(false) {
                obj.insert(k, v);
            }
        }
    }
    serde_json::from_value(base).map_err(|e| usage(e.to_string()))
}

fn model_params(
    lambda_b: Option<f64>,
    lambda_m: Option<f64>,
    mu: Option<f64>,
    temp: Option<f64>,
    beta: Option<f64>,
) -> Result<ModelParams, CliError> {
    let lambda_b = lambda_b.ok_or_else(|| usage("--lambda-b is required"))?;
    let mu = mu.ok_or_else(|| usage("--mu is required"))?;
    let lambda_m = lambda_m.unwrap_or(0.0);
    let p = match (temp, beta) {
        (Some(_), Some(_)) => return Err(usage("give either --temp or --beta, not both")),
        (Some(t), None) => ModelParams::new(lambda_b, lambda_m, mu, t),
        (None, Some(b)) if b < 0.0 => return Err(usage(format!("beta must be non-negative, got {b}"))),
        (None, Some(b)) => ModelParams::with_beta(lambda_b, lambda_m, mu, b),
        (None, None) => return Err(usage("--temp or --beta is required")),
    };
    p.validate().map_err(|e| usage(e.to_string()))
}

fn root_tol(tol: Option<f64>) -> Result<f64, CliError> {
    match tol {
        None => Ok(DEFAULT_TOL),
        Some(t) if t > 0.0 && t.is_finite() => Ok(t),
        Some(t) => Err(usage(format!("tolerance must be positive, got {t}"))),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| io_error(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes).and_then(|_| stdout.flush()).map_err(io_error)
        }
    }
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).map_err(io_error)?;
    Ok(buf)
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = serde_json::to_vec_pretty(value).map_err(io_error)?;
    buf.push(b'\n');
    Ok(buf)
}

#[derive(Serialize)]
struct SolutionView {
    #[serde(flatten)]
    solution: GapSolution,
    invariants_passed: bool,
    invariants: Vec<InvariantCheck>,
}

#[derive(Serialize)]
struct SolveOutput {
    params: ModelParams,
    region: Region,
    multiplicity_class: MultiplicityClass,
    multiplicity: usize,
    solutions: Vec<SolutionView>,
    notes: Vec<String>,
}

#[derive(Serialize)]
struct SolveRow {
    phase: crate::solution::PhaseLabel,
    delta_m: f64,
    delta_b: f64,
    w_bar: f64,
    c: f64,
    s: f64,
    residual: f64,
    invariants_passed: bool,
}

fn cmd_solve(args: SolveArgs) -> Result<i32, CliError> {
    let config = args.config.clone();
    let a = merge(args, config.as_deref())?;
    let params = model_params(a.lambda_b, a.lambda_m, a.mu, a.temp, a.beta)?;
    let opts = SolveOptions {
        tol: root_tol(a.tol)?,
        require_nonnegative_mean_field: a.require_nonnegative_mean_field,
    };
    let report = solve_all(&params, opts)?;
    let solutions: Vec<SolutionView> = report
        .solutions
        .iter()
        .map(|s| {
            let invariants = s.check_invariants(&params, INVARIANT_TOL);
            SolutionView {
                solution: *s,
                invariants_passed: invariants.iter().all(|c| c.passed),
                invariants,
            }
        })
        .collect();
    let bytes = match a.format.unwrap_or(Format::Json) {
        Format::Json => json_bytes(&SolveOutput {
            params,
            region: report.region.region,
            multiplicity_class: report.region.multiplicity,
            multiplicity: report.multiplicity,
            solutions,
            notes: report.notes,
        })?,
        Format::Csv => {
            let rows: Vec<SolveRow> = solutions
                .iter()
                .map(|v| SolveRow {
                    phase: v.solution.phase,
                    delta_m: v.solution.delta_m,
                    delta_b: v.solution.delta_b,
                    w_bar: v.solution.w_bar,
                    c: v.solution.coeffs.c,
                    s: v.solution.coeffs.s,
                    residual: v.solution.residual,
                    invariants_passed: v.invariants_passed,
                })
                .collect();
            csv_bytes(&rows)?
        }
    };
    emit(a.out.as_deref(), &bytes)?;
    Ok(0)
}

fn cmd_scan(args: ScanArgs) -> Result<i32, CliError> {
    let config = args.config.clone();
    let a = merge(args, config.as_deref())?;
    let format = a.format.unwrap_or(Format::Csv);
    let bytes = if a.equilibrium {
        let axis = a
            .lambda_b_bar
            .ok_or_else(|| usage("--equilibrium needs --lambda-b-bar min:max:steps"))?;
        let (min, max, steps) = match axis {
            Axis::Fixed(v) => (v, v, 1),
            Axis::Range { min, max, steps } => (min, max, steps),
        };
        let curve = equilibrium_curve(min, max, steps).map_err(|e| usage(e.to_string()))?;
        match format {
            Format::Csv => csv_bytes(&curve)?,
            Format::Json => json_bytes(&curve)?,
        }
    } else {
        let temperature = match (a.temp, a.beta) {
            (Some(_), Some(_)) => return Err(usage("give either --temp or --beta, not both")),
            (Some(t), None) => t,
            (None, Some(b)) => Axis::Fixed(ModelParams::with_beta(0.0, 0.0, 0.0, b).temperature),
            (None, None) => return Err(usage("--temp or --beta is required")),
        };
        let spec = ScanSpec {
            lambda_b: a.lambda_b.ok_or_else(|| usage("--lambda-b is required"))?,
            lambda_m: a.lambda_m.unwrap_or(Axis::Fixed(0.0)),
            mu: a.mu.ok_or_else(|| usage("--mu is required"))?,
            temperature,
            options: SolveOptions {
                tol: root_tol(a.tol)?,
                require_nonnegative_mean_field: a.require_nonnegative_mean_field,
            },
        };
        let rows = scan(&spec);
        match format {
            Format::Csv => csv_bytes(&rows)?,
            Format::Json => {
                let mut buf = Vec::new();
                write_json(&rows, &mut buf).map_err(io_error)?;
                buf
            }
        }
    };
    emit(a.out.as_deref(), &bytes)?;
    Ok(0)
}

#[derive(Serialize)]
struct VerifyRow {
    quantity: &'static str,
    numeric: f64,
    closed_form: f64,
    abs_diff: f64,
    rel_diff: f64,
    tolerance: f64,
    pass: bool,
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, CliError> {
    let config = args.config.clone();
    let a = merge(args, config.as_deref())?;
    let regime = a.regime.ok_or_else(|| usage("--regime is required"))?;
    let params = model_params(a.lambda_b, a.lambda_m, a.mu, a.temp, a.beta)?;
    let closed = closed_form(regime, &params).map_err(|e| {
        usage(format!("regime {} does not apply to these parameters: {e}", regime.name()))
    })?;
    if !closed.valid {
        return Err(usage(format!(
            "parameters lie outside the validity window of regime {} (margin {})",
            regime.name(),
            closed.margin
        )));
    }
    let tolerance = match a.rel_tol {
        Some(t) if t > 0.0 => t,
        Some(t) => return Err(usage(format!("relative tolerance must be positive, got {t}"))),
        None => match regime {
            Regime::IA | Regime::IIA => LARGE_ARGUMENT_TOL,
            Regime::IB | Regime::IIB => LINEARIZED_TOL,
        },
    };
    let report = solve_all(&params, SolveOptions::with_tol(root_tol(a.tol)?))?;
    let numeric = report
        .mixed()
        .min_by(|x, y| {
            (x.w_bar - closed.w_bar)
                .abs()
                .total_cmp(&(y.w_bar - closed.w_bar).abs())
        })
        .copied()
        .ok_or_else(|| {
            CliError::Disagreement(format!(
                "regime {} predicts a mixed solution but the numeric solver finds none",
                regime.name()
            ))
        })?;

    let row = |quantity, numeric: f64, closed_form: f64, scale: f64| {
        let abs_diff = (numeric - closed_form).abs();
        let rel_diff = if scale > 0.0 { abs_diff / scale } else { abs_diff };
        VerifyRow {
            quantity,
            numeric,
            closed_form,
            abs_diff,
            rel_diff,
            tolerance,
            pass: rel_diff <= tolerance,
        }
    };
    let mut rows = vec![
        row("w_bar", numeric.w_bar, closed.w_bar, numeric.w_bar.abs()),
        row(
            "delta_m",
            numeric.delta_m,
            closed.delta_m,
            numeric.delta_m.abs().max(params.lambda_m.abs()),
        ),
    ];
    if let Some(db) = closed.delta_b {
        rows.push(row("delta_b", numeric.delta_b, db, numeric.delta_b.abs()));
    }
    let bytes = match a.format {
        Some(Format::Csv) => csv_bytes(&rows)?,
        Some(Format::Json) => json_bytes(&rows)?,
        None => {
            let mut text = format!(
                "regime {} (margin {})\n{:<8} {:>22} {:>22} {:>12} {:>10} result\n",
                regime.name(),
                closed.margin,
                "quantity",
                "numeric",
                "closed_form",
                "rel_diff",
                "tolerance"
            );
            for r in &rows {
                text.push_str(&format!(
                    "{:<8} {:>22} {:>22} {:>12.3e} {:>10.1e} {}\n",
                    r.quantity,
                    r.numeric,
                    r.closed_form,
                    r.rel_diff,
                    r.tolerance,
                    if r.pass { "pass" } else { "FAIL" }
                ));
            }
            text.into_bytes()
        }
    };
    emit(a.out.as_deref(), &bytes)?;
    if rows.iter().all(|r| r.pass) {
        Ok(0)
    } else {
        Err(CliError::Disagreement(format!(
            "regime {} disagrees with the numeric solution beyond {tolerance}",
            regime.name()
        )))
    }
}

fn parse_init(s: &str) -> Result<InitialGuess, CliError> {
    match s.trim() {
        "zero" => Ok(InitialGuess::ZeroPairing),
        "scalar" => Ok(InitialGuess::FromScalar),
        other => other
            .strip_prefix("seed:")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .map(InitialGuess::SeededPairing)
            .ok_or_else(|| usage(format!("unknown --init `{other}` (zero, scalar or seed:VALUE)"))),
    }
}

fn parse_scheme(s: &str) -> Result<Scheme, CliError> {
    match s.trim() {
        "picard" => Ok(Scheme::Picard),
        "anderson" => Ok(Scheme::Anderson { depth: 5 }),
        other => other
            .strip_prefix("anderson:")
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&d| d > 0)
            .map(|depth| Scheme::Anderson { depth })
            .ok_or_else(|| usage(format!("unknown --scheme `{other}` (picard or anderson[:DEPTH])"))),
    }
}

fn parse_seeds(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("seed `{t}` is not a number")))
        })
        .collect()
}

fn build_problem(a: &KernelArgs, params: ModelParams) -> Result<GapProblem, CliError> {
    let epsilon = a.epsilon.unwrap_or(0.01);
    if !(epsilon > 0.0) {
        return Err(usage(format!("epsilon must be positive, got {epsilon}")));
    }
    let sqrt_mu = params.mu.sqrt();
    let tab_m = a.kernel_m_csv.as_deref().map(TabulatedKernel::from_path).transpose()?;
    let tab_b = a.kernel_b_csv.as_deref().map(TabulatedKernel::from_path).transpose()?;
    if tab_m.is_none() && tab_b.is_none() {
        let n = a.grid_points.unwrap_or(2000);
        let p_max = a.p_max.unwrap_or(3.0 * sqrt_mu.max(1.0));
        return Ok(GapProblem::shell(params, epsilon, n, p_max)?);
    }
    let momenta = match (&tab_m, &tab_b) {
        (Some(m), Some(b)) if m.momenta != b.momenta => {
            return Err(usage("the two kernel files list different momenta"))
        }
        (Some(t), _) | (None, Some(t)) => t.momenta.clone(),
        (None, None) => unreachable!(),
    };
    let grid = MomentumGrid::from_points(momenta)?;
    let kernel_m = match tab_m {
        Some(t) => t.into_kernel(),
        None => DiscreteKernel::shell(&grid, params.lambda_m, sqrt_mu, epsilon)?,
    };
    let kernel_b = match tab_b {
        Some(t) => t.into_kernel(),
        None => DiscreteKernel::shell(&grid, params.lambda_b, sqrt_mu, epsilon)?,
    };
    let omega = quadratic_dispersion(&grid);
    Ok(GapProblem::new(grid, kernel_m, kernel_b, omega, params)?)
}

#[derive(Serialize)]
struct GapRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    branch: Option<usize>,
    p: f64,
    delta_m: f64,
    delta_b: f64,
    w_bar: f64,
}

#[derive(Serialize)]
struct BranchSummary {
    converged: bool,
    iterations: usize,
    residual: f64,
    fermi_momentum: f64,
    delta_m: f64,
    delta_b: f64,
    w_bar: f64,
}

impl BranchSummary {
    fn new(problem: &GapProblem, s: &KernelSolution, converged: bool) -> Self {
        let i = problem.fermi_index();
        let (delta_m, delta_b, w_bar) = s.at(i);
        Self {
            converged,
            iterations: s.iterations,
            residual: s.residual,
            fermi_momentum: s.momenta[i],
            delta_m,
            delta_b,
            w_bar,
        }
    }
}

fn gap_rows(s: &KernelSolution, branch: Option<usize>) -> impl Iterator<Item = GapRow> + '_ {
    (0..s.momenta.len()).map(move |i| GapRow {
        branch,
        p: s.momenta[i],
        delta_m: s.delta_m[i],
        delta_b: s.delta_b[i],
        w_bar: s.w_bar[i],
    })
}

fn cmd_kernel_solve(args: KernelArgs) -> Result<i32, CliError> {
    let config = args.config.clone();
    let a = merge(args, config.as_deref())?;
    let params = model_params(a.lambda_b, a.lambda_m, a.mu, a.temp, a.beta)?;
    let problem = build_problem(&a, params)?;
    let defaults = IterationControls::default();
    let controls = IterationControls {
        damping: a.damping.unwrap_or(defaults.damping),
        max_iters: a.max_iters.unwrap_or(defaults.max_iters),
        tol: a.kernel_tol.unwrap_or(defaults.tol),
        init: a.init.as_deref().map(parse_init).transpose()?.unwrap_or(defaults.init),
        scheme: a.scheme.as_deref().map(parse_scheme).transpose()?.unwrap_or(defaults.scheme),
    };

    let (rows, summary, code): (Vec<GapRow>, Value, i32) = match a.seeds.as_deref() {
        Some(seeds) => {
            let seeds = parse_seeds(seeds)?;
            // a bad control value fails every seed the same way
            if let Err(e @ KernelError::InvalidControls(_)) = self_consistent_solve(
                &problem,
                &IterationControls {
                    max_iters: 0,
                    ..controls
                },
            ) {
                return Err(e.into());
            }
            let result = branch_scan(&problem, &controls, &seeds);
            let rows = result
                .solutions
                .iter()
                .enumerate()
                .flat_map(|(b, s)| gap_rows(s, Some(b)))
                .collect();
            let branches: Vec<BranchSummary> = result
                .solutions
                .iter()
                .map(|s| BranchSummary::new(&problem, s, true))
                .collect();
            let code = if branches.is_empty() { 4 } else { 0 };
            let summary = serde_json::json!({
                "branches": branches,
                "failures": result.failures,
            });
            (rows, summary, code)
        }
        None => match self_consistent_solve(&problem, &controls) {
            Ok(s) => (
                gap_rows(&s, None).collect(),
                serde_json::to_value(BranchSummary::new(&problem, &s, true)).map_err(io_error)?,
                0,
            ),
            Err(KernelError::NotConverged { last, .. }) => (
                gap_rows(&last, None).collect(),
                serde_json::to_value(BranchSummary::new(&problem, &last, false)).map_err(io_error)?,
                4,
            ),
            Err(e) => return Err(e.into()),
        },
    };

    let bytes = match a.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_bytes(&rows)?,
        Format::Json => json_bytes(&rows)?,
    };
    emit(a.out.as_deref(), &bytes)?;
    let summary_bytes = json_bytes(&summary)?;
    match (&a.summary, &a.out) {
        (Some(path), _) => emit(Some(path), &summary_bytes)?,
        (None, Some(_)) => emit(None, &summary_bytes)?,
        (None, None) => {
            let _ = std::io::stderr().write_all(&summary_bytes);
        }
    }
    if code == 4 {
        eprintln!("error: iteration did not converge");
    }
    Ok(code)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Verify(a) => cmd_verify(a),
        Command::KernelSolve(a) => cmd_kernel_solve(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
