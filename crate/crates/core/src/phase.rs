//! Phase-diagram classification and parameter sweeps.
//!
//! For `lambda_b > 0` the coupling plane splits by the two inequalities
//! `lambda_m > -(lambda_b + mu) / 2` (large-gap branch, IA) and
//! `lambda_m < (lambda_b - 4 mu) / 4` (linearized branch, IB): points where
//! only the first holds are `A+`, both `B+`, only the second `C+`. For
//! `lambda_b < 0` a mixed phase needs
//! `-2 mu <= lambda_m <= -mu T / (|lambda_b| + 2T)`, and the region splits
//! at `lambda_m = -(lambda_b + 4 mu) / 4` into `B-` (below) and `A-`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::params::ModelParams;
use crate::scalar::{equilibrium_mu, pairing_roots, solve_all, ScalarError, SolveOptions};
use crate::solution::PhaseLabel;

/// Relative band applied to the strict sub-region inequalities: a point
/// within it of a boundary is classified as not satisfying the inequality.
pub const BOUNDARY_BAND: f64 = 1e-6;

/// Environment variable capping the number of scan worker threads.
pub const THREADS_ENV: &str = "GAPFORGE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "A+")]
    APlus,
    #[serde(rename = "B+")]
    BPlus,
    #[serde(rename = "C+")]
    CPlus,
    #[serde(rename = "A-")]
    AMinus,
    #[serde(rename = "B-")]
    BMinus,
    #[serde(rename = "none")]
    None,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Region::APlus => "A+",
            Region::BPlus => "B+",
            Region::CPlus => "C+",
            Region::AMinus => "A-",
            Region::BMinus => "B-",
            Region::None => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplicityClass {
    NoSolution,
    Unique,
    Two,
}

impl MultiplicityClass {
    pub fn from_root_count(n: usize) -> Self {
        match n {
            0 => MultiplicityClass::NoSolution,
            1 => MultiplicityClass::Unique,
            _ => MultiplicityClass::Two,
        }
    }
}

impl fmt::Display for MultiplicityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MultiplicityClass::NoSolution => "no_solution",
            MultiplicityClass::Unique => "unique",
            MultiplicityClass::Two => "two",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionLabel {
    pub region: Region,
    pub multiplicity: MultiplicityClass,
}

/// Region of the coupling plane a parameter point falls in.
pub fn classify_region(params: &ModelParams) -> Region {
    let (lb, lm, mu, t) = (params.lambda_b, params.lambda_m, params.mu, params.temperature);
    let band = BOUNDARY_BAND * (lb.abs() + mu).max(1.0);
    if lb > 0.0 {
        if lb <= mu {
            return Region::None;
        }
        let ia = lm > -(lb + mu) / 2.0 + band;
        let ib = lm < (lb - 4.0 * mu) / 4.0 - band;
        match (ia, ib) {
            (true, false) => Region::APlus,
            (true, true) => Region::BPlus,
            (false, true) => Region::CPlus,
            (false, false) => Region::None,
        }
    } else if lb < 0.0 {
        let upper = if t.is_infinite() {
            -mu / 2.0
        } else {
            -mu * t / (-lb + 2.0 * t)
        };
        if lm < -2.0 * mu || lm > upper {
            return Region::None;
        }
        if lm < -(lb + 4.0 * mu) / 4.0 - band {
            Region::BMinus
        } else {
            Region::AMinus
        }
    } else {
        Region::None
    }
}

/// How many roots the pairing-energy equation has.
///
/// For `lambda_b > 0` at finite temperature this compares the reduced
/// chemical potential with the tangency value: two roots below it, a double
/// root within `tol * max(1, lb)` of it, none above. Other cases count the
/// roots directly.
pub fn multiplicity_class(params: &ModelParams, tol: f64) -> Result<MultiplicityClass, ScalarError> {
    let p = params.validate()?;
    if p.lambda_b == 0.0 || p.is_infinite_temperature() {
        return Ok(MultiplicityClass::NoSolution);
    }
    if p.lambda_b > 0.0 && !p.is_ground_state() {
        let red = p.to_reduced()?;
        if red.lambda_b <= 1.0 {
            return Ok(MultiplicityClass::NoSolution);
        }
        let (mu_e, _) = equilibrium_mu(red.lambda_b)?;
        return Ok(if (mu_e - red.mu).abs() <= tol * red.lambda_b.max(1.0) {
            MultiplicityClass::Unique
        } else if red.mu < mu_e {
            if red.mu == 0.0 {
                MultiplicityClass::Unique
            } else {
                MultiplicityClass::Two
            }
        } else {
            MultiplicityClass::NoSolution
        });
    }
    Ok(MultiplicityClass::from_root_count(pairing_roots(&p, tol)?.len()))
}

/// One scan dimension: a fixed value or `steps` evenly spaced values from
/// `min` to `max` inclusive.
///
/// Deserializes from a number, a `"min:max:steps"` string or a
/// `{min, max, steps}` object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Axis {
    Fixed(f64),
    Range { min: f64, max: f64, steps: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Axis::Fixed(v) => vec![v],
            Axis::Range { min, steps: 1, .. } => vec![min],
            Axis::Range { min, max, steps } => (0..steps)
                .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Axis::Fixed(_) => 1,
            Axis::Range { steps, .. } => steps,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parses `v` or `min:max:steps`.
impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{t}` is not a number"))
        };
        match parts.as_slice() {
            [v] => Ok(Axis::Fixed(num(v)?)),
            [a, b, n] => {
                let steps = n
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| format!("`{n}` is not a step count"))?;
                if steps == 0 {
                    return Err("step count must be at least 1".into());
                }
                Ok(Axis::Range {
                    min: num(a)?,
                    max: num(b)?,
                    steps,
                })
            }
            _ => Err(format!("`{s}` is neither a value nor min:max:steps")),
        }
    }
}

impl<'de> Deserialize<'de> for Axis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Value(f64),
            Text(String),
            Range { min: f64, max: f64, steps: usize },
        }
        match Repr::deserialize(d)? {
            Repr::Value(v) => Ok(Axis::Fixed(v)),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
            Repr::Range { min, max, steps } if steps > 0 => Ok(Axis::Range { min, max, steps }),
            Repr::Range { .. } => Err(serde::de::Error::custom("step count must be at least 1")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub lambda_b: Axis,
    pub lambda_m: Axis,
    pub mu: Axis,
    pub temperature: Axis,
    pub options: SolveOptions,
}

impl ScanSpec {
    /// Parameter points in row-major order over
    /// `(lambda_b, lambda_m, mu, temperature)`.
    pub fn points(&self) -> Vec<ModelParams> {
        let (lbs, lms, mus, ts) = (
            self.lambda_b.values(),
            self.lambda_m.values(),
            self.mu.values(),
            self.temperature.values(),
        );
        let mut out = Vec::with_capacity(lbs.len() * lms.len() * mus.len() * ts.len());
        for &lb in &lbs {
            for &lm in &lms {
                for &mu in &mus {
                    for &t in &ts {
                        out.push(ModelParams::new(lb, lm, mu, t));
                    }
                }
            }
        }
        out
    }
}

/// One scan record. Empty optional fields mean the branch does not exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub lambda_b: f64,
    pub lambda_m: f64,
    pub mu: f64,
    pub temperature: f64,
    pub region: Region,
    pub multiplicity_class: MultiplicityClass,
    pub multiplicity: usize,
    pub mf_delta_m: Option<f64>,
    pub mf_w_bar: Option<f64>,
    pub lower_delta_m: Option<f64>,
    pub lower_delta_b: Option<f64>,
    pub lower_w_bar: Option<f64>,
    pub upper_delta_m: Option<f64>,
    pub upper_delta_b: Option<f64>,
    pub upper_w_bar: Option<f64>,
    pub error: Option<String>,
}

impl ScanRow {
    pub fn evaluate(params: &ModelParams, options: SolveOptions) -> Self {
        let mut row = ScanRow {
            lambda_b: params.lambda_b,
            lambda_m: params.lambda_m,
            mu: params.mu,
            temperature: params.temperature,
            region: Region::None,
            multiplicity_class: MultiplicityClass::NoSolution,
            multiplicity: 0,
            mf_delta_m: None,
            mf_w_bar: None,
            lower_delta_m: None,
            lower_delta_b: None,
            lower_w_bar: None,
            upper_delta_m: None,
            upper_delta_b: None,
            upper_w_bar: None,
            error: None,
        };
        match solve_all(params, options) {
            Ok(report) => {
                row.region = report.region.region;
                row.multiplicity_class = report.region.multiplicity;
                row.multiplicity = report.multiplicity;
                let mf = report.pure_mean_field();
                row.mf_delta_m = Some(mf.delta_m);
                row.mf_w_bar = Some(mf.w_bar);
                for s in report.mixed() {
                    let slot = match s.phase {
                        PhaseLabel::MixedUpper => {
                            (&mut row.upper_delta_m, &mut row.upper_delta_b, &mut row.upper_w_bar)
                        }
                        _ => (&mut row.lower_delta_m, &mut row.lower_delta_b, &mut row.lower_w_bar),
                    };
                    *slot.0 = Some(s.delta_m);
                    *slot.1 = Some(s.delta_b);
                    *slot.2 = Some(s.w_bar);
                }
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        row
    }
}

fn worker_pool() -> Option<rayon::ThreadPool> {
    let n = std::env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .ok()
}

/// Runs `f` over `items` in parallel, preserving order. The worker count is
/// capped by `GAPFORGE_THREADS` when set.
pub(crate) fn parallel_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let run = || items.par_iter().map(&f).collect();
    match worker_pool() {
        Some(pool) => pool.install(run),
        None => run(),
    }
}

/// Evaluates every point of the grid. Rows come back in row-major order
/// regardless of the number of worker threads.
pub fn scan(spec: &ScanSpec) -> Vec<ScanRow> {
    let points = spec.points();
    parallel_map(&points, |p| ScanRow::evaluate(p, spec.options))
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_csv<W: Write, T: Serialize>(rows: &[T], out: W) -> Result<(), csv::Error> {
    let mut w = csv_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(rows: &[T], mut out: W) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    out.write_all(b"\n").map_err(serde_json::Error::io)
}

/// Point on the tangency curve in reduced variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPoint {
    pub lambda_b_bar: f64,
    pub mu_bar: f64,
    pub x: f64,
}

/// Samples the tangency curve `mu_bar_e(lambda_b_bar)` for
/// `lambda_b_bar` in `[min, max]`; `min` must exceed 1.
pub fn equilibrium_curve(min: f64, max: f64, steps: usize) -> Result<Vec<EquilibriumPoint>, ScalarError> {
    if !(min > 1.0) {
        return Err(ScalarError::DomainError(min));
    }
    if !(max >= min) || !max.is_finite() {
        return Err(ScalarError::DomainError(max));
    }
    Axis::Range {
        min,
        max,
        steps: steps.max(1),
    }
    .values()
    .into_iter()
    .map(|lb| {
        let (mu_bar, x) = equilibrium_mu(lb)?;
        Ok(EquilibriumPoint {
            lambda_b_bar: lb,
            mu_bar,
            x,
        })
    })
    .collect()
}
