//! Exact solver for the gap equations on the Fermi surface.
//!
//! With interactions concentrated on a thin shell around `|k| = sqrt(mu)` the
//! coupled gap equations reduce to three scalar relations:
//!
//! ```text
//! delta_m / 2 = lambda_m { c^2 f(w - mu) + s^2 (1 - f(w - mu)) }
//! w           = lambda_b tanh(beta (w - mu) / 2)      (or delta_b = 0)
//! w^2         = (mu + delta_m)^2 + delta_b^2
//! ```
//!
//! The pairing-energy equation is solved in the reduced variable
//! `x = beta w / 2`, where it reads `x = lb tanh(x - mb)` with
//! `lb = beta lambda_b / 2`, `mb = beta mu / 2`. For `lb > 0` the right side
//! minus `x` is concave on `x > mb`, so there are at most two roots, split by
//! the stationary point; for `lb < 0` it is strictly decreasing and there is
//! at most one root in `(0, min(mb, |lb|))`.

mod roots;

pub use roots::{bisect, newton_polish, scan_brackets, RootBracket};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ModelParams, ParamError};
use crate::phase::{classify_region, MultiplicityClass, RegionLabel};
use crate::solution::{BogoliubovCoefficients, GapSolution, PhaseLabel, SolveReport};
use crate::thermal::{bogoliubov_from_gaps, fermi, thermal_tanh};

/// Default root tolerance, absolute in reduced units.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Initial subdivisions of each monotone search interval.
pub const SCAN_SUBDIVISIONS: usize = 512;
const BISECT_XTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalarError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("lambda_b = 0: the pairing equation only admits the trivial branch")]
    ZeroCoupling,
    #[error("singular denominator (lambda_b + lambda_m = 0)")]
    SingularDenominator,
    #[error("quasi-particle energy must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error("mean-field gap {delta_m} violates sign(delta_m) = sign(lambda_m), |delta_m| <= {bound}")]
    ConstraintViolation { delta_m: f64, bound: f64 },
    #[error("no mixed phase at this root: w^2 - (mu + delta_m)^2 = {radicand}")]
    NotAdmissible { radicand: f64 },
    #[error("reduced coupling {0} is outside the domain [1, inf)")]
    DomainError(f64),
    #[error("formula not applicable to these parameters")]
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootKind {
    Lower,
    Upper,
    /// The only root (negative coupling, `mu = 0`, or zero temperature).
    Single,
    Tangent,
}

impl RootKind {
    pub fn phase(self) -> PhaseLabel {
        match self {
            RootKind::Lower | RootKind::Single => PhaseLabel::MixedLower,
            RootKind::Upper => PhaseLabel::MixedUpper,
            RootKind::Tangent => PhaseLabel::Tangent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedRoot {
    pub x: f64,
    pub kind: RootKind,
    /// `|lb tanh(x - mb) - x|`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingRoot {
    pub w_bar: f64,
    pub kind: RootKind,
    pub residual: f64,
}

/// `lb tanh(x - mb) - x`.
pub fn pairing_defect(lb: f64, mb: f64, x: f64) -> f64 {
    lb * (x - mb).tanh() - x
}

fn pairing_defect_slope(lb: f64, mb: f64, x: f64) -> f64 {
    let c = (x - mb).cosh();
    lb / (c * c) - 1.0
}

/// Offset `y > 0` with `lb sech^2(y) = 1`, located by bisection. Requires
/// `lb > 1`.
pub fn stationary_offset(lb: f64) -> f64 {
    let g = |y: f64| {
        let c = y.cosh();
        lb / (c * c) - 1.0
    };
    // sech^2(y) <= 4 e^{-2y}, so g < 0 beyond ln(2 sqrt(lb))
    let hi = (2.0 * lb.sqrt()).ln() + 1.0;
    bisect(
        g,
        RootBracket {
            lo: 0.0,
            hi,
            f_lo: g(0.0),
            f_hi: g(hi),
        },
        0.0,
    )
}

fn polished_root(lb: f64, mb: f64, lo: f64, hi: f64) -> Option<f64> {
    let f = |x: f64| pairing_defect(lb, mb, x);
    let br = scan_brackets(f, lo, hi, SCAN_SUBDIVISIONS).into_iter().next()?;
    let x = bisect(f, br, BISECT_XTOL);
    Some(newton_polish(
        f,
        |x| pairing_defect_slope(lb, mb, x),
        x,
        br.lo,
        br.hi,
    ))
}

/// All positive roots of `x = lb tanh(x - mb)`, ascending.
///
/// A tangent (double) root is reported when the maximum of
/// `lb tanh(x - mb) - x` is within `tol * max(1, |lb|)` of zero.
pub fn reduced_pairing_roots(lb: f64, mb: f64, tol: f64) -> Vec<ReducedRoot> {
    let scale = lb.abs().max(1.0);
    let mk = |x: f64, kind| ReducedRoot {
        x,
        kind,
        residual: pairing_defect(lb, mb, x).abs(),
    };
    if lb > 0.0 {
        // for lb <= 1 the defect is decreasing on x > mb and starts at -mb <= 0
        if lb <= 1.0 {
            return Vec::new();
        }
        let xs = mb + stationary_offset(lb);
        let peak = pairing_defect(lb, mb, xs);
        if peak.abs() <= tol * scale {
            return vec![mk(xs, RootKind::Tangent)];
        }
        if peak < 0.0 {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(2);
        // mb = 0 would make x = 0 (w = 0) the lower root; it is excluded
        let two = mb > 0.0;
        if two {
            if let Some(x) = polished_root(lb, mb, mb, xs) {
                out.push(mk(x, RootKind::Lower));
            }
        }
        if let Some(x) = polished_root(lb, mb, xs, lb.max(xs)) {
            out.push(mk(x, if two { RootKind::Upper } else { RootKind::Single }));
        }
        out
    } else if lb < 0.0 {
        if mb <= 0.0 {
            return Vec::new();
        }
        let hi = mb.min(-lb);
        polished_root(lb, mb, 0.0, hi)
            .filter(|&x| x > 0.0)
            .map(|x| vec![mk(x, RootKind::Single)])
            .unwrap_or_default()
    } else {
        Vec::new()
    }
}

/// Roots of the pairing-energy equation with their branch labels.
pub fn pairing_roots(params: &ModelParams, tol: f64) -> Result<Vec<PairingRoot>, ScalarError> {
    let params = params.validate()?;
    if params.lambda_b == 0.0 {
        return Err(ScalarError::ZeroCoupling);
    }
    if params.is_ground_state() {
        // w = lambda_b sign(w - mu)
        let (lb, mu) = (params.lambda_b, params.mu);
        let w = lb.abs();
        let ok = if lb > 0.0 { w > mu } else { w < mu };
        return Ok(if ok {
            vec![PairingRoot {
                w_bar: w,
                kind: RootKind::Single,
                residual: 0.0,
            }]
        } else {
            Vec::new()
        });
    }
    let red = params.to_reduced()?;
    let scale = 2.0 * params.temperature;
    Ok(reduced_pairing_roots(red.lambda_b, red.mu, tol)
        .into_iter()
        .map(|r| PairingRoot {
            w_bar: scale * r.x,
            kind: r.kind,
            residual: r.residual,
        })
        .collect())
}

/// Positive quasi-particle energies solving the pairing-energy equation,
/// ascending.
pub fn pairing_energy_roots(params: &ModelParams, tol: f64) -> Result<Vec<f64>, ScalarError> {
    Ok(pairing_roots(params, tol)?
        .into_iter()
        .map(|r| r.w_bar)
        .collect())
}

/// Mean-field gap on a mixed branch with quasi-particle energy `w_bar`.
///
/// Eliminating `c^2`, `s^2` makes the mean-field equation linear in
/// `delta_m`: with `t = tanh(beta (w - mu) / 2)`,
/// `delta_m = lambda_m (w - mu t) / (w + lambda_m t)`. At a root of the
/// pairing equation `t = w / lambda_b` and this becomes
/// `lambda_m (lambda_b - mu) / (lambda_b + lambda_m)`.
pub fn mean_field_gap_given_w(w_bar: f64, params: &ModelParams) -> Result<f64, ScalarError> {
    if !(w_bar > 0.0) {
        return Err(ScalarError::NonPositiveEnergy(w_bar));
    }
    let (lb, lm, mu) = (params.lambda_b, params.lambda_m, params.mu);
    if lm == 0.0 {
        return Ok(0.0);
    }
    if lb + lm == 0.0 {
        return Err(ScalarError::SingularDenominator);
    }
    let t = thermal_tanh(params.beta(), w_bar - mu);
    let denom = w_bar + lm * t;
    if denom.abs() <= 1e-14 * w_bar.max(lm.abs()) {
        return Err(ScalarError::SingularDenominator);
    }
    let delta_m = lm * (w_bar - mu * t) / denom;
    let bound = 2.0 * lm.abs();
    if lm * delta_m < 0.0 || delta_m.abs() > bound * (1.0 + 1e-12) {
        return Err(ScalarError::ConstraintViolation { delta_m, bound });
    }
    Ok(delta_m)
}

/// `delta_b = +sqrt(w^2 - (mu + delta_m)^2)`; the negative sign is an
/// equivalent solution.
pub fn recover_delta_b(
    w_bar: f64,
    delta_m: f64,
    params: &ModelParams,
    tol: f64,
) -> Result<f64, ScalarError> {
    if !(w_bar > 0.0) {
        return Err(ScalarError::NonPositiveEnergy(w_bar));
    }
    let eff = params.mu + delta_m;
    let radicand = (w_bar - eff) * (w_bar + eff);
    if radicand < -tol * w_bar.powi(2).max(1.0) {
        return Err(ScalarError::NotAdmissible { radicand });
    }
    Ok(radicand.max(0.0).sqrt())
}

/// The pure mean-field gap, the unique root of
/// `delta (1 + e^{beta delta}) = 2 lambda_m`.
///
/// The left side is strictly increasing (its derivative is
/// `1 + e^u (1 + u) >= 1 - e^{-2}` with `u = beta delta`), so bisection on
/// `[-2|lambda_m|, 2|lambda_m|]` is exact.
pub fn pure_mean_field(params: &ModelParams) -> f64 {
    let lm = params.lambda_m;
    let beta = params.beta();
    if lm == 0.0 {
        return 0.0;
    }
    if beta == 0.0 {
        return lm;
    }
    if beta.is_infinite() {
        return if lm < 0.0 { 2.0 * lm } else { 0.0 };
    }
    let g = |d: f64| d * (1.0 + (beta * d).exp()) - 2.0 * lm;
    let b = 2.0 * lm.abs();
    bisect(
        g,
        RootBracket {
            lo: -b,
            hi: b,
            f_lo: g(-b),
            f_hi: g(b),
        },
        0.0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    /// Drop mixed solutions with `mu + delta_m < 0`.
    pub require_nonnegative_mean_field: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            require_nonnegative_mean_field: false,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

fn pure_solution(params: &ModelParams) -> GapSolution {
    let delta_m = pure_mean_field(params);
    let residual = (delta_m - 2.0 * params.lambda_m * fermi(params.beta(), delta_m)).abs()
        / params.lambda_m.abs().max(1.0);
    GapSolution {
        delta_m,
        delta_b: 0.0,
        delta_b_sign_free: false,
        w_bar: params.mu + delta_m,
        coeffs: BogoliubovCoefficients::IDENTITY,
        phase: PhaseLabel::PureMeanField,
        residual,
    }
}

/// Enumerates the pure mean-field solution and every admissible mixed
/// solution at one parameter point.
pub fn solve_all(params: &ModelParams, opts: SolveOptions) -> Result<SolveReport, ScalarError> {
    let params = params.validate()?;
    let mut solutions = vec![pure_solution(&params)];
    let mut notes = Vec::new();

    let roots = match pairing_roots(&params, opts.tol) {
        Ok(r) => r,
        Err(ScalarError::ZeroCoupling) => {
            notes.push(ScalarError::ZeroCoupling.to_string());
            Vec::new()
        }
        Err(e) => return Err(e),
    };

    for root in &roots {
        let w = root.w_bar;
        let delta_m = match mean_field_gap_given_w(w, &params) {
            Ok(d) => d,
            Err(e) => {
                notes.push(format!("root w = {w}: {e}"));
                continue;
            }
        };
        let delta_b = match recover_delta_b(w, delta_m, &params, opts.tol) {
            Ok(d) => d,
            Err(e) => {
                notes.push(format!("root w = {w}: {e}"));
                continue;
            }
        };
        let eff = params.mu + delta_m;
        if opts.require_nonnegative_mean_field && eff < 0.0 {
            notes.push(format!("root w = {w}: mu + delta_m = {eff} < 0 filtered"));
            continue;
        }
        let coeffs = bogoliubov_from_gaps(eff, delta_b).unwrap_or(BogoliubovCoefficients::IDENTITY);
        let mut sol = GapSolution {
            delta_m,
            delta_b,
            delta_b_sign_free: delta_b > 0.0,
            w_bar: w,
            coeffs,
            phase: root.kind.phase(),
            residual: 0.0,
        };
        sol.residual = sol.equation_defect(&params);
        solutions.push(sol);
    }

    let multiplicity = solutions.len() - 1;
    Ok(SolveReport {
        params,
        solutions,
        region: RegionLabel {
            region: classify_region(&params),
            multiplicity: MultiplicityClass::from_root_count(roots.len()),
        },
        multiplicity,
        notes,
    })
}

/// Chemical potential at which the two pairing-energy roots merge, and the
/// merged root: `theta = arccosh(sqrt(lb))`, `x_e = lb tanh(theta)`,
/// `mb_e = x_e - theta`.
pub fn equilibrium_mu(lambda_b_bar: f64) -> Result<(f64, f64), ScalarError> {
    if !(lambda_b_bar >= 1.0) || !lambda_b_bar.is_finite() {
        return Err(ScalarError::DomainError(lambda_b_bar));
    }
    let theta = lambda_b_bar.sqrt().acosh();
    let x_e = lambda_b_bar * theta.tanh();
    Ok((x_e - theta, x_e))
}

/// `T_c = lambda_b / 2`; at and above it the pairing equation has no
/// positive root.
pub fn critical_temperature(params: &ModelParams) -> Result<f64, ScalarError> {
    if params.lambda_b > 0.0 {
        Ok(0.5 * params.lambda_b)
    } else {
        Err(ScalarError::NotApplicable)
    }
}
