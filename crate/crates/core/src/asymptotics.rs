//! Closed-form solutions of the Fermi-surface gap equations in four
//! limiting regimes.
//!
//! * IA: `lambda_b > 0`, `beta (lambda_b - mu) >> 1`; the upper root sits at
//!   `w = lambda_b`.
//! * IB: `lambda_b > 0`, `mu << T << lambda_b`; `tanh` is linearized around
//!   the small argument and the mean-field gap saturates at `lambda_m`.
//! * IIA, IIB: the same two limits for `lambda_b < 0`, `lambda_m <= 0`.
//!
//! Each result carries a `valid` flag and a `margin`, the size of the
//! expansion parameter's inverse; it is not an error to evaluate a formula
//! outside its window.

use serde::{Deserialize, Serialize};

use crate::params::ModelParams;
use crate::scalar::ScalarError;

/// Minimum margin for the large-argument regimes (IA, IIA).
pub const VALIDITY_WINDOW: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    IA,
    IB,
    IIA,
    IIB,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::IA, Regime::IB, Regime::IIA, Regime::IIB];

    pub fn name(self) -> &'static str {
        match self {
            Regime::IA => "ia",
            Regime::IB => "ib",
            Regime::IIA => "iia",
            Regime::IIB => "iib",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ia" => Ok(Regime::IA),
            "ib" => Ok(Regime::IB),
            "iia" => Ok(Regime::IIA),
            "iib" => Ok(Regime::IIB),
            other => Err(format!("unknown regime `{other}` (expected ia, ib, iia or iib)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeSolution {
    pub regime: Regime,
    pub w_bar: f64,
    pub delta_m: f64,
    /// `None` when the formula's radicand is negative.
    pub delta_b: Option<f64>,
    pub valid: bool,
    pub margin: f64,
}

impl RegimeSolution {
    /// Largest relative disagreement with a numeric solution, over the
    /// quantities the formula provides. Differences in `delta_m` are scaled
    /// by `max(|delta_m|, |lambda_m|)` so a vanishing gap does not blow up.
    pub fn relative_error(&self, w_bar: f64, delta_m: f64, delta_b: f64, lambda_m: f64) -> f64 {
        let rel = |a: f64, b: f64, scale: f64| {
            if scale == 0.0 {
                (a - b).abs()
            } else {
                (a - b).abs() / scale
            }
        };
        let mut err = rel(self.w_bar, w_bar, w_bar.abs());
        err = err.max(rel(self.delta_m, delta_m, delta_m.abs().max(lambda_m.abs())));
        if let Some(db) = self.delta_b {
            err = err.max(rel(db, delta_b, delta_b.abs()));
        }
        err
    }
}

/// `lambda_m (lambda_b - mu) / (lambda_b + lambda_m)` and
/// `|lambda_b / (lambda_b + lambda_m)| sqrt((lambda_b - mu)(lambda_b + mu + 2 lambda_m))`.
fn saturated_gaps(p: &ModelParams) -> Result<(f64, Option<f64>), ScalarError> {
    let (lb, lm, mu) = (p.lambda_b, p.lambda_m, p.mu);
    let denom = lb + lm;
    if denom == 0.0 {
        return Err(ScalarError::SingularDenominator);
    }
    let delta_m = lm * (lb - mu) / denom;
    let radicand = (lb - mu) * (lb + mu + 2.0 * lm);
    let delta_b = (radicand >= 0.0).then(|| (lb / denom).abs() * radicand.sqrt());
    Ok((delta_m, delta_b))
}

/// `w = lambda_b mu / (lambda_b - 2T)`, `delta_m = lambda_m`.
fn linearized(p: &ModelParams) -> Result<(f64, f64, f64), ScalarError> {
    let denom = p.lambda_b - 2.0 * p.temperature;
    if denom == 0.0 {
        return Err(ScalarError::SingularDenominator);
    }
    let w_bar = p.lambda_b * p.mu / denom;
    let delta_m = p.lambda_m;
    let eff = p.mu + delta_m;
    let radicand = (w_bar - eff) * (w_bar + eff);
    if radicand < 0.0 {
        return Err(ScalarError::NotAdmissible { radicand });
    }
    Ok((w_bar, delta_m, radicand.sqrt()))
}

fn large_argument_margin(gap: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        f64::INFINITY
    } else {
        gap / (2.0 * temperature)
    }
}

fn small_argument_margin(w_bar: f64, mu: f64, temperature: f64) -> f64 {
    let d = (w_bar - mu).abs();
    if d == 0.0 {
        f64::INFINITY
    } else {
        2.0 * temperature / d
    }
}

/// Regime IA: `w = lambda_b`, valid when `lambda_b + mu + 2 lambda_m > 0`
/// and `(lambda_b - mu) / 2T >= 10`.
pub fn regime_ia(params: &ModelParams) -> Result<RegimeSolution, ScalarError> {
    let p = params.validate()?;
    if !(p.lambda_b > 0.0) {
        return Err(ScalarError::NotApplicable);
    }
    let (delta_m, delta_b) = saturated_gaps(&p)?;
    let margin = large_argument_margin(p.lambda_b - p.mu, p.temperature);
    let r = p.lambda_b + p.mu + 2.0 * p.lambda_m;
    Ok(RegimeSolution {
        regime: Regime::IA,
        w_bar: p.lambda_b,
        delta_m,
        delta_b,
        valid: r > 0.0 && p.lambda_b > p.mu && margin >= VALIDITY_WINDOW,
        margin,
    })
}

/// Regime IB: valid for `lambda_m lambda_b / (2 (mu + lambda_m)) < T <=
/// (lambda_b - mu) / 20`.
pub fn regime_ib(params: &ModelParams) -> Result<RegimeSolution, ScalarError> {
    let p = params.validate()?;
    if !(p.lambda_b > 0.0) || p.lambda_b < 2.0 * p.temperature {
        return Err(ScalarError::NotApplicable);
    }
    let (w_bar, delta_m, delta_b) = linearized(&p)?;
    let (lb, lm, mu, t) = (p.lambda_b, p.lambda_m, p.mu, p.temperature);
    let lower = if lm == 0.0 {
        Some(0.0)
    } else if mu + lm == 0.0 {
        None
    } else {
        Some(lm * lb / (2.0 * (mu + lm)))
    };
    let valid = matches!(lower, Some(l) if l < t) && t <= (lb - mu) / 20.0;
    Ok(RegimeSolution {
        regime: Regime::IB,
        w_bar,
        delta_m,
        delta_b: Some(delta_b),
        valid,
        margin: small_argument_margin(w_bar, mu, t),
    })
}

/// Regime IIA: `w = |lambda_b|`, valid when `lambda_b + mu + 2 lambda_m < 0`
/// and `(mu - |lambda_b|) / 2T >= 10`.
pub fn regime_iia(params: &ModelParams) -> Result<RegimeSolution, ScalarError> {
    let p = params.validate()?;
    if !(p.lambda_b < 0.0) || p.lambda_m > 0.0 {
        return Err(ScalarError::NotApplicable);
    }
    let (delta_m, delta_b) = saturated_gaps(&p)?;
    let w_bar = -p.lambda_b;
    let margin = large_argument_margin(p.mu - w_bar, p.temperature);
    let r = p.lambda_b + p.mu + 2.0 * p.lambda_m;
    Ok(RegimeSolution {
        regime: Regime::IIA,
        w_bar,
        delta_m,
        delta_b,
        valid: r < 0.0 && p.mu > w_bar && margin >= VALIDITY_WINDOW,
        margin,
    })
}

/// Temperature window `[5 (mu + lambda_b), lambda_b lambda_m / (2 (mu + lambda_m)))`
/// of regime IIB. `None` when `mu + lambda_m = 0`.
pub fn regime_iib_window(params: &ModelParams) -> Option<(f64, f64)> {
    let (lb, lm, mu) = (params.lambda_b, params.lambda_m, params.mu);
    if mu + lm == 0.0 {
        return None;
    }
    Some((5.0 * (mu + lb), lb * lm / (2.0 * (mu + lm))))
}

/// Regime IIB: the linearized solution for `lambda_b < 0`.
pub fn regime_iib(params: &ModelParams) -> Result<RegimeSolution, ScalarError> {
    let p = params.validate()?;
    if !(p.lambda_b < 0.0) || p.lambda_m > 0.0 {
        return Err(ScalarError::NotApplicable);
    }
    let (w_bar, delta_m, delta_b) = linearized(&p)?;
    let t = p.temperature;
    let valid = matches!(regime_iib_window(&p), Some((lo, hi)) if lo <= t && t < hi);
    Ok(RegimeSolution {
        regime: Regime::IIB,
        w_bar,
        delta_m,
        delta_b: Some(delta_b),
        valid,
        margin: small_argument_margin(w_bar, p.mu, t),
    })
}

pub fn closed_form(regime: Regime, params: &ModelParams) -> Result<RegimeSolution, ScalarError> {
    match regime {
        Regime::IA => regime_ia(params),
        Regime::IB => regime_ib(params),
        Regime::IIA => regime_iia(params),
        Regime::IIB => regime_iib(params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{solve_all, SolveOptions};
    use proptest::prelude::*;

    fn numeric_nearest(p: &ModelParams, w: f64, strict: bool) -> (f64, f64, f64) {
        let opts = SolveOptions {
            require_nonnegative_mean_field: strict,
            ..SolveOptions::default()
        };
        let report = solve_all(p, opts).unwrap();
        let s = report
            .mixed()
            .min_by(|a, b| (a.w_bar - w).abs().total_cmp(&(b.w_bar - w).abs()))
            .expect("a mixed solution");
        (s.w_bar, s.delta_m, s.delta_b)
    }

    #[test]
    fn ib_example() {
        let p = ModelParams::new(10.0, 0.0, 1.0, 0.4);
        let s = regime_ib(&p).unwrap();
        assert!((s.w_bar - 1.0869565).abs() < 1e-6);
        assert!((s.delta_b.unwrap() - 0.4259982).abs() < 1e-6);
        assert_eq!(s.delta_m, 0.0);
    }

    #[test]
    fn singular_and_inapplicable() {
        let p = ModelParams::new(5.0, -5.0, 1.0, 0.1);
        assert_eq!(regime_ia(&p), Err(ScalarError::SingularDenominator));
        let p = ModelParams::new(1.0, 0.0, 0.1, 0.5);
        assert_eq!(regime_ib(&p), Err(ScalarError::SingularDenominator));
        let p = ModelParams::new(-1.0, 0.3, 2.0, 0.1);
        assert_eq!(regime_iia(&p), Err(ScalarError::NotApplicable));
        assert_eq!(regime_ia(&p), Err(ScalarError::NotApplicable));
    }

    #[test]
    fn ib_rejects_negative_radicand() {
        let p = ModelParams::new(10.0, 0.5, 1.0, 0.1);
        assert!(matches!(regime_ib(&p), Err(ScalarError::NotAdmissible { .. })));
    }

    #[test]
    fn ia_matches_numeric_upper_root() {
        let p = ModelParams::new(5.0, 0.5, 1.0, 0.1);
        let s = regime_ia(&p).unwrap();
        assert!(s.valid);
        let (w, dm, db) = numeric_nearest(&p, s.w_bar, false);
        assert!(s.relative_error(w, dm, db, p.lambda_m) < 1e-3);
    }

    #[test]
    fn iia_matches_numeric_root() {
        let p = ModelParams::new(-2.0, -1.0, 3.0, 0.02);
        let s = regime_iia(&p).unwrap();
        assert!(s.valid);
        let (w, dm, db) = numeric_nearest(&p, s.w_bar, true);
        assert!(s.relative_error(w, dm, db, p.lambda_m) < 1e-3);
    }

    #[test]
    fn iib_window_is_exposed() {
        let p = ModelParams::new(-4.0, -0.02, 0.05, 0.1);
        let (lo, hi) = regime_iib_window(&p).unwrap();
        assert!(lo < 0.0 && hi > 0.0);
        assert!(regime_iib(&p).unwrap().valid);
        assert!(regime_iib_window(&ModelParams::new(-4.0, -0.05, 0.05, 0.1)).is_none());
    }

    #[test]
    fn regime_names_round_trip() {
        for r in Regime::ALL {
            assert_eq!(r.name().parse::<Regime>().unwrap(), r);
        }
        assert!("ic".parse::<Regime>().is_err());
    }

    proptest! {
        #[test]
        fn saturated_forms_satisfy_energy_identity(
            lb in -10.0f64..10.0,
            lm in -3.0f64..3.0,
            mu in 0.0f64..5.0,
        ) {
            prop_assume!((lb + lm).abs() > 1e-2);
            let p = ModelParams::new(lb, lm, mu, 0.0);
            let (dm, db) = saturated_gaps(&p).unwrap();
            if let Some(db) = db {
                let lhs = lb * lb;
                let rhs = (mu + dm).powi(2) + db * db;
                prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1.0));
            }
        }
    }
}
