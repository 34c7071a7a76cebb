//! Solution records shared by the solvers.

use serde::{Deserialize, Serialize};

use crate::params::ModelParams;
use crate::phase::RegionLabel;
use crate::thermal::{fermi, thermal_tanh};

/// Real Bogoliubov coefficients `c = cos(phi)`, `s = sin(phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovCoefficients {
    pub c: f64,
    pub s: f64,
    pub phi: f64,
}

impl BogoliubovCoefficients {
    pub const IDENTITY: Self = Self {
        c: 1.0,
        s: 0.0,
        phi: 0.0,
    };

    pub fn from_angle(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self { c, s, phi }
    }

    pub fn norm_defect(&self) -> f64 {
        (self.c * self.c + self.s * self.s - 1.0).abs()
    }

    /// `sqrt(2)/2 <= |c| <= 1`, the mixing-angle window of a transformation
    /// whose effective single-particle energy is non-negative.
    pub fn within_mixing_window(&self) -> bool {
        let a = self.c.abs();
        a >= std::f64::consts::FRAC_1_SQRT_2 - 1e-12 && a <= 1.0 + 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    PureMeanField,
    /// Lower of two pairing-energy roots, or the only one.
    MixedLower,
    MixedUpper,
    /// Degenerate double root at the tangency point.
    Tangent,
}

impl PhaseLabel {
    pub fn is_mixed(self) -> bool {
        !matches!(self, PhaseLabel::PureMeanField)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSolution {
    pub delta_m: f64,
    /// Non-negative representative; see `delta_b_sign_free`.
    pub delta_b: f64,
    /// `-delta_b` is an equally valid solution (true whenever `delta_b > 0`).
    pub delta_b_sign_free: bool,
    pub w_bar: f64,
    pub coeffs: BogoliubovCoefficients,
    pub phase: PhaseLabel,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
}

impl GapSolution {
    pub fn is_mixed(&self) -> bool {
        self.phase.is_mixed()
    }

    /// `mu + delta_m`, the effective single-particle energy on the Fermi surface.
    pub fn mean_field_energy(&self, params: &ModelParams) -> f64 {
        params.mu + self.delta_m
    }

    /// Maximum defect of the Fermi-surface gap equations, each term scaled
    /// by its coupling.
    pub fn equation_defect(&self, params: &ModelParams) -> f64 {
        let beta = params.beta();
        let eff = params.mu + self.delta_m;
        let energy = (self.w_bar * self.w_bar - eff * eff - self.delta_b * self.delta_b).abs()
            / self.w_bar.powi(2).max(1.0);
        let t = thermal_tanh(beta, self.w_bar - params.mu);
        let f = fermi(beta, self.w_bar - params.mu);
        let c2 = self.coeffs.c * self.coeffs.c;
        let s2 = self.coeffs.s * self.coeffs.s;
        let occupation = c2 * f + s2 * (1.0 - f);
        let mean_field = (0.5 * self.delta_m - params.lambda_m * occupation).abs()
            / params.lambda_m.abs().max(1.0);
        let pairing = if self.is_mixed() {
            (self.w_bar - params.lambda_b * t).abs() / params.lambda_b.abs().max(1.0)
        } else {
            0.0
        };
        energy.max(mean_field).max(pairing)
    }

    /// Evaluates the sign, bound and consistency conditions that every
    /// solution must satisfy. Mixed-only conditions are skipped for the
    /// pure mean-field branch.
    pub fn check_invariants(&self, params: &ModelParams, tol: f64) -> Vec<InvariantCheck> {
        let mut out = Vec::new();
        let mut push = |name: &str, passed: bool, value: f64| {
            out.push(InvariantCheck {
                name: name.to_string(),
                passed,
                value,
            })
        };
        let eff = params.mu + self.delta_m;
        let energy_defect = (self.w_bar * self.w_bar - eff * eff - self.delta_b * self.delta_b)
            .abs()
            / self.w_bar.powi(2).max(1.0);
        push("quasi_particle_energy", energy_defect <= tol, energy_defect);

        let lm = params.lambda_m;
        push("mean_field_sign", lm * self.delta_m >= 0.0, self.delta_m);
        let bound = 2.0 * lm.abs();
        push(
            "mean_field_bound",
            self.delta_m.abs() <= bound * (1.0 + tol) + tol,
            self.delta_m.abs() - bound,
        );
        push(
            "coefficient_norm",
            self.coeffs.norm_defect() <= 1e-12,
            self.coeffs.norm_defect(),
        );

        if self.is_mixed() {
            push("positive_energy", self.w_bar > 0.0, self.w_bar);
            let lb = params.lambda_b.abs();
            push(
                "pairing_energy_bound",
                self.w_bar <= lb * (1.0 + tol),
                self.w_bar - lb,
            );
            let side = if params.lambda_b > 0.0 {
                self.w_bar > params.mu
            } else {
                self.w_bar < params.mu
            };
            push("sign_dichotomy", side, self.w_bar - params.mu);
            push(
                "gap_below_energy",
                self.delta_b <= self.w_bar * (1.0 + tol),
                self.delta_b - self.w_bar,
            );
            if self.delta_b > 0.0 {
                push("energy_above_mean_field", self.w_bar > eff, self.w_bar - eff);
            }
            if eff >= 0.0 {
                push(
                    "mixing_angle_window",
                    self.coeffs.within_mixing_window(),
                    self.coeffs.c.abs(),
                );
            }
        }
        out
    }
}

/// All solutions found at one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub params: ModelParams,
    /// Pure mean-field solution first, then mixed solutions by increasing `w_bar`.
    pub solutions: Vec<GapSolution>,
    pub region: RegionLabel,
    /// Number of mixed solutions (0, 1 or 2).
    pub multiplicity: usize,
    /// Roots of the pairing-energy equation that did not yield an admissible
    /// mixed solution, with the reason.
    pub notes: Vec<String>,
}

impl SolveReport {
    pub fn pure_mean_field(&self) -> &GapSolution {
        &self.solutions[0]
    }

    pub fn mixed(&self) -> impl Iterator<Item = &GapSolution> {
        self.solutions.iter().filter(|s| s.is_mixed())
    }
}
