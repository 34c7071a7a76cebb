//! Model parameters and reduced-variable conversions.
//!
//! The model has four energies: the pairing coupling `lambda_b`, the
//! mean-field coupling `lambda_m`, the chemical potential `mu` and the
//! temperature. Only their ratios matter, so no unit scale is fixed.
//!
//! Temperature `0` is the ground state (`beta = inf`); temperature
//! `f64::INFINITY` is the infinite-temperature limit (`beta = 0`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ParamError {
    #[error("chemical potential must be non-negative, got {0}")]
    NegativeChemicalPotential(f64),
    #[error("temperature must be non-negative, got {0}")]
    NegativeTemperature(f64),
    #[error("parameter `{0}` is not a finite number")]
    NonFinite(&'static str),
    #[error("reduced variables are undefined at zero temperature")]
    ZeroTemperature,
}

/// The four model energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda_b: f64,
    pub lambda_m: f64,
    pub mu: f64,
    pub temperature: f64,
}

/// Energies scaled by `beta / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub lambda_b: f64,
    pub lambda_m: f64,
    pub mu: f64,
}

impl ModelParams {
    pub fn new(lambda_b: f64, lambda_m: f64, mu: f64, temperature: f64) -> Self {
        Self {
            lambda_b,
            lambda_m,
            mu,
            temperature,
        }
    }

    /// Builds parameters from an inverse temperature. `beta = 0` maps to
    /// `T = inf` and `beta = inf` to `T = 0`.
    pub fn with_beta(lambda_b: f64, lambda_m: f64, mu: f64, beta: f64) -> Self {
        let temperature = if beta == 0.0 {
            f64::INFINITY
        } else if beta.is_infinite() {
            0.0
        } else {
            1.0 / beta
        };
        Self::new(lambda_b, lambda_m, mu, temperature)
    }

    /// Checks the standing assumptions `mu >= 0`, `T >= 0`.
    ///
    /// `T = 0` is accepted and represented through [`ModelParams::beta`]
    /// returning `inf`; a negative zero temperature is normalized to `+0`.
    pub fn validate(self) -> Result<Self, ParamError> {
        for (name, v) in [
            ("lambda_b", self.lambda_b),
            ("lambda_m", self.lambda_m),
            ("mu", self.mu),
        ] {
            if !v.is_finite() {
                return Err(ParamError::NonFinite(name));
            }
        }
        if self.temperature.is_nan() {
            return Err(ParamError::NonFinite("temperature"));
        }
        if self.mu < 0.0 {
            return Err(ParamError::NegativeChemicalPotential(self.mu));
        }
        if self.temperature < 0.0 {
            return Err(ParamError::NegativeTemperature(self.temperature));
        }
        let mut out = self;
        if out.temperature == 0.0 {
            out.temperature = 0.0;
        }
        Ok(out)
    }

    /// Inverse temperature; `inf` at `T = 0`, `0` at `T = inf`.
    pub fn beta(&self) -> f64 {
        if self.temperature == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.temperature
        }
    }

    pub fn is_ground_state(&self) -> bool {
        self.temperature == 0.0
    }

    pub fn is_infinite_temperature(&self) -> bool {
        self.temperature.is_infinite()
    }

    /// Scales an energy to its reduced form `beta * q / 2`.
    pub fn reduce(&self, q: f64) -> Result<f64, ParamError> {
        if self.is_ground_state() {
            return Err(ParamError::ZeroTemperature);
        }
        Ok(0.5 * self.beta() * q)
    }

    /// Inverse of [`ModelParams::reduce`] for finite, positive `T`.
    pub fn unreduce(&self, q_bar: f64) -> f64 {
        2.0 * self.temperature * q_bar
    }

    pub fn to_reduced(&self) -> Result<ReducedParams, ParamError> {
        Ok(ReducedParams {
            lambda_b: self.reduce(self.lambda_b)?,
            lambda_m: self.reduce(self.lambda_m)?,
            mu: self.reduce(self.mu)?,
        })
    }
}
