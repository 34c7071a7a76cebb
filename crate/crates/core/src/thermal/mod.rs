//! Bogoliubov coefficients and thermal two-point functions.
//!
//! For a mode with effective energy `omega_eff = omega(p) + delta_m(p)` and
//! pairing gap `delta_b(p)` the quasi-particle energy is
//! `w = sqrt(omega_eff^2 + delta_b^2)` and the nonvanishing thermal
//! expectations are the occupation
//! `{p} = c^2 / (1 + e^{beta (w - mu)}) + s^2 / (1 + e^{-beta (w - mu)})`
//! and the pairing amplitude `[p] = c s tanh(beta (w - mu) / 2)`.
//!
//! Values are stored on the half axis `p >= 0`. The full axis follows the
//! parity convention `{-p} = {p}`, `[-p] = -[p]`.

mod smearing;

pub use smearing::{
    paired_diagonal_term, smearing_scaling_check, ScalingFit, SymmetricGrid,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::ModelParams;
use crate::solution::BogoliubovCoefficients;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermalError {
    #[error("quasi-particle energy vanishes (omega_eff = delta_b = 0)")]
    ZeroEnergy,
    #[error("momentum {0} is not on the mode grid")]
    MomentumOffGrid(f64),
    #[error("pairing amplitude at p = 0 must vanish for an odd extension, got {0}")]
    ParityViolation(f64),
    #[error("mode table arrays have mismatched lengths")]
    ShapeMismatch,
    #[error("scaling fit failed: {0}")]
    FitFailed(String),
}

/// Fermi factor `1 / (1 + e^{beta e})`, with the step-function limit at
/// `beta = inf` (value `1/2` at `e = 0`).
pub fn fermi(beta: f64, energy: f64) -> f64 {
    if beta == 0.0 {
        return 0.5;
    }
    if beta.is_infinite() {
        return if energy > 0.0 {
            0.0
        } else if energy < 0.0 {
            1.0
        } else {
            0.5
        };
    }
    let z = beta * energy;
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// `tanh(beta e / 2)`, with the sign-function limit at `beta = inf`.
pub fn thermal_tanh(beta: f64, energy: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    if beta.is_infinite() {
        return if energy == 0.0 { 0.0 } else { energy.signum() };
    }
    (0.5 * beta * energy).tanh()
}

/// Coefficients diagonalizing a mode with effective energy `omega_eff` and
/// gap `delta_b`: `c^2 - s^2 = omega_eff / w`, `2 c s = delta_b / w`.
///
/// The angle is `phi = atan2(delta_b, omega_eff) / 2`, which lies in
/// `[-pi/4, pi/4]` whenever `omega_eff >= 0`.
pub fn bogoliubov_from_gaps(
    omega_eff: f64,
    delta_b: f64,
) -> Result<BogoliubovCoefficients, ThermalError> {
    if omega_eff == 0.0 && delta_b == 0.0 {
        return Err(ThermalError::ZeroEnergy);
    }
    Ok(BogoliubovCoefficients::from_angle(
        0.5 * delta_b.atan2(omega_eff),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeState {
    pub p: f64,
    pub omega_eff: f64,
    pub delta_b: f64,
    pub w_bar: f64,
    pub coeffs: BogoliubovCoefficients,
}

impl ModeState {
    pub fn new(p: f64, omega_eff: f64, delta_b: f64) -> Result<Self, ThermalError> {
        let coeffs = bogoliubov_from_gaps(omega_eff, delta_b)?;
        Ok(Self {
            p,
            omega_eff,
            delta_b,
            w_bar: omega_eff.hypot(delta_b),
            coeffs,
        })
    }

    /// Like [`ModeState::new`], but a mode with zero energy is treated as
    /// unpaired (`c = 1`, `s = 0`), the limit along `delta_b = 0`.
    pub fn new_or_unpaired(p: f64, omega_eff: f64, delta_b: f64) -> Self {
        Self::new(p, omega_eff, delta_b).unwrap_or(Self {
            p,
            omega_eff,
            delta_b,
            w_bar: 0.0,
            coeffs: BogoliubovCoefficients::IDENTITY,
        })
    }
}

/// The occupation `{p}`; always in `[0, 1]`.
pub fn occupation(mode: &ModeState, params: &ModelParams) -> f64 {
    let beta = params.beta();
    let f = fermi(beta, mode.w_bar - params.mu);
    let c2 = mode.coeffs.c * mode.coeffs.c;
    let s2 = mode.coeffs.s * mode.coeffs.s;
    c2 * f + s2 * (1.0 - f)
}

/// The pairing amplitude `[p]`; always in `[-1/2, 1/2]`.
pub fn pairing_amplitude(mode: &ModeState, params: &ModelParams) -> f64 {
    mode.coeffs.c * mode.coeffs.s * thermal_tanh(params.beta(), mode.w_bar - params.mu)
}

/// Occupations and pairing amplitudes on a discrete half-axis momentum set,
/// extended to negative momenta by parity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    momenta: Vec<f64>,
    occupation: Vec<f64>,
    pairing: Vec<f64>,
    match_tol: f64,
}

impl ModeTable {
    /// `momenta` must be non-negative and strictly increasing.
    pub fn from_half_axis(
        momenta: Vec<f64>,
        occupation: Vec<f64>,
        pairing: Vec<f64>,
    ) -> Result<Self, ThermalError> {
        if momenta.len() != occupation.len() || momenta.len() != pairing.len() {
            return Err(ThermalError::ShapeMismatch);
        }
        if let Some(&first) = momenta.first() {
            if first == 0.0 && pairing[0] != 0.0 {
                return Err(ThermalError::ParityViolation(pairing[0]));
            }
        }
        let min_gap = momenta
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let scale = momenta.last().copied().unwrap_or(1.0).abs().max(1.0);
        let match_tol = (1e-9 * scale).min(0.25 * min_gap);
        Ok(Self {
            momenta,
            occupation,
            pairing,
            match_tol,
        })
    }

    /// Builds the table from mode states with `p >= 0`.
    pub fn from_modes(modes: &[ModeState], params: &ModelParams) -> Result<Self, ThermalError> {
        let momenta = modes.iter().map(|m| m.p).collect();
        let occ = modes.iter().map(|m| occupation(m, params)).collect();
        let pair = modes
            .iter()
            .map(|m| if m.p == 0.0 { 0.0 } else { pairing_amplitude(m, params) })
            .collect();
        Self::from_half_axis(momenta, occ, pair)
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    fn index(&self, p: f64) -> Result<usize, ThermalError> {
        let a = p.abs();
        let i = self.momenta.partition_point(|&m| m < a - self.match_tol);
        match self.momenta.get(i) {
            Some(&m) if (m - a).abs() <= self.match_tol => Ok(i),
            _ => Err(ThermalError::MomentumOffGrid(p)),
        }
    }

    /// `{p}` with the even extension.
    pub fn occupation(&self, p: f64) -> Result<f64, ThermalError> {
        Ok(self.occupation[self.index(p)?])
    }

    /// `[p]` with the odd extension.
    pub fn pairing(&self, p: f64) -> Result<f64, ThermalError> {
        let v = self.pairing[self.index(p)?];
        Ok(if p < 0.0 { -v } else { v })
    }

    fn same(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.match_tol
    }

    /// Piecewise-linear interpolation of `{p}`, extended evenly and held
    /// constant beyond the last momentum.
    pub fn occupation_interp(&self, p: f64) -> f64 {
        interp(&self.momenta, &self.occupation, p.abs())
    }

    /// Piecewise-linear interpolation of `[p]`, extended oddly.
    pub fn pairing_interp(&self, p: f64) -> f64 {
        let v = interp(&self.momenta, &self.pairing, p.abs());
        if p < 0.0 {
            -v
        } else {
            v
        }
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let t = (x - x0) / (x1 - x0);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

/// Coefficient of `<a*(q) a*(q') a(p) a(p')>` on a discrete symmetric
/// momentum set, where the delta functions become Kronecker deltas:
///
/// `[q][p] d(q,-q') d(p,-p') - {p}{p'} d(p,q) d(p',q') + {p}{p'} d(p,q') d(p',q)`.
pub fn quartic_expectation(
    table: &ModeTable,
    q: f64,
    q2: f64,
    p: f64,
    p2: f64,
) -> Result<f64, ThermalError> {
    // every momentum must be on the grid even if its delta vanishes
    for m in [q, q2, p, p2] {
        table.index(m)?;
    }
    let mut total = 0.0;
    if table.same(q, -q2) && table.same(p, -p2) {
        total += table.pairing(q)? * table.pairing(p)?;
    }
    let pp = table.occupation(p)? * table.occupation(p2)?;
    if table.same(p, q) && table.same(p2, q2) {
        total -= pp;
    }
    if table.same(p, q2) && table.same(p2, q) {
        total += pp;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(t: f64, mu: f64) -> ModelParams {
        ModelParams::new(1.0, 0.0, mu, t)
    }

    #[test]
    fn fermi_limits_and_stability() {
        assert_eq!(fermi(0.0, 3.0), 0.5);
        assert_eq!(fermi(f64::INFINITY, 1.0), 0.0);
        assert_eq!(fermi(f64::INFINITY, -1.0), 1.0);
        assert_eq!(fermi(f64::INFINITY, 0.0), 0.5);
        assert!(fermi(1e6, 1.0) >= 0.0);
        assert_eq!(fermi(1e6, -1.0), 1.0);
        assert!((fermi(1.0, 3f64.ln()) - 0.25).abs() < 1e-15);
        assert!((fermi(800.0, 1.0) - (-800f64).exp()).abs() < 1e-300);
    }

    #[test]
    fn coefficients_examples() {
        let c = bogoliubov_from_gaps(2.0, 0.0).unwrap();
        assert_eq!((c.c, c.s), (1.0, 0.0));

        let c = bogoliubov_from_gaps(0.0, 1.5).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c.c - h).abs() < 1e-15 && (c.s - h).abs() < 1e-15);

        // c^2 - s^2 = 3/5, c^2 + s^2 = 1
        let c = bogoliubov_from_gaps(3.0, 4.0).unwrap();
        assert!((c.c * c.c - 0.8).abs() < 1e-14);
        assert!((c.s * c.s - 0.2).abs() < 1e-14);
        assert!((2.0 * c.c * c.s - 0.8).abs() < 1e-14);

        assert_eq!(bogoliubov_from_gaps(0.0, 0.0), Err(ThermalError::ZeroEnergy));
    }

    fn mode_with(c2: f64, w: f64) -> ModeState {
        let c = c2.sqrt();
        let s = (1.0 - c2).sqrt();
        ModeState {
            p: 1.0,
            omega_eff: w * (c2 - (1.0 - c2)),
            delta_b: 2.0 * c * s * w,
            w_bar: w,
            coeffs: BogoliubovCoefficients {
                c,
                s,
                phi: s.atan2(c),
            },
        }
    }

    #[test]
    fn occupation_examples() {
        let m = mode_with(0.8, 2.0);
        assert!((occupation(&m, &params(f64::INFINITY, 1.0)) - 0.5).abs() < 1e-15);

        let free = ModeState::new(1.0, 2.0, 0.0).unwrap();
        assert_eq!(occupation(&free, &params(0.0, 1.0)), 0.0);

        // beta (w - mu) = ln 3 -> f = 1/4
        let m = mode_with(0.8, 1.0 + 3f64.ln());
        let v = occupation(&m, &params(1.0, 1.0));
        assert!((v - 0.35).abs() < 1e-14, "{v}");
    }

    #[test]
    fn pairing_examples() {
        let free = ModeState::new(1.0, 2.0, 0.0).unwrap();
        assert_eq!(pairing_amplitude(&free, &params(0.1, 1.0)), 0.0);
        let m = mode_with(0.8, 2.0);
        assert_eq!(pairing_amplitude(&m, &params(f64::INFINITY, 1.0)), 0.0);

        // c s = 0.4 and tanh(ln(3)/2) = 1/2
        let m = mode_with(0.8, 1.0 + 3f64.ln());
        let v = pairing_amplitude(&m, &params(1.0, 1.0));
        assert!((v - 0.2).abs() < 1e-14, "{v}");
    }

    fn table() -> ModeTable {
        ModeTable::from_half_axis(
            vec![0.0, 0.5, 1.0, 1.5],
            vec![0.9, 0.7, 0.4, 0.1],
            vec![0.0, 0.2, 0.3, 0.05],
        )
        .unwrap()
    }

    #[test]
    fn quartic_terms() {
        let t = table();
        // q = -q', p = -p', p != q
        let v = quartic_expectation(&t, 0.5, -0.5, 1.0, -1.0).unwrap();
        assert!((v - 0.2 * 0.3).abs() < 1e-15);
        // q = p, q' = p', p != -p'
        let v = quartic_expectation(&t, 0.5, 1.0, 0.5, 1.0).unwrap();
        assert!((v + 0.7 * 0.4).abs() < 1e-15);
        // swapped pair
        let v = quartic_expectation(&t, 1.0, 0.5, 0.5, 1.0).unwrap();
        assert!((v - 0.7 * 0.4).abs() < 1e-15);
        // unpaired, unmatched
        assert_eq!(quartic_expectation(&t, 0.5, 1.0, 1.5, -0.5).unwrap(), 0.0);
        assert_eq!(
            quartic_expectation(&t, 0.7, 1.0, 1.5, -0.5),
            Err(ThermalError::MomentumOffGrid(0.7))
        );
    }

    #[test]
    fn parity_extension() {
        let t = table();
        for p in [0.5, 1.0, 1.5] {
            assert_eq!(t.occupation(-p).unwrap(), t.occupation(p).unwrap());
            assert_eq!(t.pairing(-p).unwrap(), -t.pairing(p).unwrap());
        }
        assert_eq!(
            ModeTable::from_half_axis(vec![0.0], vec![0.5], vec![0.1]),
            Err(ThermalError::ParityViolation(0.1))
        );
    }

    proptest! {
        #[test]
        fn expectations_bounded(
            omega in -10.0f64..10.0,
            delta in -10.0f64..10.0,
            mu in 0.0f64..5.0,
            t in 1e-3f64..10.0,
        ) {
            prop_assume!(omega.abs() + delta.abs() > 1e-9);
            let m = ModeState::new(1.0, omega, delta).unwrap();
            let c = m.coeffs;
            prop_assert!(c.norm_defect() <= 1e-12);
            prop_assert!((c.c * c.c - c.s * c.s - omega / m.w_bar).abs() <= 1e-12);
            prop_assert!((2.0 * c.c * c.s - delta / m.w_bar).abs() <= 1e-12);
            if omega >= 0.0 {
                prop_assert!(c.within_mixing_window());
            }
            let p = params(t, mu);
            let occ = occupation(&m, &p);
            let pair = pairing_amplitude(&m, &p);
            prop_assert!((0.0..=1.0).contains(&occ));
            prop_assert!(pair.abs() <= 0.5 + 1e-15);
        }

        #[test]
        fn quartic_antisymmetric_in_creation_pair(
            i in 0usize..4, j in 0usize..4, k in 0usize..4, l in 0usize..4,
            si in any::<bool>(), sj in any::<bool>(), sk in any::<bool>(), sl in any::<bool>(),
        ) {
            let t = table();
            let m = t.momenta().to_vec();
            let sg = |b: bool, v: f64| if b { -v } else { v };
            let (q, q2, p, p2) = (sg(si, m[i]), sg(sj, m[j]), sg(sk, m[k]), sg(sl, m[l]));
            let a = quartic_expectation(&t, q, q2, p, p2).unwrap();
            let b = quartic_expectation(&t, q2, q, p, p2).unwrap();
            prop_assert!((a + b).abs() < 1e-15);
        }
    }
}
