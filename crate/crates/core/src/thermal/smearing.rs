//! Numerical check of the Gaussian smearing limit in one dimension.
//!
//! Smearing a product of two-point functions with `e^{-2 kappa (p + p')^2}`
//! suppresses every term that is not concentrated on `p' = -p`:
//!
//! `I(kappa) = int int e^{-2 kappa (p + p')^2} v(p) v(p') g(p) g(p') dp dp'`
//!
//! decays like `kappa^{-1/2}` for large `kappa`, while the paired term,
//! which already carries `delta(p + p')`, does not depend on `kappa`.

use super::ThermalError;

/// Uniform momentum grid on `[-p_max, p_max]` with exact mirror symmetry
/// `p[n - 1 - i] == -p[i]` and trapezoidal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
    step: f64,
}

impl SymmetricGrid {
    /// `2 * half_points + 1` nodes.
    pub fn new(p_max: f64, half_points: usize) -> Self {
        assert!(p_max > 0.0 && half_points > 0);
        let step = p_max / half_points as f64;
        let positive: Vec<f64> = (1..=half_points).map(|i| i as f64 * step).collect();
        let mut points: Vec<f64> = positive.iter().rev().map(|p| -p).collect();
        points.push(0.0);
        points.extend_from_slice(&positive);
        let n = points.len();
        let mut weights = vec![step; n];
        weights[0] *= 0.5;
        weights[n - 1] *= 0.5;
        Self {
            points,
            weights,
            step,
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub kappas: Vec<f64>,
    pub values: Vec<f64>,
    /// Least-squares slope of `ln I` against `ln kappa`.
    pub slope: f64,
    pub intercept: f64,
}

/// Evaluates the smeared cross term `I(kappa)` for each `kappa` and fits its
/// power-law decay.
///
/// `profile` is the even two-point function (`{p}`), `test_fn` the smearing
/// test function. On a uniform grid `p_i + p_j = k h`, so the double sum
/// reduces to `sum_k e^{-2 kappa (k h)^2} C_k` with a kappa-independent
/// autocorrelation `C_k`.
pub fn smearing_scaling_check<G, V>(
    grid: &SymmetricGrid,
    profile: G,
    test_fn: V,
    kappas: &[f64],
) -> Result<ScalingFit, ThermalError>
where
    G: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
{
    if kappas.len() < 2 {
        return Err(ThermalError::FitFailed("need at least two kappa values".into()));
    }
    let (kmin, kmax) = kappas
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &k| (lo.min(k), hi.max(k)));
    if !(kmin > 0.0) || kmax / kmin < 100.0 {
        return Err(ThermalError::FitFailed(
            "kappa values must be positive and span two decades".into(),
        ));
    }

    let n = grid.points.len();
    let a: Vec<f64> = grid
        .points
        .iter()
        .zip(&grid.weights)
        .map(|(&p, &w)| w * test_fn(p) * profile(p))
        .collect();

    // C[k + n - 1] = sum_{i + j = n - 1 + k} a_i a_j
    let mut corr = vec![0.0; 2 * n - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &aj) in a.iter().enumerate() {
            corr[i + j] += ai * aj;
        }
    }

    let h = grid.step;
    let values: Vec<f64> = kappas
        .iter()
        .map(|&kappa| {
            corr.iter()
                .enumerate()
                .map(|(idx, &c)| {
                    let u = (idx as f64 - (n - 1) as f64) * h;
                    c * (-2.0 * kappa * u * u).exp()
                })
                .sum()
        })
        .collect();

    let mut order: Vec<usize> = (0..kappas.len()).collect();
    order.sort_by(|&x, &y| kappas[x].total_cmp(&kappas[y]));
    for w in order.windows(2) {
        let (lo, hi) = (values[w[0]], values[w[1]]);
        if !(lo > 0.0) || !(hi > 0.0) {
            return Err(ThermalError::FitFailed(format!(
                "non-positive smeared integral ({lo:e}, {hi:e})"
            )));
        }
        if hi > lo {
            return Err(ThermalError::FitFailed(format!(
                "smeared integral not monotone in kappa ({lo:e} -> {hi:e}); \
                 refine the quadrature"
            )));
        }
    }

    let xs: Vec<f64> = kappas.iter().map(|k| k.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok(ScalingFit {
        kappas: kappas.to_vec(),
        values,
        slope,
        intercept: my - slope * mx,
    })
}

/// The surviving paired term `sum_i w_i v(p_i) v(-p_i) [p_i][-p_i]`, smeared
/// with `e^{-kappa (p + p')^2}` at `p' = -p`.
pub fn paired_diagonal_term<G, V>(grid: &SymmetricGrid, pairing: G, test_fn: V, kappa: f64) -> f64
where
    G: Fn(f64) -> f64,
    V: Fn(f64) -> f64,
{
    let n = grid.points.len();
    (0..n)
        .map(|i| {
            let p = grid.points[i];
            let q = grid.points[n - 1 - i];
            let u = p + q;
            grid.weights[i] * test_fn(p) * test_fn(q) * pairing(p) * pairing(q) * (-kappa * u * u).exp()
        })
        .sum()
}
