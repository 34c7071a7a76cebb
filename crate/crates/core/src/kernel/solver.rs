use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::grid::MomentumGrid;
use super::kernels::DiscreteKernel;
use super::KernelError;
use crate::params::ModelParams;
use crate::phase::parallel_map;
use crate::scalar::{solve_all, SolveOptions};
use crate::thermal::{occupation, pairing_amplitude, ModeState};

/// Relative tolerance on `V_B(k, p) = V_B(p, k)`.
const SYMMETRY_TOL: f64 = 1e-12;

/// A discretized instance of the momentum-resolved gap equations
///
/// ```text
/// delta_m(k) = 2 int V_M(k, p) {p} dp
/// delta_b(k) = 2 int V_B(k, p) [p] dp
/// ```
///
/// with mode energies `omega(p) + delta_m(p)` and `delta_b(p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProblem {
    pub grid: MomentumGrid,
    pub kernel_m: DiscreteKernel,
    pub kernel_b: DiscreteKernel,
    pub omega: Vec<f64>,
    pub params: ModelParams,
}

pub fn quadratic_dispersion(grid: &MomentumGrid) -> Vec<f64> {
    grid.points().iter().map(|p| p * p).collect()
}

impl GapProblem {
    pub fn new(
        grid: MomentumGrid,
        kernel_m: DiscreteKernel,
        kernel_b: DiscreteKernel,
        omega: Vec<f64>,
        params: ModelParams,
    ) -> Result<Self, KernelError> {
        let params = params.validate()?;
        let n = grid.len();
        for len in [kernel_m.len(), kernel_b.len(), omega.len()] {
            if len != n {
                return Err(KernelError::ShapeMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if let DiscreteKernel::Dense { values, .. } = &kernel_b {
            let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            let defect = kernel_b.asymmetry();
            if defect > SYMMETRY_TOL * scale {
                return Err(KernelError::AsymmetricKernel(defect));
            }
        }
        Ok(Self {
            grid,
            kernel_m,
            kernel_b,
            omega,
            params,
        })
    }

    /// Thin-shell kernels of half-width `epsilon` around `sqrt(mu)` with
    /// strengths `lambda_m`, `lambda_b` and `omega = p^2`.
    pub fn shell(
        params: ModelParams,
        epsilon: f64,
        grid_points: usize,
        p_max: f64,
    ) -> Result<Self, KernelError> {
        let params = params.validate()?;
        let sqrt_mu = params.mu.sqrt();
        let grid = MomentumGrid::shell_adapted(p_max, grid_points, sqrt_mu, epsilon)?;
        let kernel_m = DiscreteKernel::shell(&grid, params.lambda_m, sqrt_mu, epsilon)?;
        let kernel_b = DiscreteKernel::shell(&grid, params.lambda_b, sqrt_mu, epsilon)?;
        let omega = quadratic_dispersion(&grid);
        Self::new(grid, kernel_m, kernel_b, omega, params)
    }

    /// Index of the grid node nearest the Fermi momentum `sqrt(mu)`.
    pub fn fermi_index(&self) -> usize {
        self.grid.nearest(self.params.mu.sqrt())
    }

    fn modes(&self, delta_m: &[f64], delta_b: &[f64]) -> Vec<ModeState> {
        self.grid
            .points()
            .iter()
            .zip(&self.omega)
            .zip(delta_m.iter().zip(delta_b))
            .map(|((&p, &w), (&dm, &db))| ModeState::new_or_unpaired(p, w + dm, db))
            .collect()
    }
}

/// Right-hand side of the gap equations at the given gaps.
pub fn gap_rhs(problem: &GapProblem, delta_m: &[f64], delta_b: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let modes = problem.modes(delta_m, delta_b);
    let occ: Vec<f64> = modes.iter().map(|m| occupation(m, &problem.params)).collect();
    let pair: Vec<f64> = modes
        .iter()
        .map(|m| pairing_amplitude(m, &problem.params))
        .collect();
    let mut dm = problem.kernel_m.apply(&problem.grid, &occ);
    let mut db = problem.kernel_b.apply(&problem.grid, &pair);
    dm.iter_mut().for_each(|v| *v *= 2.0);
    db.iter_mut().for_each(|v| *v *= 2.0);
    (dm, db)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialGuess {
    /// `delta_m = delta_b = 0`.
    ZeroPairing,
    /// `delta_m = 0`, `delta_b` equal to the value times the pairing
    /// kernel's profile.
    SeededPairing(f64),
    /// The Fermi-surface solution with the largest quasi-particle energy,
    /// spread over the kernel profiles.
    FromScalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scheme {
    /// Damped fixed-point iteration `x <- x + alpha (F(x) - x)`.
    Picard,
    /// Anderson mixing over the last `depth` iterates. Converges to fixed
    /// points where the Picard map is expanding.
    Anderson { depth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationControls {
    pub damping: f64,
    pub max_iters: usize,
    /// Sup-norm bound on `F(x) - x`.
    pub tol: f64,
    pub init: InitialGuess,
    pub scheme: Scheme,
}

impl Default for IterationControls {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iters: 10_000,
            tol: 1e-10,
            init: InitialGuess::ZeroPairing,
            scheme: Scheme::Picard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSolution {
    pub momenta: Vec<f64>,
    pub delta_m: Vec<f64>,
    /// Non-negative on average; `-delta_b` is an equivalent solution.
    pub delta_b: Vec<f64>,
    pub w_bar: Vec<f64>,
    pub occupation: Vec<f64>,
    pub pairing: Vec<f64>,
    /// Number of right-hand-side evaluations.
    pub iterations: usize,
    pub residual: f64,
}

impl KernelSolution {
    fn build(problem: &GapProblem, mut x: Vec<f64>, iterations: usize, residual: f64) -> Self {
        let n = problem.grid.len();
        let mut delta_b = x.split_off(n);
        let delta_m = x;
        if delta_b.iter().sum::<f64>() < 0.0 {
            delta_b.iter_mut().for_each(|v| *v = -*v);
        }
        let modes = problem.modes(&delta_m, &delta_b);
        Self {
            momenta: problem.grid.points().to_vec(),
            w_bar: modes.iter().map(|m| m.w_bar).collect(),
            occupation: modes.iter().map(|m| occupation(m, &problem.params)).collect(),
            pairing: modes
                .iter()
                .map(|m| pairing_amplitude(m, &problem.params))
                .collect(),
            delta_m,
            delta_b,
            iterations,
            residual,
        }
    }

    /// `(delta_m, delta_b, w_bar)` at grid index `i`.
    pub fn at(&self, i: usize) -> (f64, f64, f64) {
        (self.delta_m[i], self.delta_b[i], self.w_bar[i])
    }

    /// Sup-norm distance between the gap profiles of two solutions.
    pub fn distance(&self, other: &KernelSolution) -> f64 {
        let d = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        };
        d(&self.delta_m, &other.delta_m).max(d(&self.delta_b, &other.delta_b))
    }
}

fn initial_state(problem: &GapProblem, init: InitialGuess) -> Result<Vec<f64>, KernelError> {
    let n = problem.grid.len();
    let (m_amp, b_amp) = match init {
        InitialGuess::ZeroPairing => (0.0, 0.0),
        InitialGuess::SeededPairing(v) => (0.0, v),
        InitialGuess::FromScalar => {
            let report = solve_all(&problem.params, SolveOptions::default())?;
            let s = report
                .mixed()
                .last()
                .copied()
                .unwrap_or(*report.pure_mean_field());
            (s.delta_m, s.delta_b)
        }
    };
    let mut x = Vec::with_capacity(2 * n);
    x.extend(problem.kernel_m.profile(&problem.grid).iter().map(|u| m_amp * u));
    x.extend(problem.kernel_b.profile(&problem.grid).iter().map(|u| b_amp * u));
    Ok(x)
}

fn evaluate(problem: &GapProblem, x: &[f64]) -> Vec<f64> {
    let n = problem.grid.len();
    let (dm, db) = gap_rhs(problem, &x[..n], &x[n..]);
    let mut out = dm;
    out.extend(db);
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the small dense system `a x = b` by Gaussian elimination with
/// partial pivoting; `None` if it is numerically singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[piv][col].abs() > 1e-300) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Anderson update from `x` with residual `g`, using differences of past
/// iterates and residuals.
fn anderson_step(x: &[f64], g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>)>, alpha: f64) -> Vec<f64> {
    let picard = || x.iter().zip(g).map(|(xi, gi)| xi + alpha * gi).collect();
    let m = history.len();
    if m == 0 {
        return picard();
    }
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for i in 0..m {
        for j in 0..=i {
            let v = dot(&history[i].1, &history[j].1);
            a[i][j] = v;
            a[j][i] = v;
        }
        b[i] = dot(&history[i].1, g);
    }
    let reg = 1e-12 * (0..m).map(|i| a[i][i]).fold(0.0, f64::max);
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += reg;
    }
    let Some(gamma) = solve_dense(a, b) else {
        return picard();
    };
    let mut next: Vec<f64> = picard();
    for (gi, (dx, dg)) in gamma.iter().zip(history) {
        for k in 0..next.len() {
            next[k] -= gi * (dx[k] + alpha * dg[k]);
        }
    }
    next
}

/// Iterates the gap equations from the configured initial guess until the
/// sup-norm residual drops below `tol`.
pub fn self_consistent_solve(
    problem: &GapProblem,
    controls: &IterationControls,
) -> Result<KernelSolution, KernelError> {
    if !(controls.damping > 0.0 && controls.damping <= 1.0) {
        return Err(KernelError::InvalidControls(format!(
            "damping must lie in (0, 1], got {}",
            controls.damping
        )));
    }
    if !(controls.tol > 0.0) {
        return Err(KernelError::InvalidControls(format!(
            "tolerance must be positive, got {}",
            controls.tol
        )));
    }
    let alpha = controls.damping;
    let mut x = initial_state(problem, controls.init)?;
    let mut history: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut last_residual = f64::INFINITY;

    for evals in 1..=controls.max_iters {
        let fx = evaluate(problem, &x);
        let g: Vec<f64> = fx.iter().zip(&x).map(|(f, xi)| f - xi).collect();
        let residual = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !residual.is_finite() {
            break;
        }
        last_residual = residual;
        if residual < controls.tol {
            return Ok(KernelSolution::build(problem, x, evals, residual));
        }
        let next = match controls.scheme {
            Scheme::Picard => x.iter().zip(&g).map(|(xi, gi)| xi + alpha * gi).collect(),
            Scheme::Anderson { depth } => {
                if let Some((xp, gp)) = prev.take() {
                    let dx = x.iter().zip(&xp).map(|(a, b)| a - b).collect();
                    let dg = g.iter().zip(&gp).map(|(a, b)| a - b).collect();
                    history.push_back((dx, dg));
                    while history.len() > depth {
                        history.pop_front();
                    }
                }
                let next = anderson_step(&x, &g, &history, alpha);
                if next.iter().all(|v| v.is_finite()) {
                    next
                } else {
                    history.clear();
                    x.iter().zip(&g).map(|(xi, gi)| xi + alpha * gi).collect()
                }
            }
        };
        prev = Some((std::mem::replace(&mut x, next), g));
    }
    let last = KernelSolution::build(problem, x, controls.max_iters, last_residual);
    Err(KernelError::NotConverged {
        iterations: controls.max_iters,
        residual: last_residual,
        last: Box::new(last),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchScan {
    /// Distinct converged solutions ordered by the pairing gap at the Fermi
    /// momentum.
    pub solutions: Vec<KernelSolution>,
    pub failures: Vec<SeedFailure>,
}

/// Runs the solver from each pairing seed in parallel and keeps the
/// distinct converged solutions.
pub fn branch_scan(problem: &GapProblem, controls: &IterationControls, seeds: &[f64]) -> BranchScan {
    let results = parallel_map(seeds, |&seed| {
        let c = IterationControls {
            init: InitialGuess::SeededPairing(seed),
            ..*controls
        };
        self_consistent_solve(problem, &c)
    });
    let same = controls.tol.sqrt().max(10.0 * controls.tol);
    let mut solutions: Vec<KernelSolution> = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in seeds.iter().zip(results) {
        match r {
            Ok(s) => {
                if solutions.iter().all(|t| t.distance(&s) >= same) {
                    solutions.push(s);
                }
            }
            Err(e) => failures.push(SeedFailure {
                seed: *seed,
                error: e.to_string(),
            }),
        }
    }
    let i = problem.fermi_index();
    solutions.sort_by(|a, b| a.delta_b[i].total_cmp(&b.delta_b[i]));
    BranchScan {
        solutions,
        failures,
    }
}
