use super::*;
use crate::params::ModelParams;
use crate::scalar::{pure_mean_field, solve_all, SolveOptions};

fn fermi_values(problem: &GapProblem, s: &KernelSolution) -> (f64, f64, f64) {
    s.at(problem.fermi_index())
}

#[test]
fn zero_pairing_reproduces_pure_mean_field() {
    let params = ModelParams::new(4.0, 0.7, 1.0, 0.5);
    let problem = GapProblem::shell(params, 1e-4, 400, 3.0).unwrap();
    let sol = self_consistent_solve(&problem, &IterationControls::default()).unwrap();
    let (dm, db, _) = fermi_values(&problem, &sol);
    assert_eq!(db, 0.0);
    assert!((dm - pure_mean_field(&params)).abs() < 1e-6, "{dm}");
    assert!(sol.residual < 1e-10);
}

#[test]
fn picard_finds_upper_branch() {
    let params = ModelParams::new(4.0, 0.0, 1.0, 0.5);
    let problem = GapProblem::shell(params, 1e-3, 400, 3.0).unwrap();
    let controls = IterationControls {
        init: InitialGuess::SeededPairing(4.0),
        ..IterationControls::default()
    };
    let sol = self_consistent_solve(&problem, &controls).unwrap();
    let exact = solve_all(&params, SolveOptions::default()).unwrap();
    let upper = exact.mixed().last().unwrap();
    let (_, db, w) = fermi_values(&problem, &sol);
    assert!((db - upper.delta_b).abs() < 1e-4, "{db} vs {}", upper.delta_b);
    assert!((w - upper.w_bar).abs() < 1e-4);
}

#[test]
fn anderson_finds_lower_branch() {
    let params = ModelParams::new(4.0, 0.0, 1.0, 0.5);
    let problem = GapProblem::shell(params, 1e-3, 400, 3.0).unwrap();
    let exact = solve_all(&params, SolveOptions::default()).unwrap();
    let lower = exact.mixed().next().unwrap();
    let controls = IterationControls {
        init: InitialGuess::SeededPairing(lower.delta_b * 1.05),
        scheme: Scheme::Anderson { depth: 5 },
        max_iters: 500,
        ..IterationControls::default()
    };
    let sol = self_consistent_solve(&problem, &controls).unwrap();
    let (_, db, _) = fermi_values(&problem, &sol);
    assert!((db - lower.delta_b).abs() < 1e-3, "{db} vs {}", lower.delta_b);
}

#[test]
fn branch_scan_recovers_every_branch() {
    let params = ModelParams::new(4.0, 0.0, 1.0, 0.5);
    let problem = GapProblem::shell(params, 1e-3, 400, 3.0).unwrap();
    let controls = IterationControls {
        scheme: Scheme::Anderson { depth: 5 },
        max_iters: 500,
        ..IterationControls::default()
    };
    let seeds: Vec<f64> = (0..=10).map(|i| 0.5 * i as f64).collect();
    let scan = branch_scan(&problem, &controls, &seeds);
    let i = problem.fermi_index();
    let found: Vec<f64> = scan.solutions.iter().map(|s| s.delta_b[i]).collect();
    let exact = solve_all(&params, SolveOptions::default()).unwrap();
    for s in exact.mixed() {
        assert!(
            found.iter().any(|d| (d - s.delta_b).abs() < 1e-3),
            "{} not in {found:?}",
            s.delta_b
        );
    }
}

#[test]
fn dense_kernel_matches_separable() {
    let params = ModelParams::new(-2.0, -0.9, 1.0, 0.5);
    let shell = GapProblem::shell(params, 0.05, 120, 2.5).unwrap();
    let to_dense = |k: &DiscreteKernel| match k {
        DiscreteKernel::Separable {
            lambda,
            profile,
            weighted_density,
        } => {
            let w = shell.grid.weights();
            let n = profile.len();
            let mut values = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    values[i * n + j] = lambda * profile[i] * weighted_density[j] / w[j];
                }
            }
            DiscreteKernel::Dense { n, values }
        }
        other => other.clone(),
    };
    let dense = GapProblem::new(
        shell.grid.clone(),
        to_dense(&shell.kernel_m),
        shell.kernel_b.clone(),
        shell.omega.clone(),
        params,
    )
    .unwrap();
    let n = shell.grid.len();
    let dm = vec![-0.3; n];
    let db = vec![0.6; n];
    let (a_m, a_b) = gap_rhs(&shell, &dm, &db);
    let (b_m, b_b) = gap_rhs(&dense, &dm, &db);
    for k in 0..n {
        assert!((a_m[k] - b_m[k]).abs() < 1e-12);
        assert!((a_b[k] - b_b[k]).abs() < 1e-12);
    }
}

#[test]
fn asymmetric_pairing_kernel_rejected() {
    let grid = MomentumGrid::from_points(vec![0.0, 1.0]).unwrap();
    let sym = DiscreteKernel::Dense {
        n: 2,
        values: vec![1.0, 0.0, 0.0, 1.0],
    };
    let asym = DiscreteKernel::Dense {
        n: 2,
        values: vec![1.0, 0.5, 0.0, 1.0],
    };
    let omega = quadratic_dispersion(&grid);
    let params = ModelParams::new(1.0, 0.0, 1.0, 0.5);
    assert!(GapProblem::new(grid.clone(), asym.clone(), sym.clone(), omega.clone(), params).is_ok());
    assert!(matches!(
        GapProblem::new(grid, sym, asym, omega, params),
        Err(KernelError::AsymmetricKernel(_))
    ));
}

#[test]
fn iteration_budget_exhaustion_reports_state() {
    let params = ModelParams::new(4.0, 0.5, 1.0, 0.5);
    let problem = GapProblem::shell(params, 1e-3, 100, 3.0).unwrap();
    let controls = IterationControls {
        max_iters: 2,
        init: InitialGuess::SeededPairing(3.0),
        ..IterationControls::default()
    };
    match self_consistent_solve(&problem, &controls) {
        Err(KernelError::NotConverged {
            iterations,
            residual,
            last,
        }) => {
            assert_eq!(iterations, 2);
            assert!(residual > 0.0);
            assert_eq!(last.delta_b.len(), 100);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn from_scalar_starts_converged() {
    let params = ModelParams::new(4.0, 0.3, 1.0, 0.5);
    let problem = GapProblem::shell(params, 1e-4, 200, 3.0).unwrap();
    let controls = IterationControls {
        init: InitialGuess::FromScalar,
        tol: 1e-4,
        ..IterationControls::default()
    };
    let sol = self_consistent_solve(&problem, &controls).unwrap();
    assert_eq!(sol.iterations, 1);
}

#[test]
fn invalid_controls_rejected() {
    let params = ModelParams::new(4.0, 0.3, 1.0, 0.5);
    let problem = GapProblem::shell(params, 1e-2, 100, 3.0).unwrap();
    let bad = IterationControls {
        damping: 0.0,
        ..IterationControls::default()
    };
    assert!(matches!(
        self_consistent_solve(&problem, &bad),
        Err(KernelError::InvalidControls(_))
    ));
}
