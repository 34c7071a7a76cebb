use std::io::Read;

use rayon::prelude::*;

use super::grid::MomentumGrid;
use super::KernelError;

/// An interaction kernel `V(k, p)` evaluated on a momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub enum DiscreteKernel {
    /// `V(k, p) = lambda u(k) S(p)`; `weighted_density` holds the quadrature
    /// weight times `S` at each node.
    Separable {
        lambda: f64,
        profile: Vec<f64>,
        weighted_density: Vec<f64>,
    },
    /// Row-major `n x n` values `V(p_i, p_j)`.
    Dense { n: usize, values: Vec<f64> },
}

impl DiscreteKernel {
    /// The thin-shell kernel of half-width `eps` around `sqrt(mu)`:
    /// `V(k, p) = lambda u(k) u(p) / (2 eps)` with `u` the indicator of the
    /// closed shell.
    ///
    /// The quadrature weight of each node is the part of its trapezoid cell
    /// inside the shell, so `sum_j w_j S_j = 1` exactly and the shell
    /// average is second-order accurate when the edges are grid nodes.
    pub fn shell(grid: &MomentumGrid, lambda: f64, sqrt_mu: f64, eps: f64) -> Result<Self, KernelError> {
        let (a, b) = (sqrt_mu - eps, sqrt_mu + eps);
        if a < 0.0 {
            return Err(KernelError::ShellBelowZero {
                sqrt_mu,
                epsilon: eps,
            });
        }
        let p = grid.points();
        let n = p.len();
        let overlap = |lo: f64, hi: f64| (hi.min(b) - lo.max(a)).max(0.0);
        let mut inside = vec![0.0; n];
        for i in 0..n - 1 {
            let mid = 0.5 * (p[i] + p[i + 1]);
            inside[i] += overlap(p[i], mid);
            inside[i + 1] += overlap(mid, p[i + 1]);
        }
        let total: f64 = inside.iter().sum();
        if !(total > 0.0) {
            return Err(KernelError::InvalidGrid("shell lies outside the grid".into()));
        }
        let profile = p
            .iter()
            .map(|&x| if (a..=b).contains(&x) { 1.0 } else { 0.0 })
            .collect();
        let weighted_density = inside.iter().map(|s| s / total).collect();
        Ok(DiscreteKernel::Separable {
            lambda,
            profile,
            weighted_density,
        })
    }

    pub fn len(&self) -> usize {
        match self {
            DiscreteKernel::Separable { profile, .. } => profile.len(),
            DiscreteKernel::Dense { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `out_i = sum_j V(p_i, p_j) w_j g_j`.
    pub fn apply(&self, grid: &MomentumGrid, g: &[f64]) -> Vec<f64> {
        match self {
            DiscreteKernel::Separable {
                lambda,
                profile,
                weighted_density,
            } => {
                let s: f64 = weighted_density.iter().zip(g).map(|(d, x)| d * x).sum();
                profile.iter().map(|u| lambda * u * s).collect()
            }
            DiscreteKernel::Dense { n, values } => {
                let wg: Vec<f64> = grid.weights().iter().zip(g).map(|(w, x)| w * x).collect();
                values
                    .par_chunks(*n)
                    .map(|row| row.iter().zip(&wg).map(|(v, x)| v * x).sum())
                    .collect()
            }
        }
    }

    /// Shape of the kernel in its first argument, scaled to peak 1; used to
    /// shape initial guesses.
    pub fn profile(&self, grid: &MomentumGrid) -> Vec<f64> {
        match self {
            DiscreteKernel::Separable { profile, .. } => profile.clone(),
            DiscreteKernel::Dense { n, values } => {
                let w = grid.weights();
                let mass: Vec<f64> = values
                    .chunks(*n)
                    .map(|row| row.iter().zip(w).map(|(v, wj)| v.abs() * wj).sum())
                    .collect();
                let peak = mass.iter().cloned().fold(0.0, f64::max);
                if peak > 0.0 {
                    mass.iter().map(|m| m / peak).collect()
                } else {
                    mass
                }
            }
        }
    }

    /// `max |V(k, p) - V(p, k)|`.
    pub fn asymmetry(&self) -> f64 {
        match self {
            // u and S share their support, as built by `shell`
            DiscreteKernel::Separable { .. } => 0.0,
            DiscreteKernel::Dense { n, values } => {
                let mut worst = 0.0f64;
                for i in 0..*n {
                    for j in i + 1..*n {
                        worst = worst.max((values[i * n + j] - values[j * n + i]).abs());
                    }
                }
                worst
            }
        }
    }
}

/// A kernel read from CSV: the first row lists the momenta, each following
/// row holds `V(p_i, p_j)` for one `p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    pub momenta: Vec<f64>,
    pub values: Vec<f64>,
}

impl TabulatedKernel {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, KernelError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut momenta: Option<Vec<f64>> = None;
        let mut values = Vec::new();
        let mut rows = 0usize;
        for rec in rdr.records() {
            let rec = rec.map_err(|e| KernelError::Csv {
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            let nums = rec
                .iter()
                .enumerate()
                .map(|(col, field)| {
                    field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                        KernelError::Csv {
                            line,
                            message: format!("column {}: `{field}` is not a finite number", col + 1),
                        }
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            match &momenta {
                None => {
                    if nums.len() < 2 {
                        return Err(KernelError::Csv {
                            line,
                            message: "header must list at least two momenta".into(),
                        });
                    }
                    momenta = Some(nums);
                }
                Some(m) => {
                    if nums.len() != m.len() {
                        return Err(KernelError::Csv {
                            line,
                            message: format!("expected {} values, found {}", m.len(), nums.len()),
                        });
                    }
                    values.extend(nums);
                    rows += 1;
                }
            }
        }
        let momenta = momenta.ok_or(KernelError::Csv {
            line: 1,
            message: "empty kernel file".into(),
        })?;
        if rows != momenta.len() {
            return Err(KernelError::Csv {
                line: rows + 2,
                message: format!("expected {} rows, found {rows}", momenta.len()),
            });
        }
        if momenta.windows(2).any(|w| w[1] <= w[0]) || momenta[0] < 0.0 {
            return Err(KernelError::Csv {
                line: 1,
                message: "momenta must be non-negative and strictly increasing".into(),
            });
        }
        Ok(Self { momenta, values })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, KernelError> {
        let file = std::fs::File::open(path)
            .map_err(|e| KernelError::Io(format!("{}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    pub fn into_kernel(self) -> DiscreteKernel {
        DiscreteKernel::Dense {
            n: self.momenta.len(),
            values: self.values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_density_integrates_to_one() {
        for (n, eps) in [(200, 0.1), (2000, 0.01), (57, 0.3)] {
            let g = MomentumGrid::shell_adapted(3.0, n, 1.0, eps).unwrap();
            let k = DiscreteKernel::shell(&g, 2.0, 1.0, eps).unwrap();
            if let DiscreteKernel::Separable {
                weighted_density,
                profile,
                ..
            } = &k
            {
                let s: f64 = weighted_density.iter().sum();
                assert!((s - 1.0).abs() < 1e-14);
                assert!(profile.iter().all(|&u| u == 0.0 || u == 1.0));
            }
            // constant input: the shell average reproduces lambda * g
            let out = k.apply(&g, &vec![0.25; n]);
            let i = g.nearest(1.0);
            assert!((out[i] - 0.5).abs() < 1e-14, "{}", out[i]);
        }
    }

    #[test]
    fn shell_on_uniform_grid_uses_cell_fractions() {
        let g = MomentumGrid::uniform(2.0, 21).unwrap();
        let k = DiscreteKernel::shell(&g, 1.0, 1.0, 0.15).unwrap();
        let out = k.apply(&g, &vec![1.0; 21]);
        assert!((out[10] - 1.0).abs() < 1e-14);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn dense_apply_and_symmetry() {
        let g = MomentumGrid::from_points(vec![0.0, 1.0, 2.0]).unwrap();
        let k = DiscreteKernel::Dense {
            n: 3,
            values: vec![1.0, 2.0, 0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        };
        // weights 0.5, 1, 0.5
        assert_eq!(k.apply(&g, &[1.0, 1.0, 1.0]), vec![2.5, 2.0, 0.5]);
        assert_eq!(k.asymmetry(), 0.0);
        let bad = DiscreteKernel::Dense {
            n: 2,
            values: vec![1.0, 0.5, 0.0, 1.0],
        };
        assert_eq!(bad.asymmetry(), 0.5);
    }

    #[test]
    fn csv_round_trip() {
        let text = "0,0.5,1\n1,2,3\n2,4,6\n3,6,9\n";
        let t = TabulatedKernel::from_reader(text.as_bytes()).unwrap();
        assert_eq!(t.momenta, vec![0.0, 0.5, 1.0]);
        assert_eq!(t.values.len(), 9);
        assert_eq!(t.values[5], 6.0);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let short = "0,1,2\n1,2,3\n1,2\n1,2,3\n";
        match TabulatedKernel::from_reader(short.as_bytes()) {
            Err(KernelError::Csv { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("expected 3"));
            }
            other => panic!("{other:?}"),
        }
        let junk = "0,1\n1,x\n1,1\n";
        match TabulatedKernel::from_reader(junk.as_bytes()) {
            Err(KernelError::Csv { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("column 2"));
            }
            other => panic!("{other:?}"),
        }
        let missing = "0,1\n1,1\n";
        assert!(matches!(
            TabulatedKernel::from_reader(missing.as_bytes()),
            Err(KernelError::Csv { .. })
        ));
        let unsorted = "1,0\n1,1\n1,1\n";
        assert!(matches!(
            TabulatedKernel::from_reader(unsorted.as_bytes()),
            Err(KernelError::Csv { line: 1, .. })
        ));
    }
}
