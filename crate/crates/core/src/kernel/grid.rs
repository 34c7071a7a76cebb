use super::KernelError;

/// Non-negative radial momenta with trapezoidal quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl MomentumGrid {
    pub fn from_points(points: Vec<f64>) -> Result<Self, KernelError> {
        if points.len() < 2 {
            return Err(KernelError::InvalidGrid("need at least two momenta".into()));
        }
        if points.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(KernelError::InvalidGrid(
                "momenta must be finite and non-negative".into(),
            ));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(KernelError::InvalidGrid(
                "momenta must be strictly increasing".into(),
            ));
        }
        let n = points.len();
        let mut weights = vec![0.0; n];
        for i in 0..n - 1 {
            let h = 0.5 * (points[i + 1] - points[i]);
            weights[i] += h;
            weights[i + 1] += h;
        }
        Ok(Self { points, weights })
    }

    pub fn uniform(p_max: f64, n: usize) -> Result<Self, KernelError> {
        Self::piecewise(&[0.0, p_max], &[n.saturating_sub(1)])
    }

    /// Uniform sub-grids joined at `edges`; segment `i` gets `cells[i]`
    /// cells.
    pub fn piecewise(edges: &[f64], cells: &[usize]) -> Result<Self, KernelError> {
        if edges.len() != cells.len() + 1 || cells.iter().any(|&c| c == 0) {
            return Err(KernelError::InvalidGrid(
                "every segment needs at least one cell".into(),
            ));
        }
        let mut points = vec![edges[0]];
        for (seg, &c) in cells.iter().enumerate() {
            let (a, b) = (edges[seg], edges[seg + 1]);
            for j in 1..=c {
                points.push(if j == c {
                    b
                } else {
                    a + (b - a) * j as f64 / c as f64
                });
            }
        }
        Self::from_points(points)
    }

    /// Grid on `[0, p_max]` with `n` nodes, of which about half are spread
    /// evenly over the shell `[sqrt(mu) - eps, sqrt(mu) + eps]`. The shell
    /// edges and `sqrt(mu)` are nodes.
    pub fn shell_adapted(p_max: f64, n: usize, sqrt_mu: f64, eps: f64) -> Result<Self, KernelError> {
        let (a, b) = (sqrt_mu - eps, sqrt_mu + eps);
        if a < 0.0 {
            return Err(KernelError::ShellBelowZero {
                sqrt_mu,
                epsilon: eps,
            });
        }
        if !(b < p_max) {
            return Err(KernelError::InvalidGrid(format!(
                "p_max = {p_max} must exceed the shell edge {b}"
            )));
        }
        if n < 12 {
            return Err(KernelError::InvalidGrid("need at least 12 grid points".into()));
        }
        let cells = n - 1;
        let half_shell = (cells / 4).max(2);
        let outside = cells - 2 * half_shell;
        let left_len = a;
        let right_len = p_max - b;
        let mut edges = Vec::new();
        let mut counts = Vec::new();
        if left_len > 0.0 {
            let left = ((outside as f64 * left_len / (left_len + right_len)).round() as usize)
                .clamp(1, outside - 1);
            edges.push(0.0);
            counts.push(left);
            edges.extend([a, sqrt_mu, b, p_max]);
            counts.extend([half_shell, half_shell, outside - left]);
        } else {
            edges.extend([a, sqrt_mu, b, p_max]);
            counts.extend([half_shell, half_shell, outside]);
        }
        Self::piecewise(&edges, &counts)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Index of the node closest to `p`.
    pub fn nearest(&self, p: f64) -> usize {
        let i = self.points.partition_point(|&x| x < p);
        if i == 0 {
            0
        } else if i == self.points.len() {
            i - 1
        } else if p - self.points[i - 1] <= self.points[i] - p {
            i - 1
        } else {
            i
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let g = MomentumGrid::from_points(vec![0.0, 0.1, 0.5, 0.6, 2.0]).unwrap();
        let v: Vec<f64> = g.points().iter().map(|p| 3.0 * p + 1.0).collect();
        assert!((g.integrate(&v) - (1.5 * 4.0 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_points() {
        assert!(MomentumGrid::from_points(vec![0.0]).is_err());
        assert!(MomentumGrid::from_points(vec![0.0, 0.0, 1.0]).is_err());
        assert!(MomentumGrid::from_points(vec![-0.1, 1.0]).is_err());
    }

    #[test]
    fn shell_adapted_contains_edges() {
        let g = MomentumGrid::shell_adapted(3.0, 400, 1.0, 0.01).unwrap();
        assert_eq!(g.len(), 400);
        for p in [0.99, 1.0, 1.01] {
            let i = g.nearest(p);
            assert!((g.points()[i] - p).abs() < 1e-14);
        }
        let inside = g.points().iter().filter(|&&p| (p - 1.0).abs() <= 0.01).count();
        assert!(inside >= 190);
        assert!(matches!(
            MomentumGrid::shell_adapted(3.0, 400, 0.05, 0.1),
            Err(KernelError::ShellBelowZero { .. })
        ));
    }
}
