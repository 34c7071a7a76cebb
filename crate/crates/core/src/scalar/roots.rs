//! Bracketing helpers for scalar root finding.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

/// Splits `[lo, hi]` into `subdivisions` equal cells and returns every cell
/// on which `f` changes sign (or vanishes at the right end).
pub fn scan_brackets<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    subdivisions: usize,
) -> Vec<RootBracket> {
    let n = subdivisions.max(1);
    let mut out = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=n {
        let b = if i == n {
            hi
        } else {
            lo + (hi - lo) * i as f64 / n as f64
        };
        let fb = f(b);
        if (fa < 0.0 && fb >= 0.0) || (fa > 0.0 && fb <= 0.0) {
            out.push(RootBracket {
                lo: a,
                hi: b,
                f_lo: fa,
                f_hi: fb,
            });
        }
        a = b;
        fa = fb;
    }
    out
}

/// Bisection until the bracket is narrower than `xtol` or cannot be split.
pub fn bisect<F: Fn(f64) -> f64>(f: F, bracket: RootBracket, xtol: f64) -> f64 {
    let RootBracket {
        mut lo,
        mut hi,
        mut f_lo,
        f_hi,
    } = bracket;
    if f_hi == 0.0 {
        return hi;
    }
    if f_lo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        if hi - lo <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One Newton step from `x`, kept only if it stays inside `[lo, hi]` and
/// does not increase `|f|`.
pub fn newton_polish<F, D>(f: F, df: D, x: f64, lo: f64, hi: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let fx = f(x);
    let d = df(x);
    if d == 0.0 || !d.is_finite() {
        return x;
    }
    let y = x - fx / d;
    if y >= lo && y <= hi && f(y).abs() <= fx.abs() {
        y
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_all_sign_changes() {
        let f = |x: f64| (x - 0.3) * (x - 0.7);
        let b = scan_brackets(f, 0.0, 1.0, 10);
        assert_eq!(b.len(), 2);
        let roots: Vec<f64> = b.iter().map(|&br| bisect(f, br, 1e-14)).collect();
        assert!((roots[0] - 0.3).abs() < 1e-12);
        assert!((roots[1] - 0.7).abs() < 1e-12);
        for br in &b {
            assert!(br.lo < br.hi && br.f_lo * br.f_hi <= 0.0);
        }
    }

    #[test]
    fn root_on_node_reported_once() {
        let f = |x: f64| x - 0.5;
        let b = scan_brackets(f, 0.0, 1.0, 4);
        assert_eq!(b.len(), 1);
        assert_eq!(bisect(f, b[0], 1e-14), 0.5);
    }

    #[test]
    fn newton_rejects_bad_steps() {
        let f = |x: f64| x * x - 2.0;
        let x = newton_polish(f, |x| 2.0 * x, 1.4142, 1.0, 2.0);
        assert!((x - 2f64.sqrt()).abs() < 1e-8);
        assert_eq!(newton_polish(f, |_| 0.0, 1.4, 1.0, 2.0), 1.4);
    }
}
