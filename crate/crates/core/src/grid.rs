//! Log-spaced grids for scale parameters such as `beta`.

use crate::error::{Error, Result};

/// `n` points from `lo` to `hi` (both included), equally spaced in `ln`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("a grid needs at least one point".into()));
    }
    if !(lo > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!(
            "grid bounds must be positive and finite, got [{lo}, {hi}]"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    if !(hi > lo) {
        return Err(Error::Domain(format!(
            "grid upper bound {hi} must exceed lower bound {lo}"
        )));
    }
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let step = (ln_hi - ln_lo) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| (ln_lo + step * i as f64).exp()).collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NumericRange(format!(
            "[{lo}, {hi}] is too narrow for {n} distinct points"
        )));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_ratio() {
        let g = geometric_grid(0.01, 100.0, 5).unwrap();
        assert_eq!(g[0], 0.01);
        assert_eq!(g[4], 100.0);
        for w in g.windows(2) {
            assert!((w[1] / w[0] - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_point_and_errors() {
        assert_eq!(geometric_grid(2.0, 2.0, 1).unwrap(), vec![2.0]);
        assert!(geometric_grid(0.0, 1.0, 3).is_err());
        assert!(geometric_grid(1.0, 1.0, 3).is_err());
        assert!(geometric_grid(1.0, 2.0, 0).is_err());
    }
}
