//! Locally weighted polynomial regression (LOESS) with tricube weights and
//! pointwise Gaussian confidence intervals.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoessConfig {
    /// Fraction of points entering each local fit, in (0, 1].
    pub span: f64,
    /// Local polynomial degree.
    pub degree: usize,
    /// Number of evaluation points.
    pub grid_size: usize,
}

impl Default for LoessConfig {
    fn default() -> Self {
        Self {
            span: 0.85,
            degree: 2,
            grid_size: 256,
        }
    }
}

/// A fitted curve on an ascending grid with pointwise standard errors and
/// 95% interval bounds. Values fitted to binary indicators may fall slightly
/// outside [0, 1]; the estimate itself is never clipped (plots clip display).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveEstimate {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Default evaluation grid: evenly spaced points between the 1st and 99th
/// percentile of x, where LOESS is reliable.
pub fn default_grid(x: &[f64], grid_size: usize) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = quantile(&sorted, 0.01);
    let hi = quantile(&sorted, 0.99);
    (0..grid_size)
        .map(|i| lo + (hi - lo) * i as f64 / (grid_size - 1) as f64)
        .collect()
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

use crate::linalg::solve;

/// Fits LOESS on an explicit grid. At each grid point the `ceil(span*n)`
/// nearest x-neighbors enter a tricube-weighted polynomial fit centered at
/// the grid point; the standard error combines the linear-smoother norm with
/// a local weighted residual variance.
pub fn fit_loess_on_grid(
    x: &[f64],
    y: &[f64],
    grid: &[f64],
    config: &LoessConfig,
) -> Result<CurveEstimate> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Contract("x and y lengths differ".into()));
    }
    let p = config.degree + 1;
    if n < config.degree + 2 {
        return Err(Error::Parameter(format!(
            "need at least {} points for degree {}",
            config.degree + 2,
            config.degree
        )));
    }
    if !(config.span > 0.0 && config.span <= 1.0) {
        return Err(Error::Parameter(format!("span {} not in (0, 1]", config.span)));
    }
    let first = x[0];
    if x.iter().all(|&xi| xi == first) {
        return Err(Error::Parameter("all x values identical".into()));
    }
    if grid.len() < 2 {
        return Err(Error::Parameter("grid_size must be >= 2".into()));
    }
    let k = ((config.span * n as f64).ceil() as usize).clamp(config.degree + 2, n);

    // x sorted once; each window of k nearest neighbors is contiguous
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[i].partial_cmp(&x[j]).unwrap());
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    let mut mean = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for &g in grid {
        // grow the window from the insertion point, taking the nearer end
        let mut lo = xs.partition_point(|&xi| xi < g);
        let mut hi = lo;
        while hi - lo < k {
            if lo == 0 {
                hi += 1;
            } else if hi == n || (g - xs[lo - 1]).abs() <= (xs[hi] - g).abs() {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        let dmax = (xs[lo] - g).abs().max((xs[hi - 1] - g).abs());
        if dmax == 0.0 {
            return Err(Error::DegenerateWindow(g));
        }

        // weighted normal equations for basis (1, t, t^2, ...) with t = x - g
        let mut a = vec![vec![0.0; p]; p];
        let mut rhs = vec![0.0; p];
        for i in lo..hi {
            let t = xs[i] - g;
            let w = tricube(t.abs() / dmax);
            let mut phi = vec![1.0; p];
            for d in 1..p {
                phi[d] = phi[d - 1] * t;
            }
            for r in 0..p {
                for c in 0..p {
                    a[r][c] += w * phi[r] * phi[c];
                }
                rhs[r] += w * phi[r] * ys[i];
            }
        }
        let beta =
            solve(a.clone(), rhs).ok_or(Error::DegenerateWindow(g))?;

        // linear-smoother row: l_i = w_i * (A^{-1} phi_i)_0; accumulate its
        // squared norm via M = A^{-1} restricted to the first row
        let mut e0 = vec![0.0; p];
        e0[0] = 1.0;
        // A is symmetric, so (A^{-1} phi)_0 = (A^{-1} e0) . phi
        let ainv_row0 = solve(a.clone(), e0).ok_or(Error::DegenerateWindow(g))?;
        let mut l_norm_sq = 0.0;
        let mut rss = 0.0;
        let mut wsum = 0.0;
        for i in lo..hi {
            let t = xs[i] - g;
            let w = tricube(t.abs() / dmax);
            if w == 0.0 {
                continue;
            }
            let mut phi = vec![1.0; p];
            for d in 1..p {
                phi[d] = phi[d - 1] * t;
            }
            let l = w * phi.iter().zip(&ainv_row0).map(|(a_, b_)| a_ * b_).sum::<f64>();
            l_norm_sq += l * l;
            let fit: f64 = phi.iter().zip(&beta).map(|(b_, c)| b_ * c).sum();
            let r = ys[i] - fit;
            rss += w * r * r;
            wsum += w;
        }
        let sigma_sq = if wsum > 0.0 { rss / wsum } else { 0.0 };
        mean.push(beta[0]);
        stderr.push((sigma_sq * l_norm_sq).max(0.0).sqrt());
    }
    let ci_low = mean
        .iter()
        .zip(&stderr)
        .map(|(m, s)| m - 1.96 * s)
        .collect();
    let ci_high = mean
        .iter()
        .zip(&stderr)
        .map(|(m, s)| m + 1.96 * s)
        .collect();
    Ok(CurveEstimate {
        grid: grid.to_vec(),
        mean,
        stderr,
        ci_low,
        ci_high,
    })
}

/// Fits LOESS on the default grid derived from x.
pub fn fit_loess(x: &[f64], y: &[f64], config: &LoessConfig) -> Result<CurveEstimate> {
    let grid = default_grid(x, config.grid_size);
    fit_loess_on_grid(x, y, &grid, config)
}

/// Variable-based calibration plot data: LOESS of the 0/1 error indicator and
/// of the predicted error `1 - s`, both against the variable on a shared grid.
pub fn calibration_curves(
    dataset: &Dataset,
    variable: &str,
    config: &LoessConfig,
) -> Result<(CurveEstimate, CurveEstimate)> {
    let v = dataset.variable_values(variable)?;
    let err: Vec<f64> = dataset.correctness().iter().map(|c| 1.0 - c).collect();
    let pred_err: Vec<f64> = dataset.confidences().iter().map(|s| 1.0 - s).collect();
    let grid = default_grid(&v, config.grid_size);
    let error_curve = fit_loess_on_grid(&v, &err, &grid, config)?;
    let predicted_error_curve = fit_loess_on_grid(&v, &pred_err, &grid, config)?;
    Ok((error_curve, predicted_error_curve))
}

/// Grid point maximizing `|a.mean - b.mean|`; ties go to the smallest v.
pub fn max_curve_gap(a: &CurveEstimate, b: &CurveEstimate) -> Result<(f64, f64)> {
    if a.grid != b.grid {
        return Err(Error::Contract("curve grids differ".into()));
    }
    let mut best = (a.grid[0], (a.mean[0] - b.mean[0]).abs());
    for i in 1..a.grid.len() {
        let gap = (a.mean[i] - b.mean[i]).abs();
        if gap > best.1 {
            best = (a.grid[i], gap);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn constant_reproduced_with_zero_stderr() {
        let x = linspace(0.0, 1.0, 50);
        let y = vec![0.42; 50];
        let c = fit_loess(&x, &y, &LoessConfig::default()).unwrap();
        for (m, s) in c.mean.iter().zip(&c.stderr) {
            assert_abs_diff_eq!(*m, 0.42, epsilon = 1e-9);
            assert_abs_diff_eq!(*s, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn linear_reproduced_exactly() {
        let x = linspace(0.0, 1.0, 60);
        let y: Vec<f64> = x.iter().map(|xi| 2.0 * xi + 1.0).collect();
        let c = fit_loess(&x, &y, &LoessConfig::default()).unwrap();
        for (g, m) in c.grid.iter().zip(&c.mean) {
            assert_abs_diff_eq!(*m, 2.0 * g + 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn quadratic_reproduced_exactly() {
        let x = linspace(-1.0, 1.0, 80);
        let y: Vec<f64> = x.iter().map(|xi| 3.0 * xi * xi - xi + 0.5).collect();
        let c = fit_loess(&x, &y, &LoessConfig::default()).unwrap();
        for (g, m) in c.grid.iter().zip(&c.mean) {
            assert_abs_diff_eq!(*m, 3.0 * g * g - g + 0.5, epsilon = 1e-9);
        }
    }

    // Box-Muller standard normal from two uniforms; avoids an extra dependency.
    fn normal<R: Rng>(rng: &mut R) -> f64 {
        let u1: f64 = rng.gen::<f64>().max(1e-12);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    #[test]
    fn noisy_sine_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 2000;
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|xi| (2.0 * std::f64::consts::PI * xi).sin() + 0.05 * normal(&mut rng))
            .collect();
        let cfg = LoessConfig {
            span: 0.3,
            degree: 2,
            grid_size: 128,
        };
        let c = fit_loess(&x, &y, &cfg).unwrap();
        let mut max_err: f64 = 0.0;
        for (g, m) in c.grid.iter().zip(&c.mean) {
            if *g >= 0.1 && *g <= 0.9 {
                max_err = max_err.max((m - (2.0 * std::f64::consts::PI * g).sin()).abs());
            }
        }
        assert!(max_err < 0.05, "sup error {max_err}");
    }

    #[test]
    fn all_identical_x_rejected() {
        let x = vec![1.0; 10];
        let y = vec![0.5; 10];
        assert!(fit_loess(&x, &y, &LoessConfig::default()).is_err());
    }

    #[test]
    fn stderr_nonnegative_on_noisy_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..200).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|xi| xi + rng.gen::<f64>() * 0.2).collect();
        let c = fit_loess(&x, &y, &LoessConfig::default()).unwrap();
        for i in 0..c.grid.len() {
            assert!(c.stderr[i] >= 0.0);
            assert!(c.ci_low[i] <= c.mean[i] && c.mean[i] <= c.ci_high[i]);
            assert_abs_diff_eq!(
                c.ci_high[i] - c.mean[i],
                1.96 * c.stderr[i],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn wider_span_does_not_increase_total_variation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = linspace(0.0, 1.0, 300);
        let y: Vec<f64> = x
            .iter()
            .map(|xi| (6.0 * xi).sin() + 0.3 * rng.gen::<f64>())
            .collect();
        let tv = |span: f64| {
            let cfg = LoessConfig {
                span,
                degree: 2,
                grid_size: 128,
            };
            let c = fit_loess(&x, &y, &cfg).unwrap();
            c.mean
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .sum::<f64>()
        };
        let tvs: Vec<f64> = [0.3, 0.5, 0.85, 1.0].iter().map(|&s| tv(s)).collect();
        for pair in tvs.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "total variation increased with span: {tvs:?}"
            );
        }
    }

    #[test]
    fn max_gap_constant_curves_tie_rule() {
        // exact tie at every grid point: the smallest v must win
        let grid = linspace(0.0, 1.0, 40);
        let flat = |level: f64| CurveEstimate {
            grid: grid.clone(),
            mean: vec![level; 40],
            stderr: vec![0.0; 40],
            ci_low: vec![level; 40],
            ci_high: vec![level; 40],
        };
        let (v_star, gap) = max_curve_gap(&flat(0.3), &flat(0.1)).unwrap();
        assert_abs_diff_eq!(gap, 0.2, epsilon = 1e-15);
        assert_eq!(v_star, grid[0]);
    }

    #[test]
    fn max_gap_identical_curves_is_zero() {
        let x = linspace(0.0, 1.0, 40);
        let y: Vec<f64> = x.iter().map(|xi| xi * xi).collect();
        let a = fit_loess(&x, &y, &LoessConfig::default()).unwrap();
        let (_, gap) = max_curve_gap(&a, &a).unwrap();
        assert_eq!(gap, 0.0);
    }

    #[test]
    fn max_gap_piecewise_unique_maximum() {
        let grid = linspace(0.0, 5.0, 101);
        let mk = |f: &dyn Fn(f64) -> f64| CurveEstimate {
            grid: grid.clone(),
            mean: grid.iter().map(|&g| f(g)).collect(),
            stderr: vec![0.0; grid.len()],
            ci_low: grid.iter().map(|&g| f(g)).collect(),
            ci_high: grid.iter().map(|&g| f(g)).collect(),
        };
        // gap profile peaks at exactly v = 2.5 with height 0.07
        let a = mk(&|g| 0.1 + 0.07 * (1.0 - (g - 2.5).abs() / 2.5).max(0.0));
        let b = mk(&|_| 0.1);
        let (v_star, gap) = max_curve_gap(&a, &b).unwrap();
        assert_abs_diff_eq!(v_star, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(gap, 0.07, epsilon = 1e-12);
    }

    #[test]
    fn grid_mismatch_is_contract_error() {
        let x = linspace(0.0, 1.0, 30);
        let y = vec![0.5; 30];
        let a = fit_loess(&x, &y, &LoessConfig::default()).unwrap();
        let cfg = LoessConfig {
            grid_size: 64,
            ..LoessConfig::default()
        };
        let b = fit_loess(&x, &y, &cfg).unwrap();
        assert!(max_curve_gap(&a, &b).is_err());
    }
}
