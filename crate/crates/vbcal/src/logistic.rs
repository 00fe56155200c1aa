//! Deterministic fitting engine for binary logistic and K-class multinomial
//! logistic regression with L2 regularization (intercepts unpenalized).
//! Binary fits use Newton steps with step halving; multinomial fits use
//! full-batch gradient descent with backtracking line search. Both start
//! from zero parameters.

use crate::error::{Error, Result};
use crate::linalg::solve;

/// Row-major feature matrix; all entries must be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    d: usize,
    data: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Parameter("design matrix needs at least one row".into()));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::Parameter("design matrix needs at least one column".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * d);
        for row in &rows {
            if row.len() != d {
                return Err(Error::Contract("ragged design matrix".into()));
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::Parameter("non-finite entry in design matrix".into()));
                }
                data.push(v);
            }
        }
        Ok(Self {
            n: rows.len(),
            d,
            data,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.n
    }

    pub fn num_cols(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryWeights {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialWeights {
    /// K x d coefficient matrix, zero-sum across classes per feature.
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Objective value after each accepted step (non-increasing).
    pub objective_trace: Vec<f64>,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary objective: mean negative log-likelihood plus `(l2/2)*|w|^2`.
pub fn binary_objective(x: &DesignMatrix, y: &[f64], theta: &[f64], l2: f64) -> f64 {
    let d = x.num_cols();
    let n = x.num_rows() as f64;
    let mut nll = 0.0;
    for i in 0..x.num_rows() {
        let row = x.row(i);
        let z: f64 = row.iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>() + theta[d];
        nll += softplus(z) - y[i] * z;
    }
    let ridge: f64 = theta[..d].iter().map(|w| w * w).sum();
    nll / n + 0.5 * l2 * ridge
}

pub fn binary_gradient(x: &DesignMatrix, y: &[f64], theta: &[f64], l2: f64) -> Vec<f64> {
    let d = x.num_cols();
    let n = x.num_rows() as f64;
    let mut grad = vec![0.0; d + 1];
    for i in 0..x.num_rows() {
        let row = x.row(i);
        let z: f64 = row.iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>() + theta[d];
        let resid = sigmoid(z) - y[i];
        for j in 0..d {
            grad[j] += resid * row[j];
        }
        grad[d] += resid;
    }
    for g in grad.iter_mut() {
        *g /= n;
    }
    for j in 0..d {
        grad[j] += l2 * theta[j];
    }
    grad
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

const BINARY_TOL: f64 = 1e-8;
const BINARY_MAX_ITER: usize = 100;
const MULTI_TOL: f64 = 1e-7;
const MULTI_MAX_ITER: usize = 5000;

/// Fits binary logistic regression from zero initialization. Under perfect
/// separation with `l2 = 0` the iteration cap is reached and the report is
/// flagged unconverged; the weights at the cap are still returned.
pub fn fit_logistic(
    x: &DesignMatrix,
    y: &[f64],
    l2: f64,
) -> Result<(BinaryWeights, ConvergenceReport)> {
    if y.len() != x.num_rows() {
        return Err(Error::Contract("target length differs from row count".into()));
    }
    if y.iter().any(|&t| t != 0.0 && t != 1.0) {
        return Err(Error::Parameter("binary targets must be 0 or 1".into()));
    }
    if l2 < 0.0 {
        return Err(Error::Parameter("l2 must be >= 0".into()));
    }
    let d = x.num_cols();
    let n = x.num_rows();
    let mut theta = vec![0.0; d + 1];
    let mut obj = binary_objective(x, y, &theta, l2);
    let mut trace = vec![obj];
    let mut iterations = 0;
    let mut grad_norm = norm(&binary_gradient(x, y, &theta, l2));

    while grad_norm > BINARY_TOL && iterations < BINARY_MAX_ITER {
        iterations += 1;
        let grad = binary_gradient(x, y, &theta, l2);

        // Newton direction; Levenberg damping when the Hessian is singular
        // (e.g. an all-zero feature column with l2 = 0).
        let mut hess = vec![vec![0.0; d + 1]; d + 1];
        for i in 0..n {
            let row = x.row(i);
            let z: f64 =
                row.iter().zip(&theta[..d]).map(|(a, b)| a * b).sum::<f64>() + theta[d];
            let s = sigmoid(z);
            let w = s * (1.0 - s);
            for r in 0..d {
                for c in 0..d {
                    hess[r][c] += w * row[r] * row[c];
                }
                hess[r][d] += w * row[r];
                hess[d][r] += w * row[r];
            }
            hess[d][d] += w;
        }
        for r in 0..=d {
            for c in 0..=d {
                hess[r][c] /= n as f64;
            }
        }
        for r in 0..d {
            hess[r][r] += l2;
        }
        let mut damping = 0.0;
        let step = loop {
            let mut h = hess.clone();
            for (r, row) in h.iter_mut().enumerate().take(d + 1) {
                row[r] += damping;
            }
            if let Some(s) = solve(h, grad.clone()) {
                if s.iter().all(|v| v.is_finite()) {
                    break s;
                }
            }
            damping = if damping == 0.0 { 1e-8 } else { damping * 10.0 };
            if damping > 1e8 {
                break grad.clone();
            }
        };

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = theta
                .iter()
                .zip(&step)
                .map(|(th, st)| th - t * st)
                .collect();
            let cand_obj = binary_objective(x, y, &candidate, l2);
            if cand_obj <= obj {
                theta = candidate;
                obj = cand_obj;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        trace.push(obj);
        grad_norm = norm(&binary_gradient(x, y, &theta, l2));
    }

    let intercept = theta[d];
    let weights = theta[..d].to_vec();
    Ok((
        BinaryWeights { weights, intercept },
        ConvergenceReport {
            converged: grad_norm <= BINARY_TOL,
            iterations,
            grad_norm,
            objective_trace: trace,
        },
    ))
}

pub fn multinomial_objective(
    x: &DesignMatrix,
    y: &[usize],
    w: &[Vec<f64>],
    b: &[f64],
    l2: f64,
) -> f64 {
    let n = x.num_rows() as f64;
    let k = b.len();
    let mut nll = 0.0;
    for i in 0..x.num_rows() {
        let row = x.row(i);
        let z: Vec<f64> = (0..k)
            .map(|c| row.iter().zip(&w[c]).map(|(a, ww)| a * ww).sum::<f64>() + b[c])
            .collect();
        let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = zmax + z.iter().map(|zc| (zc - zmax).exp()).sum::<f64>().ln();
        nll += lse - z[y[i]];
    }
    let ridge: f64 = w.iter().flat_map(|r| r.iter()).map(|v| v * v).sum();
    nll / n + 0.5 * l2 * ridge
}

pub fn multinomial_gradient(
    x: &DesignMatrix,
    y: &[usize],
    w: &[Vec<f64>],
    b: &[f64],
    l2: f64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = x.num_rows() as f64;
    let k = b.len();
    let d = x.num_cols();
    let mut gw = vec![vec![0.0; d]; k];
    let mut gb = vec![0.0; k];
    for i in 0..x.num_rows() {
        let row = x.row(i);
        let z: Vec<f64> = (0..k)
            .map(|c| row.iter().zip(&w[c]).map(|(a, ww)| a * ww).sum::<f64>() + b[c])
            .collect();
        let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = z.iter().map(|zc| (zc - zmax).exp()).collect();
        let total: f64 = exps.iter().sum();
        for c in 0..k {
            let resid = exps[c] / total - f64::from(y[i] == c);
            for j in 0..d {
                gw[c][j] += resid * row[j];
            }
            gb[c] += resid;
        }
    }
    for c in 0..k {
        for j in 0..d {
            gw[c][j] = gw[c][j] / n + l2 * w[c][j];
        }
        gb[c] /= n;
    }
    (gw, gb)
}

fn zero_sum_project(w: &mut [Vec<f64>], b: &mut [f64]) {
    let k = b.len();
    let d = w[0].len();
    for j in 0..d {
        let mean: f64 = w.iter().map(|r| r[j]).sum::<f64>() / k as f64;
        for r in w.iter_mut() {
            r[j] -= mean;
        }
    }
    let mean: f64 = b.iter().sum::<f64>() / k as f64;
    for v in b.iter_mut() {
        *v -= mean;
    }
}

/// Fits K-class multinomial logistic regression from zero initialization.
/// Identifiability is fixed by a zero-sum constraint across classes.
pub fn fit_multinomial(
    x: &DesignMatrix,
    y: &[usize],
    num_classes: usize,
    l2: f64,
) -> Result<(MultinomialWeights, ConvergenceReport)> {
    if y.len() != x.num_rows() {
        return Err(Error::Contract("target length differs from row count".into()));
    }
    if num_classes < 2 {
        return Err(Error::Parameter("need at least 2 classes".into()));
    }
    if y.iter().any(|&t| t >= num_classes) {
        return Err(Error::Parameter("class target out of range".into()));
    }
    if l2 < 0.0 {
        return Err(Error::Parameter("l2 must be >= 0".into()));
    }
    let d = x.num_cols();
    let k = num_classes;
    let mut w = vec![vec![0.0; d]; k];
    let mut b = vec![0.0; k];
    let mut obj = multinomial_objective(x, y, &w, &b, l2);
    let mut trace = vec![obj];
    let mut iterations = 0;
    let mut step_size = 1.0f64;
    let (mut gw, mut gb) = multinomial_gradient(x, y, &w, &b, l2);
    let mut grad_norm = grad_norm_multi(&gw, &gb);

    while grad_norm > MULTI_TOL && iterations < MULTI_MAX_ITER {
        iterations += 1;
        let g_sq = grad_norm * grad_norm;
        let mut t = (step_size * 2.0).min(1e6);
        let mut accepted = false;
        for _ in 0..60 {
            let mut wc = w.clone();
            let mut bc = b.clone();
            for c in 0..k {
                for j in 0..d {
                    wc[c][j] -= t * gw[c][j];
                }
                bc[c] -= t * gb[c];
            }
            zero_sum_project(&mut wc, &mut bc);
            let cand = multinomial_objective(x, y, &wc, &bc, l2);
            if cand <= obj - 1e-4 * t * g_sq {
                w = wc;
                b = bc;
                obj = cand;
                step_size = t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        trace.push(obj);
        let g = multinomial_gradient(x, y, &w, &b, l2);
        gw = g.0;
        gb = g.1;
        grad_norm = grad_norm_multi(&gw, &gb);
    }

    Ok((
        MultinomialWeights {
            weights: w,
            intercepts: b,
        },
        ConvergenceReport {
            converged: grad_norm <= MULTI_TOL,
            iterations,
            grad_norm,
            objective_trace: trace,
        },
    ))
}

fn grad_norm_multi(gw: &[Vec<f64>], gb: &[f64]) -> f64 {
    let mut acc: f64 = gw.iter().flat_map(|r| r.iter()).map(|v| v * v).sum();
    acc += gb.iter().map(|v| v * v).sum::<f64>();
    acc.sqrt()
}

/// Binary evaluation: `sigma(w . x + c)`.
pub fn sigmoid_eval(weights: &BinaryWeights, x: &[f64]) -> Result<f64> {
    if x.len() != weights.weights.len() {
        return Err(Error::Contract(format!(
            "feature row has {} entries, model expects {}",
            x.len(),
            weights.weights.len()
        )));
    }
    let z: f64 = x.iter().zip(&weights.weights).map(|(a, b)| a * b).sum::<f64>()
        + weights.intercept;
    Ok(sigmoid(z))
}

/// Multiclass evaluation: softmax of the linear scores; output sums to 1.
pub fn softmax_eval(weights: &MultinomialWeights, x: &[f64]) -> Result<Vec<f64>> {
    let d = weights.weights[0].len();
    if x.len() != d {
        return Err(Error::Contract(format!(
            "feature row has {} entries, model expects {}",
            x.len(),
            d
        )));
    }
    let z: Vec<f64> = weights
        .weights
        .iter()
        .zip(&weights.intercepts)
        .map(|(wr, bc)| x.iter().zip(wr).map(|(a, b)| a * b).sum::<f64>() + bc)
        .collect();
    let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|zc| (zc - zmax).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_feature_intercept_is_base_rate_logit() {
        let x = DesignMatrix::new(vec![vec![0.0]; 4]).unwrap();
        let y = vec![1.0, 1.0, 1.0, 0.0];
        let (w, _) = fit_logistic(&x, &y, 0.0).unwrap();
        assert_abs_diff_eq!(w.weights[0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(w.intercept, 3.0f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn one_class_bounded_by_ridge() {
        let x = DesignMatrix::new((0..10).map(|i| vec![i as f64 / 10.0]).collect()).unwrap();
        let y = vec![1.0; 10];
        let (w, _) = fit_logistic(&x, &y, 0.1).unwrap();
        assert!(w.weights[0].is_finite() && w.intercept.is_finite());
        for i in 0..10 {
            let p = sigmoid_eval(&w, x.row(i)).unwrap();
            assert!(p > 0.5, "fitted probability {p} not above 0.5");
        }
    }

    #[test]
    fn symmetric_data_zero_intercept() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 1..=20 {
            let v = i as f64 / 10.0;
            rows.push(vec![v]);
            y.push(1.0);
            rows.push(vec![-v]);
            y.push(0.0);
        }
        let x = DesignMatrix::new(rows).unwrap();
        let (w, _) = fit_logistic(&x, &y, 0.01).unwrap();
        assert_abs_diff_eq!(w.intercept, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn perfect_separation_stays_finite() {
        // no finite MLE exists; the fit must still terminate with finite,
        // large weights that classify the data correctly
        let x = DesignMatrix::new(vec![vec![-1.0], vec![-2.0], vec![1.0], vec![2.0]]).unwrap();
        let y = vec![0.0, 0.0, 1.0, 1.0];
        let (w, report) = fit_logistic(&x, &y, 0.0).unwrap();
        assert!(w.weights[0].is_finite() && w.intercept.is_finite());
        assert!(w.weights[0] > 3.0);
        assert!(report.iterations <= 100);
        for (xi, yi) in [(-1.0, 0.0), (-2.0, 0.0), (1.0, 1.0), (2.0, 1.0)] {
            let p = sigmoid(w.weights[0] * xi + w.intercept);
            assert!((p - yi).abs() < 0.05);
        }
    }

    #[test]
    fn large_ridge_shrinks_to_base_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.gen::<f64>() * 2.0 - 1.0]).collect();
        let y: Vec<f64> = (0..200).map(|i| f64::from(i % 3 == 0)).collect();
        let rate = y.iter().sum::<f64>() / y.len() as f64;
        let x = DesignMatrix::new(rows).unwrap();
        let (w, _) = fit_logistic(&x, &y, 1e6).unwrap();
        assert_abs_diff_eq!(w.weights[0], 0.0, epsilon = 1e-4);
        assert_abs_diff_eq!(w.intercept, (rate / (1.0 - rate)).ln(), epsilon = 1e-4);
    }

    #[test]
    fn binary_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| vec![rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>()])
            .collect();
        let y: Vec<f64> = (0..50).map(|_| f64::from(rng.gen_bool(0.5))).collect();
        let x = DesignMatrix::new(rows).unwrap();
        let l2 = 0.05;
        for _ in 0..20 {
            let theta: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            let grad = binary_gradient(&x, &y, &theta, l2);
            for j in 0..3 {
                let h = 1e-5;
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[j] += h;
                tm[j] -= h;
                let fd = (binary_objective(&x, &y, &tp, l2)
                    - binary_objective(&x, &y, &tm, l2))
                    / (2.0 * h);
                let denom = grad[j].abs().max(fd.abs()).max(1e-8);
                assert!(
                    (grad[j] - fd).abs() / denom < 1e-4,
                    "analytic {} vs fd {}",
                    grad[j],
                    fd
                );
            }
        }
    }

    #[test]
    fn multinomial_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = 3;
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>()])
            .collect();
        let y: Vec<usize> = (0..40).map(|_| rng.gen_range(0..k)).collect();
        let x = DesignMatrix::new(rows).unwrap();
        let l2 = 0.01;
        for _ in 0..20 {
            let w: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..2).map(|_| rng.gen::<f64>() - 0.5).collect())
                .collect();
            let b: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() - 0.5).collect();
            let (gw, gb) = multinomial_gradient(&x, &y, &w, &b, l2);
            let h = 1e-5;
            for c in 0..k {
                for j in 0..2 {
                    let mut wp = w.clone();
                    let mut wm = w.clone();
                    wp[c][j] += h;
                    wm[c][j] -= h;
                    let fd = (multinomial_objective(&x, &y, &wp, &b, l2)
                        - multinomial_objective(&x, &y, &wm, &b, l2))
                        / (2.0 * h);
                    let denom = gw[c][j].abs().max(fd.abs()).max(1e-8);
                    assert!((gw[c][j] - fd).abs() / denom < 1e-4);
                }
                let mut bp = b.clone();
                let mut bm = b.clone();
                bp[c] += h;
                bm[c] -= h;
                let fd = (multinomial_objective(&x, &y, &w, &bp, l2)
                    - multinomial_objective(&x, &y, &w, &bm, l2))
                    / (2.0 * h);
                let denom = gb[c].abs().max(fd.abs()).max(1e-8);
                assert!((gb[c] - fd).abs() / denom < 1e-4);
            }
        }
    }

    #[test]
    fn binomial_multinomial_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rows: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.gen::<f64>() * 2.0 - 1.0]).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| f64::from(rng.gen::<f64>() < 1.0 / (1.0 + (-2.0 * r[0]).exp())))
            .collect();
        let x = DesignMatrix::new(rows).unwrap();
        let (bin, _) = fit_logistic(&x, &y, 0.0).unwrap();
        let y_multi: Vec<usize> = y.iter().map(|&t| t as usize).collect();
        let (multi, _) = fit_multinomial(&x, &y_multi, 2, 0.0).unwrap();
        for i in 0..x.num_rows() {
            let p_bin = sigmoid_eval(&bin, x.row(i)).unwrap();
            let p_multi = softmax_eval(&multi, x.row(i)).unwrap()[1];
            assert_abs_diff_eq!(p_bin, p_multi, epsilon = 1e-6);
        }
    }

    #[test]
    fn uniform_targets_give_uniform_softmax() {
        let x = DesignMatrix::new(vec![vec![0.0]; 9]).unwrap();
        let y = vec![0, 1, 2, 0, 1, 2, 0, 1, 2];
        let (w, _) = fit_multinomial(&x, &y, 3, 0.0).unwrap();
        let p = softmax_eval(&w, &[0.0]).unwrap();
        for &pc in &p {
            assert_abs_diff_eq!(pc, 1.0 / 3.0, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(w.intercepts[0], w.intercepts[1], epsilon = 1e-6);
        assert_abs_diff_eq!(w.intercepts[1], w.intercepts[2], epsilon = 1e-6);
    }

    #[test]
    fn separable_three_class_reaches_full_accuracy() {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..30 {
            let jitter = (i % 10) as f64 / 50.0;
            let class = i % 3;
            let center = [(-2.0, 0.0), (2.0, 0.0), (0.0, 2.0)][class];
            rows.push(vec![center.0 + jitter, center.1 + jitter]);
            y.push(class);
        }
        let x = DesignMatrix::new(rows).unwrap();
        let (w, _) = fit_multinomial(&x, &y, 3, 1e-3).unwrap();
        let correct = (0..x.num_rows())
            .filter(|&i| {
                let p = softmax_eval(&w, x.row(i)).unwrap();
                let pred = p
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                pred == y[i]
            })
            .count();
        assert_eq!(correct, x.num_rows());
    }

    #[test]
    fn objective_trace_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rows: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.gen::<f64>() * 4.0 - 2.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| f64::from(r[0] + rng.gen::<f64>() > 0.5)).collect();
        let x = DesignMatrix::new(rows).unwrap();
        let (_, report) = fit_logistic(&x, &y, 0.01).unwrap();
        for pair in report.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
        let y_multi: Vec<usize> = y.iter().map(|&t| t as usize).collect();
        let (_, report) = fit_multinomial(&x, &y_multi, 2, 0.01).unwrap();
        for pair in report.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
    }

    #[test]
    fn fitting_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rows: Vec<Vec<f64>> = (0..80).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let y: Vec<f64> = (0..80).map(|_| f64::from(rng.gen_bool(0.4))).collect();
        let x = DesignMatrix::new(rows).unwrap();
        let (w1, _) = fit_logistic(&x, &y, 0.01).unwrap();
        let (w2, _) = fit_logistic(&x, &y, 0.01).unwrap();
        assert_eq!(w1, w2);
    }

    #[test]
    fn sigmoid_eval_examples() {
        let w = BinaryWeights {
            weights: vec![0.0],
            intercept: 0.0,
        };
        assert_abs_diff_eq!(sigmoid_eval(&w, &[3.0]).unwrap(), 0.5, epsilon = 1e-15);
        let w = BinaryWeights {
            weights: vec![1.0],
            intercept: 0.0,
        };
        assert_abs_diff_eq!(
            sigmoid_eval(&w, &[0.6]).unwrap(),
            1.0 / (1.0 + (-0.6f64).exp()),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(sigmoid_eval(&w, &[0.6]).unwrap(), 0.645656, epsilon = 1e-6);
    }

    #[test]
    fn softmax_sums_to_one() {
        let w = MultinomialWeights {
            weights: vec![vec![1.5, -0.3], vec![0.2, 0.9], vec![-1.0, 0.1]],
            intercepts: vec![0.5, -0.2, 0.0],
        };
        let p = softmax_eval(&w, &[0.7, -1.2]).unwrap();
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let w = BinaryWeights {
            weights: vec![1.0, 2.0],
            intercept: 0.0,
        };
        assert!(sigmoid_eval(&w, &[1.0]).is_err());
    }
}
