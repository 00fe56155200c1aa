//! Post-hoc calibration methods with a uniform contract: fit on a calibration
//! dataset, apply to any dataset, returning new calibrated probabilities.
//!
//! Binary methods calibrate the class-1 probability; the other class takes
//! the complement. Scores are clipped to `[1e-12, 1-1e-12]` before any log
//! transform.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, PredictionRecord};
use crate::error::{Error, Result};
use crate::logistic::{
    fit_logistic, fit_multinomial, DesignMatrix,
    MultinomialWeights,
};
use crate::tree::{fit_tree, TreeNode, TreeSpec};

pub const DEFAULT_DIRICHLET_LAMBDA: f64 = 1e-3;

const CLIP: f64 = 1e-12;

fn clip(p: f64) -> f64 {
    p.clamp(CLIP, 1.0 - CLIP)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fitted parameters of any calibration method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum CalibratorModel {
    /// Pass-through map (used as a leaf fallback).
    Identity,
    Platt {
        a: f64,
        c: f64,
    },
    Beta {
        a: f64,
        b: f64,
        c: f64,
    },
    Dirichlet {
        weights: Vec<Vec<f64>>,
        intercepts: Vec<f64>,
        lambda: f64,
    },
    ScalingBinning {
        scaler: Box<CalibratorModel>,
        /// Interior bin boundaries, strictly ascending (`num_bins - 1` of them).
        edges: Vec<f64>,
        means: Vec<f64>,
        num_bins: usize,
    },
    TreeVb {
        variable: String,
        tree: TreeNode,
        leaves: Vec<LeafModel>,
    },
    AugLogistic {
        variable: String,
        a: f64,
        b: f64,
        c: f64,
        v_mean: f64,
        v_scale: f64,
    },
    AugBeta {
        variable: String,
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        d2: Option<f64>,
        v_mean: f64,
        v_scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafModel {
    pub calibrator: CalibratorModel,
    /// True when the leaf fell back to the identity map.
    pub fallback: bool,
}

fn require_binary(data: &Dataset, method: &str) -> Result<()> {
    if data.num_classes() != 2 {
        return Err(Error::NotApplicable(format!(
            "{method} requires a binary dataset, got {} classes",
            data.num_classes()
        )));
    }
    Ok(())
}

fn class1_targets(data: &Dataset) -> Vec<f64> {
    data.records()
        .iter()
        .map(|r| f64::from(r.label == 1))
        .collect()
}

pub fn fit_platt(cal: &Dataset) -> Result<CalibratorModel> {
    require_binary(cal, "platt")?;
    let rows: Vec<Vec<f64>> = cal.records().iter().map(|r| vec![r.probs[1]]).collect();
    let x = DesignMatrix::new(rows)?;
    let (w, _) = fit_logistic(&x, &class1_targets(cal), 0.0)?;
    Ok(CalibratorModel::Platt {
        a: w.weights[0],
        c: w.intercept,
    })
}

/// Beta calibration via logistic regression on `(ln s, -ln(1-s))`. A negative
/// fitted coefficient is pinned to zero and the remaining feature refit, so
/// the final map is monotone.
pub fn fit_beta(cal: &Dataset) -> Result<CalibratorModel> {
    require_binary(cal, "beta")?;
    let y = class1_targets(cal);
    let features: Vec<(f64, f64)> = cal
        .records()
        .iter()
        .map(|r| {
            let p = clip(r.probs[1]);
            (p.ln(), -(1.0 - p).ln())
        })
        .collect();

    let fit_subset = |use_a: bool, use_b: bool| -> Result<(f64, f64, f64)> {
        if !use_a && !use_b {
            let rate = y.iter().sum::<f64>() / y.len() as f64;
            let r = rate.clamp(CLIP, 1.0 - CLIP);
            return Ok((0.0, 0.0, (r / (1.0 - r)).ln()));
        }
        let rows: Vec<Vec<f64>> = features
            .iter()
            .map(|&(fa, fb)| {
                let mut row = Vec::new();
                if use_a {
                    row.push(fa);
                }
                if use_b {
                    row.push(fb);
                }
                row
            })
            .collect();
        let x = DesignMatrix::new(rows)?;
        let (w, _) = fit_logistic(&x, &y, 0.0)?;
        let mut iter = w.weights.iter();
        let a = if use_a { *iter.next().unwrap() } else { 0.0 };
        let b = if use_b { *iter.next().unwrap() } else { 0.0 };
        Ok((a, b, w.intercept))
    };

    let (mut a, mut b, mut c) = fit_subset(true, true)?;
    if a < 0.0 || b < 0.0 {
        let (use_a, use_b) = (a >= 0.0, b >= 0.0);
        let refit = fit_subset(use_a, use_b)?;
        a = refit.0;
        b = refit.1;
        c = refit.2;
        if a < 0.0 || b < 0.0 {
            let only = fit_subset(false, false)?;
            a = 0.0;
            b = 0.0;
            c = only.2;
        }
    }
    Ok(CalibratorModel::Beta { a, b, c })
}

pub fn fit_dirichlet(cal: &Dataset, lambda: f64) -> Result<CalibratorModel> {
    if lambda < 0.0 {
        return Err(Error::Parameter("lambda must be >= 0".into()));
    }
    let rows: Vec<Vec<f64>> = cal
        .records()
        .iter()
        .map(|r| r.probs.iter().map(|&p| clip(p).ln()).collect())
        .collect();
    let x = DesignMatrix::new(rows)?;
    let y: Vec<usize> = cal.records().iter().map(|r| r.label).collect();
    let (w, _) = fit_multinomial(&x, &y, cal.num_classes(), lambda)?;
    Ok(CalibratorModel::Dirichlet {
        weights: w.weights,
        intercepts: w.intercepts,
        lambda,
    })
}

/// Equal-support bins over ascending `values`: per-bin means and the interior
/// boundaries between consecutive bins.
pub(crate) fn equal_support_bins(sorted: &[f64], num_bins: usize) -> (Vec<f64>, Vec<f64>) {
    let n = sorted.len();
    let base = n / num_bins;
    let rem = n % num_bins;
    let mut edges = Vec::with_capacity(num_bins - 1);
    let mut means = Vec::with_capacity(num_bins);
    let mut pos = 0;
    for bin in 0..num_bins {
        let size = base + usize::from(bin < rem);
        let chunk = &sorted[pos..pos + size];
        means.push(chunk.iter().sum::<f64>() / size as f64);
        pos += size;
        if bin + 1 < num_bins {
            edges.push(0.5 * (sorted[pos - 1] + sorted[pos]));
        }
    }
    (edges, means)
}

/// Scaling-binning: Platt scaler fit on the first half of the calibration
/// set, equal-support bin means of the scaled second half.
pub fn fit_scaling_binning(cal: &Dataset, num_bins: usize) -> Result<CalibratorModel> {
    require_binary(cal, "scaling-binning")?;
    if num_bins == 0 {
        return Err(Error::Parameter("num_bins must be >= 1".into()));
    }
    if cal.len() < 2 * num_bins {
        return Err(Error::Parameter(format!(
            "scaling-binning needs at least 2B = {} calibration records, got {}",
            2 * num_bins,
            cal.len()
        )));
    }
    let half = cal.len() / 2;
    let first: Vec<usize> = (0..half).collect();
    let second: Vec<usize> = (half..cal.len()).collect();
    let scaler = fit_platt(&cal.subset(&first)?)?;
    let mut scaled: Vec<f64> = second
        .iter()
        .map(|&i| apply_p1(&scaler, &cal.records()[i]))
        .collect::<Result<_>>()?;
    scaled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (edges, means) = equal_support_bins(&scaled, num_bins);
    Ok(CalibratorModel::ScalingBinning {
        scaler: Box::new(scaler),
        edges,
        means,
        num_bins,
    })
}

pub fn fit_aug_logistic(cal: &Dataset, variable: &str) -> Result<CalibratorModel> {
    require_binary(cal, "aug-logistic")?;
    let v = cal.variable_values(variable)?;
    let (v_mean, v_scale) = standardization(&v);
    let rows: Vec<Vec<f64>> = cal
        .records()
        .iter()
        .zip(&v)
        .map(|(r, &vi)| vec![r.probs[1], (vi - v_mean) / v_scale])
        .collect();
    let x = DesignMatrix::new(rows)?;
    let (w, _) = fit_logistic(&x, &class1_targets(cal), 0.0)?;
    Ok(CalibratorModel::AugLogistic {
        variable: variable.to_string(),
        a: w.weights[0],
        b: w.weights[1],
        c: w.intercept,
        v_mean,
        v_scale,
    })
}

pub fn fit_aug_beta(cal: &Dataset, variable: &str, quadratic: bool) -> Result<CalibratorModel> {
    require_binary(cal, "aug-beta")?;
    let v = cal.variable_values(variable)?;
    let (v_mean, v_scale) = standardization(&v);
    let rows: Vec<Vec<f64>> = cal
        .records()
        .iter()
        .zip(&v)
        .map(|(r, &vi)| {
            let p = clip(r.probs[1]);
            let vs = (vi - v_mean) / v_scale;
            let mut row = vec![p.ln(), -(1.0 - p).ln(), vs];
            if quadratic {
                row.push(vs * vs);
            }
            row
        })
        .collect();
    let x = DesignMatrix::new(rows)?;
    let (w, _) = fit_logistic(&x, &class1_targets(cal), 0.0)?;
    Ok(CalibratorModel::AugBeta {
        variable: variable.to_string(),
        a: w.weights[0],
        b: w.weights[1],
        c: w.intercept,
        d: w.weights[2],
        d2: quadratic.then(|| w.weights[3]),
        v_mean,
        v_scale,
    })
}

fn standardization(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let scale = var.sqrt();
    (mean, if scale > 0.0 { scale } else { 1.0 })
}

/// Tree-based variable-based calibration: shallow tree on (v, y), then a
/// per-leaf beta (binary) or Dirichlet (multiclass) calibrator. A leaf whose
/// correctness outcomes are all identical falls back to the identity map.
pub fn fit_tree_vb(cal: &Dataset, variable: &str, spec: &TreeSpec) -> Result<CalibratorModel> {
    let v = cal.variable_values(variable)?;
    let y: Vec<usize> = cal.records().iter().map(|r| r.label).collect();
    let tree = fit_tree(&v, &y, cal.num_classes(), spec)?;
    let num_leaves = tree.num_leaves();
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); num_leaves];
    for (i, &vi) in v.iter().enumerate() {
        groups[tree.route(vi)].push(i);
    }
    let mut leaves = Vec::with_capacity(num_leaves);
    for group in &groups {
        let subset = cal.subset(group)?;
        let distinct_correct = {
            let c = subset.correctness();
            c.contains(&1.0) && c.contains(&0.0)
        };
        if !distinct_correct {
            leaves.push(LeafModel {
                calibrator: CalibratorModel::Identity,
                fallback: true,
            });
            continue;
        }
        let calibrator = if cal.num_classes() == 2 {
            fit_beta(&subset)?
        } else {
            fit_dirichlet(&subset, DEFAULT_DIRICHLET_LAMBDA)?
        };
        leaves.push(LeafModel {
            calibrator,
            fallback: false,
        });
    }
    Ok(CalibratorModel::TreeVb {
        variable: variable.to_string(),
        tree,
        leaves,
    })
}

fn beta_log_odds(a: f64, b: f64, p1: f64) -> f64 {
    let p = clip(p1);
    a * p.ln() + b * (-(1.0 - p).ln())
}

/// Calibrated class-1 probability for binary models.
fn apply_p1(model: &CalibratorModel, record: &PredictionRecord) -> Result<f64> {
    let p1 = record.probs[1];
    match model {
        CalibratorModel::Identity => Ok(p1),
        CalibratorModel::Platt { a, c } => Ok(sigmoid(a * p1 + c)),
        CalibratorModel::Beta { a, b, c } => Ok(sigmoid(beta_log_odds(*a, *b, p1) + c)),
        CalibratorModel::ScalingBinning {
            scaler,
            edges,
            means,
            ..
        } => {
            let scaled = apply_p1(scaler, record)?;
            let bin = edges.partition_point(|&e| e < scaled);
            Ok(means[bin])
        }
        CalibratorModel::AugLogistic {
            variable,
            a,
            b,
            c,
            v_mean,
            v_scale,
        } => {
            let v = *record
                .variables
                .get(variable)
                .ok_or_else(|| Error::UnknownVariable(variable.clone()))?;
            let vs = (v - v_mean) / v_scale;
            let mut z = a * p1;
            z += b * vs;
            z += c;
            Ok(sigmoid(z))
        }
        CalibratorModel::AugBeta {
            variable,
            a,
            b,
            c,
            d,
            d2,
            v_mean,
            v_scale,
        } => {
            let v = *record
                .variables
                .get(variable)
                .ok_or_else(|| Error::UnknownVariable(variable.clone()))?;
            let vs = (v - v_mean) / v_scale;
            let mut z = beta_log_odds(*a, *b, p1);
            z += d * vs;
            if let Some(d2) = d2 {
                z += d2 * vs * vs;
            }
            z += c;
            Ok(sigmoid(z))
        }
        _ => Err(Error::Contract("not a binary scalar calibrator".into())),
    }
}

fn apply_record(model: &CalibratorModel, record: &PredictionRecord) -> Result<Vec<f64>> {
    match model {
        CalibratorModel::Identity => Ok(record.probs.clone()),
        CalibratorModel::Dirichlet {
            weights,
            intercepts,
            ..
        } => {
            let x: Vec<f64> = record.probs.iter().map(|&p| clip(p).ln()).collect();
            let w = MultinomialWeights {
                weights: weights.clone(),
                intercepts: intercepts.clone(),
            };
            crate::logistic::softmax_eval(&w, &x)
        }
        CalibratorModel::TreeVb {
            variable,
            tree,
            leaves,
        } => {
            let v = *record
                .variables
                .get(variable)
                .ok_or_else(|| Error::UnknownVariable(variable.clone()))?;
            let leaf = tree.route(v);
            apply_record(&leaves[leaf].calibrator, record)
        }
        _ => {
            let p1 = apply_p1(model, record)?;
            Ok(vec![1.0 - p1, p1])
        }
    }
}

/// Applies a fitted model to a dataset, producing calibrated probabilities
/// with labels and variables preserved.
pub fn apply(model: &CalibratorModel, data: &Dataset) -> Result<Dataset> {
    match model {
        CalibratorModel::Identity | CalibratorModel::Dirichlet { .. } => {}
        CalibratorModel::TreeVb { leaves, .. } => {
            // binary leaves output two-class rows; Dirichlet leaves keep K
            let binary = leaves.iter().any(|l| {
                matches!(l.calibrator, CalibratorModel::Beta { .. })
            });
            if binary {
                require_binary(data, "tree-vb (beta leaves)")?;
            }
        }
        _ => require_binary(data, "binary calibrator")?,
    }
    let probs: Vec<Vec<f64>> = data
        .records()
        .iter()
        .map(|r| apply_record(model, r))
        .collect::<Result<_>>()?;
    data.with_probs(probs)
}

#[derive(Serialize, Deserialize)]
struct VersionedModel {
    version: u32,
    model: CalibratorModel,
}

const MODEL_VERSION: u32 = 1;

pub fn save_model(model: &CalibratorModel, path: impl AsRef<Path>) -> Result<()> {
    let wrapped = VersionedModel {
        version: MODEL_VERSION,
        model: model.clone(),
    };
    fs::write(path, serde_json::to_string_pretty(&wrapped)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CalibratorModel> {
    let text = fs::read_to_string(path)?;
    let wrapped: VersionedModel = serde_json::from_str(&text)?;
    if wrapped.version != MODEL_VERSION {
        return Err(Error::Schema(format!(
            "unsupported model version {}",
            wrapped.version
        )));
    }
    Ok(wrapped.model)
}
