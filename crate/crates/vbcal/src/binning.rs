//! Binning schemes and the binned estimators of ECE and VECE, plus
//! reliability-diagram data, variable ranking, and worst-case VCE.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loess::{self, LoessConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinningKind {
    EqualWidth,
    EqualSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinningScheme {
    pub kind: BinningKind,
    pub num_bins: usize,
}

impl BinningScheme {
    pub fn equal_width(num_bins: usize) -> Self {
        Self {
            kind: BinningKind::EqualWidth,
            num_bins,
        }
    }

    pub fn equal_support(num_bins: usize) -> Self {
        Self {
            kind: BinningKind::EqualSupport,
            num_bins,
        }
    }
}

impl Default for BinningScheme {
    /// Equal-support with B=10.
    fn default() -> Self {
        Self::equal_support(10)
    }
}

/// Result of binning a value vector: per-value bin index plus bin edges
/// (`edges.len() == num_bins + 1`).
#[derive(Debug, Clone)]
pub struct BinAssignment {
    pub edges: Vec<f64>,
    pub bin_of: Vec<usize>,
    pub num_bins: usize,
}

/// Assigns each value to exactly one bin.
///
/// `domain` is the natural domain used for equal-width edges (the confidence
/// domain is `[1/K, 1]`; a variable's domain is `[min v, max v]`). Equal-support
/// edges come from empirical quantiles; bin sizes differ by at most one, with
/// the earlier bins taking the extra records.
pub fn assign_bins(
    values: &[f64],
    scheme: &BinningScheme,
    domain: (f64, f64),
) -> Result<BinAssignment> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Parameter("cannot bin an empty value vector".into()));
    }
    let b = scheme.num_bins;
    if b == 0 {
        return Err(Error::Parameter("num_bins must be >= 1".into()));
    }
    match scheme.kind {
        BinningKind::EqualWidth => {
            let (lo, hi) = domain;
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::Parameter(format!("invalid domain [{lo}, {hi}]")));
            }
            let width = hi - lo;
            let edges: Vec<f64> = (0..=b).map(|i| lo + width * i as f64 / b as f64).collect();
            let bin_of = values
                .iter()
                .map(|&x| {
                    if width == 0.0 {
                        0
                    } else {
                        // right edge inclusive in the last bin
                        (((x - lo) / width * b as f64).floor() as i64).clamp(0, b as i64 - 1)
                            as usize
                    }
                })
                .collect();
            Ok(BinAssignment {
                edges,
                bin_of,
                num_bins: b,
            })
        }
        BinningKind::EqualSupport => {
            if b > n {
                return Err(Error::Parameter(format!(
                    "equal_support needs B <= n ({b} > {n})"
                )));
            }
            // stable sort keeps tied values contiguous in file order
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
            let base = n / b;
            let rem = n % b;
            let mut bin_of = vec![0usize; n];
            let mut edges = Vec::with_capacity(b + 1);
            edges.push(values[order[0]]);
            let mut pos = 0;
            for bin in 0..b {
                let size = base + usize::from(bin < rem);
                for &idx in &order[pos..pos + size] {
                    bin_of[idx] = bin;
                }
                pos += size;
                if bin + 1 < b {
                    // boundary between the last value of this bin and the first of the next
                    let lo = values[order[pos - 1]];
                    let hi = values[order[pos]];
                    edges.push(0.5 * (lo + hi));
                } else {
                    edges.push(values[order[n - 1]]);
                }
            }
            Ok(BinAssignment {
                edges,
                bin_of,
                num_bins: b,
            })
        }
    }
}

/// One bin of a reliability diagram or variable-based calibration table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinSummary {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Absent when the bin is empty.
    pub accuracy: Option<f64>,
    pub mean_confidence: Option<f64>,
}

fn summarize(
    assignment: &BinAssignment,
    correctness: &[f64],
    confidences: &[f64],
) -> Vec<BinSummary> {
    let b = assignment.num_bins;
    let mut count = vec![0usize; b];
    let mut acc_sum = vec![0.0f64; b];
    let mut conf_sum = vec![0.0f64; b];
    for (i, &bin) in assignment.bin_of.iter().enumerate() {
        count[bin] += 1;
        acc_sum[bin] += correctness[i];
        conf_sum[bin] += confidences[i];
    }
    (0..b)
        .map(|bin| BinSummary {
            lower: assignment.edges[bin],
            upper: assignment.edges[bin + 1],
            count: count[bin],
            accuracy: (count[bin] > 0).then(|| acc_sum[bin] / count[bin] as f64),
            mean_confidence: (count[bin] > 0).then(|| conf_sum[bin] / count[bin] as f64),
        })
        .collect()
}

fn weighted_gap(summaries: &[BinSummary], n: usize) -> f64 {
    summaries
        .iter()
        .filter(|s| s.count > 0)
        .map(|s| {
            s.count as f64 / n as f64 * (s.accuracy.unwrap() - s.mean_confidence.unwrap()).abs()
        })
        .sum()
}

/// Per-bin accuracy and mean confidence with bins over the confidence score.
pub fn reliability_data(dataset: &Dataset, scheme: &BinningScheme) -> Result<Vec<BinSummary>> {
    let conf = dataset.confidences();
    let correct = dataset.correctness();
    let domain = (1.0 / dataset.num_classes() as f64, 1.0);
    let assignment = assign_bins(&conf, scheme, domain)?;
    Ok(summarize(&assignment, &correct, &conf))
}

/// Binned ECE estimate: sum over confidence bins of `(n_b/n)|Acc_b - Conf_b|`.
pub fn ece_hat(dataset: &Dataset, scheme: &BinningScheme) -> Result<f64> {
    let summaries = reliability_data(dataset, scheme)?;
    Ok(weighted_gap(&summaries, dataset.len()))
}

/// Per-bin accuracy and mean confidence with bins over a variable's values.
pub fn variable_curve_data(
    dataset: &Dataset,
    variable: &str,
    scheme: &BinningScheme,
) -> Result<Vec<BinSummary>> {
    let values = dataset.variable_values(variable)?;
    let conf = dataset.confidences();
    let correct = dataset.correctness();
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let assignment = assign_bins(&values, scheme, (lo, hi))?;
    Ok(summarize(&assignment, &correct, &conf))
}

/// Binned VECE estimate: same weighted gap with bins over the variable.
pub fn vece_hat(dataset: &Dataset, variable: &str, scheme: &BinningScheme) -> Result<f64> {
    let summaries = variable_curve_data(dataset, variable, scheme)?;
    Ok(weighted_gap(&summaries, dataset.len()))
}

/// Pointwise variable-based calibration error `|Acc(v) - E[s|v]|`.
pub fn vce_point(accuracy_at_v: f64, mean_confidence_at_v: f64) -> f64 {
    (accuracy_at_v - mean_confidence_at_v).abs()
}

/// Worst-case VCE for a variable: LOESS curves of correctness and confidence
/// against v on a shared grid, returning the grid point with the largest
/// absolute curve difference (ties broken toward smaller v).
pub fn worst_case_vce(
    dataset: &Dataset,
    variable: &str,
    config: &LoessConfig,
) -> Result<(f64, f64)> {
    let v = dataset.variable_values(variable)?;
    let acc_curve = loess::fit_loess(&v, &dataset.correctness(), config)?;
    let conf_curve = loess::fit_loess(&v, &dataset.confidences(), config)?;
    loess::max_curve_gap(&acc_curve, &conf_curve)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableDiagnosis {
    pub variable: String,
    pub vece: f64,
    pub v_star: f64,
    pub vce_at_v_star: f64,
}

/// ECE plus per-variable VECE and worst-case VCE, sorted by VECE descending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosisReport {
    pub ece: f64,
    pub variables: Vec<VariableDiagnosis>,
}

pub fn rank_variables(
    dataset: &Dataset,
    scheme: &BinningScheme,
    loess_config: &LoessConfig,
) -> Result<DiagnosisReport> {
    if dataset.variable_names().is_empty() {
        return Err(Error::Parameter(
            "dataset has no variable columns to rank".into(),
        ));
    }
    let ece = ece_hat(dataset, scheme)?;
    let mut variables = Vec::new();
    for name in dataset.variable_names() {
        let vece = vece_hat(dataset, name, scheme)?;
        let (v_star, vce_at_v_star) = worst_case_vce(dataset, name, loess_config)?;
        variables.push(VariableDiagnosis {
            variable: name.clone(),
            vece,
            v_star,
            vce_at_v_star,
        });
    }
    variables.sort_by(|a, b| b.vece.partial_cmp(&a.vece).unwrap());
    Ok(DiagnosisReport { ece, variables })
}

impl DiagnosisReport {
    /// Tabular text rendering: ECE header line then one row per variable.
    pub fn to_table(&self) -> String {
        let mut out = format!("ECE: {:.6}\n", self.ece);
        out.push_str(&format!(
            "{:<24} {:>10} {:>14} {:>12}\n",
            "variable", "VECE", "v*", "VCE(v*)"
        ));
        for v in &self.variables {
            out.push_str(&format!(
                "{:<24} {:>10.6} {:>14.6} {:>12.6}\n",
                v.variable, v.vece, v.v_star, v.vce_at_v_star
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PredictionRecord;
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    /// Binary dataset from (p1, label, v) triples.
    pub(crate) fn binary_dataset(rows: &[(f64, usize, f64)]) -> Dataset {
        let records = rows
            .iter()
            .map(|&(p1, label, v)| PredictionRecord {
                probs: vec![1.0 - p1, p1],
                label,
                variables: BTreeMap::from([("v".to_string(), v)]),
            })
            .collect();
        Dataset::new(records, 2, vec!["v".into()]).unwrap()
    }

    /// Small hand-checkable example: confidences .6,.7,.8,.9 with
    /// correctness 1,0,1,1 and v = 1,2,3,4.
    fn four_record_example() -> Dataset {
        binary_dataset(&[
            (0.6, 1, 1.0),
            (0.7, 0, 2.0),
            (0.8, 1, 3.0),
            (0.9, 1, 4.0),
        ])
    }

    #[test]
    fn equal_width_split() {
        let a = assign_bins(
            &[0.6, 0.7, 0.8, 0.9],
            &BinningScheme::equal_width(2),
            (0.5, 1.0),
        )
        .unwrap();
        assert_eq!(a.bin_of, vec![0, 0, 1, 1]);
        assert_eq!(a.edges, vec![0.5, 0.75, 1.0]);
    }

    #[test]
    fn equal_support_median_split() {
        let a = assign_bins(
            &[1.0, 2.0, 3.0, 4.0],
            &BinningScheme::equal_support(2),
            (1.0, 4.0),
        )
        .unwrap();
        assert_eq!(a.bin_of, vec![0, 0, 1, 1]);
    }

    #[test]
    fn equal_support_uneven_sizes() {
        let a = assign_bins(
            &[5.0, 1.0, 3.0, 2.0, 4.0],
            &BinningScheme::equal_support(2),
            (1.0, 5.0),
        )
        .unwrap();
        let counts = [
            a.bin_of.iter().filter(|&&b| b == 0).count(),
            a.bin_of.iter().filter(|&&b| b == 1).count(),
        ];
        assert_eq!(counts, [3, 2]);
    }

    #[test]
    fn equal_support_rejects_more_bins_than_points() {
        assert!(matches!(
            assign_bins(&[1.0, 2.0], &BinningScheme::equal_support(3), (1.0, 2.0)),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn right_edge_inclusive_in_last_bin() {
        let a = assign_bins(&[1.0], &BinningScheme::equal_width(4), (0.5, 1.0)).unwrap();
        assert_eq!(a.bin_of, vec![3]);
    }

    #[test]
    fn ece_four_record_example() {
        let d = four_record_example();
        let ece = ece_hat(&d, &BinningScheme::equal_width(2)).unwrap();
        assert_abs_diff_eq!(ece, 0.15, epsilon = 1e-12);
    }

    #[test]
    fn ece_zero_for_perfectly_calibrated_bin() {
        // all s = 0.8, 4 of 5 correct
        let d = binary_dataset(&[
            (0.8, 1, 0.0),
            (0.8, 1, 0.0),
            (0.8, 1, 0.0),
            (0.8, 1, 0.0),
            (0.8, 0, 0.0),
        ]);
        let ece = ece_hat(&d, &BinningScheme::equal_width(1)).unwrap();
        assert_abs_diff_eq!(ece, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn single_bin_collapse() {
        let d = four_record_example();
        let expected = (0.75f64 - 0.75f64).abs(); // acc 3/4, mean conf 0.75
        for scheme in [BinningScheme::equal_width(1), BinningScheme::equal_support(1)] {
            assert_abs_diff_eq!(ece_hat(&d, &scheme).unwrap(), expected, epsilon = 1e-12);
            assert_abs_diff_eq!(
                vece_hat(&d, "v", &scheme).unwrap(),
                expected,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn vece_four_record_example() {
        let d = four_record_example();
        let vece = vece_hat(&d, "v", &BinningScheme::equal_support(2)).unwrap();
        assert_abs_diff_eq!(vece, 0.15, epsilon = 1e-12);
    }

    #[test]
    fn vece_unknown_variable() {
        let d = four_record_example();
        assert!(matches!(
            vece_hat(&d, "nope", &BinningScheme::default()),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn reliability_summaries_match_hand_computation() {
        let d = four_record_example();
        let bins = reliability_data(&d, &BinningScheme::equal_width(2)).unwrap();
        assert_eq!(bins.len(), 2);
        assert_abs_diff_eq!(bins[0].accuracy.unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(bins[0].mean_confidence.unwrap(), 0.65, epsilon = 1e-12);
        assert_abs_diff_eq!(bins[1].accuracy.unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bins[1].mean_confidence.unwrap(), 0.85, epsilon = 1e-12);
    }

    #[test]
    fn reliability_weighted_gaps_recompose_to_ece() {
        let d = four_record_example();
        let scheme = BinningScheme::equal_width(3);
        let bins = reliability_data(&d, &scheme).unwrap();
        let recomposed = weighted_gap(&bins, d.len());
        assert_eq!(recomposed, ece_hat(&d, &scheme).unwrap());
    }

    #[test]
    fn empty_equal_width_bin_flagged_absent() {
        let d = binary_dataset(&[(0.55, 1, 0.0), (0.95, 1, 0.0)]);
        let bins = reliability_data(&d, &BinningScheme::equal_width(5)).unwrap();
        let empty: Vec<_> = bins.iter().filter(|b| b.count == 0).collect();
        assert!(!empty.is_empty());
        assert!(empty.iter().all(|b| b.accuracy.is_none() && b.mean_confidence.is_none()));
    }

    #[test]
    fn variable_curve_data_matches_vece() {
        let d = four_record_example();
        let scheme = BinningScheme::equal_support(2);
        let bins = variable_curve_data(&d, "v", &scheme).unwrap();
        assert_abs_diff_eq!(bins[0].accuracy.unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(bins[0].mean_confidence.unwrap(), 0.65, epsilon = 1e-12);
        assert_eq!(
            weighted_gap(&bins, d.len()),
            vece_hat(&d, "v", &scheme).unwrap()
        );
    }

    #[test]
    fn vce_point_examples() {
        assert_abs_diff_eq!(vce_point(0.79, 0.76), 0.03, epsilon = 1e-12);
        assert_abs_diff_eq!(vce_point(0.42, 0.42), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vce_point(0.55, 0.75), 0.20, epsilon = 1e-12);
    }

    #[test]
    fn permutation_invariance() {
        let rows = [
            (0.6, 1, 1.0),
            (0.7, 0, 2.0),
            (0.8, 1, 3.0),
            (0.9, 1, 4.0),
            (0.55, 0, 2.5),
        ];
        let mut shuffled = rows;
        shuffled.swap(0, 4);
        shuffled.swap(1, 3);
        let d1 = binary_dataset(&rows);
        let d2 = binary_dataset(&shuffled);
        for scheme in [BinningScheme::equal_width(3), BinningScheme::equal_support(2)] {
            assert_abs_diff_eq!(
                ece_hat(&d1, &scheme).unwrap(),
                ece_hat(&d2, &scheme).unwrap(),
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                vece_hat(&d1, "v", &scheme).unwrap(),
                vece_hat(&d2, "v", &scheme).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn ranking_sorted_descending() {
        // v1 tracks correctness structure, v2 is unrelated
        let mut rows = Vec::new();
        for i in 0..400 {
            let t = i as f64 / 400.0;
            let correct = t < 0.5;
            let p1 = 0.75;
            let label = if correct { 1 } else { 0 };
            rows.push((p1, label, t, (i % 7) as f64));
        }
        let records = rows
            .iter()
            .map(|&(p1, label, v1, v2)| PredictionRecord {
                probs: vec![1.0 - p1, p1],
                label,
                variables: BTreeMap::from([("v1".to_string(), v1), ("v2".to_string(), v2)]),
            })
            .collect();
        let d = Dataset::new(records, 2, vec!["v1".into(), "v2".into()]).unwrap();
        let report = rank_variables(
            &d,
            &BinningScheme::default(),
            &LoessConfig::default(),
        )
        .unwrap();
        assert_eq!(report.variables.len(), 2);
        assert_eq!(report.variables[0].variable, "v1");
        for pair in report.variables.windows(2) {
            assert!(pair[0].vece >= pair[1].vece);
        }
    }
}
