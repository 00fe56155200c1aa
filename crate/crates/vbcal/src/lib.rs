//! Score-based and variable-based calibration diagnostics for classifier
//! predictions: binned ECE/VECE estimators, reliability and variable-based
//! calibration plot data (LOESS), post-hoc calibration methods (Platt, beta,
//! Dirichlet, scaling-binning, tree-based and augmented variable-based
//! calibration), and synthetic constructions with analytic error targets.

pub mod binning;
pub mod calibrate;
pub mod data;
pub mod error;
mod linalg;
pub mod loess;
pub mod logistic;
pub mod plot;
pub mod synth;
pub mod tree;

pub use binning::{
    assign_bins, ece_hat, rank_variables, reliability_data, variable_curve_data, vce_point,
    vece_hat, worst_case_vce, BinSummary, BinningKind, BinningScheme, DiagnosisReport,
};
pub use calibrate::{apply, load_model, save_model, CalibratorModel};
pub use data::{load_predictions, write_predictions, Dataset, PredictionRecord};
pub use error::{Error, Result};
pub use loess::{calibration_curves, fit_loess, max_curve_gap, CurveEstimate, LoessConfig};
pub use synth::{
    analytic_targets, gen_consistent_overconfident, gen_theorem1, gen_theorem2,
    OverconfidentConfig, TheoremConfig,
};
pub use tree::TreeSpec;
