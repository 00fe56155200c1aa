//! Synthetic prediction datasets with known analytic ECE/VECE targets.
//!
//! Each generator draws a confidence score `s`, an independent variable
//! `v ~ U(0,1)`, and a correctness outcome; the probability row places mass
//! `s` on class 0 (the predicted class) and spreads the remainder uniformly
//! over the other K-1 classes. All randomness comes from a seeded ChaCha8
//! stream, so a seed pins the dataset bytes.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::{Dataset, PredictionRecord};
use crate::error::{Error, Result};

/// RNG algorithm identifier recorded in sidecar metadata.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.3)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremConfig {
    pub k: usize,
    pub alpha: f64,
    pub n: usize,
    /// Median split point of v (v ~ U(0,1)).
    pub v_t: f64,
    pub seed: u64,
}

impl TheoremConfig {
    pub fn new(k: usize, alpha: f64, n: usize, seed: u64) -> Self {
        Self {
            k,
            alpha,
            n,
            v_t: 0.5,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Parameter("k must be >= 2".into()));
        }
        if !(0.0..=0.25).contains(&self.alpha) {
            return Err(Error::Parameter(format!(
                "alpha must be in [0, 0.25], got {}",
                self.alpha
            )));
        }
        if self.n == 0 {
            return Err(Error::Parameter("n must be >= 1".into()));
        }
        if !(0.0 < self.v_t && self.v_t < 1.0) {
            return Err(Error::Parameter("v_t must be in (0, 1)".into()));
        }
        Ok(())
    }

    /// Midpoint of the achievable score range `[1/K, 1]`.
    pub fn gamma(&self) -> f64 {
        0.5 + 1.0 / (2.0 * self.k as f64)
    }
}

fn make_record(k: usize, s: f64, correct: bool, v: f64, rng: &mut ChaCha8Rng) -> PredictionRecord {
    let rest = (1.0 - s) / (k - 1) as f64;
    let mut probs = vec![rest; k];
    probs[0] = s;
    let label = if correct { 0 } else { rng.gen_range(1..k) };
    PredictionRecord {
        probs,
        label,
        variables: [("v".to_string(), v)].into(),
    }
}

/// Score-calibrated but variable-miscalibrated construction: scores uniform
/// around the score-range midpoint, with accuracy high below `v_t` and low
/// above it so that ECE is small while VECE approaches `0.5 - 1/(2K)`.
pub fn gen_theorem1(cfg: &TheoremConfig) -> Result<Dataset> {
    cfg.validate()?;
    let gamma = cfg.gamma();
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut records = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let v: f64 = rng.gen();
        let s = if cfg.alpha > 0.0 {
            gamma - cfg.alpha + 2.0 * cfg.alpha * rng.gen::<f64>()
        } else {
            gamma
        };
        let p_correct = match (v <= cfg.v_t, s <= gamma) {
            (true, true) => 1.0 - cfg.alpha,
            (true, false) => 1.0,
            (false, true) => 1.0 / k as f64,
            (false, false) => 1.0 / k as f64 + cfg.alpha,
        };
        let correct = rng.gen::<f64>() < p_correct;
        records.push(make_record(k, s, correct, v, &mut rng));
    }
    Dataset::new(records, k, vec!["v".into()])
}

/// Variable-calibrated but score-miscalibrated construction: scores from two
/// uniform clusters at the ends of the score range, accuracy constant at the
/// midpoint so that VECE is zero while ECE approaches `0.5 - 1/(2K)`.
pub fn gen_theorem2(cfg: &TheoremConfig) -> Result<Dataset> {
    cfg.validate()?;
    let gamma = cfg.gamma();
    let k = cfg.k;
    let lo = 1.0 / k as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut records = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let v: f64 = rng.gen();
        let low_cluster = rng.gen_bool(0.5);
        let s = if cfg.alpha > 0.0 {
            let u: f64 = rng.gen();
            if low_cluster {
                lo + cfg.alpha * u
            } else {
                1.0 - cfg.alpha + cfg.alpha * u
            }
        } else if low_cluster {
            lo
        } else {
            1.0
        };
        let correct = rng.gen::<f64>() < gamma;
        records.push(make_record(k, s, correct, v, &mut rng));
    }
    Dataset::new(records, k, vec!["v".into()])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverconfidentConfig {
    pub score_lo: f64,
    pub score_hi: f64,
    pub delta: f64,
    pub n: usize,
    pub seed: u64,
}

/// Consistently overconfident binary construction: `s ~ U(lo, hi)`,
/// correctness `Bernoulli(s - delta)`, so ECE = VECE = delta.
pub fn gen_consistent_overconfident(cfg: &OverconfidentConfig) -> Result<Dataset> {
    if cfg.delta <= 0.0 {
        return Err(Error::Parameter("delta must be > 0".into()));
    }
    if !(cfg.score_lo < cfg.score_hi && cfg.score_hi <= 1.0) {
        return Err(Error::Parameter("need score_lo < score_hi <= 1".into()));
    }
    if cfg.score_lo < 0.5 {
        return Err(Error::Parameter(
            "score_lo must be >= 1/2 (binary confidence range)".into(),
        ));
    }
    if cfg.score_lo - cfg.delta < 0.0 {
        return Err(Error::Parameter(
            "score range must keep s - delta in [0, 1]".into(),
        ));
    }
    if cfg.n == 0 {
        return Err(Error::Parameter("n must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut records = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let v: f64 = rng.gen();
        let s = cfg.score_lo + (cfg.score_hi - cfg.score_lo) * rng.gen::<f64>();
        let correct = rng.gen::<f64>() < s - cfg.delta;
        records.push(make_record(2, s, correct, v, &mut rng));
    }
    Dataset::new(records, 2, vec!["v".into()])
}

/// Analytic (ECE, VECE) targets for the two theorem constructions.
pub fn analytic_targets(theorem: u8, k: usize, alpha: f64) -> Result<(f64, f64)> {
    if k < 2 {
        return Err(Error::Parameter("k must be >= 2".into()));
    }
    if !(0.0..=0.25).contains(&alpha) {
        return Err(Error::Parameter("alpha must be in [0, 0.25]".into()));
    }
    let gap = 0.5 - 1.0 / (2.0 * k as f64) - alpha / 2.0;
    match theorem {
        1 => Ok((alpha / 4.0, gap)),
        2 => Ok((gap, 0.0)),
        other => Err(Error::Parameter(format!(
            "no analytic targets for theorem {other}"
        ))),
    }
}

/// Sidecar metadata written next to a generated prediction file.
#[derive(Debug, Clone, Serialize)]
pub struct SynthMetadata {
    pub generator: String,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub rng: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_hi: Option<f64>,
    pub analytic_ece: f64,
    pub analytic_vece: f64,
}
