//! Shallow CART-style decision tree over a single real variable, used to
//! partition a calibration set. Splits maximize Gini impurity decrease over
//! midpoint thresholds, subject to a depth cap and a minimum leaf size
//! relative to the full calibration set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    pub max_depth: usize,
    /// Minimum leaf size as a fraction of the calibration set size.
    pub min_leaf_fraction: f64,
}

impl Default for TreeSpec {
    fn default() -> Self {
        Self {
            max_depth: 2,
            min_leaf_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        id: usize,
    },
    Split {
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    /// Leaf id for a value; `v <= threshold` goes left. Total over all reals.
    pub fn route(&self, v: f64) -> usize {
        match self {
            TreeNode::Leaf { id } => *id,
            TreeNode::Split {
                threshold,
                left,
                right,
            } => {
                if v <= *threshold {
                    left.route(v)
                } else {
                    right.route(v)
                }
            }
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.num_leaves() + right.num_leaves(),
        }
    }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

struct Builder<'a> {
    v: &'a [f64],
    y: &'a [usize],
    num_classes: usize,
    min_leaf: usize,
    next_leaf: usize,
}

impl Builder<'_> {
    /// Best (threshold, impurity decrease) over midpoints of consecutive
    /// distinct sorted values; ascending scan so ties keep the smallest
    /// threshold. None when no candidate satisfies the leaf-size constraint
    /// with a strictly positive decrease.
    fn best_split(&self, idx: &[usize]) -> Option<(f64, f64)> {
        let n = idx.len();
        let mut sorted: Vec<usize> = idx.to_vec();
        sorted.sort_by(|&i, &j| self.v[i].partial_cmp(&self.v[j]).unwrap());

        let mut total = vec![0usize; self.num_classes];
        for &i in &sorted {
            total[self.y[i]] += 1;
        }
        let parent = gini(&total, n);

        let mut left = vec![0usize; self.num_classes];
        let mut best: Option<(f64, f64)> = None;
        for pos in 1..n {
            left[self.y[sorted[pos - 1]]] += 1;
            let (lo, hi) = (self.v[sorted[pos - 1]], self.v[sorted[pos]]);
            if lo == hi {
                continue;
            }
            if pos < self.min_leaf || n - pos < self.min_leaf {
                continue;
            }
            let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
            let decrease = parent
                - (pos as f64 / n as f64) * gini(&left, pos)
                - ((n - pos) as f64 / n as f64) * gini(&right, n - pos);
            if decrease > 1e-12 && best.is_none_or(|(_, d)| decrease > d) {
                best = Some((0.5 * (lo + hi), decrease));
            }
        }
        best
    }

    fn build(&mut self, idx: &[usize], depth: usize) -> TreeNode {
        if depth > 0 {
            if let Some((threshold, _)) = self.best_split(idx) {
                let (li, ri): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| self.v[i] <= threshold);
                let left = self.build(&li, depth - 1);
                let right = self.build(&ri, depth - 1);
                return TreeNode::Split {
                    threshold,
                    left: Box::new(left),
                    right: Box::new(right),
                };
            }
        }
        let id = self.next_leaf;
        self.next_leaf += 1;
        TreeNode::Leaf { id }
    }
}

/// Fits the split rules; constant v yields a single leaf without error.
pub fn fit_tree(v: &[f64], y: &[usize], num_classes: usize, spec: &TreeSpec) -> Result<TreeNode> {
    if v.len() != y.len() {
        return Err(Error::Contract("value and label lengths differ".into()));
    }
    if v.is_empty() {
        return Err(Error::Parameter("cannot fit tree on empty data".into()));
    }
    let min_leaf = ((spec.min_leaf_fraction * v.len() as f64).ceil() as usize).max(1);
    if v.len() < 2 * min_leaf {
        // no admissible split; degenerate single leaf
        return Ok(TreeNode::Leaf { id: 0 });
    }
    let mut builder = Builder {
        v,
        y,
        num_classes,
        min_leaf,
        next_leaf: 0,
    };
    let idx: Vec<usize> = (0..v.len()).collect();
    Ok(builder.build(&idx, spec.max_depth))
}

/// Leaf id per record for a fitted tree.
pub fn assign_leaves(tree: &TreeNode, v: &[f64]) -> Vec<usize> {
    v.iter().map(|&x| tree.route(x)).collect()
}
