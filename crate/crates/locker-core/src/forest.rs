//! Random forests built from scratch: axis-aligned binary CART trees,
//! bagging, and per-split feature subsampling, all driven by an explicit
//! seed. A regression tree leaf stores the mean training target; a
//! classification tree leaf stores dwell-class frequencies.
//!
//! Training rows are put into a canonical order before any sampling, so a
//! permutation of the input rows trains the identical forest.

use serde::{Deserialize, Serialize};

use crate::error::{LockerError, Result};
use crate::rng::{derive_indexed_seed, DetRng};
use crate::types::DWELL_CLASSES;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestHyper {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub features_per_split: usize,
}

impl Default for ForestHyper {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 8,
            min_leaf: 2,
            features_per_split: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum RegNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<RegNode>,
}

impl RegressionTree {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                RegNode::Leaf { value } => return *value,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if features[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum ClassNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        frequencies: [f64; DWELL_CLASSES],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTree {
    nodes: Vec<ClassNode>,
}

impl ClassificationTree {
    pub fn predict(&self, features: &[f64]) -> [f64; DWELL_CLASSES] {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                ClassNode::Leaf { frequencies } => return *frequencies,
                ClassNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if features[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

/// One regression forest, trained for a single horizon day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionForest {
    pub horizon_day: u32,
    pub rng_seed: u64,
    trees: Vec<RegressionTree>,
    target_min: f64,
    target_max: f64,
}

impl RegressionForest {
    pub fn train(
        rows: &[(Vec<f64>, f64)],
        hyper: &ForestHyper,
        seed: u64,
        horizon_day: u32,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(LockerError::Training(
                "cannot train a regression forest on an empty set".to_string(),
            ));
        }
        let n_features = rows[0].0.len();
        for (features, target) in rows {
            if features.len() != n_features {
                return Err(LockerError::Training("ragged feature rows".to_string()));
            }
            if !target.is_finite() || features.iter().any(|v| !v.is_finite()) {
                return Err(LockerError::Training("non-finite training value".to_string()));
            }
        }
        // canonical order: invariance to input permutation
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by(|&a, &b| {
            let (fa, ta) = &rows[a];
            let (fb, tb) = &rows[b];
            fa.iter()
                .zip(fb.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or_else(|| ta.total_cmp(tb))
        });
        let features: Vec<&[f64]> = order.iter().map(|&i| rows[i].0.as_slice()).collect();
        let targets: Vec<f64> = order.iter().map(|&i| rows[i].1).collect();

        let target_min = targets.iter().copied().fold(f64::INFINITY, f64::min);
        let target_max = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let trees = (0..hyper.n_trees)
            .map(|t| {
                let mut rng = DetRng::seed_from_u64(derive_indexed_seed(seed, t as u64));
                let sample = rng.bootstrap_indices(targets.len(), targets.len());
                grow_regression(&features, &targets, sample, hyper, &mut rng)
            })
            .collect();

        Ok(Self {
            horizon_day,
            rng_seed: seed,
            trees,
            target_min,
            target_max,
        })
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(features)).sum();
        sum / self.trees.len() as f64
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    /// Range of training targets; every prediction lies inside it.
    pub fn target_bounds(&self) -> (f64, f64) {
        (self.target_min, self.target_max)
    }
}

/// A 7-way dwell-class forest; predictions are class-frequency vectors
/// averaged over trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationForest {
    pub rng_seed: u64,
    trees: Vec<ClassificationTree>,
}

impl ClassificationForest {
    pub fn train(rows: &[(Vec<f64>, usize)], hyper: &ForestHyper, seed: u64) -> Result<Self> {
        if rows.is_empty() {
            return Err(LockerError::Training(
                "cannot train a classification forest on an empty set".to_string(),
            ));
        }
        let n_features = rows[0].0.len();
        for (features, class) in rows {
            if features.len() != n_features {
                return Err(LockerError::Training("ragged feature rows".to_string()));
            }
            if *class >= DWELL_CLASSES {
                return Err(LockerError::Training(format!(
                    "dwell class {class} out of range 0..{DWELL_CLASSES}"
                )));
            }
        }
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by(|&a, &b| {
            let (fa, ca) = &rows[a];
            let (fb, cb) = &rows[b];
            fa.iter()
                .zip(fb.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or_else(|| ca.cmp(cb))
        });
        let features: Vec<&[f64]> = order.iter().map(|&i| rows[i].0.as_slice()).collect();
        let classes: Vec<usize> = order.iter().map(|&i| rows[i].1).collect();

        let trees = (0..hyper.n_trees)
            .map(|t| {
                let mut rng = DetRng::seed_from_u64(derive_indexed_seed(seed, t as u64));
                let sample = rng.bootstrap_indices(classes.len(), classes.len());
                grow_classification(&features, &classes, sample, hyper, &mut rng)
            })
            .collect();

        Ok(Self {
            rng_seed: seed,
            trees,
        })
    }

    pub fn predict_scores(&self, features: &[f64]) -> [f64; DWELL_CLASSES] {
        let mut scores = [0.0; DWELL_CLASSES];
        for tree in &self.trees {
            let f = tree.predict(features);
            for (acc, v) in scores.iter_mut().zip(f.iter()) {
                *acc += v;
            }
        }
        for v in &mut scores {
            *v /= self.trees.len() as f64;
        }
        scores
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn grow_regression(
    features: &[&[f64]],
    targets: &[f64],
    sample: Vec<usize>,
    hyper: &ForestHyper,
    rng: &mut DetRng,
) -> RegressionTree {
    let mut nodes = Vec::new();
    build_regression(features, targets, sample, 0, hyper, rng, &mut nodes);
    RegressionTree { nodes }
}

fn build_regression(
    features: &[&[f64]],
    targets: &[f64],
    mut sample: Vec<usize>,
    depth: usize,
    hyper: &ForestHyper,
    rng: &mut DetRng,
    nodes: &mut Vec<RegNode>,
) -> usize {
    let n = sample.len();
    let sum: f64 = sample.iter().map(|&i| targets[i]).sum();
    let mean = sum / n as f64;
    let sse: f64 = sample.iter().map(|&i| (targets[i] - mean).powi(2)).sum();

    let make_leaf = |nodes: &mut Vec<RegNode>| {
        nodes.push(RegNode::Leaf { value: mean });
        nodes.len() - 1
    };

    if depth >= hyper.max_depth || n < 2 * hyper.min_leaf || sse <= 1e-12 {
        return make_leaf(nodes);
    }

    let n_features = features[0].len();
    let candidates = rng.sample_distinct(n_features, hyper.features_per_split.min(n_features));

    let mut best: Option<BestSplit> = None;
    for &f in &candidates {
        sample.sort_by(|&a, &b| features[a][f].total_cmp(&features[b][f]).then(a.cmp(&b)));
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        let total_sq: f64 = sample.iter().map(|&i| targets[i] * targets[i]).sum();
        for split in 1..n {
            let prev = sample[split - 1];
            left_sum += targets[prev];
            left_sq += targets[prev] * targets[prev];
            if features[prev][f] == features[sample[split]][f] {
                continue;
            }
            if split < hyper.min_leaf || n - split < hyper.min_leaf {
                continue;
            }
            let right_sum = sum - left_sum;
            let right_sq = total_sq - left_sq;
            let nl = split as f64;
            let nr = (n - split) as f64;
            let sse_left = left_sq - left_sum * left_sum / nl;
            let sse_right = right_sq - right_sum * right_sum / nr;
            let gain = sse - sse_left - sse_right;
            if best.as_ref().is_none_or(|b| gain > b.gain + 1e-12) {
                best = Some(BestSplit {
                    gain,
                    feature: f,
                    threshold: 0.5 * (features[prev][f] + features[sample[split]][f]),
                });
            }
        }
    }

    let Some(best) = best else {
        return make_leaf(nodes);
    };
    if best.gain <= 1e-12 {
        return make_leaf(nodes);
    }

    let (left_sample, right_sample): (Vec<usize>, Vec<usize>) = sample
        .iter()
        .partition(|&&i| features[i][best.feature] <= best.threshold);

    let here = nodes.len();
    nodes.push(RegNode::Leaf { value: 0.0 }); // placeholder
    let left = build_regression(features, targets, left_sample, depth + 1, hyper, rng, nodes);
    let right = build_regression(features, targets, right_sample, depth + 1, hyper, rng, nodes);
    nodes[here] = RegNode::Split {
        feature: best.feature,
        threshold: best.threshold,
        left,
        right,
    };
    here
}

fn grow_classification(
    features: &[&[f64]],
    classes: &[usize],
    sample: Vec<usize>,
    hyper: &ForestHyper,
    rng: &mut DetRng,
) -> ClassificationTree {
    let mut nodes = Vec::new();
    build_classification(features, classes, sample, 0, hyper, rng, &mut nodes);
    ClassificationTree { nodes }
}

fn gini(counts: &[f64; DWELL_CLASSES], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let mut impurity = 1.0;
    for &c in counts {
        let p = c / total;
        impurity -= p * p;
    }
    impurity
}

fn build_classification(
    features: &[&[f64]],
    classes: &[usize],
    mut sample: Vec<usize>,
    depth: usize,
    hyper: &ForestHyper,
    rng: &mut DetRng,
    nodes: &mut Vec<ClassNode>,
) -> usize {
    let n = sample.len();
    let mut counts = [0.0; DWELL_CLASSES];
    for &i in &sample {
        counts[classes[i]] += 1.0;
    }
    let total = n as f64;
    let parent_gini = gini(&counts, total);

    let make_leaf = |nodes: &mut Vec<ClassNode>| {
        let mut frequencies = counts;
        for v in &mut frequencies {
            *v /= total;
        }
        nodes.push(ClassNode::Leaf { frequencies });
        nodes.len() - 1
    };

    if depth >= hyper.max_depth || n < 2 * hyper.min_leaf || parent_gini <= 1e-12 {
        return make_leaf(nodes);
    }

    let n_features = features[0].len();
    let candidates = rng.sample_distinct(n_features, hyper.features_per_split.min(n_features));

    let mut best: Option<BestSplit> = None;
    for &f in &candidates {
        sample.sort_by(|&a, &b| features[a][f].total_cmp(&features[b][f]).then(a.cmp(&b)));
        let mut left_counts = [0.0; DWELL_CLASSES];
        for split in 1..n {
            let prev = sample[split - 1];
            left_counts[classes[prev]] += 1.0;
            if features[prev][f] == features[sample[split]][f] {
                continue;
            }
            if split < hyper.min_leaf || n - split < hyper.min_leaf {
                continue;
            }
            let mut right_counts = [0.0; DWELL_CLASSES];
            for (rc, (tc, lc)) in right_counts.iter_mut().zip(counts.iter().zip(&left_counts)) {
                *rc = tc - lc;
            }
            let nl = split as f64;
            let nr = (n - split) as f64;
            let gain = parent_gini
                - (nl / total) * gini(&left_counts, nl)
                - (nr / total) * gini(&right_counts, nr);
            if best.as_ref().is_none_or(|b| gain > b.gain + 1e-12) {
                best = Some(BestSplit {
                    gain,
                    feature: f,
                    threshold: 0.5 * (features[prev][f] + features[sample[split]][f]),
                });
            }
        }
    }

    let Some(best) = best else {
        return make_leaf(nodes);
    };
    if best.gain <= 1e-12 {
        return make_leaf(nodes);
    }

    let (left_sample, right_sample): (Vec<usize>, Vec<usize>) = sample
        .iter()
        .partition(|&&i| features[i][best.feature] <= best.threshold);

    let here = nodes.len();
    nodes.push(ClassNode::Leaf {
        frequencies: [0.0; DWELL_CLASSES],
    });
    let left = build_classification(features, classes, left_sample, depth + 1, hyper, rng, nodes);
    let right = build_classification(features, classes, right_sample, depth + 1, hyper, rng, nodes);
    nodes[here] = ClassNode::Split {
        feature: best.feature,
        threshold: best.threshold,
        left,
        right,
    };
    here
}
