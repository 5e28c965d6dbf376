//! Gentle AdaBoost with regression stumps for the inlier/outlier gate.
//!
//! Each class keeps its own additive model `H(v, c) = Σ_t h_t(v)` trained on
//! one-vs-rest labels in {-1, +1}; prediction takes the class with the larger
//! score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel thresholds below / above every finite feature value.
pub const BELOW_ALL: f64 = f64::MIN;
pub const ABOVE_ALL: f64 = f64::MAX;

/// Relative slack under which two stump losses count as tied.
const TIE_EPS: f64 = 1e-12;

/// Weak learner `h(v) = a·[v[feature] > threshold] + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub a: f64,
    pub b: f64,
}

impl Stump {
    #[inline]
    pub fn eval(&self, v: &[f64]) -> f64 {
        if v[self.feature] > self.threshold {
            self.a + self.b
        } else {
            self.b
        }
    }
}

/// Weighted squared loss `Σ w_i (y_i - h(v_i))²`.
pub fn stump_loss(stump: &Stump, features: &[Vec<f64>], labels: &[f64], weights: &[f64]) -> f64 {
    features
        .iter()
        .zip(labels)
        .zip(weights)
        .map(|((v, y), w)| {
            let r = y - stump.eval(v);
            w * r * r
        })
        .sum()
}

/// Closed-form `(a, b)` for a split: `b` is the weighted label mean at or below
/// the threshold and `a + b` the mean above. An empty (or zero-weight) side
/// takes the other side's mean.
pub fn split_outputs(low: (f64, f64), high: (f64, f64)) -> (f64, f64) {
    let (w_low, wy_low) = low;
    let (w_high, wy_high) = high;
    let mean_low = (w_low > 0.0).then(|| wy_low / w_low);
    let mean_high = (w_high > 0.0).then(|| wy_high / w_high);
    let (m_low, m_high) = match (mean_low, mean_high) {
        (Some(l), Some(h)) => (l, h),
        (Some(l), None) => (l, l),
        (None, Some(h)) => (h, h),
        (None, None) => (0.0, 0.0),
    };
    (m_high - m_low, m_low)
}

fn check_inputs(features: &[Vec<f64>], n_labels: usize, weights: Option<&[f64]>) -> Result<usize> {
    let n = features.len();
    if n == 0 {
        return Err(Error::Precondition("no training examples".into()));
    }
    if n_labels != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: n_labels,
        });
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: w.len(),
            });
        }
        if w.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Precondition("weights must be finite and non-negative".into()));
        }
    }
    let k = features[0].len();
    if k == 0 {
        return Err(Error::Precondition("at least one feature column is required".into()));
    }
    if let Some(row) = features.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: row.len(),
        });
    }
    Ok(k)
}

/// Best stump under the weighted squared loss.
///
/// Candidate thresholds per feature are the below-all sentinel, the midpoints
/// between consecutive distinct values and the above-all sentinel. Ties go to
/// the smaller feature index, then the smaller threshold. Returns the stump and
/// its loss.
pub fn fit_stump(features: &[Vec<f64>], labels: &[f64], weights: &[f64]) -> Result<(Stump, f64)> {
    let k = check_inputs(features, labels.len(), Some(weights))?;
    let total_w: f64 = weights.iter().sum();
    if !(total_w > 0.0) {
        return Err(Error::Degenerate("all example weights are zero".into()));
    }
    let total_wy: f64 = weights.iter().zip(labels).map(|(w, y)| w * y).sum();
    let total_wyy: f64 = weights.iter().zip(labels).map(|(w, y)| w * y * y).sum();
    let n = features.len();

    // Loss of a split from sufficient statistics:
    // Σ w y² - (Σ_low w y)² / W_low - (Σ_high w y)² / W_high.
    let split_loss = |w_low: f64, wy_low: f64| {
        let w_high = total_w - w_low;
        let wy_high = total_wy - wy_low;
        let mut explained = 0.0;
        if w_low > 0.0 {
            explained += wy_low * wy_low / w_low;
        }
        if w_high > 0.0 {
            explained += wy_high * wy_high / w_high;
        }
        total_wyy - explained
    };

    let mut best: Option<(f64, usize, f64)> = None; // loss, f, θ
    let mut consider = |loss: f64, f: usize, theta: f64| {
        let better = match best {
            None => true,
            Some((b, ..)) => loss < b - TIE_EPS * total_wyy.max(1e-300),
        };
        if better {
            best = Some((loss, f, theta));
        }
    };

    let mut order: Vec<usize> = (0..n).collect();
    for f in 0..k {
        order.sort_by(|&a, &b| features[a][f].total_cmp(&features[b][f]));
        consider(split_loss(0.0, 0.0), f, BELOW_ALL);
        let mut w_low = 0.0;
        let mut wy_low = 0.0;
        for pos in 0..n {
            let i = order[pos];
            w_low += weights[i];
            wy_low += weights[i] * labels[i];
            if pos + 1 < n {
                let here = features[i][f];
                let next = features[order[pos + 1]][f];
                if next > here {
                    let theta = here + (next - here) / 2.0;
                    consider(split_loss(w_low, wy_low), f, theta);
                }
            }
        }
        consider(split_loss(total_w, total_wy), f, ABOVE_ALL);
    }

    let (_, feature, threshold) = best.expect("at least one candidate");
    // Side sums recomputed in index order.
    let (mut low, mut high) = ((0.0, 0.0), (0.0, 0.0));
    for ((v, y), w) in features.iter().zip(labels).zip(weights) {
        let side = if v[feature] > threshold { &mut high } else { &mut low };
        side.0 += w;
        side.1 += w * y;
    }
    let (a, b) = split_outputs(low, high);
    let stump = Stump {
        feature,
        threshold,
        a,
        b,
    };
    let loss = stump_loss(&stump, features, labels, weights);
    Ok((stump, loss))
}

/// Binary gate labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateClass {
    Inlier = 0,
    Outlier = 1,
}

/// Per-class stump sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub n_features: usize,
    pub rounds: usize,
    pub inlier: Vec<Stump>,
    pub outlier: Vec<Stump>,
}

/// Per-round diagnostics of one class's training run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoostTrace {
    /// Sum of the weights after each update and before normalization.
    pub weight_sums: Vec<f64>,
    /// Training exponential loss `Σ_i w_1,i exp(-y_i H_t(v_i))` after each round.
    pub exp_loss: Vec<f64>,
    /// Stump loss of each round.
    pub stump_loss: Vec<f64>,
}

/// Weights carried between boosting rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostTrainState {
    pub weights: Vec<f64>,
    pub round: usize,
}

impl BoostTrainState {
    /// Initial weights `1 / (2 N_c)` for each of the two groups.
    pub fn new(labels: &[f64]) -> Self {
        let n_pos = labels.iter().filter(|&&y| y > 0.0).count();
        let n_neg = labels.len() - n_pos;
        let weights = labels
            .iter()
            .map(|&y| {
                if y > 0.0 {
                    1.0 / (2.0 * n_pos as f64)
                } else {
                    1.0 / (2.0 * n_neg as f64)
                }
            })
            .collect();
        BoostTrainState { weights, round: 0 }
    }

    pub fn normalize(&mut self) {
        let sum: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= sum);
    }

    /// Multiplies each weight by `exp(-y_i h(v_i))`; returns the new sum.
    pub fn reweight(&mut self, stump: &Stump, features: &[Vec<f64>], labels: &[f64]) -> f64 {
        for ((w, v), y) in self.weights.iter_mut().zip(features).zip(labels) {
            *w *= (-y * stump.eval(v)).exp();
        }
        self.round += 1;
        self.weights.iter().sum()
    }
}

fn boost_class(
    features: &[Vec<f64>],
    labels: &[f64],
    rounds: usize,
) -> Result<(Vec<Stump>, BoostTrace)> {
    let mut state = BoostTrainState::new(labels);
    let initial = state.weights.clone();
    let mut scores = vec![0.0; labels.len()];
    let mut stumps = Vec::with_capacity(rounds);
    let mut trace = BoostTrace::default();
    for _ in 0..rounds {
        state.normalize();
        let (stump, loss) = fit_stump(features, labels, &state.weights)?;
        trace.weight_sums.push(state.reweight(&stump, features, labels));
        for (s, v) in scores.iter_mut().zip(features) {
            *s += stump.eval(v);
        }
        trace.stump_loss.push(loss);
        trace.exp_loss.push(
            initial
                .iter()
                .zip(labels)
                .zip(&scores)
                .map(|((w, y), s)| w * (-y * s).exp())
                .sum(),
        );
        stumps.push(stump);
    }
    Ok((stumps, trace))
}

/// Trains both class models; `is_outlier[i]` is the gate label of row `i`.
pub fn train_adaboost(
    features: &[Vec<f64>],
    is_outlier: &[bool],
    rounds: usize,
) -> Result<AdaBoostModel> {
    train_adaboost_traced(features, is_outlier, rounds).map(|(m, _)| m)
}

/// As [`train_adaboost`], also returning the inlier- and outlier-class traces.
pub fn train_adaboost_traced(
    features: &[Vec<f64>],
    is_outlier: &[bool],
    rounds: usize,
) -> Result<(AdaBoostModel, [BoostTrace; 2])> {
    let k = check_inputs(features, is_outlier.len(), None)?;
    if rounds == 0 {
        return Err(Error::Precondition("boosting needs at least one round".into()));
    }
    let n_out = is_outlier.iter().filter(|&&o| o).count();
    if n_out == 0 || n_out == is_outlier.len() {
        return Err(Error::Precondition(
            "boosting needs both inliers and outliers in the training set".into(),
        ));
    }
    let signed = |positive_outlier: bool| -> Vec<f64> {
        is_outlier
            .iter()
            .map(|&o| if o == positive_outlier { 1.0 } else { -1.0 })
            .collect()
    };
    let (inlier, inlier_trace) = boost_class(features, &signed(false), rounds)?;
    let (outlier, outlier_trace) = boost_class(features, &signed(true), rounds)?;
    Ok((
        AdaBoostModel {
            n_features: k,
            rounds,
            inlier,
            outlier,
        },
        [inlier_trace, outlier_trace],
    ))
}

impl AdaBoostModel {
    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// `[H(v, inlier), H(v, outlier)]`.
    pub fn score(&self, v: &[f64]) -> Result<[f64; 2]> {
        self.check_dim(v)?;
        let sum = |stumps: &[Stump]| stumps.iter().map(|s| s.eval(v)).sum::<f64>();
        Ok([sum(&self.inlier), sum(&self.outlier)])
    }

    /// Class with the larger score; ties go to the inlier class.
    pub fn predict(&self, v: &[f64]) -> Result<GateClass> {
        let [inlier, outlier] = self.score(v)?;
        Ok(if outlier > inlier {
            GateClass::Outlier
        } else {
            GateClass::Inlier
        })
    }
}
