#![allow(dead_code)]

use std::path::PathBuf;

use aic_core::svm::Kernel;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
pub struct ReferenceInstance {
    pub kernel: Kernel,
    pub gamma: f64,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
    pub points: Vec<Vec<f64>>,
    /// `kernel_part[p][m] = Σ_n c_{n,m} k(x_n, points[p])`.
    pub kernel_part: Vec<Vec<f64>>,
    pub objective: f64,
    /// Present for two-class instances; sums to zero.
    pub biases: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
pub struct ReferenceFixture {
    pub two_class: Vec<ReferenceInstance>,
    pub three_class: Vec<ReferenceInstance>,
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn reference_fixture() -> ReferenceFixture {
    let text = std::fs::read_to_string(fixture_path("svm_reference.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Exhaustive stump search: every feature and every split `v_f > t` with `t`
/// below all values or equal to a data value. Side means are summed in index
/// order. Returns `(loss, predictions on the training points)`.
pub fn brute_force_stump(features: &[Vec<f64>], labels: &[f64], weights: &[f64]) -> (f64, Vec<f64>) {
    let n = features.len();
    let k = features[0].len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for f in 0..k {
        let mut cuts: Vec<f64> = features.iter().map(|r| r[f]).collect();
        cuts.push(f64::NEG_INFINITY);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for &t in &cuts {
            let (mut wl, mut wyl, mut wh, mut wyh) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..n {
                if features[i][f] > t {
                    wh += weights[i];
                    wyh += weights[i] * labels[i];
                } else {
                    wl += weights[i];
                    wyl += weights[i] * labels[i];
                }
            }
            let ml = if wl > 0.0 { Some(wyl / wl) } else { None };
            let mh = if wh > 0.0 { Some(wyh / wh) } else { None };
            let (ml, mh) = (ml.or(mh).unwrap_or(0.0), mh.or(ml).unwrap_or(0.0));
            let (a, b) = (mh - ml, ml);
            let pred: Vec<f64> = (0..n)
                .map(|i| if features[i][f] > t { a + b } else { b })
                .collect();
            let loss: f64 = (0..n)
                .map(|i| weights[i] * (labels[i] - pred[i]).powi(2))
                .sum();
            if best.as_ref().is_none_or(|(l, _)| loss < *l - 1e-12) {
                best = Some((loss, pred));
            }
        }
    }
    best.unwrap()
}

/// `f(n)` as the mean of the available values among `x(n..n+3)`.
pub fn naive_moving_mean(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for n in 0..x.len() {
        let mut sum = 0.0;
        let mut count = 0.0;
        for m in n..n + 4 {
            if m < x.len() {
                sum += x[m];
                count += 1.0;
            }
        }
        out.push(sum / count);
    }
    out
}

/// Random stump-fitting instance: up to 12 points, up to 4 features, labels
/// in {-1, +1} and normalized random weights. Half the instances use small
/// integer features so that ties occur.
pub fn random_stump_instance(rng: &mut aic_core::rng::Rng) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    use rand::Rng as _;
    let n = rng.random_range(2..=12);
    let k = rng.random_range(1..=4);
    let discrete = rng.random_bool(0.5);
    let features = (0..n)
        .map(|_| {
            (0..k)
                .map(|_| {
                    if discrete {
                        rng.random_range(0..4) as f64
                    } else {
                        rng.random_range(-10.0..10.0)
                    }
                })
                .collect()
        })
        .collect();
    let labels = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let mut weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= s);
    (features, labels, weights)
}
