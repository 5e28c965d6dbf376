//! Stratified k-fold evaluation, confusion matrices and the PCA-dimension sweep.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{classify, train_on_signals, AbSvmModel, PipelineConfig};
use crate::rng::{derive_seed, seeded};
use crate::signal::{Category, DirectionId, LabeledSignal, Session, StSignal};
use crate::simulator::LabeledDataset;

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_FOLD_SEED: u64 = 2016;

/// Default sweep grid: 5, 10, ..., 85.
pub fn default_sweep_dims() -> Vec<usize> {
    (1..=17).map(|i| 5 * i).collect()
}

/// Clips every dimension to `max_dim`, keeping the grid length.
pub fn clip_dims(dims: &[usize], max_dim: usize) -> Vec<usize> {
    dims.iter().map(|&d| d.min(max_dim)).collect()
}

/// Parses `start:stop:step` (inclusive stop) or a comma-separated list.
pub fn parse_dims(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::Precondition(format!("invalid dimension list '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    let dims: Vec<usize> = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (usize, usize, usize) = (
                start.trim().parse().map_err(|_| bad())?,
                stop.trim().parse().map_err(|_| bad())?,
                step.trim().parse().map_err(|_| bad())?,
            );
            if step == 0 || start > stop {
                return Err(bad());
            }
            (start..=stop).step_by(step).collect()
        }
        [list] => list
            .split(',')
            .map(|d| d.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?,
        _ => return Err(bad()),
    };
    if dims.is_empty() || dims.contains(&0) {
        return Err(bad());
    }
    Ok(dims)
}

/// Splits `categories.len()` items into `k` stratified test folds of sorted
/// indices.
pub fn kfold_split_categories(categories: &[Category], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Precondition(format!("fold count must be >= 2, got {k}")));
    }
    if k > categories.len() {
        return Err(Error::Precondition(format!(
            "fold count {k} exceeds dataset size {}",
            categories.len()
        )));
    }
    let mut rng = seeded(derive_seed(seed, &[0xF01D]));
    let mut order = Vec::with_capacity(categories.len());
    for c in [Category::Inlier, Category::AbruptLow, Category::RepeatedJam] {
        let mut idx: Vec<usize> = (0..categories.len()).filter(|&i| categories[i] == c).collect();
        idx.shuffle(&mut rng);
        order.extend(idx);
    }
    let mut folds = vec![Vec::new(); k];
    for (pos, i) in order.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

pub fn kfold_split(dataset: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let cats: Vec<Category> = dataset.signals.iter().map(|s| s.category).collect();
    kfold_split_categories(&cats, k, seed)
}

pub trait Classifier: Send + Sync {
    fn classify(&self, signal: &StSignal) -> Result<Category>;
}

pub trait Trainer: Sync {
    type Model: Classifier;
    fn train(&self, signals: &[LabeledSignal], session: Session) -> Result<Self::Model>;
}

impl Classifier for AbSvmModel {
    fn classify(&self, signal: &StSignal) -> Result<Category> {
        classify(self, signal)
    }
}

/// Trains the AB-SVM pipeline.
#[derive(Debug, Clone, Default)]
pub struct AbSvmTrainer {
    pub config: PipelineConfig,
}

impl Trainer for AbSvmTrainer {
    type Model = AbSvmModel;
    fn train(&self, signals: &[LabeledSignal], session: Session) -> Result<AbSvmModel> {
        train_on_signals(signals, session, &self.config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub folds: usize,
    pub fold_seed: u64,
    pub pipeline: PipelineConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: DEFAULT_FOLDS,
            fold_seed: DEFAULT_FOLD_SEED,
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub direction: DirectionId,
    pub session: Session,
    /// Percent correct on each test fold.
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// `confusion_counts[true][predicted]`, summed over folds.
    pub confusion_counts: [[usize; 3]; 3],
    /// Row-normalized percentages; rows without samples are zero.
    pub confusion: [[f64; 3]; 3],
    pub seconds: f64,
    pub config: EvalConfig,
}

fn row_percentages(counts: &[[usize; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for (row, c) in out.iter_mut().zip(counts) {
        let total: usize = c.iter().sum();
        if total > 0 {
            for (o, v) in row.iter_mut().zip(c) {
                *o = 100.0 * *v as f64 / total as f64;
            }
        }
    }
    out
}

/// Cross-validates `trainer` on `dataset` with stratified folds.
pub fn evaluate_with<T: Trainer>(
    dataset: &LabeledDataset,
    trainer: &T,
    config: &EvalConfig,
) -> Result<EvalReport> {
    let start = Instant::now();
    let folds = kfold_split(dataset, config.folds, config.fold_seed)?;
    let per_fold: Vec<Result<(f64, [[usize; 3]; 3])>> = folds
        .par_iter()
        .map(|test| {
            let mut in_test = vec![false; dataset.len()];
            test.iter().for_each(|&i| in_test[i] = true);
            let train: Vec<LabeledSignal> = dataset
                .signals
                .iter()
                .zip(&in_test)
                .filter(|(_, t)| !**t)
                .map(|(s, _)| s.clone())
                .collect();
            let model = trainer.train(&train, dataset.session)?;
            let mut counts = [[0usize; 3]; 3];
            let mut correct = 0usize;
            for &i in test {
                let s = &dataset.signals[i];
                let predicted = model.classify(&s.signal)?;
                counts[s.category.index()][predicted.index()] += 1;
                correct += usize::from(predicted == s.category);
            }
            Ok((100.0 * correct as f64 / test.len() as f64, counts))
        })
        .collect();

    let mut fold_accuracy = Vec::with_capacity(folds.len());
    let mut confusion_counts = [[0usize; 3]; 3];
    for r in per_fold {
        let (acc, counts) = r?;
        fold_accuracy.push(acc);
        for (row, c) in confusion_counts.iter_mut().zip(counts) {
            for (v, x) in row.iter_mut().zip(c) {
                *v += x;
            }
        }
    }
    let mean_accuracy = fold_accuracy.iter().sum::<f64>() / fold_accuracy.len() as f64;
    Ok(EvalReport {
        direction: dataset.direction,
        session: dataset.session,
        fold_accuracy,
        mean_accuracy,
        confusion: row_percentages(&confusion_counts),
        confusion_counts,
        seconds: start.elapsed().as_secs_f64(),
        config: config.clone(),
    })
}

/// Cross-validates the AB-SVM pipeline.
pub fn evaluate(dataset: &LabeledDataset, config: &EvalConfig) -> Result<EvalReport> {
    let trainer = AbSvmTrainer {
        config: config.pipeline.clone(),
    };
    evaluate_with(dataset, &trainer, config)
}

/// Per-direction reports of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session: Session,
    pub directions: Vec<EvalReport>,
    pub seconds: f64,
}

impl SessionReport {
    /// Mean of the per-direction mean accuracies.
    pub fn grand_average(&self) -> f64 {
        self.directions.iter().map(|r| r.mean_accuracy).sum::<f64>() / self.directions.len() as f64
    }

    pub fn confusion_counts(&self) -> [[usize; 3]; 3] {
        let mut total = [[0usize; 3]; 3];
        for r in &self.directions {
            for (row, c) in total.iter_mut().zip(&r.confusion_counts) {
                for (v, x) in row.iter_mut().zip(c) {
                    *v += x;
                }
            }
        }
        total
    }

    /// Pooled row-normalized confusion over all directions.
    pub fn confusion(&self) -> [[f64; 3]; 3] {
        row_percentages(&self.confusion_counts())
    }
}

/// Evaluates every dataset of one session, in the given order.
pub fn evaluate_session(datasets: &[LabeledDataset], config: &EvalConfig) -> Result<SessionReport> {
    let session = session_of(datasets)?;
    let start = Instant::now();
    let directions = datasets
        .par_iter()
        .map(|d| evaluate(d, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(SessionReport {
        session,
        directions,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn session_of(datasets: &[LabeledDataset]) -> Result<Session> {
    let first = datasets
        .first()
        .ok_or_else(|| Error::Precondition("no datasets to evaluate".into()))?;
    if let Some(d) = datasets.iter().find(|d| d.session != first.session) {
        return Err(Error::Precondition(format!(
            "datasets mix sessions {} and {}",
            first.session, d.session
        )));
    }
    Ok(first.session)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub dim: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub session: Session,
    pub points: Vec<SweepPoint>,
    /// Dimension with the highest accuracy; ties go to the earliest point.
    pub best_dim: usize,
}

/// Mean accuracy for each PCA dimension on the same folds.
pub fn sweep_pca_dims(dataset: &LabeledDataset, dims: &[usize], config: &EvalConfig) -> Result<SweepCurve> {
    sweep_session(std::slice::from_ref(dataset), dims, config)
}

/// Sweep where each point is the grand average over all datasets of a session.
pub fn sweep_session(datasets: &[LabeledDataset], dims: &[usize], config: &EvalConfig) -> Result<SweepCurve> {
    let session = session_of(datasets)?;
    if dims.is_empty() {
        return Err(Error::Precondition("sweep needs at least one dimension".into()));
    }
    let points = dims
        .par_iter()
        .map(|&dim| {
            let cfg = EvalConfig {
                pipeline: PipelineConfig {
                    pca_dim: Some(dim),
                    ..config.pipeline.clone()
                },
                ..config.clone()
            };
            let accuracy = evaluate_session(datasets, &cfg)?.grand_average();
            Ok(SweepPoint { dim, accuracy })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepCurve {
        session,
        best_dim: best_point(&points).dim,
        points,
    })
}

fn best_point(points: &[SweepPoint]) -> &SweepPoint {
    let mut best = &points[0];
    for p in &points[1..] {
        if p.accuracy > best.accuracy {
            best = p;
        }
    }
    best
}
