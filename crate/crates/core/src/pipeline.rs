//! The hybrid AB-SVM model: moving mean and PCA, an AdaBoost inlier/outlier
//! gate, then an SVM that names the outlier category.

use std::cell::Cell;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaboost::{train_adaboost, AdaBoostModel, GateClass};
use crate::error::{Error, Result};
use crate::features::{extract_features, PcaModel};
use crate::signal::{Category, LabeledSignal, Session, StSignal};
use crate::simulator::LabeledDataset;
use crate::svm::{train_multiclass_svm, KernelSpec, SvmModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub const DEFAULT_ROUNDS: usize = 50;
pub const DEFAULT_GAMMA: f64 = 1.0;

/// Default PCA dimension of a session.
pub fn default_pca_dim(session: Session) -> usize {
    match session {
        Session::AM => 25,
        Session::PM => 40,
    }
}

/// Training hyperparameters; a `pca_dim` of `None` takes the session default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub pca_dim: Option<usize>,
    pub rounds: usize,
    pub gamma: f64,
    pub kernel: KernelSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            pca_dim: None,
            rounds: DEFAULT_ROUNDS,
            gamma: DEFAULT_GAMMA,
            kernel: KernelSpec::linear(),
        }
    }
}

impl PipelineConfig {
    pub fn resolved_pca_dim(&self, session: Session) -> usize {
        self.pca_dim.unwrap_or_else(|| default_pca_dim(session))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbSvmModel {
    pub version: u32,
    pub session: Session,
    pub pca: PcaModel,
    pub adaboost: AdaBoostModel,
    pub svm: SvmModel,
    /// Training configuration with the PCA dimension resolved.
    pub config: PipelineConfig,
}

/// Outcome of [`classify_detailed`], with the raw stage scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub category: Category,
    /// Gate scores `[inlier, outlier]`.
    pub gate_scores: [f64; 2],
    /// SVM decision values for categories 2 and 3; absent for inliers.
    pub svm_scores: Option<Vec<f64>>,
}

thread_local! {
    static SVM_CALLS: Cell<usize> = const { Cell::new(0) };
}

/// Number of SVM-stage evaluations made by `classify` on the current thread.
pub fn svm_call_count() -> usize {
    SVM_CALLS.with(Cell::get)
}

pub fn train_ab_svm(train: &LabeledDataset, config: &PipelineConfig) -> Result<AbSvmModel> {
    train_on_signals(&train.signals, train.session, config)
}

/// Trains on signals of one session.
pub fn train_on_signals(
    signals: &[LabeledSignal],
    session: Session,
    config: &PipelineConfig,
) -> Result<AbSvmModel> {
    let mut counts = [0usize; 3];
    for s in signals {
        counts[s.category.index()] += 1;
    }
    for c in [Category::Inlier, Category::AbruptLow, Category::RepeatedJam] {
        if counts[c.index()] == 0 {
            return Err(Error::MissingCategory(c.id()));
        }
    }
    if !(config.gamma > 0.0 && config.gamma.is_finite()) {
        return Err(Error::Precondition(format!(
            "SVM penalty must be positive, got {}",
            config.gamma
        )));
    }
    let k = config.resolved_pca_dim(session);

    let raw = signals
        .iter()
        .map(|s| extract_features(&s.signal).map(|f| f.0))
        .collect::<Result<Vec<_>>>()?;
    let pca = PcaModel::fit(&raw, k)?;
    let reduced = raw
        .iter()
        .map(|f| pca.transform(f))
        .collect::<Result<Vec<_>>>()?;

    let is_outlier: Vec<bool> = signals.iter().map(|s| s.category.is_outlier()).collect();
    let adaboost = train_adaboost(&reduced, &is_outlier, config.rounds)?;

    let (out_features, out_labels): (Vec<Vec<f64>>, Vec<u32>) = reduced
        .iter()
        .zip(signals)
        .filter(|(_, s)| s.category.is_outlier())
        .map(|(f, s)| (f.clone(), u32::from(s.category.id())))
        .unzip();
    let svm = train_multiclass_svm(&out_features, &out_labels, config.gamma, &config.kernel)?;

    Ok(AbSvmModel {
        version: MODEL_FORMAT_VERSION,
        session,
        pca,
        adaboost,
        svm,
        config: PipelineConfig {
            pca_dim: Some(k),
            ..config.clone()
        },
    })
}

pub fn classify(model: &AbSvmModel, raw: &StSignal) -> Result<Category> {
    classify_detailed(model, raw).map(|c| c.category)
}

pub fn classify_detailed(model: &AbSvmModel, raw: &StSignal) -> Result<Classification> {
    let features = extract_features(raw)?;
    let reduced = model.pca.transform(&features.0)?;
    let gate_scores = model.adaboost.score(&reduced)?;
    if model.adaboost.predict(&reduced)? == GateClass::Inlier {
        return Ok(Classification {
            category: Category::Inlier,
            gate_scores,
            svm_scores: None,
        });
    }
    SVM_CALLS.with(|c| c.set(c.get() + 1));
    let scores = model.svm.decision_values(&reduced)?;
    let label = model.svm.predict(&reduced)?;
    let category = u8::try_from(label)
        .ok()
        .and_then(|l| Category::try_from(l).ok())
        .filter(|c| c.is_outlier())
        .ok_or_else(|| Error::Format(format!("SVM stage predicts unknown category {label}")))?;
    Ok(Classification {
        category,
        gate_scores,
        svm_scores: Some(scores),
    })
}

impl AbSvmModel {
    fn check_consistency(&self) -> Result<()> {
        let k = self.pca.k;
        if self.adaboost.n_features != k || self.svm.n_features != k {
            return Err(Error::Format(format!(
                "stage dimensions disagree: pca {k}, gate {}, categorizer {}",
                self.adaboost.n_features, self.svm.n_features
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let found = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Format("model file has no version tag".into()))?;
        if found != u64::from(MODEL_FORMAT_VERSION) {
            return Err(Error::VersionMismatch {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                supported: MODEL_FORMAT_VERSION,
            });
        }
        let model: AbSvmModel =
            serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
        model.check_consistency()?;
        Ok(model)
    }
}

pub fn save_model(model: &AbSvmModel, path: &Path) -> Result<()> {
    let mut text = model.to_json()?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<AbSvmModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    AbSvmModel::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{generate_dataset, SimConfig};

    fn small_dataset() -> LabeledDataset {
        let cfg = SimConfig {
            replications: 4,
            ..SimConfig::default()
        };
        generate_dataset("Exit-S".parse().unwrap(), Session::PM, &cfg).unwrap()
    }

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            pca_dim: Some(10),
            rounds: 10,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn missing_category_is_named() {
        let ds = small_dataset();
        let only_inliers: Vec<_> = ds
            .signals
            .iter()
            .filter(|s| s.category == Category::Inlier)
            .cloned()
            .collect();
        let err = train_on_signals(&only_inliers, Session::PM, &small_config()).unwrap_err();
        assert!(matches!(err, Error::MissingCategory(2)));
        let no_jam: Vec<_> = ds
            .signals
            .iter()
            .filter(|s| s.category != Category::RepeatedJam)
            .cloned()
            .collect();
        let err = train_on_signals(&no_jam, Session::PM, &small_config()).unwrap_err();
        assert!(matches!(err, Error::MissingCategory(3)));
    }

    #[test]
    fn two_class_categorizer_and_deterministic_bytes() {
        let ds = small_dataset();
        let a = train_ab_svm(&ds, &small_config()).unwrap();
        let b = train_ab_svm(&ds, &small_config()).unwrap();
        assert_eq!(a.svm.classes, vec![2, 3]);
        assert_eq!(a.config.pca_dim, Some(10));
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn inliers_skip_the_svm_stage() {
        let ds = small_dataset();
        let model = train_ab_svm(&ds, &small_config()).unwrap();
        for s in &ds.signals {
            let before = svm_call_count();
            let out = classify_detailed(&model, &s.signal).unwrap();
            let calls = svm_call_count() - before;
            if out.category == Category::Inlier {
                assert_eq!(calls, 0);
                assert!(out.svm_scores.is_none());
            } else {
                assert_eq!(calls, 1);
            }
        }
    }

    #[test]
    fn version_and_truncation_errors() {
        let model = train_ab_svm(&small_dataset(), &small_config()).unwrap();
        let text = model.to_json().unwrap();
        assert_eq!(AbSvmModel::from_json(&text).unwrap(), model);
        assert!(matches!(
            AbSvmModel::from_json(&text[..text.len() / 2]),
            Err(Error::Format(_))
        ));
        let bumped = text.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(
            AbSvmModel::from_json(&bumped),
            Err(Error::VersionMismatch { found: 2, supported: 1 })
        ));
    }
}
