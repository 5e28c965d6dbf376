//! Run configuration: defaults, a flat `key = value` file, then flags.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{default_sweep_dims, parse_dims, EvalConfig, DEFAULT_FOLDS};
use crate::pipeline::PipelineConfig;
use crate::signal::{DirectionId, Session};
use crate::simulator::SimConfig;
use crate::svm::KernelKind;

/// Environment variable consulted when no seed is given.
pub const SEED_ENV: &str = "AIC_SEED";

/// Keys accepted in a config file.
pub const CONFIG_KEYS: [&str; 20] = [
    "seed",
    "snr_db",
    "replications",
    "m_am",
    "m_pm",
    "l1_min",
    "l1_max",
    "th_max",
    "alpha_fraction",
    "jitter",
    "pca_dim",
    "rounds",
    "gamma",
    "kernel",
    "degree",
    "gamma_rbf",
    "folds",
    "session",
    "direction",
    "dims",
];

/// Every setting of a run, fully resolved before it starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Master seed, shared by the simulator and the fold split.
    pub seed: u64,
    pub sim: SimConfig,
    pub pipeline: PipelineConfig,
    pub folds: usize,
    pub session: Option<Session>,
    pub direction: Option<DirectionId>,
    pub dims: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        RunConfig {
            seed: sim.seed,
            sim,
            pipeline: PipelineConfig::default(),
            folds: DEFAULT_FOLDS,
            session: None,
            direction: None,
            dims: default_sweep_dims(),
        }
    }
}

fn bad(key: &str, value: &toml::Value) -> Error {
    Error::Precondition(format!("config key `{key}` has invalid value {value}"))
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(key, v)),
    }
}

fn as_usize(key: &str, v: &toml::Value) -> Result<usize> {
    v.as_integer()
        .and_then(|i| usize::try_from(i).ok())
        .ok_or_else(|| bad(key, v))
}

fn as_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| bad(key, v))
}

pub fn parse_kernel_kind(s: &str) -> Result<KernelKind> {
    match s.trim().to_ascii_lowercase().as_str() {
        "linear" => Ok(KernelKind::Linear),
        "poly" | "polynomial" => Ok(KernelKind::Polynomial),
        "rbf" => Ok(KernelKind::Rbf),
        other => Err(Error::Domain(format!("unknown kernel `{other}`"))),
    }
}

impl RunConfig {
    /// Defaults with the seed taken from [`SEED_ENV`] when set.
    pub fn from_env() -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Ok(v) = std::env::var(SEED_ENV) {
            let seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Precondition(format!("{SEED_ENV} must be an integer, got `{v}`")))?;
            cfg.set_seed(seed);
        }
        Ok(cfg)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.sim.seed = seed;
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            folds: self.folds,
            fold_seed: self.seed,
            pipeline: self.pipeline.clone(),
        }
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_str(&text)
    }

    /// Applies `key = value` lines; `snr_db = "none"` disables noise.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Precondition(format!("invalid config file: {e}")))?;
        for (key, v) in &table {
            let k = key.as_str();
            match k {
                "seed" => {
                    let seed = v
                        .as_integer()
                        .and_then(|i| u64::try_from(i).ok())
                        .ok_or_else(|| bad(k, v))?;
                    self.set_seed(seed);
                }
                "snr_db" => {
                    self.sim.snr_db = match v {
                        toml::Value::String(s) if s.eq_ignore_ascii_case("none") => None,
                        _ => Some(as_f64(k, v)?),
                    }
                }
                "replications" => self.sim.replications = as_usize(k, v)?,
                "m_am" => self.sim.m_am = as_usize(k, v)?,
                "m_pm" => self.sim.m_pm = as_usize(k, v)?,
                "l1_min" => self.sim.l1_min = as_usize(k, v)?,
                "l1_max" => self.sim.l1_max = as_usize(k, v)?,
                "th_max" => self.sim.th_max = as_f64(k, v)?,
                "alpha_fraction" => self.sim.alpha_fraction = as_f64(k, v)?,
                "jitter" => self.sim.base.jitter = as_f64(k, v)?,
                "pca_dim" => self.pipeline.pca_dim = Some(as_usize(k, v)?),
                "rounds" => self.pipeline.rounds = as_usize(k, v)?,
                "gamma" => self.pipeline.gamma = as_f64(k, v)?,
                "kernel" => self.pipeline.kernel.kind = parse_kernel_kind(as_str(k, v)?)?,
                "degree" => {
                    self.pipeline.kernel.degree = u32::try_from(as_usize(k, v)?).map_err(|_| bad(k, v))?
                }
                "gamma_rbf" => self.pipeline.kernel.gamma_rbf = Some(as_f64(k, v)?),
                "folds" => self.folds = as_usize(k, v)?,
                "session" => self.session = Some(as_str(k, v)?.parse()?),
                "direction" => self.direction = Some(as_str(k, v)?.parse()?),
                "dims" => self.dims = parse_dims(as_str(k, v)?)?,
                _ => {
                    return Err(Error::Precondition(format!(
                        "unknown config key `{key}` (known: {})",
                        CONFIG_KEYS.join(", ")
                    )))
                }
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.pipeline.pca_dim == Some(0) {
            return Err(Error::Precondition("pca_dim must be >= 1".into()));
        }
        if self.pipeline.rounds == 0 {
            return Err(Error::Precondition("rounds must be >= 1".into()));
        }
        if !(self.pipeline.gamma > 0.0 && self.pipeline.gamma.is_finite()) {
            return Err(Error::Precondition(format!(
                "gamma must be positive, got {}",
                self.pipeline.gamma
            )));
        }
        if self.folds < 2 {
            return Err(Error::Precondition(format!("folds must be >= 2, got {}", self.folds)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_override_defaults() {
        let mut cfg = RunConfig::default();
        cfg.apply_str(
            "seed = 7\nsnr_db = \"none\"\nreplications = 3\nkernel = \"rbf\"\npca_dim = 12\nsession = \"am\"\ndirection = \"EDD-N-left\"\ndims = \"5:15:5\"\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.sim.seed, 7);
        assert_eq!(cfg.sim.snr_db, None);
        assert_eq!(cfg.sim.replications, 3);
        assert_eq!(cfg.pipeline.kernel.kind, KernelKind::Rbf);
        assert_eq!(cfg.pipeline.pca_dim, Some(12));
        assert_eq!(cfg.session, Some(Session::AM));
        assert_eq!(cfg.direction.unwrap().to_string(), "EDD-N-left");
        assert_eq!(cfg.dims, vec![5, 10, 15]);
        assert_eq!(cfg.eval_config().fold_seed, 7);
    }

    #[test]
    fn invalid_files_are_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.apply_str("colour = 3").is_err());
        assert!(cfg.apply_str("folds = 1").is_err());
        assert!(cfg.apply_str("gamma = \"big\"").is_err());
        assert!(cfg.apply_str("not toml at all").is_err());
    }
}
