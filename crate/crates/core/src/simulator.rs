//! Synthetic traffic dataset generation.
//!
//! A dataset for one (direction, session) pair is built from 23 base signals:
//! abnormal days are replaced by neighbouring normal days, every day is
//! replicated with additive Gaussian noise at a fixed SNR, and a few noisy
//! replicas per replication are turned into outliers of the two incident
//! types.

use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, derive_seed, Rng};
use crate::signal::{
    compose_direction_signal, Category, DirectionId, LabeledSignal, MpVolumeRecord, Session,
    StSignal, CYCLES, DAYS, MOVEMENTS,
};

/// Tag embedded in every generated dataset.
pub const GENERATOR_VERSION: &str = "aic-sim/1";

/// Knobs of the synthetic base-day generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseProfile {
    /// Relative size of the day-to-day and cycle-to-cycle perturbation; 0 makes
    /// all 23 days identical.
    pub jitter: f64,
}

impl Default for BaseProfile {
    fn default() -> Self {
        BaseProfile { jitter: 0.04 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Target signal-to-noise ratio in dB; `None` disables noise.
    pub snr_db: Option<f64>,
    pub replications: usize,
    /// Outliers injected per replication in AM sessions.
    pub m_am: usize,
    /// Outliers injected per replication in PM sessions.
    pub m_pm: usize,
    /// Inclusive range of the low-volume run parameter.
    pub l1_min: usize,
    pub l1_max: usize,
    /// Abrupt-low level is drawn uniformly from the integers `0..=th_max`.
    pub th_max: f64,
    /// Repeated-jam depression as a fraction of the signal mean.
    pub alpha_fraction: f64,
    pub base: BaseProfile,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            snr_db: Some(20.0),
            replications: 14,
            m_am: 2,
            m_pm: 4,
            l1_min: 4,
            l1_max: 10,
            th_max: 2.0,
            alpha_fraction: 0.6,
            base: BaseProfile::default(),
            seed: 2016,
        }
    }
}

impl SimConfig {
    pub fn outliers_per_replication(&self, session: Session) -> usize {
        match session {
            Session::AM => self.m_am,
            Session::PM => self.m_pm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Precondition(m));
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return fail(format!("snr_db must be finite, got {snr}"));
            }
        }
        if self.m_am > DAYS || self.m_pm > DAYS {
            return fail(format!("outliers per replication must be <= {DAYS}"));
        }
        if self.l1_min < 4 {
            return fail(format!("l1_min must be >= 4, got {}", self.l1_min));
        }
        if self.l1_max < self.l1_min || self.l1_max >= CYCLES {
            return fail(format!(
                "l1 range [{}, {}] must be ordered and below {CYCLES}",
                self.l1_min, self.l1_max
            ));
        }
        if !(self.th_max >= 0.0 && self.th_max.is_finite()) {
            return fail(format!("th_max must be a non-negative number, got {}", self.th_max));
        }
        if !(self.alpha_fraction > 0.0 && self.alpha_fraction <= 1.0) {
            return fail(format!(
                "alpha_fraction must lie in (0, 1], got {}",
                self.alpha_fraction
            ));
        }
        if !(self.base.jitter >= 0.0 && self.base.jitter.is_finite()) {
            return fail(format!("base jitter must be non-negative, got {}", self.base.jitter));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator_version: String,
    pub config: SimConfig,
}

/// Labelled signals of a single direction and session.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub direction: DirectionId,
    pub session: Session,
    pub signals: Vec<LabeledSignal>,
    pub provenance: Option<Provenance>,
}

impl LabeledDataset {
    /// Wraps signals, checking they all belong to one direction and session.
    pub fn new(
        direction: DirectionId,
        session: Session,
        signals: Vec<LabeledSignal>,
        provenance: Option<Provenance>,
    ) -> Result<Self> {
        if let Some(s) = signals
            .iter()
            .find(|s| s.signal.direction != direction || s.signal.session != session)
        {
            return Err(Error::MalformedInput(format!(
                "dataset for {direction} {session} contains a {} {} signal",
                s.signal.direction, s.signal.session
            )));
        }
        Ok(LabeledDataset {
            direction,
            session,
            signals,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn category_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for s in &self.signals {
            counts[s.category.index()] += 1;
        }
        counts
    }
}

// Mean vehicles per cycle of each movement w_1..w_15.
const MOVEMENT_LEVEL: [f64; MOVEMENTS] = [
    6.0, 9.0, 4.5, 5.0, 7.0, 3.5, 8.0, 5.5, 6.5, 10.0, 4.0, 5.0, 9.5, 7.5, 6.0,
];

fn session_shape(session: Session, cycle: usize) -> f64 {
    let t = cycle as f64;
    match session {
        // Morning build-up to a plateau.
        Session::AM => 0.75 + 0.25 * (1.0 - (-t / 18.0).exp()),
        // Evening plateau followed by a slow decline.
        Session::PM => 1.0 - 0.2 / (1.0 + (-(t - 55.0) / 8.0).exp()),
    }
}

fn movement_profile(session: Session, movement: usize, cycle: usize) -> f64 {
    let session_scale = match session {
        Session::AM => 1.0,
        Session::PM => 0.85 + 0.05 * (movement % 7) as f64,
    };
    let phase = 0.7 * movement as f64;
    let wave = 1.0 + 0.05 * (std::f64::consts::TAU * cycle as f64 / 20.0 + phase).sin();
    MOVEMENT_LEVEL[movement] * session_scale * session_shape(session, cycle) * wave
}

/// Movement-volume records for all 23 days of a session, shared by every
/// direction of the junction.
fn generate_day_records(
    session: Session,
    seed: u64,
    profile: &BaseProfile,
) -> Vec<Vec<MpVolumeRecord>> {
    let mut rng = rng::seeded(derive_seed(seed, &[0xBA5E, session as u64]));
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (0..DAYS)
        .map(|_| {
            let day_factor: Vec<f64> = (0..MOVEMENTS)
                .map(|_| 1.0 + profile.jitter * normal.sample(&mut rng))
                .collect();
            (1..=CYCLES)
                .map(|n| {
                    let mut volumes = [0.0; MOVEMENTS];
                    for (i, v) in volumes.iter_mut().enumerate() {
                        let wobble = 1.0 + 0.5 * profile.jitter * normal.sample(&mut rng);
                        *v = (movement_profile(session, i, n) * day_factor[i] * wobble).max(0.0);
                    }
                    MpVolumeRecord {
                        cycle_index: n,
                        volumes,
                    }
                })
                .collect()
        })
        .collect()
}

/// 23 normal-pattern days for `direction` using the default base profile.
pub fn generate_base_signals(direction: DirectionId, session: Session, seed: u64) -> Vec<StSignal> {
    generate_base_signals_with(direction, session, seed, &BaseProfile::default())
}

pub fn generate_base_signals_with(
    direction: DirectionId,
    session: Session,
    seed: u64,
    profile: &BaseProfile,
) -> Vec<StSignal> {
    generate_day_records(session, seed, profile)
        .iter()
        .enumerate()
        .map(|(day, records)| {
            compose_direction_signal(records, direction, session, day as u32 + 1)
                .expect("generated records cover every cycle once")
        })
        .collect()
}

/// Replaces every abnormal day with the closest normal day (earlier day on ties).
pub fn sanitize_originals(signals: &[LabeledSignal]) -> Result<Vec<StSignal>> {
    let normal: Vec<&StSignal> = signals
        .iter()
        .filter(|s| s.category == Category::Inlier)
        .map(|s| &s.signal)
        .collect();
    if normal.is_empty() {
        return Err(Error::Unsatisfiable(
            "no normal signal to substitute abnormal days with".into(),
        ));
    }
    Ok(signals
        .iter()
        .map(|s| {
            if s.category == Category::Inlier {
                return s.signal.clone();
            }
            let day = i64::from(s.signal.day_index);
            let nearest = normal
                .iter()
                .min_by_key(|n| {
                    let d = i64::from(n.day_index);
                    ((d - day).abs(), d)
                })
                .expect("non-empty");
            StSignal {
                day_index: s.signal.day_index,
                ..(*nearest).clone()
            }
        })
        .collect())
}

/// Noise standard deviation giving `snr_db` for a signal of mean power `power`.
pub fn noise_sigma(power: f64, snr_db: f64) -> f64 {
    (power / 10f64.powf(snr_db / 10.0)).sqrt()
}

pub fn mean_power(cycles: &[f64]) -> f64 {
    cycles.iter().map(|v| v * v).sum::<f64>() / cycles.len() as f64
}

/// Adds white Gaussian noise at `snr_db` (`None` leaves the signal as is),
/// clipping at zero.
pub fn add_gaussian_noise(
    signal: &StSignal,
    snr_db: Option<f64>,
    rng: &mut Rng,
) -> Result<StSignal> {
    let Some(snr_db) = snr_db else {
        return Ok(signal.clone());
    };
    if !snr_db.is_finite() {
        return Err(Error::Precondition(format!("snr_db must be finite, got {snr_db}")));
    }
    let power = mean_power(&signal.cycles);
    if !(power > 0.0) {
        return Err(Error::Degenerate(format!(
            "{} {} day {} has zero power; SNR is undefined",
            signal.direction, signal.session, signal.day_index
        )));
    }
    let normal = Normal::new(0.0, noise_sigma(power, snr_db))
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    let cycles = signal
        .cycles
        .iter()
        .map(|&v| (v + normal.sample(rng)).max(0.0))
        .collect();
    Ok(StSignal {
        cycles,
        ..signal.clone()
    })
}

/// Sets cycles `n0..=n0 + l1` (1-based) to `th` and labels the result abrupt-low.
pub fn inject_abrupt_low(signal: &StSignal, th: f64, n0: usize, l1: usize) -> Result<LabeledSignal> {
    if l1 < 4 {
        return Err(Error::Precondition(format!("low-volume run needs l1 >= 4, got {l1}")));
    }
    if n0 < 1 || n0 + l1 > signal.cycles.len() {
        return Err(Error::Precondition(format!(
            "window {n0}..={} is outside cycles 1..={}",
            n0 + l1,
            signal.cycles.len()
        )));
    }
    if !(th >= 0.0 && th.is_finite()) {
        return Err(Error::Precondition(format!("level th must be non-negative, got {th}")));
    }
    let mut cycles = signal.cycles.clone();
    cycles[n0 - 1..n0 + l1].iter_mut().for_each(|c| *c = th);
    Ok(LabeledSignal::new(
        StSignal {
            cycles,
            ..signal.clone()
        },
        Category::AbruptLow,
    ))
}

/// Lowers every cycle by `alpha` (floored at zero) and labels the result repeated-jam.
pub fn inject_repeated_jam(signal: &StSignal, alpha: f64) -> Result<LabeledSignal> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Precondition(format!("alpha must be non-negative, got {alpha}")));
    }
    let cycles = signal.cycles.iter().map(|&v| (v - alpha).max(0.0)).collect();
    Ok(LabeledSignal::new(
        StSignal {
            cycles,
            ..signal.clone()
        },
        Category::RepeatedJam,
    ))
}

fn direction_stream(direction: DirectionId) -> u64 {
    direction.table_index().expect("table direction") as u64
}

/// One replication: noise every sanitized day, then convert `m` of them into
/// outliers alternating abrupt-low and repeated-jam.
fn replicate(
    sanitized: &[StSignal],
    m: usize,
    config: &SimConfig,
    rng: &mut Rng,
) -> Result<Vec<LabeledSignal>> {
    let mut out: Vec<LabeledSignal> = sanitized
        .iter()
        .map(|s| Ok(LabeledSignal::new(add_gaussian_noise(s, config.snr_db, rng)?, Category::Inlier)))
        .collect::<Result<_>>()?;
    let mut chosen = index::sample(rng, out.len(), m).into_vec();
    chosen.sort_unstable();
    let th_levels = config.th_max.floor() as u64;
    for (k, &i) in chosen.iter().enumerate() {
        let base = &out[i].signal;
        out[i] = if k % 2 == 0 {
            let l1 = rng.random_range(config.l1_min..=config.l1_max);
            let n0 = rng.random_range(1..=CYCLES - l1);
            let th = rng.random_range(0..=th_levels) as f64;
            inject_abrupt_low(base, th, n0, l1)?
        } else {
            let mean = base.cycles.iter().sum::<f64>() / base.cycles.len() as f64;
            inject_repeated_jam(base, config.alpha_fraction * mean)?
        };
    }
    Ok(out)
}

/// Generates the full labelled dataset for one direction and session:
/// the 23 base days followed by `replications` noisy copies of them.
pub fn generate_dataset(
    direction: DirectionId,
    session: Session,
    config: &SimConfig,
) -> Result<LabeledDataset> {
    config.validate()?;
    let base: Vec<LabeledSignal> =
        generate_base_signals_with(direction, session, config.seed, &config.base)
            .into_iter()
            .map(|s| LabeledSignal::new(s, Category::Inlier))
            .collect();
    let sanitized = sanitize_originals(&base)?;
    let m = config.outliers_per_replication(session);

    let mut signals = base;
    for r in 0..config.replications {
        let mut rng = rng::seeded(derive_seed(
            config.seed,
            &[direction_stream(direction), session as u64, r as u64 + 1],
        ));
        signals.extend(replicate(&sanitized, m, config, &mut rng)?);
    }
    LabeledDataset::new(
        direction,
        session,
        signals,
        Some(Provenance {
            generator_version: GENERATOR_VERSION.to_string(),
            config: config.clone(),
        }),
    )
}
