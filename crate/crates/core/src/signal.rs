//! Traffic-signal domain types for a four-arm junction.
//!
//! A junction is observed through 15 movement volumes per traffic-light
//! cycle. Each of the 19 observed directions (4 entries, 4 exits and 11
//! entry-direction distributions) is a fixed sum of some of those volumes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cycles per session.
pub const CYCLES: usize = 80;
/// Weekdays recorded per direction and session.
pub const DAYS: usize = 23;
/// Movement volumes counted per cycle.
pub const MOVEMENTS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Session {
    AM,
    PM,
}

impl Session {
    pub const ALL: [Session; 2] = [Session::AM, Session::PM];

    pub fn as_str(self) -> &'static str {
        match self {
            Session::AM => "AM",
            Session::PM => "PM",
        }
    }
}

impl fmt::Display for Session {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Session {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "AM" => Ok(Session::AM),
            "PM" => Ok(Session::PM),
            other => Err(Error::Domain(format!("unknown session `{other}`"))),
        }
    }
}

/// Signal category: one inlier class and two outlier classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Category {
    /// Normal, steady flow.
    Inlier = 1,
    /// Abrupt low volumes over several cycles (slight jam or hardware failure).
    AbruptLow = 2,
    /// Repeated low volumes over the whole session (serious jam).
    RepeatedJam = 3,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Inlier, Category::AbruptLow, Category::RepeatedJam];

    pub fn id(self) -> u8 {
        self as u8
    }

    /// Zero-based row/column index used by confusion matrices.
    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn is_outlier(self) -> bool {
        self != Category::Inlier
    }
}

impl From<Category> for u8 {
    fn from(c: Category) -> u8 {
        c.id()
    }
}

impl TryFrom<u8> for Category {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Category::Inlier),
            2 => Ok(Category::AbruptLow),
            3 => Ok(Category::RepeatedJam),
            other => Err(Error::Domain(format!("category must be 1, 2 or 3, got {other}"))),
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DirectionKind {
    Entry,
    Exit,
    #[serde(rename = "EDD")]
    Edd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    E,
    S,
    W,
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Movement {
    Left,
    Right,
    Straight,
}

impl Movement {
    fn as_str(self) -> &'static str {
        match self {
            Movement::Left => "left",
            Movement::Right => "right",
            Movement::Straight => "straight",
        }
    }
}

/// One of the 19 observed traffic directions.
///
/// Construct through [`DirectionId::ALL`] or by parsing; the constructor
/// keeps the "movement iff EDD" invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectionId {
    kind: DirectionKind,
    arm: Arm,
    movement: Option<Movement>,
}

/// Movement indices (1-based `w_i`) summed by each direction, in table order
/// z_1..z_19.
const COMPOSITION: [(DirectionId, &[usize]); 19] = {
    use Arm::*;
    use Movement::*;
    const fn entry(arm: Arm) -> DirectionId {
        DirectionId { kind: DirectionKind::Entry, arm, movement: None }
    }
    const fn exit(arm: Arm) -> DirectionId {
        DirectionId { kind: DirectionKind::Exit, arm, movement: None }
    }
    const fn edd(arm: Arm, m: Movement) -> DirectionId {
        DirectionId { kind: DirectionKind::Edd, arm, movement: Some(m) }
    }
    [
        (entry(E), &[1, 3, 5, 6, 8, 12]),
        (entry(S), &[13, 14, 15]),
        (entry(W), &[2, 4]),
        (entry(N), &[7, 9, 10, 11]),
        (exit(E), &[2, 7, 9, 13]),
        (exit(S), &[1, 5, 10, 12]),
        (exit(W), &[3, 6, 11, 14]),
        (exit(N), &[4, 8, 15]),
        (edd(E, Left), &[1, 5, 12]),
        (edd(E, Right), &[8]),
        (edd(E, Straight), &[3, 6]),
        (edd(S, Left), &[14]),
        (edd(S, Right), &[13]),
        (edd(S, Straight), &[15]),
        (edd(W, Left), &[4]),
        (edd(W, Straight), &[2]),
        (edd(N, Left), &[7, 9]),
        (edd(N, Right), &[11]),
        (edd(N, Straight), &[10]),
    ]
};

impl DirectionId {
    pub const COUNT: usize = 19;

    pub fn new(kind: DirectionKind, arm: Arm, movement: Option<Movement>) -> Result<Self> {
        let id = DirectionId { kind, arm, movement };
        if (kind == DirectionKind::Edd) != movement.is_some() {
            return Err(Error::Domain(format!(
                "movement must be given exactly for EDD directions: {kind:?} {arm:?} {movement:?}"
            )));
        }
        if id.table_index().is_none() {
            return Err(Error::Domain(format!("no such direction at this junction: {id}")));
        }
        Ok(id)
    }

    /// All 19 directions in table order.
    pub fn all() -> impl Iterator<Item = DirectionId> {
        COMPOSITION.iter().map(|(d, _)| *d)
    }

    pub fn kind(&self) -> DirectionKind {
        self.kind
    }

    pub fn arm(&self) -> Arm {
        self.arm
    }

    pub fn movement(&self) -> Option<Movement> {
        self.movement
    }

    /// Zero-based position in table order (z_1 is 0).
    pub fn table_index(&self) -> Option<usize> {
        COMPOSITION.iter().position(|(d, _)| d == self)
    }

    /// 1-based movement indices whose volumes make up this direction.
    pub fn movement_indices(&self) -> &'static [usize] {
        COMPOSITION
            .iter()
            .find(|(d, _)| d == self)
            .map(|(_, w)| *w)
            .expect("DirectionId values are only constructed for table entries")
    }

    /// Short label in the style of the result tables (`E`, `S_l`, ...).
    pub fn short_label(&self) -> String {
        let arm = format!("{:?}", self.arm);
        match self.movement {
            None => arm,
            Some(m) => format!("{arm}_{}", &m.as_str()[..1]),
        }
    }
}

impl fmt::Display for DirectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DirectionKind::Entry => "Entry",
            DirectionKind::Exit => "Exit",
            DirectionKind::Edd => "EDD",
        };
        write!(f, "{kind}-{:?}", self.arm)?;
        if let Some(m) = self.movement {
            write!(f, "-{}", m.as_str())?;
        }
        Ok(())
    }
}

impl FromStr for DirectionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("unknown direction `{s}`"));
        let parts: Vec<&str> = s.trim().split('-').collect();
        let kind = match parts.first().copied() {
            Some("Entry") => DirectionKind::Entry,
            Some("Exit") => DirectionKind::Exit,
            Some("EDD") => DirectionKind::Edd,
            _ => return Err(bad()),
        };
        let arm = match parts.get(1).copied() {
            Some("E") => Arm::E,
            Some("S") => Arm::S,
            Some("W") => Arm::W,
            Some("N") => Arm::N,
            _ => return Err(bad()),
        };
        let movement = match (kind, parts.get(2).copied(), parts.len()) {
            (DirectionKind::Edd, Some("left"), 3) => Some(Movement::Left),
            (DirectionKind::Edd, Some("right"), 3) => Some(Movement::Right),
            (DirectionKind::Edd, Some("straight"), 3) => Some(Movement::Straight),
            (DirectionKind::Entry | DirectionKind::Exit, None, 2) => None,
            _ => return Err(bad()),
        };
        DirectionId::new(kind, arm, movement).map_err(|_| bad())
    }
}

impl Serialize for DirectionId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DirectionId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Movement volumes counted during one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct MpVolumeRecord {
    /// 1-based cycle number.
    pub cycle_index: usize,
    /// `volumes[i - 1]` is `w_i`.
    pub volumes: [f64; MOVEMENTS],
}

/// Per-cycle vehicle counts of one direction over one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StSignal {
    pub direction: DirectionId,
    pub session: Session,
    pub day_index: u32,
    pub cycles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSignal {
    pub signal: StSignal,
    pub category: Category,
}

impl LabeledSignal {
    pub fn new(signal: StSignal, category: Category) -> Self {
        LabeledSignal { signal, category }
    }
}

/// A broken [`StSignal`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Length { actual: usize },
    Negative { index: usize, value: f64 },
    NotFinite { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Length { actual } => write!(f, "length {actual} != {CYCLES}"),
            Violation::Negative { index, value } => {
                write!(f, "negative count {value} at index {index}")
            }
            Violation::NotFinite { index } => write!(f, "non-finite count at index {index}"),
        }
    }
}

/// Reports every broken invariant of `signal`; empty means valid.
pub fn validate_signal(signal: &StSignal) -> Vec<Violation> {
    let mut out = Vec::new();
    if signal.cycles.len() != CYCLES {
        out.push(Violation::Length {
            actual: signal.cycles.len(),
        });
    }
    for (index, &value) in signal.cycles.iter().enumerate() {
        if !value.is_finite() {
            out.push(Violation::NotFinite { index });
        } else if value < 0.0 {
            out.push(Violation::Negative { index, value });
        }
    }
    out
}

pub(crate) fn ensure_valid(signal: &StSignal) -> Result<()> {
    let violations = validate_signal(signal);
    if violations.is_empty() {
        return Ok(());
    }
    let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
    Err(Error::MalformedInput(format!(
        "{} {} day {}: {}",
        signal.direction,
        signal.session,
        signal.day_index,
        msg.join("; ")
    )))
}

/// Builds one direction's signal by summing its movement volumes cycle by cycle.
///
/// `records` must cover cycles 1..=80 exactly once each, in any order.
pub fn compose_direction_signal(
    records: &[MpVolumeRecord],
    direction: DirectionId,
    session: Session,
    day_index: u32,
) -> Result<StSignal> {
    let mut slots: Vec<Option<&MpVolumeRecord>> = vec![None; CYCLES];
    for rec in records {
        if rec.cycle_index == 0 || rec.cycle_index > CYCLES {
            return Err(Error::MalformedInput(format!(
                "cycle index {} outside 1..={CYCLES}",
                rec.cycle_index
            )));
        }
        if let Some(i) = rec.volumes.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::MalformedInput(format!(
                "invalid volume w_{} = {} in cycle {}",
                i + 1,
                rec.volumes[i],
                rec.cycle_index
            )));
        }
        let slot = &mut slots[rec.cycle_index - 1];
        if slot.is_some() {
            return Err(Error::MalformedInput(format!(
                "duplicate cycle {}",
                rec.cycle_index
            )));
        }
        *slot = Some(rec);
    }
    let indices = direction.movement_indices();
    let cycles = slots
        .iter()
        .enumerate()
        .map(|(n, slot)| {
            let rec = slot.ok_or_else(|| Error::MalformedInput(format!("missing cycle {}", n + 1)))?;
            Ok(indices.iter().map(|&i| rec.volumes[i - 1]).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(StSignal {
        direction,
        session,
        day_index,
        cycles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records_with(f: impl Fn(usize, usize) -> f64) -> Vec<MpVolumeRecord> {
        (1..=CYCLES)
            .map(|n| {
                let mut volumes = [0.0; MOVEMENTS];
                for (i, v) in volumes.iter_mut().enumerate() {
                    *v = f(n, i + 1);
                }
                MpVolumeRecord {
                    cycle_index: n,
                    volumes,
                }
            })
            .collect()
    }

    fn dir(s: &str) -> DirectionId {
        s.parse().unwrap()
    }

    fn z(index: usize) -> DirectionId {
        DirectionId::all().nth(index - 1).unwrap()
    }

    #[test]
    fn nineteen_distinct_directions() {
        let all: Vec<_> = DirectionId::all().collect();
        assert_eq!(all.len(), DirectionId::COUNT);
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 19);
        let count = |k| all.iter().filter(|d| d.kind() == k).count();
        assert_eq!(count(DirectionKind::Entry), 4);
        assert_eq!(count(DirectionKind::Exit), 4);
        assert_eq!(count(DirectionKind::Edd), 11);
        for d in &all {
            assert_eq!(d.kind() == DirectionKind::Edd, d.movement().is_some());
            assert!(!d.movement_indices().is_empty());
        }
    }

    #[test]
    fn direction_string_roundtrip() {
        for d in DirectionId::all() {
            assert_eq!(d.to_string().parse::<DirectionId>().unwrap(), d);
        }
        assert_eq!(dir("EDD-N-left").to_string(), "EDD-N-left");
        assert_eq!(dir("Entry-E").short_label(), "E");
        assert_eq!(dir("EDD-S-left").short_label(), "S_l");
        assert!("EDD-W-right".parse::<DirectionId>().is_err());
        assert!("Entry-E-left".parse::<DirectionId>().is_err());
        assert!("EDD-N".parse::<DirectionId>().is_err());
        assert!("Ramp-E".parse::<DirectionId>().is_err());
    }

    #[test]
    fn single_movement_direction() {
        let recs = records_with(|_, i| if i == 8 { 7.0 } else { 1.0 });
        let s = compose_direction_signal(&recs, z(10), Session::AM, 1).unwrap();
        assert!(s.cycles.iter().all(|&c| c == 7.0));
    }

    #[test]
    fn summed_direction() {
        let recs = records_with(|_, i| match i {
            13 => 3.0,
            14 => 4.0,
            15 => 5.0,
            _ => 100.0,
        });
        let s = compose_direction_signal(&recs, z(2), Session::PM, 3).unwrap();
        assert_eq!(s.cycles, vec![12.0; CYCLES]);
        assert_eq!(s.direction, dir("Entry-S"));
    }

    #[test]
    fn zero_records_give_zero_signals() {
        let recs = records_with(|_, _| 0.0);
        for d in DirectionId::all() {
            let s = compose_direction_signal(&recs, d, Session::AM, 1).unwrap();
            assert!(s.cycles.iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn entries_partition_all_movements() {
        // Entries and exits each partition the 15 movements.
        for kind in [DirectionKind::Entry, DirectionKind::Exit] {
            let mut all: Vec<usize> = DirectionId::all()
                .filter(|d| d.kind() == kind)
                .flat_map(|d| d.movement_indices().iter().copied())
                .collect();
            all.sort_unstable();
            assert_eq!(all, (1..=MOVEMENTS).collect::<Vec<_>>());
        }
        // Each arm's EDD signals add up to its entry signal.
        for arm in [Arm::E, Arm::S, Arm::W, Arm::N] {
            let mut edd: Vec<usize> = DirectionId::all()
                .filter(|d| d.kind() == DirectionKind::Edd && d.arm() == arm)
                .flat_map(|d| d.movement_indices().iter().copied())
                .collect();
            edd.sort_unstable();
            let entry = DirectionId::new(DirectionKind::Entry, arm, None).unwrap();
            let mut expected = entry.movement_indices().to_vec();
            expected.sort_unstable();
            assert_eq!(edd, expected, "arm {arm:?}");
        }
    }

    #[test]
    fn missing_and_duplicate_cycles_rejected() {
        let mut recs = records_with(|_, _| 1.0);
        recs.pop();
        assert!(matches!(
            compose_direction_signal(&recs, z(1), Session::AM, 1),
            Err(Error::MalformedInput(_))
        ));
        let mut recs = records_with(|_, _| 1.0);
        recs[5].cycle_index = 3;
        assert!(matches!(
            compose_direction_signal(&recs, z(1), Session::AM, 1),
            Err(Error::MalformedInput(_))
        ));
        let mut recs = records_with(|_, _| 1.0);
        recs[0].volumes[0] = -1.0;
        assert!(compose_direction_signal(&recs, z(1), Session::AM, 1).is_err());
    }

    #[test]
    fn validation_reports_violations() {
        let ok = StSignal {
            direction: z(1),
            session: Session::AM,
            day_index: 1,
            cycles: vec![3.0; CYCLES],
        };
        assert!(validate_signal(&ok).is_empty());

        let mut short = ok.clone();
        short.cycles.pop();
        assert_eq!(validate_signal(&short), vec![Violation::Length { actual: 79 }]);

        let mut neg = ok.clone();
        neg.cycles[17] = -0.5;
        let v = validate_signal(&neg);
        assert_eq!(v, vec![Violation::Negative { index: 17, value: -0.5 }]);
        assert!(v[0].to_string().contains("negative count"));
    }

    #[test]
    fn category_conversions() {
        for c in Category::ALL {
            assert_eq!(Category::try_from(c.id()).unwrap(), c);
        }
        assert!(Category::try_from(0).is_err());
        assert!(Category::try_from(4).is_err());
        assert!(!Category::Inlier.is_outlier());
        assert!(Category::RepeatedJam.is_outlier());
    }
}
