//! Signal CSV files and dataset sidecars.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::signal::{ensure_valid, Category, DirectionId, LabeledSignal, Session, StSignal, CYCLES};
use crate::simulator::{LabeledDataset, Provenance};

/// Leading columns before the cycle values.
pub const META_COLUMNS: [&str; 4] = ["direction", "session", "day", "category"];

pub fn csv_header() -> Vec<String> {
    META_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((1..=CYCLES).map(|i| format!("c{i:02}")))
        .collect()
}

/// File name of a dataset, e.g. `Entry-E_PM.csv`.
pub fn dataset_file_name(direction: DirectionId, session: Session) -> String {
    format!("{direction}_{session}.csv")
}

/// A signal row with an optional label (`?` in the file).
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    pub signal: StSignal,
    pub category: Option<Category>,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::MalformedInput(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_signals_csv(path: &Path, records: &[SignalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(csv_header()).map_err(|e| csv_err(path, e))?;
    for r in records {
        let s = &r.signal;
        let mut row = vec![
            s.direction.to_string(),
            s.session.to_string(),
            s.day_index.to_string(),
            r.category.map_or_else(|| "?".to_string(), |c| c.id().to_string()),
        ];
        row.extend(s.cycles.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_signals_csv(path: &Path) -> Result<Vec<SignalRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header != csv_header() {
        return Err(Error::MalformedInput(format!(
            "{}: expected header direction,session,day,category,c01..c{CYCLES}",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (line, row) in r.records().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let bad = |what: &str| {
            Error::MalformedInput(format!("{} row {}: {what}", path.display(), line + 1))
        };
        let direction: DirectionId = row[0].trim().parse()?;
        let session: Session = row[1].trim().parse()?;
        let day_index: u32 = row[2].trim().parse().map_err(|_| bad("invalid day"))?;
        let category = match row[3].trim() {
            "?" => None,
            c => {
                let id: u8 = c.parse().map_err(|_| bad("invalid category"))?;
                Some(Category::try_from(id)?)
            }
        };
        let cycles = row
            .iter()
            .skip(META_COLUMNS.len())
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad(&format!("invalid count '{v}'"))))
            .collect::<Result<Vec<_>>>()?;
        let signal = StSignal {
            direction,
            session,
            day_index,
            cycles,
        };
        ensure_valid(&signal)?;
        out.push(SignalRecord { signal, category });
    }
    Ok(out)
}

/// Sidecar path of a dataset CSV (`.json` next to it).
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes `dir/<direction>_<session>.csv` and its sidecar; returns the CSV path.
pub fn write_dataset(dir: &Path, dataset: &LabeledDataset) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(dataset_file_name(dataset.direction, dataset.session));
    let records: Vec<SignalRecord> = dataset
        .signals
        .iter()
        .map(|s| SignalRecord {
            signal: s.signal.clone(),
            category: Some(s.category),
        })
        .collect();
    write_signals_csv(&path, &records)?;
    if let Some(p) = &dataset.provenance {
        let side = sidecar_path(&path);
        let text = serde_json::to_string_pretty(p).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))?;
    }
    Ok(path)
}

/// Reads a labelled dataset CSV (and its sidecar, when present).
pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let records = read_signals_csv(path)?;
    let first = records
        .first()
        .ok_or_else(|| Error::MalformedInput(format!("{}: no signals", path.display())))?;
    let (direction, session) = (first.signal.direction, first.signal.session);
    let signals = records
        .into_iter()
        .map(|r| match r.category {
            Some(c) => Ok(LabeledSignal::new(r.signal, c)),
            None => Err(Error::MalformedInput(format!(
                "{}: unlabeled signal in a training dataset",
                path.display()
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    let side = sidecar_path(path);
    let provenance = if side.exists() {
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        Some(serde_json::from_str::<Provenance>(&text).map_err(|e| Error::Format(e.to_string()))?)
    } else {
        None
    };
    LabeledDataset::new(direction, session, signals, provenance)
}

/// Loads datasets from a CSV file or every `*.csv` in a directory, keeping
/// those matching the filters, in direction-table then session order.
pub fn load_datasets(
    path: &Path,
    session: Option<Session>,
    direction: Option<DirectionId>,
) -> Result<Vec<LabeledDataset>> {
    let files = if path.is_dir() {
        let mut files = Vec::new();
        for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
            let p = entry.map_err(|e| Error::io(path, e))?.path();
            if p.extension().is_some_and(|e| e == "csv") {
                files.push(p);
            }
        }
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut out = Vec::new();
    for f in files {
        let ds = read_dataset(&f)?;
        if session.is_none_or(|s| s == ds.session) && direction.is_none_or(|d| d == ds.direction) {
            out.push(ds);
        }
    }
    out.sort_by_key(|d| (d.direction.table_index(), d.session as u8));
    Ok(out)
}
