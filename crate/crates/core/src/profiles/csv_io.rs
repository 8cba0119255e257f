use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDateTime;

use super::TimeSeriesDataset;
use crate::error::ProfileError;
use crate::network::{GeneratorKind, NetworkModel};

const TIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

fn parse_time(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    NaiveDateTime::parse_from_str(s, TIME_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M"))
        .ok()
}

/// Reads one wide CSV file: a timestamp column followed by one numeric
/// column per series. Rows must be evenly spaced; a skipped row is
/// reported as a gap.
pub fn read_profiles(path: &Path) -> Result<TimeSeriesDataset, ProfileError> {
    let io = |source| ProfileError::Io {
        path: path.to_path_buf(),
        source,
    };
    let malformed = |row: usize, message: String| ProfileError::Malformed {
        path: path.to_path_buf(),
        row,
        message,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.len() < 2 {
        return Err(malformed(1, "need a timestamp column and at least one series".into()));
    }
    let names = &headers[1..];
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut times: Vec<NaiveDateTime> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| malformed(row, e.to_string()))?;
        if record.len() != headers.len() {
            return Err(malformed(row, format!("expected {} fields, found {}", headers.len(), record.len())));
        }
        let t = parse_time(&record[0]).ok_or_else(|| malformed(row, format!("bad timestamp `{}`", &record[0])))?;
        times.push(t);
        for (c, field) in record.iter().skip(1).enumerate() {
            let x: f64 = field
                .parse()
                .map_err(|_| malformed(row, format!("column `{}`: `{field}` is not a number", names[c])))?;
            columns[c].push(x);
        }
    }
    if times.len() < 2 {
        return Err(malformed(2, "need at least two rows to determine the spacing".into()));
    }
    let spacing = (times[1] - times[0]).num_minutes();
    if spacing <= 0 || spacing > 24 * 60 {
        return Err(ProfileError::NonUniformSpacing {
            path: path.to_path_buf(),
            row: 3,
        });
    }
    for k in 1..times.len() {
        let d = (times[k] - times[k - 1]).num_minutes();
        if d == spacing {
            continue;
        }
        let row = k + 2;
        if d > spacing && d % spacing == 0 {
            return Err(ProfileError::GapDetected {
                path: path.to_path_buf(),
                row,
                step: k,
            });
        }
        return Err(ProfileError::NonUniformSpacing {
            path: path.to_path_buf(),
            row,
        });
    }
    let mut ds = TimeSeriesDataset::new(spacing as u32, times[0], path.display().to_string());
    for (name, col) in names.iter().zip(columns) {
        ds.series.insert(name.clone(), col);
    }
    Ok(ds)
}

/// Device ids a profile column may refer to.
fn profile_ids(model: &NetworkModel) -> BTreeSet<String> {
    let mut ids = BTreeSet::new();
    for l in &model.loads {
        ids.insert(l.id.clone());
        ids.insert(format!("{}:q", l.id));
    }
    for g in model.generators.iter().filter(|g| g.kind == GeneratorKind::Wind) {
        ids.insert(g.id.clone());
    }
    for i in &model.interties {
        ids.insert(i.id.clone());
    }
    ids
}

/// Reads and merges profile files, checking every column against the
/// model and, if given, the spacing against `resolution_min`.
pub fn load_profiles(
    files: &[&Path],
    model: &NetworkModel,
    resolution_min: Option<u32>,
) -> Result<TimeSeriesDataset, ProfileError> {
    let known = profile_ids(model);
    let mut merged: Option<TimeSeriesDataset> = None;
    for &path in files {
        let ds = read_profiles(path)?;
        if let Some(id) = ds.series.keys().find(|id| !known.contains(*id)) {
            return Err(ProfileError::UnknownDevice {
                path: path.to_path_buf(),
                id: id.clone(),
            });
        }
        if let Some(expected) = resolution_min {
            if ds.resolution_min != expected {
                return Err(ProfileError::ResolutionMismatch {
                    path: path.to_path_buf(),
                    found: ds.resolution_min as i64,
                    expected,
                });
            }
        }
        merged = Some(match merged {
            None => ds,
            Some(mut m) => {
                if m.start != ds.start || m.resolution_min != ds.resolution_min || m.len() != ds.len() {
                    return Err(ProfileError::Malformed {
                        path: path.to_path_buf(),
                        row: 2,
                        message: "file does not share the start, spacing and length of the first profile file".into(),
                    });
                }
                m.provenance = format!("{};{}", m.provenance, ds.provenance);
                m.series.extend(ds.series);
                m
            }
        });
    }
    merged.ok_or_else(|| ProfileError::Malformed {
        path: Default::default(),
        row: 0,
        message: "no profile files given".into(),
    })
}

/// Writes the dataset as one wide CSV file. Values use the shortest
/// representation that reads back exactly.
pub fn write_profiles(ds: &TimeSeriesDataset, path: &Path) -> Result<(), ProfileError> {
    let io = |e: csv::Error| ProfileError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header = vec!["timestamp".to_string()];
    header.extend(ds.series.keys().cloned());
    w.write_record(&header).map_err(io)?;
    let cols: Vec<&Vec<f64>> = ds.series.values().collect();
    for k in 0..ds.len() {
        let mut rec = vec![ds.timestamp(k).format(TIME_FORMAT).to_string()];
        rec.extend(cols.iter().map(|c| c[k].to_string()));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|source| ProfileError::Io {
        path: path.to_path_buf(),
        source,
    })
}
