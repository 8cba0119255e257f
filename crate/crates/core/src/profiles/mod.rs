//! Synchronized per-device time series.
//!
//! Columns are keyed by device id: a load id carries its active demand in
//! MW (with an optional `<id>:q` column in MVAr), a wind generator id its
//! output in MW and an intertie id its schedule in MW.

mod csv_io;
pub mod synthetic;

pub use csv_io::{load_profiles, read_profiles, write_profiles};

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::network::{GeneratorKind, NetworkModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset {
    /// Minutes between rows.
    pub resolution_min: u32,
    /// Timestamp of row 0.
    pub start: NaiveDateTime,
    pub series: BTreeMap<String, Vec<f64>>,
    /// Where the data came from (file path or generator description).
    pub provenance: String,
}

impl TimeSeriesDataset {
    pub fn new(resolution_min: u32, start: NaiveDateTime, provenance: impl Into<String>) -> Self {
        TimeSeriesDataset {
            resolution_min,
            start,
            series: BTreeMap::new(),
            provenance: provenance.into(),
        }
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.series.values().next().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn timestamp(&self, step: usize) -> NaiveDateTime {
        self.start + Duration::minutes(step as i64 * self.resolution_min as i64)
    }

    pub fn value(&self, id: &str, step: usize) -> Option<f64> {
        self.series.get(id).and_then(|s| s.get(step)).copied()
    }

    pub fn column(&self, id: &str) -> Option<&[f64]> {
        self.series.get(id).map(Vec::as_slice)
    }

    /// Rows `[from, to)`, re-based so that row 0 is `from`.
    pub fn slice(&self, from: usize, to: usize) -> TimeSeriesDataset {
        TimeSeriesDataset {
            resolution_min: self.resolution_min,
            start: self.timestamp(from),
            series: self
                .series
                .iter()
                .map(|(k, v)| (k.clone(), v[from.min(v.len())..to.min(v.len())].to_vec()))
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Same horizon at another resolution. Coarser resolutions sample the
    /// instantaneous values; finer ones interpolate linearly between rows
    /// and hold the last row. The target must divide or be a multiple of
    /// the current resolution.
    pub fn resample(&self, resolution_min: u32) -> Result<TimeSeriesDataset, String> {
        let r = self.resolution_min;
        if resolution_min == r {
            return Ok(self.clone());
        }
        let n = self.len();
        let mut out = TimeSeriesDataset::new(resolution_min, self.start, self.provenance.clone());
        if resolution_min > r {
            if resolution_min % r != 0 {
                return Err(format!("{resolution_min} min is not a multiple of {r} min"));
            }
            let k = (resolution_min / r) as usize;
            for (id, s) in &self.series {
                out.series.insert(id.clone(), s.iter().step_by(k).copied().collect());
            }
        } else {
            if r % resolution_min != 0 {
                return Err(format!("{resolution_min} min does not divide {r} min"));
            }
            let k = (r / resolution_min) as usize;
            for (id, s) in &self.series {
                let mut v = Vec::with_capacity(n * k);
                for i in 0..n {
                    let a = s[i];
                    let b = if i + 1 < n { s[i + 1] } else { s[i] };
                    for j in 0..k {
                        v.push(a + (b - a) * j as f64 / k as f64);
                    }
                }
                out.series.insert(id.clone(), v);
            }
        }
        Ok(out)
    }

    /// Total wind output per zone at every row, from the wind generators'
    /// columns and the zones of their buses.
    pub fn zone_wind(&self, model: &NetworkModel) -> BTreeMap<String, Vec<f64>> {
        let n = self.len();
        let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for z in &model.zones {
            out.insert(z.name.clone(), vec![0.0; n]);
        }
        for g in model.generators.iter().filter(|g| g.kind == GeneratorKind::Wind) {
            let zone = model
                .buses
                .iter()
                .find(|b| b.id == g.bus)
                .and_then(|b| b.zone.clone())
                .unwrap_or_default();
            let total = out.entry(zone).or_insert_with(|| vec![0.0; n]);
            if let Some(s) = self.series.get(&g.id) {
                for (t, x) in total.iter_mut().zip(s) {
                    *t += x;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn ds() -> TimeSeriesDataset {
        let start = NaiveDate::from_ymd_opt(2035, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let mut d = TimeSeriesDataset::new(60, start, "test");
        d.series.insert("A".into(), vec![0.0, 12.0, 24.0]);
        d
    }

    #[test]
    fn finer_resolution_interpolates() {
        let d = ds().resample(5).unwrap();
        assert_eq!(d.len(), 36);
        assert_eq!(d.value("A", 1), Some(1.0));
        assert_eq!(d.value("A", 12), Some(12.0));
        assert_eq!(d.value("A", 35), Some(24.0));
        assert_eq!(d.timestamp(12), ds().timestamp(1));
    }

    #[test]
    fn coarser_resolution_samples() {
        let fine = ds().resample(5).unwrap();
        let back = fine.resample(60).unwrap();
        assert_eq!(back.series, ds().series);
        assert!(ds().resample(45).is_err());
    }

    #[test]
    fn slice_rebases_start() {
        let s = ds().slice(1, 3);
        assert_eq!(s.start, ds().timestamp(1));
        assert_eq!(s.column("A").unwrap(), &[12.0, 24.0]);
    }
}
