//! Deterministic synthetic annual profiles.
//!
//! Hourly knots are generated and, for finer resolutions, linearly
//! interpolated, so a 60-minute dataset is an exact subsample of any finer
//! one built from the same seed.

use std::f64::consts::PI;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::TimeSeriesDataset;
use crate::network::{GeneratorKind, IntertieDirection, NetworkModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub start: NaiveDateTime,
    pub days: u32,
    pub resolution_min: u32,
    pub seed: u64,
    /// Stationary standard deviation of the multiplicative load noise.
    pub load_noise: f64,
    /// Scales every wind column.
    pub wind_scale: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            start: NaiveDate::from_ymd_opt(2035, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
            days: 365,
            resolution_min: 60,
            seed: 2035,
            load_noise: 0.015,
            wind_scale: 1.0,
        }
    }
}

/// Fraction of annual peak demand at a given day of year (0-based), hour
/// of day and weekday flag, before noise.
pub fn load_shape(day_of_year: f64, hour: f64, weekend: bool) -> f64 {
    let season = 0.75 + 0.22 * (2.0 * PI * (day_of_year - 15.0) / 365.0).cos();
    let daily = 0.82 + 0.10 * (-((hour - 8.0) / 2.0).powi(2)).exp() + 0.16 * (-((hour - 18.0) / 2.5).powi(2)).exp();
    let week = if weekend { 0.93 } else { 1.0 };
    season * daily * week
}

/// Shape normalized so its annual maximum is close to 1.
fn normalized_shape(t: NaiveDateTime) -> f64 {
    let d = t.ordinal0() as f64;
    let h = t.hour() as f64 + t.minute() as f64 / 60.0;
    let weekend = t.weekday().number_from_monday() >= 6;
    load_shape(d, h, weekend) / load_shape(15.0, 18.0, false)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Builds load, wind and intertie columns for every profiled device of
/// `model`.
pub fn generate(model: &NetworkModel, spec: &SyntheticSpec) -> TimeSeriesDataset {
    let hours = spec.days as usize * 24;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let start = spec.start;
    let mut ds = TimeSeriesDataset::new(60, start, format!("synthetic seed={}", spec.seed));
    let shape: Vec<f64> = (0..hours).map(|k| normalized_shape(ds.timestamp(k))).collect();

    let phi = 0.95_f64;
    let innovation = spec.load_noise * (1.0 - phi * phi).sqrt();
    for l in &model.loads {
        let mut e = spec.load_noise * normal();
        let mut col = Vec::with_capacity(hours);
        for s in &shape {
            col.push(l.p_mw * s * (1.0 + e));
            e = phi * e + innovation * normal();
        }
        ds.series.insert(l.id.clone(), col);
    }

    // One latent AR(1) process per zone, partially shared; capacity factor
    // is a logistic of the latent value plus a winter bias.
    let zone_of = |bus: &str| {
        model
            .buses
            .iter()
            .find(|b| b.id == bus)
            .and_then(|b| b.zone.clone())
            .unwrap_or_default()
    };
    let mut zones: Vec<String> = model
        .generators
        .iter()
        .filter(|g| g.kind == GeneratorKind::Wind)
        .map(|g| zone_of(&g.bus))
        .collect();
    zones.sort();
    zones.dedup();
    let (rho, a, sd) = (0.6_f64, 0.97_f64, 1.2_f64);
    let sigma = sd * (1.0 - a * a).sqrt();
    let mut latent = vec![vec![0.0; hours]; zones.len()];
    let mut x: Vec<f64> = zones.iter().map(|_| sd * normal()).collect();
    for k in 0..hours {
        let common = normal();
        for (z, xz) in x.iter_mut().enumerate() {
            latent[z][k] = *xz;
            let e = rho * common + (1.0 - rho * rho).sqrt() * normal();
            *xz = a * *xz + sigma * e;
        }
    }
    for g in model.generators.iter().filter(|g| g.kind == GeneratorKind::Wind) {
        let z = zones.iter().position(|z| *z == zone_of(&g.bus)).unwrap();
        let col = (0..hours)
            .map(|k| {
                let d = ds.timestamp(k).ordinal0() as f64;
                let bias = -0.7 + 0.5 * (2.0 * PI * (d - 15.0) / 365.0).cos();
                g.p_max * spec.wind_scale * logistic(latent[z][k] + bias)
            })
            .collect();
        ds.series.insert(g.id.clone(), col);
    }

    // Schedules follow demand: imports rise and exports fall with load.
    let (lo, hi) = shape.iter().fold((f64::MAX, f64::MIN), |(a, b), &s| (a.min(s), b.max(s)));
    let span = (hi - lo).max(1e-9);
    for it in &model.interties {
        let col = shape
            .iter()
            .map(|s| {
                let u = (s - lo) / span;
                let x = match it.direction {
                    IntertieDirection::Import => 300.0 + 200.0 * u,
                    IntertieDirection::Export => 250.0 + 150.0 * (1.0 - u),
                };
                x.clamp(it.schedule_limit_min, it.schedule_limit_max)
            })
            .collect();
        ds.series.insert(it.id.clone(), col);
    }

    if spec.resolution_min == 60 {
        ds
    } else {
        ds.resample(spec.resolution_min).expect("resolution must divide 60")
    }
}

/// Every profiled device held at its model value for `steps` rows.
pub fn constant(model: &NetworkModel, start: NaiveDateTime, resolution_min: u32, steps: usize) -> TimeSeriesDataset {
    let mut ds = TimeSeriesDataset::new(resolution_min, start, "constant");
    for l in &model.loads {
        ds.series.insert(l.id.clone(), vec![l.p_mw; steps]);
    }
    for g in model.generators.iter().filter(|g| g.kind == GeneratorKind::Wind) {
        ds.series.insert(g.id.clone(), vec![0.0; steps]);
    }
    for it in &model.interties {
        ds.series.insert(it.id.clone(), vec![it.current_schedule; steps]);
    }
    ds
}
