use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::EssError;

/// Spread estimator for the generation limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaEstimator {
    /// N − 1 denominator.
    #[default]
    Sample,
    /// N denominator.
    Population,
}

/// Width of the band around the mean, in standard deviations.
pub const LIMIT_SIGMAS: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLimits {
    pub zone: String,
    pub period: u8,
    pub mu: f64,
    pub sigma: f64,
    pub gen_max_lim: f64,
    pub gen_min_lim: f64,
}

impl GenerationLimits {
    pub fn from_samples(zone: &str, period: u8, samples: &[f64], estimator: SigmaEstimator) -> Result<Self, EssError> {
        if samples.len() < 2 {
            return Err(EssError::InsufficientSamples {
                zone: zone.into(),
                period,
                found: samples.len(),
            });
        }
        let n = samples.len() as f64;
        let mu = samples.iter().sum::<f64>() / n;
        let ss: f64 = samples.iter().map(|x| (x - mu) * (x - mu)).sum();
        let denom = match estimator {
            SigmaEstimator::Sample => n - 1.0,
            SigmaEstimator::Population => n,
        };
        let sigma = (ss / denom).sqrt();
        Ok(GenerationLimits {
            zone: zone.into(),
            period,
            mu,
            sigma,
            gen_max_lim: mu + LIMIT_SIGMAS * sigma,
            gen_min_lim: mu - LIMIT_SIGMAS * sigma,
        })
    }
}

/// Limits keyed by (zone, period).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LimitTable {
    pub entries: Vec<GenerationLimits>,
}

impl LimitTable {
    pub fn get(&self, zone: &str, period: u8) -> Option<&GenerationLimits> {
        self.entries.iter().find(|l| l.zone == zone && l.period == period)
    }
}

/// Mean and spread of each zone's generation within each seasonal period.
///
/// `period_of_sample[k]` is the period of the k-th sample of every series.
/// Every (zone, period) pair that occurs needs at least two samples.
pub fn compute_limits(
    zone_generation: &BTreeMap<String, Vec<f64>>,
    period_of_sample: &[u8],
    estimator: SigmaEstimator,
) -> Result<LimitTable, EssError> {
    let mut table = LimitTable::default();
    for (zone, series) in zone_generation {
        if series.len() != period_of_sample.len() {
            return Err(EssError::PeriodMap(format!(
                "zone `{zone}` has {} samples but the period list has {}",
                series.len(),
                period_of_sample.len()
            )));
        }
        let mut by_period: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
        for (&x, &p) in series.iter().zip(period_of_sample) {
            by_period.entry(p).or_default().push(x);
        }
        for (p, samples) in by_period {
            table.entries.push(GenerationLimits::from_samples(zone, p, &samples, estimator)?);
        }
    }
    Ok(table)
}

/// Seasonal period of each calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PeriodMap {
    pub by_month: [u8; 12],
}

impl Default for PeriodMap {
    /// Winter (Jan–Mar), spring (Apr–May), summer (Jun–Aug), autumn
    /// (Sep–Oct) and early winter (Nov–Dec).
    fn default() -> Self {
        PeriodMap {
            by_month: [1, 1, 1, 2, 2, 3, 3, 3, 4, 4, 5, 5],
        }
    }
}

impl PeriodMap {
    pub fn period(&self, t: NaiveDateTime) -> u8 {
        self.by_month[t.month0() as usize]
    }
}

impl FromStr for PeriodMap {
    type Err = EssError;

    /// Twelve comma-separated period numbers, January first.
    fn from_str(s: &str) -> Result<Self, EssError> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 12 {
            return Err(EssError::PeriodMap(format!("expected 12 entries, found {}", parts.len())));
        }
        let mut by_month = [0u8; 12];
        for (m, p) in parts.iter().enumerate() {
            by_month[m] = p
                .parse()
                .map_err(|_| EssError::PeriodMap(format!("entry {} (`{p}`) is not a period number", m + 1)))?;
            if by_month[m] == 0 {
                return Err(EssError::PeriodMap("periods are numbered from 1".into()));
            }
        }
        Ok(PeriodMap { by_month })
    }
}

impl TryFrom<String> for PeriodMap {
    type Error = EssError;

    fn try_from(s: String) -> Result<Self, EssError> {
        s.parse()
    }
}

impl From<PeriodMap> for String {
    fn from(m: PeriodMap) -> String {
        m.to_string()
    }
}

impl fmt::Display for PeriodMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.by_month.iter().map(u8::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_samples_collapse_the_band() {
        let l = GenerationLimits::from_samples("Z", 1, &[500.0, 500.0, 500.0], SigmaEstimator::Sample).unwrap();
        assert_eq!(l.sigma, 0.0);
        assert_eq!(l.gen_max_lim, 500.0);
        assert_eq!(l.gen_min_lim, 500.0);
    }

    #[test]
    fn one_to_five() {
        let l = GenerationLimits::from_samples("Z", 1, &[1.0, 2.0, 3.0, 4.0, 5.0], SigmaEstimator::Sample).unwrap();
        assert!((l.mu - 3.0).abs() < 1e-15);
        assert!((l.sigma - 2.5f64.sqrt()).abs() < 1e-15);
        assert!((l.gen_max_lim - 5.371_708_245_126_284_5).abs() < 1e-9);
        assert!((l.gen_min_lim - 0.628_291_754_873_715_5).abs() < 1e-9);
    }

    #[test]
    fn population_estimator_is_selectable() {
        let l = GenerationLimits::from_samples("Z", 1, &[1.0, 2.0, 3.0, 4.0, 5.0], SigmaEstimator::Population).unwrap();
        assert!((l.sigma - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples() {
        let mut g = BTreeMap::new();
        g.insert("East".to_string(), vec![1.0, 2.0, 3.0]);
        let err = compute_limits(&g, &[1, 1, 2], SigmaEstimator::Sample).unwrap_err();
        assert_eq!(
            err,
            EssError::InsufficientSamples {
                zone: "East".into(),
                period: 2,
                found: 1
            }
        );
    }

    #[test]
    fn limits_per_zone_and_period() {
        let mut g = BTreeMap::new();
        g.insert("East".to_string(), vec![1.0, 3.0, 10.0, 20.0]);
        g.insert("West".to_string(), vec![2.0, 2.0, 4.0, 8.0]);
        let t = compute_limits(&g, &[1, 1, 2, 2], SigmaEstimator::Sample).unwrap();
        assert_eq!(t.entries.len(), 4);
        assert_eq!(t.get("East", 2).unwrap().mu, 15.0);
        assert_eq!(t.get("West", 1).unwrap().sigma, 0.0);
    }

    #[test]
    fn period_map_parses_and_prints() {
        let m: PeriodMap = "1,1,1,2,2,3,3,3,4,4,5,5".parse().unwrap();
        assert_eq!(m, PeriodMap::default());
        assert_eq!(m.to_string(), "1,1,1,2,2,3,3,3,4,4,5,5");
        assert!("1,2".parse::<PeriodMap>().is_err());
        assert!("0,1,1,1,1,1,1,1,1,1,1,1".parse::<PeriodMap>().is_err());
    }

    proptest! {
        #[test]
        fn limits_scale_with_samples(
            samples in proptest::collection::vec(0.0f64..1000.0, 2..40),
            k in 0.01f64..100.0,
        ) {
            let a = GenerationLimits::from_samples("Z", 1, &samples, SigmaEstimator::Sample).unwrap();
            let scaled: Vec<f64> = samples.iter().map(|x| x * k).collect();
            let b = GenerationLimits::from_samples("Z", 1, &scaled, SigmaEstimator::Sample).unwrap();
            let tol = 1e-9 * (1.0 + a.gen_max_lim.abs() * k);
            prop_assert!((b.gen_max_lim - k * a.gen_max_lim).abs() < tol);
            prop_assert!((b.gen_min_lim - k * a.gen_min_lim).abs() < tol);
            prop_assert!(b.gen_min_lim <= b.mu && b.mu <= b.gen_max_lim);
        }
    }
}
