use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::EssError;

/// Daily peak-load windows, half-open `[start, end)` in minutes after
/// midnight, optionally restricted to some months.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeakCalendar {
    pub windows: Vec<PeakWindow>,
    /// Calendar months (1–12) in which the windows apply; empty means all.
    #[serde(default)]
    pub months: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakWindow {
    pub start_minute: u32,
    pub end_minute: u32,
}

impl PeakCalendar {
    pub fn new(windows: Vec<PeakWindow>) -> Result<Self, EssError> {
        let c = PeakCalendar {
            windows,
            months: Vec::new(),
        };
        c.check()?;
        Ok(c)
    }

    /// Calendar from per-day step-index intervals at a given resolution.
    pub fn from_steps(intervals: &[(u32, u32)], resolution_min: u32) -> Result<Self, EssError> {
        PeakCalendar::new(
            intervals
                .iter()
                .map(|&(a, b)| PeakWindow {
                    start_minute: a * resolution_min,
                    end_minute: b * resolution_min,
                })
                .collect(),
        )
    }

    pub fn check(&self) -> Result<(), EssError> {
        let mut w = self.windows.clone();
        w.sort_by_key(|x| x.start_minute);
        for x in &w {
            if x.start_minute >= x.end_minute || x.end_minute > 24 * 60 {
                return Err(EssError::PeriodMap(format!(
                    "peak window [{}, {}) is empty or leaves the day",
                    x.start_minute, x.end_minute
                )));
            }
        }
        for pair in w.windows(2) {
            if pair[1].start_minute < pair[0].end_minute {
                return Err(EssError::PeriodMap("peak windows overlap".into()));
            }
        }
        if self.months.iter().any(|m| !(1..=12).contains(m)) {
            return Err(EssError::PeriodMap("peak months must lie in 1..=12".into()));
        }
        Ok(())
    }

    pub fn is_peak(&self, t: NaiveDateTime) -> bool {
        if !self.months.is_empty() && !self.months.contains(&t.month()) {
            return false;
        }
        let minute = t.hour() * 60 + t.minute();
        self.windows
            .iter()
            .any(|w| w.start_minute <= minute && minute < w.end_minute)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn at(h: u32, m: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2035, 1, 10).unwrap().and_hms_opt(h, m, 0).unwrap()
    }

    #[test]
    fn windows_are_half_open() {
        let c = PeakCalendar::from_steps(&[(72, 108)], 5).unwrap();
        assert!(!c.is_peak(at(5, 55)));
        assert!(c.is_peak(at(6, 0)));
        assert!(c.is_peak(at(8, 55)));
        assert!(!c.is_peak(at(9, 0)));
    }

    #[test]
    fn month_filter() {
        let mut c = PeakCalendar::from_steps(&[(6, 9)], 60).unwrap();
        c.months = vec![12, 1, 2];
        assert!(c.is_peak(at(7, 0)));
        let july = NaiveDate::from_ymd_opt(2035, 7, 10).unwrap().and_hms_opt(7, 0, 0).unwrap();
        assert!(!c.is_peak(july));
    }

    #[test]
    fn overlapping_windows_rejected() {
        assert!(PeakCalendar::from_steps(&[(6, 9), (8, 10)], 60).is_err());
        assert!(PeakCalendar::from_steps(&[(20, 25)], 60).is_err());
    }
}
