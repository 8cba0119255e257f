//! Generation limits from zonal wind, then a year of storage decisions at
//! 5-minute resolution with their energy accounting.
//!
//!     cargo run --release --example storage_policy

use chrono::NaiveDate;
use qsts::analyzer::ess_utilization;
use qsts::cases;
use qsts::engine::{EssSettings, StorageController};
use qsts::ess::{PeakCalendar, PeakWindow};
use qsts::network::Grid;
use qsts::profiles::synthetic::{self, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid::new(cases::desk30())?;
    let start = NaiveDate::from_ymd_opt(2035, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let profiles = synthetic::generate(
        grid.model(),
        &SyntheticSpec {
            start,
            days: 365,
            resolution_min: 5,
            ..Default::default()
        },
    );
    let settings = EssSettings {
        calendar: PeakCalendar::new(vec![
            PeakWindow {
                start_minute: 6 * 60,
                end_minute: 9 * 60,
            },
            PeakWindow {
                start_minute: 16 * 60,
                end_minute: 20 * 60,
            },
        ])?,
        ..Default::default()
    };
    let ctl = StorageController::new(&grid, &profiles, &settings, None)?;
    println!("{:<8} {:>6} {:>9} {:>9} {:>9} {:>9}", "zone", "period", "mean", "sigma", "max", "min");
    for l in &ctl.limits.entries {
        println!(
            "{:<8} {:>6} {:>9.1} {:>9.1} {:>9.1} {:>9.1}",
            l.zone, l.period, l.mu, l.sigma, l.gen_max_lim, l.gen_min_lim
        );
    }

    let soc0: Vec<f64> = ctl.units.iter().map(|u| u.soc).collect();
    let trace = ctl.trace(0, profiles.len(), &soc0)?;
    let end = profiles.timestamp(profiles.len() - 1).date();
    let u = ess_utilization(&trace.ledger, start.date(), end);
    println!("\n{:<8} {:>12} {:>12} {:>8}", "unit", "mitigation", "balancing", "ratio");
    for (unit, b) in &u.by_unit {
        let ratio = b.marketable_ratio().map_or("-".into(), |r| format!("{r:.3}"));
        println!("{unit:<8} {:>9.0} MWh {:>9.0} MWh {ratio:>8}", b.mitigation(), b.balancing());
    }
    let socs = trace.records.iter().map(|r| r.soc_after);
    let (lo, hi) = socs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s), b.max(s)));
    println!("state of charge stayed within [{lo:.1}, {hi:.1}] %");
    Ok(())
}
