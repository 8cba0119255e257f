//! Mean and peak losses of the same smooth fortnight at 5, 15, 30 and 60
//! minutes.
//!
//!     cargo run --release --example resolution_study [-- <days>]

use chrono::NaiveDate;
use qsts::analyzer::resolution_study;
use qsts::cases;
use qsts::engine::EngineConfig;
use qsts::network::Grid;
use qsts::profiles::synthetic::{self, SyntheticSpec};
use qsts::scheduler::RunMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let days: u32 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(14);
    let grid = Grid::new(cases::desk30())?;
    let start = NaiveDate::from_ymd_opt(2035, 4, 2).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let profiles = synthetic::generate(
        grid.model(),
        &SyntheticSpec {
            start,
            days,
            resolution_min: 60,
            load_noise: 0.0,
            ..Default::default()
        },
    );
    let cfg = EngineConfig::default();
    let rows = resolution_study(&grid, &profiles, &cfg, &[5, 15, 30, 60], RunMode::Sequential, 1, None)?;
    println!("{:>7} {:>7} {:>9} {:>10} {:>10} {:>11}", "minutes", "steps", "runtime s", "mean MW", "max MW", "energy MWh");
    for r in &rows {
        println!(
            "{:>7} {:>7} {:>9.2} {:>10.3} {:>10.3} {:>11.1}",
            r.resolution_min, r.steps, r.runtime_s, r.loss_mean_mw, r.loss_max_mw, r.loss_energy_mwh
        );
    }
    let base = rows.iter().find(|r| r.resolution_min == 5).map(|r| r.loss_mean_mw);
    if let Some(b) = base {
        for r in rows.iter().filter(|r| r.resolution_min != 5) {
            println!("{:>3} min mean differs from 5 min by {:+.2}%", r.resolution_min, 100.0 * (r.loss_mean_mw / b - 1.0));
        }
    }
    Ok(())
}
