//! A synthetic year split into weekly segments and run in parallel, then
//! compared with the chained run of the same year.
//!
//!     cargo run --release --example annual_parallel [-- <days> <workers>]

use std::time::Instant;

use chrono::NaiveDate;
use qsts::analyzer::{losses, MetricWindow};
use qsts::cases;
use qsts::engine::{EngineConfig, Simulator};
use qsts::network::Grid;
use qsts::profiles::synthetic::{self, SyntheticSpec};
use qsts::scheduler::{execute, RunMode, RunPlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let days: u32 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(365);
    let workers: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(4);

    let grid = Grid::new(cases::desk30())?;
    let start = NaiveDate::from_ymd_opt(2035, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let profiles = synthetic::generate(
        grid.model(),
        &SyntheticSpec {
            start,
            days,
            resolution_min: 15,
            ..Default::default()
        },
    );
    let cfg = EngineConfig {
        resolution_min: 15,
        ..Default::default()
    };
    let sim = Simulator::new(&grid, &profiles, &cfg, None)?;

    let mut stores = Vec::new();
    for (mode, w) in [(RunMode::Parallel, workers), (RunMode::Sequential, 1)] {
        let plan = RunPlan::new(sim.horizon(), 15, mode, w, 12);
        let clock = Instant::now();
        let store = execute(&plan, &sim)?;
        let l = losses(&store, &grid, &MetricWindow::All);
        println!(
            "{mode:?} with {w} worker(s): {} segments, {} steps in {:.1} s; losses {:.0} MWh, digest {}",
            plan.segments.len(),
            store.states.len(),
            clock.elapsed().as_secs_f64(),
            l.energy_mwh(15),
            &store.digest()[..16]
        );
        stores.push(store);
    }
    let worst = stores[0]
        .states
        .iter()
        .zip(&stores[1].states)
        .flat_map(|(a, b)| a.vm.iter().zip(&b.vm).map(|(x, y)| (x - y).abs()))
        .fold(0.0f64, f64::max);
    println!("largest |V| difference between the two: {worst:.2e} pu");
    Ok(())
}
