//! One week on the bundled network from a configuration file, written to a
//! run directory, with the operator's busiest devices.
//!
//!     cargo run --example week_run [-- <config.toml> <output-dir>]

use std::path::PathBuf;

use qsts::analyzer::switching_counts;
use qsts::io::{run, summarize, write_run_directory, Inputs};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/config.toml"));
    let inputs = Inputs::load(&config)?;
    let outcome = run(&inputs)?;
    let dir = args.next().map(PathBuf::from).unwrap_or_else(|| inputs.loaded.config.output_dir.clone());
    let paths = write_run_directory(&dir, &inputs, &outcome)?;

    let store = &outcome.store;
    let s = summarize(&inputs.grid, store, inputs.engine.resolution_min);
    println!(
        "{} steps, {} actions, {} failed segments, {:.1} s",
        s.recorded_steps,
        s.actions,
        s.failed_segments,
        outcome.elapsed_s
    );
    println!(
        "losses: mean {:.2} MW, max {:.2} MW at step {}, {:.0} MWh",
        s.loss_mean_mw,
        s.loss_max_mw,
        s.loss_max_step.map_or("-".into(), |k| k.to_string()),
        s.loss_energy_mwh
    );

    let first = store.states.first().map_or(0, |x| x.step);
    let last = store.states.last().map_or(0, |x| x.step);
    let mut counts: Vec<_> = switching_counts(&store.actions, first.saturating_sub(1), last).into_iter().collect();
    counts.sort_by_key(|(_, c)| std::cmp::Reverse(c.tap_ops + c.shunt_ops + c.starts + c.stops));
    println!("busiest devices");
    for (device, c) in counts.iter().take(8) {
        println!(
            "  {device:<8} taps {:>3} shunt {:>3} starts {:>2} stops {:>2}",
            c.tap_ops, c.shunt_ops, c.starts, c.stops
        );
    }
    println!("run directory: {}", paths.dir.display());
    Ok(())
}
