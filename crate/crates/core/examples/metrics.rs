//! Analyzer metrics over a finished run directory: voltage statistics,
//! flexibility, reserves and a switching summary for one window.
//!
//!     cargo run --example week_run
//!     cargo run --example metrics [-- <run-dir> <window>]

use std::path::PathBuf;

use qsts::analyzer::MetricWindow;
use qsts::io::{analyze, RunDirectory};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../runs/week"));
    let window: MetricWindow = args.next().as_deref().unwrap_or("days:2035-01-09..2035-01-10").parse()?;
    let run = RunDirectory::open(&dir)?;
    println!("run {} ({} states)", dir.display(), run.store.states.len());

    let metrics: Vec<String> = ["voltage", "flexibility", "reserves", "switching"].map(String::from).to_vec();
    let report = analyze(&run, &metrics, &window)?;

    if let Some(buses) = report["voltage"].as_array() {
        let mut worst: Vec<&serde_json::Value> = buses.iter().collect();
        worst.sort_by(|a, b| {
            let key = |v: &serde_json::Value| v["min"].as_f64().unwrap_or(f64::NAN);
            key(a).total_cmp(&key(b))
        });
        println!("\nlowest buses");
        for v in worst.iter().take(5) {
            println!(
                "  {:<5} min {:.4} median {:.4} max {:.4}  excursions {} longest {}",
                v["bus"].as_str().unwrap_or("?"),
                v["min"].as_f64().unwrap_or(f64::NAN),
                v["median"].as_f64().unwrap_or(f64::NAN),
                v["max"].as_f64().unwrap_or(f64::NAN),
                v["excursions"],
                v["longest_run"]
            );
        }
    }
    for key in ["flexibility", "reserves"] {
        println!("{key}: {}", serde_json::to_string(&report[key])?);
    }
    println!("\nswitching: {}", serde_json::to_string(&report["switching"])?);
    Ok(())
}
