//! Solves every bundled case from a flat start and prints voltages, flows
//! and losses of the 30-bus case.
//!
//!     cargo run --example power_flow

use qsts::cases;
use qsts::network::Grid;
use qsts::powerflow::{branch_flows, solve_with_fallbacks, total_losses, PowerFlowProblem, PowerFlowSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let settings = PowerFlowSettings::default();
    for model in cases::powerflow_cases() {
        let grid = Grid::new(model)?;
        let problem = PowerFlowProblem::snapshot(&grid)?;
        let r = solve_with_fallbacks(&problem, &problem.flat_start(), &settings)?;
        let flows = branch_flows(&grid, &grid.initial_settings(), &r.voltages);
        println!(
            "{:<10} {:>3} buses  {:?} in {} iterations, mismatch {:.1e} pu, losses {:.3} MW",
            grid.name,
            grid.bus_count(),
            r.rung,
            r.iterations,
            r.max_mismatch,
            total_losses(&flows)
        );
    }

    let grid = Grid::new(cases::desk30())?;
    let problem = PowerFlowProblem::snapshot(&grid)?;
    let r = solve_with_fallbacks(&problem, &problem.flat_start(), &settings)?;
    println!("\n{:<6} {:>8} {:>9}", "bus", "|V| pu", "angle deg");
    for (i, b) in grid.buses.iter().enumerate() {
        println!("{:<6} {:>8.4} {:>9.3}", b.id, r.voltages.vm[i], r.voltages.va[i].to_degrees());
    }
    let mut flows = branch_flows(&grid, &grid.initial_settings(), &r.voltages);
    flows.sort_by(|a, b| b.mva.total_cmp(&a.mva));
    println!("\nmost loaded elements");
    for f in flows.iter().take(5) {
        let rating = f.rating.map(|x| format!("{x:.0}")).unwrap_or_else(|| "-".into());
        println!("{:<6} {:>8.1} MW {:>8.1} MVA  rating {rating}", f.id, f.p_from, f.mva);
    }
    Ok(())
}
