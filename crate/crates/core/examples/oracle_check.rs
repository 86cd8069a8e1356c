//! Compare the solver optimum with an exhaustive capacity grid search that
//! dispatches each grid point in closed form.

use std::time::Instant;

use peakload::oracle::{grid_search, inner_dispatch, GridSpec};
use peakload::{solve_equilibrium, Scenario};

fn main() -> peakload::Result<()> {
    let s = Scenario::from_json_str(include_str!("../scenarios/paper_table1.json"))?;
    for sys in [s.clone(), s.without_storage()] {
        let report = solve_equilibrium(&sys)?;
        let grid = GridSpec::for_scenario(&sys)?;
        let start = Instant::now();
        let r = grid_search(&sys, &grid)?;
        println!(
            "{} storage: solver {:.0} $/cycle, grid {:.0} $/cycle, gap {:.1e}, {} points in {:.2?}",
            if report.with_storage { "with" } else { "without" },
            report.objective,
            r.best_welfare,
            (report.objective - r.best_welfare) / report.objective,
            r.evaluations,
            start.elapsed()
        );
        println!("  grid optimum {:?}", r.best_point);
    }

    // operating one fixed fleet
    let mut caps = grid_search(
        &s,
        &GridSpec {
            points: 11,
            passes: 1,
            ..GridSpec::for_scenario(&s)?
        },
    )?
    .best_point;
    caps.storage_energy *= 0.5;
    let d = inner_dispatch(&caps, &s)?;
    println!(
        "half the energy capacity: prices {:.2?}, discharge {:.0?} MW",
        d.price, d.discharge
    );
    Ok(())
}
