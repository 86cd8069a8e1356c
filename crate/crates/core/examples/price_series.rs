//! 24-hour step price profiles with and without storage, and where storage
//! raises or lowers the price.

use peakload::cli::emit_price_series;
use peakload::{solve_equilibrium, Scenario};

fn main() -> peakload::Result<()> {
    let s = Scenario::from_json_str(include_str!("../scenarios/paper_table1.json"))?;
    let with = solve_equilibrium(&s)?;
    let without = solve_equilibrium(&s.without_storage())?;
    let series = emit_price_series(&with, Some(&without), 17.0);

    for named in &series.series {
        println!("{}", named.name);
        for step in &named.steps {
            println!(
                "  {:>4}-{:<4} {:>8.2} $/MWh",
                step.hour_start, step.hour_end, step.price
            );
        }
    }
    println!("difference");
    for step in &series.difference {
        let effect = if step.price > 0.0 { "raises" } else { "lowers" };
        println!(
            "  {:>4}-{:<4} {:>+8.2} $/MWh (storage {effect} the price)",
            step.hour_start, step.hour_end, step.price
        );
    }
    Ok(())
}
