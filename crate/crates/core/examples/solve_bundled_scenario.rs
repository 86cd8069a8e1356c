//! Solve the bundled two-period system with and without storage and print
//! prices, dispatch and capacities.

use peakload::model::PeriodLabel;
use peakload::{solve_equilibrium, Scenario};

fn main() -> peakload::Result<()> {
    let with = Scenario::from_json_str(include_str!("../scenarios/paper_table1.json"))?;
    let without = with.without_storage();
    // solver round-off can leave values like -1e-27
    let gw = |mw: f64| (mw / 1e3).max(0.0);

    for s in [&with, &without] {
        let r = solve_equilibrium(s)?;
        println!(
            "{} storage ({} iterations)",
            if r.with_storage { "with" } else { "without" },
            r.iterations
        );
        for label in PeriodLabel::ALL {
            let p = r.period(label);
            print!(
                "  {label:<9} lambda {:>8.2} $/MWh  ell {:>6.2} GW",
                p.price,
                gw(p.consumption)
            );
            for g in &p.generation {
                print!("  {} {:>5.2}", g.name, gw(g.value));
            }
            if let (Some(c), Some(d)) = (p.charge, p.discharge) {
                print!("  charge {:.2} discharge {:.2}", gw(c), gw(d));
            }
            println!();
        }
        for k in &r.capacities.generators {
            println!("  K_{:<9} {:>6.2} GW", k.name, gw(k.value));
        }
        if let (Some(ks), Some(e)) = (r.capacities.storage_power, r.capacities.storage_energy) {
            println!("  K_s {:.2} GW  E {:.2} GWh  ({:.2} h)", ks / 1e3, e / 1e3, e / ks);
        }
        println!("  net welfare {:.0} $/year", r.welfare.annual.net_welfare);
    }
    Ok(())
}
