//! Split the on-peak price into recharge cost and storage fixed-cost
//! premia, both from hand-picked prices and at the solved equilibrium.

use peakload::analytics::{decompose_onpeak_price, PriceDecomposition, SolvedProgram};
use peakload::Scenario;

fn main() -> peakload::Result<()> {
    let s = Scenario::from_json_str(include_str!("../scenarios/paper_table1.json"))?;
    let storage = s.storage.expect("bundled scenario has storage");

    // off-peak price pinned at the baseload cost
    let d = PriceDecomposition::from_prices(0.0, 20.0, &storage, s.cycles_n, 4.0);
    println!("with lambda_offp = 20:");
    println!("  efficiency term      {:.1} $/MWh", d.variable_component);
    println!("  fixed-cost premium   {:.1} $/MWh", d.fixed_component());
    println!("  implied lambda_onp   {:.1} $/MWh", d.predicted_onpeak());

    let solved = SolvedProgram::solve(&s)?;
    let d = decompose_onpeak_price(&solved, &s)?;
    println!("at the equilibrium:");
    println!(
        "  {:.3} = {:.3} (lambda_offp/eta) + {:.3} (energy, per event) + {:.3} (power, per peak hour)",
        d.lambda_onp, d.variable_component, d.fixed_energy_component, d.fixed_power_component
    );
    println!(
        "  relative residual {:.1e}, assumptions hold: {}",
        d.relative_residual(),
        d.assumptions_hold
    );

    // only the spread between periods matters: shifting both intercepts
    // moves both prices but leaves the identity intact
    let mut shifted = s.clone();
    for p in &mut shifted.periods {
        p.demand = p.demand.shifted(15.0);
    }
    let d2 = decompose_onpeak_price(&SolvedProgram::solve(&shifted)?, &shifted)?;
    println!(
        "intercepts +15: lambda_onp {:.3}, lambda_offp {:.3}, residual {:.1e}",
        d2.lambda_onp,
        d2.lambda_offp,
        d2.relative_residual()
    );
    Ok(())
}
