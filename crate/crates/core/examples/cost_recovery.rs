//! Storage and generator break-even at equilibrium prices, and the peaker
//! parity price with and without storage.

use peakload::analytics::{check_cost_recovery, peaker_parity, welfare_report, SolvedProgram};
use peakload::Scenario;

fn main() -> peakload::Result<()> {
    let s = Scenario::from_json_str(include_str!("../scenarios/paper_table1.json"))?;
    let solved = SolvedProgram::solve(&s)?;

    let ledger = check_cost_recovery(&solved, &s)?;
    println!("storage, $/year");
    println!("  on-peak revenue   {:>14.0}", ledger.onpeak_revenue);
    println!("  off-peak charging {:>14.0}", -ledger.offpeak_cost);
    println!("  operating profit  {:>14.0}", ledger.operating_profit);
    println!("  investment        {:>14.0}", ledger.investment_total);
    println!("  relative gap      {:>14.1e}", ledger.relative_gap());
    println!(
        "  E - K_s*T_onp {:.1e} MWh, q-_onp - K_s {:.1e} MW",
        ledger.energy_sizing_residual, ledger.full_discharge_residual
    );

    let w = welfare_report(&solved, &s)?;
    println!("profit net of investment, $/cycle");
    for (name, profit) in &w.generator_profit {
        println!("  {name:<10} {profit:.2e}");
    }
    println!("  storage    {:.2e}", w.storage_profit);

    for sys in [&s, &s.without_storage()] {
        let p = peaker_parity(&SolvedProgram::solve(sys)?, sys)?;
        println!(
            "{} storage: lambda_onp {:.2} vs {} entry price {:.2} ({:?})",
            if sys.storage.is_some() { "with" } else { "without" },
            p.lambda_onp,
            p.peaker,
            p.parity_price,
            p.mode
        );
    }
    Ok(())
}
