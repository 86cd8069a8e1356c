//! How storage sizing and the on-peak price respond to the storage energy
//! capacity cost.

use peakload::model::PeriodLabel;
use peakload::{solve_equilibrium, Scenario};

fn main() -> peakload::Result<()> {
    let base = Scenario::from_json_str(include_str!("../scenarios/paper_table1.json"))?;
    println!(
        "{:>10} {:>8} {:>8} {:>8} {:>9} {:>9}",
        "I_sE", "K_s GW", "E GWh", "K_P GW", "l_onp", "l_offp"
    );
    for factor in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let mut s = base.clone();
        if let Some(st) = s.storage.as_mut() {
            st.energy_cost *= factor;
        }
        let r = solve_equilibrium(&s)?;
        println!(
            "{:>10.0} {:>8.3} {:>8.3} {:>8.3} {:>9.2} {:>9.2}",
            s.storage.map_or(0.0, |st| st.energy_cost),
            r.capacities.storage_power.unwrap_or(0.0) / 1e3,
            r.capacities.storage_energy.unwrap_or(0.0) / 1e3,
            r.generator_capacity("peaker").unwrap_or(0.0) / 1e3,
            r.price(PeriodLabel::OnPeak),
            r.price(PeriodLabel::OffPeak),
        );
    }
    Ok(())
}
