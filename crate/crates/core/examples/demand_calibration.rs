//! Linear demand from a baseline point and a point elasticity, and the
//! consumer value it implies.

use peakload::{calibrate_demand, gross_surplus};

fn main() -> peakload::Result<()> {
    for (load, price, elasticity) in [(15_000.0, 100.0, 0.1), (10_000.0, 20.0, 0.1), (10_000.0, 20.0, 0.5)] {
        let d = calibrate_demand(load, price, elasticity)?;
        println!("{load} MW at {price} $/MWh, elasticity {elasticity}:");
        println!(
            "  p = {:.1} - {:.5} l, choke at {:.0} MW",
            d.intercept,
            d.slope,
            d.choke_quantity()
        );
        println!("  gross surplus at baseline {:.0} $/h", gross_surplus(&d, load)?);
        println!("  consumption at 1.2x price {:.0} MW", d.quantity_at(1.2 * price));
    }
    Ok(())
}
