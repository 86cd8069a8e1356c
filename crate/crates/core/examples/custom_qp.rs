//! The active-set solver on a hand-written concave program:
//! maximise −(x−3)² − (y−2)² subject to x + y ≤ 4, x ≥ 0, y ≥ 0.

use nalgebra::{dmatrix, dvector};
use peakload::program::QuadraticProgram;
use peakload::solver::kkt_residuals;

fn main() -> peakload::Result<()> {
    // ½xᵀQx + cᵀx with constants dropped
    let qp = QuadraticProgram::from_dense(
        dmatrix![-2.0, 0.0; 0.0, -2.0],
        dvector![6.0, 4.0],
        None,
        Some((dmatrix![1.0, 1.0; -1.0, 0.0; 0.0, -1.0], dvector![4.0, 0.0, 0.0])),
    )?;
    let sol = peakload::solve(&qp)?;
    println!("x = {:.4?}, objective {:.4}", sol.x, sol.objective);
    println!(
        "duals {:.4?}, active rows {:?}, {} iterations",
        sol.duals, sol.active_set, sol.iterations
    );
    let kkt = kkt_residuals(&qp, &sol)?;
    println!(
        "stationarity {:.1e}, feasibility {:.1e}, complementarity {:.1e}",
        kkt.max_stationarity, kkt.max_primal_violation, kkt.max_complementarity
    );
    Ok(())
}
