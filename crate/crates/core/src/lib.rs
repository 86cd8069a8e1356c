//! Welfare-maximising capacity investment, dispatch and energy prices for a
//! two-period (on-peak / off-peak) electricity system with baseload and
//! peaking generators and duration-limited storage.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: scenario types, demand calibration and validation.
//! * [`program`]: assembly of the welfare-maximisation QP with named columns
//!   and rows.
//! * [`solver`]: a dense active-set QP solver returning primal values and
//!   constraint duals, plus KKT residual checks.
//! * [`analytics`]: closed-form price and cost-recovery relations evaluated
//!   against a solved equilibrium.
//! * [`oracle`]: brute-force grid search with closed-form dispatch, sharing
//!   no code with the solver.
//! * [`cli`]: the `run` command, report tables and plot data.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod model;
pub mod oracle;
pub mod program;
pub mod solver;

pub use analytics::{solve_equilibrium, EquilibriumReport};
pub use error::{Error, Result};
pub use model::{calibrate_demand, gross_surplus, validate_scenario, LinearDemand, Period, PeriodLabel, Scenario};
pub use program::{build_program, QuadraticProgram};
pub use solver::{kkt_residuals, solve, PrimalDualSolution};
