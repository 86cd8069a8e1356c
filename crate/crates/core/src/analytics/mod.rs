//! Closed-form price, parity and cost-recovery relations evaluated against a
//! solved equilibrium.
//!
//! Identities are always checked through dual aggregates such as
//! `γ⁺ + γ⁻` or `Σ T_i σ_i`; individual duals on a degenerate optimal face
//! (both energy rows binding with `E = K_s·T_onp`) are not unique.

mod identities;
mod report;
mod welfare;

use serde::Serialize;

pub use identities::{
    check_assumptions, check_cost_recovery, decompose_onpeak_price, peaker_parity, sigma_pattern, AssumptionReport,
    CostRecoveryLedger, ParityMode, ParityReport, PriceDecomposition, SigmaReport,
};
pub use report::{
    solve_equilibrium, solve_equilibrium_with, Capacities, EquilibriumReport, NamedQuantity, PeriodDispatch,
};
pub use welfare::{welfare_report, WelfareBreakdown, WelfareReport};

use crate::error::Result;
use crate::model::{PeriodLabel, Scenario};
use crate::program::{build_program, ConstraintKind, QuadraticProgram, VariableKind};
use crate::solver::{solve_with, PrimalDualSolution, SolverOptions};

/// Slack below which a row counts as binding, in MW or MWh.
pub const BINDING_TOL: f64 = 1e-6;

/// Dual magnitude below which a multiplier counts as zero.
pub const DUAL_ZERO_TOL: f64 = 1e-7;

/// Relative tolerance of the price decomposition and cost-recovery identities.
pub const IDENTITY_REL_TOL: f64 = 1e-4;

/// A program paired with its solution, with lookups by variable and row kind.
#[derive(Debug, Clone, Serialize)]
pub struct SolvedProgram {
    #[serde(skip)]
    pub program: QuadraticProgram,
    pub solution: PrimalDualSolution,
}

impl SolvedProgram {
    pub fn solve(s: &Scenario) -> Result<Self> {
        Self::solve_with(s, &SolverOptions::default())
    }

    pub fn solve_with(s: &Scenario, opts: &SolverOptions) -> Result<Self> {
        let program = build_program(s)?;
        let solution = solve_with(&program, opts)?;
        Ok(Self { program, solution })
    }

    /// Primal value of a column, zero when the program has no such column.
    pub fn value(&self, kind: VariableKind) -> f64 {
        self.program.column(kind).map_or(0.0, |c| self.solution.x[c])
    }

    /// Dual of a row, zero when the program has no such row.
    pub fn dual(&self, kind: ConstraintKind) -> f64 {
        self.program.row(kind).map_or(0.0, |r| self.solution.duals[r])
    }

    pub fn has_row(&self, kind: ConstraintKind) -> bool {
        self.program.row(kind).is_some()
    }

    /// Energy price of a period in $/MWh: the balance-row dual.
    pub fn price(&self, period: PeriodLabel) -> f64 {
        self.dual(ConstraintKind::Balance { period })
    }

    pub fn consumption(&self, period: PeriodLabel) -> f64 {
        self.value(VariableKind::Consumption { period })
    }

    pub fn generation(&self, gen: usize, period: PeriodLabel) -> f64 {
        self.value(VariableKind::Generation { gen, period })
    }

    pub fn charge(&self, period: PeriodLabel) -> f64 {
        self.value(VariableKind::Charge { period })
    }

    pub fn discharge(&self, period: PeriodLabel) -> f64 {
        self.value(VariableKind::Discharge { period })
    }

    pub fn generator_capacity(&self, gen: usize) -> f64 {
        self.value(VariableKind::GeneratorCapacity { gen })
    }

    pub fn storage_power(&self) -> f64 {
        self.value(VariableKind::StoragePower)
    }

    pub fn storage_energy(&self) -> f64 {
        self.value(VariableKind::StorageEnergy)
    }

    pub fn has_storage(&self) -> bool {
        self.program.column(VariableKind::StoragePower).is_some()
    }

    /// Overwrites a single dual; used to probe the sensitivity of checks.
    pub fn set_dual(&mut self, kind: ConstraintKind, value: f64) {
        if let Some(r) = self.program.row(kind) {
            self.solution.duals[r] = value;
        }
    }
}
