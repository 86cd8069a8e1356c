//! Optimality residuals of a primal-dual pair.

use serde::Serialize;

use super::{PrimalDualSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::model::PeriodLabel;
use crate::program::{ConstraintKind, QuadraticProgram, Sense, VariableKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityEntry {
    pub variable: String,
    /// `∂f/∂x_j − Σ_i y_i a_ij`.
    pub residual: f64,
}

/// The four storage stationarity conditions, evaluated from named duals and
/// scenario parameters rather than from the assembled matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StorageConditions {
    /// `∂L/∂q⁺_i` for on-peak and off-peak.
    pub charge: [f64; 2],
    /// `∂L/∂q⁻_i` for on-peak and off-peak.
    pub discharge: [f64; 2],
    /// `−I_{s,q}/n + Σ_i T_i (σ⁺_i + σ⁻_i)`. Omits the non-negativity dual of
    /// `K_s`, so it vanishes only when storage power is built.
    pub storage_power: f64,
    /// `−I_{s,E}/n + γ⁺ + γ⁻`, likewise only when energy capacity is built.
    pub storage_energy: f64,
}

impl StorageConditions {
    pub fn max_abs(&self) -> f64 {
        self.charge
            .iter()
            .chain(self.discharge.iter())
            .chain([self.storage_power, self.storage_energy].iter())
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    pub stationarity: Vec<StationarityEntry>,
    pub max_stationarity: f64,
    pub max_primal_violation: f64,
    /// Largest negative part of an inequality dual.
    pub max_dual_violation: f64,
    /// Largest `|y_i · slack_i|` over inequality rows.
    pub max_complementarity: f64,
    /// `f(x) − L(x, y)`; zero at a KKT point.
    pub duality_gap: f64,
    pub storage: Option<StorageConditions>,
}

impl KktReport {
    pub fn passes(&self, opts: &SolverOptions) -> bool {
        self.max_stationarity <= opts.stationarity_tol
            && self.max_primal_violation <= opts.feasibility_tol
            && self.max_dual_violation <= opts.feasibility_tol
            && self.max_complementarity <= opts.complementarity_tol
    }
}

pub fn kkt_residuals(qp: &QuadraticProgram, sol: &PrimalDualSolution) -> Result<KktReport> {
    let n = qp.num_variables();
    let m = qp.num_rows();
    if sol.x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: sol.x.len(),
        });
    }
    if sol.duals.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: sol.duals.len(),
        });
    }
    let grad = qp.gradient(&sol.x)?;
    let residuals = qp.row_residuals(&sol.x)?;

    let stationarity: Vec<StationarityEntry> = qp
        .variables
        .iter()
        .map(|v| {
            let j = v.column;
            let aty: f64 = (0..m).map(|i| qp.constraints[(i, j)] * sol.duals[i]).sum();
            StationarityEntry {
                variable: v.name.clone(),
                residual: grad[j] - aty,
            }
        })
        .collect();
    let max_stationarity = stationarity.iter().fold(0.0_f64, |a, e| a.max(e.residual.abs()));

    let mut max_primal_violation: f64 = 0.0;
    let mut max_dual_violation: f64 = 0.0;
    let mut max_complementarity: f64 = 0.0;
    for row in &qp.rows {
        let r = residuals[row.row];
        let y = sol.duals[row.row];
        match row.sense {
            Sense::Equal => max_primal_violation = max_primal_violation.max(r.abs()),
            Sense::LessEqual => {
                max_primal_violation = max_primal_violation.max(r);
                max_dual_violation = max_dual_violation.max(-y);
                max_complementarity = max_complementarity.max((y * r).abs());
            }
        }
    }
    let objective = qp.objective_value(&sol.x)?;
    let lagrangian = objective - residuals.iter().zip(&sol.duals).map(|(r, y)| r * y).sum::<f64>();

    Ok(KktReport {
        stationarity,
        max_stationarity,
        max_primal_violation,
        max_dual_violation,
        max_complementarity,
        duality_gap: objective - lagrangian,
        storage: storage_conditions(qp, &sol.duals),
    })
}

fn storage_conditions(qp: &QuadraticProgram, duals: &[f64]) -> Option<StorageConditions> {
    let scenario = qp.scenario()?;
    let storage = scenario.storage?;
    qp.column(VariableKind::StoragePower)?;
    let n = f64::from(scenario.cycles_n);
    let eta = storage.efficiency;
    let dual = |kind| qp.row(kind).map(|r| duals[r]);
    let mu = dual(ConstraintKind::RoundTrip)?;
    let gamma_plus = dual(ConstraintKind::EnergyCharge)?;
    let gamma_minus = dual(ConstraintKind::EnergyDischarge)?;

    let mut charge = [0.0; 2];
    let mut discharge = [0.0; 2];
    let mut power_sum = 0.0;
    for (i, label) in PeriodLabel::ALL.into_iter().enumerate() {
        let t = scenario.period(label)?.duration;
        let lambda = dual(ConstraintKind::Balance { period: label })?;
        let sigma_plus = dual(ConstraintKind::ChargeMax { period: label })?;
        let sigma_minus = dual(ConstraintKind::DischargeMax { period: label })?;
        let zeta_plus = dual(ConstraintKind::ChargeMin { period: label })?;
        let zeta_minus = dual(ConstraintKind::DischargeMin { period: label })?;
        charge[i] = -lambda * t - sigma_plus * t + zeta_plus * t + mu * eta * t - gamma_plus * t * eta;
        discharge[i] = lambda * t - sigma_minus * t + zeta_minus * t - mu * t - gamma_minus * t;
        power_sum += t * (sigma_plus + sigma_minus);
    }
    Some(StorageConditions {
        charge,
        discharge,
        storage_power: -storage.power_cost / n + power_sum,
        storage_energy: -storage.energy_cost / n + gamma_plus + gamma_minus,
    })
}
