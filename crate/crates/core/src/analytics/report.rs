use serde::Serialize;

use super::{
    check_assumptions, check_cost_recovery, decompose_onpeak_price, peaker_parity, sigma_pattern, welfare_report,
    AssumptionReport, CostRecoveryLedger, ParityReport, PriceDecomposition, SigmaReport, SolvedProgram, WelfareReport,
};
use crate::error::Result;
use crate::model::{choke_warnings, scenario_warnings, PeriodLabel, Scenario};
use crate::solver::{kkt_residuals, KktReport, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedQuantity {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodDispatch {
    pub label: PeriodLabel,
    pub duration_hours: f64,
    /// $/MWh.
    pub price: f64,
    /// MW.
    pub consumption: f64,
    pub generation: Vec<NamedQuantity>,
    pub charge: Option<f64>,
    pub discharge: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Capacities {
    /// MW per generator, in scenario order.
    pub generators: Vec<NamedQuantity>,
    /// MW.
    pub storage_power: Option<f64>,
    /// MWh.
    pub storage_energy: Option<f64>,
}

/// Everything known about one solved scenario.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub name: String,
    pub with_storage: bool,
    /// Dollars per cycle.
    pub objective: f64,
    pub iterations: usize,
    pub periods: Vec<PeriodDispatch>,
    pub capacities: Capacities,
    pub welfare: WelfareReport,
    pub kkt: KktReport,
    pub assumptions: AssumptionReport,
    pub decomposition: Option<PriceDecomposition>,
    pub parity: Option<ParityReport>,
    pub cost_recovery: Option<CostRecoveryLedger>,
    pub sigma: Option<SigmaReport>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub scenario: Scenario,
    #[serde(skip)]
    pub solved: SolvedProgram,
}

impl EquilibriumReport {
    pub fn period(&self, label: PeriodLabel) -> &PeriodDispatch {
        self.periods
            .iter()
            .find(|p| p.label == label)
            .expect("reports always carry both periods")
    }

    pub fn price(&self, label: PeriodLabel) -> f64 {
        self.period(label).price
    }

    pub fn generator_capacity(&self, name: &str) -> Option<f64> {
        self.capacities
            .generators
            .iter()
            .find(|g| g.name == name)
            .map(|g| g.value)
    }

    pub fn generation(&self, name: &str, label: PeriodLabel) -> Option<f64> {
        self.period(label)
            .generation
            .iter()
            .find(|g| g.name == name)
            .map(|g| g.value)
    }
}

pub fn solve_equilibrium(s: &Scenario) -> Result<EquilibriumReport> {
    solve_equilibrium_with(s, &SolverOptions::default())
}

pub fn solve_equilibrium_with(s: &Scenario, opts: &SolverOptions) -> Result<EquilibriumReport> {
    let solved = SolvedProgram::solve_with(s, opts)?;
    let with_storage = s.storage.is_some();

    let periods: Vec<PeriodDispatch> = s
        .period_pair()?
        .iter()
        .map(|p| PeriodDispatch {
            label: p.label,
            duration_hours: p.duration,
            price: solved.price(p.label),
            consumption: solved.consumption(p.label),
            generation: s
                .generators
                .iter()
                .enumerate()
                .map(|(g, tech)| NamedQuantity {
                    name: tech.name.clone(),
                    value: solved.generation(g, p.label),
                })
                .collect(),
            charge: with_storage.then(|| solved.charge(p.label)),
            discharge: with_storage.then(|| solved.discharge(p.label)),
        })
        .collect();
    let capacities = Capacities {
        generators: s
            .generators
            .iter()
            .enumerate()
            .map(|(g, tech)| NamedQuantity {
                name: tech.name.clone(),
                value: solved.generator_capacity(g),
            })
            .collect(),
        storage_power: with_storage.then(|| solved.storage_power()),
        storage_energy: with_storage.then(|| solved.storage_energy()),
    };

    let mut warnings: Vec<String> = scenario_warnings(s).iter().map(ToString::to_string).collect();
    let consumption: Vec<_> = periods.iter().map(|p| (p.label, p.consumption)).collect();
    warnings.extend(choke_warnings(s, &consumption).iter().map(ToString::to_string));

    let assumptions = check_assumptions(&solved, s)?;
    let (decomposition, cost_recovery, sigma) = if with_storage {
        (
            Some(decompose_onpeak_price(&solved, s)?),
            Some(check_cost_recovery(&solved, s)?),
            Some(sigma_pattern(&solved, s)?),
        )
    } else {
        (None, None, None)
    };
    if with_storage && !assumptions.all_hold() {
        warnings.push(
            "cycling assumptions do not all hold; price decomposition and cost recovery are informational".into(),
        );
    }
    let parity = if s.generators.is_empty() {
        None
    } else {
        Some(peaker_parity(&solved, s)?)
    };

    Ok(EquilibriumReport {
        name: s.name.clone().unwrap_or_else(|| "scenario".into()),
        with_storage,
        objective: solved.solution.objective,
        iterations: solved.solution.iterations,
        periods,
        capacities,
        welfare: welfare_report(&solved, s)?,
        kkt: kkt_residuals(&solved.program, &solved.solution)?,
        assumptions,
        decomposition,
        parity,
        cost_recovery,
        sigma,
        warnings,
        scenario: s.clone(),
        solved,
    })
}
