use serde::Serialize;

use super::{SolvedProgram, BINDING_TOL, DUAL_ZERO_TOL, IDENTITY_REL_TOL};
use crate::error::{Error, Result};
use crate::model::{PeriodLabel, Scenario, StorageTech};
use crate::program::ConstraintKind;

use PeriodLabel::{OffPeak, OnPeak};

/// On-peak price split into the cost of recharging energy and the fixed-cost
/// premium of storage power and energy capacity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceDecomposition {
    pub lambda_onp: f64,
    pub lambda_offp: f64,
    /// `λ_offp / η`.
    pub variable_component: f64,
    /// `I_{s,E} / n`, recovered once per peak event.
    pub fixed_energy_component: f64,
    /// `I_{s,q} / (n·T_onp)`, spread over peak hours.
    pub fixed_power_component: f64,
    /// `λ_onp − (variable + fixed energy + fixed power)`.
    pub residual: f64,
    /// Whether all three cycling assumptions held at the solution; the
    /// identity is only expected to be tight when they do.
    pub assumptions_hold: bool,
}

impl PriceDecomposition {
    pub fn from_prices(
        lambda_onp: f64,
        lambda_offp: f64,
        storage: &StorageTech,
        cycles_n: u32,
        onpeak_hours: f64,
    ) -> Self {
        let n = f64::from(cycles_n);
        let variable_component = lambda_offp / storage.efficiency;
        let fixed_energy_component = storage.energy_cost / n;
        let fixed_power_component = storage.power_cost / (n * onpeak_hours);
        let predicted = variable_component + fixed_energy_component + fixed_power_component;
        Self {
            lambda_onp,
            lambda_offp,
            variable_component,
            fixed_energy_component,
            fixed_power_component,
            residual: lambda_onp - predicted,
            assumptions_hold: true,
        }
    }

    pub fn fixed_component(&self) -> f64 {
        self.fixed_energy_component + self.fixed_power_component
    }

    pub fn predicted_onpeak(&self) -> f64 {
        self.variable_component + self.fixed_component()
    }

    pub fn relative_residual(&self) -> f64 {
        self.residual.abs() / self.lambda_onp.abs().max(f64::MIN_POSITIVE)
    }

    pub fn holds(&self) -> bool {
        self.relative_residual() <= IDENTITY_REL_TOL
    }
}

pub fn decompose_onpeak_price(solved: &SolvedProgram, s: &Scenario) -> Result<PriceDecomposition> {
    let storage = s
        .storage
        .as_ref()
        .ok_or(Error::NotApplicable("price decomposition needs a storage technology"))?;
    let [on, _] = s.period_pair()?;
    let mut d = PriceDecomposition::from_prices(
        solved.price(OnPeak),
        solved.price(OffPeak),
        storage,
        s.cycles_n,
        on.duration,
    );
    d.assumptions_hold = check_assumptions(solved, s)?.all_hold();
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityMode {
    /// Peaker capacity is built, so the on-peak price must equal its full cost.
    Equality,
    /// No peaker capacity: the on-peak price may not exceed the entry price.
    EntryUnprofitable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParityReport {
    pub peaker: String,
    /// `c_P + I_P / (n·T_onp)`.
    pub parity_price: f64,
    pub lambda_onp: f64,
    pub peaker_capacity: f64,
    pub mode: ParityMode,
    /// `λ_onp − parity_price`.
    pub deviation: f64,
}

impl ParityReport {
    pub fn holds(&self, price_tol: f64) -> bool {
        match self.mode {
            ParityMode::Equality => self.deviation.abs() <= price_tol,
            ParityMode::EntryUnprofitable => self.deviation <= price_tol,
        }
    }
}

pub fn peaker_parity(solved: &SolvedProgram, s: &Scenario) -> Result<ParityReport> {
    let (gen, peaker) = s
        .peaker()
        .ok_or(Error::NotApplicable("peaker parity needs at least one generator"))?;
    let [on, _] = s.period_pair()?;
    let n = f64::from(s.cycles_n);
    let parity_price = peaker.variable_cost + peaker.investment_cost / (n * on.duration);
    let lambda_onp = solved.price(OnPeak);
    let peaker_capacity = solved.generator_capacity(gen);
    Ok(ParityReport {
        peaker: peaker.name.clone(),
        parity_price,
        lambda_onp,
        peaker_capacity,
        mode: if peaker_capacity > BINDING_TOL {
            ParityMode::Equality
        } else {
            ParityMode::EntryUnprofitable
        },
        deviation: lambda_onp - parity_price,
    })
}

/// Annual storage revenues and costs at dual prices against its investment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRecoveryLedger {
    /// `I_{s,q}·K_s + I_{s,E}·E`, $/year.
    pub investment_total: f64,
    /// `n·λ_onp·T_onp·q⁻_onp`, $/year.
    pub onpeak_revenue: f64,
    /// `n·λ_offp·T_offp·q⁺_offp`, $/year.
    pub offpeak_cost: f64,
    pub operating_profit: f64,
    /// `operating_profit − investment_total`.
    pub gap: f64,
    /// `T_offp·q⁺_offp − T_onp·q⁻_onp/η`, MWh.
    pub energy_matching_residual: f64,
    /// `q⁻_onp − K_s`, MW.
    pub full_discharge_residual: f64,
    /// `E − K_s·T_onp`, MWh.
    pub energy_sizing_residual: f64,
    pub assumptions_hold: bool,
}

impl CostRecoveryLedger {
    pub fn relative_gap(&self) -> f64 {
        if self.investment_total > 0.0 {
            self.gap.abs() / self.investment_total
        } else {
            self.gap.abs()
        }
    }

    pub fn holds(&self) -> bool {
        self.relative_gap() <= IDENTITY_REL_TOL
    }

    /// The intermediate relations used in the break-even argument.
    pub fn intermediate_steps_hold(&self, tol: f64) -> bool {
        self.energy_matching_residual.abs() <= tol
            && self.full_discharge_residual.abs() <= tol
            && self.energy_sizing_residual.abs() <= tol
    }
}

pub fn check_cost_recovery(solved: &SolvedProgram, s: &Scenario) -> Result<CostRecoveryLedger> {
    let storage = s
        .storage
        .as_ref()
        .ok_or(Error::NotApplicable("cost recovery needs a storage technology"))?;
    let [on, off] = s.period_pair()?;
    let n = f64::from(s.cycles_n);
    let k_s = solved.storage_power();
    let e = solved.storage_energy();
    let discharge_on = solved.discharge(OnPeak);
    let charge_off = solved.charge(OffPeak);

    let investment_total = storage.power_cost * k_s + storage.energy_cost * e;
    let onpeak_revenue = n * solved.price(OnPeak) * on.duration * discharge_on;
    let offpeak_cost = n * solved.price(OffPeak) * off.duration * charge_off;
    let operating_profit = onpeak_revenue - offpeak_cost;
    Ok(CostRecoveryLedger {
        investment_total,
        onpeak_revenue,
        offpeak_cost,
        operating_profit,
        gap: operating_profit - investment_total,
        energy_matching_residual: off.duration * charge_off - on.duration * discharge_on / storage.efficiency,
        full_discharge_residual: discharge_on - k_s,
        energy_sizing_residual: e - k_s * on.duration,
        assumptions_hold: check_assumptions(solved, s)?.all_hold(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// Storage is built, charges off-peak and discharges on-peak.
    pub cycling: bool,
    pub storage_power: f64,
    pub charge_offp: f64,
    pub discharge_onp: f64,
    /// `T_onp < η·T_offp`.
    pub sufficient_offpeak_duration: bool,
    pub onpeak_hours: f64,
    pub efficiency_weighted_offpeak_hours: f64,
    /// Stored energy is fully discharged: `Σ q⁻T = Σ q⁺ηT`.
    pub no_carryover: bool,
    /// `Σ q⁺ηT − Σ q⁻T`, MWh left over per cycle.
    pub carryover_energy: f64,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.cycling && self.sufficient_offpeak_duration && self.no_carryover
    }
}

pub fn check_assumptions(solved: &SolvedProgram, s: &Scenario) -> Result<AssumptionReport> {
    let [on, off] = s.period_pair()?;
    let efficiency = s.storage.map_or(0.0, |st| st.efficiency);
    let storage_power = solved.storage_power();
    let charge_offp = solved.charge(OffPeak);
    let discharge_onp = solved.discharge(OnPeak);
    let mut charged = 0.0;
    let mut discharged = 0.0;
    for p in [on, off] {
        charged += solved.charge(p.label) * efficiency * p.duration;
        discharged += solved.discharge(p.label) * p.duration;
    }
    let carryover_energy = charged - discharged;
    Ok(AssumptionReport {
        cycling: storage_power > BINDING_TOL && charge_offp > BINDING_TOL && discharge_onp > BINDING_TOL,
        storage_power,
        charge_offp,
        discharge_onp,
        sufficient_offpeak_duration: on.duration < efficiency * off.duration,
        onpeak_hours: on.duration,
        efficiency_weighted_offpeak_hours: efficiency * off.duration,
        no_carryover: carryover_energy.abs() <= BINDING_TOL * charged.abs().max(1.0),
        carryover_energy,
    })
}

/// Sign pattern of the storage power-limit duals and the aggregate
/// storage stationarity identities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaReport {
    /// `[σ⁺_onp, σ⁺_offp]`.
    pub sigma_plus: [f64; 2],
    /// `[σ⁻_onp, σ⁻_offp]`.
    pub sigma_minus: [f64; 2],
    /// `σ⁻_onp > 0` and the other three vanish.
    pub pattern_holds: bool,
    /// `Σ_i T_i (σ⁺_i + σ⁻_i)`.
    pub power_dual_sum: f64,
    /// `I_{s,q} / n`.
    pub power_cost_per_cycle: f64,
    /// `γ⁺ + γ⁻`.
    pub energy_dual_sum: f64,
    /// `I_{s,E} / n`.
    pub energy_cost_per_cycle: f64,
}

impl SigmaReport {
    pub fn power_identity_residual(&self) -> f64 {
        self.power_dual_sum - self.power_cost_per_cycle
    }

    pub fn energy_identity_residual(&self) -> f64 {
        self.energy_dual_sum - self.energy_cost_per_cycle
    }
}

pub fn sigma_pattern(solved: &SolvedProgram, s: &Scenario) -> Result<SigmaReport> {
    let storage = s
        .storage
        .as_ref()
        .ok_or(Error::NotApplicable("no storage power duals without storage"))?;
    if !solved.has_storage() {
        return Err(Error::NotApplicable("program has no storage rows"));
    }
    let [on, off] = s.period_pair()?;
    let n = f64::from(s.cycles_n);
    let sigma_plus = [on, off].map(|p| solved.dual(ConstraintKind::ChargeMax { period: p.label }));
    let sigma_minus = [on, off].map(|p| solved.dual(ConstraintKind::DischargeMax { period: p.label }));
    let power_dual_sum =
        on.duration * (sigma_plus[0] + sigma_minus[0]) + off.duration * (sigma_plus[1] + sigma_minus[1]);
    Ok(SigmaReport {
        sigma_plus,
        sigma_minus,
        pattern_holds: sigma_minus[0] > DUAL_ZERO_TOL
            && sigma_plus[0].abs() <= DUAL_ZERO_TOL
            && sigma_plus[1].abs() <= DUAL_ZERO_TOL
            && sigma_minus[1].abs() <= DUAL_ZERO_TOL,
        power_dual_sum,
        power_cost_per_cycle: storage.power_cost / n,
        energy_dual_sum: solved.dual(ConstraintKind::EnergyCharge) + solved.dual(ConstraintKind::EnergyDischarge),
        energy_cost_per_cycle: storage.energy_cost / n,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::model::{calibrate_demand, LinearDemand};

    fn bundled() -> Scenario {
        Scenario::from_json_str(include_str!("../../scenarios/paper_table1.json")).unwrap()
    }

    fn lithium_ion_storage() -> StorageTech {
        StorageTech {
            power_cost: 36_000.0,
            energy_cost: 31_000.0,
            efficiency: 0.85,
        }
    }

    #[test]
    fn premium_figures_at_twenty_dollars_offpeak() {
        let d = PriceDecomposition::from_prices(f64::NAN, 20.0, &lithium_ion_storage(), 365, 4.0);
        assert_abs_diff_eq!(d.variable_component, 23.5, epsilon = 0.05);
        assert_abs_diff_eq!(d.fixed_component(), 109.6, epsilon = 0.05);
    }

    #[test]
    fn lossless_free_storage_equalises_prices() {
        let free = StorageTech {
            power_cost: 0.0,
            energy_cost: 0.0,
            efficiency: 1.0,
        };
        let d = PriceDecomposition::from_prices(35.0, 35.0, &free, 365, 4.0);
        assert_eq!(d.fixed_component(), 0.0);
        assert_eq!(d.variable_component, 35.0);
        assert_eq!(d.residual, 0.0);
    }

    #[test]
    fn solved_decomposition_is_tight() {
        let s = bundled();
        let solved = SolvedProgram::solve(&s).unwrap();
        let d = decompose_onpeak_price(&solved, &s).unwrap();
        assert!(d.assumptions_hold);
        // λ_offp ≈ 28 gives ≈ 142.5 with the rounded price
        let rounded = PriceDecomposition::from_prices(142.0, 28.0, &lithium_ion_storage(), 365, 4.0);
        assert_abs_diff_eq!(rounded.predicted_onpeak(), 142.53, epsilon = 0.01);
        assert!(d.residual.abs() <= 0.01, "{d:?}");
        assert!(d.holds());
    }

    #[test]
    fn decomposition_needs_storage() {
        let s = bundled().without_storage();
        let solved = SolvedProgram::solve(&s).unwrap();
        assert!(matches!(
            decompose_onpeak_price(&solved, &s),
            Err(Error::NotApplicable(_))
        ));
        assert!(matches!(check_cost_recovery(&solved, &s), Err(Error::NotApplicable(_))));
        assert!(matches!(sigma_pattern(&solved, &s), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn parity_without_storage_is_equality() {
        let s = bundled().without_storage();
        let solved = SolvedProgram::solve(&s).unwrap();
        let p = peaker_parity(&solved, &s).unwrap();
        assert_eq!(p.mode, ParityMode::Equality);
        assert_abs_diff_eq!(p.parity_price, 182.19, epsilon = 0.005);
        assert!(p.holds(1e-6), "{p:?}");
    }

    #[test]
    fn parity_with_storage_prices_peaker_out() {
        let s = bundled();
        let solved = SolvedProgram::solve(&s).unwrap();
        let p = peaker_parity(&solved, &s).unwrap();
        assert_eq!(p.mode, ParityMode::EntryUnprofitable);
        assert!(p.lambda_onp < p.parity_price);
        assert!(p.holds(0.0));
    }

    #[test]
    fn free_peaker_capacity_prices_at_marginal_cost() {
        let mut s = bundled();
        s.generators[1].investment_cost = 0.0;
        let solved = SolvedProgram::solve(&s).unwrap();
        let p = peaker_parity(&solved, &s).unwrap();
        assert_eq!(p.parity_price, 100.0);
    }

    #[test]
    fn cost_recovery_at_optimum() {
        let s = bundled();
        let solved = SolvedProgram::solve(&s).unwrap();
        let ledger = check_cost_recovery(&solved, &s).unwrap();
        assert!(ledger.assumptions_hold);
        assert!(ledger.relative_gap() <= 1e-4, "{ledger:?}");
        assert!(ledger.intermediate_steps_hold(1e-6), "{ledger:?}");
    }

    #[test]
    fn cost_recovery_gap_is_linear_in_onpeak_price() {
        let s = bundled();
        let mut solved = SolvedProgram::solve(&s).unwrap();
        let base = check_cost_recovery(&solved, &s).unwrap();
        let lambda = solved.price(OnPeak);
        solved.set_dual(ConstraintKind::Balance { period: OnPeak }, lambda + 1.0);
        let bumped = check_cost_recovery(&solved, &s).unwrap();
        let expected = 365.0 * 4.0 * solved.storage_power();
        assert!(((bumped.gap - base.gap) - expected).abs() <= 1e-6 * expected);
    }

    #[test]
    fn no_storage_built_gives_empty_ledger() {
        let mut s = bundled();
        s.storage.as_mut().unwrap().power_cost = 5e6;
        let solved = SolvedProgram::solve(&s).unwrap();
        assert!(solved.storage_power().abs() < 1e-12);
        let ledger = check_cost_recovery(&solved, &s).unwrap();
        assert!(ledger.investment_total.abs() < 1e-6);
        assert!(ledger.gap.abs() < 1e-6);
        assert!(ledger.onpeak_revenue.abs() < 1e-6);
        assert!(ledger.offpeak_cost.abs() < 1e-6);
        assert!(!ledger.assumptions_hold);
    }

    #[test]
    fn assumptions_on_bundled_solution() {
        let s = bundled();
        let solved = SolvedProgram::solve(&s).unwrap();
        let a = check_assumptions(&solved, &s).unwrap();
        assert!(a.sufficient_offpeak_duration);
        assert_abs_diff_eq!(a.efficiency_weighted_offpeak_hours, 17.0, epsilon = 1e-12);
        assert!(a.cycling);
        assert!(a.storage_power > 3_800.0);
        assert!(a.no_carryover);
        assert!(a.all_hold());
    }

    #[test]
    fn identical_demand_builds_no_storage() {
        let mut s = bundled();
        let d = calibrate_demand(10_000.0, 20.0, 0.1).unwrap();
        for p in &mut s.periods {
            p.demand = d;
        }
        let solved = SolvedProgram::solve(&s).unwrap();
        let a = check_assumptions(&solved, &s).unwrap();
        assert!(!a.cycling);
        assert!(solved.storage_power() <= BINDING_TOL);
    }

    #[test]
    fn short_offpeak_breaks_duration_assumption() {
        let mut s = bundled();
        s.periods[1].duration = 4.0;
        let solved = SolvedProgram::solve(&s).unwrap();
        let a = check_assumptions(&solved, &s).unwrap();
        assert!(!a.sufficient_offpeak_duration);
        assert!(!a.all_hold());
    }

    #[test]
    fn sigma_pattern_and_aggregate_identities() {
        let s = bundled();
        let solved = SolvedProgram::solve(&s).unwrap();
        let r = sigma_pattern(&solved, &s).unwrap();
        assert!(r.pattern_holds, "{r:?}");
        assert!(r.power_identity_residual().abs() <= 1e-7);
        assert!(r.energy_identity_residual().abs() <= 1e-7);
    }

    #[test]
    fn intercept_shift_keeps_decomposition_tight() {
        let s = bundled();
        let mut shifted = s.clone();
        for p in &mut shifted.periods {
            p.demand = LinearDemand::new(p.demand.intercept + 15.0, p.demand.slope).unwrap();
        }
        let a = decompose_onpeak_price(&SolvedProgram::solve(&s).unwrap(), &s).unwrap();
        let b = decompose_onpeak_price(&SolvedProgram::solve(&shifted).unwrap(), &shifted).unwrap();
        assert!(a.lambda_onp != b.lambda_onp);
        assert!((a.residual - b.residual).abs() <= 1e-6);
    }
}
