//! Domain types for the two-period system.
//!
//! Internal units are MW, MWh, hours, $/MWh and $/MW-year (or $/MWh-year for
//! stored-energy capacity). Scenario files use the same units.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear inverse demand `p(ℓ) = intercept − slope·ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DemandSpec", into = "DemandCoefficients")]
pub struct LinearDemand {
    /// Price at zero consumption, $/MWh.
    pub intercept: f64,
    /// $/MWh per MW of consumption.
    pub slope: f64,
}

impl LinearDemand {
    pub fn new(intercept: f64, slope: f64) -> Result<Self> {
        if !(intercept.is_finite() && intercept > 0.0) {
            return Err(Error::validation(
                "a",
                format!("intercept must be positive, got {intercept}"),
            ));
        }
        if !(slope.is_finite() && slope > 0.0) {
            return Err(Error::validation("b", format!("slope must be positive, got {slope}")));
        }
        Ok(Self { intercept, slope })
    }

    pub fn price(&self, consumption: f64) -> f64 {
        self.intercept - self.slope * consumption
    }

    /// Consumption at which the inverse demand equals `price`. May be
    /// negative above the intercept.
    pub fn quantity_at(&self, price: f64) -> f64 {
        (self.intercept - price) / self.slope
    }

    /// Consumption at which the price reaches zero.
    pub fn choke_quantity(&self) -> f64 {
        self.intercept / self.slope
    }

    pub fn gross_surplus(&self, consumption: f64) -> Result<f64> {
        gross_surplus(self, consumption)
    }

    /// Same vertical shift applied to the whole curve.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            intercept: self.intercept + delta,
            slope: self.slope,
        }
    }
}

/// Fits a linear inverse demand through `(baseline_load, baseline_price)` with
/// the given point elasticity magnitude `|dℓ/dp|·p/ℓ` at that point.
pub fn calibrate_demand(baseline_load: f64, baseline_price: f64, elasticity: f64) -> Result<LinearDemand> {
    for (field, value) in [
        ("baseline_load_mw", baseline_load),
        ("baseline_price", baseline_price),
        ("elasticity", elasticity),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::validation(field, format!("must be positive, got {value}")));
        }
    }
    let slope = baseline_price / (elasticity * baseline_load);
    let intercept = baseline_price * (1.0 + 1.0 / elasticity);
    LinearDemand::new(intercept, slope)
}

/// Area under the inverse demand curve from zero to `consumption`, $/h.
pub fn gross_surplus(demand: &LinearDemand, consumption: f64) -> Result<f64> {
    if consumption < 0.0 || consumption.is_nan() {
        return Err(Error::NegativeConsumption(consumption));
    }
    Ok(demand.intercept * consumption - 0.5 * demand.slope * consumption * consumption)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodLabel {
    OnPeak,
    OffPeak,
}

impl PeriodLabel {
    pub const ALL: [PeriodLabel; 2] = [PeriodLabel::OnPeak, PeriodLabel::OffPeak];

    /// Short tag used in variable and row names.
    pub fn tag(self) -> &'static str {
        match self {
            PeriodLabel::OnPeak => "onp",
            PeriodLabel::OffPeak => "offp",
        }
    }

    pub fn other(self) -> Self {
        match self {
            PeriodLabel::OnPeak => PeriodLabel::OffPeak,
            PeriodLabel::OffPeak => PeriodLabel::OnPeak,
        }
    }
}

impl fmt::Display for PeriodLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeriodLabel::OnPeak => "on_peak",
            PeriodLabel::OffPeak => "off_peak",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub label: PeriodLabel,
    /// Hours per cycle.
    #[serde(rename = "duration_hours")]
    pub duration: f64,
    pub demand: LinearDemand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorTech {
    pub name: String,
    /// $/MWh.
    pub variable_cost: f64,
    /// $/MW-year.
    #[serde(rename = "inv_cost_power")]
    pub investment_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageTech {
    /// $/MW-year.
    #[serde(rename = "inv_cost_power")]
    pub power_cost: f64,
    /// $/MWh-year.
    #[serde(rename = "inv_cost_energy")]
    pub energy_cost: f64,
    /// Round-trip efficiency in (0, 1].
    pub efficiency: f64,
}

/// A full problem instance. A scenario without storage is the counterfactual
/// system with conventional generation only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Peak cycles per year.
    pub cycles_n: u32,
    pub periods: Vec<Period>,
    pub generators: Vec<GeneratorTech>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<StorageTech>,
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::parse(text, Path::new("<memory>"))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| parse_error(text, path, &e))
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn period(&self, label: PeriodLabel) -> Option<&Period> {
        self.periods.iter().find(|p| p.label == label)
    }

    pub fn on_peak(&self) -> Option<&Period> {
        self.period(PeriodLabel::OnPeak)
    }

    pub fn off_peak(&self) -> Option<&Period> {
        self.period(PeriodLabel::OffPeak)
    }

    /// Both periods in `[on-peak, off-peak]` order, or an error naming the
    /// missing label.
    pub fn period_pair(&self) -> Result<[&Period; 2]> {
        let on = self
            .on_peak()
            .ok_or_else(|| Error::validation("periods", "missing on_peak period"))?;
        let off = self
            .off_peak()
            .ok_or_else(|| Error::validation("periods", "missing off_peak period"))?;
        Ok([on, off])
    }

    /// The generator with the highest variable cost; the last one in file
    /// order wins ties.
    pub fn peaker(&self) -> Option<(usize, &GeneratorTech)> {
        self.generators
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, &GeneratorTech)>, (i, g)| match best {
                Some((_, b)) if b.variable_cost > g.variable_cost => best,
                _ => Some((i, g)),
            })
    }

    /// Same system with the storage technology removed.
    pub fn without_storage(&self) -> Self {
        Self {
            storage: None,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let violations = validate_scenario(self);
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(
                violations.iter().map(ToString::to_string).collect(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn violation(field: impl Into<String>, message: impl Into<String>) -> Violation {
    Violation {
        field: field.into(),
        message: message.into(),
    }
}

/// Checks every type invariant. An empty list means the scenario is valid.
pub fn validate_scenario(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();

    if s.cycles_n < 1 {
        out.push(violation("cycles_n", "must be at least 1"));
    }

    let on = s.periods.iter().filter(|p| p.label == PeriodLabel::OnPeak).count();
    let off = s.periods.iter().filter(|p| p.label == PeriodLabel::OffPeak).count();
    if s.periods.len() != 2 || on != 1 || off != 1 {
        out.push(violation(
            "periods.label",
            format!(
                "expected exactly one on_peak and one off_peak period, found {on} on_peak and {off} off_peak among {} periods",
                s.periods.len()
            ),
        ));
    }
    for (i, p) in s.periods.iter().enumerate() {
        if !(p.duration.is_finite() && p.duration > 0.0) {
            out.push(violation(
                format!("periods[{i}].duration_hours"),
                format!("must be positive, got {}", p.duration),
            ));
        }
        let d = p.demand;
        if !(d.intercept.is_finite() && d.intercept > 0.0) {
            out.push(violation(
                format!("periods[{i}].demand.a"),
                format!("must be positive, got {}", d.intercept),
            ));
        }
        if !(d.slope.is_finite() && d.slope > 0.0) {
            out.push(violation(
                format!("periods[{i}].demand.b"),
                format!("must be positive, got {}", d.slope),
            ));
        }
    }

    for (i, g) in s.generators.iter().enumerate() {
        if !(g.variable_cost.is_finite() && g.variable_cost >= 0.0) {
            out.push(violation(
                format!("generators[{i}].variable_cost"),
                format!("must be non-negative, got {}", g.variable_cost),
            ));
        }
        if !(g.investment_cost.is_finite() && g.investment_cost >= 0.0) {
            out.push(violation(
                format!("generators[{i}].inv_cost_power"),
                format!("must be non-negative, got {}", g.investment_cost),
            ));
        }
        if s.generators[..i].iter().any(|h| h.name == g.name) {
            out.push(violation(
                format!("generators[{i}].name"),
                format!("duplicate generator name `{}`", g.name),
            ));
        }
    }

    if let Some(st) = &s.storage {
        if !(st.efficiency.is_finite() && st.efficiency > 0.0 && st.efficiency <= 1.0) {
            out.push(violation(
                "storage.efficiency",
                format!("round-trip efficiency must lie in (0, 1], got {}", st.efficiency),
            ));
        }
        if !(st.power_cost.is_finite() && st.power_cost >= 0.0) {
            out.push(violation(
                "storage.inv_cost_power",
                format!("must be non-negative, got {}", st.power_cost),
            ));
        }
        if !(st.energy_cost.is_finite() && st.energy_cost >= 0.0) {
            out.push(violation(
                "storage.inv_cost_energy",
                format!("must be non-negative, got {}", st.energy_cost),
            ));
        }
    }
    out
}

/// Non-fatal observations about a scenario. These never block a solve.
pub fn scenario_warnings(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let cheapest = s
        .generators
        .iter()
        .map(|g| g.variable_cost)
        .fold(f64::INFINITY, f64::min);
    for (i, p) in s.periods.iter().enumerate() {
        if cheapest.is_finite() && p.demand.intercept <= cheapest {
            out.push(violation(
                format!("periods[{i}].demand.a"),
                format!(
                    "intercept {} $/MWh is at or below the cheapest variable cost {cheapest} $/MWh; no consumption will be served",
                    p.demand.intercept
                ),
            ));
        }
    }
    if s.generators.is_empty() {
        out.push(violation("generators", "no generators; only storage can serve load"));
    }
    out
}

/// Flags periods whose dispatched consumption lies beyond the choke
/// quantity, i.e. clears at a negative price.
pub fn choke_warnings(s: &Scenario, consumption: &[(PeriodLabel, f64)]) -> Vec<Violation> {
    consumption
        .iter()
        .filter_map(|&(label, ell)| {
            let p = s.period(label)?;
            (p.demand.price(ell) < 0.0).then(|| {
                violation(
                    format!("{label}.consumption"),
                    format!(
                        "consumption {ell:.3} MW exceeds the choke quantity {:.3} MW (negative price)",
                        p.demand.choke_quantity()
                    ),
                )
            })
        })
        .collect()
}

/// Demand block as accepted in scenario files.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum DemandSpec {
    Coefficients(DemandCoefficients),
    Baseline {
        baseline_load_mw: f64,
        baseline_price: f64,
        elasticity: f64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DemandCoefficients {
    a: f64,
    b: f64,
}

impl TryFrom<DemandSpec> for LinearDemand {
    type Error = Error;

    fn try_from(spec: DemandSpec) -> Result<Self> {
        match spec {
            DemandSpec::Coefficients(DemandCoefficients { a, b }) => LinearDemand::new(a, b),
            DemandSpec::Baseline {
                baseline_load_mw,
                baseline_price,
                elasticity,
            } => calibrate_demand(baseline_load_mw, baseline_price, elasticity),
        }
    }
}

impl From<LinearDemand> for DemandCoefficients {
    fn from(d: LinearDemand) -> Self {
        Self {
            a: d.intercept,
            b: d.slope,
        }
    }
}

fn parse_error(text: &str, path: &Path, e: &serde_json::Error) -> Error {
    let (line, column) = (e.line(), e.column());
    Error::Parse {
        path: path.to_path_buf(),
        offset: byte_offset(text, line, column),
        line,
        column,
        message: e.to_string(),
    }
}

// serde_json reports 1-based lines and columns; columns count bytes.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn bundled_scenario() -> Scenario {
        Scenario::from_json_str(include_str!("../scenarios/paper_table1.json")).unwrap()
    }

    #[test]
    fn calibration_off_peak_baseline() {
        let d = calibrate_demand(10_000.0, 20.0, 0.1).unwrap();
        assert_relative_eq!(d.intercept, 220.0, max_relative = 1e-12);
        assert_relative_eq!(d.slope, 0.02, max_relative = 1e-12);
    }

    #[test]
    fn calibration_on_peak_baseline() {
        let d = calibrate_demand(15_000.0, 100.0, 0.1).unwrap();
        assert_relative_eq!(d.intercept, 1100.0, max_relative = 1e-12);
        assert_relative_eq!(d.slope, 100.0 / 1500.0, max_relative = 1e-12);
    }

    #[test]
    fn calibration_reproduces_baseline_point_and_elasticity() {
        // independent check: price at baseline and |dℓ/dp|·p/ℓ
        for (q0, p0, e) in [
            (10_000.0, 20.0, 0.1),
            (15_000.0, 100.0, 0.1),
            (3.0, 7.0, 1.0),
            (42.0, 0.5, 2.5),
        ] {
            let d = calibrate_demand(q0, p0, e).unwrap();
            assert_relative_eq!(d.price(q0), p0, max_relative = 1e-12);
            let dl_dp = 1.0 / d.slope;
            assert_relative_eq!(dl_dp * p0 / q0, e, max_relative = 1e-12);
        }
    }

    #[test]
    fn unit_elasticity_doubles_price() {
        let d = calibrate_demand(400.0, 30.0, 1.0).unwrap();
        assert_relative_eq!(d.intercept, 60.0);
        assert_relative_eq!(d.slope, 30.0 / 400.0);
    }

    #[test]
    fn calibration_rejects_non_positive_inputs() {
        let err = calibrate_demand(0.0, 20.0, 0.1).unwrap_err();
        assert!(err.to_string().contains("baseline_load_mw"), "{err}");
        let err = calibrate_demand(1.0, -2.0, 0.1).unwrap_err();
        assert!(err.to_string().contains("baseline_price"), "{err}");
        let err = calibrate_demand(1.0, 2.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("elasticity"), "{err}");
    }

    #[test]
    fn surplus_examples() {
        let d = LinearDemand::new(220.0, 0.02).unwrap();
        assert_eq!(gross_surplus(&d, 0.0).unwrap(), 0.0);
        assert_relative_eq!(gross_surplus(&d, 10_000.0).unwrap(), 1_200_000.0, max_relative = 1e-12);

        let (q0, p0) = (250.0, 40.0);
        let unit = LinearDemand::new(2.0 * p0, p0 / q0).unwrap();
        assert_relative_eq!(gross_surplus(&unit, q0).unwrap(), 1.5 * p0 * q0, max_relative = 1e-12);
    }

    #[test]
    fn surplus_matches_simpson_quadrature() {
        let d = LinearDemand::new(220.0, 0.02).unwrap();
        let upper = 10_000.0;
        let n = 1000;
        let h = upper / n as f64;
        let mut acc = d.price(0.0) + d.price(upper);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * d.price(k as f64 * h);
        }
        assert_relative_eq!(acc * h / 3.0, 1_200_000.0, max_relative = 1e-12);
    }

    #[test]
    fn surplus_rejects_negative_consumption() {
        let d = LinearDemand::new(220.0, 0.02).unwrap();
        assert!(matches!(gross_surplus(&d, -1.0), Err(Error::NegativeConsumption(_))));
    }

    #[test]
    fn bundled_scenario_is_valid() {
        let s = bundled_scenario();
        assert!(validate_scenario(&s).is_empty(), "{:?}", validate_scenario(&s));
        assert!(scenario_warnings(&s).is_empty());
        assert_eq!(s.cycles_n, 365);
        assert_eq!(s.peaker().unwrap().1.name, "peaker");
    }

    #[test]
    fn efficiency_above_one_is_one_violation() {
        let mut s = bundled_scenario();
        s.storage.as_mut().unwrap().efficiency = 1.2;
        let v = validate_scenario(&s);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].field.contains("efficiency"));
    }

    #[test]
    fn two_on_peak_periods_is_one_violation() {
        let mut s = bundled_scenario();
        s.periods[1].label = PeriodLabel::OnPeak;
        let v = validate_scenario(&s);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].field.contains("label"));
    }

    #[test]
    fn duplicate_names_and_bad_costs_are_reported() {
        let mut s = bundled_scenario();
        s.generators[1].name = s.generators[0].name.clone();
        s.generators[0].variable_cost = -1.0;
        let v = validate_scenario(&s);
        assert_eq!(v.len(), 2, "{v:?}");
    }

    #[test]
    fn coefficient_and_baseline_forms_both_load() {
        let text = r#"{
            "cycles_n": 2,
            "periods": [
                {"label": "on_peak", "duration_hours": 1, "demand": {"a": 50, "b": 0.5}},
                {"label": "off_peak", "duration_hours": 3,
                 "demand": {"baseline_load_mw": 10000, "baseline_price": 20, "elasticity": 0.1}}
            ],
            "generators": [{"name": "g", "variable_cost": 1, "inv_cost_power": 2}]
        }"#;
        let s = Scenario::from_json_str(text).unwrap();
        assert!(s.storage.is_none());
        assert_eq!(s.on_peak().unwrap().demand, LinearDemand::new(50.0, 0.5).unwrap());
        assert_relative_eq!(s.off_peak().unwrap().demand.intercept, 220.0, max_relative = 1e-12);

        let again = Scenario::from_json_str(&s.to_json_pretty().unwrap()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn malformed_json_reports_byte_offset() {
        let text = "{\n  \"cycles_n\": 3,\n  \"periods\": [}\n";
        let err = Scenario::from_json_str(text).unwrap_err();
        match err {
            Error::Parse { offset, line, .. } => {
                assert_eq!(line, 3);
                assert_eq!(&text[offset..offset + 1], "}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn choke_warning_flags_negative_price() {
        let s = bundled_scenario();
        let w = choke_warnings(&s, &[(PeriodLabel::OffPeak, 12_000.0), (PeriodLabel::OnPeak, 100.0)]);
        assert_eq!(w.len(), 1);
        assert!(w[0].field.starts_with("off_peak"));
    }
}
