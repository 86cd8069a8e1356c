//! Scenario runner: solves a scenario (optionally with its no-storage
//! counterfactual), verifies the equilibrium, and writes tables, a check
//! report and 24-hour price series.
//!
//! Output files in the output directory:
//!
//! * `operating.csv`: `scenario,period,lambda,ell,q_P,q_B,…,q_plus,q_minus`,
//!   prices in $/MWh and quantities in GW. `q_P` is the highest-cost
//!   generator, `q_B` the lowest-cost one; any others follow as `q_<name>`.
//! * `capacity.csv`: `scenario,K_P,K_B,…,K_s,E` in GW and GWh.
//! * `checks.json`: every verification check plus the full reports.
//! * `price_series.csv`: `series,hour_start,hour_end,period,price`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analytics::{solve_equilibrium_with, EquilibriumReport, IDENTITY_REL_TOL};
use crate::error::{Error, Result};
use crate::model::{PeriodLabel, Scenario};
use crate::oracle::{grid_search, GridSpec, OracleResult};
use crate::solver::SolverOptions;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
/// Reserved by clap for usage errors.
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_VERIFICATION: i32 = 5;
pub const EXIT_IO: i32 = 6;

/// Environment variable holding the log filter, e.g. `debug`.
pub const LOG_ENV: &str = "PEAKLOAD_LOG";

const MW_PER_GW: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
    Csv,
}

/// Which systems to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// The scenario as written.
    #[default]
    AsGiven,
    /// The scenario and its no-storage counterfactual.
    WithCounterfactual,
    /// Only the no-storage counterfactual.
    WithoutStorageOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    /// $/MWh against reference prices.
    pub price: f64,
    /// GW against reference quantities.
    pub quantity_gw: f64,
    /// GWh against reference storage energy.
    pub energy_gwh: f64,
    /// Relative, for the price decomposition and cost recovery.
    pub identity_rel: f64,
    /// $/MWh, for peaker parity.
    pub parity: f64,
    /// Relative welfare gap between oracle and solver.
    pub oracle_rel: f64,
    pub solver: SolverOptions,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            price: 1.0,
            quantity_gw: 0.1,
            energy_gwh: 0.2,
            identity_rel: IDENTITY_REL_TOL,
            parity: 0.5,
            oracle_rel: 1e-3,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario_path: PathBuf,
    pub selection: Selection,
    pub output_format: OutputFormat,
    pub output_dir: PathBuf,
    pub oracle: bool,
    pub tolerances: Tolerances,
    /// Hour at which the on-peak block starts on the 24-hour axis.
    pub onpeak_start_hour: f64,
}

impl RunConfig {
    pub fn new(scenario_path: impl Into<PathBuf>) -> Self {
        Self {
            scenario_path: scenario_path.into(),
            selection: Selection::AsGiven,
            output_format: OutputFormat::Text,
            output_dir: PathBuf::from("peakload-out"),
            oracle: false,
            tolerances: Tolerances::default(),
            onpeak_start_hour: 17.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// Failing makes the run fail.
    Error,
    /// Reported only.
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub scenario: String,
    pub name: String,
    pub severity: Severity,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn new(scenario: &str, name: impl Into<String>, value: f64, tolerance: f64, passed: bool) -> Self {
        Self {
            scenario: scenario.to_string(),
            name: name.into(),
            severity: Severity::Error,
            passed,
            value,
            tolerance,
            detail: String::new(),
        }
    }

    /// `|value| ≤ tolerance`.
    fn within(scenario: &str, name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self::new(scenario, name, value, tolerance, value.abs() <= tolerance)
    }

    fn warning_only(mut self, yes: bool) -> Self {
        if yes {
            self.severity = Severity::Warning;
        }
        self
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    pub fn fails_run(&self) -> bool {
        !self.passed && self.severity == Severity::Error
    }
}

/// Published values for one system, in GW, GWh and $/MWh.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceRow {
    pub lambda_onp: f64,
    pub lambda_offp: f64,
    pub ell_onp_gw: f64,
    pub ell_offp_gw: f64,
    /// `[on-peak, off-peak]` per generator name.
    #[serde(default)]
    pub generation_gw: BTreeMap<String, [f64; 2]>,
    pub discharge_onp_gw: Option<f64>,
    pub charge_offp_gw: Option<f64>,
    #[serde(default)]
    pub capacity_gw: BTreeMap<String, f64>,
    pub storage_power_gw: Option<f64>,
    pub storage_energy_gwh: Option<f64>,
}

/// Optional `reference` block of a scenario file.
#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub with_storage: Option<ReferenceRow>,
    pub without_storage: Option<ReferenceRow>,
}

impl Reference {
    pub fn from_file(path: &Path) -> Result<Option<Self>> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        match value.get("reference") {
            None => Ok(None),
            Some(r) => serde_json::from_value(r.clone())
                .map(Some)
                .map_err(|e| Error::validation("reference", e.to_string())),
        }
    }

    fn row(&self, with_storage: bool) -> Option<&ReferenceRow> {
        if with_storage {
            self.with_storage.as_ref()
        } else {
            self.without_storage.as_ref()
        }
    }
}

/// One row of the operating table. Generator columns follow
/// [`generator_columns`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatingRow {
    pub scenario: String,
    pub period: PeriodLabel,
    pub lambda: f64,
    pub ell: f64,
    pub generation: Vec<f64>,
    pub q_plus: Option<f64>,
    pub q_minus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityRow {
    pub scenario: String,
    pub generators: Vec<f64>,
    pub storage_power: Option<f64>,
    pub storage_energy: Option<f64>,
}

/// Rounded table values shared by every renderer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tables {
    /// Generator column suffixes, e.g. `P`, `B`, `wind`.
    pub generator_columns: Vec<String>,
    pub operating: Vec<OperatingRow>,
    pub capacity: Vec<CapacityRow>,
}

/// Column suffix and scenario index of each generator in table order: the
/// peaker as `P`, the cheapest as `B`, then the rest by name.
pub fn generator_columns(s: &Scenario) -> Vec<(String, usize)> {
    let mut cols = Vec::new();
    let Some((peaker, _)) = s.peaker() else {
        return cols;
    };
    cols.push(("P".to_string(), peaker));
    let cheapest = s
        .generators
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.variable_cost.total_cmp(&b.1.variable_cost).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i);
    if let Some(b) = cheapest.filter(|&b| b != peaker) {
        cols.push(("B".to_string(), b));
    }
    for (i, g) in s.generators.iter().enumerate() {
        if cols.iter().all(|(_, j)| *j != i) {
            cols.push((g.name.clone(), i));
        }
    }
    cols
}

fn round4(v: f64) -> f64 {
    let r = (v * 1e4).round() / 1e4;
    // no negative zero in the tables
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn scenario_label(report: &EquilibriumReport) -> &'static str {
    if report.with_storage {
        "with_storage"
    } else {
        "without_storage"
    }
}

pub fn build_tables(reports: &[EquilibriumReport]) -> Tables {
    let columns = reports
        .first()
        .map(|r| generator_columns(&r.scenario))
        .unwrap_or_default();
    let mut operating = Vec::new();
    let mut capacity = Vec::new();
    for r in reports {
        let label = scenario_label(r).to_string();
        for p in &r.periods {
            operating.push(OperatingRow {
                scenario: label.clone(),
                period: p.label,
                lambda: round4(p.price),
                ell: round4(p.consumption / MW_PER_GW),
                generation: columns
                    .iter()
                    .map(|(_, g)| round4(p.generation.get(*g).map_or(0.0, |q| q.value) / MW_PER_GW))
                    .collect(),
                q_plus: p.charge.map(|v| round4(v / MW_PER_GW)),
                q_minus: p.discharge.map(|v| round4(v / MW_PER_GW)),
            });
        }
        capacity.push(CapacityRow {
            scenario: label,
            generators: columns
                .iter()
                .map(|(_, g)| round4(r.capacities.generators.get(*g).map_or(0.0, |k| k.value) / MW_PER_GW))
                .collect(),
            storage_power: r.capacities.storage_power.map(|v| round4(v / MW_PER_GW)),
            storage_energy: r.capacities.storage_energy.map(|v| round4(v / MW_PER_GW)),
        });
    }
    Tables {
        generator_columns: columns.into_iter().map(|(c, _)| c).collect(),
        operating,
        capacity,
    }
}

/// One constant-price segment of the 24-hour axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceStep {
    pub hour_start: f64,
    pub hour_end: f64,
    /// `None` where a difference spans segments of different periods.
    pub period: Option<PeriodLabel>,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedSeries {
    pub name: String,
    pub steps: Vec<PriceStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceSeries {
    pub series: Vec<NamedSeries>,
    /// First series minus second; positive where storage raises the price
    /// when the first series is the with-storage system. Empty with a
    /// single series.
    pub difference: Vec<PriceStep>,
}

const DAY_HOURS: f64 = 24.0;

fn daily_steps(report: &EquilibriumReport, onpeak_start: f64) -> Vec<PriceStep> {
    let on = report.period(PeriodLabel::OnPeak);
    let off = report.period(PeriodLabel::OffPeak);
    let start = onpeak_start.rem_euclid(DAY_HOURS);
    let end = start + on.duration_hours.clamp(0.0, DAY_HOURS);
    // on-peak intervals after wrapping onto [0, 24)
    let mut on_blocks = vec![(start, end.min(DAY_HOURS))];
    if end > DAY_HOURS {
        on_blocks.insert(0, (0.0, end - DAY_HOURS));
    }
    let mut steps = Vec::new();
    let mut t = 0.0;
    let mut push = |a: f64, b: f64, p: &crate::analytics::PeriodDispatch| {
        if b > a {
            steps.push(PriceStep {
                hour_start: a,
                hour_end: b,
                period: Some(p.label),
                price: p.price,
            });
        }
    };
    for (a, b) in on_blocks {
        push(t, a, off);
        push(a, b, on);
        t = b;
    }
    push(t, DAY_HOURS, off);
    steps
}

fn price_at(steps: &[PriceStep], hour: f64) -> Option<&PriceStep> {
    steps.iter().find(|s| s.hour_start <= hour && hour < s.hour_end)
}

/// Step price series over a 24-hour day with the on-peak block starting at
/// `onpeak_start` (wrapping past midnight), plus the signed difference of
/// the first series minus the second.
pub fn emit_price_series(
    first: &EquilibriumReport,
    second: Option<&EquilibriumReport>,
    onpeak_start: f64,
) -> PriceSeries {
    let a = daily_steps(first, onpeak_start);
    let mut series = vec![NamedSeries {
        name: scenario_label(first).into(),
        steps: a.clone(),
    }];
    let mut difference = Vec::new();
    if let Some(second) = second {
        let b = daily_steps(second, onpeak_start);
        let mut cuts: Vec<f64> = a.iter().chain(&b).flat_map(|s| [s.hour_start, s.hour_end]).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if let (Some(x), Some(y)) = (price_at(&a, mid), price_at(&b, mid)) {
                difference.push(PriceStep {
                    hour_start: w[0],
                    hour_end: w[1],
                    period: (x.period == y.period).then_some(x.period).flatten(),
                    price: x.price - y.price,
                });
            }
        }
        series.push(NamedSeries {
            name: scenario_label(second).into(),
            steps: b,
        });
    }
    PriceSeries { series, difference }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleCheck {
    pub scenario: String,
    pub solver_welfare: f64,
    pub result: OracleResult,
    /// `(solver − oracle) / |solver|`.
    pub relative_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub passed: bool,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    pub tables: Tables,
    pub price_series: PriceSeries,
    pub oracle: Vec<OracleCheck>,
    pub reports: Vec<EquilibriumReport>,
    /// Files written.
    pub artifacts: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_VERIFICATION
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.fails_run())
    }

    /// Stdout rendering in the configured format.
    pub fn render(&self) -> Result<String> {
        match self.config.output_format {
            OutputFormat::Text => Ok(render_text(self)),
            OutputFormat::Json => Ok(serde_json::to_string_pretty(self)?),
            OutputFormat::Csv => {
                let mut out = operating_csv(&self.tables)?;
                out.push('\n');
                out.push_str(&capacity_csv(&self.tables)?);
                Ok(out)
            }
        }
    }
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Json(_) | Error::InvalidScenario(_) | Error::Validation { .. } => EXIT_PARSE,
        Error::Solve(_) => EXIT_SOLVER,
        Error::Io { .. } | Error::Csv(_) => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

fn identity_checks(r: &EquilibriumReport, tol: &Tolerances) -> Vec<Check> {
    let name = scenario_label(r);
    let opts = &tol.solver;
    let mut checks = vec![
        Check::within(name, "kkt.stationarity", r.kkt.max_stationarity, opts.stationarity_tol),
        Check::within(
            name,
            "kkt.primal_feasibility",
            r.kkt.max_primal_violation,
            opts.feasibility_tol,
        ),
        Check::within(
            name,
            "kkt.dual_feasibility",
            r.kkt.max_dual_violation,
            opts.feasibility_tol,
        ),
        Check::within(
            name,
            "kkt.complementarity",
            r.kkt.max_complementarity,
            opts.complementarity_tol,
        ),
    ];
    if let Some(p) = &r.parity {
        checks.push(
            Check::new(name, "peaker_parity", p.deviation, tol.parity, p.holds(tol.parity)).detail(format!(
                "{:?}: lambda_onp {} vs {} for {}",
                p.mode, p.lambda_onp, p.parity_price, p.peaker
            )),
        );
    }
    let cycling = r.assumptions.all_hold();
    if r.with_storage {
        checks.push(
            Check::new(name, "assumptions", f64::from(u8::from(cycling)), 1.0, cycling)
                .warning_only(true)
                .detail(format!(
                    "cycling {}, T_onp < eta*T_offp {}, no carryover {}",
                    r.assumptions.cycling, r.assumptions.sufficient_offpeak_duration, r.assumptions.no_carryover
                )),
        );
    }
    if let Some(st) = r.kkt.storage.as_ref().filter(|_| r.assumptions.cycling) {
        for (label, v) in [
            ("kkt.storage_charge_onp", st.charge[0]),
            ("kkt.storage_charge_offp", st.charge[1]),
            ("kkt.storage_discharge_onp", st.discharge[0]),
            ("kkt.storage_discharge_offp", st.discharge[1]),
            ("kkt.storage_power", st.storage_power),
            ("kkt.storage_energy", st.storage_energy),
        ] {
            checks.push(Check::within(name, label, v, opts.stationarity_tol));
        }
    }
    if let Some(d) = &r.decomposition {
        checks.push(
            Check::within(name, "price_decomposition", d.relative_residual(), tol.identity_rel)
                .warning_only(!cycling)
                .detail(format!(
                    "lambda_onp {} = {} + {} + {}",
                    d.lambda_onp, d.variable_component, d.fixed_energy_component, d.fixed_power_component
                )),
        );
    }
    if let Some(c) = &r.cost_recovery {
        checks.push(
            Check::within(name, "cost_recovery", c.relative_gap(), tol.identity_rel)
                .warning_only(!cycling)
                .detail(format!("investment {} $/year", c.investment_total)),
        );
    }
    checks
}

fn reference_checks(r: &EquilibriumReport, reference: &ReferenceRow, tol: &Tolerances) -> Vec<Check> {
    let name = scenario_label(r);
    let gw = |mw: f64| mw / MW_PER_GW;
    let mut checks = Vec::new();
    let mut cmp = |label: String, actual: f64, expected: f64, t: f64| {
        checks.push(Check::within(name, label, actual - expected, t).detail(format!("{actual:.6} vs {expected}")));
    };
    use PeriodLabel::{OffPeak, OnPeak};
    cmp(
        "reference.lambda_onp".into(),
        r.price(OnPeak),
        reference.lambda_onp,
        tol.price,
    );
    cmp(
        "reference.lambda_offp".into(),
        r.price(OffPeak),
        reference.lambda_offp,
        tol.price,
    );
    cmp(
        "reference.ell_onp".into(),
        gw(r.period(OnPeak).consumption),
        reference.ell_onp_gw,
        tol.quantity_gw,
    );
    cmp(
        "reference.ell_offp".into(),
        gw(r.period(OffPeak).consumption),
        reference.ell_offp_gw,
        tol.quantity_gw,
    );
    for (g, [on, off]) in &reference.generation_gw {
        let actual = |label| r.generation(g, label).map_or(f64::NAN, gw);
        cmp(format!("reference.q_{g}_onp"), actual(OnPeak), *on, tol.quantity_gw);
        cmp(format!("reference.q_{g}_offp"), actual(OffPeak), *off, tol.quantity_gw);
    }
    if let Some(v) = reference.discharge_onp_gw {
        cmp(
            "reference.q_minus_onp".into(),
            gw(r.period(OnPeak).discharge.unwrap_or(0.0)),
            v,
            tol.quantity_gw,
        );
    }
    if let Some(v) = reference.charge_offp_gw {
        cmp(
            "reference.q_plus_offp".into(),
            gw(r.period(OffPeak).charge.unwrap_or(0.0)),
            v,
            tol.quantity_gw,
        );
    }
    for (g, v) in &reference.capacity_gw {
        cmp(
            format!("reference.K_{g}"),
            r.generator_capacity(g).map_or(f64::NAN, gw),
            *v,
            tol.quantity_gw,
        );
    }
    if let Some(v) = reference.storage_power_gw {
        cmp(
            "reference.K_s".into(),
            gw(r.capacities.storage_power.unwrap_or(0.0)),
            v,
            tol.quantity_gw,
        );
    }
    if let Some(v) = reference.storage_energy_gwh {
        cmp(
            "reference.E".into(),
            gw(r.capacities.storage_energy.unwrap_or(0.0)),
            v,
            tol.energy_gwh,
        );
    }
    // NaN means a named generator is missing from the scenario
    for c in &mut checks {
        if c.value.is_nan() {
            c.passed = false;
        }
    }
    checks
}

fn oracle_check(r: &EquilibriumReport, tol: &Tolerances) -> Result<(OracleCheck, Check)> {
    let grid = GridSpec::for_scenario(&r.scenario)?;
    let result = grid_search(&r.scenario, &grid)?;
    let solver_welfare = r.objective;
    let relative_gap = (solver_welfare - result.best_welfare) / solver_welfare.abs().max(f64::MIN_POSITIVE);
    let name = scenario_label(r);
    let check = Check::within(name, "oracle_welfare_gap", relative_gap, tol.oracle_rel).detail(format!(
        "solver {solver_welfare} vs grid {} over {} evaluations",
        result.best_welfare, result.evaluations
    ));
    Ok((
        OracleCheck {
            scenario: name.into(),
            solver_welfare,
            result,
            relative_gap,
        },
        check,
    ))
}

/// Solves, verifies and writes every artifact. Verification failures are
/// reported through [`RunOutcome::passed`]; errors are parse, solver or
/// i/o failures.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let scenario = Scenario::from_file(&config.scenario_path)?;
    scenario.validate()?;
    let reference = Reference::from_file(&config.scenario_path)?;

    let systems: Vec<Scenario> = match config.selection {
        Selection::AsGiven => vec![scenario],
        Selection::WithCounterfactual if scenario.storage.is_some() => {
            let without = scenario.without_storage();
            vec![scenario, without]
        }
        Selection::WithCounterfactual => {
            log::warn!("scenario has no storage; the counterfactual is the scenario itself");
            vec![scenario]
        }
        Selection::WithoutStorageOnly => vec![scenario.without_storage()],
    };
    let opts = &config.tolerances.solver;
    let reports: Vec<EquilibriumReport> = match systems.as_slice() {
        [a, b] => {
            let (ra, rb) = rayon::join(|| solve_equilibrium_with(a, opts), || solve_equilibrium_with(b, opts));
            vec![ra?, rb?]
        }
        _ => systems
            .iter()
            .map(|s| solve_equilibrium_with(s, opts))
            .collect::<Result<_>>()?,
    };

    let tol = &config.tolerances;
    let mut checks = Vec::new();
    for r in &reports {
        checks.extend(identity_checks(r, tol));
        if let Some(row) = reference.as_ref().and_then(|re| re.row(r.with_storage)) {
            checks.extend(reference_checks(r, row, tol));
        }
    }
    let mut oracle = Vec::new();
    if config.oracle {
        for r in &reports {
            let (o, c) = oracle_check(r, tol)?;
            oracle.push(o);
            checks.push(c);
        }
    }

    let tables = build_tables(&reports);
    let price_series = emit_price_series(&reports[0], reports.get(1), config.onpeak_start_hour);
    let passed = checks.iter().all(|c| !c.fails_run());
    let mut outcome = RunOutcome {
        passed,
        config: config.clone(),
        checks,
        tables,
        price_series,
        oracle,
        reports,
        artifacts: Vec::new(),
    };
    outcome.artifacts = write_artifacts(&outcome, &config.output_dir)?;
    Ok(outcome)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn write_artifacts(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    #[derive(Serialize)]
    struct ChecksFile<'a> {
        passed: bool,
        checks: &'a [Check],
        oracle: &'a [OracleCheck],
        reports: &'a [EquilibriumReport],
    }
    let checks = serde_json::to_string_pretty(&ChecksFile {
        passed: outcome.passed,
        checks: &outcome.checks,
        oracle: &outcome.oracle,
        reports: &outcome.reports,
    })?;
    Ok(vec![
        write_file(dir, "operating.csv", &operating_csv(&outcome.tables)?)?,
        write_file(dir, "capacity.csv", &capacity_csv(&outcome.tables)?)?,
        write_file(dir, "checks.json", &checks)?,
        write_file(dir, "price_series.csv", &price_series_csv(&outcome.price_series)?)?,
    ])
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_string(records: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in records {
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn operating_csv(t: &Tables) -> Result<String> {
    let mut header = vec!["scenario".to_string(), "period".into(), "lambda".into(), "ell".into()];
    header.extend(t.generator_columns.iter().map(|c| format!("q_{c}")));
    header.extend(["q_plus".to_string(), "q_minus".into()]);
    let mut records = vec![header];
    for r in &t.operating {
        let mut rec = vec![
            r.scenario.clone(),
            r.period.to_string(),
            r.lambda.to_string(),
            r.ell.to_string(),
        ];
        rec.extend(r.generation.iter().map(f64::to_string));
        rec.extend([opt_field(r.q_plus), opt_field(r.q_minus)]);
        records.push(rec);
    }
    csv_string(records)
}

pub fn capacity_csv(t: &Tables) -> Result<String> {
    let mut header = vec!["scenario".to_string()];
    header.extend(t.generator_columns.iter().map(|c| format!("K_{c}")));
    header.extend(["K_s".to_string(), "E".into()]);
    let mut records = vec![header];
    for r in &t.capacity {
        let mut rec = vec![r.scenario.clone()];
        rec.extend(r.generators.iter().map(f64::to_string));
        rec.extend([opt_field(r.storage_power), opt_field(r.storage_energy)]);
        records.push(rec);
    }
    csv_string(records)
}

pub fn price_series_csv(p: &PriceSeries) -> Result<String> {
    let mut records = vec![["series", "hour_start", "hour_end", "period", "price"]
        .map(String::from)
        .to_vec()];
    let all = p
        .series
        .iter()
        .map(|s| (s.name.as_str(), &s.steps))
        .chain(std::iter::once(("difference", &p.difference)));
    for (name, steps) in all {
        for s in steps {
            records.push(vec![
                name.to_string(),
                s.hour_start.to_string(),
                s.hour_end.to_string(),
                s.period.map(|l| l.to_string()).unwrap_or_else(|| "mixed".into()),
                s.price.to_string(),
            ]);
        }
    }
    csv_string(records)
}

fn render_text(o: &RunOutcome) -> String {
    let t = &o.tables;
    let mut out = String::new();
    let _ = writeln!(out, "Operating parameters ($/MWh, GW)");
    let mut head = format!("{:<16} {:<9} {:>10} {:>10}", "scenario", "period", "lambda", "ell");
    for c in &t.generator_columns {
        let _ = write!(head, " {:>10}", format!("q_{c}"));
    }
    let _ = write!(head, " {:>10} {:>10}", "q_plus", "q_minus");
    let _ = writeln!(out, "{head}");
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    for r in &t.operating {
        let mut line = format!(
            "{:<16} {:<9} {:>10.4} {:>10.4}",
            r.scenario,
            r.period.to_string(),
            r.lambda,
            r.ell
        );
        for g in &r.generation {
            let _ = write!(line, " {g:>10.4}");
        }
        let _ = write!(line, " {:>10} {:>10}", cell(r.q_plus), cell(r.q_minus));
        let _ = writeln!(out, "{line}");
    }

    let _ = writeln!(out, "\nCapacities (GW, GWh)");
    let mut head = format!("{:<16}", "scenario");
    for c in &t.generator_columns {
        let _ = write!(head, " {:>10}", format!("K_{c}"));
    }
    let _ = write!(head, " {:>10} {:>10}", "K_s", "E");
    let _ = writeln!(out, "{head}");
    for r in &t.capacity {
        let mut line = format!("{:<16}", r.scenario);
        for g in &r.generators {
            let _ = write!(line, " {g:>10.4}");
        }
        let _ = write!(line, " {:>10} {:>10}", cell(r.storage_power), cell(r.storage_energy));
        let _ = writeln!(out, "{line}");
    }

    let _ = writeln!(out, "\nChecks");
    for c in &o.checks {
        let status = match (c.passed, c.severity) {
            (true, _) => "PASS",
            (false, Severity::Error) => "FAIL",
            (false, Severity::Warning) => "WARN",
        };
        let _ = write!(
            out,
            "{status} {:<16} {:<28} {:e} (tol {:e})",
            c.scenario, c.name, c.value, c.tolerance
        );
        if !c.detail.is_empty() {
            let _ = write!(out, "  {}", c.detail);
        }
        out.push('\n');
    }
    for r in &o.reports {
        for w in &r.warnings {
            let _ = writeln!(out, "warning [{}]: {w}", scenario_label(r));
        }
    }
    for p in &o.artifacts {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    let _ = writeln!(
        out,
        "{}",
        if o.passed {
            "verification passed"
        } else {
            "verification FAILED"
        }
    );
    out
}

#[derive(Debug, Parser)]
#[command(
    name = "peakload",
    version,
    about = "Peak-load pricing equilibrium with duration-limited storage"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a scenario file, verify the equilibrium and write reports.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario JSON file.
    pub scenario: PathBuf,
    /// Also solve the system without storage.
    #[arg(long, conflicts_with = "no_storage_only")]
    pub counterfactual: bool,
    /// Solve only the system without storage.
    #[arg(long)]
    pub no_storage_only: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
    #[arg(long, default_value = "peakload-out")]
    pub out: PathBuf,
    /// Cross-check welfare against a brute-force capacity grid search.
    #[arg(long)]
    pub oracle: bool,
    /// Reference price tolerance, $/MWh.
    #[arg(long)]
    pub tolerance_prices: Option<f64>,
    /// Reference quantity tolerance, GW.
    #[arg(long)]
    pub tolerance_quantities: Option<f64>,
    /// Reference storage energy tolerance, GWh.
    #[arg(long)]
    pub tolerance_energy: Option<f64>,
    /// Hour at which the on-peak block starts in the price series.
    #[arg(long, default_value_t = 17.0)]
    pub onpeak_start: f64,
}

impl From<RunArgs> for RunConfig {
    fn from(a: RunArgs) -> Self {
        let defaults = Tolerances::default();
        Self {
            scenario_path: a.scenario,
            selection: if a.no_storage_only {
                Selection::WithoutStorageOnly
            } else if a.counterfactual {
                Selection::WithCounterfactual
            } else {
                Selection::AsGiven
            },
            output_format: a.format,
            output_dir: a.out,
            oracle: a.oracle,
            tolerances: Tolerances {
                price: a.tolerance_prices.unwrap_or(defaults.price),
                quantity_gw: a.tolerance_quantities.unwrap_or(defaults.quantity_gw),
                energy_gwh: a.tolerance_energy.unwrap_or(defaults.energy_gwh),
                ..defaults
            },
            onpeak_start_hour: a.onpeak_start,
        }
    }
}

/// Runs the command line and returns the process exit code. Output goes
/// to stdout, diagnostics to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let Command::Run(args) = cli.command;
    let config = RunConfig::from(args);
    match run(&config).and_then(|o| o.render().map(|text| (o, text))) {
        Ok((outcome, text)) => {
            print!("{text}");
            for c in outcome.failures() {
                eprintln!(
                    "verification failed: {} {} = {:e} (tol {:e})",
                    c.scenario, c.name, c.value, c.tolerance
                );
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).try_init();
}
