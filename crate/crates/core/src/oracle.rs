//! Brute-force verification of the equilibrium.
//!
//! Capacities are enumerated on a grid; for each capacity vector the
//! operating problem is solved in closed form by merit-order clearing
//! against the linear demand in each period, with storage shifting energy
//! between periods. Nothing here touches the QP assembly or the solver.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PeriodLabel, Scenario};

const ON: usize = 0;
const OFF: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityPoint {
    /// MW per generator, in scenario order.
    pub generators: Vec<f64>,
    /// MW.
    pub storage_power: f64,
    /// MWh.
    pub storage_energy: f64,
}

impl CapacityPoint {
    fn lex_cmp(&self, other: &Self) -> Ordering {
        self.generators
            .iter()
            .copied()
            .chain([self.storage_power, self.storage_energy])
            .zip(
                other
                    .generators
                    .iter()
                    .copied()
                    .chain([other.storage_power, other.storage_energy]),
            )
            .map(|(a, b)| a.total_cmp(&b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

/// Welfare-maximal operation for fixed capacities. Arrays are indexed
/// `[on-peak, off-peak]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleDispatch {
    pub consumption: [f64; 2],
    /// Per generator in scenario order.
    pub generation: Vec<[f64; 2]>,
    pub charge: [f64; 2],
    pub discharge: [f64; 2],
    /// Marginal value of consumption, `a − b·ℓ`, $/MWh.
    pub price: [f64; 2],
    /// Dollars per cycle, net of investment.
    pub welfare: f64,
}

impl OracleDispatch {
    pub fn consumption_in(&self, label: PeriodLabel) -> f64 {
        self.consumption[index(label)]
    }

    pub fn charge_in(&self, label: PeriodLabel) -> f64 {
        self.charge[index(label)]
    }

    pub fn discharge_in(&self, label: PeriodLabel) -> f64 {
        self.discharge[index(label)]
    }
}

fn index(label: PeriodLabel) -> usize {
    match label {
        PeriodLabel::OnPeak => ON,
        PeriodLabel::OffPeak => OFF,
    }
}

#[derive(Debug, Clone, Copy)]
struct PeriodData {
    hours: f64,
    intercept: f64,
    slope: f64,
}

/// Scenario data flattened for fast repeated evaluation.
#[derive(Debug, Clone)]
struct Prepared {
    periods: [PeriodData; 2],
    costs: Vec<f64>,
    investment: Vec<f64>,
    /// Generator indices by ascending variable cost, ties by index.
    merit: Vec<usize>,
    cycles: f64,
    /// `(power cost, energy cost, efficiency)`.
    storage: Option<(f64, f64, f64)>,
}

impl Prepared {
    fn new(s: &Scenario) -> Result<Self> {
        s.validate()?;
        let periods = s.period_pair()?.map(|p| PeriodData {
            hours: p.duration,
            intercept: p.demand.intercept,
            slope: p.demand.slope,
        });
        let costs: Vec<f64> = s.generators.iter().map(|g| g.variable_cost).collect();
        let mut merit: Vec<usize> = (0..costs.len()).collect();
        merit.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        Ok(Self {
            periods,
            costs,
            investment: s.generators.iter().map(|g| g.investment_cost).collect(),
            merit,
            cycles: f64::from(s.cycles_n),
            storage: s.storage.map(|st| (st.power_cost, st.energy_cost, st.efficiency)),
        })
    }
}

/// One direction of storage operation: charge in `from`, discharge in `to`.
#[derive(Debug, Clone, Copy)]
struct Shift {
    from: usize,
    to: usize,
    /// Charging rate per unit discharge rate, `T_to / (η·T_from)`.
    charge_per_discharge: f64,
    /// Largest discharge rate the generators can recharge.
    headroom: f64,
    /// Left-most maximiser of operating welfare over `[0, headroom]`.
    best: f64,
}

/// The operating problem with generator capacities fixed. Storage limits
/// only cap the discharge rate, so the concave welfare-in-throughput curve
/// of each direction is maximised once and clipped per storage point.
struct Operating<'a> {
    prep: &'a Prepared,
    caps: &'a [f64],
    /// Operating welfare without storage flows, $/cycle.
    base: f64,
    generator_investment: f64,
    shifts: Option<[Shift; 2]>,
}

impl<'a> Operating<'a> {
    fn new(prep: &'a Prepared, caps: &'a [f64]) -> Self {
        let total: f64 = caps.iter().sum();
        let generator_investment = caps.iter().zip(&prep.investment).map(|(k, i)| k * i).sum::<f64>() / prep.cycles;
        let mut op = Self {
            prep,
            caps,
            base: 0.0,
            generator_investment,
            shifts: None,
        };
        op.base = op.value(ON, 0.0) + op.value(OFF, 0.0);
        if let Some((_, _, eta)) = prep.storage {
            let make = |from: usize, to: usize| {
                let ratio = prep.periods[to].hours / (eta * prep.periods[from].hours);
                Shift {
                    from,
                    to,
                    charge_per_discharge: ratio,
                    headroom: total / ratio,
                    best: 0.0,
                }
            };
            let mut shifts = [make(OFF, ON), make(ON, OFF)];
            for sh in &mut shifts {
                sh.best = op.best_throughput(sh);
            }
            op.shifts = Some(shifts);
        }
        op
    }

    /// Clears one period with net storage injection `inject` (discharge
    /// minus charge). Returns consumption, total generation and operating
    /// cost rate in $/h.
    fn clear(&self, period: usize, inject: f64) -> (f64, f64, f64) {
        let d = self.prep.periods[period];
        let floor = (-inject).max(0.0);
        let mut gen = 0.0;
        for &j in &self.prep.merit {
            let level = (d.intercept - self.prep.costs[j]) / d.slope - inject;
            if level <= gen {
                break;
            }
            if level >= gen + self.caps[j] {
                gen += self.caps[j];
            } else {
                gen = level;
                break;
            }
        }
        let gen = gen.max(floor);
        let mut left = gen;
        let mut cost = 0.0;
        for &j in &self.prep.merit {
            let take = left.min(self.caps[j]);
            cost += self.prep.costs[j] * take;
            left -= take;
            if left <= 0.0 {
                break;
            }
        }
        (inject + gen, gen, cost)
    }

    fn value(&self, period: usize, inject: f64) -> f64 {
        let d = self.prep.periods[period];
        let (ell, _, cost) = self.clear(period, inject);
        d.hours * (d.intercept * ell - 0.5 * d.slope * ell * ell - cost)
    }

    fn shifted_value(&self, sh: &Shift, discharge: f64) -> f64 {
        self.value(sh.from, -sh.charge_per_discharge * discharge) + self.value(sh.to, discharge)
    }

    /// Regime boundaries of either period, mapped to discharge rate.
    fn breakpoints(&self, sh: &Shift) -> Vec<f64> {
        let mut pts = vec![0.0, sh.headroom];
        let to = self.prep.periods[sh.to];
        let from = self.prep.periods[sh.from];
        let mut before = 0.0;
        for &j in &self.prep.merit {
            let after = before + self.caps[j];
            let c = self.prep.costs[j];
            let x = (to.intercept - c) / to.slope;
            pts.extend([x - after, x - before]);
            let y = (from.intercept - c) / from.slope;
            pts.extend([after - y, before - y, after].map(|charge| charge / sh.charge_per_discharge));
            before = after;
        }
        pts.retain(|p| p.is_finite() && *p >= 0.0 && *p <= sh.headroom);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Operating welfare is concave and piecewise quadratic in throughput,
    /// quadratic between breakpoints: evaluate at the breakpoints, then
    /// place the vertex of the quadratic on the neighbouring segments.
    fn best_throughput(&self, sh: &Shift) -> f64 {
        if sh.headroom <= 0.0 {
            return 0.0;
        }
        let pts = self.breakpoints(sh);
        let vals: Vec<f64> = pts.iter().map(|&d| self.shifted_value(sh, d)).collect();
        let better = |v: f64, best: f64| v > best + 1e-12 * best.abs().max(1.0);
        let mut k = 0;
        for i in 1..vals.len() {
            if better(vals[i], vals[k]) {
                k = i;
            }
        }
        let mut best_d = pts[k];
        let mut best_v = vals[k];
        let lo = k.saturating_sub(1);
        let hi = (k + 1).min(pts.len() - 1);
        for seg in lo..hi {
            let (l, r) = (pts[seg], pts[seg + 1]);
            let (wl, wr) = (vals[seg], vals[seg + 1]);
            let wm = self.shifted_value(sh, 0.5 * (l + r));
            // q(u) = wl + bu + au² on u ∈ [0, 1]
            let a = 2.0 * wl - 4.0 * wm + 2.0 * wr;
            let b = -3.0 * wl + 4.0 * wm - wr;
            if a < 0.0 {
                let u = -b / (2.0 * a);
                if u > 0.0 && u < 1.0 {
                    let d = l + u * (r - l);
                    let v = self.shifted_value(sh, d);
                    if better(v, best_v) || (d < best_d && v >= best_v) {
                        best_d = d;
                        best_v = v;
                    }
                }
            }
        }
        best_d
    }

    /// Discharge rate limit of one direction for given storage capacities.
    fn storage_limit(&self, sh: &Shift, power: f64, energy: f64) -> f64 {
        let to_hours = self.prep.periods[sh.to].hours;
        power
            .min(energy / to_hours)
            .min(power / sh.charge_per_discharge)
            .min(sh.headroom)
            .max(0.0)
    }

    /// Best direction and discharge rate, and the operating welfare.
    fn operate(&self, power: f64, energy: f64) -> (Option<(Shift, f64)>, f64) {
        let Some(shifts) = self.shifts else {
            return (None, self.base);
        };
        let mut choice = None;
        let mut best = self.base;
        for sh in shifts {
            let d = sh.best.min(self.storage_limit(&sh, power, energy));
            if d <= 0.0 {
                continue;
            }
            let v = self.shifted_value(&sh, d);
            if v > best {
                best = v;
                choice = Some((sh, d));
            }
        }
        (choice, best)
    }

    fn storage_investment(&self, power: f64, energy: f64) -> f64 {
        self.prep
            .storage
            .map_or(0.0, |(ip, ie, _)| (ip * power + ie * energy) / self.prep.cycles)
    }

    fn welfare(&self, power: f64, energy: f64) -> f64 {
        let (_, operating) = self.operate(power, energy);
        operating - self.generator_investment - self.storage_investment(power, energy)
    }

    fn dispatch(&self, power: f64, energy: f64) -> OracleDispatch {
        let (choice, operating) = self.operate(power, energy);
        let mut inject = [0.0; 2];
        let mut charge = [0.0; 2];
        let mut discharge = [0.0; 2];
        if let Some((sh, d)) = choice {
            discharge[sh.to] = d;
            charge[sh.from] = sh.charge_per_discharge * d;
            inject[sh.to] = d;
            inject[sh.from] = -charge[sh.from];
        }
        let mut consumption = [0.0; 2];
        let mut price = [0.0; 2];
        let mut generation = vec![[0.0; 2]; self.caps.len()];
        for i in [ON, OFF] {
            let (ell, gen, _) = self.clear(i, inject[i]);
            consumption[i] = ell;
            price[i] = self.prep.periods[i].intercept - self.prep.periods[i].slope * ell;
            let mut left = gen;
            for &j in &self.prep.merit {
                let take = left.min(self.caps[j]);
                generation[j][i] = take;
                left -= take;
            }
        }
        OracleDispatch {
            consumption,
            generation,
            charge,
            discharge,
            price,
            welfare: operating - self.generator_investment - self.storage_investment(power, energy),
        }
    }
}

/// Welfare-maximal dispatch for fixed capacities, by closed-form case
/// analysis. Ties go to the smaller storage throughput.
pub fn inner_dispatch(caps: &CapacityPoint, s: &Scenario) -> Result<OracleDispatch> {
    let prep = Prepared::new(s)?;
    if caps.generators.len() != prep.costs.len() {
        return Err(Error::DimensionMismatch {
            expected: prep.costs.len(),
            actual: caps.generators.len(),
        });
    }
    let mut all = caps
        .generators
        .iter()
        .copied()
        .chain([caps.storage_power, caps.storage_energy]);
    if all.any(|v| !(v.is_finite() && v >= 0.0)) {
        return Err(Error::validation("capacities", "must be finite and non-negative"));
    }
    let (power, energy) = if prep.storage.is_some() {
        (caps.storage_power, caps.storage_energy)
    } else {
        (0.0, 0.0)
    };
    Ok(Operating::new(&prep, &caps.generators).dispatch(power, energy))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    /// Upper bound of each generator capacity axis, MW.
    pub generator_max: Vec<f64>,
    /// Upper bound of the storage power axis, MW. Ignored without storage.
    pub storage_power_max: f64,
    /// Upper bound of the storage duration axis `E / K_s`, hours.
    pub duration_max: f64,
    /// Grid points per axis in every pass.
    pub points: usize,
    /// Number of passes; each pass after the first re-grids one previous step
    /// either side of the incumbent.
    pub passes: usize,
}

impl GridSpec {
    /// Capacity axes up to the largest choke quantity, duration up to one
    /// step past the on-peak duration, 51 points per axis, two passes.
    pub fn for_scenario(s: &Scenario) -> Result<Self> {
        let points = 51;
        let k_max = s.periods.iter().map(|p| p.demand.choke_quantity()).fold(0.0, f64::max);
        let on = s
            .on_peak()
            .ok_or_else(|| Error::validation("periods", "missing on_peak period"))?;
        Ok(Self {
            generator_max: vec![k_max; s.generators.len()],
            storage_power_max: k_max,
            duration_max: on.duration * points as f64 / (points - 1) as f64,
            points,
            passes: 2,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// Dollars per cycle.
    pub best_welfare: f64,
    pub best_point: CapacityPoint,
    pub best_dispatch: OracleDispatch,
    pub grid: GridSpec,
    pub evaluations: usize,
    /// Best welfare after each pass.
    pub pass_welfare: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Axes {
    generators: Vec<Vec<f64>>,
    power: Vec<f64>,
    duration: Vec<f64>,
}

impl Axes {
    fn steps(&self) -> (Vec<f64>, f64, f64) {
        let step = |a: &[f64]| if a.len() > 1 { a[1] - a[0] } else { 0.0 };
        (
            self.generators.iter().map(|a| step(a)).collect(),
            step(&self.power),
            step(&self.duration),
        )
    }
}

fn linspace(max: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| max * i as f64 / (points - 1) as f64).collect()
}

/// `points` values spaced `2·step/(points − 1)` centred on `center`,
/// dropping negative ones; `center` itself is always included.
fn around(center: f64, step: f64, points: usize) -> Vec<f64> {
    if step <= 0.0 {
        return vec![center];
    }
    let half = (points / 2) as i64;
    let fine = 2.0 * step / (points - 1).max(1) as f64;
    (-half..=half)
        .map(|j| if j == 0 { center } else { center + j as f64 * fine })
        .filter(|v| *v >= 0.0)
        .collect()
}

#[derive(Debug, Clone)]
struct Candidate {
    welfare: f64,
    point: CapacityPoint,
}

fn better(a: Candidate, b: Candidate) -> Candidate {
    match a.welfare.total_cmp(&b.welfare) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            if b.point.lex_cmp(&a.point) == Ordering::Less {
                b
            } else {
                a
            }
        }
    }
}

fn search(prep: &Prepared, axes: &Axes) -> (Candidate, usize) {
    let dims: Vec<usize> = axes.generators.iter().map(Vec::len).collect();
    let combos: usize = dims.iter().product();
    let storage_evals = if prep.storage.is_some() {
        axes.power.len() * axes.duration.len()
    } else {
        1
    };
    let best = (0..combos)
        .into_par_iter()
        .map(|mut idx| {
            let mut caps = Vec::with_capacity(dims.len());
            for (axis, len) in axes.generators.iter().zip(&dims) {
                caps.push(axis[idx % len]);
                idx /= len;
            }
            let op = Operating::new(prep, &caps);
            let mut best: Option<(f64, f64, f64)> = None;
            if prep.storage.is_some() {
                for &power in &axes.power {
                    for &hours in &axes.duration {
                        let energy = power * hours;
                        let w = op.welfare(power, energy);
                        // strict: ties keep the lexicographically smaller storage pair
                        if best.is_none_or(|(bw, _, _)| w > bw) {
                            best = Some((w, power, energy));
                        }
                    }
                }
            } else {
                best = Some((op.welfare(0.0, 0.0), 0.0, 0.0));
            }
            let (welfare, storage_power, storage_energy) = best.expect("axes are non-empty");
            Candidate {
                welfare,
                point: CapacityPoint {
                    generators: caps,
                    storage_power,
                    storage_energy,
                },
            }
        })
        .reduce_with(better)
        .expect("grid is non-empty");
    (best, combos * storage_evals)
}

/// Exhaustive grid search over capacities with closed-form dispatch.
pub fn grid_search(s: &Scenario, grid: &GridSpec) -> Result<OracleResult> {
    let prep = Prepared::new(s)?;
    if grid.points < 2 {
        return Err(Error::EmptyGrid("need at least two points per axis"));
    }
    if grid.passes == 0 {
        return Err(Error::EmptyGrid("need at least one pass"));
    }
    if grid.generator_max.len() != prep.costs.len() {
        return Err(Error::DimensionMismatch {
            expected: prep.costs.len(),
            actual: grid.generator_max.len(),
        });
    }
    let bounds = grid
        .generator_max
        .iter()
        .copied()
        .chain([grid.storage_power_max, grid.duration_max]);
    if bounds.clone().any(|v| !(v.is_finite() && v >= 0.0)) {
        return Err(Error::EmptyGrid("axis bounds must be finite and non-negative"));
    }

    let with_storage = prep.storage.is_some();
    let mut axes = Axes {
        generators: grid.generator_max.iter().map(|&m| linspace(m, grid.points)).collect(),
        power: if with_storage {
            linspace(grid.storage_power_max, grid.points)
        } else {
            vec![0.0]
        },
        duration: if with_storage {
            linspace(grid.duration_max, grid.points)
        } else {
            vec![0.0]
        },
    };
    let mut evaluations = 0;
    let mut pass_welfare = Vec::with_capacity(grid.passes);
    let mut incumbent: Option<Candidate> = None;
    for pass in 0..grid.passes {
        if let Some(inc) = &incumbent {
            let (gen_steps, power_step, duration_step) = axes.steps();
            let hours = if inc.point.storage_power > 0.0 {
                inc.point.storage_energy / inc.point.storage_power
            } else {
                0.0
            };
            axes = Axes {
                generators: inc
                    .point
                    .generators
                    .iter()
                    .zip(gen_steps)
                    .map(|(&c, st)| around(c, st, grid.points))
                    .collect(),
                power: if with_storage {
                    around(inc.point.storage_power, power_step, grid.points)
                } else {
                    vec![0.0]
                },
                duration: if with_storage {
                    around(hours, duration_step, grid.points)
                } else {
                    vec![0.0]
                },
            };
        }
        let (best, evals) = search(&prep, &axes);
        evaluations += evals;
        log::debug!("oracle pass {pass}: {evals} evaluations, best welfare {}", best.welfare);
        let best = match incumbent.take() {
            Some(prev) => better(prev, best),
            None => best,
        };
        pass_welfare.push(best.welfare);
        incumbent = Some(best);
    }
    let best = incumbent.expect("at least one pass");
    let op = Operating::new(&prep, &best.point.generators);
    let best_dispatch = op.dispatch(best.point.storage_power, best.point.storage_energy);
    Ok(OracleResult {
        best_welfare: best.welfare,
        best_point: best.point,
        best_dispatch,
        grid: grid.clone(),
        evaluations,
        pass_welfare,
    })
}
