//! Assembly of the welfare-maximisation program as a dense concave QP.
//!
//! The program is stored in maximisation form
//!
//! ```text
//! maximise ½ xᵀQx + cᵀx   subject to   A x (=|≤) b
//! ```
//!
//! with the equality rows first. Rows of the scenario program keep the
//! per-period duration multipliers, so their duals are expressed per hour of
//! the period and the balance duals read directly as $/MWh.

use std::fmt::{self, Write as _};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PeriodLabel, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VariableKind {
    /// Power capacity of generator `gen` (index into `Scenario::generators`).
    GeneratorCapacity {
        gen: usize,
    },
    StoragePower,
    StorageEnergy,
    Generation {
        gen: usize,
        period: PeriodLabel,
    },
    Charge {
        period: PeriodLabel,
    },
    Discharge {
        period: PeriodLabel,
    },
    Consumption {
        period: PeriodLabel,
    },
    /// Unnamed column of a hand-built program.
    Free {
        index: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableIndex {
    pub kind: VariableKind,
    pub name: String,
    pub column: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Equal,
    LessEqual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ConstraintKind {
    Balance {
        period: PeriodLabel,
    },
    GenMax {
        gen: usize,
        period: PeriodLabel,
    },
    GenMin {
        gen: usize,
        period: PeriodLabel,
    },
    ChargeMax {
        period: PeriodLabel,
    },
    DischargeMax {
        period: PeriodLabel,
    },
    ChargeMin {
        period: PeriodLabel,
    },
    DischargeMin {
        period: PeriodLabel,
    },
    RoundTrip,
    EnergyCharge,
    EnergyDischarge,
    /// Non-negativity of a capacity column.
    CapacityNonneg {
        variable: VariableKind,
    },
    ConsumptionNonneg {
        period: PeriodLabel,
    },
    Free {
        index: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintIndex {
    pub kind: ConstraintKind,
    pub name: String,
    /// Symbol of the associated multiplier, e.g. `λ_onp` or `γ^+`.
    pub dual_symbol: String,
    pub row: usize,
    pub sense: Sense,
}

/// Parameters of the scenario a program was built from, kept so the
/// optimality conditions can be evaluated symbol by symbol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgramOrigin {
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    pub quadratic: DMatrix<f64>,
    pub linear: DVector<f64>,
    /// One row per constraint, equality rows first.
    pub constraints: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub variables: Vec<VariableIndex>,
    pub rows: Vec<ConstraintIndex>,
    pub origin: Option<ProgramOrigin>,
}

impl QuadraticProgram {
    /// Program from dense blocks with generated names `x0, x1, …`,
    /// `eq0, …`, `in0, …`.
    pub fn from_dense(
        quadratic: DMatrix<f64>,
        linear: DVector<f64>,
        eq: Option<(DMatrix<f64>, DVector<f64>)>,
        ineq: Option<(DMatrix<f64>, DVector<f64>)>,
    ) -> Result<Self> {
        let n = linear.len();
        if quadratic.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: quadratic.nrows(),
            });
        }
        let mut blocks = Vec::new();
        for (block, sense) in [(eq, Sense::Equal), (ineq, Sense::LessEqual)] {
            if let Some((a, b)) = block {
                if a.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: a.ncols(),
                    });
                }
                if a.nrows() != b.len() {
                    return Err(Error::DimensionMismatch {
                        expected: a.nrows(),
                        actual: b.len(),
                    });
                }
                blocks.push((a, b, sense));
            }
        }
        let m: usize = blocks.iter().map(|(a, _, _)| a.nrows()).sum();
        let mut constraints = DMatrix::zeros(m, n);
        let mut rhs = DVector::zeros(m);
        let mut rows = Vec::with_capacity(m);
        let mut r = 0;
        for (a, b, sense) in blocks {
            for i in 0..a.nrows() {
                constraints.row_mut(r).copy_from(&a.row(i));
                rhs[r] = b[i];
                let prefix = if sense == Sense::Equal { "eq" } else { "in" };
                rows.push(ConstraintIndex {
                    kind: ConstraintKind::Free { index: r },
                    name: format!("{prefix}{i}"),
                    dual_symbol: format!("y_{r}"),
                    row: r,
                    sense,
                });
                r += 1;
            }
        }
        let variables = (0..n)
            .map(|j| VariableIndex {
                kind: VariableKind::Free { index: j },
                name: format!("x{j}"),
                column: j,
            })
            .collect();
        Ok(Self {
            quadratic,
            linear,
            constraints,
            rhs,
            variables,
            rows,
            origin: None,
        })
    }

    pub fn num_variables(&self) -> usize {
        self.linear.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.rows.iter().filter(|r| r.sense == Sense::Equal).count()
    }

    pub fn num_inequalities(&self) -> usize {
        self.num_rows() - self.num_equalities()
    }

    pub fn column(&self, kind: VariableKind) -> Option<usize> {
        self.variables.iter().find(|v| v.kind == kind).map(|v| v.column)
    }

    pub fn row(&self, kind: ConstraintKind) -> Option<usize> {
        self.rows.iter().find(|r| r.kind == kind).map(|r| r.row)
    }

    pub fn row_by_name(&self, name: &str) -> Option<&ConstraintIndex> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn scenario(&self) -> Option<&Scenario> {
        self.origin.as_ref().map(|o| &o.scenario)
    }

    fn check_dimension(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.num_variables() {
            return Err(Error::DimensionMismatch {
                expected: self.num_variables(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// `½xᵀQx + cᵀx`. For scenario programs this is welfare in dollars per
    /// cycle, with annual investment divided by the cycle count.
    pub fn objective_value(&self, x: &[f64]) -> Result<f64> {
        self.check_dimension(x)?;
        let x = DVector::from_column_slice(x);
        Ok(0.5 * x.dot(&(&self.quadratic * &x)) + self.linear.dot(&x))
    }

    /// Gradient of the objective, `Qx + c`.
    pub fn gradient(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dimension(x)?;
        let x = DVector::from_column_slice(x);
        Ok(&self.quadratic * &x + &self.linear)
    }

    /// `A x − b` per row.
    pub fn row_residuals(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dimension(x)?;
        let x = DVector::from_column_slice(x);
        Ok(&self.constraints * &x - &self.rhs)
    }

    /// Largest violation of any row at `x`.
    pub fn max_violation(&self, x: &[f64]) -> Result<f64> {
        let r = self.row_residuals(x)?;
        Ok(self
            .rows
            .iter()
            .map(|row| match row.sense {
                Sense::Equal => r[row.row].abs(),
                Sense::LessEqual => r[row.row].max(0.0),
            })
            .fold(0.0, f64::max))
    }

    /// Plain-text listing, one line per constraint row, for diffing.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        out.push_str("maximise 1/2 x'Qx + c'x\n");
        for v in &self.variables {
            let q = self.quadratic[(v.column, v.column)];
            let _ = writeln!(
                out,
                "  col {:>2} {:<22} c = {:<14} Qjj = {}",
                v.column,
                v.name,
                fmt_coef(self.linear[v.column]),
                fmt_coef(q)
            );
        }
        out.push_str("subject to\n");
        for r in &self.rows {
            let mut terms = String::new();
            for v in &self.variables {
                let a = self.constraints[(r.row, v.column)];
                if a != 0.0 {
                    let sign = if a < 0.0 { '-' } else { '+' };
                    let _ = write!(terms, " {sign} {}*{}", fmt_coef(a.abs()), v.name);
                }
            }
            let op = match r.sense {
                Sense::Equal => "=",
                Sense::LessEqual => "<=",
            };
            let _ = writeln!(
                out,
                "  row {:>2} {:<24} [{}]{} {op} {}",
                r.row,
                r.name,
                r.dual_symbol,
                terms,
                fmt_coef(self.rhs[r.row])
            );
        }
        out
    }
}

impl fmt::Display for QuadraticProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.listing())
    }
}

fn fmt_coef(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

/// A row as `(index, sparse coefficients, rhs)`.
type SparseRow = (ConstraintIndex, Vec<(usize, f64)>, f64);

struct Builder {
    n: usize,
    variables: Vec<VariableIndex>,
    rows: Vec<SparseRow>,
}

impl Builder {
    fn var(&mut self, kind: VariableKind, name: String) -> usize {
        let column = self.n;
        self.variables.push(VariableIndex { kind, name, column });
        self.n += 1;
        column
    }

    fn row(
        &mut self,
        kind: ConstraintKind,
        name: String,
        dual_symbol: String,
        sense: Sense,
        terms: Vec<(usize, f64)>,
        rhs: f64,
    ) {
        let row = self.rows.len();
        self.rows.push((
            ConstraintIndex {
                kind,
                name,
                dual_symbol,
                row,
                sense,
            },
            terms,
            rhs,
        ));
    }
}

/// Builds the welfare-maximisation program of a validated scenario. Storage
/// columns and rows are omitted entirely when the scenario has no storage.
pub fn build_program(s: &Scenario) -> Result<QuadraticProgram> {
    s.validate()?;
    let periods = s.period_pair()?;
    let n_cycles = f64::from(s.cycles_n);
    let mut b = Builder {
        n: 0,
        variables: Vec::new(),
        rows: Vec::new(),
    };

    let cap_gen: Vec<usize> = s
        .generators
        .iter()
        .enumerate()
        .map(|(g, tech)| b.var(VariableKind::GeneratorCapacity { gen: g }, format!("K_{}", tech.name)))
        .collect();
    let storage = s.storage.map(|st| {
        let k = b.var(VariableKind::StoragePower, "K_s".into());
        let e = b.var(VariableKind::StorageEnergy, "E".into());
        (st, k, e)
    });
    let gen: Vec<[usize; 2]> = s
        .generators
        .iter()
        .enumerate()
        .map(|(g, tech)| {
            PeriodLabel::ALL.map(|p| {
                b.var(
                    VariableKind::Generation { gen: g, period: p },
                    format!("q_{}_{}", tech.name, p.tag()),
                )
            })
        })
        .collect();
    let flows = storage.map(|_| {
        let charge = PeriodLabel::ALL.map(|p| b.var(VariableKind::Charge { period: p }, format!("q+_{}", p.tag())));
        let discharge =
            PeriodLabel::ALL.map(|p| b.var(VariableKind::Discharge { period: p }, format!("q-_{}", p.tag())));
        (charge, discharge)
    });
    let ell = PeriodLabel::ALL.map(|p| b.var(VariableKind::Consumption { period: p }, format!("ell_{}", p.tag())));

    let n = b.n;
    let mut quadratic = DMatrix::zeros(n, n);
    let mut linear = DVector::zeros(n);
    for (i, period) in periods.iter().enumerate() {
        let t = period.duration;
        quadratic[(ell[i], ell[i])] = -t * period.demand.slope;
        linear[ell[i]] = t * period.demand.intercept;
        for (g, tech) in s.generators.iter().enumerate() {
            linear[gen[g][i]] = -t * tech.variable_cost;
        }
    }
    for (g, tech) in s.generators.iter().enumerate() {
        linear[cap_gen[g]] = -tech.investment_cost / n_cycles;
    }
    if let Some((st, k, e)) = storage {
        linear[k] = -st.power_cost / n_cycles;
        linear[e] = -st.energy_cost / n_cycles;
    }

    // balance
    for (i, period) in periods.iter().enumerate() {
        let t = period.duration;
        let p = period.label;
        let mut terms = vec![(ell[i], t)];
        for g in &gen {
            terms.push((g[i], -t));
        }
        if let Some((charge, discharge)) = flows {
            terms.push((charge[i], t));
            terms.push((discharge[i], -t));
        }
        b.row(
            ConstraintKind::Balance { period: p },
            format!("balance_{}", p.tag()),
            format!("λ_{}", p.tag()),
            Sense::Equal,
            terms,
            0.0,
        );
    }
    // generator limits
    for (g, tech) in s.generators.iter().enumerate() {
        for (i, period) in periods.iter().enumerate() {
            let (t, p) = (period.duration, period.label);
            b.row(
                ConstraintKind::GenMax { gen: g, period: p },
                format!("genmax_{}_{}", tech.name, p.tag()),
                format!("π_{},{}", tech.name, p.tag()),
                Sense::LessEqual,
                vec![(gen[g][i], t), (cap_gen[g], -t)],
                0.0,
            );
        }
    }
    for (g, tech) in s.generators.iter().enumerate() {
        for (i, period) in periods.iter().enumerate() {
            let (t, p) = (period.duration, period.label);
            b.row(
                ConstraintKind::GenMin { gen: g, period: p },
                format!("genmin_{}_{}", tech.name, p.tag()),
                format!("ψ_{},{}", tech.name, p.tag()),
                Sense::LessEqual,
                vec![(gen[g][i], -t)],
                0.0,
            );
        }
    }
    if let (Some((st, k, e)), Some((charge, discharge))) = (storage, flows) {
        let eta = st.efficiency;
        for (i, period) in periods.iter().enumerate() {
            let (t, p) = (period.duration, period.label);
            b.row(
                ConstraintKind::ChargeMax { period: p },
                format!("chargemax_{}", p.tag()),
                format!("σ^+_{}", p.tag()),
                Sense::LessEqual,
                vec![(charge[i], t), (k, -t)],
                0.0,
            );
        }
        for (i, period) in periods.iter().enumerate() {
            let (t, p) = (period.duration, period.label);
            b.row(
                ConstraintKind::DischargeMax { period: p },
                format!("dischargemax_{}", p.tag()),
                format!("σ^-_{}", p.tag()),
                Sense::LessEqual,
                vec![(discharge[i], t), (k, -t)],
                0.0,
            );
        }
        for (i, period) in periods.iter().enumerate() {
            let (t, p) = (period.duration, period.label);
            b.row(
                ConstraintKind::ChargeMin { period: p },
                format!("chargemin_{}", p.tag()),
                format!("ζ^+_{}", p.tag()),
                Sense::LessEqual,
                vec![(charge[i], -t)],
                0.0,
            );
        }
        for (i, period) in periods.iter().enumerate() {
            let (t, p) = (period.duration, period.label);
            b.row(
                ConstraintKind::DischargeMin { period: p },
                format!("dischargemin_{}", p.tag()),
                format!("ζ^-_{}", p.tag()),
                Sense::LessEqual,
                vec![(discharge[i], -t)],
                0.0,
            );
        }
        let mut rte = Vec::new();
        let mut e_charge = Vec::new();
        let mut e_discharge = Vec::new();
        for (i, period) in periods.iter().enumerate() {
            let t = period.duration;
            rte.push((discharge[i], t));
            rte.push((charge[i], -eta * t));
            e_charge.push((charge[i], eta * t));
            e_discharge.push((discharge[i], t));
        }
        e_charge.push((e, -1.0));
        e_discharge.push((e, -1.0));
        b.row(
            ConstraintKind::RoundTrip,
            "rte".into(),
            "μ".into(),
            Sense::LessEqual,
            rte,
            0.0,
        );
        b.row(
            ConstraintKind::EnergyCharge,
            "energy_charge".into(),
            "γ^+".into(),
            Sense::LessEqual,
            e_charge,
            0.0,
        );
        b.row(
            ConstraintKind::EnergyDischarge,
            "energy_discharge".into(),
            "γ^-".into(),
            Sense::LessEqual,
            e_discharge,
            0.0,
        );
    }
    let mut capacity_cols: Vec<(VariableKind, usize, String)> = s
        .generators
        .iter()
        .enumerate()
        .map(|(g, tech)| {
            (
                VariableKind::GeneratorCapacity { gen: g },
                cap_gen[g],
                format!("K_{}", tech.name),
            )
        })
        .collect();
    if let Some((_, k, e)) = storage {
        capacity_cols.push((VariableKind::StoragePower, k, "K_s".into()));
        capacity_cols.push((VariableKind::StorageEnergy, e, "E".into()));
    }
    for (kind, col, name) in capacity_cols {
        b.row(
            ConstraintKind::CapacityNonneg { variable: kind },
            format!("capacity_nonneg_{name}"),
            format!("ν_{name}"),
            Sense::LessEqual,
            vec![(col, -1.0)],
            0.0,
        );
    }
    for (i, p) in PeriodLabel::ALL.iter().enumerate() {
        b.row(
            ConstraintKind::ConsumptionNonneg { period: *p },
            format!("ell_nonneg_{}", p.tag()),
            format!("ν_ell_{}", p.tag()),
            Sense::LessEqual,
            vec![(ell[i], -1.0)],
            0.0,
        );
    }

    let m = b.rows.len();
    let mut constraints = DMatrix::zeros(m, n);
    let mut rhs = DVector::zeros(m);
    let mut rows = Vec::with_capacity(m);
    for (idx, terms, r) in b.rows {
        for (col, a) in terms {
            constraints[(idx.row, col)] += a;
        }
        rhs[idx.row] = r;
        rows.push(idx);
    }

    Ok(QuadraticProgram {
        quadratic,
        linear,
        constraints,
        rhs,
        variables: b.variables,
        rows,
        origin: Some(ProgramOrigin { scenario: s.clone() }),
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    fn bundled() -> Scenario {
        Scenario::from_json_str(include_str!("../scenarios/paper_table1.json")).unwrap()
    }

    #[test]
    fn with_storage_dimensions() {
        let qp = build_program(&bundled()).unwrap();
        // 2 K_g + K_s + E + 4 q_g + 2 q+ + 2 q- + 2 ell
        assert_eq!(qp.num_variables(), 14);
        assert_eq!(qp.num_equalities(), 2);
        // 4 genmax + 4 genmin + 2·4 storage power/sign rows + rte + 2 energy rows
        // + 4 capacity_nonneg + 2 ell_nonneg
        assert_eq!(qp.num_inequalities(), 25);
        assert!(qp.rows[..2].iter().all(|r| r.sense == Sense::Equal));
        assert!(qp.rows[2..].iter().all(|r| r.sense == Sense::LessEqual));
    }

    #[test]
    fn without_storage_omits_storage_columns_and_rows() {
        let qp = build_program(&bundled().without_storage()).unwrap();
        assert_eq!(qp.num_variables(), 8);
        assert_eq!(qp.num_inequalities(), 4 + 4 + 2 + 2);
        assert!(qp.column(VariableKind::StoragePower).is_none());
        assert!(qp
            .column(VariableKind::Charge {
                period: PeriodLabel::OffPeak
            })
            .is_none());
        assert!(qp.row(ConstraintKind::RoundTrip).is_none());
        assert!(qp.row(ConstraintKind::EnergyCharge).is_none());
        assert!(qp
            .row(ConstraintKind::ChargeMax {
                period: PeriodLabel::OnPeak
            })
            .is_none());
    }

    #[test]
    fn quadratic_has_only_consumption_curvature() {
        for s in [bundled(), bundled().without_storage()] {
            let qp = build_program(&s).unwrap();
            assert_eq!(qp.quadratic, qp.quadratic.transpose());
            let nonzero: Vec<_> = qp.quadratic.iter().filter(|v| **v != 0.0).collect();
            assert_eq!(nonzero.len(), 2);
            let on = qp
                .column(VariableKind::Consumption {
                    period: PeriodLabel::OnPeak,
                })
                .unwrap();
            let off = qp
                .column(VariableKind::Consumption {
                    period: PeriodLabel::OffPeak,
                })
                .unwrap();
            assert_eq!(qp.quadratic[(on, on)], -4.0 * (100.0 / 1500.0));
            assert!((qp.quadratic[(off, off)] + 20.0 * 0.02).abs() < 1e-15);
        }
    }

    #[test]
    fn origin_is_feasible_with_zero_objective() {
        let qp = build_program(&bundled()).unwrap();
        let zero = vec![0.0; qp.num_variables()];
        assert_eq!(qp.max_violation(&zero).unwrap(), 0.0);
        assert_eq!(qp.objective_value(&zero).unwrap(), 0.0);
    }

    #[test]
    fn objective_matches_welfare_formula() {
        let s = bundled();
        let qp = build_program(&s).unwrap();
        let mut x = vec![0.0; qp.num_variables()];
        let set = |x: &mut Vec<f64>, k, v| x[qp.column(k).unwrap()] = v;
        use PeriodLabel::*;
        set(&mut x, VariableKind::GeneratorCapacity { gen: 0 }, 10_000.0);
        set(&mut x, VariableKind::GeneratorCapacity { gen: 1 }, 1_000.0);
        set(&mut x, VariableKind::StoragePower, 2_000.0);
        set(&mut x, VariableKind::StorageEnergy, 8_000.0);
        set(&mut x, VariableKind::Generation { gen: 0, period: OnPeak }, 9_000.0);
        set(&mut x, VariableKind::Generation { gen: 1, period: OnPeak }, 500.0);
        set(&mut x, VariableKind::Consumption { period: OnPeak }, 13_000.0);
        set(&mut x, VariableKind::Consumption { period: OffPeak }, 9_000.0);
        set(
            &mut x,
            VariableKind::Generation {
                gen: 0,
                period: OffPeak,
            },
            9_400.0,
        );

        let [on, off] = s.period_pair().unwrap();
        let surplus =
            |p: &crate::model::Period, l: f64| p.duration * (p.demand.intercept * l - 0.5 * p.demand.slope * l * l);
        let expected = surplus(on, 13_000.0) + surplus(off, 9_000.0)
            - 4.0 * (20.0 * 9_000.0 + 100.0 * 500.0)
            - 20.0 * 20.0 * 9_400.0
            - (240_000.0 * 10_000.0 + 120_000.0 * 1_000.0 + 36_000.0 * 2_000.0 + 31_000.0 * 8_000.0) / 365.0;
        let got = qp.objective_value(&x).unwrap();
        assert!((got - expected).abs() <= 1e-9 * expected.abs(), "{got} vs {expected}");
    }

    #[test]
    fn objective_rejects_wrong_dimension() {
        let qp = build_program(&bundled()).unwrap();
        assert!(matches!(
            qp.objective_value(&[0.0; 3]),
            Err(Error::DimensionMismatch {
                expected: 14,
                actual: 3
            })
        ));
    }

    #[test]
    fn rows_keep_duration_scaling() {
        let qp = build_program(&bundled()).unwrap();
        let bal = qp
            .row(ConstraintKind::Balance {
                period: PeriodLabel::OffPeak,
            })
            .unwrap();
        let ell = qp
            .column(VariableKind::Consumption {
                period: PeriodLabel::OffPeak,
            })
            .unwrap();
        let qplus = qp
            .column(VariableKind::Charge {
                period: PeriodLabel::OffPeak,
            })
            .unwrap();
        assert_eq!(qp.constraints[(bal, ell)], 20.0);
        assert_eq!(qp.constraints[(bal, qplus)], 20.0);
        let ech = qp.row(ConstraintKind::EnergyCharge).unwrap();
        assert!((qp.constraints[(ech, qplus)] - 0.85 * 20.0).abs() < 1e-12);
        let e = qp.column(VariableKind::StorageEnergy).unwrap();
        assert_eq!(qp.constraints[(ech, e)], -1.0);
    }

    #[test]
    fn names_are_unique_and_round_trip() {
        let qp = build_program(&bundled()).unwrap();
        let names: HashSet<_> = qp.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names.len(), qp.num_rows());
        let kinds: HashSet<_> = qp.rows.iter().map(|r| r.kind).collect();
        assert_eq!(kinds.len(), qp.num_rows());
        for r in &qp.rows {
            assert_eq!(qp.row(r.kind), Some(r.row));
            assert_eq!(qp.row_by_name(&r.name).unwrap().row, r.row);
        }
        let cols: HashSet<_> = qp.variables.iter().map(|v| v.kind).collect();
        assert_eq!(cols.len(), qp.num_variables());
        for v in &qp.variables {
            assert_eq!(qp.column(v.kind), Some(v.column));
        }
    }

    #[test]
    fn listing_has_one_line_per_row() {
        let qp = build_program(&bundled()).unwrap();
        let text = qp.listing();
        assert_eq!(
            text.lines().filter(|l| l.trim_start().starts_with("row")).count(),
            qp.num_rows()
        );
        assert!(text.contains("balance_onp"));
        assert!(text.contains("[γ^-]"));
    }

    #[test]
    fn invalid_scenario_is_rejected() {
        let mut s = bundled();
        s.cycles_n = 0;
        assert!(matches!(build_program(&s), Err(Error::InvalidScenario(_))));
    }
}
