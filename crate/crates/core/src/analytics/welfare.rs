use serde::Serialize;

use super::SolvedProgram;
use crate::error::Result;
use crate::model::{gross_surplus, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelfareBreakdown {
    pub gross_surplus: f64,
    pub operating_cost: f64,
    pub investment_cost: f64,
    pub net_welfare: f64,
}

impl WelfareBreakdown {
    fn scaled(self, k: f64) -> Self {
        Self {
            gross_surplus: self.gross_surplus * k,
            operating_cost: self.operating_cost * k,
            investment_cost: self.investment_cost * k,
            net_welfare: self.net_welfare * k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WelfareReport {
    /// Dollars per cycle.
    pub per_cycle: WelfareBreakdown,
    /// Dollars per year.
    pub annual: WelfareBreakdown,
    /// Per cycle, valued at the dual prices.
    pub consumer_surplus: f64,
    /// Per-generator profit net of investment, per cycle, in scenario order.
    pub generator_profit: Vec<(String, f64)>,
    pub storage_profit: f64,
}

impl WelfareReport {
    /// Consumer surplus plus all producer profits. Equals net welfare
    /// whenever the balance rows hold.
    pub fn split_total(&self) -> f64 {
        self.consumer_surplus + self.generator_profit.iter().map(|(_, v)| v).sum::<f64>() + self.storage_profit
    }
}

pub fn welfare_report(solved: &SolvedProgram, s: &Scenario) -> Result<WelfareReport> {
    let periods = s.period_pair()?;
    let n = f64::from(s.cycles_n);

    let mut gross = 0.0;
    let mut operating = 0.0;
    let mut consumer = 0.0;
    let mut generator_profit: Vec<(String, f64)> = s
        .generators
        .iter()
        .enumerate()
        .map(|(g, tech)| {
            (
                tech.name.clone(),
                -tech.investment_cost * solved.generator_capacity(g) / n,
            )
        })
        .collect();
    let mut storage_profit = 0.0;

    for p in periods {
        let t = p.duration;
        let price = solved.price(p.label);
        let ell = solved.consumption(p.label).max(0.0);
        let surplus = gross_surplus(&p.demand, ell)?;
        gross += t * surplus;
        consumer += t * (surplus - price * ell);
        for (g, tech) in s.generators.iter().enumerate() {
            let q = solved.generation(g, p.label);
            operating += t * tech.variable_cost * q;
            generator_profit[g].1 += t * (price - tech.variable_cost) * q;
        }
        storage_profit += t * price * (solved.discharge(p.label) - solved.charge(p.label));
    }

    let mut investment: f64 = s
        .generators
        .iter()
        .enumerate()
        .map(|(g, tech)| tech.investment_cost * solved.generator_capacity(g))
        .sum();
    if let Some(st) = &s.storage {
        let storage_investment = st.power_cost * solved.storage_power() + st.energy_cost * solved.storage_energy();
        investment += storage_investment;
        storage_profit -= storage_investment / n;
    }
    let investment = investment / n;

    let per_cycle = WelfareBreakdown {
        gross_surplus: gross,
        operating_cost: operating,
        investment_cost: investment,
        net_welfare: gross - operating - investment,
    };
    Ok(WelfareReport {
        per_cycle,
        annual: per_cycle.scaled(n),
        consumer_surplus: consumer,
        generator_profit,
        storage_profit,
    })
}
