//! Lower level: cost-minimizing EV fleet charging as a linear program.
//!
//! One variable per (session, period) pair inside the session's window,
//! bounded by the charger rating. Rows cap the fleet's aggregate power per
//! period and hold each battery between its required energy and its SOC
//! ceiling. Energy into the battery is `efficiency * power * 1 h`; billing
//! is on the grid side.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::fleet::{EvParams, EvSession};
use crate::ipm::{self, IpmOptions, LpProblem};
use crate::HORIZON;

/// Charging-station investment, amortized per day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub investment: f64,
    pub service_years: f64,
}

impl Default for Station {
    fn default() -> Self {
        Self {
            investment: 3000.0,
            service_years: 10.0,
        }
    }
}

impl Station {
    pub fn daily_cost(&self) -> f64 {
        self.investment / (365.0 * self.service_years)
    }
}

#[derive(Debug, Clone)]
pub struct ChargingLp {
    pub problem: LpProblem,
    /// `(session position, period)` of each LP variable.
    pub vars: Vec<(usize, usize)>,
    pub prices: Vec<f64>,
    pub caps: Vec<f64>,
    pub session_ids: Vec<usize>,
    pub rated_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargingPlan {
    pub session_ids: Vec<usize>,
    /// `power[k][t]`, kW, for session position `k` and period `t`.
    pub power: Vec<Vec<f64>>,
    pub ev_load: Vec<f64>,
    pub variable_cost: f64,
    pub total_cost: f64,
    pub iterations: usize,
    pub max_complementarity: f64,
}

impl ChargingPlan {
    /// Energy delivered into the battery of session position `k`.
    pub fn delivered(&self, k: usize, efficiency: f64) -> f64 {
        efficiency * self.power[k].iter().sum::<f64>()
    }

    /// Writes the session-by-period matrix and a trailing `total` row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["ev_id".to_string()];
        header.extend((0..HORIZON).map(|t| format!("p{t}")));
        w.write_record(&header)?;
        for (id, row) in self.session_ids.iter().zip(&self.power) {
            let mut rec = vec![id.to_string()];
            rec.extend(row.iter().map(|v| format!("{v:.6}")));
            w.write_record(&rec)?;
        }
        let mut rec = vec!["total".to_string()];
        rec.extend(self.ev_load.iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec)?;
        w.flush()?;
        Ok(())
    }
}

/// Aggregate EV cap from the installed supply: `alpha * (sum of MT maxima
/// + ESS discharge maximum - base load)`, floored at zero.
pub fn capacity_caps(mt_capacity: f64, ess_discharge_max: f64, base_load: &[f64], alpha: f64) -> Vec<f64> {
    base_load
        .iter()
        .map(|l| (alpha * (mt_capacity + ess_discharge_max - l)).max(0.0))
        .collect()
}

pub fn build_lp(
    sessions: &[EvSession],
    ev: &EvParams,
    prices: &[f64],
    caps: &[f64],
    station: &Station,
) -> Result<ChargingLp> {
    if prices.len() != HORIZON || caps.len() != HORIZON {
        return Err(Error::Domain(format!(
            "expected {HORIZON} prices and caps, got {} and {}",
            prices.len(),
            caps.len()
        )));
    }
    if caps.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::Domain("aggregate caps must be non-negative".into()));
    }

    let mut infeasible = Vec::new();
    for s in sessions {
        let reachable: f64 = s
            .window
            .iter()
            .map(|&t| caps[t].min(ev.rated_kw) * ev.efficiency)
            .sum();
        if s.window.is_empty() || reachable + 1e-9 < s.required_energy || s.required_energy > s.energy_ceiling(ev) + 1e-9 {
            infeasible.push(s.ev_id);
        }
    }
    if !infeasible.is_empty() {
        return Err(Error::InfeasibleSessions(infeasible));
    }

    let mut problem = LpProblem {
        constant: station.daily_cost(),
        ..Default::default()
    };
    let mut vars = Vec::new();
    let mut per_period: Vec<Vec<(usize, f64)>> = vec![Vec::new(); HORIZON];
    for (k, s) in sessions.iter().enumerate() {
        let mut own = Vec::with_capacity(s.window.len());
        for &t in &s.window {
            let j = problem.add_variable(prices[t], 0.0, ev.rated_kw);
            vars.push((k, t));
            per_period[t].push((j, 1.0));
            own.push((j, ev.efficiency));
        }
        problem.add_ge(own.clone(), s.required_energy);
        problem.add_le(own, s.energy_ceiling(ev));
    }
    for (t, coeffs) in per_period.into_iter().enumerate() {
        if !coeffs.is_empty() {
            problem.add_le(coeffs, caps[t]);
        }
    }
    Ok(ChargingLp {
        problem,
        vars,
        prices: prices.to_vec(),
        caps: caps.to_vec(),
        session_ids: sessions.iter().map(|s| s.ev_id).collect(),
        rated_kw: ev.rated_kw,
    })
}

pub fn ipm_solve(lp: &ChargingLp, tol: f64, max_iter: usize) -> Result<ChargingPlan> {
    let sol = ipm::solve(&lp.problem, &IpmOptions { tol, max_iter })?;
    let mut power = vec![vec![0.0; HORIZON]; lp.session_ids.len()];
    for (&(k, t), &v) in lp.vars.iter().zip(&sol.x) {
        power[k][t] = v.clamp(0.0, lp.rated_kw);
    }
    let ev_load: Vec<f64> = (0..HORIZON).map(|t| power.iter().map(|row| row[t]).sum()).collect();
    let variable_cost = variable_cost(&ev_load, &lp.prices);
    Ok(ChargingPlan {
        session_ids: lp.session_ids.clone(),
        power,
        ev_load,
        variable_cost,
        total_cost: variable_cost + lp.problem.constant,
        iterations: sol.iterations,
        max_complementarity: sol.max_complementarity,
    })
}

fn variable_cost(ev_load: &[f64], prices: &[f64]) -> f64 {
    ev_load.iter().zip(prices).map(|(p, w)| p * w).sum()
}

/// Fleet charging cost at `prices` plus the station's daily amortization.
pub fn charging_cost(plan: &ChargingPlan, prices: &[f64], station: &Station) -> f64 {
    variable_cost(&plan.ev_load, prices) + station.daily_cost()
}

/// Largest violation of the per-EV power bounds, energy box and aggregate caps.
pub fn plan_violation(plan: &ChargingPlan, sessions: &[EvSession], ev: &EvParams, caps: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, s) in sessions.iter().enumerate() {
        for (t, &p) in plan.power[k].iter().enumerate() {
            let limit = if s.window.contains(&t) { ev.rated_kw } else { 0.0 };
            worst = worst.max(-p).max(p - limit);
        }
        let delivered = plan.delivered(k, ev.efficiency);
        worst = worst
            .max(s.required_energy - delivered)
            .max(delivered - s.energy_ceiling(ev));
    }
    for (load, cap) in plan.ev_load.iter().zip(caps) {
        worst = worst.max(load - cap);
    }
    worst
}
