//! Upper level: microgrid dispatch of microturbines and storage.
//!
//! JAYA searches commitment flags and fractional dispatch genes; every
//! candidate is decoded through a repair that keeps unit limits, storage
//! limits and the end-of-day SOC equality by construction, closes the power
//! balance with the controlled-load slack, and tops the spinning reserve up
//! to the chance-constrained requirement. Whatever the repair cannot fix
//! (unserved demand, reserve shortfall) is priced by penalty weights.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::jaya::{self, IterationStats, JayaConfig, Problem};

/// Residuals below this are treated as floating-point noise.
pub const FEASIBILITY_TOL: f64 = 1e-6;
const NOISE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MtUnit {
    pub name: String,
    /// $ per start-up.
    pub startup_cost: f64,
    /// $ per committed hour.
    pub fixed_fuel: f64,
    /// $ per kWh generated.
    pub fuel_slope: f64,
    /// $ per kW of spinning reserve per hour.
    pub reserve_cost: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl MtUnit {
    pub fn validate(&self) -> Result<()> {
        let costs = [self.startup_cost, self.fixed_fuel, self.fuel_slope, self.reserve_cost];
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Domain(format!("{}: costs must be finite and non-negative", self.name)));
        }
        if !(self.p_min >= 0.0 && self.p_min <= self.p_max && self.p_max.is_finite()) {
            return Err(Error::Domain(format!("{}: need 0 <= p_min <= p_max", self.name)));
        }
        Ok(())
    }

    /// The three-unit fleet used by the reference test system.
    pub fn reference_units() -> Vec<MtUnit> {
        let unit = |name: &str, startup, fixed, slope, p_min, p_max| MtUnit {
            name: name.into(),
            startup_cost: startup,
            fixed_fuel: fixed,
            fuel_slope: slope,
            reserve_cost: 0.04,
            p_min,
            p_max,
        };
        vec![
            unit("MT1", 1.2, 1.6, 0.35, 5.0, 35.0),
            unit("MT2", 1.2, 1.6, 0.35, 5.0, 30.0),
            unit("MT3", 1.0, 3.5, 0.26, 10.0, 65.0),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssParams {
    /// kWh.
    pub soc_min: f64,
    /// kWh.
    pub soc_max: f64,
    pub p_ch_max: f64,
    pub p_dc_max: f64,
    pub eta_ch: f64,
    pub eta_dc: f64,
    /// $ per kWh charged.
    pub charge_price: f64,
    /// $ per kWh discharged.
    pub discharge_price: f64,
    /// $ per kW of reserve per hour.
    pub reserve_price: f64,
    /// Start and end-of-day energy; the midpoint of the SOC range when absent.
    #[serde(default)]
    pub soc_start: Option<f64>,
}

impl Default for EssParams {
    fn default() -> Self {
        Self {
            soc_min: 32.0,
            soc_max: 160.0,
            p_ch_max: 40.0,
            p_dc_max: 40.0,
            eta_ch: 0.95,
            eta_dc: 0.95,
            charge_price: 0.3,
            discharge_price: 0.5,
            reserve_price: 0.02,
            soc_start: None,
        }
    }
}

impl EssParams {
    pub fn soc_star(&self) -> f64 {
        self.soc_start.unwrap_or(0.5 * (self.soc_min + self.soc_max))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 <= self.soc_min
            && self.soc_min < self.soc_max
            && self.p_ch_max >= 0.0
            && self.p_dc_max >= 0.0
            && self.eta_ch > 0.0
            && self.eta_ch <= 1.0
            && self.eta_dc > 0.0
            && self.eta_dc <= 1.0
            && self.charge_price >= 0.0
            && self.discharge_price >= 0.0
            && self.reserve_price >= 0.0;
        if !ok {
            return Err(Error::Domain("invalid ESS parameters".into()));
        }
        let star = self.soc_star();
        if !(self.soc_min..=self.soc_max).contains(&star) {
            return Err(Error::Domain(format!("ESS start SOC {star} outside its range")));
        }
        Ok(())
    }
}

/// Penalty prices ($ per kW or kWh of violation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PenaltyWeights {
    pub balance: f64,
    pub reserve: f64,
    pub soc: f64,
    pub capacity: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self {
            balance: 1e3,
            reserve: 1e3,
            soc: 1e3,
            capacity: 1e3,
        }
    }
}

/// Everything the upper level needs for one solve.
#[derive(Debug, Clone)]
pub struct UpperInputs {
    pub units: Vec<MtUnit>,
    pub ess: EssParams,
    /// Mean base load, kW.
    pub base_load: Vec<f64>,
    /// Expected joint renewable output, kW.
    pub renewable_mean: Vec<f64>,
    /// Minimum spinning reserve meeting the confidence level, kW.
    pub reserve_req: Vec<f64>,
    pub ev_load: Vec<f64>,
    /// Price the microgrid charges for EV energy, $/kWh.
    pub prices: Vec<f64>,
    pub weights: PenaltyWeights,
}

impl UpperInputs {
    pub fn periods(&self) -> usize {
        self.base_load.len()
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.periods();
        if t == 0 {
            return Err(Error::Domain("empty horizon".into()));
        }
        for (name, v) in [
            ("renewable_mean", &self.renewable_mean),
            ("reserve_req", &self.reserve_req),
            ("ev_load", &self.ev_load),
            ("prices", &self.prices),
        ] {
            if v.len() != t {
                return Err(Error::Domain(format!("{name} has {} periods, expected {t}", v.len())));
            }
        }
        for u in &self.units {
            u.validate()?;
        }
        self.ess.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperSchedule {
    /// `u[n][t]`
    pub u: Vec<Vec<bool>>,
    pub s: Vec<Vec<bool>>,
    pub p_mt: Vec<Vec<f64>>,
    pub r_mt: Vec<Vec<f64>>,
    pub p_ch: Vec<f64>,
    pub p_dc: Vec<f64>,
    pub p_res: Vec<f64>,
    pub p_un: Vec<f64>,
    /// Energy at the start of each period plus the end-of-day value.
    pub soc: Vec<f64>,
    pub reserve_req: Vec<f64>,
}

impl UpperSchedule {
    pub fn periods(&self) -> usize {
        self.p_ch.len()
    }

    /// An all-off schedule with idle storage.
    pub fn idle(units: usize, periods: usize, ess: &EssParams, reserve_req: &[f64]) -> Self {
        Self {
            u: vec![vec![false; periods]; units],
            s: vec![vec![false; periods]; units],
            p_mt: vec![vec![0.0; periods]; units],
            r_mt: vec![vec![0.0; periods]; units],
            p_ch: vec![0.0; periods],
            p_dc: vec![0.0; periods],
            p_res: vec![0.0; periods],
            p_un: vec![0.0; periods],
            soc: vec![ess.soc_star(); periods + 1],
            reserve_req: reserve_req.to_vec(),
        }
    }

    pub fn total_reserve(&self, t: usize) -> f64 {
        self.r_mt.iter().map(|r| r[t]).sum::<f64>() + self.p_res[t]
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let units = self.u.len();
        let mut header = vec!["period".to_string()];
        for prefix in ["u", "s", "p_mt", "r_mt"] {
            header.extend((0..units).map(|n| format!("{prefix}_{n}")));
        }
        header.extend(
            ["p_ch", "p_dc", "p_res", "p_un", "soc_start", "soc_end", "reserve_req", "reserve_total"]
                .map(String::from),
        );
        w.write_record(&header)?;
        let flag = |b: bool| if b { "1" } else { "0" }.to_string();
        for t in 0..self.periods() {
            let mut rec = vec![t.to_string()];
            rec.extend(self.u.iter().map(|r| flag(r[t])));
            rec.extend(self.s.iter().map(|r| flag(r[t])));
            rec.extend(self.p_mt.iter().map(|r| format!("{:.6}", r[t])));
            rec.extend(self.r_mt.iter().map(|r| format!("{:.6}", r[t])));
            for v in [
                self.p_ch[t],
                self.p_dc[t],
                self.p_res[t],
                self.p_un[t],
                self.soc[t],
                self.soc[t + 1],
                self.reserve_req[t],
                self.total_reserve(t),
            ] {
                rec.push(format!("{v:.6}"));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Net operating cost: generation, start-up, reserve and storage costs
/// minus revenue from EV charging.
pub fn net_operating_cost(sched: &UpperSchedule, ev_load: &[f64], prices: &[f64], units: &[MtUnit], ess: &EssParams) -> f64 {
    let revenue: f64 = ev_load.iter().zip(prices).map(|(p, w)| p * w).sum();
    let mut cost = 0.0;
    for t in 0..sched.periods() {
        cost += ess.discharge_price * sched.p_dc[t] + ess.charge_price * sched.p_ch[t] + ess.reserve_price * sched.p_res[t];
        for (n, unit) in units.iter().enumerate() {
            cost += unit.reserve_cost * sched.r_mt[n][t];
            if sched.s[n][t] {
                cost += unit.startup_cost;
            }
            if sched.u[n][t] {
                cost += unit.fixed_fuel + unit.fuel_slope * sched.p_mt[n][t];
            }
        }
    }
    cost - revenue
}

/// Largest violation of each constraint family over the horizon, in kW or kWh.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub mt_bounds: f64,
    pub startup: f64,
    pub balance: f64,
    pub soc_bounds: f64,
    pub soc_dynamics: f64,
    pub ess_power: f64,
    pub exclusivity: f64,
    pub soc_end: f64,
    pub mt_reserve: f64,
    pub ess_reserve: f64,
    pub reserve: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.named().iter().map(|(_, v)| *v).fold(0.0, f64::max)
    }

    pub fn named(&self) -> [(&'static str, f64); 11] {
        [
            ("mt_bounds", self.mt_bounds),
            ("startup", self.startup),
            ("balance", self.balance),
            ("soc_bounds", self.soc_bounds),
            ("soc_dynamics", self.soc_dynamics),
            ("ess_power", self.ess_power),
            ("exclusivity", self.exclusivity),
            ("soc_end", self.soc_end),
            ("mt_reserve", self.mt_reserve),
            ("ess_reserve", self.ess_reserve),
            ("reserve", self.reserve),
        ]
    }

    pub fn merge_max(&mut self, o: &Residuals) {
        let m = |a: &mut f64, b: f64| *a = a.max(b);
        m(&mut self.mt_bounds, o.mt_bounds);
        m(&mut self.startup, o.startup);
        m(&mut self.balance, o.balance);
        m(&mut self.soc_bounds, o.soc_bounds);
        m(&mut self.soc_dynamics, o.soc_dynamics);
        m(&mut self.ess_power, o.ess_power);
        m(&mut self.exclusivity, o.exclusivity);
        m(&mut self.soc_end, o.soc_end);
        m(&mut self.mt_reserve, o.mt_reserve);
        m(&mut self.ess_reserve, o.ess_reserve);
        m(&mut self.reserve, o.reserve);
    }

    fn add(&mut self, o: &Residuals) {
        self.mt_bounds += o.mt_bounds;
        self.startup += o.startup;
        self.balance += o.balance;
        self.soc_bounds += o.soc_bounds;
        self.soc_dynamics += o.soc_dynamics;
        self.ess_power += o.ess_power;
        self.exclusivity += o.exclusivity;
        self.soc_end += o.soc_end;
        self.mt_reserve += o.mt_reserve;
        self.ess_reserve += o.ess_reserve;
        self.reserve += o.reserve;
    }
}

fn per_period_residuals(sched: &UpperSchedule, inp: &UpperInputs, t: usize) -> Residuals {
    let ess = &inp.ess;
    let pos = |v: f64| if v > NOISE { v } else { 0.0 };
    let mut r = Residuals::default();
    let mut supply = 0.0;
    for (n, unit) in inp.units.iter().enumerate() {
        let (u, p, res) = (sched.u[n][t], sched.p_mt[n][t], sched.r_mt[n][t]);
        let (lo, hi) = if u { (unit.p_min, unit.p_max) } else { (0.0, 0.0) };
        r.mt_bounds = r.mt_bounds.max(pos(lo - p)).max(pos(p - hi));
        r.mt_reserve = r.mt_reserve.max(pos(p + res - hi)).max(pos(-res));
        let prev = t > 0 && sched.u[n][t - 1];
        if sched.s[n][t] != (u && !prev) {
            r.startup = 1.0;
        }
        supply += p;
    }
    let balance = supply + sched.p_dc[t] - sched.p_ch[t] + inp.renewable_mean[t]
        - inp.base_load[t]
        - inp.ev_load[t]
        - sched.p_un[t];
    r.balance = pos(balance.abs()).max(pos(-sched.p_un[t]));

    let (soc, next) = (sched.soc[t], sched.soc[t + 1]);
    r.soc_bounds = pos(ess.soc_min - next).max(pos(next - ess.soc_max));
    if t == 0 {
        r.soc_bounds = r.soc_bounds.max(pos(ess.soc_min - soc)).max(pos(soc - ess.soc_max));
        r.soc_end = r.soc_end.max(pos((soc - ess.soc_star()).abs()));
    }
    let expected = soc + ess.eta_ch * sched.p_ch[t] - sched.p_dc[t] / ess.eta_dc;
    r.soc_dynamics = pos((next - expected).abs());
    r.ess_power = pos(-sched.p_ch[t])
        .max(pos(-sched.p_dc[t]))
        .max(pos(sched.p_ch[t] - ess.p_ch_max))
        .max(pos(sched.p_dc[t] - ess.p_dc_max));
    r.exclusivity = pos(sched.p_ch[t].min(sched.p_dc[t]));
    let ess_cap = (ess.eta_dc * (soc - ess.soc_min)).min(ess.p_dc_max - sched.p_dc[t]);
    r.ess_reserve = pos(sched.p_res[t] - ess_cap).max(pos(-sched.p_res[t]));
    r.reserve = pos(sched.reserve_req[t] - sched.total_reserve(t));
    if t + 1 == sched.periods() {
        r.soc_end = r.soc_end.max(pos((next - ess.soc_star()).abs()));
    }
    r
}

/// Largest residual per constraint family.
pub fn residuals(sched: &UpperSchedule, inp: &UpperInputs) -> Residuals {
    let mut worst = Residuals::default();
    for t in 0..sched.periods() {
        worst.merge_max(&per_period_residuals(sched, inp, t));
    }
    worst
}

/// Net operating cost plus weighted violation totals. A schedule with no
/// violation scores exactly its cost.
pub fn penalized_fitness(sched: &UpperSchedule, inp: &UpperInputs, weights: &PenaltyWeights) -> f64 {
    let mut total = Residuals::default();
    for t in 0..sched.periods() {
        total.add(&per_period_residuals(sched, inp, t));
    }
    let cost = net_operating_cost(sched, &inp.ev_load, &inp.prices, &inp.units, &inp.ess);
    let penalty = weights.balance * total.balance
        + weights.reserve * total.reserve
        + weights.soc * (total.soc_bounds + total.soc_end + total.soc_dynamics)
        + weights.capacity
            * (total.mt_bounds + total.startup + total.ess_power + total.exclusivity + total.mt_reserve + total.ess_reserve);
    if penalty == 0.0 {
        cost
    } else {
        cost + penalty
    }
}

/// Gene layout for a given unit count and horizon.
#[derive(Debug, Clone, Copy)]
pub struct GeneLayout {
    pub units: usize,
    pub periods: usize,
}

impl GeneLayout {
    pub fn continuous_len(&self) -> usize {
        2 * self.units * self.periods + 3 * self.periods
    }
    pub fn binary_len(&self) -> usize {
        self.units * self.periods
    }
    /// Dispatch fraction within `[p_min, p_max]`.
    pub fn dispatch(&self, n: usize, t: usize) -> usize {
        n * self.periods + t
    }
    /// Share of committed headroom held as reserve.
    pub fn reserve(&self, n: usize, t: usize) -> usize {
        (self.units + n) * self.periods + t
    }
    pub fn charge(&self, t: usize) -> usize {
        2 * self.units * self.periods + t
    }
    pub fn discharge(&self, t: usize) -> usize {
        (2 * self.units + 1) * self.periods + t
    }
    /// Share of available discharge headroom held as reserve.
    pub fn ess_reserve(&self, t: usize) -> usize {
        (2 * self.units + 2) * self.periods + t
    }
    pub fn commitment(&self, n: usize, t: usize) -> usize {
        n * self.periods + t
    }

    pub fn bounds(&self, ess: &EssParams) -> Vec<(f64, f64)> {
        let mut b = vec![(0.0, 1.0); self.continuous_len()];
        for t in 0..self.periods {
            b[self.charge(t)] = (0.0, ess.p_ch_max);
            b[self.discharge(t)] = (0.0, ess.p_dc_max);
        }
        b
    }
}

/// Decodes genes into a schedule: storage exclusivity and SOC reachability,
/// merit-order balancing of committed units, slack closure and reserve
/// top-up. Unmet demand and reserve remain visible as residuals.
pub fn repair_and_close_balance(inp: &UpperInputs, continuous: &[f64], binary: &[bool]) -> UpperSchedule {
    let periods = inp.periods();
    let layout = GeneLayout {
        units: inp.units.len(),
        periods,
    };
    let ess = &inp.ess;
    let mut sched = UpperSchedule::idle(layout.units, periods, ess, &inp.reserve_req);

    // Storage: keep the larger of charge/discharge, then clamp each step so
    // the end-of-day target stays reachable.
    let star = ess.soc_star();
    let up = ess.eta_ch * ess.p_ch_max;
    let down = ess.p_dc_max / ess.eta_dc;
    for t in 0..periods {
        let (ch, dc) = (continuous[layout.charge(t)], continuous[layout.discharge(t)]);
        let soc = sched.soc[t];
        let wanted = if ch >= dc {
            soc + ess.eta_ch * ch
        } else {
            soc - dc / ess.eta_dc
        };
        let left = (periods - t - 1) as f64;
        let lo = ess.soc_min.max(star - left * up).max(soc - down);
        let hi = ess.soc_max.min(star + left * down).min(soc + up);
        let next = if t + 1 == periods { star } else { wanted.clamp(lo, hi) };
        if next >= soc {
            sched.p_ch[t] = ((next - soc) / ess.eta_ch).min(ess.p_ch_max);
            sched.soc[t + 1] = soc + ess.eta_ch * sched.p_ch[t];
        } else {
            sched.p_dc[t] = ((soc - next) * ess.eta_dc).min(ess.p_dc_max);
            sched.soc[t + 1] = soc - sched.p_dc[t] / ess.eta_dc;
        }
    }

    let mut merit: Vec<usize> = (0..layout.units).collect();
    merit.sort_by(|&a, &b| inp.units[a].fuel_slope.total_cmp(&inp.units[b].fuel_slope));

    for t in 0..periods {
        for (n, unit) in inp.units.iter().enumerate() {
            let on = binary[layout.commitment(n, t)];
            sched.u[n][t] = on;
            sched.s[n][t] = on && !(t > 0 && sched.u[n][t - 1]);
            if on {
                let phi = continuous[layout.dispatch(n, t)];
                sched.p_mt[n][t] = unit.p_min + phi * (unit.p_max - unit.p_min);
            }
        }
        let demand = inp.base_load[t] + inp.ev_load[t] - inp.renewable_mean[t] - sched.p_dc[t] + sched.p_ch[t];
        let mut gap = demand - sched.p_mt.iter().map(|p| p[t]).sum::<f64>();
        if gap > 0.0 {
            for &n in &merit {
                if sched.u[n][t] {
                    let lift = (inp.units[n].p_max - sched.p_mt[n][t]).min(gap);
                    sched.p_mt[n][t] += lift;
                    gap -= lift;
                }
            }
        } else if gap < 0.0 {
            for &n in merit.iter().rev() {
                if sched.u[n][t] {
                    let drop = (sched.p_mt[n][t] - inp.units[n].p_min).min(-gap);
                    sched.p_mt[n][t] -= drop;
                    gap += drop;
                }
            }
        }
        let supply: f64 = sched.p_mt.iter().map(|p| p[t]).sum();
        sched.p_un[t] = (supply + sched.p_dc[t] - sched.p_ch[t] + inp.renewable_mean[t] - inp.base_load[t] - inp.ev_load[t]).max(0.0);

        for (n, unit) in inp.units.iter().enumerate() {
            if sched.u[n][t] {
                let room = (unit.p_max - sched.p_mt[n][t]).max(0.0);
                sched.r_mt[n][t] = continuous[layout.reserve(n, t)] * room;
            }
        }
        let ess_cap = (ess.eta_dc * (sched.soc[t] - ess.soc_min)).min(ess.p_dc_max - sched.p_dc[t]).max(0.0);
        sched.p_res[t] = continuous[layout.ess_reserve(t)] * ess_cap;

        // Cheapest reserve first: storage, then unit headroom by reserve price.
        let mut short = inp.reserve_req[t] - sched.total_reserve(t);
        if short > 0.0 {
            let add = (ess_cap - sched.p_res[t]).min(short);
            sched.p_res[t] += add;
            short -= add;
        }
        if short > 0.0 {
            let mut by_price: Vec<usize> = (0..layout.units).collect();
            by_price.sort_by(|&a, &b| inp.units[a].reserve_cost.total_cmp(&inp.units[b].reserve_cost));
            for n in by_price {
                if sched.u[n][t] && short > 0.0 {
                    let room = (inp.units[n].p_max - sched.p_mt[n][t] - sched.r_mt[n][t]).max(0.0);
                    let add = room.min(short);
                    sched.r_mt[n][t] += add;
                    short -= add;
                }
            }
        }
    }
    sched
}

struct UpperProblem<'a> {
    inputs: &'a UpperInputs,
    bounds: Vec<(f64, f64)>,
    binary_len: usize,
}

impl Problem for UpperProblem<'_> {
    fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }
    fn binary_len(&self) -> usize {
        self.binary_len
    }
    fn evaluate(&self, continuous: &[f64], binary: &[bool]) -> f64 {
        let sched = repair_and_close_balance(self.inputs, continuous, binary);
        penalized_fitness(&sched, self.inputs, &self.inputs.weights)
    }
}

#[derive(Debug, Clone)]
pub struct UpperSolution {
    pub schedule: UpperSchedule,
    /// Net operating cost of the schedule.
    pub cost: f64,
    pub fitness: f64,
    pub residuals: Residuals,
    pub history: Vec<IterationStats>,
}

/// Searches the upper level with JAYA. The population is seeded with an
/// all-committed, idle-storage candidate, which covers any demand within
/// the fleet's capacity.
pub fn solve_upper(inputs: &UpperInputs, cfg: &JayaConfig) -> Result<UpperSolution> {
    inputs.validate()?;
    let layout = GeneLayout {
        units: inputs.units.len(),
        periods: inputs.periods(),
    };
    let problem = UpperProblem {
        inputs,
        bounds: layout.bounds(&inputs.ess),
        binary_len: layout.binary_len(),
    };
    let all_on = (vec![0.0; layout.continuous_len()], vec![true; layout.binary_len()]);
    let result = jaya::optimize_seeded(&problem, cfg, vec![all_on])?;
    let schedule = repair_and_close_balance(inputs, &result.best.continuous, &result.best.binary);
    let residuals = residuals(&schedule, inputs);
    if residuals.max() > FEASIBILITY_TOL {
        let report: Vec<String> = residuals
            .named()
            .iter()
            .filter(|(_, v)| *v > FEASIBILITY_TOL)
            .map(|(k, v)| format!("{k}={v:.6}"))
            .collect();
        return Err(Error::UpperInfeasible(report.join(", ")));
    }
    let cost = net_operating_cost(&schedule, &inputs.ev_load, &inputs.prices, &inputs.units, &inputs.ess);
    Ok(UpperSolution {
        schedule,
        cost,
        fitness: result.best.fitness,
        residuals,
        history: result.history,
    })
}
