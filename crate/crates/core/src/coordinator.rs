//! The real-time pricing loop coupling the two levels, joint-optimum
//! selection, and the strategy and demand-response comparisons.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::fleet::EvSession;
use crate::lower::{self, build_lp, capacity_caps, charging_cost, ipm_solve, ChargingPlan};
use crate::scenario::{RenewableProfile, Scenario, TouTable};
use crate::upper::{net_operating_cost, residuals, solve_upper, Residuals, UpperInputs, UpperSchedule, UpperSolution};
use crate::HORIZON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceOrigin {
    GridTou,
    RealTime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceProfile {
    pub prices: Vec<f64>,
    pub origin: PriceOrigin,
}

pub fn tou_profile(table: &TouTable) -> PriceProfile {
    PriceProfile {
        prices: table.prices(),
        origin: PriceOrigin::GridTou,
    }
}

/// Scales the reference price by total load over the reference power,
/// floored at `floor`.
pub fn real_time_price(ev_load: &[f64], base_load: &[f64], p_ref: f64, omega_ref: f64, floor: f64) -> Result<PriceProfile> {
    if ev_load.len() != base_load.len() {
        return Err(Error::Domain("EV and base load lengths differ".into()));
    }
    if !(p_ref > 0.0) {
        return Err(Error::Domain("reference power must be positive".into()));
    }
    if ev_load.iter().chain(base_load).any(|l| !(*l >= 0.0)) {
        return Err(Error::Domain("loads must be non-negative".into()));
    }
    let prices = ev_load
        .iter()
        .zip(base_load)
        .map(|(e, b)| ((e + b) / p_ref * omega_ref).max(floor))
        .collect();
    Ok(PriceProfile {
        prices,
        origin: PriceOrigin::RealTime,
    })
}

/// A validated scenario with its derived inputs.
#[derive(Debug, Clone)]
pub struct Instance {
    pub scenario: Scenario,
    pub sessions: Vec<EvSession>,
    pub renewables: RenewableProfile,
    /// Aggregate EV power cap per period, kW.
    pub caps: Vec<f64>,
    pub tou: PriceProfile,
}

impl Instance {
    /// Builds the fleet and renewable sequences and checks that the lower
    /// level is feasible under the aggregate caps.
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let sessions = scenario.sessions()?;
        let renewables = scenario.renewable_profile()?;
        let mt_capacity: f64 = scenario.units.iter().map(|u| u.p_max).sum();
        let caps = capacity_caps(mt_capacity, scenario.ess.p_dc_max, &scenario.load.mean, scenario.settings.alpha);
        let tou = tou_profile(&scenario.pricing.tou);
        let inst = Self {
            scenario,
            sessions,
            renewables,
            caps,
            tou,
        };
        build_lp(&inst.sessions, &inst.scenario.fleet.ev, &inst.tou.prices, &inst.caps, &inst.scenario.station)?;
        Ok(inst)
    }

    pub fn base_load(&self) -> &[f64] {
        &self.scenario.load.mean
    }

    pub fn solve_lower(&self, prices: &[f64]) -> Result<ChargingPlan> {
        let s = &self.scenario;
        let lp = build_lp(&self.sessions, &s.fleet.ev, prices, &self.caps, &s.station)?;
        ipm_solve(&lp, s.settings.ipm_tol, s.settings.ipm_max_iter)
    }

    pub fn upper_inputs(&self, ev_load: &[f64], prices: &[f64]) -> UpperInputs {
        let s = &self.scenario;
        UpperInputs {
            units: s.units.clone(),
            ess: s.ess.clone(),
            base_load: s.load.mean.clone(),
            renewable_mean: self.renewables.expectation.clone(),
            reserve_req: self.renewables.reserve_req.clone(),
            ev_load: ev_load.to_vec(),
            prices: prices.to_vec(),
            weights: s.settings.penalty,
        }
    }

    pub fn solve_upper(&self, ev_load: &[f64], prices: &[f64]) -> Result<UpperSolution> {
        solve_upper(&self.upper_inputs(ev_load, prices), &self.scenario.jaya())
    }

    pub fn real_time(&self, ev_load: &[f64]) -> Result<PriceProfile> {
        let p = &self.scenario.pricing;
        real_time_price(ev_load, self.base_load(), p.p_ref, p.omega_ref, p.floor)
    }

    /// Microgrid net operating cost with EV energy sold at `prices`.
    pub fn f1(&self, schedule: &UpperSchedule, ev_load: &[f64], prices: &[f64]) -> f64 {
        net_operating_cost(schedule, ev_load, prices, &self.scenario.units, &self.scenario.ess)
    }

    /// Fleet charging cost at `prices`.
    pub fn f2(&self, plan: &ChargingPlan, prices: &[f64]) -> f64 {
        charging_cost(plan, prices, &self.scenario.station)
    }

    pub fn plan_violation(&self, plan: &ChargingPlan) -> f64 {
        lower::plan_violation(plan, &self.sessions, &self.scenario.fleet.ev, &self.caps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Prices the lower level optimized against.
    pub plan_prices: PriceProfile,
    /// Real-time prices of this plan's load; EV energy is billed at these.
    pub prices: PriceProfile,
    pub plan: ChargingPlan,
    pub schedule: UpperSchedule,
    pub f1: f64,
    pub f2: f64,
}

/// Runs the pricing loop. Iteration 0 plans against the grid tariff; each
/// iteration prices its plan in real time, dispatches the microgrid
/// against that load and revenue, and hands the prices to the next plan.
pub fn run_bilevel(inst: &Instance) -> Result<Vec<IterationRecord>> {
    let mut plan_prices = inst.tou.clone();
    let mut records = Vec::with_capacity(inst.scenario.settings.iterations);
    for iteration in 0..inst.scenario.settings.iterations {
        let wrap = |source: Error| Error::Iteration {
            iteration,
            source: Box::new(source),
        };
        let plan = inst.solve_lower(&plan_prices.prices).map_err(wrap)?;
        let prices = inst.real_time(&plan.ev_load).map_err(wrap)?;
        let upper = inst.solve_upper(&plan.ev_load, &prices.prices).map_err(wrap)?;
        let f1 = inst.f1(&upper.schedule, &plan.ev_load, &prices.prices);
        let f2 = inst.f2(&plan, &prices.prices);
        records.push(IterationRecord {
            iteration,
            plan_prices: std::mem::replace(&mut plan_prices, prices.clone()),
            prices,
            plan,
            schedule: upper.schedule,
            f1,
            f2,
        });
    }
    Ok(records)
}

/// Index of the point closest to `ideal`; the first wins a tie.
pub fn nearest_to_ideal(points: &[(f64, f64)], ideal: (f64, f64)) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &(a, b)) in points.iter().enumerate() {
        let d = (a - ideal.0).hypot(b - ideal.1);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

pub fn select_joint_optimum(records: &[IterationRecord], f1_io: f64, f2_io: f64) -> Option<&IterationRecord> {
    let points: Vec<_> = records.iter().map(|r| (r.f1, r.f2)).collect();
    nearest_to_ideal(&points, (f1_io, f2_io)).map(|i| &records[i])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    MgOnly,
    Joint,
    EvOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub f1: f64,
    pub f2: f64,
}

/// Both selfish optima: the tariff-optimal plan, the microgrid dispatched
/// against it, and the two ways of pricing that plan.
struct Baseline {
    plan: ChargingPlan,
    rt: PriceProfile,
    upper: UpperSolution,
    mg_only: StrategyOutcome,
    ev_only: StrategyOutcome,
}

fn baseline(inst: &Instance) -> Result<Baseline> {
    let plan = inst.solve_lower(&inst.tou.prices)?;
    let rt = inst.real_time(&plan.ev_load)?;
    let upper = inst.solve_upper(&plan.ev_load, &rt.prices)?;
    let mg_only = StrategyOutcome {
        strategy: Strategy::MgOnly,
        f1: upper.cost,
        f2: inst.f2(&plan, &rt.prices),
    };
    let ev_only = StrategyOutcome {
        strategy: Strategy::EvOnly,
        f1: inst.f1(&upper.schedule, &plan.ev_load, &inst.tou.prices),
        f2: inst.f2(&plan, &inst.tou.prices),
    };
    Ok(Baseline {
        plan,
        rt,
        upper,
        mg_only,
        ev_only,
    })
}

#[derive(Debug, Clone)]
pub struct Study {
    pub mg_only: StrategyOutcome,
    pub ev_only: StrategyOutcome,
    pub records: Vec<IterationRecord>,
    pub joint_index: usize,
    /// The tariff-optimal plan and its microgrid dispatch.
    pub tou_plan: ChargingPlan,
    pub tou_schedule: UpperSchedule,
    pub tou_real_time: PriceProfile,
}

impl Study {
    pub fn ideal(&self) -> (f64, f64) {
        (self.mg_only.f1, self.ev_only.f2)
    }

    pub fn joint_record(&self) -> &IterationRecord {
        &self.records[self.joint_index]
    }

    pub fn joint(&self) -> StrategyOutcome {
        let r = self.joint_record();
        StrategyOutcome {
            strategy: Strategy::Joint,
            f1: r.f1,
            f2: r.f2,
        }
    }

    pub fn strategies(&self) -> [StrategyOutcome; 3] {
        [self.mg_only, self.joint(), self.ev_only]
    }

    pub fn distance(&self, record: &IterationRecord) -> f64 {
        let (a, b) = self.ideal();
        (record.f1 - a).hypot(record.f2 - b)
    }

    /// Case 1 charges at the grid tariff; case 2 is the joint optimum.
    pub fn case_report(&self, inst: &Instance, case: Case) -> CaseReport {
        match case {
            Case::NoDemandResponse => case_report(
                case,
                inst.base_load(),
                &self.tou_plan.ev_load,
                &inst.tou.prices,
                self.ev_only.f1,
                self.ev_only.f2,
            ),
            Case::DemandResponse => {
                let r = self.joint_record();
                case_report(case, inst.base_load(), &r.plan.ev_load, &r.plan_prices.prices, r.f1, r.f2)
            }
        }
    }

    /// Largest upper-level residuals and lower-level plan violation over
    /// every record.
    pub fn max_residuals(&self, inst: &Instance) -> (Residuals, f64) {
        let mut upper = Residuals::default();
        let mut lower: f64 = 0.0;
        for r in &self.records {
            let inputs = inst.upper_inputs(&r.plan.ev_load, &r.prices.prices);
            upper.merge_max(&residuals(&r.schedule, &inputs));
            lower = lower.max(inst.plan_violation(&r.plan));
        }
        (upper, lower)
    }
}

/// Computes both selfish optima, runs the pricing loop and selects the
/// record closest to the ideal point.
pub fn run_study(inst: &Instance) -> Result<Study> {
    let base = baseline(inst)?;
    let records = run_bilevel(inst)?;
    let points: Vec<_> = records.iter().map(|r| (r.f1, r.f2)).collect();
    let joint_index = nearest_to_ideal(&points, (base.mg_only.f1, base.ev_only.f2))
        .ok_or_else(|| Error::Domain("no iterations were run".into()))?;
    Ok(Study {
        mg_only: base.mg_only,
        ev_only: base.ev_only,
        records,
        joint_index,
        tou_plan: base.plan,
        tou_schedule: base.upper.schedule,
        tou_real_time: base.rt,
    })
}

pub fn run_strategy(inst: &Instance, strategy: Strategy) -> Result<StrategyOutcome> {
    match strategy {
        Strategy::MgOnly => Ok(baseline(inst)?.mg_only),
        Strategy::EvOnly => Ok(baseline(inst)?.ev_only),
        Strategy::Joint => Ok(run_study(inst)?.joint()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    NoDemandResponse,
    DemandResponse,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub case: Case,
    pub ev_load: Vec<f64>,
    pub total_load: Vec<f64>,
    /// Prices the EV fleet planned against.
    pub prices: Vec<f64>,
    pub peak_to_valley: f64,
    pub price_load_correlation: f64,
    pub f1: f64,
    pub f2: f64,
}

pub fn peak_to_valley(load: &[f64]) -> f64 {
    let max = load.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = load.iter().cloned().fold(f64::INFINITY, f64::min);
    max - min
}

/// Pearson correlation; zero when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

pub fn case_report(case: Case, base_load: &[f64], ev_load: &[f64], prices: &[f64], f1: f64, f2: f64) -> CaseReport {
    let total_load: Vec<f64> = base_load.iter().zip(ev_load).map(|(b, e)| b + e).collect();
    CaseReport {
        case,
        ev_load: ev_load.to_vec(),
        peak_to_valley: peak_to_valley(&total_load),
        price_load_correlation: pearson(prices, ev_load),
        total_load,
        prices: prices.to_vec(),
        f1,
        f2,
    }
}

pub fn run_case(inst: &Instance, case: Case) -> Result<CaseReport> {
    Ok(run_study(inst)?.case_report(inst, case))
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_records_csv<W: Write>(study: &Study, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["iteration", "f1", "f2", "distance", "chosen", "ev_energy", "peak_to_valley"])?;
    for r in &study.records {
        w.write_record([
            r.iteration.to_string(),
            f6(r.f1),
            f6(r.f2),
            f6(study.distance(r)),
            u8::from(r.iteration == study.joint_index).to_string(),
            f6(r.plan.ev_load.iter().sum()),
            f6(peak_to_valley(&r.plan.ev_load)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_prices_csv<W: Write>(study: &Study, inst: &Instance, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["period", "grid_tou", "plan_price", "real_time", "base_load", "ev_load", "total_load"])?;
    let r = study.joint_record();
    for t in 0..HORIZON {
        let base = inst.base_load()[t];
        w.write_record([
            t.to_string(),
            f6(inst.tou.prices[t]),
            f6(r.plan_prices.prices[t]),
            f6(r.prices.prices[t]),
            f6(base),
            f6(r.plan.ev_load[t]),
            f6(base + r.plan.ev_load[t]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_strategies_csv<W: Write>(outcomes: &[StrategyOutcome], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["strategy", "f1", "f2"])?;
    for o in outcomes {
        let name = match o.strategy {
            Strategy::MgOnly => "mg_only",
            Strategy::Joint => "joint",
            Strategy::EvOnly => "ev_only",
        };
        w.write_record([name.to_string(), f6(o.f1), f6(o.f2)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cases_csv<W: Write>(case1: &CaseReport, case2: &CaseReport, base_load: &[f64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "period",
        "base_load",
        "case1_price",
        "case1_ev_load",
        "case1_total_load",
        "case2_price",
        "case2_ev_load",
        "case2_total_load",
    ])?;
    for t in 0..base_load.len() {
        w.write_record([
            t.to_string(),
            f6(base_load[t]),
            f6(case1.prices[t]),
            f6(case1.ev_load[t]),
            f6(case1.total_load[t]),
            f6(case2.prices[t]),
            f6(case2.ev_load[t]),
            f6(case2.total_load[t]),
        ])?;
    }
    w.flush()?;
    Ok(())
}
