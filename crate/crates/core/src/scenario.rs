//! Scenario files: every input of a bi-level run in one JSON document.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fleet::{build_windows, min_feasible_dwell, EvParams, EvSession, OvernightRule};
use crate::jaya::JayaConfig;
use crate::lower::Station;
use crate::seq::{atc_convolve, discretize, min_reserve_for_confidence, ProbSequence};
use crate::stochastic::{sample_fleet, FleetModel, PdfSpec, PeriodForecast};
use crate::upper::{EssParams, MtUnit, PenaltyWeights};
use crate::HORIZON;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Drives fleet sampling and the JAYA random stream.
    pub seed: u64,
    pub units: Vec<MtUnit>,
    pub ess: EssParams,
    pub load: LoadForecast,
    /// One entry per period.
    pub renewables: Vec<RenewableHour>,
    pub fleet: FleetConfig,
    pub station: Station,
    pub pricing: Pricing,
    pub settings: Settings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadForecast {
    /// Mean base load per period, kW.
    pub mean: Vec<f64>,
    /// Standard deviation as a fraction of the mean.
    pub fluctuation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewableHour {
    pub pv: PdfSpec,
    pub wt: PdfSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSpec {
    pub ev_id: usize,
    pub arrival_hour: f64,
    pub mileage_km: f64,
    pub soc_initial: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetConfig {
    pub ev: EvParams,
    /// Number of sampled EVs; ignored when `sessions` is given.
    pub count: usize,
    pub model: FleetModel,
    /// Explicit sessions replacing the sampled fleet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sessions: Option<Vec<SessionSpec>>,
    /// Schedulable hours after arrival; raised to the smallest value that
    /// lets every EV finish.
    pub max_dwell: usize,
    #[serde(default)]
    pub overnight: OvernightRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TouBlock {
    pub name: String,
    pub price: f64,
    pub hours: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TouTable {
    /// Price of hours not listed in any block.
    pub default_price: f64,
    /// Applied in order; a later block overrides an earlier one.
    pub blocks: Vec<TouBlock>,
}

impl TouTable {
    pub fn reference() -> Self {
        let block = |name: &str, price, hours: Vec<usize>| TouBlock {
            name: name.into(),
            price,
            hours,
        };
        let flat: Vec<usize> = (0..6).chain(7..11).chain(15..18).chain(19..24).collect();
        Self {
            default_price: 0.62,
            blocks: vec![
                block("flat", 0.62, flat),
                block("peak", 0.83, (11..15).collect()),
                block("off_peak", 0.17, (0..6).chain(18..19).collect()),
            ],
        }
    }

    pub fn prices(&self) -> Vec<f64> {
        let mut p = vec![self.default_price; HORIZON];
        for b in &self.blocks {
            for &h in &b.hours {
                if h < HORIZON {
                    p[h] = b.price;
                }
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pricing {
    /// Reference base-load power, kW.
    pub p_ref: f64,
    /// Price at the reference power, $/kWh.
    pub omega_ref: f64,
    /// Lower bound on real-time prices, $/kWh.
    pub floor: f64,
    pub tou: TouTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Confidence level of the reserve chance constraint.
    pub gamma: f64,
    /// Discretization step of the renewable sequences, kW.
    pub step_q: f64,
    /// Share of spare supply the EV fleet may draw.
    pub alpha: f64,
    /// Its `seed` is replaced by the scenario seed.
    pub jaya: JayaConfig,
    pub ipm_tol: f64,
    pub ipm_max_iter: usize,
    /// Pricing-loop iterations.
    pub iterations: usize,
    #[serde(default)]
    pub penalty: PenaltyWeights,
}

/// Per-period renewable sequences and the quantities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewableProfile {
    pub pv: Vec<ProbSequence>,
    pub wt: Vec<ProbSequence>,
    pub joint: Vec<ProbSequence>,
    pub expectation: Vec<f64>,
    pub reserve_req: Vec<f64>,
}

fn check(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Scenario(msg.into()))
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Schema-level checks; see [`crate::coordinator::Instance::new`] for
    /// feasibility checks.
    pub fn validate(&self) -> Result<()> {
        check(!self.units.is_empty(), "at least one MT unit is required")?;
        for u in &self.units {
            u.validate()?;
        }
        self.ess.validate()?;
        check(self.load.mean.len() == HORIZON, format!("load.mean needs {HORIZON} values"))?;
        check(
            self.load.mean.iter().all(|l| l.is_finite() && *l >= 0.0),
            "load.mean must be finite and non-negative",
        )?;
        check(self.load.fluctuation >= 0.0, "load.fluctuation must be non-negative")?;
        check(self.renewables.len() == HORIZON, format!("renewables needs {HORIZON} entries"))?;
        for (t, r) in self.renewables.iter().enumerate() {
            for pdf in [&r.pv, &r.wt] {
                pdf.validate()?;
                check(
                    matches!(
                        pdf,
                        PdfSpec::BetaPv { .. } | PdfSpec::WeibullWt { .. } | PdfSpec::Uniform { .. } | PdfSpec::PointMass { .. }
                    ) && pdf.support().0 >= 0.0,
                    format!("renewables[{t}]: not a non-negative power model"),
                )?;
            }
        }
        self.fleet.ev.validate()?;
        match &self.fleet.sessions {
            Some(list) => check(!list.is_empty(), "fleet.sessions is empty")?,
            None => check(self.fleet.count >= 1, "fleet.count must be at least 1")?,
        }
        check(self.fleet.max_dwell >= 1, "fleet.max_dwell must be at least 1")?;
        check(
            self.station.investment >= 0.0 && self.station.service_years > 0.0,
            "station needs non-negative investment and positive service life",
        )?;
        let p = &self.pricing;
        check(p.p_ref > 0.0 && p.omega_ref > 0.0 && p.floor > 0.0, "pricing constants must be positive")?;
        check(p.tou.default_price > 0.0, "tou.default_price must be positive")?;
        for b in &p.tou.blocks {
            check(b.price > 0.0, format!("tou block {} needs a positive price", b.name))?;
            check(b.hours.iter().all(|h| *h < HORIZON), format!("tou block {} has an hour past 23", b.name))?;
        }
        let s = &self.settings;
        check(s.gamma > 0.0 && s.gamma <= 1.0, "gamma must lie in (0, 1]")?;
        check(s.step_q > 0.0, "step_q must be positive")?;
        check(s.alpha > 0.0, "alpha must be positive")?;
        check(s.ipm_tol > 0.0 && s.ipm_max_iter >= 1, "IPM tolerance and iteration cap must be positive")?;
        check(s.iterations >= 1, "iterations must be at least 1")?;
        self.jaya().validate()
    }

    pub fn jaya(&self) -> JayaConfig {
        JayaConfig {
            seed: self.seed,
            ..self.settings.jaya.clone()
        }
    }

    pub fn forecasts(&self) -> Vec<PeriodForecast> {
        self.renewables
            .iter()
            .zip(&self.load.mean)
            .enumerate()
            .map(|(t, (r, l))| PeriodForecast::new(t, r.pv.clone(), r.wt.clone(), *l, self.load.fluctuation))
            .collect()
    }

    pub fn renewable_profile(&self) -> Result<RenewableProfile> {
        let q = self.settings.step_q;
        let mut out = RenewableProfile {
            pv: Vec::new(),
            wt: Vec::new(),
            joint: Vec::new(),
            expectation: Vec::new(),
            reserve_req: Vec::new(),
        };
        for f in self.forecasts() {
            let a = discretize(&f.pv_pdf, f.pv_pdf.support().1, q)?;
            let b = discretize(&f.wt_pdf, f.wt_pdf.support().1, q)?;
            let c = atc_convolve(&a, &b)?;
            out.expectation.push(c.expectation());
            out.reserve_req.push(min_reserve_for_confidence(&c, self.settings.gamma));
            out.pv.push(a);
            out.wt.push(b);
            out.joint.push(c);
        }
        Ok(out)
    }

    /// Sessions with windows. The dwell is raised to the smallest value
    /// that lets every EV reach its target.
    pub fn sessions(&self) -> Result<Vec<EvSession>> {
        let ev = &self.fleet.ev;
        let raw = match &self.fleet.sessions {
            Some(list) => list
                .iter()
                .map(|s| EvSession::new(s.ev_id, s.arrival_hour, s.mileage_km, s.soc_initial, ev))
                .collect::<Result<Vec<_>>>()?,
            None => sample_fleet(&self.fleet.model, ev, self.fleet.count, self.seed)?,
        };
        let dwell = self.fleet.max_dwell.max(min_feasible_dwell(&raw, ev));
        build_windows(&raw, ev, dwell, self.fleet.overnight)
    }

    /// The reference test system: three microturbines, one Zn-Br store,
    /// 40 kW of PV, a 30 kW wind turbine and a 20-EV fleet.
    pub fn reference() -> Self {
        let load = vec![
            32.1, 30.4, 29.6, 29.2, 29.9, 32.0, 36.5, 41.8, 45.3, 47.0, 48.2, 49.5, 48.7, 47.6, 46.9, 47.8, 50.2, 53.6,
            56.1, 57.26, 56.4, 52.3, 44.8, 37.5,
        ];
        // Mean PV output as a share of the 40 kW rating, 06:00 to 18:00.
        let solar = [0.03, 0.12, 0.28, 0.45, 0.58, 0.66, 0.68, 0.64, 0.55, 0.42, 0.26, 0.11, 0.02];
        let renewables = (0..HORIZON)
            .map(|t| {
                let pv = match t.checked_sub(6).and_then(|k| solar.get(k)) {
                    Some(&m) => PdfSpec::BetaPv {
                        alpha: round2(6.0 * m),
                        beta: round2(6.0 * (1.0 - m)),
                        max_kw: 40.0,
                    },
                    None => PdfSpec::PointMass { at: 0.0 },
                };
                let phase = 2.0 * std::f64::consts::PI * (t as f64 - 3.0) / 24.0;
                let wt = PdfSpec::WeibullWt {
                    shape: 2.0,
                    scale: round2(7.5 + phase.cos()),
                    cut_in: 3.0,
                    rated_speed: 12.0,
                    cut_out: 25.0,
                    rated_kw: 30.0,
                };
                RenewableHour { pv, wt }
            })
            .collect();
        let (log_mean, log_std) = FleetModel::mileage_from_km(40.0, 15.0);
        Scenario {
            name: "reference".into(),
            seed: 42,
            units: MtUnit::reference_units(),
            ess: EssParams::default(),
            load: LoadForecast { mean: load, fluctuation: 0.1 },
            renewables,
            fleet: FleetConfig {
                ev: EvParams::default(),
                count: 20,
                model: FleetModel {
                    arrival_mean: 17.47,
                    arrival_std: 3.41,
                    mileage_log_mean: log_mean,
                    mileage_log_std: log_std,
                    soc_initial_mean: 0.5,
                    soc_initial_std: 0.1,
                },
                sessions: None,
                max_dwell: 6,
                overnight: OvernightRule::Wrap,
            },
            station: Station::default(),
            pricing: Pricing {
                p_ref: 80.0,
                omega_ref: 0.6,
                floor: 0.01,
                tou: TouTable::reference(),
            },
            settings: Settings {
                gamma: 0.95,
                step_q: 2.5,
                alpha: 0.4,
                jaya: JayaConfig::default(),
                ipm_tol: 1e-8,
                ipm_max_iter: 200,
                iterations: 20,
                penalty: PenaltyWeights::default(),
            },
        }
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
