//! Per-EV charging arithmetic and fleet assembly.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::HORIZON;

/// Battery and charger parameters shared by every EV of the fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvParams {
    pub battery_kwh: f64,
    pub rated_kw: f64,
    pub efficiency: f64,
    pub kwh_per_100km: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_expected: f64,
}

impl Default for EvParams {
    fn default() -> Self {
        Self {
            battery_kwh: 19.0,
            rated_kw: 7.5,
            efficiency: 0.95,
            kwh_per_100km: 15.0,
            soc_min: 0.2,
            soc_max: 1.0,
            soc_expected: 0.9,
        }
    }
}

impl EvParams {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 <= self.soc_min
            && self.soc_min < self.soc_expected
            && self.soc_expected <= self.soc_max
            && self.soc_max <= 1.0
            && self.battery_kwh > 0.0
            && self.rated_kw > 0.0
            && self.efficiency > 0.0
            && self.efficiency <= 1.0
            && self.kwh_per_100km >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid EV parameters: {self:?}")))
        }
    }

    /// Energy one hour at rated power puts into the battery.
    pub fn energy_per_period(&self) -> f64 {
        self.rated_kw * self.efficiency
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvSession {
    pub ev_id: usize,
    pub arrival_hour: f64,
    pub mileage_km: f64,
    pub soc_initial: f64,
    pub soc_target: f64,
    /// Schedulable periods in charging order.
    pub window: Vec<usize>,
    /// Energy to deliver into the battery, kWh.
    pub required_energy: f64,
}

impl EvSession {
    pub fn new(ev_id: usize, arrival_hour: f64, mileage_km: f64, soc_initial: f64, params: &EvParams) -> Result<Self> {
        let soc_target = soc_target(soc_initial, mileage_km, params)?;
        Ok(Self {
            ev_id,
            arrival_hour,
            mileage_km,
            soc_initial,
            soc_target,
            window: Vec::new(),
            required_energy: (soc_target - soc_initial) * params.battery_kwh,
        })
    }

    /// Most energy the session may take into the battery (up to `soc_max`).
    pub fn energy_ceiling(&self, params: &EvParams) -> f64 {
        (params.soc_max - self.soc_initial) * params.battery_kwh
    }
}

/// Charge target: initial SOC plus the travel need, held inside
/// `[soc_expected, soc_max]`.
pub fn soc_target(soc_initial: f64, mileage_km: f64, params: &EvParams) -> Result<f64> {
    const EPS: f64 = 1e-12;
    if soc_initial < params.soc_min - EPS || soc_initial > params.soc_expected + EPS {
        return Err(Error::Domain(format!(
            "initial SOC {soc_initial} outside [{}, {}]",
            params.soc_min, params.soc_expected
        )));
    }
    if !(mileage_km >= 0.0) {
        return Err(Error::Domain(format!("mileage {mileage_km} must be non-negative")));
    }
    let raw = soc_initial + mileage_km * params.kwh_per_100km / (100.0 * params.battery_kwh);
    Ok(raw.clamp(params.soc_expected, params.soc_max))
}

/// Hours at rated power needed to lift the SOC from `soc_initial` to `soc_real`.
pub fn charging_time(soc_real: f64, soc_initial: f64, params: &EvParams, max_hours: f64) -> Result<f64> {
    if soc_real < soc_initial {
        return Err(Error::Domain(format!(
            "target SOC {soc_real} below initial SOC {soc_initial}"
        )));
    }
    let hours = (soc_real - soc_initial) * params.battery_kwh / (params.rated_kw * params.efficiency);
    if hours > max_hours {
        return Err(Error::ChargingTooLong {
            hours,
            max_hours,
        });
    }
    Ok(hours)
}

/// How a window that runs past the end of the day is treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OvernightRule {
    /// Periods past midnight are dropped.
    Truncate,
    /// Periods past midnight continue at period 0 of the cyclic day.
    #[default]
    Wrap,
}

/// Smallest whole-period dwell that lets every session finish at rated power.
pub fn min_feasible_dwell(sessions: &[EvSession], params: &EvParams) -> usize {
    sessions
        .iter()
        .map(|s| (s.required_energy / params.energy_per_period() - 1e-9).ceil().max(0.0) as usize)
        .max()
        .unwrap_or(0)
}

/// First whole period at or after the arrival time.
pub fn first_period(arrival_hour: f64) -> usize {
    arrival_hour.ceil().max(0.0) as usize
}

/// Assigns each session its schedulable window of `max_dwell` periods
/// starting at the first whole period after arrival.
///
/// Fails with the ids of every session whose window cannot deliver its
/// required energy at rated power, or whose charging time exceeds `max_dwell`.
pub fn build_windows(
    sessions: &[EvSession],
    params: &EvParams,
    max_dwell: usize,
    rule: OvernightRule,
) -> Result<Vec<EvSession>> {
    let dwell = max_dwell.min(HORIZON);
    let mut infeasible = Vec::new();
    let out: Vec<EvSession> = sessions
        .iter()
        .map(|s| {
            let start = first_period(s.arrival_hour);
            let window: Vec<usize> = match rule {
                OvernightRule::Truncate => (start..(start + dwell).min(HORIZON)).collect(),
                OvernightRule::Wrap => (start..start + dwell).map(|t| t % HORIZON).collect(),
            };
            let deliverable = window.len() as f64 * params.energy_per_period();
            let hours_ok = charging_time(s.soc_target, s.soc_initial, params, dwell as f64).is_ok();
            if window.is_empty() || deliverable + 1e-9 < s.required_energy || !hours_ok {
                infeasible.push(s.ev_id);
            }
            EvSession {
                window,
                ..s.clone()
            }
        })
        .collect();
    if infeasible.is_empty() {
        Ok(out)
    } else {
        Err(Error::InfeasibleSessions(infeasible))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SessionRow {
    ev_id: usize,
    arrival: f64,
    mileage: f64,
    soc_initial: f64,
    soc_target: f64,
    window_start: Option<usize>,
    window_end: Option<usize>,
    required_energy: f64,
}

/// Writes sessions as CSV. `window_end` is inclusive; a window that wraps
/// past midnight has `window_end < window_start`.
pub fn write_sessions_csv<W: Write>(sessions: &[EvSession], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in sessions {
        w.serialize(SessionRow {
            ev_id: s.ev_id,
            arrival: s.arrival_hour,
            mileage: s.mileage_km,
            soc_initial: s.soc_initial,
            soc_target: s.soc_target,
            window_start: s.window.first().copied(),
            window_end: s.window.last().copied(),
            required_energy: s.required_energy,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sessions_csv<R: Read>(reader: R) -> Result<Vec<EvSession>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize::<SessionRow>()
        .map(|row| {
            let row = row?;
            let window = match (row.window_start, row.window_end) {
                (Some(a), Some(b)) if a <= b => (a..=b).collect(),
                (Some(a), Some(b)) => (a..HORIZON).chain(0..=b).collect(),
                _ => Vec::new(),
            };
            Ok(EvSession {
                ev_id: row.ev_id,
                arrival_hour: row.arrival,
                mileage_km: row.mileage,
                soc_initial: row.soc_initial,
                soc_target: row.soc_target,
                window,
                required_energy: row.required_energy,
            })
        })
        .collect()
}
