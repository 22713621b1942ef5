//! Continuous probability models for renewables, load and EV travel behaviour.
//!
//! Every model exposes a density, a cumulative distribution and a sampler.
//! Mixed distributions (the wind-turbine power curve) carry point masses,
//! which the CDF includes and the density does not.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, LogNormal, Normal, Weibull};
use serde::{Deserialize, Serialize};
use statrs::distribution::{
    Beta as BetaDist, Continuous, ContinuousCDF, Normal as NormalDist,
};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fleet::{EvParams, EvSession};

const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_density(x: f64, mean: f64, std_dev: f64) -> f64 {
    let z = (x - mean) / std_dev;
    (-0.5 * z * z).exp() / (SQRT_2PI * std_dev)
}

/// A one-dimensional probability model with its parameters.
///
/// Power models are in kW, arrival time in hours on (0, 24], mileage in km
/// and state of charge as a fraction of battery capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PdfSpec {
    /// PV output `max_kw * X` with `X ~ Beta(alpha, beta)`.
    BetaPv { alpha: f64, beta: f64, max_kw: f64 },
    /// Wind-turbine output induced from a Weibull wind speed through the
    /// piecewise-linear power curve.
    WeibullWt {
        shape: f64,
        scale: f64,
        cut_in: f64,
        rated_speed: f64,
        cut_out: f64,
        rated_kw: f64,
    },
    NormalLoad { mean: f64, std_dev: f64 },
    /// Single-wrap normal arrival time on (0, 24].
    ArrivalTime { mean: f64, std_dev: f64 },
    /// Log-normal daily mileage, parameters in log space.
    Mileage { log_mean: f64, log_std: f64 },
    /// Normal initial SOC truncated to `[lower, upper]`.
    InitialSoc {
        mean: f64,
        std_dev: f64,
        lower: f64,
        upper: f64,
    },
    Uniform { lower: f64, upper: f64 },
    PointMass { at: f64 },
}

impl PdfSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            PdfSpec::BetaPv {
                alpha,
                beta,
                max_kw,
            } => alpha > 0.0 && beta > 0.0 && max_kw >= 0.0,
            PdfSpec::WeibullWt {
                shape,
                scale,
                cut_in,
                rated_speed,
                cut_out,
                rated_kw,
            } => {
                shape > 0.0
                    && scale > 0.0
                    && 0.0 <= cut_in
                    && cut_in < rated_speed
                    && rated_speed <= cut_out
                    && rated_kw >= 0.0
            }
            PdfSpec::NormalLoad { std_dev, .. } => std_dev > 0.0,
            PdfSpec::ArrivalTime { mean, std_dev } => std_dev > 0.0 && mean > 12.0 && mean <= 24.0,
            PdfSpec::Mileage { log_std, .. } => log_std > 0.0,
            PdfSpec::InitialSoc {
                std_dev,
                lower,
                upper,
                ..
            } => std_dev > 0.0 && lower < upper,
            PdfSpec::Uniform { lower, upper } => lower < upper,
            PdfSpec::PointMass { at } => at.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid distribution parameters: {self:?}")))
        }
    }

    /// Natural support `[lower, upper]`; unbounded tails are reported as infinities.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            PdfSpec::BetaPv { max_kw, .. } => (0.0, max_kw),
            PdfSpec::WeibullWt { rated_kw, .. } => (0.0, rated_kw),
            PdfSpec::NormalLoad { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            PdfSpec::ArrivalTime { .. } => (0.0, 24.0),
            PdfSpec::Mileage { .. } => (0.0, f64::INFINITY),
            PdfSpec::InitialSoc { lower, upper, .. } => (lower, upper),
            PdfSpec::Uniform { lower, upper } => (lower, upper),
            PdfSpec::PointMass { at } => (at, at),
        }
    }

    /// Density of the continuous part. Point masses are excluded; see [`Self::atoms`].
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            PdfSpec::BetaPv {
                alpha,
                beta,
                max_kw,
            } => {
                if max_kw <= 0.0 || x <= 0.0 || x >= max_kw {
                    return 0.0;
                }
                let dist = BetaDist::new(alpha, beta).expect("validated beta parameters");
                dist.pdf(x / max_kw) / max_kw
            }
            PdfSpec::WeibullWt {
                shape,
                scale,
                cut_in,
                rated_speed,
                rated_kw,
                ..
            } => {
                if rated_kw <= 0.0 || x <= 0.0 || x >= rated_kw {
                    return 0.0;
                }
                let slope = (rated_speed - cut_in) / rated_kw;
                let v = cut_in + x * slope;
                weibull_pdf(v, shape, scale) * slope
            }
            PdfSpec::NormalLoad { mean, std_dev } => normal_density(x, mean, std_dev),
            PdfSpec::ArrivalTime { mean, std_dev } => {
                if x <= 0.0 || x > 24.0 {
                    0.0
                } else {
                    arrival_density(x, mean, std_dev)
                }
            }
            PdfSpec::Mileage { log_mean, log_std } => {
                if x <= 0.0 {
                    0.0
                } else {
                    mileage_density(x, log_mean, log_std)
                }
            }
            PdfSpec::InitialSoc {
                mean,
                std_dev,
                lower,
                upper,
            } => {
                if x < lower || x > upper {
                    return 0.0;
                }
                let mass = std_normal_cdf((upper - mean) / std_dev)
                    - std_normal_cdf((lower - mean) / std_dev);
                normal_density(x, mean, std_dev) / mass
            }
            PdfSpec::Uniform { lower, upper } => {
                if x < lower || x > upper {
                    0.0
                } else {
                    1.0 / (upper - lower)
                }
            }
            PdfSpec::PointMass { .. } => 0.0,
        }
    }

    /// Point masses as `(location, probability)` pairs.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match *self {
            PdfSpec::PointMass { at } => vec![(at, 1.0)],
            PdfSpec::BetaPv { max_kw, .. } if max_kw <= 0.0 => vec![(0.0, 1.0)],
            PdfSpec::WeibullWt { rated_kw, .. } if rated_kw <= 0.0 => vec![(0.0, 1.0)],
            PdfSpec::WeibullWt {
                shape,
                scale,
                cut_in,
                rated_speed,
                cut_out,
                rated_kw,
            } => {
                let f = |v: f64| weibull_cdf(v, shape, scale);
                vec![
                    (0.0, f(cut_in) + 1.0 - f(cut_out)),
                    (rated_kw, f(cut_out) - f(rated_speed)),
                ]
            }
            _ => Vec::new(),
        }
    }

    /// `P(X <= x)`, point masses included.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            PdfSpec::BetaPv {
                alpha,
                beta,
                max_kw,
            } => {
                if x < 0.0 {
                    0.0
                } else if max_kw <= 0.0 || x >= max_kw {
                    1.0
                } else {
                    let dist = BetaDist::new(alpha, beta).expect("validated beta parameters");
                    dist.cdf(x / max_kw)
                }
            }
            PdfSpec::WeibullWt {
                shape,
                scale,
                cut_in,
                rated_speed,
                cut_out,
                rated_kw,
            } => {
                if x < 0.0 {
                    0.0
                } else if rated_kw <= 0.0 || x >= rated_kw {
                    1.0
                } else {
                    let v = cut_in + x * (rated_speed - cut_in) / rated_kw;
                    1.0 - weibull_cdf(cut_out, shape, scale) + weibull_cdf(v, shape, scale)
                }
            }
            PdfSpec::NormalLoad { mean, std_dev } => std_normal_cdf((x - mean) / std_dev),
            PdfSpec::ArrivalTime { mean, std_dev } => arrival_cdf(x, mean, std_dev),
            PdfSpec::Mileage { log_mean, log_std } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - log_mean) / log_std)
                }
            }
            PdfSpec::InitialSoc {
                mean,
                std_dev,
                lower,
                upper,
            } => {
                if x < lower {
                    0.0
                } else if x >= upper {
                    1.0
                } else {
                    let lo = std_normal_cdf((lower - mean) / std_dev);
                    let hi = std_normal_cdf((upper - mean) / std_dev);
                    (std_normal_cdf((x - mean) / std_dev) - lo) / (hi - lo)
                }
            }
            PdfSpec::Uniform { lower, upper } => ((x - lower) / (upper - lower)).clamp(0.0, 1.0),
            PdfSpec::PointMass { at } => {
                if x >= at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Draws one value. Arrival times wrap modulo 24 h onto (0, 24].
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            PdfSpec::BetaPv {
                alpha,
                beta,
                max_kw,
            } => {
                if max_kw <= 0.0 {
                    return 0.0;
                }
                let dist = Beta::new(alpha, beta).expect("validated beta parameters");
                max_kw * dist.sample(rng)
            }
            PdfSpec::WeibullWt {
                shape,
                scale,
                cut_in,
                rated_speed,
                cut_out,
                rated_kw,
            } => {
                let dist = Weibull::new(scale, shape).expect("validated weibull parameters");
                let v: f64 = dist.sample(rng);
                wind_power(v, cut_in, rated_speed, cut_out, rated_kw)
            }
            PdfSpec::NormalLoad { mean, std_dev } => Normal::new(mean, std_dev)
                .expect("validated normal parameters")
                .sample(rng),
            PdfSpec::ArrivalTime { mean, std_dev } => {
                let raw: f64 = Normal::new(mean, std_dev)
                    .expect("validated normal parameters")
                    .sample(rng);
                wrap_hour(raw)
            }
            PdfSpec::Mileage { log_mean, log_std } => LogNormal::new(log_mean, log_std)
                .expect("validated lognormal parameters")
                .sample(rng),
            PdfSpec::InitialSoc {
                mean,
                std_dev,
                lower,
                upper,
            } => sample_truncated_normal(rng, mean, std_dev, lower, upper),
            PdfSpec::Uniform { lower, upper } => rng.random_range(lower..upper),
            PdfSpec::PointMass { at } => at,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            PdfSpec::BetaPv {
                alpha,
                beta,
                max_kw,
            } => max_kw * alpha / (alpha + beta),
            PdfSpec::NormalLoad { mean, .. } => mean,
            PdfSpec::Mileage { log_mean, log_std } => (log_mean + 0.5 * log_std * log_std).exp(),
            PdfSpec::Uniform { lower, upper } => 0.5 * (lower + upper),
            PdfSpec::PointMass { at } => at,
            _ => {
                let (lo, hi) = self.support();
                let continuous = crate::quadrature::integrate(|x| x * self.pdf(x), lo, hi, 1e-10);
                continuous + self.atoms().iter().map(|(x, p)| x * p).sum::<f64>()
            }
        }
    }
}

fn weibull_cdf(v: f64, shape: f64, scale: f64) -> f64 {
    if v <= 0.0 {
        0.0
    } else {
        1.0 - (-(v / scale).powf(shape)).exp()
    }
}

fn weibull_pdf(v: f64, shape: f64, scale: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let r = v / scale;
    (shape / scale) * r.powf(shape - 1.0) * (-r.powf(shape)).exp()
}

/// Piecewise-linear turbine power curve.
pub fn wind_power(speed: f64, cut_in: f64, rated_speed: f64, cut_out: f64, rated_kw: f64) -> f64 {
    if speed < cut_in || speed >= cut_out {
        0.0
    } else if speed < rated_speed {
        rated_kw * (speed - cut_in) / (rated_speed - cut_in)
    } else {
        rated_kw
    }
}

fn wrap_hour(raw: f64) -> f64 {
    let t = raw.rem_euclid(24.0);
    if t == 0.0 {
        24.0
    } else {
        t
    }
}

fn arrival_density(t: f64, mu: f64, sigma: f64) -> f64 {
    let arg = if t <= mu - 12.0 { t + 24.0 - mu } else { t - mu };
    (-(arg * arg) / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
}

fn arrival_cdf(t: f64, mu: f64, sigma: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let t = t.min(24.0);
    let phi = |z: f64| std_normal_cdf(z / sigma);
    let split = mu - 12.0;
    if t <= split {
        phi(t + 24.0 - mu) - phi(24.0 - mu)
    } else {
        let first = (phi(12.0) - phi(24.0 - mu)).max(0.0);
        first + phi(t - mu) - phi(split.max(0.0) - mu)
    }
}

fn mileage_density(m: f64, mu: f64, sigma: f64) -> f64 {
    let z = m.ln() - mu;
    (-(z * z) / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma * m)
}

fn sample_truncated_normal<R: Rng + ?Sized>(
    rng: &mut R,
    mean: f64,
    std_dev: f64,
    lower: f64,
    upper: f64,
) -> f64 {
    let dist = NormalDist::new(mean, std_dev).expect("validated normal parameters");
    let lo = dist.cdf(lower);
    let hi = dist.cdf(upper);
    if hi - lo > 1e-12 {
        let u = lo + (hi - lo) * rng.random::<f64>();
        let x = dist.inverse_cdf(u);
        if x >= lower && x <= upper {
            return x;
        }
    }
    // Inverse CDF loses precision deep in a tail; fall back to rejection.
    let normal = Normal::new(mean, std_dev).expect("validated normal parameters");
    for _ in 0..10_000 {
        let x: f64 = normal.sample(rng);
        if x >= lower && x <= upper {
            return x;
        }
    }
    if mean < lower {
        lower
    } else {
        upper
    }
}

/// Arrival-time density: a normal centred on `mu`, with the
/// early-morning branch shifted by one day.
pub fn pdf_arrival(t: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 24.0) {
        return Err(Error::Domain(format!("arrival time {t} outside (0, 24]")));
    }
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("arrival stddev {sigma} must be positive")));
    }
    if !(mu > 12.0 && mu <= 24.0) {
        return Err(Error::Domain(format!("arrival mean {mu} outside (12, 24]")));
    }
    Ok(arrival_density(t, mu, sigma))
}

/// Log-normal daily-mileage density.
pub fn pdf_mileage(m: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::Domain(format!("mileage {m} must be positive")));
    }
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("mileage log-stddev {sigma} must be positive")));
    }
    Ok(mileage_density(m, mu, sigma))
}

/// One period's renewable and load forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodForecast {
    pub period: usize,
    pub pv_pdf: PdfSpec,
    pub wt_pdf: PdfSpec,
    pub load_mean: f64,
    pub load_stddev: f64,
}

impl PeriodForecast {
    pub fn new(period: usize, pv_pdf: PdfSpec, wt_pdf: PdfSpec, load_mean: f64, fluctuation: f64) -> Self {
        Self {
            period,
            pv_pdf,
            wt_pdf,
            load_mean,
            load_stddev: fluctuation * load_mean,
        }
    }

    pub fn load_pdf(&self) -> PdfSpec {
        PdfSpec::NormalLoad {
            mean: self.load_mean,
            std_dev: self.load_stddev.max(f64::MIN_POSITIVE),
        }
    }
}

/// Distributions that drive a sampled EV fleet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetModel {
    pub arrival_mean: f64,
    pub arrival_std: f64,
    pub mileage_log_mean: f64,
    pub mileage_log_std: f64,
    pub soc_initial_mean: f64,
    pub soc_initial_std: f64,
}

impl FleetModel {
    /// Log-space mileage parameters matching a mileage mean and standard
    /// deviation given in km.
    pub fn mileage_from_km(mean_km: f64, std_km: f64) -> (f64, f64) {
        let var_log = (1.0 + (std_km / mean_km).powi(2)).ln();
        (mean_km.ln() - 0.5 * var_log, var_log.sqrt())
    }

    pub fn arrival_pdf(&self) -> PdfSpec {
        PdfSpec::ArrivalTime {
            mean: self.arrival_mean,
            std_dev: self.arrival_std,
        }
    }

    pub fn mileage_pdf(&self) -> PdfSpec {
        PdfSpec::Mileage {
            log_mean: self.mileage_log_mean,
            log_std: self.mileage_log_std,
        }
    }

    pub fn soc_pdf(&self, ev: &EvParams) -> PdfSpec {
        PdfSpec::InitialSoc {
            mean: self.soc_initial_mean,
            std_dev: self.soc_initial_std,
            lower: ev.soc_min,
            upper: ev.soc_expected,
        }
    }
}

/// Samples `count` EV sessions. Windows are left empty; see
/// [`crate::fleet::build_windows`].
pub fn sample_fleet(model: &FleetModel, ev: &EvParams, count: usize, seed: u64) -> Result<Vec<EvSession>> {
    if count == 0 {
        return Err(Error::Domain("fleet size must be at least 1".into()));
    }
    ev.validate()?;
    let arrival = model.arrival_pdf();
    let mileage = model.mileage_pdf();
    let soc = model.soc_pdf(ev);
    arrival.validate()?;
    mileage.validate()?;
    soc.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|ev_id| {
            let arrival_hour = arrival.sample(&mut rng);
            let mileage_km = mileage.sample(&mut rng);
            let soc_initial = soc.sample(&mut rng);
            EvSession::new(ev_id, arrival_hour, mileage_km, soc_initial, ev)
        })
        .collect()
}
