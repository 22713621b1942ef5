//! Probabilistic sequences: fixed-step discrete distributions of power.
//!
//! Entry `i` of a sequence is the probability that the power equals `i * step`.
//! Sequences are built by discretizing a continuous model, combined by
//! addition-type convolution, and turned into a deterministic reserve
//! requirement for a chance constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastic::PdfSpec;

const SUM_TOLERANCE: f64 = 1e-9;
const RENORMALIZE_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbSequence {
    step: f64,
    probs: Vec<f64>,
}

impl ProbSequence {
    pub fn new(step: f64, probs: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Domain(format!("sequence step {step} must be positive")));
        }
        if probs.is_empty() {
            return Err(Error::Domain("sequence must have at least one entry".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Domain(format!("sequence entry {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Domain(format!("sequence sums to {sum}, not 1")));
        }
        Ok(Self { step, probs })
    }

    /// All mass at `index * step`.
    pub fn point_mass(step: f64, index: usize) -> Self {
        let mut probs = vec![0.0; index + 1];
        probs[index] = 1.0;
        Self { step, probs }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest index `N`; the sequence has `N + 1` entries.
    pub fn max_index(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn power_at(&self, index: usize) -> f64 {
        index as f64 * self.step
    }

    pub fn expectation(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * self.step * p)
            .sum()
    }

    /// `P(X >= index * step)`.
    pub fn upper_tail(&self, index: usize) -> f64 {
        self.probs.iter().skip(index).sum()
    }
}

/// Bins a continuous (or mixed) power model into a sequence with step `q`.
///
/// Bin 0 collects `[0, q/2)`, interior bin `i` collects `[iq - q/2, iq + q/2)`
/// and the final bin `N = ceil(p_max / q)` collects `[Nq - q/2, p_max]`.
/// Bin edges beyond `p_max` are clipped to it.
pub fn discretize(pdf: &PdfSpec, p_max: f64, q: f64) -> Result<ProbSequence> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("step {q} must be positive")));
    }
    if !(p_max >= 0.0) {
        return Err(Error::Domain(format!("maximum power {p_max} must be non-negative")));
    }
    pdf.validate()?;
    let n = (p_max / q - 1e-12).ceil().max(0.0) as usize;
    let below_zero = pdf.cdf(-f64::MIN_POSITIVE);
    let mut probs = Vec::with_capacity(n + 1);
    let mut prev = below_zero;
    for i in 0..=n {
        let edge = if i == n {
            p_max
        } else {
            ((i as f64 + 0.5) * q).min(p_max)
        };
        let cum = pdf.cdf(edge);
        probs.push((cum - prev).max(0.0));
        prev = cum.max(prev);
    }
    let total: f64 = probs.iter().sum();
    let missing = (1.0 - total).abs();
    if missing > RENORMALIZE_LIMIT {
        return Err(Error::Discretization { missing });
    }
    for p in &mut probs {
        *p /= total;
    }
    ProbSequence::new(q, probs)
}

/// Addition-type convolution: the distribution of the sum of two
/// independent sequence-valued powers.
pub fn atc_convolve(a: &ProbSequence, b: &ProbSequence) -> Result<ProbSequence> {
    if (a.step - b.step).abs() > 1e-12 * a.step.max(b.step) {
        return Err(Error::StepMismatch {
            left: a.step,
            right: b.step,
        });
    }
    let mut probs = vec![0.0; a.probs.len() + b.probs.len() - 1];
    for (i, pa) in a.probs.iter().enumerate() {
        if *pa == 0.0 {
            continue;
        }
        for (j, pb) in b.probs.iter().enumerate() {
            probs[i + j] += pa * pb;
        }
    }
    Ok(ProbSequence {
        step: a.step,
        probs,
    })
}

pub fn expectation(c: &ProbSequence) -> f64 {
    c.expectation()
}

/// Smallest reserve `R >= 0` for which the probability that `R` covers the
/// shortfall `E - u*q` below the expected output `E` is at least `gamma`.
///
/// The coverage indicator is monotone in `u`, so the answer is `E - u*q`
/// where `u*` is the largest index whose upper tail still reaches `gamma`.
pub fn min_reserve_for_confidence(c: &ProbSequence, gamma: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    let gamma = gamma.min(1.0);
    let e = c.expectation();
    let mut tail = 0.0;
    let mut anchor = 0;
    for u in (0..c.probs.len()).rev() {
        tail += c.probs[u];
        if tail >= gamma - 1e-12 {
            anchor = u;
            break;
        }
    }
    (e - c.power_at(anchor)).max(0.0)
}

/// Probability that `reserve` covers the shortfall, i.e. the left side of
/// the deterministic chance-constraint form.
pub fn reserve_coverage(c: &ProbSequence, reserve: f64) -> f64 {
    let e = c.expectation();
    c.probs
        .iter()
        .enumerate()
        .filter(|(u, _)| reserve >= e - c.power_at(*u) - 1e-9)
        .map(|(_, p)| p)
        .sum()
}
