//! JAYA population search with hybrid real/binary genes.
//!
//! Each generation moves every candidate toward the current best and away
//! from the current worst, keeps the move only if it improves the fitness,
//! and re-initializes part of the population when the fitness variance
//! stops changing.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JayaConfig {
    pub pop_size: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub thr1: f64,
    pub thr2: f64,
    /// Share of the non-best population re-initialized on a restart.
    pub restart_fraction: f64,
}

impl Default for JayaConfig {
    fn default() -> Self {
        Self {
            pop_size: 100,
            max_iter: 1500,
            seed: 0,
            thr1: 0.99,
            thr2: 1.01,
            restart_fraction: 0.02,
        }
    }
}

impl JayaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::Domain("JAYA population must hold at least 2 candidates".into()));
        }
        if !(0.0 < self.thr1 && self.thr1 < self.thr2) {
            return Err(Error::Domain(format!(
                "restart thresholds must satisfy 0 < thr1 < thr2, got {} and {}",
                self.thr1, self.thr2
            )));
        }
        if !(self.restart_fraction > 0.0 && self.restart_fraction < 1.0) {
            return Err(Error::Domain(format!(
                "restart fraction {} outside (0, 1)",
                self.restart_fraction
            )));
        }
        Ok(())
    }
}

/// A minimization problem over box-bounded reals and binary flags.
pub trait Problem: Sync {
    fn bounds(&self) -> &[(f64, f64)];
    fn binary_len(&self) -> usize;
    /// Penalized objective; lower is better.
    fn evaluate(&self, continuous: &[f64], binary: &[bool]) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub continuous: Vec<f64>,
    pub binary: Vec<bool>,
    pub fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub best_fitness: f64,
    pub population_variance: f64,
    pub restart_flag: bool,
}

#[derive(Debug, Clone)]
pub struct JayaResult {
    pub best: Candidate,
    pub history: Vec<IterationStats>,
}

impl JayaResult {
    /// Writes the convergence history as CSV.
    pub fn write_history_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.history {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `x + r1 (best - |x|) - r2 (worst - |x|)`, clipped to `bounds`.
pub fn jaya_update(x: f64, best: f64, worst: f64, r1: f64, r2: f64, bounds: (f64, f64)) -> f64 {
    let moved = x + r1 * (best - x.abs()) - r2 * (worst - x.abs());
    moved.clamp(bounds.0, bounds.1)
}

/// Stagnation test on consecutive fitness variances.
pub fn restart_check(var_prev: f64, var_curr: f64, thr1: f64, thr2: f64) -> bool {
    if var_prev <= 0.0 {
        return true;
    }
    let ratio = var_curr / var_prev;
    thr1 < ratio && ratio < thr2
}

fn fitness_variance(pop: &[Candidate]) -> f64 {
    let n = pop.len() as f64;
    let mean = pop.iter().map(|c| c.fitness).sum::<f64>() / n;
    pop.iter().map(|c| (c.fitness - mean).powi(2)).sum::<f64>() / n
}

fn best_and_worst(pop: &[Candidate]) -> (usize, usize) {
    let mut best = 0;
    let mut worst = 0;
    for (i, c) in pop.iter().enumerate() {
        if c.fitness < pop[best].fitness {
            best = i;
        }
        if c.fitness > pop[worst].fitness {
            worst = i;
        }
    }
    (best, worst)
}

fn random_genes<R: Rng>(rng: &mut R, bounds: &[(f64, f64)], binary_len: usize) -> (Vec<f64>, Vec<bool>) {
    let continuous = bounds
        .iter()
        .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
        .collect();
    let binary = (0..binary_len).map(|_| rng.random::<bool>()).collect();
    (continuous, binary)
}

fn evaluate_all<P: Problem>(problem: &P, genes: Vec<(Vec<f64>, Vec<bool>)>) -> Vec<Candidate> {
    genes
        .into_par_iter()
        .map(|(continuous, binary)| {
            let fitness = problem.evaluate(&continuous, &binary);
            Candidate {
                continuous,
                binary,
                fitness: if fitness.is_nan() { f64::INFINITY } else { fitness },
            }
        })
        .collect()
}

/// Runs JAYA from a uniformly random population.
pub fn optimize<P: Problem>(problem: &P, cfg: &JayaConfig) -> Result<JayaResult> {
    optimize_seeded(problem, cfg, Vec::new())
}

/// Runs JAYA with `initial` gene vectors placed first in the population;
/// the remainder is drawn uniformly.
pub fn optimize_seeded<P: Problem>(
    problem: &P,
    cfg: &JayaConfig,
    initial: Vec<(Vec<f64>, Vec<bool>)>,
) -> Result<JayaResult> {
    cfg.validate()?;
    let bounds = problem.bounds();
    let binary_len = problem.binary_len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut genes: Vec<(Vec<f64>, Vec<bool>)> = initial
        .into_iter()
        .take(cfg.pop_size)
        .map(|(mut c, b)| {
            for (x, &(lo, hi)) in c.iter_mut().zip(bounds) {
                *x = x.clamp(lo, hi);
            }
            (c, b)
        })
        .collect();
    if genes.iter().any(|(c, b)| c.len() != bounds.len() || b.len() != binary_len) {
        return Err(Error::Domain("initial candidate has the wrong dimension".into()));
    }
    while genes.len() < cfg.pop_size {
        genes.push(random_genes(&mut rng, bounds, binary_len));
    }
    let mut pop = evaluate_all(problem, genes);
    let mut variance = fitness_variance(&pop);
    let mut history = Vec::with_capacity(cfg.max_iter);

    for iteration in 0..cfg.max_iter {
        let (best_idx, worst_idx) = best_and_worst(&pop);
        let best = pop[best_idx].clone();
        let worst = pop[worst_idx].clone();

        let trials: Vec<(Vec<f64>, Vec<bool>)> = pop
            .iter()
            .map(|cand| {
                let continuous = cand
                    .continuous
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| {
                        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                        jaya_update(x, best.continuous[j], worst.continuous[j], r1, r2, bounds[j])
                    })
                    .collect();
                // Binary genes move in the [0, 1] relaxation and are thresholded.
                let binary = cand
                    .binary
                    .iter()
                    .enumerate()
                    .map(|(j, &b)| {
                        let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                        let as_real = |v: bool| if v { 1.0 } else { 0.0 };
                        let moved = jaya_update(
                            as_real(b),
                            as_real(best.binary[j]),
                            as_real(worst.binary[j]),
                            r1,
                            r2,
                            (0.0, 1.0),
                        );
                        moved > 0.5
                    })
                    .collect();
                (continuous, binary)
            })
            .collect();

        for (cand, trial) in pop.iter_mut().zip(evaluate_all(problem, trials)) {
            if trial.fitness < cand.fitness {
                *cand = trial;
            }
        }

        let current = fitness_variance(&pop);
        let restart = restart_check(variance, current, cfg.thr1, cfg.thr2);
        variance = current;
        if restart {
            let (best_idx, _) = best_and_worst(&pop);
            let others: Vec<usize> = (0..pop.len()).filter(|&i| i != best_idx).collect();
            let count = ((others.len() as f64) * cfg.restart_fraction).round() as usize;
            if count > 0 {
                let picked: Vec<usize> = sample(&mut rng, others.len(), count)
                    .into_iter()
                    .map(|k| others[k])
                    .collect();
                let fresh: Vec<_> = picked
                    .iter()
                    .map(|_| random_genes(&mut rng, bounds, binary_len))
                    .collect();
                for (slot, cand) in picked.into_iter().zip(evaluate_all(problem, fresh)) {
                    pop[slot] = cand;
                }
                variance = fitness_variance(&pop);
            }
        }

        let (best_idx, _) = best_and_worst(&pop);
        history.push(IterationStats {
            iteration,
            best_fitness: pop[best_idx].fitness,
            population_variance: variance,
            restart_flag: restart,
        });
    }

    let (best_idx, _) = best_and_worst(&pop);
    Ok(JayaResult {
        best: pop.swap_remove(best_idx),
        history,
    })
}
