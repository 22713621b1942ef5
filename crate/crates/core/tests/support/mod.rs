//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use evmg_core::ipm::LpProblem;
use rand::Rng;

/// A boxed LP in `a x <= b` form, kept separate from the solver's types so
/// the oracle shares no code with it.
#[derive(Debug, Clone)]
pub struct DenseLp {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl DenseLp {
    pub fn to_problem(&self) -> LpProblem {
        let mut lp = LpProblem::default();
        for j in 0..self.cost.len() {
            lp.add_variable(self.cost[j], self.lower[j], self.upper[j]);
        }
        for (row, rhs) in self.a.iter().zip(&self.b) {
            let coeffs = row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
            lp.add_le(coeffs, *rhs);
        }
        lp
    }

    /// Every constraint, bounds included, as `(a, b)` with `a x <= b`.
    fn halfspaces(&self) -> Vec<(Vec<f64>, f64)> {
        let n = self.cost.len();
        let mut out: Vec<(Vec<f64>, f64)> = self.a.iter().cloned().zip(self.b.iter().cloned()).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            out.push((e.clone(), self.upper[j]));
            e[j] = -1.0;
            out.push((e, -self.lower[j]));
        }
        out
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..n {
                    m[r][c] -= f * m[col][c];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (rhs[i] - s) / m[i][i];
    }
    Some(x)
}

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Optimal objective by enumerating every vertex of the bounded polytope.
pub fn vertex_optimum(lp: &DenseLp) -> Option<f64> {
    let n = lp.cost.len();
    if n == 0 {
        return Some(0.0);
    }
    let hs = lp.halfspaces();
    let mut best: Option<f64> = None;
    combinations(hs.len(), n, |pick| {
        let m: Vec<Vec<f64>> = pick.iter().map(|&i| hs[i].0.clone()).collect();
        let r: Vec<f64> = pick.iter().map(|&i| hs[i].1).collect();
        if let Some(x) = solve_dense(m, r) {
            let feasible = hs
                .iter()
                .all(|(a, b)| a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= b + 1e-9 * (1.0 + b.abs()));
            if feasible {
                let obj: f64 = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                if best.is_none_or(|b| obj < b) {
                    best = Some(obj);
                }
            }
        }
    });
    best
}

/// A random boxed LP that is feasible by construction: every row holds at
/// an interior reference point with non-negative slack.
pub fn random_feasible_lp<R: Rng>(rng: &mut R, max_vars: usize, max_rows: usize) -> DenseLp {
    let n = rng.random_range(1..=max_vars);
    let m = rng.random_range(0..=max_rows);
    let lower: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..0.0)).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.random_range(0.5..10.0)).collect();
    let x0: Vec<f64> = lower.iter().zip(&upper).map(|(l, u)| rng.random_range(*l..*u)).collect();
    let cost = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for _ in 0..m {
        let row: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random_range(-3.0..3.0) })
            .collect();
        let at: f64 = row.iter().zip(&x0).map(|(p, q)| p * q).sum();
        let slack = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..2.0) };
        a.push(row);
        b.push(at + slack);
    }
    DenseLp {
        cost,
        lower,
        upper,
        a,
        b,
    }
}
