//! Dense primal-dual interior-point solver for small linear programs.
//!
//! Problems are `min c'x` subject to `a_i'x <= b_i` and variable bounds.
//! Bounds are folded into the inequality block, giving the form
//! `min c'x  s.t.  Gx + s = h, s >= 0` with duals `z >= 0`. Each iteration
//! solves the reduced normal equations `G' (Z/S) G dx = rhs` by Cholesky and
//! takes a Mehrotra predictor-corrector step, damped so that `s` and `z`
//! stay strictly positive.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One `<=` row as sparse `(variable, coefficient)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
    /// Added to the objective value; does not affect the optimizer.
    pub constant: f64,
}

impl LpProblem {
    pub fn add_variable(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.len() - 1
    }

    pub fn add_le(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Row { coeffs, rhs });
    }

    pub fn add_ge(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        let coeffs = coeffs.into_iter().map(|(j, a)| (j, -a)).collect();
        self.rows.push(Row { coeffs, rhs: -rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cost.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Domain("bound vectors do not match the variable count".into()));
        }
        for j in 0..n {
            if !self.cost[j].is_finite() || self.lower[j] > self.upper[j] || self.lower[j].is_nan() {
                return Err(Error::Domain(format!("variable {j} has invalid cost or bounds")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() || row.coeffs.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
                return Err(Error::Domain(format!("row {i} has invalid coefficients")));
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.constant + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            lhs - r.rhs
        });
        let bounds = x
            .iter()
            .enumerate()
            .flat_map(|(j, &v)| [self.lower[j] - v, v - self.upper[j]]);
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Duals of the explicit rows, in row order.
    pub row_duals: Vec<f64>,
    /// Slacks `b - a'x` of the explicit rows.
    pub row_slacks: Vec<f64>,
    /// Objective including the constant term.
    pub objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `s'z` over every inequality including bounds.
    pub gap: f64,
    /// Largest `s_i z_i` over every inequality including bounds.
    pub max_complementarity: f64,
}

struct Standard {
    g: DMatrix<f64>,
    h: DVector<f64>,
    c: DVector<f64>,
}

fn standardize(lp: &LpProblem) -> Standard {
    let n = lp.num_vars();
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> =
        lp.rows.iter().map(|r| (r.coeffs.clone(), r.rhs)).collect();
    for j in 0..n {
        if lp.lower[j].is_finite() {
            rows.push((vec![(j, -1.0)], -lp.lower[j]));
        }
        if lp.upper[j].is_finite() {
            rows.push((vec![(j, 1.0)], lp.upper[j]));
        }
    }
    let m = rows.len();
    let mut g = DMatrix::zeros(m, n);
    let mut h = DVector::zeros(m);
    for (i, (coeffs, rhs)) in rows.into_iter().enumerate() {
        for (j, a) in coeffs {
            g[(i, j)] += a;
        }
        h[i] = rhs;
    }
    Standard {
        g,
        h,
        c: DVector::from_column_slice(&lp.cost),
    }
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

/// Solves `(G' W G) dx = rhs`, regularizing if the matrix is near singular.
fn solve_normal(g: &DMatrix<f64>, w: &DVector<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let n = g.ncols();
    let mut scaled = g.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= w[i];
    }
    let normal = g.transpose() * scaled;
    let scale = normal.diagonal().amax().max(1.0);
    let mut reg = 0.0;
    for _ in 0..8 {
        let mut mat = normal.clone();
        if reg > 0.0 {
            for k in 0..n {
                mat[(k, k)] += reg;
            }
        }
        if let Some(chol) = mat.cholesky() {
            return Ok(chol.solve(rhs));
        }
        reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
    }
    Err(Error::Numerical("normal equations are not positive definite".into()))
}

/// Solves `lp` to the tolerance in `opts`.
pub fn solve(lp: &LpProblem, opts: &IpmOptions) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();
    let explicit_rows = lp.rows.len();
    if n == 0 {
        if let Some(r) = lp.rows.iter().find(|r| r.rhs < 0.0) {
            return Err(Error::Domain(format!("empty program has an infeasible row (rhs {})", r.rhs)));
        }
        return Ok(LpSolution {
            x: Vec::new(),
            row_duals: vec![0.0; explicit_rows],
            row_slacks: lp.rows.iter().map(|r| r.rhs).collect(),
            objective: lp.constant,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            gap: 0.0,
            max_complementarity: 0.0,
        });
    }
    let Standard { g, h, c } = standardize(lp);
    let m = g.nrows();

    // Start from the bound midpoint (or zero) with slacks pushed positive.
    let mut x = DVector::from_iterator(
        n,
        (0..n).map(|j| match (lp.lower[j].is_finite(), lp.upper[j].is_finite()) {
            (true, true) => 0.5 * (lp.lower[j] + lp.upper[j]),
            (true, false) => lp.lower[j] + 1.0,
            (false, true) => lp.upper[j] - 1.0,
            (false, false) => 0.0,
        }),
    );
    let mut s = (&h - &g * &x).map(|v| v.max(1.0));
    let mut z = DVector::from_element(m, 1.0);

    let h_norm = 1.0 + h.amax();
    let c_norm = 1.0 + c.amax();
    let gt = g.transpose();

    for iteration in 0..opts.max_iter {
        let r_dual = &c + &gt * &z;
        let r_primal = &g * &x + &s - &h;
        let comp = s.component_mul(&z);
        let gap = comp.sum();
        let max_comp = comp.max();
        let primal_res = r_primal.amax();
        let dual_res = r_dual.amax();

        if primal_res <= opts.tol * h_norm && dual_res <= opts.tol * c_norm && max_comp <= opts.tol {
            let xs: Vec<f64> = x.iter().copied().collect();
            return Ok(LpSolution {
                objective: lp.objective(&xs),
                row_duals: z.rows(0, explicit_rows).iter().copied().collect(),
                row_slacks: s.rows(0, explicit_rows).iter().copied().collect(),
                x: xs,
                iterations: iteration,
                primal_residual: primal_res,
                dual_residual: dual_res,
                gap,
                max_complementarity: max_comp,
            });
        }

        let mu = gap / m as f64;
        let w = z.component_div(&s);

        // dz = S^-1 (Z G dx + Z r_p - r_sz), ds = -r_p - G dx
        let direction = |r_sz: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
            let inner = (r_sz - z.component_mul(&r_primal)).component_div(&s);
            let rhs = -&r_dual + &gt * inner;
            let dx = solve_normal(&g, &w, &rhs)?;
            let g_dx = &g * &dx;
            let ds = -&r_primal - &g_dx;
            let dz = (z.component_mul(&g_dx) + z.component_mul(&r_primal) - r_sz).component_div(&s);
            Ok((dx, ds, dz))
        };

        // Predictor: pure Newton step toward complementarity zero.
        let (_, ds_aff, dz_aff) = direction(&comp)?;
        let alpha_p = max_step(&s, &ds_aff).min(1.0);
        let alpha_d = max_step(&z, &dz_aff).min(1.0);
        let mu_aff = (&s + alpha_p * &ds_aff).dot(&(&z + alpha_d * &dz_aff)) / m as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        // Corrector with Mehrotra's second-order term and centering.
        let r_sz = &comp + ds_aff.component_mul(&dz_aff) - DVector::from_element(m, sigma * mu);
        let (dx, ds, dz) = direction(&r_sz)?;

        let step = 0.995 * max_step(&s, &ds).min(max_step(&z, &dz));
        let step = step.min(1.0);
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::Numerical(format!("step length collapsed at iteration {iteration}")));
        }
        x += step * dx;
        s += step * ds;
        z += step * dz;
        if x.iter().chain(s.iter()).chain(z.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite iterate at iteration {iteration}")));
        }
    }

    let r_dual = &c + &gt * &z;
    let r_primal = &g * &x + &s - &h;
    Err(Error::MaxIterations {
        iterations: opts.max_iter,
        primal_residual: r_primal.amax(),
        dual_residual: r_dual.amax(),
        gap: s.dot(&z),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_only_program_sits_at_lower_bounds() {
        let mut lp = LpProblem::default();
        for c in [1.0, 2.5, 0.3] {
            lp.add_variable(c, 0.0, 4.0);
        }
        let sol = solve(&lp, &IpmOptions::default()).unwrap();
        for v in &sol.x {
            assert!(v.abs() < 1e-7, "{v}");
        }
        assert!(sol.objective.abs() < 1e-7);
    }

    #[test]
    fn two_variable_vertex() {
        // max x + y s.t. x + 2y <= 4, 3x + y <= 6, 0 <= x, y.  Optimum (1.6, 1.2).
        let mut lp = LpProblem::default();
        let x = lp.add_variable(-1.0, 0.0, f64::INFINITY);
        let y = lp.add_variable(-1.0, 0.0, f64::INFINITY);
        lp.add_le(vec![(x, 1.0), (y, 2.0)], 4.0);
        lp.add_le(vec![(x, 3.0), (y, 1.0)], 6.0);
        let sol = solve(&lp, &IpmOptions::default()).unwrap();
        assert!((sol.x[0] - 1.6).abs() < 1e-7);
        assert!((sol.x[1] - 1.2).abs() < 1e-7);
        assert!((sol.objective + 2.8).abs() < 1e-7);
        assert!(sol.max_complementarity <= 1e-8);
        // Both rows bind with duals 0.4 and 0.2.
        assert!((sol.row_duals[0] - 0.4).abs() < 1e-6);
        assert!((sol.row_duals[1] - 0.2).abs() < 1e-6);
    }

    #[test]
    fn ge_rows_and_constant() {
        let mut lp = LpProblem::default();
        let a = lp.add_variable(0.9, 0.0, 7.5);
        let b = lp.add_variable(0.3, 0.0, 7.5);
        lp.add_ge(vec![(a, 0.95), (b, 0.95)], 7.5);
        lp.constant = 1.0;
        let sol = solve(&lp, &IpmOptions::default()).unwrap();
        let expected = 0.9 * (7.5 / 0.95 - 7.5) + 0.3 * 7.5 + 1.0;
        assert!((sol.objective - expected).abs() < 1e-6);
        assert!(lp.max_violation(&sol.x) < 1e-7);
    }

    #[test]
    fn empty_program() {
        let lp = LpProblem {
            constant: 0.5,
            ..Default::default()
        };
        let sol = solve(&lp, &IpmOptions::default()).unwrap();
        assert_eq!(sol.objective, 0.5);
    }

    #[test]
    fn infeasible_program_does_not_converge() {
        let mut lp = LpProblem::default();
        let x = lp.add_variable(1.0, 0.0, 1.0);
        lp.add_ge(vec![(x, 1.0)], 2.0);
        let err = solve(
            &lp,
            &IpmOptions {
                tol: 1e-8,
                max_iter: 60,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::MaxIterations { .. } | Error::Numerical(_)));
    }

    #[test]
    fn invalid_bounds_rejected() {
        let mut lp = LpProblem::default();
        lp.add_variable(1.0, 2.0, 1.0);
        assert!(solve(&lp, &IpmOptions::default()).is_err());
    }
}
