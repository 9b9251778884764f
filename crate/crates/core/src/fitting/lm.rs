// Copyright 2026 fqnv Contributors
// SPDX-License-Identifier: Apache-2.0

//! Levenberg–Marquardt with Marquardt (diagonal, multiplicative) damping and
//! gain-ratio damping updates.

use serde::Serialize;

use crate::error::{Error, Result};

/// A nonlinear least-squares problem min ½‖r(p)‖².
pub trait LeastSquares {
    fn n_residuals(&self) -> usize;

    fn residuals(&self, p: &[f64], out: &mut [f64]) -> Result<()>;

    /// Column-major Jacobian ∂r_i/∂p_j at `jac[j * m + i]`.
    ///
    /// The default uses central differences.
    fn jacobian(&self, p: &[f64], jac: &mut [f64]) -> Result<()> {
        let m = self.n_residuals();
        let mut q = p.to_vec();
        let mut plus = vec![0.0; m];
        let mut minus = vec![0.0; m];
        for j in 0..p.len() {
            let h = f64::EPSILON.cbrt() * p[j].abs().max(1e-3);
            q[j] = p[j] + h;
            self.residuals(&q, &mut plus)?;
            q[j] = p[j] - h;
            self.residuals(&q, &mut minus)?;
            q[j] = p[j];
            for i in 0..m {
                jac[j * m + i] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Converged when the scaled step is below `xtol` times the scaled parameter norm.
    pub xtol: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iterations: 200, xtol: 1e-10, initial_damping: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solve the small dense system `a x = b` (row-major n×n) by partial-pivot elimination.
fn solve_dense(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))?;
        if a[piv * n + k] == 0.0 || !a[piv * n + k].is_finite() {
            return None;
        }
        if piv != k {
            for j in 0..n {
                a.swap(k * n + j, piv * n + j);
            }
            b.swap(k, piv);
        }
        for i in k + 1..n {
            let f = a[i * n + k] / a[k * n + k];
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k * n + j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k * n + k];
    }
    Some(x)
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn levenberg_marquardt(problem: &impl LeastSquares, p0: &[f64], opts: &LmOptions) -> Result<LmOutcome> {
    let n = p0.len();
    let m = problem.n_residuals();
    if m < n {
        return Err(Error::InsufficientData { found: m, needed: n });
    }
    let mut p = p0.to_vec();
    let mut r = vec![0.0; m];
    problem.residuals(&p, &mut r)?;
    let mut cost = 0.5 * sq_norm(&r);
    let mut jac = vec![0.0; m * n];
    let mut scale = vec![0.0f64; n];
    let mut mu = opts.initial_damping;
    let mut nu = 2.0;
    let mut trial = vec![0.0; m];
    let mut need_jacobian = true;
    let mut jtj = vec![0.0; n * n];
    let mut grad = vec![0.0; n];

    for iter in 1..=opts.max_iterations {
        if cost == 0.0 {
            return Ok(LmOutcome { params: p, residual_norm: 0.0, iterations: iter - 1, converged: true });
        }
        if need_jacobian {
            problem.jacobian(&p, &mut jac)?;
            for a in 0..n {
                for b in 0..n {
                    jtj[a * n + b] = (0..m).map(|i| jac[a * m + i] * jac[b * m + i]).sum();
                }
                grad[a] = (0..m).map(|i| jac[a * m + i] * r[i]).sum();
            }
            let dmax = (0..n).map(|a| jtj[a * n + a]).fold(0.0, f64::max);
            for a in 0..n {
                scale[a] = scale[a].max(jtj[a * n + a]).max(dmax * 1e-30);
            }
            if grad.iter().all(|g| *g == 0.0) {
                return Ok(LmOutcome { params: p, residual_norm: (2.0 * cost).sqrt(), iterations: iter - 1, converged: true });
            }
            need_jacobian = false;
        }

        let mut lhs = jtj.clone();
        for a in 0..n {
            lhs[a * n + a] += mu * scale[a];
        }
        let Some(h) = solve_dense(lhs, grad.iter().map(|g| -g).collect()) else {
            mu *= nu;
            nu *= 2.0;
            continue;
        };
        let step_norm = (0..n).map(|a| scale[a] * h[a] * h[a]).sum::<f64>().sqrt();
        let param_norm = (0..n).map(|a| scale[a] * p[a] * p[a]).sum::<f64>().sqrt();
        let small_step = step_norm <= opts.xtol * (param_norm + opts.xtol);

        let cand: Vec<f64> = p.iter().zip(&h).map(|(a, b)| a + b).collect();
        let new_cost = match problem.residuals(&cand, &mut trial) {
            Ok(()) if trial.iter().all(|x| x.is_finite()) => 0.5 * sq_norm(&trial),
            _ => f64::INFINITY,
        };
        let predicted: f64 = 0.5 * (0..n).map(|a| h[a] * (mu * scale[a] * h[a] - grad[a])).sum::<f64>();
        let rho = if predicted > 0.0 { (cost - new_cost) / predicted } else { -1.0 };

        if rho > 0.0 {
            p = cand;
            std::mem::swap(&mut r, &mut trial);
            cost = new_cost;
            mu *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
            nu = 2.0;
            need_jacobian = true;
        } else {
            mu *= nu;
            nu *= 2.0;
        }
        if small_step {
            return Ok(LmOutcome { params: p, residual_norm: (2.0 * cost).sqrt(), iterations: iter, converged: true });
        }
    }
    Ok(LmOutcome {
        params: p,
        residual_norm: (2.0 * cost).sqrt(),
        iterations: opts.max_iterations,
        converged: false,
    })
}
