//! Levenberg-Marquardt least squares with a forward-difference Jacobian and
//! box constraints enforced by projection.
//!
//! Deterministic given (data, init, bounds): no randomization anywhere. A
//! parameter is held fixed by setting `lower[j] == upper[j]`.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const FTOL: f64 = 1e-12;
const XTOL: f64 = 1e-12;
/// Scale-free gradient criterion: max cosine between the residual and the
/// Jacobian columns, as in MINPACK.
const GTOL_COS: f64 = 1e-10;
const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e14;

/// Converged least-squares estimate with per-parameter standard errors.
///
/// `converged` implies the fit terminated on a gradient, step, or cost
/// tolerance at a local optimum. `stderr` entries are NaN when the normal
/// matrix is singular (and 0 for parameters held fixed).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Residual sum of squares at the optimum.
    pub chi2: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    /// Value of a named parameter; panics if the name is unknown.
    pub fn param(&self, name: &str) -> f64 {
        let i = self
            .param_names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("no fit parameter named '{name}'"));
        self.params[i]
    }

    pub fn stderr_of(&self, name: &str) -> f64 {
        let i = self
            .param_names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("no fit parameter named '{name}'"));
        self.stderr[i]
    }
}

fn clamp_into(p: &mut [f64], lower: &[f64], upper: &[f64]) {
    for j in 0..p.len() {
        p[j] = p[j].clamp(lower[j], upper[j]);
    }
}

/// Fit `model(x, params)` to (x, y) in the least-squares sense.
///
/// `lower`/`upper` bound each parameter; equal bounds pin it. Returns an
/// error if the iteration cap is exhausted without meeting any convergence
/// criterion, or if the model produces non-finite values at the start.
pub fn lm_fit<M>(
    model: M,
    x: &[f64],
    y: &[f64],
    init: &[f64],
    lower: &[f64],
    upper: &[f64],
    param_names: &[&str],
) -> Result<FitResult>
where
    M: Fn(f64, &[f64]) -> f64,
{
    lm_fit_with_step(model, x, y, init, lower, upper, param_names, f64::EPSILON.sqrt())
}

/// [`lm_fit`] with an explicit relative finite-difference step. Models with
/// internal numerical noise (e.g. adaptive quadrature) need a step large
/// enough that the differenced signal clears that noise.
#[allow(clippy::too_many_arguments)]
pub fn lm_fit_with_step<M>(
    model: M,
    x: &[f64],
    y: &[f64],
    init: &[f64],
    lower: &[f64],
    upper: &[f64],
    param_names: &[&str],
    rel_step: f64,
) -> Result<FitResult>
where
    M: Fn(f64, &[f64]) -> f64,
{
    let n = x.len();
    let np = init.len();
    if n != y.len() {
        return Err(Error::InvalidInput("x and y lengths differ".into()));
    }
    if np == 0 || lower.len() != np || upper.len() != np || param_names.len() != np {
        return Err(Error::InvalidInput(
            "init, bounds, and names must have the same nonzero length".into(),
        ));
    }
    for j in 0..np {
        if lower[j] > upper[j] {
            return Err(Error::InvalidInput(format!(
                "parameter '{}': lower bound above upper bound",
                param_names[j]
            )));
        }
        if init[j] < lower[j] || init[j] > upper[j] {
            return Err(Error::InvalidInput(format!(
                "parameter '{}': initial value {} outside [{}, {}]",
                param_names[j], init[j], lower[j], upper[j]
            )));
        }
    }
    let free: Vec<usize> = (0..np).filter(|&j| lower[j] < upper[j]).collect();
    let nf = free.len();
    if n < nf {
        return Err(Error::InvalidInput(format!(
            "{n} data points cannot constrain {nf} free parameters"
        )));
    }

    let residuals = |p: &[f64]| -> Option<(DVector<f64>, f64)> {
        let mut r = DVector::zeros(n);
        for i in 0..n {
            let v = y[i] - model(x[i], p);
            if !v.is_finite() {
                return None;
            }
            r[i] = v;
        }
        let cost = r.dot(&r);
        Some((r, cost))
    };

    // Forward-difference Jacobian of the model over the free parameters.
    let jacobian = |p: &[f64], r: &DVector<f64>| -> Option<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(n, nf);
        let mut pw = p.to_vec();
        for (col, &j) in free.iter().enumerate() {
            let h0 = rel_step * (p[j].abs() + rel_step);
            // Step inward when the forward point would leave the box.
            let h = if p[j] + h0 <= upper[j] { h0 } else { -h0 };
            pw[j] = p[j] + h;
            for i in 0..n {
                let v = model(x[i], &pw);
                if !v.is_finite() {
                    return None;
                }
                // r_i = y_i - f_i, so ∂f/∂p = (f(p+h) - f(p))/h = -(Δr)/h.
                jac[(i, col)] = (v - (y[i] - r[i])) / h;
            }
            pw[j] = p[j];
        }
        Some(jac)
    };

    let mut p = init.to_vec();
    clamp_into(&mut p, lower, upper);
    let (mut r, mut cost) = residuals(&p)
        .ok_or_else(|| Error::InvalidInput("model is non-finite at the initial point".into()))?;

    let mut lambda = LAMBDA_INIT;
    let mut iterations = 0usize;
    let mut converged = false;

    if nf == 0 {
        converged = true;
    }

    while !converged {
        let jac = jacobian(&p, &r).ok_or_else(|| {
            Error::NoConvergence("model became non-finite while differentiating".into())
        })?;
        let grad = jac.transpose() * &r;
        let r_norm = r.norm();
        // Active set: a parameter pinned at a bound with its gradient
        // pointing outward cannot move this iteration. It is excluded from
        // both the convergence test and the solve, so the remaining
        // directions are not contaminated by the blocked one.
        let working: Vec<usize> = (0..nf)
            .filter(|&col| {
                let j = free[col];
                !((p[j] <= lower[j] && grad[col] < 0.0)
                    || (p[j] >= upper[j] && grad[col] > 0.0))
            })
            .collect();
        let max_cos = working
            .iter()
            .map(|&col| {
                let denom = jac.column(col).norm() * r_norm;
                if denom > 0.0 {
                    grad[col].abs() / denom
                } else {
                    0.0
                }
            })
            .fold(0.0f64, f64::max);
        if working.is_empty() || max_cos <= GTOL_COS {
            converged = true;
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::NoConvergence(format!(
                "no convergence after {MAX_ITERATIONS} iterations (chi2 = {cost:.6e})"
            )));
        }

        let jac_w = jac.select_columns(working.iter());
        let grad_w = DVector::from_iterator(working.len(), working.iter().map(|&c| grad[c]));
        let jtj = jac_w.transpose() * &jac_w;
        let nw = working.len();
        let max_diag = (0..nw).map(|j| jtj[(j, j)]).fold(0.0f64, f64::max);
        let floor = (1e-12 * max_diag).max(f64::MIN_POSITIVE);

        // Inner damping loop: raise lambda until a step improves the cost.
        loop {
            let mut damped = jtj.clone();
            for j in 0..nw {
                damped[(j, j)] += lambda * jtj[(j, j)].max(floor);
            }
            let step = Cholesky::new(damped).map(|ch| ch.solve(&grad_w));
            let step = match step {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    if lambda > LAMBDA_MAX {
                        return Err(Error::NoConvergence(
                            "normal equations remained singular at maximum damping".into(),
                        ));
                    }
                    continue;
                }
            };

            let mut trial = p.clone();
            for (k, &col) in working.iter().enumerate() {
                trial[free[col]] += step[k];
            }
            clamp_into(&mut trial, lower, upper);

            match residuals(&trial) {
                Some((rt, ct)) if ct < cost => {
                    let dp_norm: f64 = free
                        .iter()
                        .map(|&j| (trial[j] - p[j]).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    let p_norm: f64 = free.iter().map(|&j| p[j].powi(2)).sum::<f64>().sqrt();
                    let improvement = cost - ct;
                    p = trial;
                    r = rt;
                    cost = ct;
                    iterations += 1;
                    lambda = (lambda * 0.25).max(1e-14);
                    if improvement <= FTOL * cost.max(f64::MIN_POSITIVE)
                        || dp_norm <= XTOL * (p_norm + XTOL)
                    {
                        converged = true;
                    }
                    break;
                }
                _ => {
                    lambda *= 10.0;
                    if lambda > LAMBDA_MAX {
                        // No descent direction left at machine resolution.
                        converged = true;
                        break;
                    }
                }
            }
        }
    }

    // Standard errors from the covariance chi2/(n - nf) * (JᵀJ)⁻¹.
    let mut stderr = vec![0.0; np];
    if nf > 0 {
        let jac = jacobian(&p, &r)
            .ok_or_else(|| Error::NoConvergence("model non-finite at the optimum".into()))?;
        let jtj = jac.transpose() * &jac;
        let dof = n.saturating_sub(nf);
        let variance = if dof > 0 { cost / dof as f64 } else { f64::NAN };
        match jtj.try_inverse() {
            Some(cov) => {
                for (col, &j) in free.iter().enumerate() {
                    let v = variance * cov[(col, col)];
                    stderr[j] = if v >= 0.0 { v.sqrt() } else { f64::NAN };
                }
            }
            None => {
                // Singular normal matrix: report, don't crash.
                for &j in &free {
                    stderr[j] = f64::NAN;
                }
            }
        }
    }

    Ok(FitResult {
        param_names: param_names.iter().map(|s| s.to_string()).collect(),
        params: p,
        stderr,
        chi2: cost,
        converged,
        iterations,
    })
}
