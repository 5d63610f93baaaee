//! Maximum-likelihood estimation by BFGS with a Newton polish.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::discrepancy::{rmsea_from_f, Discrepancy, RmseaScale};
use crate::error::{Error, Result};
use crate::model::{Entry, ModelSpec, ParamVector};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct FitOptions<T> {
    pub max_iter: usize,
    /// Convergence threshold on the gradient max-norm.
    pub grad_tol: T,
    /// Stall threshold on the change in `F` between iterations, relative to
    /// `max(|F|, 1)`.
    pub f_rel_tol: T,
    /// Overrides the model's start vector.
    pub start: Option<ParamVector<T>>,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        FitOptions { max_iter: 500, grad_tol: T::lit(1e-6), f_rel_tol: T::lit(1e-12), start: None }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult<T: Real> {
    pub theta_hat: ParamVector<T>,
    pub f_hat: T,
    /// Gradient max-norm at `theta_hat`.
    pub grad_norm: T,
    pub hessian_at_opt: DMatrix<T>,
    pub iterations: usize,
    pub converged: bool,
    /// A free variance is negative at the solution.
    pub improper: bool,
    /// Sample size used for inference on this fit.
    pub n: usize,
    /// The analyzed covariance.
    pub s: DMatrix<T>,
    /// Objective at the start vector followed by every accepted iterate.
    pub f_trace: Vec<T>,
}

fn max_norm<T: Real>(v: &DVector<T>) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

/// Evaluates `F`, mapping an inadmissible point (non-pd `Σ`, singular
/// structure) to `None`.
fn try_value<T: Real>(disc: &Discrepancy<'_, T>, theta: &ParamVector<T>) -> Result<Option<T>> {
    match disc.value(theta) {
        Ok(f) => Ok(Some(f)),
        Err(Error::NotPositiveDefinite(_)) | Err(Error::SingularStructure) => Ok(None),
        Err(e) => Err(e),
    }
}

fn has_negative_variance<T: Real>(model: &ModelSpec<T>, theta: &ParamVector<T>) -> bool {
    model.symmetric().iter().any(|c| match c.entry {
        Entry::Free(k) => c.row == c.col && theta[k] < T::zero(),
        Entry::Fixed(_) => false,
    })
}

/// Fits `model` to the covariance `s` by minimizing `F_ML`.
pub fn fit_ml<T: Real>(model: &ModelSpec<T>, s: &DMatrix<T>, n: usize, opts: &FitOptions<T>) -> Result<FitResult<T>> {
    let disc = Discrepancy::new(model, s)?;
    let q = model.q();
    let mut theta = match &opts.start {
        Some(start) if start.len() == q => start.clone(),
        Some(_) => return Err(Error::InvalidInput("start vector has wrong length".into())),
        None => model.start_values(Some(s)),
    };
    let mut f = disc.value(&theta)?;
    let mut grad = disc.gradient(&theta)?;
    let mut trace = vec![f];
    let mut iterations = 0;

    let c1 = T::lit(1e-4);
    let half = T::lit(0.5);
    let min_step = T::lit(1e-20);
    let identity = DMatrix::<T>::identity(q, q);
    let mut h_inv = identity.clone();
    let mut fresh = true;

    while iterations < opts.max_iter && max_norm(&grad) >= opts.grad_tol {
        let mut dir = -(&h_inv * &grad);
        let mut slope = grad.dot(&dir);
        if slope >= T::zero() {
            h_inv = identity.clone();
            fresh = true;
            dir = -grad.clone();
            slope = grad.dot(&dir);
        }

        let mut alpha = T::one();
        let mut accepted = None;
        while alpha > min_step {
            let cand = &theta + &dir * alpha;
            if let Some(fc) = try_value(&disc, &cand)? {
                if fc <= f + c1 * alpha * slope {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            alpha *= half;
        }
        let Some((next, f_next)) = accepted else {
            if fresh {
                break;
            }
            h_inv = identity.clone();
            fresh = true;
            continue;
        };
        let g_next = disc.gradient(&next)?;
        iterations += 1;

        let step = &next - &theta;
        let dy = &g_next - &grad;
        let sy = step.dot(&dy);
        if sy > T::lit(1e-12) * step.norm() * dy.norm() {
            let rho = T::one() / sy;
            if fresh {
                // initial inverse-Hessian scaling
                h_inv = &identity * (sy / dy.dot(&dy));
            }
            let left = &identity - &step * dy.transpose() * rho;
            let right = &identity - &dy * step.transpose() * rho;
            h_inv = &left * &h_inv * &right + &step * step.transpose() * rho;
            fresh = false;
        }

        let change = (f - f_next).abs();
        theta = next;
        f = f_next;
        grad = g_next;
        trace.push(f);
        if change <= opts.f_rel_tol * f.abs().max(T::one()) {
            break;
        }
    }

    // Newton polish with the finite-difference Hessian, eigenvalues
    // reflected and floored so the step is always a descent direction.
    // Aims three orders of magnitude below the convergence threshold.
    let slack = T::machine_eps() * T::lit(64.0);
    let polish_tol = opts.grad_tol * T::lit(1e-3);
    let mut polish = 0;
    while max_norm(&grad) >= polish_tol && polish < 50 && iterations < opts.max_iter {
        polish += 1;
        let Ok(h) = disc.hessian(&theta) else { break };
        let eig = SymmetricEigen::new(h);
        let floor = eig.eigenvalues.amax().max(T::one()) * T::lit(1e-10);
        let inv = eig.eigenvalues.map(|l| T::one() / l.abs().max(floor));
        let vt_g = eig.eigenvectors.transpose() * &grad;
        let dir = -(&eig.eigenvectors * vt_g.component_mul(&inv));
        let slope = grad.dot(&dir);

        let mut alpha = T::one();
        let mut moved = false;
        while alpha > T::lit(1e-12) {
            let cand = &theta + &dir * alpha;
            if let Some(fc) = try_value(&disc, &cand)? {
                let armijo = fc <= f + c1 * alpha * slope;
                let flat = fc <= f + slack * f.abs().max(T::one());
                if armijo || flat {
                    let gc = disc.gradient(&cand)?;
                    if armijo || max_norm(&gc) < max_norm(&grad) {
                        theta = cand;
                        f = fc.min(f);
                        grad = gc;
                        moved = true;
                        break;
                    }
                }
            }
            alpha *= half;
        }
        iterations += 1;
        trace.push(f);
        if !moved {
            break;
        }
    }

    let grad_norm = max_norm(&grad);
    if grad_norm >= opts.grad_tol {
        return Err(Error::NoConvergence { iterations, grad_norm: grad_norm.as_f64() });
    }
    let hessian_at_opt = disc.hessian(&theta)?;
    Ok(FitResult {
        improper: has_negative_variance(model, &theta),
        theta_hat: theta,
        f_hat: f,
        grad_norm,
        hessian_at_opt,
        iterations,
        converged: true,
        n,
        s: s.clone(),
        f_trace: trace,
    })
}

/// Population RMSEA `sqrt(F₀ / df)` of `model` against `sigma_pop`.
pub fn population_rmsea<T: Real>(model: &ModelSpec<T>, sigma_pop: &DMatrix<T>, df: usize) -> Result<T> {
    let fit = fit_ml(model, sigma_pop, 0, &FitOptions::default())?;
    Ok(rmsea_from_f(fit.f_hat, df, RmseaScale::Population))
}
