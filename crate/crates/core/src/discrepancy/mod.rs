//! Maximum-likelihood discrepancy, its derivatives, and RMSEA conversions.

pub mod special;

pub use special::{chisq_cdf, chisq_quantile, regularized_gamma_p, regularized_gamma_q};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result, Which};
use crate::model::{Entry, ModelSpec, ParamVector};
use crate::scalar::Real;

/// How a discrepancy maps onto the RMSEA scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmseaScale {
    /// `sqrt(F / df)`: `F` is a population discrepancy.
    Population,
    /// `sqrt(max(F / df - 1 / (n - 1), 0))`: `F` is a sample discrepancy
    /// from `n` observations.
    Sample { n: usize },
}

/// Fit summary on the discrepancy and RMSEA scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitIndices<T> {
    pub f_value: T,
    pub df: usize,
    pub n: usize,
    pub rmsea_sample: Option<T>,
    pub rmsea_population: Option<T>,
}

impl<T: Real> FitIndices<T> {
    /// Indices for a discrepancy `f` from `n` observations. RMSEA values are
    /// left empty for saturated models.
    pub fn new(f_value: T, df: usize, n: usize) -> Self {
        let (rmsea_sample, rmsea_population) = if df >= 1 {
            let sample = (n >= 2).then(|| rmsea_from_f(f_value, df, RmseaScale::Sample { n }));
            (sample, Some(rmsea_from_f(f_value, df, RmseaScale::Population)))
        } else {
            (None, None)
        };
        FitIndices { f_value, df, n, rmsea_sample, rmsea_population }
    }
}

/// RMSEA from a discrepancy value. `df` must be at least 1.
pub fn rmsea_from_f<T: Real>(f: T, df: usize, scale: RmseaScale) -> T {
    debug_assert!(df >= 1);
    let per_df = f / T::from_count(df);
    match scale {
        RmseaScale::Population => per_df.max(T::zero()).sqrt(),
        RmseaScale::Sample { n } => {
            debug_assert!(n >= 2);
            (per_df - T::one() / T::from_count(n - 1)).max(T::zero()).sqrt()
        }
    }
}

/// Discrepancy value whose RMSEA is `epsilon` (inverse of [`rmsea_from_f`]
/// on the untruncated branch).
pub fn f_from_rmsea<T: Real>(epsilon: T, df: usize, scale: RmseaScale) -> T {
    let df = T::from_count(df);
    match scale {
        RmseaScale::Population => df * epsilon * epsilon,
        RmseaScale::Sample { n } => df * (epsilon * epsilon + T::one() / T::from_count(n - 1)),
    }
}

/// `F_ML` for one model against one analyzed covariance, with the Cholesky
/// factor and log-determinant of `S` computed once.
#[derive(Debug, Clone)]
pub struct Discrepancy<'a, T: Real> {
    model: &'a ModelSpec<T>,
    s: DMatrix<T>,
    s_logdet: T,
}

fn log_det<T: Real>(chol: &Cholesky<T, Dyn>) -> T {
    let l = chol.l_dirty();
    (0..l.nrows()).fold(T::zero(), |acc, i| acc + l[(i, i)].ln()) * T::lit(2.0)
}

impl<'a, T: Real> Discrepancy<'a, T> {
    pub fn new(model: &'a ModelSpec<T>, s: &DMatrix<T>) -> Result<Self> {
        let p = model.n_observed();
        if s.nrows() != p || s.ncols() != p {
            return Err(Error::InvalidInput(format!(
                "covariance is {}x{}, model has {p} observed variables",
                s.nrows(),
                s.ncols()
            )));
        }
        let chol = Cholesky::new(s.clone()).ok_or(Error::NotPositiveDefinite(Which::Sample))?;
        let s_logdet = log_det(&chol);
        Ok(Discrepancy { model, s: s.clone(), s_logdet })
    }

    pub fn model(&self) -> &ModelSpec<T> {
        self.model
    }

    pub fn s(&self) -> &DMatrix<T> {
        &self.s
    }

    /// `ln|Σ| - ln|S| + tr(S Σ⁻¹) - p`, clamped at zero against rounding.
    pub fn value(&self, theta: &ParamVector<T>) -> Result<T> {
        let sigma = self.model.implied(theta)?.sigma;
        let chol = Cholesky::new(sigma).ok_or(Error::NotPositiveDefinite(Which::Implied))?;
        let trace = chol.solve(&self.s).trace();
        let p = T::from_count(self.model.n_observed());
        let f = log_det(&chol) - self.s_logdet + trace - p;
        Ok(f.max(T::zero()))
    }

    /// Analytic gradient.
    ///
    /// With `W = Σ⁻¹ - Σ⁻¹ S Σ⁻¹` embedded as `G = Fᵀ W F`, `B = (I - A)⁻¹`
    /// and `C = B S Bᵀ`, a directed cell `(i, j)` contributes
    /// `2 (Bᵀ G C)[i, j]` and a symmetric cell contributes `(Bᵀ G B)[i, j]`
    /// once per occurrence in the full matrix.
    pub fn gradient(&self, theta: &ParamVector<T>) -> Result<DVector<T>> {
        let imp = self.model.implied(theta)?;
        let chol = Cholesky::new(imp.sigma).ok_or(Error::NotPositiveDefinite(Which::Implied))?;
        let sigma_inv = chol.inverse();
        let w = &sigma_inv - &sigma_inv * &self.s * &sigma_inv;

        let m = self.model.n_vars();
        let p = self.model.n_observed();
        let mut g = DMatrix::zeros(m, m);
        g.view_mut((0, 0), (p, p)).copy_from(&w);

        let bt_g = imp.b.transpose() * &g;
        let directed_part = &bt_g * &imp.c;
        let symmetric_part = &bt_g * &imp.b;

        let two = T::lit(2.0);
        let mut grad = DVector::zeros(self.model.q());
        for cell in self.model.directed() {
            if let Entry::Free(k) = cell.entry {
                grad[k] += two * directed_part[(cell.row, cell.col)];
            }
        }
        for cell in self.model.symmetric() {
            if let Entry::Free(k) = cell.entry {
                let v = symmetric_part[(cell.row, cell.col)];
                grad[k] += if cell.row == cell.col { v } else { two * v };
            }
        }
        Ok(grad)
    }

    /// Central finite differences of the analytic gradient, step
    /// `max(1e-5, 1e-5 |θᵢ|)`, symmetrized.
    pub fn hessian(&self, theta: &ParamVector<T>) -> Result<DMatrix<T>> {
        let q = theta.len();
        let step = T::lit(1e-5);
        let mut h = DMatrix::zeros(q, q);
        let mut probe = theta.clone();
        for i in 0..q {
            let hi = step.max(step * theta[i].abs());
            probe[i] = theta[i] + hi;
            let plus = self.gradient(&probe)?;
            probe[i] = theta[i] - hi;
            let minus = self.gradient(&probe)?;
            probe[i] = theta[i];
            let col = (plus - minus) / (hi + hi);
            h.set_column(i, &col);
        }
        Ok(crate::model::symmetrize(&h))
    }
}

/// ML discrepancy `F_ML(θ; S)`.
pub fn f_ml<T: Real>(model: &ModelSpec<T>, theta: &ParamVector<T>, s: &DMatrix<T>) -> Result<T> {
    Discrepancy::new(model, s)?.value(theta)
}

pub fn gradient<T: Real>(model: &ModelSpec<T>, theta: &ParamVector<T>, s: &DMatrix<T>) -> Result<DVector<T>> {
    Discrepancy::new(model, s)?.gradient(theta)
}

pub fn hessian<T: Real>(model: &ModelSpec<T>, theta: &ParamVector<T>, s: &DMatrix<T>) -> Result<DMatrix<T>> {
    Discrepancy::new(model, s)?.hessian(theta)
}
