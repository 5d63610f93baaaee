//! The canonical analysis model and the four population conditions.
//!
//! Six standardized observed variables and two factors:
//!
//! ```text
//!   F1 -> y1, y2, y3      loadings l1..l3
//!   F2 -> y4, y5          loadings l4, l5
//!   F1 -> F2              structural effect b1
//!   F2 -> y6              structural effect b2
//! ```
//!
//! `Var(F1) = 1` and the disturbance variance of `F2` is fixed at `1 - b1²`
//! so both factors have unit variance in the population. Unique variances
//! `u1..u5` equal `1 - l²`, and `u6 = 1 - b2²`, so every observed variance
//! is exactly 1. The focal parameters are `b1` and `b2`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Cell, ModelSpec, ParamVector};
use crate::discrepancy::rmsea_from_f;
use crate::discrepancy::RmseaScale;
use crate::error::{Error, Result};
use crate::fit::{fit_ml, FitOptions};
use crate::scalar::Real;

/// Unique-variance levels.
pub const LARGE_UNIQUE: f64 = 0.64;
pub const SMALL_UNIQUE: f64 = 0.36;
/// Structural-effect levels.
pub const SMALL_EFFECT: f64 = 0.2;
pub const LARGE_EFFECT: f64 = 0.5;

/// Observed-variable pair whose residual covariance is omitted from the
/// analysis model and used to inject misfit (`y6`, `y1`).
pub const PERTURBATION: (usize, usize) = (5, 0);

/// Population condition label. Serialized as `Sigma1`..`Sigma4`; parsing is
/// case-insensitive and also accepts `1`..`4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "&'static str")]
pub enum ConditionLabel {
    Sigma1,
    Sigma2,
    Sigma3,
    Sigma4,
}

impl ConditionLabel {
    pub const ALL: [ConditionLabel; 4] =
        [ConditionLabel::Sigma1, ConditionLabel::Sigma2, ConditionLabel::Sigma3, ConditionLabel::Sigma4];

    pub fn variant(self) -> Variant {
        match self {
            ConditionLabel::Sigma1 => Variant { large_unique: true, large_effects: false },
            ConditionLabel::Sigma2 => Variant { large_unique: false, large_effects: false },
            ConditionLabel::Sigma3 => Variant { large_unique: true, large_effects: true },
            ConditionLabel::Sigma4 => Variant { large_unique: false, large_effects: true },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionLabel::Sigma1 => "Sigma1",
            ConditionLabel::Sigma2 => "Sigma2",
            ConditionLabel::Sigma3 => "Sigma3",
            ConditionLabel::Sigma4 => "Sigma4",
        }
    }

    pub fn index(self) -> u64 {
        self as u64 + 1
    }
}

impl std::fmt::Display for ConditionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<ConditionLabel> for &'static str {
    fn from(label: ConditionLabel) -> Self {
        label.as_str()
    }
}

impl TryFrom<String> for ConditionLabel {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl std::str::FromStr for ConditionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sigma1" | "1" => Ok(ConditionLabel::Sigma1),
            "sigma2" | "2" => Ok(ConditionLabel::Sigma2),
            "sigma3" | "3" => Ok(ConditionLabel::Sigma3),
            "sigma4" | "4" => Ok(ConditionLabel::Sigma4),
            other => Err(Error::Parse(format!("unknown condition '{other}'"))),
        }
    }
}

/// Factorial cell: unique-variance level × structural-effect level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Variant {
    pub large_unique: bool,
    pub large_effects: bool,
}

impl Variant {
    pub fn label(self) -> ConditionLabel {
        match (self.large_unique, self.large_effects) {
            (true, false) => ConditionLabel::Sigma1,
            (false, false) => ConditionLabel::Sigma2,
            (true, true) => ConditionLabel::Sigma3,
            (false, true) => ConditionLabel::Sigma4,
        }
    }

    pub fn unique_variance(self) -> f64 {
        if self.large_unique {
            LARGE_UNIQUE
        } else {
            SMALL_UNIQUE
        }
    }

    pub fn effect(self) -> f64 {
        if self.large_effects {
            LARGE_EFFECT
        } else {
            SMALL_EFFECT
        }
    }
}

#[derive(Debug, Clone)]
pub struct PopulationCondition<T: Real> {
    pub label: ConditionLabel,
    pub model: ModelSpec<T>,
    pub theta_star: ParamVector<T>,
    /// Population covariance, perturbed when `epsilon_pop > 0`.
    pub sigma_pop: DMatrix<T>,
    /// Population misfit on the RMSEA scale.
    pub epsilon_pop: T,
    /// Magnitude of the omitted residual covariance.
    pub perturbation: T,
    /// Observed variables carrying the omitted residual covariance.
    pub perturbation_pair: (usize, usize),
}

/// Canonical analysis model for the given levels and its population
/// parameter vector.
pub fn canonical_model<T: Real>(unique_variance: f64, effect: f64) -> (ModelSpec<T>, ParamVector<T>) {
    const Y6: usize = 5;
    const F1: usize = 6;
    const F2: usize = 7;
    let names = ["l1", "l2", "l3", "l4", "l5", "b1", "b2", "u1", "u2", "u3", "u4", "u5", "u6"];
    let directed = vec![
        Cell::free(0, F1, 0),
        Cell::free(1, F1, 1),
        Cell::free(2, F1, 2),
        Cell::free(3, F2, 3),
        Cell::free(4, F2, 4),
        Cell::free(F2, F1, 5),
        Cell::free(Y6, F2, 6),
    ];
    let mut symmetric: Vec<Cell<T>> = (0..6).map(|i| Cell::free(i, i, 7 + i)).collect();
    symmetric.push(Cell::fixed(F1, F1, T::one()));
    symmetric.push(Cell::fixed(F2, F2, T::lit(1.0 - effect * effect)));

    let loading = (1.0 - unique_variance).sqrt();
    let mut theta = vec![loading; 5];
    theta.extend([effect, effect]);
    theta.extend([unique_variance; 5]);
    theta.push(1.0 - effect * effect);
    let theta_star = DVector::from_iterator(theta.len(), theta.into_iter().map(T::lit));

    let model = ModelSpec::new(6, 2, directed, symmetric, names.iter().map(|s| s.to_string()).collect(), None)
        .expect("canonical model is valid");
    (model, theta_star)
}

/// Correctly specified population condition for `variant`.
pub fn builtin_conditions<T: Real>(variant: Variant) -> PopulationCondition<T> {
    let (model, theta_star) = canonical_model::<T>(variant.unique_variance(), variant.effect());
    let sigma_pop = super::sigma_of_theta(&model, &theta_star).expect("canonical structure is regular");
    PopulationCondition {
        label: variant.label(),
        model,
        theta_star,
        sigma_pop,
        epsilon_pop: T::zero(),
        perturbation: T::zero(),
        perturbation_pair: PERTURBATION,
    }
}

fn perturbed<T: Real>(base: &DMatrix<T>, t: T, (i, j): (usize, usize)) -> DMatrix<T> {
    let mut sigma = base.clone();
    sigma[(i, j)] += t;
    sigma[(j, i)] += t;
    sigma
}

/// Population RMSEA of the analysis model at perturbation magnitude `t`,
/// or `None` when the perturbed covariance is not positive definite.
fn misfit_at<T: Real>(
    cond: &PopulationCondition<T>,
    base: &DMatrix<T>,
    t: T,
    pair: (usize, usize),
    df: usize,
) -> Result<Option<T>> {
    let sigma = perturbed(base, t, pair);
    if sigma.clone().cholesky().is_none() {
        return Ok(None);
    }
    let opts = FitOptions { start: Some(cond.theta_star.clone()), ..FitOptions::default() };
    let fit = fit_ml(&cond.model, &sigma, 0, &opts)?;
    Ok(Some(rmsea_from_f(fit.f_hat, df, RmseaScale::Population)))
}

/// Adds an omitted residual covariance `t` between `y1` and `y6` so that
/// the analysis model fits the population with RMSEA `epsilon_target`.
///
/// The magnitude is found by exponential bracketing followed by bisection
/// (Illinois-safeguarded regula falsi) on `t`.
pub fn misspecify_to_epsilon<T: Real>(
    cond: &PopulationCondition<T>,
    epsilon_target: T,
    df: usize,
) -> Result<PopulationCondition<T>> {
    misspecify_along(cond, epsilon_target, df, PERTURBATION)
}

/// As [`misspecify_to_epsilon`], with the omitted residual covariance placed
/// on an arbitrary pair of observed variables.
pub fn misspecify_along<T: Real>(
    cond: &PopulationCondition<T>,
    epsilon_target: T,
    df: usize,
    pair: (usize, usize),
) -> Result<PopulationCondition<T>> {
    if epsilon_target < T::zero() || df == 0 {
        return Err(Error::InvalidInput("epsilon must be nonnegative and df positive".into()));
    }
    if epsilon_target == T::zero() {
        return Ok(cond.clone());
    }
    let base = perturbed(&cond.sigma_pop, -cond.perturbation, cond.perturbation_pair);
    let unreachable = || Error::TargetUnreachable { epsilon: epsilon_target.as_f64() };

    let (i, j) = pair;
    if i == j || i >= base.nrows() || j >= base.nrows() {
        return Err(Error::InvalidInput("perturbation needs two distinct observed variables".into()));
    }
    let t_cap = (base[(i, i)] * base[(j, j)]).sqrt();
    let mut lo = T::zero();
    let mut g_lo = -epsilon_target;
    let mut hi = t_cap * T::lit(0.01);
    let g_hi = loop {
        match misfit_at(cond, &base, hi, pair, df)? {
            Some(eps) if eps >= epsilon_target => break eps - epsilon_target,
            Some(eps) => {
                lo = hi;
                g_lo = eps - epsilon_target;
                hi *= T::lit(2.0);
                if hi >= t_cap {
                    hi = (lo + t_cap) * T::lit(0.5);
                }
            }
            None => {
                hi = (lo + hi) * T::lit(0.5);
            }
        }
        if hi - lo < t_cap * T::lit(1e-12) {
            return Err(unreachable());
        }
    };

    let (mut a, mut fa, mut b, mut fb) = (lo, g_lo, hi, g_hi);
    let tol = T::lit(1e-11);
    let mut side = 0i8;
    let mut t = b;
    let mut g = fb;
    for _ in 0..200 {
        if g.abs() < tol || (b - a) < t_cap * T::lit(1e-15) {
            break;
        }
        t = (a * fb - b * fa) / (fb - fa);
        if !(t > a && t < b) {
            t = (a + b) * T::lit(0.5);
        }
        g = misfit_at(cond, &base, t, pair, df)?.ok_or_else(unreachable)? - epsilon_target;
        if g > T::zero() {
            b = t;
            fb = g;
            if side == 1 {
                fa *= T::lit(0.5);
            }
            side = 1;
        } else {
            a = t;
            fa = g;
            if side == -1 {
                fb *= T::lit(0.5);
            }
            side = -1;
        }
    }
    if g.abs() >= T::lit(1e-8) {
        return Err(unreachable());
    }

    Ok(PopulationCondition {
        label: cond.label,
        model: cond.model.clone(),
        theta_star: cond.theta_star.clone(),
        sigma_pop: perturbed(&base, t, pair),
        epsilon_pop: epsilon_target,
        perturbation: t,
        perturbation_pair: pair,
    })
}
