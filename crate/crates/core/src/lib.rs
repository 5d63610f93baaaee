//! Maximum-likelihood covariance structure analysis with fungible parameter
//! estimate (FPE) contours and likelihood confidence-set axis widths.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`). The aliases below fix the scalar at `f64`, which is
//! what the Monte Carlo study and the command-line tool use.

pub mod contour;
pub mod discrepancy;
pub mod error;
pub mod fit;
pub mod model;
mod roots;
pub mod scalar;
pub mod simstudy;

pub use error::{Error, Result, Which};
pub use scalar::Real;

pub type Matrix<T = f64> = nalgebra::DMatrix<T>;
pub type Vector<T = f64> = nalgebra::DVector<T>;

pub type Model = model::ModelSpec<f64>;
pub type Model32 = model::ModelSpec<f32>;
pub type Params = model::ParamVector<f64>;
pub type Condition = model::PopulationCondition<f64>;
pub type Fit = fit::FitResult<f64>;
pub type Fit32 = fit::FitResult<f32>;
pub type FitOpts = fit::FitOptions<f64>;
pub type Target = contour::ContourTarget<f64>;
pub type Widths = contour::AxisWidths<f64>;
