//! FPE contours, likelihood confidence sets, and their axis widths.
//!
//! A contour is the level set `{θ : F(θ) = T}` restricted to the plane of
//! the focal parameters through `θ̂`; all other parameters stay at `θ̂`.
//! Widths are full axis lengths (twice the half-length).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::discrepancy::{chisq_quantile, f_from_rmsea, rmsea_from_f, Discrepancy, RmseaScale};
use crate::error::{Error, Result, Which};
use crate::fit::FitResult;
use crate::model::{ModelSpec, ParamVector};
use crate::roots::{golden_min, illinois};
use crate::scalar::Real;

/// Residual tolerance for contour points, `|F(θ) - T|`.
pub const CONTOUR_TOL: f64 = 1e-11;
/// Share of skipped directions above which a sweep is flagged partial.
pub const PARTIAL_SHARE: f64 = 0.05;
pub const DEFAULT_DIRECTIONS: usize = 360;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMode {
    DeltaF,
    EpsilonTilde,
    ConfidenceSet,
}

/// How a `δ_F` offset enters the target discrepancy.
///
/// Only the relative form makes contour widths grow with population misfit:
/// the other two add a constant to `F̂`, so their widths depend on the
/// curvature at `θ̂` alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scaling {
    /// `T = F̂ + δ_F`.
    Raw,
    /// `T = F̂ + 2 δ_F / (N - 1)`: `δ_F` is a log-likelihood offset.
    Likelihood,
    /// `T = F̂ (1 + δ_F)`: `δ_F` is a proportional worsening of fit.
    #[default]
    Relative,
}

impl std::str::FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Scaling::Raw),
            "likelihood" => Ok(Scaling::Likelihood),
            "relative" => Ok(Scaling::Relative),
            other => Err(Error::Parse(format!("unknown scaling '{other}'"))),
        }
    }
}

/// Level definition for a contour. Only the fields of the active mode are
/// read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourTarget<T> {
    pub mode: TargetMode,
    pub delta_f: T,
    pub epsilon_tilde: T,
    pub confidence: T,
    pub scaling: Scaling,
}

impl<T: Real> ContourTarget<T> {
    fn base(mode: TargetMode) -> Self {
        ContourTarget {
            mode,
            delta_f: T::lit(0.05),
            epsilon_tilde: T::lit(0.005),
            confidence: T::lit(0.95),
            scaling: Scaling::default(),
        }
    }

    pub fn delta_f(delta_f: T, scaling: Scaling) -> Self {
        ContourTarget { delta_f, scaling, ..Self::base(TargetMode::DeltaF) }
    }

    pub fn epsilon_tilde(epsilon_tilde: T) -> Self {
        ContourTarget { epsilon_tilde, ..Self::base(TargetMode::EpsilonTilde) }
    }

    pub fn confidence_set(confidence: T) -> Self {
        ContourTarget { confidence, ..Self::base(TargetMode::ConfidenceSet) }
    }

    /// Default target for `mode` (`δ_F = .05`, `ε̃ = .005`, level `.95`).
    pub fn default_for(mode: TargetMode) -> Self {
        Self::base(mode)
    }
}

/// Discrepancy level `T` of the contour around a fit.
///
/// `df` is the model degrees of freedom (used by the `ε̃` mode) and
/// `n_focal` the number of focal parameters (the chi-square df of a
/// confidence set).
pub fn f_target<T: Real>(target: &ContourTarget<T>, fit: &FitResult<T>, df: usize, n_focal: usize) -> T {
    let n = fit.n;
    let n_minus_1 = T::from_count(n.saturating_sub(1).max(1));
    match target.mode {
        TargetMode::DeltaF => match target.scaling {
            Scaling::Raw => fit.f_hat + target.delta_f,
            Scaling::Likelihood => fit.f_hat + T::lit(2.0) * target.delta_f / n_minus_1,
            Scaling::Relative => fit.f_hat * (T::one() + target.delta_f),
        },
        TargetMode::EpsilonTilde => {
            let scale = RmseaScale::Sample { n };
            let eps_hat = rmsea_from_f(fit.f_hat, df, scale);
            f_from_rmsea(eps_hat + target.epsilon_tilde, df, scale)
        }
        TargetMode::ConfidenceSet => fit.f_hat + chisq_quantile(n_focal, target.confidence) / n_minus_1,
    }
}

/// Indices of the focal parameters (distinct, at least one).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Focal(Vec<usize>);

impl Focal {
    pub fn new(indices: Vec<usize>, q: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("no focal parameters".into()));
        }
        for (k, &i) in indices.iter().enumerate() {
            if i >= q {
                return Err(Error::InvalidInput(format!("focal index {i} out of range (q = {q})")));
            }
            if indices[..k].contains(&i) {
                return Err(Error::InvalidInput(format!("focal index {i} repeated")));
            }
        }
        Ok(Focal(indices))
    }

    /// Every parameter: the full-dimensional ellipsoid.
    pub fn all(q: usize) -> Self {
        Focal((0..q).collect())
    }

    /// Looks up parameters by name, falling back to numeric indices.
    pub fn from_names<T: Real>(model: &ModelSpec<T>, names: &[&str]) -> Result<Self> {
        let indices = names
            .iter()
            .map(|n| {
                model
                    .param_index(n)
                    .or_else(|| n.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidInput(format!("unknown parameter '{n}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Focal::new(indices, model.q())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn block<T: Real>(&self, h: &DMatrix<T>) -> DMatrix<T> {
        DMatrix::from_fn(self.len(), self.len(), |i, j| h[(self.0[i], self.0[j])])
    }
}

/// Major and minor axis widths of a contour in the focal plane.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisWidths<T: Real> {
    pub major: T,
    pub minor: T,
    pub major_direction: DVector<T>,
    pub minor_direction: DVector<T>,
    pub focal: Vec<usize>,
    /// Directions whose ray left the admissible region.
    pub skipped: usize,
    /// More than 5% of directions were skipped.
    pub partial: bool,
}

/// Scalar objective over the full parameter vector.
pub trait Objective<T: Real>: Sync {
    fn value(&self, theta: &ParamVector<T>) -> Result<T>;
}

impl<T: Real> Objective<T> for Discrepancy<'_, T> {
    fn value(&self, theta: &ParamVector<T>) -> Result<T> {
        Discrepancy::value(self, theta)
    }
}

/// `F(θ) = f_min + ½ (θ - c)ᵀ H (θ - c)`.
#[derive(Debug, Clone)]
pub struct QuadraticSurrogate<T: Real> {
    pub center: ParamVector<T>,
    pub f_min: T,
    pub hessian: DMatrix<T>,
}

impl<T: Real> Objective<T> for QuadraticSurrogate<T> {
    fn value(&self, theta: &ParamVector<T>) -> Result<T> {
        let d = theta - &self.center;
        Ok(self.f_min + (d.transpose() * &self.hessian * &d)[(0, 0)] * T::lit(0.5))
    }
}

/// One point on a contour ray.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourPoint<T: Real> {
    /// Angle of the direction in the focal plane (radians; 0 for rays not
    /// parameterized by angle).
    pub angle: T,
    pub r: T,
    pub theta: ParamVector<T>,
    pub f_value: T,
}

/// Contour tracing around a minimizer of an objective.
pub struct ContourSolver<'a, T: Real, O: Objective<T>> {
    objective: &'a O,
    center: ParamVector<T>,
    f_center: T,
    hessian: DMatrix<T>,
    focal: Focal,
}

fn is_domain_error(e: &Error) -> bool {
    matches!(e, Error::NotPositiveDefinite(_) | Error::SingularStructure)
}

impl<'a, T: Real, O: Objective<T>> ContourSolver<'a, T, O> {
    /// `hessian` is the full `q × q` Hessian at `center`; it only seeds the
    /// radial searches.
    pub fn new(objective: &'a O, center: ParamVector<T>, f_center: T, hessian: DMatrix<T>, focal: Focal) -> Self {
        ContourSolver { objective, center, f_center, hessian, focal }
    }

    pub fn focal(&self) -> &Focal {
        &self.focal
    }

    fn embed(&self, direction: &DVector<T>) -> DVector<T> {
        let mut full = DVector::zeros(self.center.len());
        for (k, &i) in self.focal.indices().iter().enumerate() {
            full[i] = direction[k];
        }
        full
    }

    /// Point `θ̂ + r u` on the contour `F = t_target` along the focal-space
    /// unit direction `u`.
    pub fn radial_point(&self, direction: &DVector<T>, t_target: T) -> Result<ContourPoint<T>> {
        if direction.len() != self.focal.len() {
            return Err(Error::InvalidInput("direction dimension differs from focal count".into()));
        }
        let u = self.embed(&(direction / direction.norm()));
        let level = t_target - self.f_center;
        if level <= T::zero() {
            return Ok(ContourPoint {
                angle: T::zero(),
                r: T::zero(),
                theta: self.center.clone(),
                f_value: self.f_center,
            });
        }

        let along = |r: T| -> Result<T> { Ok(self.objective.value(&(&self.center + &u * r))? - t_target) };
        let curvature = (u.transpose() * &self.hessian * &u)[(0, 0)];
        let scale = self.center.iter().fold(T::one(), |acc, v| acc.max(v.abs()));
        let r0 = if curvature > T::zero() { (T::lit(2.0) * level / curvature).sqrt() } else { scale * T::lit(0.1) };

        // Bracket the first crossing beyond r0 / 2.
        let mut lo = T::zero();
        let mut g_lo = -level;
        let mut r = r0 * T::lit(0.5);
        let mut bad: Option<T> = None;
        let limit = scale * T::lit(1e6);
        let (hi, g_hi) = loop {
            match along(r) {
                Ok(g) if g >= T::zero() => break (r, g),
                Ok(g) => {
                    lo = r;
                    g_lo = g;
                    r = match bad {
                        Some(b) => (r + b) * T::lit(0.5),
                        None => r * T::lit(2.0),
                    };
                }
                Err(e) if is_domain_error(&e) => {
                    bad = Some(r);
                    r = (lo + r) * T::lit(0.5);
                }
                Err(e) => return Err(e),
            }
            let collapsed = bad.is_some_and(|b| b - lo <= T::machine_eps() * T::lit(64.0) * b);
            if collapsed || r > limit {
                return Err(Error::ContourEscapesDomain);
            }
        };

        let (r, g) = illinois(
            |r| along(r).map_err(|e| if is_domain_error(&e) { Error::ContourEscapesDomain } else { e }),
            lo,
            g_lo,
            hi,
            g_hi,
            T::lit(CONTOUR_TOL),
        )?;
        Ok(ContourPoint { angle: T::zero(), r, theta: &self.center + &u * r, f_value: g + t_target })
    }

    fn planar(&self, angle: T) -> DVector<T> {
        DVector::from_vec(vec![angle.cos(), angle.sin()])
    }

    fn require_plane(&self) -> Result<()> {
        if self.focal.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "direction sweeps need exactly 2 focal parameters, got {}",
                self.focal.len()
            )));
        }
        Ok(())
    }

    /// Radial point at angle `angle` in the focal plane.
    pub fn point_at(&self, angle: T, t_target: T) -> Result<ContourPoint<T>> {
        self.require_plane()?;
        let mut pt = self.radial_point(&self.planar(angle), t_target)?;
        pt.angle = angle;
        Ok(pt)
    }

    /// Contour points at `n_directions` equally spaced angles; `None` where
    /// the ray escapes the admissible region.
    pub fn sweep(&self, t_target: T, n_directions: usize) -> Result<Vec<Option<ContourPoint<T>>>> {
        self.require_plane()?;
        let step = T::two_pi() / T::from_count(n_directions.max(1));
        (0..n_directions)
            .into_par_iter()
            .map(|k| match self.point_at(step * T::from_count(k), t_target) {
                Ok(p) => Ok(Some(p)),
                Err(Error::ContourEscapesDomain) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    }

    fn chord(&self, angle: T, t_target: T) -> Option<T> {
        let a = self.point_at(angle, t_target).ok()?;
        let b = self.point_at(angle + T::pi(), t_target).ok()?;
        Some(a.r + b.r)
    }

    /// Longest and shortest chords through `θ̂`, from a direction sweep
    /// refined by golden-section search in the angle.
    pub fn widths_exact(&self, t_target: T, n_directions: usize) -> Result<AxisWidths<T>> {
        self.require_plane()?;
        if n_directions < 4 {
            return Err(Error::InvalidInput("need at least 4 directions".into()));
        }
        let points = self.sweep(t_target, n_directions)?;
        let skipped = points.iter().filter(|p| p.is_none()).count();
        let step = T::two_pi() / T::from_count(n_directions);

        let opposite = |k: usize| -> Option<T> {
            if n_directions.is_multiple_of(2) {
                points[(k + n_directions / 2) % n_directions].as_ref().map(|p| p.r)
            } else {
                self.point_at(step * T::from_count(k) + T::pi(), t_target).ok().map(|p| p.r)
            }
        };
        let chords: Vec<(usize, T)> =
            (0..n_directions).filter_map(|k| Some((k, points[k].as_ref()?.r + opposite(k)?))).collect();
        let (k_major, sweep_major) =
            chords.iter().copied().max_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).ok_or(Error::ContourEscapesDomain)?;
        let (k_minor, sweep_minor) =
            chords.iter().copied().min_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).ok_or(Error::ContourEscapesDomain)?;

        let tol = T::lit(1e-6);
        let refine = |k: usize, sign: T| -> (T, T) {
            let center = step * T::from_count(k);
            let (phi, val) = golden_min(
                |phi| self.chord(phi, t_target).map_or(T::max_value().unwrap(), |c| sign * c),
                center - step,
                center + step,
                tol,
            );
            (phi, sign * val)
        };
        let (phi_major, major) = {
            let (phi, c) = refine(k_major, -T::one());
            if c >= sweep_major {
                (phi, c)
            } else {
                (step * T::from_count(k_major), sweep_major)
            }
        };
        let (phi_minor, minor) = {
            let (phi, c) = refine(k_minor, T::one());
            if c <= sweep_minor {
                (phi, c)
            } else {
                (step * T::from_count(k_minor), sweep_minor)
            }
        };

        Ok(AxisWidths {
            major,
            minor,
            major_direction: self.planar(phi_major),
            minor_direction: self.planar(phi_minor),
            focal: self.focal.indices().to_vec(),
            skipped,
            partial: T::from_count(skipped) > T::lit(PARTIAL_SHARE) * T::from_count(n_directions),
        })
    }
}

/// Widths of the quadratic (Hessian) approximation to the contour
/// `F = f_hat + c`: axis `i` has full width `2 sqrt(2c / λᵢ)` for the
/// eigenvalues `λᵢ` of the focal Hessian block.
pub fn widths_from_hessian<T: Real>(
    hessian: &DMatrix<T>,
    f_hat: T,
    t_target: T,
    focal: &Focal,
) -> Result<AxisWidths<T>> {
    let block = focal.block(hessian);
    let eig = SymmetricEigen::new(block);
    let (mut i_min, mut i_max) = (0, 0);
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[i_min] {
            i_min = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[i_max] {
            i_max = i;
        }
    }
    let lambda_min = eig.eigenvalues[i_min];
    let lambda_max = eig.eigenvalues[i_max];
    if lambda_min <= T::zero() {
        return Err(Error::NotPositiveDefinite(Which::Hessian));
    }
    let level = (t_target - f_hat).max(T::zero());
    let two = T::lit(2.0);
    let width = |lambda: T| two * (two * level / lambda).sqrt();
    Ok(AxisWidths {
        major: width(lambda_min),
        minor: width(lambda_max),
        major_direction: eig.eigenvectors.column(i_min).into_owned(),
        minor_direction: eig.eigenvectors.column(i_max).into_owned(),
        focal: focal.indices().to_vec(),
        skipped: 0,
        partial: false,
    })
}

/// Quadratic-approximation widths from the Hessian stored in a fit.
pub fn axis_widths_quadratic<T: Real>(fit: &FitResult<T>, t_target: T, focal: &Focal) -> Result<AxisWidths<T>> {
    widths_from_hessian(&fit.hessian_at_opt, fit.f_hat, t_target, focal)
}

fn solver<'a, T: Real>(
    disc: &'a Discrepancy<'a, T>,
    fit: &FitResult<T>,
    focal: &Focal,
) -> ContourSolver<'a, T, Discrepancy<'a, T>> {
    ContourSolver::new(disc, fit.theta_hat.clone(), fit.f_hat, fit.hessian_at_opt.clone(), focal.clone())
}

/// Contour point along `direction` (focal coordinates) from `θ̂`.
pub fn radial_contour_point<T: Real>(
    model: &ModelSpec<T>,
    fit: &FitResult<T>,
    direction: &DVector<T>,
    t_target: T,
    focal: &Focal,
) -> Result<ContourPoint<T>> {
    let disc = Discrepancy::new(model, &fit.s)?;
    solver(&disc, fit, focal).radial_point(direction, t_target)
}

/// Exact contour widths from a sweep of `n_directions` rays.
pub fn axis_widths_exact<T: Real>(
    model: &ModelSpec<T>,
    fit: &FitResult<T>,
    t_target: T,
    focal: &Focal,
    n_directions: usize,
) -> Result<AxisWidths<T>> {
    let disc = Discrepancy::new(model, &fit.s)?;
    solver(&disc, fit, focal).widths_exact(t_target, n_directions)
}

/// The fungible parameter estimates: contour points of `target` from a
/// direction sweep, with escaped directions dropped.
pub fn fpe_sample<T: Real>(
    model: &ModelSpec<T>,
    fit: &FitResult<T>,
    target: &ContourTarget<T>,
    focal: &Focal,
    n_directions: usize,
) -> Result<Vec<ContourPoint<T>>> {
    let disc = Discrepancy::new(model, &fit.s)?;
    let t = f_target(target, fit, model.df(), focal.len());
    let points = solver(&disc, fit, focal).sweep(t, n_directions)?;
    Ok(points.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surrogate(h: [f64; 4]) -> QuadraticSurrogate<f64> {
        QuadraticSurrogate {
            center: DVector::from_vec(vec![0.3, -0.2]),
            f_min: 0.1,
            hessian: DMatrix::from_row_slice(2, 2, &h),
        }
    }

    fn fake_fit(f_hat: f64, n: usize) -> FitResult<f64> {
        FitResult {
            theta_hat: DVector::zeros(2),
            f_hat,
            grad_norm: 0.0,
            hessian_at_opt: DMatrix::identity(2, 2),
            iterations: 0,
            converged: true,
            improper: false,
            n,
            s: DMatrix::identity(2, 2),
            f_trace: vec![],
        }
    }

    #[test]
    fn radial_points_on_analytic_ellipse() {
        let obj = surrogate([4.0, 0.0, 0.0, 1.0]);
        let solver = ContourSolver::new(&obj, obj.center.clone(), 0.1, obj.hessian.clone(), Focal::all(2));
        let up = solver.radial_point(&DVector::from_vec(vec![0.0, 1.0]), 0.12).unwrap();
        assert!((up.r - 0.2).abs() < 1e-9);
        let right = solver.radial_point(&DVector::from_vec(vec![1.0, 0.0]), 0.12).unwrap();
        assert!((right.r - 0.1).abs() < 1e-9);
    }

    #[test]
    fn quadratic_widths_closed_form() {
        let h = DMatrix::<f64>::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let w = widths_from_hessian(&h, 0.0, 0.02, &Focal::all(2)).unwrap();
        assert!((w.major - 0.4).abs() < 1e-12);
        assert!((w.minor - 0.2).abs() < 1e-12);
        assert!(w.major_direction.dot(&w.minor_direction).abs() < 1e-8);
        assert!((w.major_direction.norm() - 1.0).abs() < 1e-12);

        let iso = widths_from_hessian(&DMatrix::identity(2, 2), 1.0, 1.03, &Focal::all(2)).unwrap();
        let expect = 2.0 * (2.0f64 * 0.03).sqrt();
        assert!((iso.major - expect).abs() < 1e-12 && (iso.minor - expect).abs() < 1e-12);
    }

    #[test]
    fn flat_direction_is_rejected() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let err = widths_from_hessian(&h, 0.0, 0.1, &Focal::all(2)).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite(Which::Hessian)));
    }

    #[test]
    fn exact_matches_quadratic_on_rotated_ellipse() {
        let obj = surrogate([2.5, 1.2, 1.2, 1.5]);
        let solver = ContourSolver::new(&obj, obj.center.clone(), 0.1, obj.hessian.clone(), Focal::all(2));
        let exact = solver.widths_exact(0.13, 360).unwrap();
        let quad = widths_from_hessian(&obj.hessian, 0.1, 0.13, &Focal::all(2)).unwrap();
        assert!((exact.major - quad.major).abs() < 1e-6);
        assert!((exact.minor - quad.minor).abs() < 1e-6);
        assert_eq!(exact.skipped, 0);
        // the refined major direction is the quadratic one up to sign
        assert!(exact.major_direction.dot(&quad.major_direction).abs() > 1.0 - 1e-6);
    }

    #[test]
    fn odd_direction_counts_work() {
        let obj = surrogate([4.0, 0.0, 0.0, 1.0]);
        let solver = ContourSolver::new(&obj, obj.center.clone(), 0.1, obj.hessian.clone(), Focal::all(2));
        let w = solver.widths_exact(0.12, 37).unwrap();
        assert!((w.major - 0.4).abs() < 1e-6 && (w.minor - 0.2).abs() < 1e-6);
    }

    #[test]
    fn target_levels() {
        let fit = fake_fit(0.0, 1000);
        let t = f_target(&ContourTarget::confidence_set(0.95), &fit, 9, 2);
        assert!((t - 5.991465 / 999.0).abs() < 1e-9);
        assert!((t - 5.9975e-3).abs() < 1e-7);

        let fit = fake_fit(0.3, 200);
        let t = f_target(&ContourTarget::delta_f(0.0, Scaling::Likelihood), &fit, 9, 2);
        assert_eq!(t, 0.3);
        let t = f_target(&ContourTarget::delta_f(0.05, Scaling::Raw), &fit, 9, 2);
        assert!((t - 0.35).abs() < 1e-15);
        let t = f_target(&ContourTarget::delta_f(0.05, Scaling::Likelihood), &fit, 9, 2);
        assert!((t - (0.3 + 0.1 / 199.0)).abs() < 1e-15);
        let t = f_target(&ContourTarget::delta_f(0.05, Scaling::Relative), &fit, 9, 2);
        assert!((t - 0.315).abs() < 1e-15);
        assert_eq!(ContourTarget::<f64>::default_for(TargetMode::DeltaF).scaling, Scaling::Relative);

        // F̂ sitting at a sample RMSEA of .03
        let f_hat = 9.0 * (0.03f64 * 0.03 + 1.0 / 199.0);
        let fit = fake_fit(f_hat, 200);
        let t = f_target(&ContourTarget::epsilon_tilde(0.005), &fit, 9, 2);
        assert!((t - 9.0 * (0.035f64 * 0.035 + 1.0 / 199.0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_level_returns_center() {
        let obj = surrogate([4.0, 0.0, 0.0, 1.0]);
        let solver = ContourSolver::new(&obj, obj.center.clone(), 0.1, obj.hessian.clone(), Focal::all(2));
        let pts = solver.sweep(0.1, 12).unwrap();
        assert!(pts.iter().all(|p| p.as_ref().unwrap().theta == obj.center));
    }

    #[test]
    fn focal_validation() {
        assert!(Focal::new(vec![0, 0], 3).is_err());
        assert!(Focal::new(vec![3], 3).is_err());
        assert!(Focal::new(vec![], 3).is_err());
        assert_eq!(Focal::new(vec![2, 0], 3).unwrap().indices(), &[2, 0]);
    }
}
