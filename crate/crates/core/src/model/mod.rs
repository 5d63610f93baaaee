//! Covariance structure models in RAM form.
//!
//! Variables are ordered observed first, then latent. `A[(i, j)]` is the
//! directed effect of variable `j` on variable `i`; `S` holds variances and
//! covariances of the exogenous parts. The implied observed covariance is
//! `Σ(θ) = F (I - A)⁻¹ S (I - A)⁻ᵀ Fᵀ` with `F` selecting the first `p` rows.

mod builtin;
mod config;

pub use builtin::{
    builtin_conditions, canonical_model, misspecify_along, misspecify_to_epsilon, ConditionLabel, PopulationCondition,
    Variant,
};
pub use config::{ModelFile, PatternEntry, VarRef};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Free parameter vector `θ`, in `ModelSpec::theta_names` order.
pub type ParamVector<T> = DVector<T>;

/// One cell of a pattern matrix: a fixed value or a free-parameter index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entry<T> {
    Fixed(T),
    Free(usize),
}

/// Non-zero cell of a pattern matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell<T> {
    pub row: usize,
    pub col: usize,
    pub entry: Entry<T>,
}

impl<T> Cell<T> {
    pub fn fixed(row: usize, col: usize, value: T) -> Self {
        Cell { row, col, entry: Entry::Fixed(value) }
    }

    pub fn free(row: usize, col: usize, param: usize) -> Self {
        Cell { row, col, entry: Entry::Free(param) }
    }
}

/// RAM path-model specification.
///
/// `symmetric` stores the lower triangle (`row >= col`) only; the upper
/// triangle is its mirror image, so the pattern is symmetric in structure
/// and in parameter assignment by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec<T> {
    n_observed: usize,
    n_latent: usize,
    directed: Vec<Cell<T>>,
    symmetric: Vec<Cell<T>>,
    theta_names: Vec<String>,
    start: Option<ParamVector<T>>,
}

/// Implied moments together with the intermediate matrices the analytic
/// gradient needs.
#[derive(Debug, Clone)]
pub struct Implied<T: Real> {
    /// Observed implied covariance, `p × p`.
    pub sigma: DMatrix<T>,
    /// `(I - A)⁻¹`, `m × m`.
    pub b: DMatrix<T>,
    /// `B S Bᵀ`, `m × m`.
    pub c: DMatrix<T>,
}

impl<T: Real> ModelSpec<T> {
    /// Builds and validates a model.
    ///
    /// Symmetric cells may be given in either triangle; they are folded onto
    /// the lower triangle, and conflicting assignments to mirrored cells are
    /// rejected.
    pub fn new(
        n_observed: usize,
        n_latent: usize,
        directed: Vec<Cell<T>>,
        symmetric: Vec<Cell<T>>,
        theta_names: Vec<String>,
        start: Option<ParamVector<T>>,
    ) -> Result<Self> {
        let m = n_observed + n_latent;
        let q = theta_names.len();
        if n_observed == 0 {
            return Err(Error::InvalidModel("model has no observed variables".into()));
        }

        let mut seen_directed = std::collections::HashSet::new();
        for c in &directed {
            if c.row >= m || c.col >= m {
                return Err(Error::InvalidModel(format!("directed cell ({}, {}) outside {m}x{m}", c.row, c.col)));
            }
            if !seen_directed.insert((c.row, c.col)) {
                return Err(Error::InvalidModel(format!("directed cell ({}, {}) specified twice", c.row, c.col)));
            }
        }

        let mut folded: Vec<Cell<T>> = Vec::with_capacity(symmetric.len());
        for c in symmetric {
            if c.row >= m || c.col >= m {
                return Err(Error::InvalidModel(format!("symmetric cell ({}, {}) outside {m}x{m}", c.row, c.col)));
            }
            let (row, col) = if c.row >= c.col { (c.row, c.col) } else { (c.col, c.row) };
            let cell = Cell { row, col, entry: c.entry };
            match folded.iter().find(|d| d.row == row && d.col == col) {
                Some(existing) if existing.entry != cell.entry => {
                    return Err(Error::InvalidModel(format!(
                        "symmetric cells ({row}, {col}) and ({col}, {row}) disagree"
                    )));
                }
                Some(_) => {}
                None => folded.push(cell),
            }
        }

        let mut used = vec![false; q];
        for c in directed.iter().chain(folded.iter()) {
            if let Entry::Free(k) = c.entry {
                if k >= q {
                    return Err(Error::InvalidModel(format!("parameter index {k} out of range (q = {q})")));
                }
                used[k] = true;
            }
        }
        if let Some(k) = used.iter().position(|u| !u) {
            return Err(Error::InvalidModel(format!("parameter '{}' does not appear in any matrix", theta_names[k])));
        }
        let moments = n_observed * (n_observed + 1) / 2;
        if q > moments {
            return Err(Error::InvalidModel(format!("{q} free parameters exceed {moments} distinct moments")));
        }
        if let Some(s) = &start {
            if s.len() != q || s.iter().any(|v| !v.is_finite_val()) {
                return Err(Error::InvalidModel("start vector has wrong length or non-finite entries".into()));
            }
        }

        let model = ModelSpec { n_observed, n_latent, directed, symmetric: folded, theta_names, start };
        let probe = model.start_values(None);
        model.inverse_structure(&probe)?;
        Ok(model)
    }

    pub fn n_observed(&self) -> usize {
        self.n_observed
    }

    pub fn n_latent(&self) -> usize {
        self.n_latent
    }

    /// Total number of variables `m`.
    pub fn n_vars(&self) -> usize {
        self.n_observed + self.n_latent
    }

    /// Number of free parameters `q`.
    pub fn q(&self) -> usize {
        self.theta_names.len()
    }

    /// Model degrees of freedom `p(p+1)/2 - q`.
    pub fn df(&self) -> usize {
        self.n_observed * (self.n_observed + 1) / 2 - self.q()
    }

    pub fn theta_names(&self) -> &[String] {
        &self.theta_names
    }

    pub fn directed(&self) -> &[Cell<T>] {
        &self.directed
    }

    /// Lower-triangle cells of the symmetric pattern.
    pub fn symmetric(&self) -> &[Cell<T>] {
        &self.symmetric
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.theta_names.iter().position(|n| n == name)
    }

    /// Selection matrix `F` (`p × m`).
    pub fn filter(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.n_observed, self.n_vars(), |i, j| if i == j { T::one() } else { T::zero() })
    }

    /// Replaces the stored start vector.
    pub fn with_start(mut self, start: ParamVector<T>) -> Result<Self> {
        if start.len() != self.q() {
            return Err(Error::InvalidModel("start vector has wrong length".into()));
        }
        self.start = Some(start);
        Ok(self)
    }

    /// Start vector: the stored one if present, otherwise free variances at
    /// half the observed diagonal (0.5 when no data or the variance is
    /// latent), free directed effects at 0.1 and free covariances at 0.
    pub fn start_values(&self, s: Option<&DMatrix<T>>) -> ParamVector<T> {
        if let Some(start) = &self.start {
            return start.clone();
        }
        let half = T::lit(0.5);
        let mut theta = DVector::from_element(self.q(), T::zero());
        let mut assigned = vec![false; self.q()];
        for c in &self.symmetric {
            if let Entry::Free(k) = c.entry {
                if c.row == c.col && !assigned[k] {
                    theta[k] = match s {
                        Some(s) if c.row < self.n_observed => s[(c.row, c.row)] * half,
                        _ => half,
                    };
                    assigned[k] = true;
                }
            }
        }
        for c in &self.directed {
            if let Entry::Free(k) = c.entry {
                if !assigned[k] {
                    theta[k] = T::lit(0.1);
                    assigned[k] = true;
                }
            }
        }
        theta
    }

    fn value(entry: &Entry<T>, theta: &ParamVector<T>) -> T {
        match *entry {
            Entry::Fixed(v) => v,
            Entry::Free(k) => theta[k],
        }
    }

    /// Directed-effect matrix `A(θ)`.
    pub fn a_matrix(&self, theta: &ParamVector<T>) -> DMatrix<T> {
        let m = self.n_vars();
        let mut a = DMatrix::zeros(m, m);
        for c in &self.directed {
            a[(c.row, c.col)] = Self::value(&c.entry, theta);
        }
        a
    }

    /// Symmetric matrix `S(θ)`.
    pub fn s_matrix(&self, theta: &ParamVector<T>) -> DMatrix<T> {
        let m = self.n_vars();
        let mut s = DMatrix::zeros(m, m);
        for c in &self.symmetric {
            let v = Self::value(&c.entry, theta);
            s[(c.row, c.col)] = v;
            s[(c.col, c.row)] = v;
        }
        s
    }

    /// `(I - A(θ))⁻¹`, or `SingularStructure` when the LU factorization has a
    /// pivot at rounding level.
    pub fn inverse_structure(&self, theta: &ParamVector<T>) -> Result<DMatrix<T>> {
        let m = self.n_vars();
        let ima = DMatrix::<T>::identity(m, m) - self.a_matrix(theta);
        let scale = ima.amax().max(T::one());
        let lu = ima.lu();
        let u = lu.u();
        let tiny = T::machine_eps() * T::from_count(m) * scale * T::lit(16.0);
        if (0..m).any(|i| u[(i, i)].abs() <= tiny) {
            return Err(Error::SingularStructure);
        }
        lu.try_inverse().ok_or(Error::SingularStructure)
    }

    /// Implied moments and intermediates at `θ`.
    pub fn implied(&self, theta: &ParamVector<T>) -> Result<Implied<T>> {
        if theta.len() != self.q() {
            return Err(Error::InvalidInput(format!(
                "parameter vector has length {}, model has q = {}",
                theta.len(),
                self.q()
            )));
        }
        let b = self.inverse_structure(theta)?;
        let c = &b * self.s_matrix(theta) * b.transpose();
        let c = symmetrize(&c);
        let p = self.n_observed;
        let sigma = c.view((0, 0), (p, p)).into_owned();
        Ok(Implied { sigma, b, c })
    }
}

/// Model-implied observed covariance `Σ(θ)`, exactly symmetric.
pub fn sigma_of_theta<T: Real>(model: &ModelSpec<T>, theta: &ParamVector<T>) -> Result<DMatrix<T>> {
    model.implied(theta).map(|imp| imp.sigma)
}

/// Symmetrizes an input covariance after checking that it is square and
/// symmetric within `tol` (absolute, elementwise).
pub fn symmetrize_checked<T: Real>(m: &DMatrix<T>, tol: T) -> Result<DMatrix<T>> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidInput(format!("covariance is {} x {}, not square", m.nrows(), m.ncols())));
    }
    for i in 0..m.nrows() {
        for j in 0..i {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > tol || !gap.is_finite_val() {
                return Err(Error::InvalidInput(format!("covariance is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(symmetrize(m))
}

/// `(M + Mᵀ) / 2`; the result is bitwise symmetric.
pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = T::lit(0.5);
    let n = m.nrows();
    let mut out = m.clone();
    for i in 0..n {
        for j in 0..i {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn one_path(b: f64) -> (ModelSpec<f64>, ParamVector<f64>) {
        // x -> y with coefficient b; Var(x) = 1, residual Var(y) = 0.75
        let model = ModelSpec::new(
            2,
            0,
            vec![Cell::free(1, 0, 0)],
            vec![Cell::free(0, 0, 1), Cell::free(1, 1, 2)],
            vec!["b".into(), "vx".into(), "uy".into()],
            None,
        )
        .unwrap();
        (model, DVector::from_vec(vec![b, 1.0, 0.75]))
    }

    #[test]
    fn identity_model() {
        let model = ModelSpec::new(
            2,
            0,
            vec![],
            vec![Cell::fixed(0, 0, 1.0), Cell::fixed(1, 1, 1.0), Cell::free(1, 0, 0)],
            vec!["c".into()],
            None,
        )
        .unwrap();
        let sigma = sigma_of_theta(&model, &DVector::from_vec(vec![0.0])).unwrap();
        assert_eq!(sigma, DMatrix::identity(2, 2));
    }

    #[test]
    fn single_path_expansion() {
        let (model, theta) = one_path(0.5);
        let sigma = sigma_of_theta(&model, &theta).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        assert_abs_diff_eq!(sigma, expected, epsilon = 1e-15);
    }

    #[test]
    fn unit_self_loop_is_singular() {
        let looped =
            ModelSpec::new(1, 0, vec![Cell::free(0, 0, 0)], vec![Cell::fixed(0, 0, 1.0)], vec!["loop".into()], None)
                .unwrap();
        assert!(sigma_of_theta(&looped, &DVector::from_vec(vec![0.5])).is_ok());
        let err = sigma_of_theta(&looped, &DVector::from_vec(vec![1.0])).unwrap_err();
        assert!(matches!(err, Error::SingularStructure));

        let err = ModelSpec::<f64>::new(
            1,
            0,
            vec![Cell::fixed(0, 0, 1.0)],
            vec![Cell::free(0, 0, 0)],
            vec!["u".into()],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SingularStructure));
    }

    #[test]
    fn rejects_unused_parameter_and_negative_df() {
        let err = ModelSpec::<f64>::new(1, 0, vec![], vec![Cell::free(0, 0, 0)], vec!["a".into(), "b".into()], None)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));

        let err = ModelSpec::<f64>::new(
            1,
            0,
            vec![Cell::free(0, 0, 1)],
            vec![Cell::free(0, 0, 0)],
            vec!["a".into(), "b".into()],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn mirrored_cells_must_agree() {
        let err = ModelSpec::<f64>::new(
            2,
            0,
            vec![],
            vec![Cell::free(0, 0, 0), Cell::free(1, 1, 0), Cell::free(0, 1, 0), Cell::fixed(1, 0, 0.2)],
            vec!["v".into()],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn sigma_is_bitwise_symmetric() {
        let (model, _) = one_path(0.0);
        for b in [-0.7, 0.13, 0.9, 2.5] {
            let sigma = sigma_of_theta(&model, &DVector::from_vec(vec![b, 1.3, 0.4])).unwrap();
            assert_eq!(sigma, sigma.transpose());
        }
    }

    #[test]
    fn start_rule() {
        let (model, _) = one_path(0.0);
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 4.0]);
        let start = model.start_values(Some(&s));
        assert_eq!(start.as_slice(), &[0.1, 1.0, 2.0]);
        assert_eq!(model.start_values(None).as_slice(), &[0.1, 0.5, 0.5]);
    }

    #[test]
    fn works_in_single_precision() {
        let model = ModelSpec::<f32>::new(
            2,
            0,
            vec![Cell::free(1, 0, 0)],
            vec![Cell::fixed(0, 0, 1.0), Cell::fixed(1, 1, 0.75)],
            vec!["b".into()],
            None,
        )
        .unwrap();
        let sigma = sigma_of_theta(&model, &DVector::from_vec(vec![0.5f32])).unwrap();
        assert!((sigma[(1, 1)] - 1.0).abs() < 1e-6);
    }
}
