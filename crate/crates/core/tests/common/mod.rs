#![allow(dead_code)]

use fungible::model::{sigma_of_theta, Cell, Entry, ModelSpec, ParamVector};
use fungible::simstudy::wishart_sample;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Problem {
    pub model: ModelSpec<f64>,
    pub theta: ParamVector<f64>,
    pub s: DMatrix<f64>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random factor model with 1-2 standardized factors, optional cross
/// loadings and acyclic paths among observed variables, a parameter vector
/// with positive unique variances, and a sample covariance drawn around a
/// nearby population.
pub fn random_problem<R: Rng>(rng: &mut R) -> Problem {
    let p = rng.random_range(3..=6);
    let m = if p >= 4 { rng.random_range(1..=2) } else { 1 };
    let cap = p * (p + 1) / 2;
    let mut directed = Vec::new();
    let mut symmetric = Vec::new();
    let mut values = Vec::new();
    let mut names = Vec::new();
    let mut add = |cells: &mut Vec<Cell<f64>>, row, col, value: f64, names: &mut Vec<String>| {
        cells.push(Cell::free(row, col, names.len()));
        names.push(format!("t{}", names.len()));
        values.push(value);
    };

    for i in 0..p {
        let sign = if rng.random_bool(0.2) { -1.0 } else { 1.0 };
        add(&mut directed, i, p + i % m, sign * rng.random_range(0.3..0.9), &mut names);
    }
    for i in 0..p {
        add(&mut symmetric, i, i, rng.random_range(0.3..1.0), &mut names);
    }
    if m == 2 && names.len() < cap {
        add(&mut symmetric, p + 1, p, rng.random_range(-0.4..0.4), &mut names);
    }
    for i in 0..p {
        if names.len() < cap && m == 2 && rng.random_bool(0.2) {
            add(&mut directed, i, p + (i + 1) % m, rng.random_range(-0.3..0.3), &mut names);
        }
    }
    for i in 1..p {
        let j = rng.random_range(0..i);
        if names.len() < cap && rng.random_bool(0.15) && i % m != j % m {
            add(&mut directed, i, j, rng.random_range(-0.3..0.3), &mut names);
        }
    }
    for f in 0..m {
        symmetric.push(Cell::fixed(p + f, p + f, 1.0));
    }

    let model = ModelSpec::new(p, m, directed, symmetric, names, None).expect("random model is valid");
    let theta = DVector::from_vec(values);
    let jitter = DVector::from_fn(theta.len(), |_, _| rng.random_range(-0.05..0.05));
    let sigma = sigma_of_theta(&model, &(&theta + jitter)).expect("population is regular");
    let n = rng.random_range(30..300);
    let s = wishart_sample(&sigma, n, rng).expect("sample covariance is pd");
    Problem { model, theta, s }
}

/// The same model with its parameters renumbered: new index of old
/// parameter `k` is `perm[k]`.
pub fn permute_params(model: &ModelSpec<f64>, perm: &[usize]) -> ModelSpec<f64> {
    let remap = |cells: &[Cell<f64>]| {
        cells
            .iter()
            .map(|c| match c.entry {
                Entry::Free(k) => Cell::free(c.row, c.col, perm[k]),
                Entry::Fixed(v) => Cell::fixed(c.row, c.col, v),
            })
            .collect::<Vec<_>>()
    };
    let mut names = vec![String::new(); model.q()];
    for (k, name) in model.theta_names().iter().enumerate() {
        names[perm[k]] = name.clone();
    }
    ModelSpec::new(model.n_observed(), model.n_latent(), remap(model.directed()), remap(model.symmetric()), names, None)
        .expect("permuted model is valid")
}

pub fn permute_vector(theta: &DVector<f64>, perm: &[usize]) -> DVector<f64> {
    let mut out = theta.clone();
    for (k, &to) in perm.iter().enumerate() {
        out[to] = theta[k];
    }
    out
}

/// Central finite-difference gradient of `f`.
pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, theta: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(theta.len(), |k, _| {
        let mut up = theta.clone();
        let mut down = theta.clone();
        up[k] += h;
        down[k] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    })
}
