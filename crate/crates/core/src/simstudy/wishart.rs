//! Wishart sample covariances via the Bartlett decomposition.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result, Which};
use crate::model::symmetrize;

fn bartlett_draw<R: Rng + ?Sized>(chol_l: &DMatrix<f64>, n: usize, rng: &mut R) -> DMatrix<f64> {
    let p = chol_l.nrows();
    let mut a = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        let chi2 = ChiSquared::new((n - 1 - i) as f64).expect("positive degrees of freedom");
        a[(i, i)] = chi2.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let la = chol_l * a;
    symmetrize(&(&la * la.transpose() / (n - 1) as f64))
}

/// Sample covariance of `n` multivariate normal observations with
/// covariance `sigma` (divisor `n - 1`), drawn as `L A Aᵀ Lᵀ / (n - 1)`
/// with `L = chol(sigma)` and `A` lower triangular: `A[i][i]² ~ χ²(n-1-i)`,
/// standard normal below the diagonal.
///
/// A draw that fails the Cholesky test is redrawn once.
pub fn wishart_sample<R: Rng + ?Sized>(sigma: &DMatrix<f64>, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let p = sigma.nrows();
    if n <= p {
        return Err(Error::InvalidInput(format!("Wishart sampling needs n > p (n = {n}, p = {p})")));
    }
    let chol_l = sigma.clone().cholesky().ok_or(Error::NotPositiveDefinite(Which::Sample))?.unpack();
    for _ in 0..2 {
        let s = bartlett_draw(&chol_l, n, rng);
        if s.clone().cholesky().is_some() {
            return Ok(s);
        }
    }
    Err(Error::DegenerateSample)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit mix of the given words.
pub fn stream_key(words: &[u64]) -> u64 {
    words.iter().fold(0x243F_6A88_85A3_08D3u64, |acc, &w| splitmix(acc ^ splitmix(w)))
}

/// Independent generator for one replication: a ChaCha8 keyed by `seed`
/// on the stream selected by the cell coordinates and replication index.
pub fn replication_rng(seed: u64, condition: u64, n: usize, epsilon: f64, replication: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_key(&[condition, n as u64, epsilon.to_bits(), replication as u64]));
    rng
}
