//! Seeded samplers for states, unitaries, Hermitian operators and channels.
//!
//! Every sampler takes the RNG by `&mut`; callers own their generator.

use nalgebra::QR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::KrausChannel;
use crate::linalg::{c, hermitian_eigen, CMatrix, DEFAULT_TOL};

/// Seed used when neither `--seed` nor `QDECONV_SEED` is given.
pub const DEFAULT_SEED: u64 = 20_240_917;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` derived from `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> SeededRng {
    let mut g = ChaCha8Rng::seed_from_u64(seed);
    g.set_stream(stream);
    g
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// `G G^dagger / Tr(G G^dagger)` for Ginibre `G`.
pub fn random_density_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, d, rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    // symmetrize away rounding so the result is exactly Hermitian
    let rho = rho.unscale(tr);
    (&rho + rho.adjoint()).scale(0.5)
}

/// Haar-random unitary from the phase-corrected QR of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let qr = QR::new(ginibre(d, d, rng));
    let (mut q, rr) = qr.unpack();
    for j in 0..d {
        let diag = rr[(j, j)];
        let n = diag.norm();
        if n > 0.0 {
            let phase = diag / n;
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// CPTP channel with `n_kraus` operators `G_k S^{-1/2}`, `S = sum_k G_k^dagger G_k`.
pub fn random_channel<R: Rng + ?Sized>(d: usize, n_kraus: usize, rng: &mut R) -> KrausChannel {
    let gs: Vec<CMatrix> = (0..n_kraus).map(|_| ginibre(d, d, rng)).collect();
    let s = gs.iter().fold(CMatrix::zeros(d, d), |acc, g| acc + g.adjoint() * g);
    let (vals, vecs) = hermitian_eigen(&s);
    let inv_sqrt = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        d,
        vals.iter().map(|&v| c(1.0 / v.sqrt(), 0.0)),
    ));
    let s_inv_sqrt = &vecs * inv_sqrt * vecs.adjoint();
    let kraus = gs.iter().map(|g| g * &s_inv_sqrt).collect();
    KrausChannel::new(kraus, DEFAULT_TOL).expect("normalized Kraus set is trace preserving")
}

/// Probability vector drawn uniformly from the simplex.
pub fn random_probabilities<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n)
        .map(|_| -(rng.random::<f64>().max(f64::MIN_POSITIVE)).ln())
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}
