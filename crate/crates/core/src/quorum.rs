//! Deconvolution as classical post-processing over an informationally complete
//! quorum of Hermitian observables.
//!
//! An observable `A = sum_m a_m Q_m` is recovered from noisy quorum expectations
//! as `sum_{m,n} chi_{n,m} a_m <Q_n>`, where `chi` expands the modified quorum
//! elements back into the quorum.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::apply_channel;
use crate::deconvolution::{modified_observable, GuessPair};
use crate::error::{Error, Result};
use crate::linalg::{
    ensure_dim, ensure_square, hermitian_eigen, hermitian_residual, hs_inner, kron_all, r, trace_product, CMatrix, I,
};
use crate::models::pauli;
use crate::random::{rng, rng_stream};

/// Born probabilities this far below zero are treated as rounding and clipped.
pub const PROBABILITY_CLIP: f64 = 1e-8;

/// Orthogonal Hermitian operator basis with recorded norms `c_m = <Q_m, Q_m>`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuorumBasis {
    dim: usize,
    elements: Vec<CMatrix>,
    norms: Vec<f64>,
}

impl QuorumBasis {
    /// Validates a user-supplied quorum: `d^2` Hermitian, mutually orthogonal elements.
    pub fn new(elements: Vec<CMatrix>, tol: f64) -> Result<Self> {
        let first = elements.first().ok_or(Error::Empty("quorum"))?;
        let dim = ensure_square(first)?;
        if elements.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: elements.len(),
            });
        }
        for q in &elements {
            ensure_dim(q, dim)?;
            let residual = hermitian_residual(q);
            if residual > tol {
                return Err(Error::NotHermitian { residual });
            }
        }
        let mut norms = Vec::with_capacity(elements.len());
        for (m, qm) in elements.iter().enumerate() {
            for qn in &elements[..m] {
                let overlap = hs_inner(qn, qm)?.norm();
                if overlap > tol {
                    return Err(Error::InvalidArgument(format!(
                        "quorum elements are not orthogonal (overlap {overlap:.3e})"
                    )));
                }
            }
            let c = hs_inner(qm, qm)?.re;
            if c <= tol {
                return Err(Error::InvalidArgument("quorum element has zero norm".into()));
            }
            norms.push(c);
        }
        Ok(Self { dim, elements, norms })
    }

    /// Normalized tensor products of Paulis on `n` qubits, ordered by base-4 index.
    pub fn pauli_products(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one qubit".into()));
        }
        let scale = 1.0 / (2f64.powi(n as i32)).sqrt();
        let paulis: Vec<CMatrix> = (0..4).map(pauli).collect();
        let elements = (0..4usize.pow(n as u32))
            .map(|mut idx| {
                let mut digits = vec![0; n];
                for k in (0..n).rev() {
                    digits[k] = idx % 4;
                    idx /= 4;
                }
                let factors: Vec<&CMatrix> = digits.iter().map(|&k| &paulis[k]).collect();
                kron_all(&factors).scale(scale)
            })
            .collect();
        Self::new(elements, 1e-12)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Generalized Gell-Mann basis, orthonormal under the Hilbert-Schmidt product:
/// `I/sqrt(d)`, then symmetric pairs, antisymmetric pairs and the diagonal ladder.
pub fn quorum_basis(d: usize) -> Result<QuorumBasis> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "quorum dimension must be >= 2, got {d}"
        )));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut elements = vec![CMatrix::identity(d, d).unscale((d as f64).sqrt())];
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|j| (j + 1..d).map(move |k| (j, k))).collect();
    for &(j, k) in &pairs {
        let mut q = CMatrix::zeros(d, d);
        q[(j, k)] = r(s);
        q[(k, j)] = r(s);
        elements.push(q);
    }
    for &(j, k) in &pairs {
        let mut q = CMatrix::zeros(d, d);
        q[(j, k)] = -I * s;
        q[(k, j)] = I * s;
        elements.push(q);
    }
    for l in 1..d {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut q = CMatrix::zeros(d, d);
        for j in 0..l {
            q[(j, j)] = r(1.0 / norm);
        }
        q[(l, l)] = r(-(l as f64) / norm);
        elements.push(q);
    }
    QuorumBasis::new(elements, 1e-12)
}

/// Coefficients `a_m = <Q_m, A> / c_m`.
pub fn decompose(a: &CMatrix, qb: &QuorumBasis) -> Result<Vec<f64>> {
    ensure_dim(a, qb.dim)?;
    let residual = hermitian_residual(a);
    if residual > 1e-9 * a.norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    qb.elements
        .iter()
        .zip(&qb.norms)
        .map(|(q, c)| Ok(hs_inner(q, a)?.re / c))
        .collect()
}

/// `sum_m a_m Q_m`.
pub fn reconstruct(coeffs: &[f64], qb: &QuorumBasis) -> Result<CMatrix> {
    if coeffs.len() != qb.len() {
        return Err(Error::DimensionMismatch {
            expected: qb.len(),
            found: coeffs.len(),
        });
    }
    let mut out = CMatrix::zeros(qb.dim, qb.dim);
    for (a, q) in coeffs.iter().zip(&qb.elements) {
        out += q.scale(*a);
    }
    Ok(out)
}

/// Real matrix with column `m` holding the quorum coefficients of the modified `Q_m`.
pub fn chi_matrix(gp: &GuessPair, qb: &QuorumBasis) -> Result<DMatrix<f64>> {
    if gp.dim() != qb.dim {
        return Err(Error::DimensionMismatch {
            expected: qb.dim,
            found: gp.dim(),
        });
    }
    let n = qb.len();
    let mut chi = DMatrix::zeros(n, n);
    for (m, q) in qb.elements.iter().enumerate() {
        let col = decompose(&modified_observable(gp, q)?, qb)?;
        for (k, v) in col.into_iter().enumerate() {
            chi[(k, m)] = v;
        }
    }
    Ok(chi)
}

/// Finite-shot estimate of an expectation value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotEstimate {
    pub mean: f64,
    /// Shots per measured observable; 0 marks an exact (infinite-shot) evaluation.
    pub shots: u64,
    pub std_error: f64,
    pub seed: u64,
}

/// Simulates `shots` projective measurements of `q` in its eigenbasis on `rho`.
pub fn sample_expectation(rho: &CMatrix, q: &CMatrix, shots: u64, seed: u64) -> Result<ShotEstimate> {
    let (mean, std_error) = sample_with(rho, q, shots, &mut rng(seed))?;
    Ok(ShotEstimate {
        mean,
        shots,
        std_error,
        seed,
    })
}

fn born_distribution(rho: &CMatrix, q: &CMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = ensure_square(rho)?;
    ensure_dim(q, d)?;
    let (values, vectors) = hermitian_eigen(q);
    let mut probs = Vec::with_capacity(d);
    for j in 0..d {
        let e = vectors.column(j);
        let p = (e.adjoint() * rho * e)[(0, 0)].re;
        if p < -PROBABILITY_CLIP {
            return Err(Error::InvalidState(format!("negative Born probability {p:.3e}")));
        }
        probs.push(p.max(0.0));
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidState("zero trace".into()));
    }
    probs.iter_mut().for_each(|p| *p /= total);
    Ok((values, probs))
}

// Multinomial outcome counts drawn as a chain of conditional binomials.
fn sample_with<R: Rng + ?Sized>(rho: &CMatrix, q: &CMatrix, shots: u64, rng: &mut R) -> Result<(f64, f64)> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let (values, probs) = born_distribution(rho, q)?;
    let mut remaining = shots;
    let mut mass = 1.0;
    let mut counts = vec![0u64; values.len()];
    for (j, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let k = if j + 1 == probs.len() || p >= mass {
            remaining
        } else if p <= 0.0 {
            0
        } else {
            Binomial::new(remaining, (p / mass).min(1.0))
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .sample(rng)
        };
        counts[j] = k;
        remaining -= k;
        mass -= p;
    }
    let n = shots as f64;
    let mean = counts.iter().zip(&values).map(|(&k, v)| k as f64 * v).sum::<f64>() / n;
    let std_error = if shots > 1 {
        let ss: f64 = counts
            .iter()
            .zip(&values)
            .map(|(&k, v)| k as f64 * (v - mean).powi(2))
            .sum();
        (ss / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok((mean, std_error))
}

/// Deconvolved estimate of `<A>` from quorum measurements on `Phi(rho)`.
///
/// Each quorum element gets `shots_per_element` shots from its own RNG stream;
/// `shots_per_element == 0` uses exact expectations instead.
pub fn deconvolved_estimate(
    gp: &GuessPair,
    a: &CMatrix,
    rho: &CMatrix,
    qb: &QuorumBasis,
    shots_per_element: u64,
    seed: u64,
) -> Result<ShotEstimate> {
    let sigma = apply_channel(gp.phi(), rho)?;
    let chi = chi_matrix(gp, qb)?;
    let coeffs = nalgebra::DVector::from_vec(decompose(a, qb)?);
    let weights = &chi * coeffs;

    let per_element: Vec<(f64, f64)> = qb
        .elements
        .par_iter()
        .enumerate()
        .map(|(n, q)| {
            if shots_per_element == 0 {
                born_distribution(&sigma, q)?;
                Ok((trace_product(q, &sigma).re, 0.0))
            } else {
                sample_with(&sigma, q, shots_per_element, &mut rng_stream(seed, n as u64))
            }
        })
        .collect::<Result<_>>()?;

    let mean = per_element.iter().zip(weights.iter()).map(|((e, _), w)| w * e).sum();
    let var: f64 = per_element
        .iter()
        .zip(weights.iter())
        .map(|((_, s), w)| (w * s).powi(2))
        .sum();
    Ok(ShotEstimate {
        mean,
        shots: shots_per_element,
        std_error: var.sqrt(),
        seed,
    })
}
