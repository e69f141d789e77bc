//! Random unitary noise `sum_k p_k U_k rho U_k^dagger` with known unitaries and
//! unknown probabilities.
//!
//! Guessing `Phi_g = U_g . U_g^dagger`, an observable is recovered for every
//! distribution `{p_k}` iff `Gamma_i |A>> = |A>>` for all `i`, where
//! `Gamma_i = W_i ⊗ conj(W_i)` and `W_i = U_i^dagger U_g`. Matricized, this is
//! `U_g A U_g^dagger = U_i A U_i^dagger`.

use nalgebra::Schur;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{random_unitary_channel, unitary_channel, ProbVector};
use crate::deconvolution::{hermitian_section_with_tol, verify_family, GuessPair, ObservableFamily};
use crate::error::{Error, Result};
use crate::linalg::{
    ensure_dim, ensure_square, identity, intersect_spans, kron, null_space, orthonormalize, phase_fix,
    unitary_residual, CMatrix, CVector, DEFAULT_KERNEL_TOL, I,
};
use crate::random::{random_probabilities, rng_stream};

/// Default tolerance for treating two eigenvalues of `W` as degenerate.
pub const DEFAULT_GROUPING_TOL: f64 = 1e-8;

/// Known unitary errors and the index of the one used as the guess.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryErrorSet {
    dim: usize,
    unitaries: Vec<CMatrix>,
    guess_index: usize,
}

impl UnitaryErrorSet {
    pub fn new(unitaries: Vec<CMatrix>, guess_index: usize, tol: f64) -> Result<Self> {
        let first = unitaries.first().ok_or(Error::Empty("unitary error set"))?;
        let dim = ensure_square(first)?;
        for u in &unitaries {
            ensure_dim(u, dim)?;
            let residual = unitary_residual(u);
            if residual > tol {
                return Err(Error::NonUnitary { residual });
            }
        }
        if guess_index >= unitaries.len() {
            return Err(Error::IndexOutOfRange {
                index: guess_index,
                len: unitaries.len(),
            });
        }
        Ok(Self {
            dim,
            unitaries,
            guess_index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn guess_index(&self) -> usize {
        self.guess_index
    }

    pub fn guess(&self) -> &CMatrix {
        &self.unitaries[self.guess_index]
    }

    pub fn with_guess(&self, guess_index: usize) -> Result<Self> {
        Self::new(self.unitaries.clone(), guess_index, f64::INFINITY)
    }
}

/// Eigen-decomposition of a unitary with eigenvalues grouped into degeneracy classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigGrouping {
    /// Eigenvalues ordered by phase in `(-pi, pi]`.
    pub eigenvalues: Vec<Complex64>,
    /// Indices into `eigenvalues`, one list per degeneracy class.
    pub groups: Vec<Vec<usize>>,
    #[serde(skip)]
    pub eigenvectors: Vec<CVector>,
}

impl EigGrouping {
    pub fn multiplicities(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }
}

/// `Gamma_i = (U_i^dagger U_g) ⊗ conj(U_i^dagger U_g)`.
pub fn gamma_i(es: &UnitaryErrorSet, i: usize) -> Result<CMatrix> {
    let u = es.unitaries.get(i).ok_or(Error::IndexOutOfRange {
        index: i,
        len: es.unitaries.len(),
    })?;
    let w = u.adjoint() * es.guess();
    Ok(kron(&w, &w.conjugate()))
}

/// Orthonormal basis of the eigenvalue-1 eigenspace of a unitary `g`.
///
/// For a normal matrix this is exactly `ker(G - I)`, which is extracted by SVD.
pub fn invariant_subspace(g: &CMatrix, tol: f64) -> Vec<CVector> {
    let n = g.nrows();
    null_space(&(g - identity(n)), tol)
}

/// Observables recoverable for every distribution over the error set.
pub fn ru_correctable_family(es: &UnitaryErrorSet, tol: f64) -> ObservableFamily {
    let d = es.dim;
    let mut span: Vec<CVector> = (0..d * d)
        .map(|k| CVector::from_fn(d * d, |i, _| if i == k { 1.0.into() } else { 0.0.into() }))
        .collect();
    for i in (0..es.unitaries.len()).filter(|&i| i != es.guess_index) {
        let g = gamma_i(es, i).expect("index in range");
        span = intersect_spans(&span, &invariant_subspace(&g, tol), tol);
    }
    hermitian_section_with_tol(&span, d, tol).expect("vectors have d^2 entries")
}

/// Eigenvalues and orthonormal eigenvectors of a unitary, grouped by degeneracy.
pub fn unitary_eigen(w: &CMatrix, grouping_tol: f64) -> Result<EigGrouping> {
    let d = ensure_square(w)?;
    let residual = unitary_residual(w);
    if residual > 1e-8 {
        return Err(Error::NonUnitary { residual });
    }
    let (q, t) = Schur::new(w.clone()).unpack();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| t[(a, a)].arg().total_cmp(&t[(b, b)].arg()));
    let eigenvalues: Vec<Complex64> = order.iter().map(|&k| t[(k, k)]).collect();
    let vectors: Vec<CVector> = order.iter().map(|&k| q.column(k).into_owned()).collect();

    // single linkage via union-find; handles phases straddling +-pi
    let mut parent: Vec<usize> = (0..d).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for a in 0..d {
        for b in a + 1..d {
            if (eigenvalues[a] - eigenvalues[b]).norm() <= grouping_tol {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root = vec![usize::MAX; d];
    for k in 0..d {
        let rt = root(&mut parent, k);
        if group_of_root[rt] == usize::MAX {
            group_of_root[rt] = groups.len();
            groups.push(Vec::new());
        }
        groups[group_of_root[rt]].push(k);
    }

    let mut eigenvectors = vectors.clone();
    for g in &groups {
        let members: Vec<CVector> = g.iter().map(|&k| vectors[k].clone()).collect();
        for (&k, mut v) in g.iter().zip(orthonormalize(&members, 1e-8)) {
            phase_fix(&mut v);
            eigenvectors[k] = v;
        }
    }
    Ok(EigGrouping {
        eigenvalues,
        groups,
        eigenvectors,
    })
}

/// Family for `(1-p) U1 . U1^dagger + p U2 . U2^dagger` with guess `U2`: the
/// commutant of `W = U1^dagger U2`, spanned by `|w_a><w_b|` within each eigenspace.
pub fn two_unitary_family(u1: &CMatrix, u2: &CMatrix, tol: f64) -> Result<(EigGrouping, ObservableFamily)> {
    let d = ensure_square(u1)?;
    ensure_dim(u2, d)?;
    for u in [u1, u2] {
        let residual = unitary_residual(u);
        if residual > 1e-8 {
            return Err(Error::NonUnitary { residual });
        }
    }
    let w = u1.adjoint() * u2;
    let eig = unitary_eigen(&w, tol)?;
    let outer = |a: &CVector, b: &CVector| a * b.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut ops = Vec::new();
    for g in &eig.groups {
        for (x, &a) in g.iter().enumerate() {
            let va = &eig.eigenvectors[a];
            ops.push(outer(va, va));
            for &b in &g[x + 1..] {
                let vb = &eig.eigenvectors[b];
                let ab = outer(va, vb);
                let ba = outer(vb, va);
                ops.push((&ab + &ba).scale(s));
                ops.push((&ab - &ba) * I.scale(s));
            }
        }
    }
    let family = ObservableFamily::from_operators(d, &ops)?;
    Ok((eig, family))
}

/// Hermitian operators commuting with every `U_k`.
pub fn commutant_family(unitaries: &[CMatrix], tol: f64) -> Result<ObservableFamily> {
    let first = unitaries.first().ok_or(Error::Empty("unitary list"))?;
    let d = ensure_square(first)?;
    let n = d * d;
    let id = identity(d);
    let mut stacked = CMatrix::zeros(n * unitaries.len(), n);
    for (k, u) in unitaries.iter().enumerate() {
        ensure_dim(u, d)?;
        // vec(U A) - vec(A U) in row-major layout
        let block = kron(u, &id) - kron(&id, &u.transpose());
        stacked.view_mut((k * n, 0), (n, n)).copy_from(&block);
    }
    hermitian_section_with_tol(&null_space(&stacked, tol), d, tol)
}

/// Largest `delta_nd` of family members over `n_dists` seeded probability vectors
/// and `n_states` seeded states per vector, guessing `U_g` alone.
pub fn verify_ru_family(
    es: &UnitaryErrorSet,
    fam: &ObservableFamily,
    n_dists: usize,
    n_states: usize,
    seed: u64,
) -> Result<f64> {
    let guess = unitary_channel(es.guess(), f64::INFINITY)?.transfer();
    let mut worst: f64 = 0.0;
    for k in 0..n_dists {
        let mut g = rng_stream(seed, k as u64);
        let probs = ProbVector::new(random_probabilities(es.unitaries.len(), &mut g), 1e-12)?;
        let phi = random_unitary_channel(&probs, &es.unitaries, f64::INFINITY)?.transfer();
        let gp = GuessPair::new(phi, guess.clone())?;
        worst = worst.max(verify_family(&gp, fam, n_states, seed.wrapping_add(k as u64)));
    }
    Ok(worst)
}

/// [`ru_correctable_family`] with the default kernel tolerance.
pub fn ru_family(es: &UnitaryErrorSet) -> ObservableFamily {
    ru_correctable_family(es, DEFAULT_KERNEL_TOL)
}
