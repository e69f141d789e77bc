//! Dense complex linear algebra shared by every other module.
//!
//! Operators are `DMatrix<Complex64>`; vectorized operators are `DVector<Complex64>`
//! in row-major order, `vec(M)[i*d + j] = M[(i, j)]`. Every module relies on this
//! layout: with it, the transfer matrix of `rho -> A rho A^dagger` is `A ⊗ conj(A)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use std::cmp::Ordering;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default tolerance for invariant checks (trace preservation, Hermiticity, ...).
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default invertibility cutoff, relative to the largest singular value.
pub const DEFAULT_SV_CUTOFF: f64 = 1e-8;
/// Default numerical-kernel tolerance.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-8;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Builds a complex matrix from row-major real entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| r(x)))
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn ensure_dim(m: &CMatrix, d: usize) -> Result<()> {
    let found = ensure_square(m)?;
    if found != d {
        return Err(Error::DimensionMismatch { expected: d, found });
    }
    Ok(())
}

/// Row-major vectorization `|M>>`.
pub fn vectorize(m: &CMatrix) -> Result<CVector> {
    let d = ensure_square(m)?;
    Ok(CVector::from_fn(d * d, |k, _| m[(k / d, k % d)]))
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &CVector, d: usize) -> Result<CMatrix> {
    if v.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: v.len(),
        });
    }
    Ok(CMatrix::from_fn(d, d, |i, j| v[i * d + j]))
}

/// Hilbert-Schmidt inner product `Tr(X^dagger Y)`.
pub fn hs_inner(x: &CMatrix, y: &CMatrix) -> Result<Complex64> {
    let d = ensure_square(x)?;
    ensure_dim(y, d)?;
    Ok(x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum())
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all(factors: &[&CMatrix]) -> CMatrix {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Frobenius norm of `M - M^dagger`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Frobenius norm of `U^dagger U - I`.
pub fn unitary_residual(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    (u.adjoint() * u - identity(u.nrows())).norm()
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermitian_residual(m) <= tol
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    unitary_residual(u) <= tol
}

/// Eigenvalues of the Hermitian part `(M + M^dagger)/2`, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending with matching
/// eigenvector columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Smallest eigenvalue of the Hermitian part.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

pub fn is_psd(m: &CMatrix, tol: f64) -> bool {
    is_hermitian(m, tol) && min_eigenvalue(m) >= -tol
}

/// Hermitian, positive semidefinite and unit trace within `tol`.
pub fn is_density_matrix(m: &CMatrix, tol: f64) -> bool {
    is_psd(m, tol) && (m.trace() - ONE).norm() <= tol
}

/// Descending singular values.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let svd = SVD::new(m.clone(), false, false);
    svd.singular_values.iter().copied().collect()
}

/// Multiplies `v` by a unit phase so that its largest-magnitude entry is real and
/// positive. Ties go to the lowest index.
pub fn phase_fix(v: &mut CVector) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (k, z) in v.iter().enumerate() {
        // strict comparison with a small slack keeps the lowest index on near-ties
        if z.norm() > best_abs + 1e-12 {
            best = k;
            best_abs = z.norm();
        }
    }
    if best_abs > 0.0 {
        let phase = v[best].conj() / best_abs;
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

fn lexicographic(a: &CVector, b: &CVector) -> Ordering {
    let round = |x: f64| (x * 1e10).round() as i64;
    for (x, y) in a.iter().zip(b.iter()) {
        let o = round(x.re).cmp(&round(y.re)).then(round(x.im).cmp(&round(y.im)));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

/// Orthonormal basis of the numerical null space of `m`.
///
/// A right singular vector belongs to the kernel when its singular value is at most
/// `rel_tol * max(sigma_max, 1)`. The unit floor keeps matrices that are zero up to
/// rounding noise from being mistaken for full-rank ones. Vectors come back ordered by
/// ascending singular value (ties by rounded lexicographic order) and phase-fixed.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> Vec<CVector> {
    let ncols = m.ncols();
    if ncols == 0 {
        return Vec::new();
    }
    // A thin SVD of a wide matrix does not expose the whole right null space.
    let padded;
    let work = if m.nrows() < ncols {
        padded = m.clone().resize_vertically(ncols, ZERO);
        &padded
    } else {
        m
    };
    let svd = SVD::new(work.clone(), false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().copied().fold(0.0, f64::max);
    let cutoff = rel_tol * sigma_max.max(1.0);

    let mut found: Vec<(f64, CVector)> = (0..sigma.len())
        .filter(|&k| sigma[k] <= cutoff)
        .map(|k| {
            let mut v = CVector::from_iterator(ncols, v_t.row(k).iter().map(|z| z.conj()));
            phase_fix(&mut v);
            (sigma[k], v)
        })
        .collect();
    found.sort_by(|(sa, va), (sb, vb)| sa.total_cmp(sb).then_with(|| lexicographic(va, vb)));
    found.into_iter().map(|(_, v)| v).collect()
}

/// Gram-Schmidt with one re-orthogonalization pass. Vectors whose remaining norm
/// falls below `tol` are dropped.
pub fn orthonormalize(vectors: &[CVector], tol: f64) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&w);
                w.axpy(-proj, b, ONE);
            }
        }
        let n = w.norm();
        if n > tol {
            basis.push(w.unscale(n));
        }
    }
    basis
}

/// Stacks vectors as the columns of a matrix.
pub fn columns(vectors: &[CVector], dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, vectors.len());
    for (k, v) in vectors.iter().enumerate() {
        m.set_column(k, v);
    }
    m
}

/// Intersection of two subspaces given by orthonormal bases.
///
/// Solves `[A, -B] (x; y) = 0`; each solution yields `A x = B y` in the intersection,
/// so `dim = m + n - rank([A B])`. The result is re-orthonormalized.
pub fn intersect_spans(a: &[CVector], b: &[CVector], rel_tol: f64) -> Vec<CVector> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let dim = a[0].len();
    let (m, n) = (a.len(), b.len());
    let mut stacked = CMatrix::zeros(dim, m + n);
    for (k, v) in a.iter().enumerate() {
        stacked.set_column(k, v);
    }
    for (k, v) in b.iter().enumerate() {
        stacked.set_column(m + k, &(-v));
    }
    let ma = columns(a, dim);
    let mb = columns(b, dim);
    let mut out = Vec::new();
    for z in null_space(&stacked, rel_tol) {
        let x = z.rows(0, m).into_owned();
        let y = z.rows(m, n).into_owned();
        out.push((&ma * x + &mb * y).scale(0.5));
    }
    let mut basis = orthonormalize(&out, 1e-6);
    basis.iter_mut().for_each(phase_fix);
    basis
}

/// Relative residual of `v` after orthogonal projection onto `basis` (orthonormal).
pub fn projection_residual(basis: &[CVector], v: &CVector) -> f64 {
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mut w = v.clone();
    for b in basis {
        let proj = b.dotc(&w);
        w.axpy(-proj, b, ONE);
    }
    w.norm() / norm
}

/// Largest residual of either basis projected onto the other; infinite when the
/// dimensions differ.
pub fn span_distance(a: &[CVector], b: &[CVector]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter()
        .map(|v| projection_residual(b, v))
        .chain(b.iter().map(|v| projection_residual(a, v)))
        .fold(0.0, f64::max)
}

/// `|a> ⊗ |b>`.
pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    let n = b.len();
    CVector::from_fn(a.len() * n, |k, _| a[k / n] * b[k % n])
}

/// Matrix with row-major complex entries.
pub fn complex_matrix(rows: usize, cols: usize, entries: &[Complex64]) -> CMatrix {
    CMatrix::from_row_slice(rows, cols, entries)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
