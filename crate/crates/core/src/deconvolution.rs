//! Deconvolution with a guessed channel.
//!
//! Measuring `Phi_g^{-1 dagger}(A)` on the noisy state `Phi(rho)` returns
//! `<<rho| Gamma_Phi^dagger Gamma_{Phi_g^{-1}}^dagger |A>>`. The deviation from the ideal
//! value is `<<rho| F |A>>` with `F = I - Gamma_Phi^dagger Gamma_{Phi_g^{-1}}^dagger`, so
//! the observables recovered exactly for every state are the Hermitian elements of
//! `ker F`.

use nalgebra::{DMatrix, DVector, SVD};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{adjoint_transfer, apply_channel, inverse_transfer, TransferMatrix};
use crate::error::{Error, Result};
use crate::linalg::{
    devectorize, ensure_dim, hermitian_part, identity, intersect_spans, orthonormalize, projection_residual,
    span_distance, trace_product, vectorize, CMatrix, CVector, DEFAULT_SV_CUTOFF, I,
};
use crate::random::{random_density_matrix, rng, rng_stream, DEFAULT_SEED};

/// Deviation allowed for a family member on any sampled state.
pub const FAMILY_DELTA_TOL: f64 = 1e-9;
/// Number of random states used by the self-verification in [`correctable_family`].
pub const SELF_CHECK_STATES: usize = 100;
/// Relative residual below which an operator counts as a family member.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

/// True channel, guessed channel and the cached inverse of the guess.
#[derive(Clone, Debug)]
pub struct GuessPair {
    phi: TransferMatrix,
    phi_g: TransferMatrix,
    phi_g_inv: TransferMatrix,
}

impl GuessPair {
    /// Rejects non-invertible guesses (default cutoff).
    pub fn new(phi: TransferMatrix, phi_g: TransferMatrix) -> Result<Self> {
        Self::with_cutoff(phi, phi_g, DEFAULT_SV_CUTOFF)
    }

    pub fn with_cutoff(phi: TransferMatrix, phi_g: TransferMatrix, rel_cutoff: f64) -> Result<Self> {
        if phi.dim() != phi_g.dim() {
            return Err(Error::DimensionMismatch {
                expected: phi.dim(),
                found: phi_g.dim(),
            });
        }
        let phi_g_inv = inverse_transfer(&phi_g, rel_cutoff)?;
        Ok(Self { phi, phi_g, phi_g_inv })
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn phi(&self) -> &TransferMatrix {
        &self.phi
    }

    pub fn phi_g(&self) -> &TransferMatrix {
        &self.phi_g
    }

    pub fn phi_g_inv(&self) -> &TransferMatrix {
        &self.phi_g_inv
    }

    /// Transfer matrix of `A -> Phi_g^{-1 dagger}(A)`.
    pub fn modified_transfer(&self) -> TransferMatrix {
        adjoint_transfer(&self.phi_g_inv)
    }
}

/// Orthonormal Hermitian basis of a space of observables.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableFamily {
    dim: usize,
    basis: Vec<CMatrix>,
}

impl ObservableFamily {
    /// Orthonormalizes the given Hermitian operators (Gram-Schmidt under `hs_inner`).
    pub fn from_operators(dim: usize, ops: &[CMatrix]) -> Result<Self> {
        let mut vecs = Vec::with_capacity(ops.len());
        for a in ops {
            ensure_dim(a, dim)?;
            vecs.push(vectorize(&hermitian_part(a))?);
        }
        let basis = orthonormalize(&vecs, 1e-8)
            .iter()
            .map(|v| hermitian_part(&devectorize(v, dim).expect("d^2 entries")))
            .collect();
        Ok(Self { dim, basis })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn n_params(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis_vectors(&self) -> Vec<CVector> {
        self.basis.iter().map(|b| vectorize(b).expect("square")).collect()
    }

    /// Relative residual of `a` after projection onto the family span.
    pub fn projection_residual(&self, a: &CMatrix) -> Result<f64> {
        ensure_dim(a, self.dim)?;
        Ok(projection_residual(&self.basis_vectors(), &vectorize(a)?))
    }

    pub fn contains(&self, a: &CMatrix, tol: f64) -> bool {
        self.projection_residual(a).map(|r| r <= tol).unwrap_or(false)
    }

    /// Mutual projection residual; infinite when the parameter counts differ.
    pub fn span_distance(&self, other: &ObservableFamily) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        span_distance(&self.basis_vectors(), &other.basis_vectors())
    }

    /// `sum_k coeffs[k] * basis[k]`.
    pub fn combine(&self, coeffs: &[f64]) -> CMatrix {
        self.basis
            .iter()
            .zip(coeffs)
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, (b, &x)| acc + b.scale(x))
    }
}

/// Ideal, noisy and deconvolved expectation values of one observable on one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeconvReport {
    pub ideal: f64,
    pub experimental: f64,
    pub deconvolved: f64,
    pub delta_exp: f64,
    pub delta_nd: f64,
    /// `delta_nd < delta_exp`, false on ties.
    pub improved: bool,
    /// The two deviations agree to within `1e-12` (relative).
    pub tie: bool,
}

impl DeconvReport {
    pub fn new(ideal: f64, experimental: f64, deconvolved: f64) -> Self {
        let delta_exp = (ideal - experimental).abs();
        let delta_nd = (ideal - deconvolved).abs();
        let tie = (delta_exp - delta_nd).abs() <= 1e-12 * delta_exp.max(1.0);
        Self {
            ideal,
            experimental,
            deconvolved,
            delta_exp,
            delta_nd,
            improved: !tie && delta_nd < delta_exp,
            tie,
        }
    }
}

/// `F = I - Gamma_Phi^dagger (Gamma_{Phi_g}^{-1})^dagger`.
pub fn deviation_operator(gp: &GuessPair) -> CMatrix {
    let n = gp.dim() * gp.dim();
    identity(n) - gp.phi.gamma().adjoint() * gp.phi_g_inv.gamma().adjoint()
}

/// Orthonormal basis of the numerical kernel of `f`.
pub fn kernel(f: &CMatrix, rel_tol: f64) -> Vec<CVector> {
    crate::linalg::null_space(f, rel_tol)
}

/// Real null space of a real matrix, `sigma <= rel_tol * max(sigma_max, 1)`.
fn real_null_space(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let ncols = m.ncols();
    let work = if m.nrows() < ncols {
        m.clone().resize_vertically(ncols, 0.0)
    } else {
        m.clone()
    };
    let svd = SVD::new(work, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let cutoff = rel_tol * sigma_max.max(1.0);
    (0..svd.singular_values.len())
        .rev()
        .filter(|&k| svd.singular_values[k] <= cutoff)
        .map(|k| v_t.row(k).transpose())
        .collect()
}

/// Hermitian operators whose vectorization lies in the complex span of `kernel_basis`.
///
/// The span is treated as a real space with coordinates `(x, y)` for
/// `A = sum_j (x_j + i y_j) V_j`; the constraint `A - A^dagger = 0` is real-linear in
/// `(x, y)` and its null space gives the Hermitian section.
pub fn hermitian_section(kernel_basis: &[CVector], d: usize) -> Result<ObservableFamily> {
    hermitian_section_with_tol(kernel_basis, d, crate::linalg::DEFAULT_KERNEL_TOL)
}

pub fn hermitian_section_with_tol(kernel_basis: &[CVector], d: usize, rel_tol: f64) -> Result<ObservableFamily> {
    for v in kernel_basis {
        if v.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: v.len(),
            });
        }
    }
    let basis = orthonormalize(kernel_basis, 1e-8);
    if basis.is_empty() {
        return Ok(ObservableFamily {
            dim: d,
            basis: Vec::new(),
        });
    }
    let k = basis.len();
    let n = d * d;
    let mats: Vec<CMatrix> = basis.iter().map(|v| devectorize(v, d).expect("d^2 entries")).collect();

    let mut system = DMatrix::<f64>::zeros(2 * n, 2 * k);
    for (j, v) in mats.iter().enumerate() {
        let anti = v - v.adjoint();
        let sym = (v + v.adjoint()) * I;
        for (idx, (a, s)) in anti.iter().zip(sym.iter()).enumerate() {
            system[(idx, j)] = a.re;
            system[(n + idx, j)] = a.im;
            system[(idx, k + j)] = s.re;
            system[(n + idx, k + j)] = s.im;
        }
    }

    let candidates: Vec<CVector> = real_null_space(&system, rel_tol)
        .iter()
        .map(|z| {
            let a = mats.iter().enumerate().fold(CMatrix::zeros(d, d), |acc, (j, v)| {
                acc + v * crate::linalg::c(z[j], z[k + j])
            });
            vectorize(&hermitian_part(&a)).expect("square")
        })
        .collect();

    let herm = orthonormalize(&candidates, 1e-6)
        .iter()
        .map(|v| hermitian_part(&devectorize(v, d).expect("d^2 entries")))
        .collect();
    Ok(ObservableFamily { dim: d, basis: herm })
}

/// `Phi_g^{-1 dagger}(A)`, the observable to measure on the noisy state.
pub fn modified_observable(gp: &GuessPair, a: &CMatrix) -> Result<CMatrix> {
    ensure_dim(a, gp.dim())?;
    let v = gp.phi_g_inv.gamma().adjoint() * vectorize(a)?;
    devectorize(&v, gp.dim())
}

/// `Re Tr(A rho)`; errors if the imaginary part exceeds `1e-10` (relative).
pub fn expectation(a: &CMatrix, rho: &CMatrix) -> Result<f64> {
    let d = crate::linalg::ensure_square(a)?;
    ensure_dim(rho, d)?;
    let z = trace_product(a, rho);
    let scale = a.norm().max(1.0) * rho.norm().max(1.0);
    if z.im.abs() > 1e-10 * scale {
        return Err(Error::NotHermitian { residual: z.im.abs() });
    }
    Ok(z.re)
}

/// Ideal, noisy and deconvolved expectation values of `a` on `rho`.
pub fn evaluate(gp: &GuessPair, a: &CMatrix, rho: &CMatrix) -> Result<DeconvReport> {
    let noisy = apply_channel(&gp.phi, rho)?;
    let modified = modified_observable(gp, a)?;
    Ok(DeconvReport::new(
        expectation(a, rho)?,
        expectation(a, &noisy)?,
        expectation(&modified, &noisy)?,
    ))
}

/// `<<rho| Gamma_Phi^dagger Gamma_{Phi_g^{-1}}^dagger |A>>`, the deconvolved value in
/// vectorized form.
pub fn deconvolved_bilinear(gp: &GuessPair, a: &CMatrix, rho: &CMatrix) -> Result<f64> {
    let va = vectorize(a)?;
    let vr = vectorize(rho)?;
    let m = gp.phi.gamma().adjoint() * (gp.phi_g_inv.gamma().adjoint() * va);
    Ok(vr.dotc(&m).re)
}

/// `|<<rho| F |A>>|`.
pub fn delta_nd_bilinear(gp: &GuessPair, a: &CMatrix, rho: &CMatrix) -> Result<f64> {
    let f = deviation_operator(gp);
    Ok(vectorize(rho)?.dotc(&(f * vectorize(a)?)).norm())
}

/// Hermitian section of `ker F`, self-verified on [`SELF_CHECK_STATES`] seeded states.
pub fn correctable_family(gp: &GuessPair, rel_tol: f64) -> Result<ObservableFamily> {
    let ker = kernel(&deviation_operator(gp), rel_tol);
    let fam = hermitian_section_with_tol(&ker, gp.dim(), rel_tol)?;
    if !fam.is_empty() {
        let max_delta = verify_family(gp, &fam, SELF_CHECK_STATES, DEFAULT_SEED);
        if max_delta > FAMILY_DELTA_TOL {
            return Err(Error::VerificationFailed {
                max_delta,
                tol: FAMILY_DELTA_TOL,
            });
        }
    }
    Ok(fam)
}

/// Largest `delta_nd` over `n_states` seeded random states, for every basis element
/// plus one random real combination per state.
pub fn verify_family(gp: &GuessPair, fam: &ObservableFamily, n_states: usize, seed: u64) -> f64 {
    verify_operators(gp, fam.basis(), n_states, seed)
}

/// [`verify_family`] over an arbitrary operator list.
pub fn verify_operators(gp: &GuessPair, ops: &[CMatrix], n_states: usize, seed: u64) -> f64 {
    if ops.is_empty() {
        return 0.0;
    }
    let d = gp.dim();
    let modified: Vec<CMatrix> = ops
        .iter()
        .map(|a| modified_observable(gp, a).expect("dimension checked"))
        .collect();
    (0..n_states)
        .into_par_iter()
        .map(|s| {
            let mut g = rng_stream(seed, s as u64);
            let rho = random_density_matrix(d, &mut g);
            let noisy = apply_channel(&gp.phi, &rho).expect("dimension checked");
            let mut worst: f64 = 0.0;
            let mut combo_delta = crate::linalg::ZERO;
            for (a, m) in ops.iter().zip(&modified) {
                let diff = trace_product(a, &rho) - trace_product(m, &noisy);
                worst = worst.max(diff.norm());
                let w: f64 = g.sample(StandardNormal);
                combo_delta += diff * w;
            }
            worst.max(combo_delta.norm())
        })
        .reduce(|| 0.0, f64::max)
}

/// Unknown channel parameter: kernels are intersected over `probes` and the family is
/// re-verified at `checks`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterProbe {
    pub probes: Vec<f64>,
    pub checks: Vec<f64>,
}

impl ParameterProbe {
    /// `n` interior points evenly spread over `(lo, hi)` and three seeded random
    /// check values in the same range.
    pub fn spread(lo: f64, hi: f64, n: usize, seed: u64) -> Self {
        let probes = (0..n)
            .map(|k| lo + (hi - lo) * (k + 1) as f64 / (n + 1) as f64)
            .collect();
        let mut g = rng(seed);
        let checks = (0..3)
            .map(|_| lo + (hi - lo) * (0.05 + 0.9 * g.random::<f64>()))
            .collect();
        Self { probes, checks }
    }
}

/// Family valid for every value of an unknown parameter of the true channel.
#[derive(Clone, Debug)]
pub struct ParametricFamily {
    pub family: ObservableFamily,
    /// Largest `delta_nd` seen at the probe and check values.
    pub max_delta: f64,
}

pub fn family_over_parameter<F>(
    true_channel: F,
    guess: &TransferMatrix,
    probe: &ParameterProbe,
    rel_tol: f64,
    seed: u64,
) -> Result<ParametricFamily>
where
    F: Fn(f64) -> Result<TransferMatrix>,
{
    let mut span: Option<Vec<CVector>> = None;
    let d = guess.dim();
    for &x in &probe.probes {
        let gp = GuessPair::new(true_channel(x)?, guess.clone())?;
        let ker = kernel(&deviation_operator(&gp), rel_tol);
        span = Some(match span {
            None => ker,
            Some(prev) => intersect_spans(&prev, &ker, rel_tol),
        });
    }
    let span = span.ok_or(Error::Empty("parameter probes"))?;
    let family = hermitian_section_with_tol(&span, d, rel_tol)?;
    let mut max_delta: f64 = 0.0;
    for &x in probe.probes.iter().chain(&probe.checks) {
        let gp = GuessPair::new(true_channel(x)?, guess.clone())?;
        max_delta = max_delta.max(verify_family(&gp, &family, SELF_CHECK_STATES, seed));
    }
    Ok(ParametricFamily { family, max_delta })
}

/// One row of a guess sweep; `n_params = -1` marks a non-invertible candidate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub index: usize,
    pub n_params: i64,
}

/// Correctable-family size for each candidate guess, largest first (ties by index).
pub fn guess_sweep(phi: &TransferMatrix, candidates: &[TransferMatrix], rel_tol: f64) -> Result<Vec<SweepEntry>> {
    let mut out = Vec::with_capacity(candidates.len());
    for (index, cand) in candidates.iter().enumerate() {
        let n_params = match GuessPair::new(phi.clone(), cand.clone()) {
            Ok(gp) => correctable_family(&gp, rel_tol)?.n_params() as i64,
            Err(Error::SingularChannel { .. }) => -1,
            Err(e) => return Err(e),
        };
        out.push(SweepEntry { index, n_params });
    }
    out.sort_by(|a, b| b.n_params.cmp(&a.n_params).then(a.index.cmp(&b.index)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{random_unitary_channel, transfer_from_kraus, unitary_channel, ProbVector};
    use crate::linalg::{c, max_abs_diff, r, DEFAULT_KERNEL_TOL, ONE, ZERO};
    use crate::models::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn qutrit_pair(phi: f64) -> GuessPair {
        GuessPair::new(
            qutrit_extreme_channel(phi).transfer(),
            qutrit_extreme_channel(0.0).transfer(),
        )
        .unwrap()
    }

    #[test]
    fn full_knowledge_gives_zero_deviation() {
        let t = qutrit_extreme_channel(1.3).transfer();
        let gp = GuessPair::new(t.clone(), t).unwrap();
        assert!(deviation_operator(&gp).norm() < 1e-12);
        let fam = correctable_family(&gp, DEFAULT_KERNEL_TOL).unwrap();
        assert_eq!(fam.n_params(), 9);
    }

    #[test]
    fn qutrit_deviation_is_diagonal() {
        for phi in [0.4, FRAC_PI_2, 2.5] {
            let f = deviation_operator(&qutrit_pair(phi));
            let w = c(phi.cos(), phi.sin());
            let expected = [
                ZERO,
                ONE - w.conj(),
                ONE - w.conj(),
                ONE - w,
                ZERO,
                ZERO,
                ONE - w,
                ZERO,
                ZERO,
            ];
            let diag = CMatrix::from_diagonal(&CVector::from_row_slice(&expected));
            assert!(max_abs_diff(&f, &diag) < 1e-12, "phi = {phi}");
        }
    }

    #[test]
    fn qutrit_kernel_coordinates() {
        let ker = kernel(&deviation_operator(&qutrit_pair(FRAC_PI_2)), DEFAULT_KERNEL_TOL);
        assert_eq!(ker.len(), 5);
        let e = |k: usize| CVector::from_fn(9, |i, _| if i == k { ONE } else { ZERO });
        for k in [0, 4, 5, 7, 8] {
            assert!(projection_residual(&ker, &e(k)) < 1e-12);
        }
    }

    #[test]
    fn qutrit_family_and_modified_observable() {
        let gp = qutrit_pair(FRAC_PI_2);
        let fam = correctable_family(&gp, DEFAULT_KERNEL_TOL).unwrap();
        assert_eq!(fam.n_params(), 5);

        let (a, b, e) = (0.3, -1.2, 0.7);
        let cc = c(0.4, -0.9);
        let obs = crate::linalg::complex_matrix(3, 3, &[r(a), ZERO, ZERO, ZERO, r(b), cc, ZERO, cc.conj(), r(e)]);
        assert!(fam.contains(&obs, 1e-9));
        // the displayed pattern is the forward adjoint of the guess
        let displayed = crate::linalg::complex_matrix(
            3,
            3,
            &[r(b + e), ZERO, ZERO, ZERO, r(a + b), -cc, ZERO, -cc.conj(), r(a + e)],
        )
        .scale(0.5);
        let forward = devectorize(&(gp.phi_g().gamma().adjoint() * vectorize(&obs).unwrap()), 3).unwrap();
        assert!(max_abs_diff(&forward, &displayed) < 1e-12);

        // its inverse, solved by hand from the displayed map
        let inverse = crate::linalg::complex_matrix(
            3,
            3,
            &[
                r(b + e - a),
                ZERO,
                ZERO,
                ZERO,
                r(a + b - e),
                cc.scale(-2.0),
                ZERO,
                cc.conj().scale(-2.0),
                r(a + e - b),
            ],
        );
        let m = modified_observable(&gp, &obs).unwrap();
        assert!(max_abs_diff(&m, &inverse) < 1e-12);
    }

    #[test]
    fn hermitian_section_of_imaginary_ray() {
        let v = vectorize(&(pauli(3) * I)).unwrap();
        let fam = hermitian_section(&[v], 2).unwrap();
        assert_eq!(fam.n_params(), 1);
        assert!(fam.contains(&pauli(3), 1e-12));
    }

    #[test]
    fn hermitian_section_without_hermitian_members() {
        // span{|0><1|} contains no nonzero Hermitian operator
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = ONE;
        let fam = hermitian_section(&[vectorize(&m).unwrap()], 2).unwrap();
        assert_eq!(fam.n_params(), 0);
    }

    #[test]
    fn hermitian_section_of_everything() {
        for d in 2..5 {
            let ker = kernel(&CMatrix::zeros(d * d, d * d), DEFAULT_KERNEL_TOL);
            assert_eq!(hermitian_section(&ker, d).unwrap().n_params(), d * d);
        }
    }

    #[test]
    fn two_unitary_deviation_form() {
        let (u1, u2) = example4_unitaries();
        let p = 0.3;
        let probs = ProbVector::new(vec![1.0 - p, p], 1e-12).unwrap();
        let phi = random_unitary_channel(&probs, &[u1.clone(), u2.clone()], 1e-12).unwrap();
        let gp = GuessPair::new(
            phi.transfer(),
            transfer_from_kraus(&unitary_channel(&u2, 1e-12).unwrap()),
        )
        .unwrap();
        let w = u1.adjoint() * &u2;
        let expected = (identity(4) - crate::linalg::kron(&w, &w.conjugate())).scale(1.0 - p);
        assert!(max_abs_diff(&deviation_operator(&gp), &expected) < 1e-12);
    }

    #[test]
    fn unitary_guess_modifies_by_conjugation() {
        let u = crate::random::random_unitary(3, &mut rng(11));
        let t = transfer_from_kraus(&unitary_channel(&u, 1e-10).unwrap());
        let gp = GuessPair::new(qutrit_extreme_channel(1.0).transfer(), t).unwrap();
        let a = crate::random::random_hermitian(3, &mut rng(12));
        let m = modified_observable(&gp, &a).unwrap();
        assert!(max_abs_diff(&m, &(&u * &a * u.adjoint())) < 1e-12);
    }

    #[test]
    fn expectation_cases() {
        let rho = crate::random::random_density_matrix(2, &mut rng(1));
        assert!((expectation(&identity(2), &rho).unwrap() - 1.0).abs() < 1e-12);
        let zero = crate::linalg::real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(expectation(&pauli(3), &zero).unwrap(), 1.0);
        assert!(expectation(&pauli(3), &identity(3)).is_err());

        // direct 4x4 trace oracle
        let b = partial_recovery_observable();
        let rho = partial_recovery_state(0.5);
        let mut oracle = ZERO;
        for i in 0..4 {
            for k in 0..4 {
                oracle += b[(i, k)] * rho[(k, i)];
            }
        }
        assert!((expectation(&b, &rho).unwrap() - oracle.re).abs() < 1e-14);
    }

    #[test]
    fn evaluate_cross_checks_bilinear_form() {
        let gp = qutrit_pair(2.0);
        let mut g = rng(4);
        for _ in 0..10 {
            let a = crate::random::random_hermitian(3, &mut g);
            let rho = random_density_matrix(3, &mut g);
            let rep = evaluate(&gp, &a, &rho).unwrap();
            assert!((rep.deconvolved - deconvolved_bilinear(&gp, &a, &rho).unwrap()).abs() < 1e-10);
            assert!((rep.delta_nd - delta_nd_bilinear(&gp, &a, &rho).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn perfect_guess_recovers_everything() {
        let t = bitflip_memory(0.2, 0.3).transfer();
        let gp = GuessPair::new(t.clone(), t).unwrap();
        let mut g = rng(9);
        for _ in 0..10 {
            let a = crate::random::random_hermitian(4, &mut g);
            let rho = random_density_matrix(4, &mut g);
            assert!(evaluate(&gp, &a, &rho).unwrap().delta_nd <= 1e-10);
        }
    }

    #[test]
    fn report_tie_is_not_improvement() {
        let rep = DeconvReport::new(1.0, 0.5, 1.5);
        assert!(rep.tie);
        assert!(!rep.improved);
        let rep = DeconvReport::new(1.0, 0.5, 0.9);
        assert!(rep.improved && !rep.tie);
    }

    #[test]
    fn verify_family_negative_control() {
        let gp = qutrit_pair(2.0);
        let fam = correctable_family(&gp, DEFAULT_KERNEL_TOL).unwrap();
        assert!(verify_family(&gp, &fam, 100, 3) <= 1e-9);

        // level-(0,1) sigma_x lies outside the family
        let mut outside = CMatrix::zeros(3, 3);
        outside[(0, 1)] = ONE;
        outside[(1, 0)] = ONE;
        let perturbed = &fam.basis()[0] + outside.scale(0.01);
        assert!(verify_operators(&gp, &[perturbed], 100, 3) > 1e-4);
    }

    #[test]
    fn verify_is_deterministic() {
        let gp = qutrit_pair(1.0);
        let a = crate::random::random_hermitian(3, &mut rng(2));
        let x = verify_operators(&gp, std::slice::from_ref(&a), 50, 77);
        let y = verify_operators(&gp, &[a], 50, 77);
        assert_eq!(x.to_bits(), y.to_bits());
    }

    #[test]
    fn qutrit_family_over_unknown_phase() {
        let guess = qutrit_extreme_channel(0.0).transfer();
        let probe = ParameterProbe::spread(0.0, 2.0 * PI, 5, 1);
        let pf = family_over_parameter(
            |phi| Ok(qutrit_extreme_channel(phi).transfer()),
            &guess,
            &probe,
            DEFAULT_KERNEL_TOL,
            DEFAULT_SEED,
        )
        .unwrap();
        assert_eq!(pf.family.n_params(), 5);
        assert!(pf.max_delta <= 1e-9);
    }

    #[test]
    fn sweep_ranks_and_flags_singular() {
        let p = 0.3;
        let phi = bitflip_memory(p, 0.5).transfer();
        let candidates = vec![
            bitflip_correlated(0.5).transfer(),
            bitflip_correlated(p).transfer(),
            phi.clone(),
        ];
        let ranked = guess_sweep(&phi, &candidates, DEFAULT_KERNEL_TOL).unwrap();
        assert_eq!(ranked[0], SweepEntry { index: 2, n_params: 16 });
        assert_eq!(ranked[1], SweepEntry { index: 1, n_params: 12 });
        assert_eq!(ranked[2], SweepEntry { index: 0, n_params: -1 });
    }
}
