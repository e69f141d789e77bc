//! Channel representations: Kraus operators, transfer matrices and Choi matrices,
//! with the conversions, adjoint, inverse and composition between them.

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    devectorize, ensure_dim, ensure_square, hermitian_residual, identity, kron, min_eigenvalue, r, unitary_residual,
    vectorize, CMatrix, DEFAULT_SV_CUTOFF,
};

/// A channel `rho -> sum_k A_k rho A_k^dagger` on a `dim`-dimensional system.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    /// Builds a channel and checks `||sum A_k^dagger A_k - I||_F <= tol`.
    pub fn new(kraus: Vec<CMatrix>, tol: f64) -> Result<Self> {
        let ch = Self::new_unchecked(kraus)?;
        let residual = ch.trace_residual();
        if residual > tol {
            return Err(Error::NotTracePreserving { residual, tol });
        }
        Ok(ch)
    }

    /// Shape checks only; trace preservation is not enforced. Meant for diagnostics
    /// such as [`is_cptp`] on maps that may fail it.
    pub fn new_unchecked(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::Empty("Kraus operator list"))?;
        let dim = ensure_square(first)?;
        for k in &kraus {
            ensure_dim(k, dim)?;
        }
        Ok(Self { dim, kraus })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim: d,
            kraus: vec![identity(d)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `||sum_k A_k^dagger A_k - I||_F`.
    pub fn trace_residual(&self) -> f64 {
        let sum = self
            .kraus
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, a| acc + a.adjoint() * a);
        (sum - identity(self.dim)).norm()
    }

    /// Kraus-sum action on an operator.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        ensure_dim(rho, self.dim)?;
        Ok(self
            .kraus
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, a| acc + a * rho * a.adjoint()))
    }

    /// Heisenberg-picture action `sum_k A_k^dagger X A_k`.
    pub fn apply_adjoint(&self, x: &CMatrix) -> Result<CMatrix> {
        ensure_dim(x, self.dim)?;
        Ok(self
            .kraus
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, a| acc + a.adjoint() * x * a))
    }

    /// `self ∘ inner`, i.e. `inner` acts first.
    pub fn after(&self, inner: &KrausChannel) -> Result<KrausChannel> {
        if inner.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: inner.dim,
            });
        }
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| inner.kraus.iter().map(move |b| a * b))
            .collect();
        Ok(Self { dim: self.dim, kraus })
    }

    /// Convex mixture `sum_i w_i Phi_i`, realized by Kraus operators `sqrt(w_i) A_{i,k}`.
    pub fn convex_combination(weights: &ProbVector, parts: &[KrausChannel]) -> Result<Self> {
        if weights.len() != parts.len() {
            return Err(Error::InvalidProbability(format!(
                "{} weights for {} channels",
                weights.len(),
                parts.len()
            )));
        }
        let first = parts.first().ok_or(Error::Empty("convex combination"))?;
        let mut kraus = Vec::new();
        for (w, ch) in weights.probs().iter().zip(parts) {
            if ch.dim != first.dim {
                return Err(Error::DimensionMismatch {
                    expected: first.dim,
                    found: ch.dim,
                });
            }
            if *w > 0.0 {
                kraus.extend(ch.kraus.iter().map(|a| a.scale(w.sqrt())));
            }
        }
        Ok(Self { dim: first.dim, kraus })
    }

    pub fn transfer(&self) -> TransferMatrix {
        transfer_from_kraus(self)
    }
}

/// The `d^2 x d^2` matrix acting on row-major vectorized operators.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    dim: usize,
    gamma: CMatrix,
}

impl TransferMatrix {
    pub fn new(gamma: CMatrix) -> Result<Self> {
        let n = ensure_square(&gamma)?;
        let dim = (n as f64).sqrt().round() as usize;
        if dim * dim != n {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: n,
            });
        }
        Ok(Self { dim, gamma })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            dim: d,
            gamma: identity(d * d),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> &CMatrix {
        &self.gamma
    }

    pub fn into_gamma(self) -> CMatrix {
        self.gamma
    }

    /// `|| <<I| Gamma - <<I| ||`, zero for trace-preserving maps.
    pub fn trace_residual(&self) -> f64 {
        let id = vectorize(&identity(self.dim)).expect("square");
        let row = id.adjoint() * &self.gamma;
        (row - id.adjoint()).norm()
    }

    /// Convex combination of transfer matrices.
    pub fn mix(weights: &ProbVector, parts: &[TransferMatrix]) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty("transfer mixture"))?;
        if weights.len() != parts.len() {
            return Err(Error::InvalidProbability(format!(
                "{} weights for {} channels",
                weights.len(),
                parts.len()
            )));
        }
        let n = first.gamma.nrows();
        let mut gamma = CMatrix::zeros(n, n);
        for (w, t) in weights.probs().iter().zip(parts) {
            if t.dim != first.dim {
                return Err(Error::DimensionMismatch {
                    expected: first.dim,
                    found: t.dim,
                });
            }
            gamma += t.gamma.scale(*w);
        }
        Ok(Self { dim: first.dim, gamma })
    }
}

/// Choi state `(Phi ⊗ id)|Omega><Omega|` with `|Omega> = sum_i |ii>/sqrt(d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    choi: CMatrix,
}

impl ChoiMatrix {
    pub fn new(choi: CMatrix) -> Result<Self> {
        let t = TransferMatrix::new(choi)?;
        Ok(Self {
            dim: t.dim,
            choi: t.gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.choi
    }

    pub fn trace(&self) -> f64 {
        self.choi.trace().re
    }

    pub fn hermitian_residual(&self) -> f64 {
        hermitian_residual(&self.choi)
    }

    /// Smallest eigenvalue; non-negative (within tolerance) iff the map is CP.
    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.choi)
    }
}

/// Probabilities `p_k >= 0` with `sum p_k = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>, tol: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbability("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidProbability(format!("{p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidProbability(format!("sum is {total}")));
        }
        Ok(Self(probs))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `Gamma = sum_k A_k ⊗ conj(A_k)`.
pub fn transfer_from_kraus(ch: &KrausChannel) -> TransferMatrix {
    let n = ch.dim * ch.dim;
    let gamma = ch
        .kraus
        .iter()
        .fold(CMatrix::zeros(n, n), |acc, a| acc + kron(a, &a.conjugate()));
    TransferMatrix { dim: ch.dim, gamma }
}

/// `sum_k A_k^dagger ⊗ A_k^T`, the transfer matrix of the adjoint map built directly
/// from the Kraus operators.
pub fn adjoint_transfer_from_kraus(ch: &KrausChannel) -> TransferMatrix {
    let n = ch.dim * ch.dim;
    let gamma = ch
        .kraus
        .iter()
        .fold(CMatrix::zeros(n, n), |acc, a| acc + kron(&a.adjoint(), &a.transpose()));
    TransferMatrix { dim: ch.dim, gamma }
}

/// `(1/d) sum_{i,j} Phi(|i><j|) ⊗ |i><j|`.
pub fn choi_from_channel(ch: &KrausChannel) -> ChoiMatrix {
    let d = ch.dim;
    let mut choi = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut unit = CMatrix::zeros(d, d);
            unit[(i, j)] = r(1.0);
            let out = ch.apply(&unit).expect("dimension matches");
            for a in 0..d {
                for b in 0..d {
                    choi[(a * d + i, b * d + j)] += out[(a, b)] / d as f64;
                }
            }
        }
    }
    ChoiMatrix { dim: d, choi }
}

/// Choi matrix of an arbitrary (possibly non-CP) map given by its transfer matrix.
pub fn choi_from_transfer(t: &TransferMatrix) -> ChoiMatrix {
    let d = t.dim;
    let choi = CMatrix::from_fn(d * d, d * d, |row, col| {
        let (a, i) = (row / d, row % d);
        let (b, j) = (col / d, col % d);
        t.gamma[(a * d + b, i * d + j)] / d as f64
    });
    ChoiMatrix { dim: d, choi }
}

/// Index involution `gamma[i*d+j, k*d+l] = d * choi[i*d+k, j*d+l]`.
pub fn reshuffle(c: &ChoiMatrix) -> TransferMatrix {
    let d = c.dim;
    let gamma = CMatrix::from_fn(d * d, d * d, |row, col| {
        let (i, j) = (row / d, row % d);
        let (k, l) = (col / d, col % d);
        c.choi[(i * d + k, j * d + l)] * d as f64
    });
    TransferMatrix { dim: d, gamma }
}

/// Transfer matrix of the Hilbert-Schmidt adjoint map: `Gamma^dagger`.
pub fn adjoint_transfer(t: &TransferMatrix) -> TransferMatrix {
    TransferMatrix {
        dim: t.dim,
        gamma: t.gamma.adjoint(),
    }
}

/// `Gamma^{-1}`; rejects maps whose smallest singular value is at most
/// `rel_cutoff * sigma_max`.
pub fn inverse_transfer(t: &TransferMatrix, rel_cutoff: f64) -> Result<TransferMatrix> {
    let svd = SVD::new(t.gamma.clone(), false, false);
    let sigma_max = svd.singular_values.max();
    let sigma_min = svd.singular_values.min();
    let cutoff = rel_cutoff * sigma_max;
    if sigma_min <= cutoff || sigma_max == 0.0 {
        return Err(Error::SingularChannel { sigma_min, cutoff });
    }
    let gamma = t
        .gamma
        .clone()
        .try_inverse()
        .ok_or(Error::SingularChannel { sigma_min, cutoff })?;
    Ok(TransferMatrix { dim: t.dim, gamma })
}

/// [`inverse_transfer`] with the default cutoff.
pub fn invert(t: &TransferMatrix) -> Result<TransferMatrix> {
    inverse_transfer(t, DEFAULT_SV_CUTOFF)
}

/// `devec(Gamma vec(rho))`.
pub fn apply_channel(t: &TransferMatrix, rho: &CMatrix) -> Result<CMatrix> {
    ensure_dim(rho, t.dim)?;
    let v = &t.gamma * vectorize(rho)?;
    devectorize(&v, t.dim)
}

/// `outer ∘ inner`, i.e. `Gamma_outer * Gamma_inner`.
pub fn compose(outer: &TransferMatrix, inner: &TransferMatrix) -> Result<TransferMatrix> {
    if outer.dim != inner.dim {
        return Err(Error::DimensionMismatch {
            expected: outer.dim,
            found: inner.dim,
        });
    }
    Ok(TransferMatrix {
        dim: outer.dim,
        gamma: &outer.gamma * &inner.gamma,
    })
}

/// `rho -> U rho U^dagger`.
pub fn unitary_channel(u: &CMatrix, tol: f64) -> Result<KrausChannel> {
    ensure_square(u)?;
    let residual = unitary_residual(u);
    if residual > tol {
        return Err(Error::NonUnitary { residual });
    }
    KrausChannel::new_unchecked(vec![u.clone()])
}

/// `rho -> sum_k p_k U_k rho U_k^dagger`, Kraus operators `sqrt(p_k) U_k`.
pub fn random_unitary_channel(probs: &ProbVector, unitaries: &[CMatrix], tol: f64) -> Result<KrausChannel> {
    if probs.len() != unitaries.len() {
        return Err(Error::InvalidProbability(format!(
            "{} probabilities for {} unitaries",
            probs.len(),
            unitaries.len()
        )));
    }
    let mut kraus = Vec::with_capacity(unitaries.len());
    for (p, u) in probs.probs().iter().zip(unitaries) {
        let residual = unitary_residual(u);
        if residual > tol {
            return Err(Error::NonUnitary { residual });
        }
        kraus.push(u.scale(p.sqrt()));
    }
    KrausChannel::new_unchecked(kraus)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CptpReport {
    pub trace_preserving: bool,
    pub cp: bool,
    pub trace_residual: f64,
    pub choi_min_eigenvalue: f64,
}

/// Diagnostic CPTP check of a Kraus map.
pub fn is_cptp(ch: &KrausChannel, tol: f64) -> CptpReport {
    let trace_residual = ch.trace_residual();
    let choi_min_eigenvalue = choi_from_channel(ch).min_eigenvalue();
    CptpReport {
        trace_preserving: trace_residual <= tol,
        cp: choi_min_eigenvalue >= -tol,
        trace_residual,
        choi_min_eigenvalue,
    }
}

/// Diagnostic CPTP check of a map given only by its transfer matrix.
pub fn is_cptp_transfer(t: &TransferMatrix, tol: f64) -> CptpReport {
    let trace_residual = t.trace_residual();
    let choi = choi_from_transfer(t);
    let choi_min_eigenvalue = if choi.hermitian_residual() > tol {
        f64::NEG_INFINITY
    } else {
        choi.min_eigenvalue()
    };
    CptpReport {
        trace_preserving: trace_residual <= tol,
        cp: choi_min_eigenvalue >= -tol,
        trace_residual,
        choi_min_eigenvalue,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, real_matrix, DEFAULT_TOL};
    use crate::models::{pauli, qutrit_extreme_channel};

    fn bit_flip(p: f64) -> KrausChannel {
        KrausChannel::new(
            vec![identity(2).scale((1.0 - p).sqrt()), pauli(1).scale(p.sqrt())],
            1e-12,
        )
        .unwrap()
    }

    #[test]
    fn identity_channel_transfer_is_identity() {
        for d in 1..4 {
            let t = transfer_from_kraus(&KrausChannel::identity(d));
            assert_eq!(t.gamma(), &identity(d * d));
        }
    }

    #[test]
    fn sigma_x_conjugation() {
        let ch = unitary_channel(&pauli(1), 1e-12).unwrap();
        let t = transfer_from_kraus(&ch);
        assert_eq!(t.gamma(), &kron(&pauli(1), &pauli(1)));
    }

    /// Column `(i,j)` of the transfer matrix is `vec(Phi(|i><j|))`.
    #[test]
    fn qutrit_transfer_matches_matrix_unit_action() {
        let ch = qutrit_extreme_channel(std::f64::consts::FRAC_PI_2);
        let t = transfer_from_kraus(&ch);
        for i in 0..3 {
            for j in 0..3 {
                let mut unit = CMatrix::zeros(3, 3);
                unit[(i, j)] = r(1.0);
                let col = vectorize(&ch.apply(&unit).unwrap()).unwrap();
                let diff = (t.gamma().column(i * 3 + j) - col).norm();
                assert!(diff < 1e-14);
            }
        }
    }

    #[test]
    fn choi_of_identity_and_depolarizer() {
        let c = choi_from_channel(&KrausChannel::identity(2));
        let omega = real_matrix(4, 1, &[1.0, 0.0, 0.0, 1.0]).scale(std::f64::consts::FRAC_1_SQRT_2);
        assert!(max_abs_diff(c.matrix(), &(&omega * omega.adjoint())) < 1e-15);

        // completely depolarizing: Kraus |i><j| / sqrt(d)
        let d = 3;
        let kraus = (0..d * d)
            .map(|k| {
                let mut m = CMatrix::zeros(d, d);
                m[(k / d, k % d)] = r(1.0 / (d as f64).sqrt());
                m
            })
            .collect();
        let ch = KrausChannel::new(kraus, 1e-12).unwrap();
        let c = choi_from_channel(&ch);
        assert!(max_abs_diff(c.matrix(), &identity(9).scale(1.0 / 9.0)) < 1e-15);
    }

    #[test]
    fn qutrit_choi_is_a_state() {
        let c = choi_from_channel(&qutrit_extreme_channel(1.0));
        assert!(c.min_eigenvalue() >= -1e-10);
        assert!((c.trace() - 1.0).abs() <= 1e-12);
        assert!(c.hermitian_residual() < 1e-12);
    }

    #[test]
    fn reshuffle_bit_flip() {
        let p = 0.2;
        let t = reshuffle(&choi_from_channel(&bit_flip(p)));
        let expected = identity(4).scale(1.0 - p) + kron(&pauli(1), &pauli(1)).scale(p);
        assert!(max_abs_diff(t.gamma(), &expected) < 1e-12);
        assert_eq!(
            reshuffle(&choi_from_channel(&KrausChannel::identity(3))).gamma(),
            &identity(9)
        );
    }

    #[test]
    fn choi_from_transfer_inverts_reshuffle() {
        let ch = qutrit_extreme_channel(0.4);
        let t = transfer_from_kraus(&ch);
        let c = choi_from_transfer(&t);
        assert!(max_abs_diff(c.matrix(), choi_from_channel(&ch).matrix()) < 1e-14);
    }

    #[test]
    fn adjoint_matches_kraus_form() {
        let ch = qutrit_extreme_channel(0.7);
        let a = adjoint_transfer(&transfer_from_kraus(&ch));
        let b = adjoint_transfer_from_kraus(&ch);
        assert!(max_abs_diff(a.gamma(), b.gamma()) < 1e-12);
        let id = TransferMatrix::identity(2);
        assert_eq!(adjoint_transfer(&id), id);
    }

    #[test]
    fn pauli_channel_is_self_adjoint() {
        let probs = ProbVector::new(vec![0.4, 0.3, 0.2, 0.1], 1e-12).unwrap();
        let ch = random_unitary_channel(&probs, &(0..4).map(pauli).collect::<Vec<_>>(), 1e-12).unwrap();
        let t = transfer_from_kraus(&ch);
        assert!(max_abs_diff(t.gamma(), adjoint_transfer(&t).gamma()) < 1e-14);
    }

    #[test]
    fn inverse_of_unitary_is_adjoint() {
        let u = crate::random::random_unitary(3, &mut crate::random::rng(5));
        let t = transfer_from_kraus(&unitary_channel(&u, 1e-10).unwrap());
        let inv = invert(&t).unwrap();
        let expected = kron(&u.adjoint(), &u.transpose());
        assert!(max_abs_diff(inv.gamma(), &expected) < 1e-12);
    }

    #[test]
    fn singular_channel_is_rejected() {
        // completely correlated two-qubit bit flip at p = 1/2
        let p: f64 = 0.5;
        let xx = kron(&pauli(1), &pauli(1));
        let ch = KrausChannel::new(vec![identity(4).scale((1.0 - p).sqrt()), xx.scale(p.sqrt())], 1e-12).unwrap();
        assert!(matches!(
            invert(&transfer_from_kraus(&ch)),
            Err(Error::SingularChannel { .. })
        ));
    }

    #[test]
    fn apply_channel_cases() {
        let rho = real_matrix(2, 2, &[0.3, 0.1, 0.1, 0.7]);
        let id = TransferMatrix::identity(2);
        assert_eq!(apply_channel(&id, &rho).unwrap(), rho);

        let zero = real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let one = real_matrix(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let out = apply_channel(&transfer_from_kraus(&bit_flip(1.0)), &zero).unwrap();
        assert!(max_abs_diff(&out, &one) < 1e-15);

        let t = transfer_from_kraus(&qutrit_extreme_channel(0.3));
        let mixed = identity(3).scale(1.0 / 3.0);
        assert!(max_abs_diff(&apply_channel(&t, &mixed).unwrap(), &mixed) < 1e-14);

        assert!(apply_channel(&t, &rho).is_err());
    }

    #[test]
    fn compose_with_inverse() {
        let t = transfer_from_kraus(&bit_flip(0.2));
        let c = compose(&t, &invert(&t).unwrap()).unwrap();
        assert!(max_abs_diff(c.gamma(), &identity(4)) < 1e-12);
        assert!(compose(&t, &TransferMatrix::identity(3)).is_err());
    }

    #[test]
    fn unitary_channel_rejects_non_unitary() {
        let m = real_matrix(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(unitary_channel(&m, 1e-9), Err(Error::NonUnitary { .. })));
        let ch = unitary_channel(&identity(2), 1e-9).unwrap();
        assert_eq!(ch, KrausChannel::identity(2));
    }

    #[test]
    fn random_unitary_channel_kraus_weights() {
        let u1 = crate::models::example4_unitaries().0;
        let probs = ProbVector::new(vec![0.7, 0.3], 1e-12).unwrap();
        let ch = random_unitary_channel(&probs, &[u1.clone(), pauli(1)], 1e-12).unwrap();
        assert!(max_abs_diff(&ch.kraus()[0], &u1.scale(0.7f64.sqrt())) < 1e-15);
        assert!(max_abs_diff(&ch.kraus()[1], &pauli(1).scale(0.3f64.sqrt())) < 1e-15);

        let bad = ProbVector::new(vec![0.7, 0.4], 1e-12);
        assert!(matches!(bad, Err(Error::InvalidProbability(_))));
        let single = random_unitary_channel(&ProbVector::uniform(1), &[identity(2)], 1e-12).unwrap();
        assert_eq!(transfer_from_kraus(&single).gamma(), &identity(4));
    }

    #[test]
    fn uniform_pauli_channel_is_unital() {
        let ch =
            random_unitary_channel(&ProbVector::uniform(4), &(0..4).map(pauli).collect::<Vec<_>>(), 1e-12).unwrap();
        let half = identity(2).scale(0.5);
        let out = apply_channel(&transfer_from_kraus(&ch), &half).unwrap();
        assert!(max_abs_diff(&out, &half) < 1e-15);
    }

    #[test]
    fn cptp_diagnostics() {
        let rep = is_cptp(&qutrit_extreme_channel(2.0), DEFAULT_TOL);
        assert!(rep.trace_preserving && rep.cp);

        let shrink = KrausChannel::new_unchecked(vec![identity(2).scale(0.9)]).unwrap();
        let rep = is_cptp(&shrink, DEFAULT_TOL);
        assert!(!rep.trace_preserving);
        assert!(rep.cp);
        assert!(KrausChannel::new(vec![identity(2).scale(0.9)], DEFAULT_TOL).is_err());

        // the inverse of a strictly contractive channel is trace preserving but not CP
        let inv = invert(&transfer_from_kraus(&bit_flip(0.2))).unwrap();
        let rep = is_cptp_transfer(&inv, DEFAULT_TOL);
        assert!(rep.trace_preserving);
        assert!(!rep.cp);
    }
}
