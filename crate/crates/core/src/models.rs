//! Concrete channels, unitaries, observables and states from the worked examples.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use num_complex::Complex64;

use crate::channel::{KrausChannel, ProbVector, TransferMatrix};
use crate::linalg::{c, complex_matrix, identity, kron, r, real_matrix, CMatrix, ONE, ZERO};

/// Pauli matrix `sigma_i`, `i = 0..4` (`sigma_0 = I`).
pub fn pauli(i: usize) -> CMatrix {
    match i {
        0 => identity(2),
        1 => real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        2 => complex_matrix(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]),
        3 => real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0]),
        _ => panic!("pauli index {i} out of range"),
    }
}

/// `sigma_i ⊗ sigma_j`.
pub fn pauli2(i: usize, j: usize) -> CMatrix {
    kron(&pauli(i), &pauli(j))
}

/// Extreme unital qutrit channel with phase `omega = e^{i phi}`.
pub fn qutrit_extreme_channel(phi: f64) -> KrausChannel {
    let w = Complex64::from_polar(1.0, phi);
    let s = FRAC_1_SQRT_2;
    let a1 = complex_matrix(3, 3, &[ZERO, ZERO, ZERO, ZERO, ONE, ZERO, ZERO, ZERO, -ONE]);
    let a2 = complex_matrix(3, 3, &[ZERO, -ONE, ZERO, ZERO, ZERO, ZERO, w, ZERO, ZERO]);
    let a3 = complex_matrix(3, 3, &[ZERO, ZERO, ONE, -w, ZERO, ZERO, ZERO, ZERO, ZERO]);
    KrausChannel::new(vec![a1.scale(s), a2.scale(s), a3.scale(s)], 1e-12)
        .expect("qutrit extreme channel is trace preserving")
}

/// Uncorrelated two-qubit bit flip: `sum_{i,j} p_i p_j (X^i ⊗ X^j) rho (X^i ⊗ X^j)`.
pub fn bitflip_uncorrelated(p: f64) -> KrausChannel {
    let probs = [1.0 - p, p];
    let mut kraus = Vec::with_capacity(4);
    for i in 0..2 {
        for j in 0..2 {
            kraus.push(pauli2(i, j).scale((probs[i] * probs[j]).sqrt()));
        }
    }
    KrausChannel::new_unchecked(kraus).expect("4x4 Kraus operators")
}

/// Completely correlated two-qubit bit flip: `(1-p) rho + p (X⊗X) rho (X⊗X)`.
pub fn bitflip_correlated(p: f64) -> KrausChannel {
    KrausChannel::new_unchecked(vec![pauli2(0, 0).scale((1.0 - p).sqrt()), pauli2(1, 1).scale(p.sqrt())])
        .expect("4x4 Kraus operators")
}

/// Bit flip with partial memory `(1-mu) uncorrelated + mu correlated`.
pub fn bitflip_memory(p: f64, mu: f64) -> KrausChannel {
    let w = ProbVector::new(vec![1.0 - mu, mu], 1e-12).expect("mu in [0, 1]");
    KrausChannel::convex_combination(&w, &[bitflip_uncorrelated(p), bitflip_correlated(p)])
        .expect("matching dimensions")
}

/// Transfer matrix of the partial-memory channel as a convex combination of the
/// two component transfer matrices.
pub fn bitflip_memory_transfer(p: f64, mu: f64) -> TransferMatrix {
    let w = ProbVector::new(vec![1.0 - mu, mu], 1e-12).expect("mu in [0, 1]");
    TransferMatrix::mix(
        &w,
        &[bitflip_uncorrelated(p).transfer(), bitflip_correlated(p).transfer()],
    )
    .expect("matching dimensions")
}

/// The three qutrit unitaries of the three-error random unitary example.
pub fn example3_unitaries() -> [CMatrix; 3] {
    let s2 = SQRT_2;
    let s6 = 6f64.sqrt();
    let n = 1.0 / 12f64.sqrt();
    let u1 = real_matrix(
        3,
        3,
        &[s2 + 1.0, s6, s2 - 1.0, s2 + 1.0, -s6, s2 - 1.0, s2 - 2.0, 0.0, s2 + 2.0],
    );
    let u2 = complex_matrix(
        3,
        3,
        &[
            r(s2 + 1.0),
            c(0.0, s6),
            r(s2 - 1.0),
            r(s2 + 1.0),
            c(0.0, -s6),
            r(s2 - 1.0),
            r(s2 - 2.0),
            ZERO,
            r(s2 + 2.0),
        ],
    );
    let u3 = complex_matrix(
        3,
        3,
        &[
            c(s2, 1.0),
            c(0.0, s6),
            c(s2, -1.0),
            c(s2, 1.0),
            c(0.0, -s6),
            c(s2, -1.0),
            c(s2, -2.0),
            ZERO,
            c(s2, 2.0),
        ],
    );
    [u1.scale(n), u2.scale(n), u3.scale(n)]
}

/// The qubit pair `(U1, U2)`: a real rotation and `sigma_x`.
pub fn example4_unitaries() -> (CMatrix, CMatrix) {
    let u1 = real_matrix(2, 2, &[1.0, -1.0, 1.0, 1.0]).scale(FRAC_1_SQRT_2);
    (u1, pauli(1))
}

/// The qutrit pair whose `W = U1^dagger U2` has a degenerate spectrum.
pub fn example5_unitaries() -> (CMatrix, CMatrix) {
    let s2 = SQRT_2;
    let u1 = real_matrix(3, 3, &[1.0, 1.0, 0.0, 1.0, -1.0, 0.0, 0.0, 0.0, s2]).scale(1.0 / s2);
    let u2 = real_matrix(3, 3, &[4.0, 1.0, 1.0, 0.0, 3.0, -3.0, -s2, 2.0 * s2, 2.0 * s2]).scale(1.0 / (3.0 * s2));
    (u1, u2)
}

/// `B = I⊗(Y+Z) + (Y+Z)⊗I + sum_{i,j in {Y,Z}} sigma_i⊗sigma_j`, outside the
/// correctable family of the partial-memory bit flip.
pub fn partial_recovery_observable() -> CMatrix {
    let mut b = CMatrix::zeros(4, 4);
    for i in 2..4 {
        b += pauli2(0, i) + pauli2(i, 0);
        for j in 2..4 {
            b += pauli2(i, j);
        }
    }
    b
}

/// `rho(x) = (I⊗I + x (Y⊗I + I⊗Z) + Y⊗Z) / 4`, a valid state for `0 <= x <= 1`.
pub fn partial_recovery_state(x: f64) -> CMatrix {
    (pauli2(0, 0) + (pauli2(2, 0) + pauli2(0, 3)).scale(x) + pauli2(2, 3)).scale(0.25)
}
