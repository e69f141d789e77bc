//! Randomized invariants. Inputs are generated from proptest-chosen seeds so that
//! failures shrink to a reproducible `(seed, d)` pair.

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use qdeconv::channel::*;
use qdeconv::deconvolution::*;
use qdeconv::linalg::*;
use qdeconv::quorum::*;
use qdeconv::random::*;
use qdeconv::random_unitary::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 24,
        ..ProptestConfig::default()
    }
}

/// `sum_k A_k^dagger ⊗ A_k^T`, written out independently of the library.
fn adjoint_oracle(ch: &KrausChannel) -> CMatrix {
    let d = ch.dim();
    let mut out = CMatrix::zeros(d * d, d * d);
    for a in ch.kraus() {
        let ad = a.adjoint();
        let at = a.transpose();
        for (i, j, k, l) in indices4(d) {
            out[(i * d + k, j * d + l)] += ad[(i, j)] * at[(k, l)];
        }
    }
    out
}

fn indices4(d: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..d).flat_map(move |i| (0..d).flat_map(move |j| (0..d).flat_map(move |k| (0..d).map(move |l| (i, j, k, l)))))
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn vectorize_round_trip(seed in any::<u64>(), d in 1usize..6) {
        let m = ginibre(d, d, &mut rng(seed));
        let back = devectorize(&vectorize(&m).unwrap(), d).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn choi_reshuffle_is_transfer(seed in any::<u64>(), d in 2usize..5, n in 1usize..4) {
        let ch = random_channel(d, n, &mut rng(seed));
        let t = transfer_from_kraus(&ch);
        let via_choi = reshuffle(&choi_from_channel(&ch));
        prop_assert!(max_abs_diff(via_choi.gamma(), t.gamma()) < 1e-12);
        prop_assert!(max_abs_diff(adjoint_transfer(&t).gamma(), &adjoint_oracle(&ch)) < 1e-12);
    }

    #[test]
    fn inverse_and_adjoint_commute(seed in any::<u64>(), d in 2usize..5) {
        let t = random_channel(d, 2, &mut rng(seed)).transfer();
        prop_assume!(singular_values(t.gamma()).last().copied().unwrap_or(0.0) > 1e-6);
        let inv = invert(&t).unwrap();
        let id = compose(&t, &inv).unwrap();
        prop_assert!(max_abs_diff(id.gamma(), &identity(d * d)) < 1e-10);
        let a = adjoint_transfer(&inv);
        let b = invert(&adjoint_transfer(&t)).unwrap();
        prop_assert!(max_abs_diff(a.gamma(), b.gamma()) < 1e-10);
    }

    #[test]
    fn expectation_duality_and_trace(seed in any::<u64>(), d in 2usize..5) {
        let mut g = rng(seed);
        let ch = random_channel(d, 3, &mut g);
        let t = ch.transfer();
        let a = random_hermitian(d, &mut g);
        let rho = random_density_matrix(d, &mut g);
        let out = apply_channel(&t, &rho).unwrap();
        let lhs = trace_product(&a, &out);
        let rhs = trace_product(&apply_channel(&adjoint_transfer(&t), &a).unwrap(), &rho);
        prop_assert!((lhs - rhs).norm() < 1e-10);
        assert_abs_diff_eq!(out.trace().re, 1.0, epsilon = 1e-10);
        prop_assert!(hermitian_residual(&out) < 1e-10);
    }

    #[test]
    fn family_members_are_recovered(seed in any::<u64>(), d in 2usize..5) {
        let mut g = rng(seed);
        let u1 = random_unitary(d, &mut g);
        let u2 = random_unitary(d, &mut g);
        let probs = ProbVector::new(random_probabilities(2, &mut g), 1e-12).unwrap();
        let phi = random_unitary_channel(&probs, &[u1, u2.clone()], 1e-10).unwrap().transfer();
        let gp = GuessPair::new(phi, unitary_channel(&u2, 1e-10).unwrap().transfer()).unwrap();
        let fam = correctable_family(&gp, DEFAULT_KERNEL_TOL).unwrap();
        prop_assert!(fam.n_params() >= d);
        prop_assert!(verify_family(&gp, &fam, 100, seed) <= 1e-9);
    }

    #[test]
    fn perfect_guess_gives_everything(seed in any::<u64>(), d in 2usize..4) {
        let t = random_channel(d, 2, &mut rng(seed)).transfer();
        let gp = GuessPair::new(t.clone(), t).unwrap();
        prop_assert_eq!(correctable_family(&gp, DEFAULT_KERNEL_TOL).unwrap().n_params(), d * d);
    }

    #[test]
    fn modified_observable_stays_hermitian(seed in any::<u64>(), d in 2usize..5) {
        let mut g = rng(seed);
        let phi = random_channel(d, 2, &mut g).transfer();
        let guess = random_channel(d, 2, &mut g).transfer();
        prop_assume!(GuessPair::new(phi.clone(), guess.clone()).is_ok());
        let gp = GuessPair::new(phi, guess).unwrap();
        let a = random_hermitian(d, &mut g);
        let rho = random_density_matrix(d, &mut g);
        let m = modified_observable(&gp, &a).unwrap();
        prop_assert!(hermitian_residual(&m) < 1e-10 * m.norm().max(1.0));
        let rep = evaluate(&gp, &a, &rho).unwrap();
        let bilinear = delta_nd_bilinear(&gp, &a, &rho).unwrap();
        prop_assert!((rep.delta_nd - bilinear).abs() < 1e-10 * rep.ideal.abs().max(1.0));
    }

    #[test]
    fn ru_family_independent_of_guess(seed in any::<u64>()) {
        let mut g = rng(seed);
        let us: Vec<CMatrix> = (0..3).map(|_| random_unitary(3, &mut g)).collect();
        let es = UnitaryErrorSet::new(us, 0, 1e-10).unwrap();
        let base = ru_correctable_family(&es, DEFAULT_KERNEL_TOL);
        for k in 1..3 {
            let other = ru_correctable_family(&es.with_guess(k).unwrap(), DEFAULT_KERNEL_TOL);
            prop_assert!(base.span_distance(&other) <= 1e-9);
        }
        for i in 0..3 {
            prop_assert!(unitary_residual(&gamma_i(&es, i).unwrap()) < 1e-10);
        }
    }

    #[test]
    fn two_unitary_family_has_at_least_d_params(seed in any::<u64>(), d in 2usize..5) {
        let mut g = rng(seed);
        let u1 = random_unitary(d, &mut g);
        let u2 = random_unitary(d, &mut g);
        let (eig, fam) = two_unitary_family(&u1, &u2, DEFAULT_GROUPING_TOL).unwrap();
        prop_assert!(fam.n_params() >= d);
        let expected: usize = eig.multiplicities().iter().map(|m| m * m).sum();
        prop_assert_eq!(fam.n_params(), expected);
        for l in &eig.eigenvalues {
            prop_assert!((l.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn quorum_decomposition_is_linear(seed in any::<u64>(), d in 2usize..5, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let mut g = rng(seed);
        let qb = quorum_basis(d).unwrap();
        let a = random_hermitian(d, &mut g);
        let b = random_hermitian(d, &mut g);
        let ca = decompose(&a, &qb).unwrap();
        let cb = decompose(&b, &qb).unwrap();
        let cab = decompose(&(a.scale(alpha) + b.scale(beta)), &qb).unwrap();
        for k in 0..qb.len() {
            prop_assert!((cab[k] - alpha * ca[k] - beta * cb[k]).abs() < 1e-10);
        }
        prop_assert!(max_abs_diff(&reconstruct(&ca, &qb).unwrap(), &a) < 1e-10);
    }

    #[test]
    fn chi_path_equals_direct_path(seed in any::<u64>(), d in 2usize..4) {
        let mut g = rng(seed);
        let phi = random_channel(d, 2, &mut g).transfer();
        let guess = random_channel(d, 3, &mut g).transfer();
        prop_assume!(GuessPair::new(phi.clone(), guess.clone()).is_ok());
        let gp = GuessPair::new(phi, guess).unwrap();
        let qb = quorum_basis(d).unwrap();
        let a = random_hermitian(d, &mut g);
        let rho = random_density_matrix(d, &mut g);
        let est = deconvolved_estimate(&gp, &a, &rho, &qb, 0, seed).unwrap();
        let direct = evaluate(&gp, &a, &rho).unwrap().deconvolved;
        prop_assert!((est.mean - direct).abs() < 1e-10 * direct.abs().max(1.0));
    }
}
