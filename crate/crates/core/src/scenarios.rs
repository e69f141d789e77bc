//! Named, seeded end-to-end runs: build the channels, extract the family and
//! verify it, recording every check with its residual and tolerance.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::channel::{
    adjoint_transfer, apply_channel, compose, random_unitary_channel, unitary_channel, ProbVector, TransferMatrix,
};
use crate::deconvolution::{
    correctable_family, evaluate, family_over_parameter, modified_observable, verify_operators, GuessPair,
    ObservableFamily, ParameterProbe, FAMILY_DELTA_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{
    identity, kron_vec, max_abs_diff, projection_residual, r, real_matrix, CMatrix, CVector, DEFAULT_KERNEL_TOL, I,
    ONE, ZERO,
};
use crate::models::*;
use crate::random::{random_channel, random_probabilities, random_unitary, rng_stream};
use crate::random_unitary::{
    commutant_family, gamma_i, invariant_subspace, ru_correctable_family, two_unitary_family, unitary_eigen,
    verify_ru_family, UnitaryErrorSet, DEFAULT_GROUPING_TOL,
};

const SPAN_TOL: f64 = 1e-9;
const VALUE_TOL: f64 = 1e-10;

/// Registered scenarios with a one-line description.
pub const SCENARIOS: &[(&str, &str)] = &[
    (
        "qutrit-extreme",
        "extreme unital qutrit channel with an unknown phase, guessed at phase 0",
    ),
    (
        "bitflip-memory",
        "two-qubit bit flip with unknown memory, guessed fully correlated",
    ),
    (
        "ru-three-unitaries",
        "three known qutrit unitaries with unknown probabilities",
    ),
    ("ru-two-qubit", "two qubit unitaries with a non-degenerate W"),
    ("ru-degenerate", "two qutrit unitaries with a degenerate W"),
    (
        "pauli-irrep",
        "Pauli errors form an irreducible set: only the identity survives",
    ),
    (
        "partial-recovery",
        "observable outside the bit-flip family on a one-parameter state family",
    ),
    (
        "equivalence-covariance",
        "families transform covariantly under unitary pre- and post-processing",
    ),
    ("negative-control", "perturbed family member; verification must fail"),
];

pub fn list_scenarios() -> Vec<&'static str> {
    SCENARIOS.iter().map(|(n, _)| *n).collect()
}

/// One labelled check; passes iff `residual <= tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub pass: bool,
    pub residual: f64,
    pub tolerance: f64,
}

impl Check {
    /// Non-finite residuals are stored as `f64::MAX` so reports stay valid JSON.
    pub fn at_most(label: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        let residual = if residual.is_finite() { residual } else { f64::MAX };
        Self {
            label: label.into(),
            pass: residual <= tolerance,
            residual,
            tolerance,
        }
    }

    pub fn equal(label: impl Into<String>, found: usize, expected: usize) -> Self {
        Self::at_most(label, found.abs_diff(expected) as f64, 0.0)
    }

    pub fn holds(label: impl Into<String>, ok: bool) -> Self {
        Self::at_most(label, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub schema_version: u32,
    pub scenario: String,
    pub description: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, f64>,
    /// Parameter values at which kernels were intersected, then the check values.
    pub probes: Vec<f64>,
    pub family_dim: usize,
    pub expected_family_dim: usize,
    pub max_delta_nd: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ScenarioResult {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

struct Params {
    values: BTreeMap<String, f64>,
}

impl Params {
    fn new(defaults: &[(&str, f64)], overrides: &BTreeMap<String, String>) -> Result<Self> {
        let mut values: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (key, raw) in overrides {
            let slot = values.get_mut(key).ok_or_else(|| Error::InvalidOverride {
                key: key.clone(),
                reason: format!(
                    "unknown parameter; expected one of: {}",
                    defaults.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(", ")
                ),
            })?;
            *slot = raw.trim().parse().map_err(|_| Error::InvalidOverride {
                key: key.clone(),
                reason: format!("`{raw}` is not a number"),
            })?;
            if !slot.is_finite() {
                return Err(Error::InvalidOverride {
                    key: key.clone(),
                    reason: "value must be finite".into(),
                });
            }
        }
        Ok(Self { values })
    }

    fn get(&self, key: &str) -> f64 {
        self.values[key]
    }

    fn count(&self, key: &str) -> Result<usize> {
        let v = self.get(key);
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::InvalidOverride {
                key: key.into(),
                reason: format!("expected a positive integer, got {v}"),
            });
        }
        Ok(v as usize)
    }

    fn within(&self, key: &str, lo: f64, hi: f64) -> Result<f64> {
        let v = self.get(key);
        if !(lo..=hi).contains(&v) {
            return Err(Error::InvalidOverride {
                key: key.into(),
                reason: format!("{v} outside [{lo}, {hi}]"),
            });
        }
        Ok(v)
    }
}

struct Outcome {
    probes: Vec<f64>,
    family_dim: usize,
    expected_family_dim: usize,
    max_delta_nd: f64,
    checks: Vec<Check>,
}

/// Runs a registered scenario with `key=value` parameter overrides.
pub fn run_scenario(name: &str, overrides: &BTreeMap<String, String>, seed: u64) -> Result<ScenarioResult> {
    let description = SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| d.to_string())
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
    let (params, outcome) = match name {
        "qutrit-extreme" => {
            let p = Params::new(&[("probes", 3.0), ("states", 100.0)], overrides)?;
            let o = qutrit_extreme(&p, seed)?;
            (p, o)
        }
        "bitflip-memory" => {
            let p = Params::new(&[("p", 0.25), ("probes", 5.0), ("states", 100.0)], overrides)?;
            let o = bitflip_memory_scenario(&p, seed)?;
            (p, o)
        }
        "ru-three-unitaries" => {
            let p = Params::new(&[("distributions", 10.0), ("states", 50.0)], overrides)?;
            let o = ru_three(&p, seed)?;
            (p, o)
        }
        "ru-two-qubit" => {
            let p = Params::new(&[("distributions", 10.0), ("states", 50.0)], overrides)?;
            let o = ru_pair(&p, seed, false)?;
            (p, o)
        }
        "ru-degenerate" => {
            let p = Params::new(&[("distributions", 10.0), ("states", 50.0)], overrides)?;
            let o = ru_pair(&p, seed, true)?;
            (p, o)
        }
        "pauli-irrep" => {
            let p = Params::new(&[("distributions", 10.0), ("states", 50.0)], overrides)?;
            let o = pauli_irrep(&p, seed)?;
            (p, o)
        }
        "partial-recovery" => {
            let p = Params::new(
                &[("p", 0.3), ("mu", 0.5), ("x", 0.5), ("grid", 5.0), ("probes", 5.0)],
                overrides,
            )?;
            let o = partial_recovery(&p, seed)?;
            (p, o)
        }
        "equivalence-covariance" => {
            let p = Params::new(&[("tuples", 20.0)], overrides)?;
            let o = covariance(&p, seed)?;
            (p, o)
        }
        "negative-control" => {
            let p = Params::new(&[("epsilon", 0.05), ("states", 100.0)], overrides)?;
            let o = negative_control(&p, seed)?;
            (p, o)
        }
        _ => unreachable!("registered scenario without a runner"),
    };
    let mut checks = vec![Check::equal(
        "family dimension",
        outcome.family_dim,
        outcome.expected_family_dim,
    )];
    checks.extend(outcome.checks);
    let passed = checks.iter().all(|c| c.pass);
    Ok(ScenarioResult {
        schema_version: crate::io::SCHEMA_VERSION,
        scenario: name.to_string(),
        description,
        seed,
        parameters: params.values,
        probes: outcome.probes,
        family_dim: outcome.family_dim,
        expected_family_dim: outcome.expected_family_dim,
        max_delta_nd: outcome.max_delta_nd,
        checks,
        passed,
    })
}

fn basis_op(d: usize, i: usize, j: usize, v: num_complex::Complex64) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = v;
    m
}

/// Diagonal entries plus the Hermitian span of the `(1, 2)` coherence.
pub fn qutrit_family_pattern() -> ObservableFamily {
    let ops = [
        basis_op(3, 0, 0, ONE),
        basis_op(3, 1, 1, ONE),
        basis_op(3, 2, 2, ONE),
        basis_op(3, 1, 2, ONE) + basis_op(3, 2, 1, ONE),
        basis_op(3, 1, 2, I) + basis_op(3, 2, 1, -I),
    ];
    ObservableFamily::from_operators(3, &ops).expect("3x3 operators")
}

/// Pauli products recoverable under the bit-flip memory channel: exactly one
/// factor in `{Y, Z}`, or both in `{I, X}`.
pub fn bitflip_family_pattern() -> ObservableFamily {
    let ops: Vec<CMatrix> = bitflip_flipping_products()
        .into_iter()
        .chain((0..2).flat_map(|i| (0..2).map(move |j| (i, j))))
        .map(|(i, j)| pauli2(i, j))
        .collect();
    ObservableFamily::from_operators(4, &ops).expect("4x4 operators")
}

/// `sigma_i ⊗ sigma_j` with exactly one factor in `{Y, Z}`.
fn bitflip_flipping_products() -> Vec<(usize, usize)> {
    (0..2)
        .flat_map(|i| (2..4).flat_map(move |j| [(i, j), (j, i)]))
        .collect()
}

fn qutrit_extreme(p: &Params, seed: u64) -> Result<Outcome> {
    let guess = qutrit_extreme_channel(0.0).transfer();
    let mut probe = ParameterProbe::spread(0.0, TAU, p.count("probes")?, seed);
    let n_states = p.count("states")?;
    let pf = family_over_parameter(
        |phi| Ok(qutrit_extreme_channel(phi).transfer()),
        &guess,
        &probe,
        DEFAULT_KERNEL_TOL,
        seed,
    )?;
    let mut max_delta = pf.max_delta;
    for &phi in probe.probes.iter().chain(&probe.checks) {
        let gp = GuessPair::new(qutrit_extreme_channel(phi).transfer(), guess.clone())?;
        max_delta = max_delta.max(verify_operators(&gp, pf.family.basis(), n_states, seed));
    }
    let checks = vec![
        Check::at_most(
            "span matches block pattern",
            pf.family.span_distance(&qutrit_family_pattern()),
            SPAN_TOL,
        ),
        Check::at_most("max delta_nd over phases and states", max_delta, FAMILY_DELTA_TOL),
    ];
    let probes = std::mem::take(&mut probe.probes)
        .into_iter()
        .chain(probe.checks)
        .collect();
    Ok(Outcome {
        probes,
        family_dim: pf.family.n_params(),
        expected_family_dim: 5,
        max_delta_nd: max_delta,
        checks,
    })
}

/// Checks the modified observable of a random family member against the
/// `(1-2p)^{-1}` scaling, and the forward adjoint against the `(1-2p)` scaling.
pub fn bitflip_modified_residuals(p: f64, seed: u64) -> Result<(f64, f64)> {
    let guess = bitflip_correlated(p).transfer();
    let gp = GuessPair::new(guess.clone(), guess.clone())?;
    let mut g = rng_stream(seed, 0);
    let mut coeff = || -> f64 { rand::Rng::random::<f64>(&mut g) * 2.0 - 1.0 };
    let mut flipping = CMatrix::zeros(4, 4);
    for (i, j) in bitflip_flipping_products() {
        flipping += pauli2(i, j).scale(coeff());
    }
    let mut fixed = CMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            fixed += pauli2(i, j).scale(coeff());
        }
    }
    let a = &flipping + &fixed;
    let modified = modified_observable(&gp, &a)?;
    let inverse_expected = flipping.unscale(1.0 - 2.0 * p) + &fixed;
    let forward = apply_channel(&adjoint_transfer(&guess), &a)?;
    let forward_expected = flipping.scale(1.0 - 2.0 * p) + &fixed;
    Ok((
        max_abs_diff(&modified, &inverse_expected),
        max_abs_diff(&forward, &forward_expected),
    ))
}

fn bitflip_memory_scenario(p: &Params, seed: u64) -> Result<Outcome> {
    let prob = p.within("p", 0.0, 0.5)?;
    let guess = bitflip_correlated(prob).transfer();
    let mut probe = ParameterProbe::spread(0.0, 1.0, p.count("probes")?, seed);
    let pf = family_over_parameter(
        |mu| Ok(bitflip_memory_transfer(prob, mu)),
        &guess,
        &probe,
        DEFAULT_KERNEL_TOL,
        seed,
    )?;
    let n_states = p.count("states")?;
    let mut max_delta = pf.max_delta;
    for &mu in probe.probes.iter().chain(&probe.checks) {
        let gp = GuessPair::new(bitflip_memory_transfer(prob, mu), guess.clone())?;
        max_delta = max_delta.max(verify_operators(&gp, pf.family.basis(), n_states, seed));
    }
    let (inv_res, fwd_res) = bitflip_modified_residuals(prob, seed)?;
    let singular = matches!(
        GuessPair::new(bitflip_memory_transfer(0.5, 0.5), bitflip_correlated(0.5).transfer()),
        Err(Error::SingularChannel { .. })
    );
    let checks = vec![
        Check::at_most(
            "span matches 12 Pauli products",
            pf.family.span_distance(&bitflip_family_pattern()),
            SPAN_TOL,
        ),
        Check::at_most(
            "max delta_nd over memory values and states",
            max_delta,
            FAMILY_DELTA_TOL,
        ),
        Check::at_most("modified observable has (1-2p)^-1 scaling", inv_res, VALUE_TOL),
        Check::at_most("forward adjoint has (1-2p) scaling", fwd_res, VALUE_TOL),
        Check::holds("p = 0.5 guess is singular", singular),
    ];
    let probes = std::mem::take(&mut probe.probes)
        .into_iter()
        .chain(probe.checks)
        .collect();
    Ok(Outcome {
        probes,
        family_dim: pf.family.n_params(),
        expected_family_dim: 12,
        max_delta_nd: max_delta,
        checks,
    })
}

fn e3(k: usize) -> CVector {
    CVector::from_fn(3, |i, _| if i == k { ONE } else { ZERO })
}

fn span_residual(span: &[CVector], targets: &[CVector]) -> f64 {
    targets.iter().map(|t| projection_residual(span, t)).fold(0.0, f64::max)
}

/// Distance between a spectrum and the expected eigenvalues, matching each
/// expected value to the nearest unused eigenvalue.
fn spectrum_residual(found: &[num_complex::Complex64], expected: &[num_complex::Complex64]) -> f64 {
    if found.len() != expected.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; found.len()];
    let mut worst: f64 = 0.0;
    for e in expected {
        let (k, dist) = found
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, f)| (k, (f - e).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("same length");
        used[k] = true;
        worst = worst.max(dist);
    }
    worst
}

/// Residuals of the two invariant subspaces against their listed spanning vectors.
pub fn example3_subspace_residuals() -> Result<[(usize, f64); 2]> {
    let es = UnitaryErrorSet::new(example3_unitaries().to_vec(), 0, 1e-10)?;
    let pairs = [(0, 0), (1, 1), (2, 2), (0, 2), (2, 0)];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mu = [
        CVector::from_vec(vec![r(h), ZERO, r(-h)]),
        CVector::from_vec(vec![r(h), ZERO, r(h)]),
        e3(1),
    ];
    let s2 = invariant_subspace(&gamma_i(&es, 1)?, DEFAULT_KERNEL_TOL);
    let t2: Vec<CVector> = pairs.iter().map(|&(a, b)| kron_vec(&e3(a), &e3(b))).collect();
    let s3 = invariant_subspace(&gamma_i(&es, 2)?, DEFAULT_KERNEL_TOL);
    let t3: Vec<CVector> = pairs
        .iter()
        .map(|&(a, b)| kron_vec(&mu[a], &mu[b].conjugate()))
        .collect();
    Ok([(s2.len(), span_residual(&s2, &t2)), (s3.len(), span_residual(&s3, &t3))])
}

pub fn example3_family_pattern() -> ObservableFamily {
    let ops = [
        real_matrix(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
        real_matrix(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
        real_matrix(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
    ];
    ObservableFamily::from_operators(3, &ops).expect("3x3 operators")
}

fn ru_three(p: &Params, seed: u64) -> Result<Outcome> {
    let us = example3_unitaries();
    let es = UnitaryErrorSet::new(us.to_vec(), 0, 1e-10)?;
    let fam = ru_correctable_family(&es, DEFAULT_KERNEL_TOL);
    let [(n2, r2), (n3, r3)] = example3_subspace_residuals()?;
    let spec = unitary_eigen(&(us[1].adjoint() * &us[0]), DEFAULT_GROUPING_TOL)?;
    let max_delta = verify_ru_family(&es, &fam, p.count("distributions")?, p.count("states")?, seed)?;
    let checks = vec![
        Check::at_most(
            "U2^dag U1 eigenvalues {1, -i, 1}",
            spectrum_residual(&spec.eigenvalues, &[ONE, -I, ONE]),
            VALUE_TOL,
        ),
        Check::equal("S2 dimension", n2, 5),
        Check::at_most("S2 contains listed vectors", r2, SPAN_TOL),
        Check::equal("S3 dimension", n3, 5),
        Check::at_most("S3 contains listed vectors", r3, SPAN_TOL),
        Check::at_most(
            "family matches [[a,0,b],[0,c,0],[b,0,a]]",
            fam.span_distance(&example3_family_pattern()),
            SPAN_TOL,
        ),
        Check::at_most(
            "max delta_nd over distributions and states",
            max_delta,
            FAMILY_DELTA_TOL,
        ),
    ];
    Ok(Outcome {
        probes: vec![],
        family_dim: fam.n_params(),
        expected_family_dim: 3,
        max_delta_nd: max_delta,
        checks,
    })
}

fn ru_pair(p: &Params, seed: u64, degenerate: bool) -> Result<Outcome> {
    let (u1, u2) = if degenerate {
        example5_unitaries()
    } else {
        example4_unitaries()
    };
    let (eig, fam) = two_unitary_family(&u1, &u2, DEFAULT_GROUPING_TOL)?;
    let es = UnitaryErrorSet::new(vec![u1.clone(), u2.clone()], 1, 1e-10)?;
    let general = ru_correctable_family(&es, DEFAULT_KERNEL_TOL);
    let max_delta = verify_ru_family(&es, &fam, p.count("distributions")?, p.count("states")?, seed)?;
    let mut checks = vec![Check::at_most(
        "agrees with invariant-subspace construction",
        fam.span_distance(&general),
        SPAN_TOL,
    )];
    let expected_family_dim = if degenerate {
        let w = real_matrix(3, 3, &[2.0, 2.0, -1.0, 2.0, -1.0, 2.0, -1.0, 2.0, 2.0]).unscale(3.0);
        checks.push(Check::at_most(
            "W matches closed form",
            max_abs_diff(&(u1.adjoint() * &u2), &w),
            VALUE_TOL,
        ));
        checks.push(Check::at_most(
            "W eigenvalues {1, -1, 1}",
            spectrum_residual(&eig.eigenvalues, &[ONE, -ONE, ONE]),
            VALUE_TOL,
        ));
        5
    } else {
        let pattern = ObservableFamily::from_operators(2, &[identity(2), real_matrix(2, 2, &[2.0, 1.0, 1.0, 0.0])])?;
        checks.push(Check::at_most(
            "W eigenvalues {1, -1}",
            spectrum_residual(&eig.eigenvalues, &[ONE, -ONE]),
            VALUE_TOL,
        ));
        checks.push(Check::at_most(
            "family matches [[a+2b,b],[b,a]]",
            fam.span_distance(&pattern),
            SPAN_TOL,
        ));
        2
    };
    checks.push(Check::at_most(
        "max delta_nd over distributions and states",
        max_delta,
        FAMILY_DELTA_TOL,
    ));
    Ok(Outcome {
        probes: vec![],
        family_dim: fam.n_params(),
        expected_family_dim,
        max_delta_nd: max_delta,
        checks,
    })
}

fn pauli_irrep(p: &Params, seed: u64) -> Result<Outcome> {
    let us: Vec<CMatrix> = (0..4).map(pauli).collect();
    let es = UnitaryErrorSet::new(us.clone(), 0, 1e-12)?;
    let fam = ru_correctable_family(&es, DEFAULT_KERNEL_TOL);
    let comm = commutant_family(&us, DEFAULT_KERNEL_TOL)?;
    let max_delta = verify_ru_family(&es, &fam, p.count("distributions")?, p.count("states")?, seed)?;
    let checks = vec![
        Check::at_most(
            "family is the identity",
            fam.projection_residual(&identity(2))?,
            SPAN_TOL,
        ),
        Check::equal("commutant dimension", comm.n_params(), 1),
        Check::at_most(
            "commutant is the identity",
            comm.projection_residual(&identity(2))?,
            SPAN_TOL,
        ),
        Check::at_most(
            "max delta_nd over distributions and states",
            max_delta,
            FAMILY_DELTA_TOL,
        ),
    ];
    Ok(Outcome {
        probes: vec![],
        family_dim: fam.n_params(),
        expected_family_dim: 1,
        max_delta_nd: max_delta,
        checks,
    })
}

/// `(delta_exp, delta_nd)` of the partial-recovery observable at `(p, mu, x)`.
pub fn partial_recovery_deltas(p: f64, mu: f64, x: f64) -> Result<(f64, f64)> {
    let gp = GuessPair::new(bitflip_memory_transfer(p, mu), bitflip_correlated(p).transfer())?;
    let rep = evaluate(&gp, &partial_recovery_observable(), &partial_recovery_state(x))?;
    Ok((rep.delta_exp, rep.delta_nd))
}

/// Interior grid points `lo + (hi - lo) k / (n + 1)`, or `k / n` when `hi` is included.
fn grid(lo: f64, hi: f64, n: usize, include_hi: bool) -> Vec<f64> {
    let denom = if include_hi { n } else { n + 1 } as f64;
    (1..=n).map(|k| lo + (hi - lo) * k as f64 / denom).collect()
}

/// Grid points of `(0, 0.5) x (0, 1) x (0, 1]` where `delta_nd < delta_exp` fails.
pub fn partial_recovery_violations(n: usize) -> Result<usize> {
    let mut bad = 0;
    for &p in &grid(0.0, 0.5, n, false) {
        for &mu in &grid(0.0, 1.0, n, false) {
            for &x in &grid(0.0, 1.0, n, true) {
                let (exp, nd) = partial_recovery_deltas(p, mu, x)?;
                if nd >= exp {
                    bad += 1;
                }
            }
        }
    }
    Ok(bad)
}

fn partial_recovery(params: &Params, seed: u64) -> Result<Outcome> {
    let p = params.within("p", 0.0, 0.5 - 1e-6)?;
    let mu = params.within("mu", 0.0, 1.0)?;
    let x = params.within("x", 0.0, 1.0)?;
    let guess = bitflip_correlated(p).transfer();
    let mut probe = ParameterProbe::spread(0.0, 1.0, params.count("probes")?, seed);
    let pf = family_over_parameter(
        |m| Ok(bitflip_memory_transfer(p, m)),
        &guess,
        &probe,
        DEFAULT_KERNEL_TOL,
        seed,
    )?;
    let (exp, nd) = partial_recovery_deltas(p, mu, x)?;
    let exp_formula = p * ((1.0 - p) * (1.0 - mu) + x);
    let nd_formula = p * (1.0 - p) * (1.0 - mu);
    let gp = GuessPair::new(bitflip_memory_transfer(p, mu), guess)?;
    let improved = evaluate(&gp, &partial_recovery_observable(), &partial_recovery_state(x))?.improved;
    let checks = vec![
        Check::at_most(
            "observable lies outside the family",
            if pf.family.contains(&partial_recovery_observable(), 1e-6) {
                1.0
            } else {
                0.0
            },
            0.0,
        ),
        Check::at_most(
            "delta_exp matches p[(1-p)(1-mu)+x]",
            (exp - exp_formula).abs(),
            VALUE_TOL,
        ),
        Check::at_most("delta_nd matches p(1-p)(1-mu)", (nd - nd_formula).abs(), VALUE_TOL),
        Check::at_most(
            "delta_exp matches 4p[(1-p)(1-mu)+x]",
            (exp - 4.0 * exp_formula).abs(),
            VALUE_TOL,
        ),
        Check::at_most(
            "delta_nd matches 4p(1-p)(1-mu)",
            (nd - 4.0 * nd_formula).abs(),
            VALUE_TOL,
        ),
        Check::holds("delta_nd < delta_exp", improved),
        Check::at_most(
            "grid points without improvement",
            partial_recovery_violations(params.count("grid")?)? as f64,
            0.0,
        ),
    ];
    let probes = std::mem::take(&mut probe.probes)
        .into_iter()
        .chain(probe.checks)
        .collect();
    Ok(Outcome {
        probes,
        family_dim: pf.family.n_params(),
        expected_family_dim: 12,
        max_delta_nd: pf.max_delta,
        checks,
    })
}

/// One covariance instance: `(n_params before, n_params after, worst residual)`
/// for `(V o Phi o U, V o Phi_g o U)` against the conjugated family `U^dag A U`.
pub fn covariance_check(
    phi: &TransferMatrix,
    phi_g: &TransferMatrix,
    u: &CMatrix,
    v: &CMatrix,
) -> Result<(usize, usize, f64)> {
    let tu = unitary_channel(u, 1e-10)?.transfer();
    let tv = unitary_channel(v, 1e-10)?.transfer();
    let wrap = |t: &TransferMatrix| -> Result<TransferMatrix> { compose(&tv, &compose(t, &tu)?) };
    let fam = correctable_family(&GuessPair::new(phi.clone(), phi_g.clone())?, DEFAULT_KERNEL_TOL)?;
    let moved = correctable_family(&GuessPair::new(wrap(phi)?, wrap(phi_g)?)?, DEFAULT_KERNEL_TOL)?;
    let mut worst: f64 = 0.0;
    for a in fam.basis() {
        worst = worst.max(moved.projection_residual(&(u.adjoint() * a * u))?);
    }
    Ok((fam.n_params(), moved.n_params(), worst))
}

/// Seeded instance `k`: even `k` mixes two unitaries and guesses the second; odd `k`
/// takes a generic channel and guesses it composed with a diagonal unitary.
pub fn covariance_tuple(k: usize, seed: u64) -> Result<(TransferMatrix, TransferMatrix, CMatrix, CMatrix)> {
    let d = 2 + k % 4 / 2;
    let mut g = rng_stream(seed, k as u64);
    let (phi, phi_g) = if k.is_multiple_of(2) {
        let u1 = random_unitary(d, &mut g);
        let u2 = random_unitary(d, &mut g);
        let probs = ProbVector::new(random_probabilities(2, &mut g), 1e-12)?;
        let phi = random_unitary_channel(&probs, &[u1, u2.clone()], 1e-10)?.transfer();
        (phi, unitary_channel(&u2, 1e-10)?.transfer())
    } else {
        let phi = random_channel(d, 2, &mut g).transfer();
        let phases = CVector::from_fn(d, |_, _| {
            num_complex::Complex64::from_polar(1.0, TAU * rand::Rng::random::<f64>(&mut g))
        });
        let diag = unitary_channel(&CMatrix::from_diagonal(&phases), 1e-10)?.transfer();
        let phi_g = compose(&phi, &diag)?;
        (phi, phi_g)
    };
    let u = random_unitary(d, &mut g);
    let v = random_unitary(d, &mut g);
    Ok((phi, phi_g, u, v))
}

fn covariance(p: &Params, seed: u64) -> Result<Outcome> {
    let n = p.count("tuples")?;
    let (mut before, mut after, mut worst, mut nontrivial) = (0, 0, 0.0f64, 0);
    for k in 0..n {
        let (phi, phi_g, u, v) = covariance_tuple(k, seed)?;
        let (a, b, res) = covariance_check(&phi, &phi_g, &u, &v)?;
        before += a;
        after += b;
        worst = worst.max(res);
        if a > 1 {
            nontrivial += 1;
        }
    }
    let checks = vec![
        Check::at_most("conjugated members lie in transformed family", worst, SPAN_TOL),
        Check::equal("instances with more than the identity", nontrivial, n),
    ];
    Ok(Outcome {
        probes: vec![],
        family_dim: after,
        expected_family_dim: before,
        max_delta_nd: 0.0,
        checks,
    })
}

fn negative_control(p: &Params, seed: u64) -> Result<Outcome> {
    let eps = p.get("epsilon");
    let gp = GuessPair::new(
        qutrit_extreme_channel(1.0).transfer(),
        qutrit_extreme_channel(0.0).transfer(),
    )?;
    let fam = correctable_family(&gp, DEFAULT_KERNEL_TOL)?;
    let n_states = p.count("states")?;
    let clean = verify_operators(&gp, fam.basis(), n_states, seed);
    // a level-(0,1) coherence is outside the family
    let kick = (basis_op(3, 0, 1, ONE) + basis_op(3, 1, 0, ONE)).scale(eps);
    let perturbed = fam.combine(&vec![1.0; fam.n_params()]) + kick;
    let delta = verify_operators(&gp, &[perturbed], n_states, seed);
    let checks = vec![
        Check::at_most("unperturbed family verifies", clean, FAMILY_DELTA_TOL),
        Check::at_most("perturbed member verifies", delta, FAMILY_DELTA_TOL),
    ];
    Ok(Outcome {
        probes: vec![1.0],
        family_dim: fam.n_params(),
        expected_family_dim: 5,
        max_delta_nd: delta,
        checks,
    })
}
