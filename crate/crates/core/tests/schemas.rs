//! Emitted documents validate against the shipped JSON schemas.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde_json::Value;

use qdeconv::deconvolution::{correctable_family, evaluate, GuessPair};
use qdeconv::io::{ChannelPayload, ChannelSpec, FamilyDoc, OperatorDoc};
use qdeconv::models::{bitflip_correlated, bitflip_uncorrelated, pauli, qutrit_extreme_channel};
use qdeconv::scenarios::{list_scenarios, run_scenario};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn validator(name: &str) -> jsonschema::Validator {
    let text = std::fs::read_to_string(root().join("schemas").join(name)).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, doc: &Value) {
    let errors: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}\n{doc}");
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap()
}

#[test]
fn channel_specs() {
    let v = validator("channel-spec.schema.json");
    let memory = ChannelSpec {
        schema_version: 1,
        name: "memory".into(),
        dim: 4,
        payload: ChannelPayload::ConvexCombination {
            weights: vec![0.5, 0.5],
            components: vec![
                ChannelSpec::from_kraus("u", &bitflip_uncorrelated(0.2)),
                ChannelSpec::from_kraus("c", &bitflip_correlated(0.2)),
            ],
        },
    };
    let specs = [
        ChannelSpec::from_kraus("qutrit", &qutrit_extreme_channel(1.0)),
        ChannelSpec::unitary("x", &pauli(1)),
        ChannelSpec::random_unitary("paulis", &[pauli(0), pauli(3)], Some(&[0.9, 0.1])),
        memory,
    ];
    for s in &specs {
        assert_valid(&v, &to_value(s));
    }
    for entry in std::fs::read_dir(root().join("data")).unwrap() {
        let path = entry.unwrap().path();
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        if doc.get("kind").is_some() {
            assert_valid(&v, &doc);
        }
    }
    let bad: Value = serde_json::json!({"kind": "kraus", "dim": 2, "kraus": [[[1, 0]]], "extra": 1});
    assert!(!v.is_valid(&bad));
    let bad: Value = serde_json::json!({"kind": "teleport", "dim": 2});
    assert!(!v.is_valid(&bad));
}

#[test]
fn operators() {
    let v = validator("operator.schema.json");
    assert_valid(&v, &to_value(&OperatorDoc::new("y", &pauli(2))));
    assert!(!v.is_valid(&serde_json::json!({"matrix": [[1.0]]})));
}

#[test]
fn family_and_report() {
    let gp = GuessPair::new(
        qutrit_extreme_channel(1.0).transfer(),
        qutrit_extreme_channel(0.0).transfer(),
    )
    .unwrap();
    let fam = correctable_family(&gp, 1e-8).unwrap();
    assert_valid(
        &validator("observable-family.schema.json"),
        &to_value(&FamilyDoc::new(&fam)),
    );

    let rho = qdeconv::random::random_density_matrix(3, &mut qdeconv::random::rng(1));
    let rep = evaluate(&gp, &fam.basis()[0], &rho).unwrap();
    assert_valid(&validator("deconv-report.schema.json"), &to_value(&rep));
}

#[test]
fn scenario_results() {
    let v = validator("scenario-result.schema.json");
    for name in list_scenarios() {
        let res = run_scenario(name, &BTreeMap::new(), 7).unwrap();
        assert_valid(&v, &to_value(&res));
    }
}
