//! Report files must stay valid against the published JSON schema.

use gatechar::pipeline::{characterize, simulate, CzRunConfig, RunConfig};
use gatechar::{CzParams, GatesetModel};

fn schema() -> serde_json::Value {
    let raw = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json"),
    )
    .expect("schema file present");
    serde_json::from_str(&raw).expect("schema parses")
}

fn assert_valid(instance: &serde_json::Value) {
    let validator = jsonschema::validator_for(&schema()).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "schema violations:\n{}", errors.join("\n"));
}

#[test]
fn full_report_validates() {
    let model = GatesetModel {
        epsilon: 0.06,
        theta: 0.01,
        p_x: 0.002,
        p_z: 0.02,
        r_01: 0.08,
        r_10: 0.05,
        cz: Some(CzParams {
            alpha: 0.03,
            beta: -0.05,
            p_iz: 0.004,
            p_zi: 0.006,
            p_zz: 0.002,
        }),
    };
    let mut config = RunConfig::new(model);
    config.decoherence_depths = vec![4, 8, 12, 16];
    config.rpe_max_exponent = 2;
    config.cz = Some(CzRunConfig {
        phase_max_exponent: 2,
        decay_depths: vec![1, 2, 3, 4],
        shots: 200,
    });
    config.seed = 42;
    let dataset = simulate(&config).unwrap();
    let report = characterize(&config, &dataset, 0.05).unwrap();
    assert_valid(&serde_json::to_value(&report).unwrap());
}

#[test]
fn partial_report_validates() {
    let config = RunConfig::new(GatesetModel {
        p_z: 0.02,
        ..GatesetModel::ideal()
    });
    let full = simulate(&config).unwrap();
    let partial = gatechar::Dataset::new(
        full.records
            .iter()
            .filter(|r| r.id.starts_with("decoherence"))
            .cloned()
            .collect(),
    )
    .unwrap();
    let report = characterize(&config, &partial, 0.05).unwrap();
    assert_valid(&serde_json::to_value(&report).unwrap());
}
