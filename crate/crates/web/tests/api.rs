use dagsim_web::{dag_json, lambda_sweep_json, simulate_json};
use serde_json::Value;

const SMALL: &str = r#"{"miners": 4, "malicious": 1, "blocks": 60, "block_capacity": 5, "mempool_capacity": 50}"#;

#[test]
fn summary_has_one_row_per_miner() {
    let v: Value = serde_json::from_str(&simulate_json(SMALL).unwrap()).unwrap();
    assert_eq!(v["blocks"], 60);
    assert_eq!(v["miners"].as_array().unwrap().len(), 4);
    assert_eq!(v["miners"][0]["strategy"], "rational");
    assert!(v["malicious_over_honest"].is_number());
}

#[test]
fn empty_params_use_defaults() {
    let v: Value = serde_json::from_str(&simulate_json("").unwrap()).unwrap();
    assert_eq!(v["blocks"], 300);
}

#[test]
fn bad_params_are_reported() {
    assert!(simulate_json(r#"{"lambda": 0}"#).unwrap_err().contains("block_creation_time"));
    assert!(simulate_json(r#"{"miners": 2, "malicious": 3}"#).is_err());
    assert!(simulate_json(r#"{"blocks": 1000000}"#).is_err());
    assert!(simulate_json(r#"{"colour": 1}"#).unwrap_err().contains("bad parameters"));
}

#[test]
fn sweep_returns_point_per_lambda() {
    let v: Value = serde_json::from_str(&lambda_sweep_json(SMALL, &[10.0, 600.0]).unwrap()).unwrap();
    let points = v.as_array().unwrap();
    assert_eq!(points.len(), 2);
    assert_eq!(points[1]["lambda"], 600.0);
}

#[test]
fn dag_nodes_reference_known_parents() {
    let v: Value = serde_json::from_str(&dag_json(SMALL).unwrap()).unwrap();
    let nodes = v.as_array().unwrap();
    assert_eq!(nodes.len(), 61);
    for n in &nodes[1..] {
        for p in n["parents"].as_array().unwrap() {
            assert!(p.as_u64().unwrap() < n["id"].as_u64().unwrap());
        }
    }
}
