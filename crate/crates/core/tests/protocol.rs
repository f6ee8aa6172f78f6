use std::collections::BTreeSet;
use std::path::PathBuf;

use proptest::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use spanex_core::oracle::protocol::*;
use spanex_core::oracle::server::{handle_http, handle_line};
use spanex_core::oracle::{MockConfig, MockOracle, Oracle};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/protocol")
}

fn schema() -> Value {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schema/oracle-protocol.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

fn schema_fields(def: &str) -> (BTreeSet<String>, BTreeSet<String>) {
    let s = schema();
    let d = &s["$defs"][def];
    let props = keys(&d["properties"]);
    let required = d["required"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    (props, required)
}

/// Serialized keys must be a superset of `required` and a subset of `properties`.
fn conforms<T: Serialize>(def: &str, msg: &T) {
    let (props, required) = schema_fields(def);
    let got = keys(&serde_json::to_value(msg).unwrap());
    assert!(required.is_subset(&got), "{def}: missing {:?}", required.difference(&got).collect::<Vec<_>>());
    assert!(got.is_subset(&props), "{def}: extra {:?}", got.difference(&props).collect::<Vec<_>>());
}

fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn mock() -> MockOracle {
    MockOracle::new(MockConfig::default())
}

#[test]
fn message_fields_match_schema() {
    let o = mock();
    let (p1, p2) = (toks("Two people are outside"), toks("Nobody is outside"));
    conforms("PredictRequest", &PredictRequest { version: "1".into(), id: 1, part1: p1.clone(), part2: p2.clone() });
    conforms("EncodeRequest", &EncodeRequest { version: "1".into(), id: 1, part1: p1.clone(), part2: p2.clone() });
    conforms("MetaRequest", &MetaRequest { version: "1".into(), id: 1 });
    conforms("PredictResponse", &PredictResponse { version: "1".into(), id: 1, probabilities: o.predict(&p1, &p2).unwrap() });
    conforms("EncodeResponse", &EncodeResponse::new(1, o.encode(&p1, &p2).unwrap()));
    conforms("MetaResponse", &MetaResponse::new(None, o.meta().unwrap()));
    conforms("MetaResponse", &MetaResponse::new(Some(3), o.meta().unwrap()));
    conforms(
        "ErrorResponse",
        &ErrorResponse { version: "1".into(), id: None, error: ErrorBody { code: "internal".into(), message: "x".into() } },
    );
}

#[test]
fn stdio_request_variants_carry_method_tag() {
    let s = schema();
    let variants = s["$defs"]["StdioRequest"]["oneOf"].as_array().unwrap();
    let req = StdioRequest::Predict(PredictRequest { version: "1".into(), id: 1, part1: toks("a"), part2: toks("b") });
    let v = serde_json::to_value(&req).unwrap();
    assert_eq!(v["method"], "predict");
    assert_eq!(keys(&v), keys(&variants[0]["properties"]));
}

fn golden<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(name: &str) -> T {
    let text = std::fs::read_to_string(fixture_dir().join(name)).unwrap();
    let line = text.strip_suffix('\n').unwrap_or(&text);
    let parsed: T = serde_json::from_str(line).unwrap();
    assert_eq!(serde_json::to_string(&parsed).unwrap(), line, "{name} does not round-trip byte-exactly");
    parsed
}

#[test]
fn golden_files_round_trip_byte_exactly() {
    let _: PredictRequest = golden("predict_request.json");
    let _: PredictResponse = golden("predict_response.json");
    let _: EncodeRequest = golden("encode_request.json");
    let _: EncodeResponse = golden("encode_response.json");
    let _: MetaResponse = golden("meta_response.json");
    let _: ErrorResponse = golden("error_response.json");
    let _: StdioRequest = golden("stdio_request.json");
}

#[test]
fn mock_server_reproduces_golden_responses() {
    let o = mock();
    let read = |n: &str| std::fs::read_to_string(fixture_dir().join(n)).unwrap().trim_end().to_string();
    assert_eq!(handle_http(&o, "POST", "/v1/predict", &read("predict_request.json")), (200, read("predict_response.json")));
    assert_eq!(handle_http(&o, "POST", "/v1/encode", &read("encode_request.json")), (200, read("encode_response.json")));
    assert_eq!(handle_http(&o, "GET", "/v1/meta", ""), (200, read("meta_response.json")));
    let empty = r#"{"version":"1","id":7,"part1":[],"part2":["x"]}"#;
    assert_eq!(handle_http(&o, "POST", "/v1/predict", empty), (400, read("error_response.json")));
    let line = handle_line(&o, &read("stdio_request.json"));
    let v: PredictResponse = serde_json::from_str(&line).unwrap();
    assert_eq!(v.id, 5);
}

#[test]
fn version_mismatch_is_typed() {
    assert!(matches!(check_version("2"), Err(spanex_core::oracle::OracleError::VersionMismatch { .. })));
    let bad = r#"{"version":"2","id":1,"probabilities":[1.0]}"#;
    let r: PredictResponse = serde_json::from_str(bad).unwrap();
    assert!(check_version(&r.version).is_err());
}

#[test]
fn unknown_fields_are_rejected() {
    let extra = r#"{"version":"1","id":1,"probabilities":[1.0],"logits":[0.0]}"#;
    assert!(serde_json::from_str::<PredictResponse>(extra).is_err());
}

fn word() -> impl Strategy<Value = String> {
    "[a-zA-Z.,'\"\\\\ é]{1,6}"
}

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL
}

fn roundtrip<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(msg: &T) {
    let text = serde_json::to_string(msg).unwrap();
    let back: T = serde_json::from_str(&text).unwrap();
    assert_eq!(&back, msg);
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}

proptest! {
    #[test]
    fn predict_messages_round_trip(
        id in any::<u64>(),
        p1 in prop::collection::vec(word(), 1..5),
        p2 in prop::collection::vec(word(), 1..5),
        probs in prop::collection::vec(finite(), 1..4),
    ) {
        roundtrip(&PredictRequest { version: PROTOCOL_VERSION.into(), id, part1: p1.clone(), part2: p2.clone() });
        roundtrip(&StdioRequest::Encode(EncodeRequest { version: PROTOCOL_VERSION.into(), id, part1: p1, part2: p2 }));
        roundtrip(&PredictResponse { version: PROTOCOL_VERSION.into(), id, probabilities: probs });
    }

    #[test]
    fn encode_and_meta_messages_round_trip(
        id in any::<u64>(),
        p1 in prop::collection::vec(word(), 1..4),
        p2 in prop::collection::vec(word(), 1..4),
        cls in prop::collection::vec(finite(), 1..8),
        w in prop::collection::vec(prop::collection::vec(finite(), 2), 1..4),
        meta_id in prop::option::of(any::<u64>()),
    ) {
        let t = p1.len() + p2.len();
        let attention = vec![vec![vec![1.0 / t as f64; t]; t]; 2];
        roundtrip(&EncodeResponse {
            version: PROTOCOL_VERSION.into(), id, boundary: p1.len(), part1: p1, part2: p2,
            attention, cls, head_count: 2, probabilities: vec![0.5, 0.5], predicted: 0,
        });
        roundtrip(&MetaResponse {
            version: PROTOCOL_VERSION.into(), id: meta_id, n: w.len(), a: 1, m: 2,
            classifier: w, label_names: vec!["x".into(), "y".into()],
        });
        roundtrip(&ErrorResponse {
            version: PROTOCOL_VERSION.into(), id: meta_id,
            error: ErrorBody { code: "bad_request".into(), message: "m".into() },
        });
    }
}
