//! Request handling for serving any [`Oracle`] over the protocol.
//!
//! Transport-independent: the caller owns the socket or the pipes and passes
//! raw bodies or lines in.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;

use super::protocol::*;
use super::{codes, Oracle, OracleError};

fn error_json(id: Option<u64>, code: &str, message: impl Into<String>) -> String {
    let body = ErrorResponse {
        version: PROTOCOL_VERSION.to_string(),
        id,
        error: ErrorBody { code: code.to_string(), message: message.into() },
    };
    serde_json::to_string(&body).expect("error body serializes")
}

fn status_for(code: &str) -> u16 {
    match code {
        codes::NOT_FOUND => 404,
        codes::INTERNAL => 500,
        _ => 400,
    }
}

fn oracle_error(id: Option<u64>, e: OracleError) -> (u16, String) {
    let (code, message) = match e {
        OracleError::Protocol { code, message } => (code, message),
        OracleError::VersionMismatch { .. } => (codes::VERSION_MISMATCH.to_string(), e.to_string()),
        other => (codes::INTERNAL.to_string(), other.to_string()),
    };
    (status_for(&code), error_json(id, &code, message))
}

fn parse<T: DeserializeOwned>(body: &str) -> Result<T, (u16, String)> {
    serde_json::from_str(body).map_err(|e| {
        let id = serde_json::from_str::<serde_json::Value>(body).ok().and_then(|v| v.get("id")?.as_u64());
        (400, error_json(id, codes::BAD_REQUEST, e.to_string()))
    })
}

fn versioned(id: u64, version: &str) -> Result<(), (u16, String)> {
    if version == PROTOCOL_VERSION {
        Ok(())
    } else {
        let msg = format!("server speaks version {PROTOCOL_VERSION}, request has {version}");
        Err((400, error_json(Some(id), codes::VERSION_MISMATCH, msg)))
    }
}

fn predict(oracle: &dyn Oracle, req: PredictRequest) -> Result<String, (u16, String)> {
    versioned(req.id, &req.version)?;
    let probabilities = oracle.predict(&req.part1, &req.part2).map_err(|e| oracle_error(Some(req.id), e))?;
    let resp = PredictResponse { version: PROTOCOL_VERSION.to_string(), id: req.id, probabilities };
    Ok(serde_json::to_string(&resp).expect("response serializes"))
}

fn encode(oracle: &dyn Oracle, req: EncodeRequest) -> Result<String, (u16, String)> {
    versioned(req.id, &req.version)?;
    let r = oracle.encode(&req.part1, &req.part2).map_err(|e| oracle_error(Some(req.id), e))?;
    Ok(serde_json::to_string(&EncodeResponse::new(req.id, r)).expect("response serializes"))
}

fn meta(oracle: &dyn Oracle, id: Option<u64>) -> Result<String, (u16, String)> {
    let m = oracle.meta().map_err(|e| oracle_error(id, e))?;
    Ok(serde_json::to_string(&MetaResponse::new(id, m)).expect("response serializes"))
}

/// Handles one HTTP request; returns `(status, json body)`.
pub fn handle_http(oracle: &dyn Oracle, method: &str, path: &str, body: &str) -> (u16, String) {
    let path = path.split('?').next().unwrap_or(path);
    let result = match (method, path) {
        ("POST", "/v1/predict") => parse(body).and_then(|r| predict(oracle, r)),
        ("POST", "/v1/encode") => parse(body).and_then(|r| encode(oracle, r)),
        ("GET", "/v1/meta") => meta(oracle, None),
        _ => Err((404, error_json(None, codes::NOT_FOUND, format!("no route for {method} {path}")))),
    };
    match result {
        Ok(body) => (200, body),
        Err(e) => e,
    }
}

/// Handles one stdio-JSONL request line; returns the response line without
/// its newline.
pub fn handle_line(oracle: &dyn Oracle, line: &str) -> String {
    let result = parse::<StdioRequest>(line).and_then(|req| match req {
        StdioRequest::Predict(r) => predict(oracle, r),
        StdioRequest::Encode(r) => encode(oracle, r),
        StdioRequest::Meta(r) => versioned(r.id, &r.version).and_then(|_| meta(oracle, Some(r.id))),
    });
    match result {
        Ok(s) => s,
        Err((_, body)) => body,
    }
}

/// Serves stdio-JSONL until `input` closes. Requests are handled in order.
pub fn serve_lines(oracle: &dyn Oracle, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(output, "{}", handle_line(oracle, &line))?;
        output.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{MockConfig, MockOracle};

    fn mock() -> MockOracle {
        MockOracle::new(MockConfig::default())
    }

    #[test]
    fn predict_route() {
        let body = r#"{"version":"1","id":4,"part1":["good"],"part2":["x"]}"#;
        let (status, out) = handle_http(&mock(), "POST", "/v1/predict", body);
        assert_eq!(status, 200);
        let r: PredictResponse = serde_json::from_str(&out).unwrap();
        assert_eq!(r.id, 4);
        assert!((r.probabilities[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn error_routes() {
        let o = mock();
        let (s, out) = handle_http(&o, "POST", "/v1/predict", r#"{"version":"1","id":1,"part1":[],"part2":["x"]}"#);
        assert_eq!(s, 400);
        let e: ErrorResponse = serde_json::from_str(&out).unwrap();
        assert_eq!((e.id, e.error.code.as_str()), (Some(1), codes::EMPTY_PART));

        let (s, out) = handle_http(&o, "POST", "/v1/encode", r#"{"version":"0","id":2,"part1":["a"],"part2":["b"]}"#);
        assert_eq!(s, 400);
        assert!(out.contains(codes::VERSION_MISMATCH));

        let (s, _) = handle_http(&o, "GET", "/v1/nothing", "");
        assert_eq!(s, 404);
        let (s, out) = handle_http(&o, "POST", "/v1/predict", "{not json");
        assert_eq!(s, 400);
        assert!(out.contains(codes::BAD_REQUEST));
    }

    #[test]
    fn stdio_lines_echo_ids() {
        let o = mock();
        let input = concat!(
            r#"{"method":"meta","version":"1","id":11}"#,
            "\n\n",
            r#"{"method":"predict","version":"1","id":12,"part1":["a"],"part2":["b"]}"#,
            "\n"
        );
        let mut out = Vec::new();
        serve_lines(&o, input.as_bytes(), &mut out).unwrap();
        let lines: Vec<serde_json::Value> =
            String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0]["id"], 11);
        assert_eq!(lines[0]["a"], 4);
        assert_eq!(lines[1]["id"], 12);
    }
}
