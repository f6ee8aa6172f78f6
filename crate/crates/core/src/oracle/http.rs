use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::protocol::*;
use super::{check_parts, EncodeResult, ModelMeta, Oracle, OracleError, Slots};

const BODY_LIMIT: u64 = 1 << 30;
const TIMEOUT: Duration = Duration::from_secs(300);

/// Blocking JSON-over-HTTP client. Safe to share across threads; at most
/// `max_in_flight` requests are outstanding at once.
pub struct HttpOracle {
    base: String,
    agent: ureq::Agent,
    next_id: AtomicU64,
    slots: Slots,
}

impl HttpOracle {
    pub fn new(base: &str, max_in_flight: usize) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(TIMEOUT))
            .max_idle_connections_per_host(max_in_flight.max(1))
            .build();
        HttpOracle {
            base: base.trim_end_matches('/').to_string(),
            agent: config.into(),
            next_id: AtomicU64::new(1),
            slots: Slots::new(max_in_flight),
        }
    }

    fn id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::Relaxed)
    }

    fn finish<T: DeserializeOwned>(&self, status: u16, text: String) -> Result<T, OracleError> {
        if status != 200 {
            return Err(decode_error(status, &text));
        }
        serde_json::from_str(&text).map_err(|e| OracleError::Malformed(e.to_string()))
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, OracleError> {
        let payload = serde_json::to_string(body).expect("request serializes");
        let _slot = self.slots.acquire();
        let url = format!("{}{path}", self.base);
        let mut resp = self
            .agent
            .post(&url)
            .header("content-type", "application/json")
            .send(payload.as_str())
            .map_err(|e| OracleError::Transport(format!("POST {url}: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .with_config()
            .limit(BODY_LIMIT)
            .read_to_string()
            .map_err(|e| OracleError::Transport(format!("POST {url}: {e}")))?;
        self.finish(status, text)
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, OracleError> {
        let _slot = self.slots.acquire();
        let url = format!("{}{path}", self.base);
        let mut resp = self.agent.get(&url).call().map_err(|e| OracleError::Transport(format!("GET {url}: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .with_config()
            .limit(BODY_LIMIT)
            .read_to_string()
            .map_err(|e| OracleError::Transport(format!("GET {url}: {e}")))?;
        self.finish(status, text)
    }
}

/// Turns a non-200 body into the most specific error available.
pub(crate) fn decode_error(status: u16, text: &str) -> OracleError {
    match serde_json::from_str::<ErrorResponse>(text) {
        Ok(e) => {
            if let Err(v) = check_version(&e.version) {
                return v;
            }
            OracleError::Protocol { code: e.error.code, message: e.error.message }
        }
        Err(_) => OracleError::Malformed(format!("status {status} without an error body")),
    }
}

pub(crate) fn check_id(expected: u64, got: u64) -> Result<(), OracleError> {
    if expected == got {
        Ok(())
    } else {
        Err(OracleError::Malformed(format!("response id {got} for request {expected}")))
    }
}

impl Oracle for HttpOracle {
    fn meta(&self) -> Result<ModelMeta, OracleError> {
        let r: MetaResponse = self.get("/v1/meta")?;
        check_version(&r.version)?;
        let meta = r.into_meta();
        meta.validate()?;
        Ok(meta)
    }

    fn predict(&self, part1: &[String], part2: &[String]) -> Result<Vec<f64>, OracleError> {
        check_parts(part1, part2)?;
        let id = self.id();
        let req =
            PredictRequest { version: PROTOCOL_VERSION.into(), id, part1: part1.to_vec(), part2: part2.to_vec() };
        let r: PredictResponse = self.post("/v1/predict", &req)?;
        check_version(&r.version)?;
        check_id(id, r.id)?;
        validate_probabilities(&r.probabilities, None)?;
        Ok(r.probabilities)
    }

    fn encode(&self, part1: &[String], part2: &[String]) -> Result<EncodeResult, OracleError> {
        check_parts(part1, part2)?;
        let id = self.id();
        let req = EncodeRequest { version: PROTOCOL_VERSION.into(), id, part1: part1.to_vec(), part2: part2.to_vec() };
        let r: EncodeResponse = self.post("/v1/encode", &req)?;
        check_version(&r.version)?;
        check_id(id, r.id)?;
        let r = r.into_result();
        r.validate()?;
        Ok(r)
    }
}
