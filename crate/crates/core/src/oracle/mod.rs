//! Model backends: the wire protocol, a deterministic mock, and HTTP and
//! stdio-JSONL clients.
//!
//! Endpoint strings accepted by [`connect`]:
//!
//! * `mock` or `mock:<seed>`: in-process [`MockOracle`]
//! * `http://host:port`: [`HttpOracle`] against `/v1/predict`, `/v1/encode`, `/v1/meta`
//! * `stdio:<command> [args..]`: [`StdioOracle`] over a child process

mod cache;
mod http;
mod mock;
pub mod protocol;
pub mod server;
mod stdio;

use std::sync::{Arc, Condvar, Mutex};

use thiserror::Error;

pub use cache::CachedOracle;
pub use http::HttpOracle;
pub use mock::{MockConfig, MockOracle};
pub use protocol::{EncodeResult, ModelMeta, PROTOCOL_VERSION};
pub use stdio::StdioOracle;

/// Environment variable holding the default endpoint.
pub const ORACLE_URL_ENV: &str = "SPANEX_ORACLE_URL";
pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;

/// Error codes carried in [`protocol::ErrorBody::code`].
pub mod codes {
    pub const EMPTY_PART: &str = "empty_part";
    pub const BAD_REQUEST: &str = "bad_request";
    pub const VERSION_MISMATCH: &str = "version_mismatch";
    pub const NOT_FOUND: &str = "not_found";
    pub const INTERNAL: &str = "internal";
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("protocol version mismatch: expected {expected}, got {got}")]
    VersionMismatch { expected: String, got: String },
    #[error("oracle error [{code}]: {message}")]
    Protocol { code: String, message: String },
    #[error("invalid oracle output: {0}")]
    Invalid(String),
    #[error("unsupported oracle endpoint '{0}'")]
    Endpoint(String),
}

impl OracleError {
    pub fn empty_part(which: &str) -> Self {
        OracleError::Protocol { code: codes::EMPTY_PART.into(), message: format!("{which} is empty") }
    }
}

/// A sequence-pair classifier exposing what explanation and evaluation need.
///
/// Implementations must be callable from many threads at once.
pub trait Oracle: Send + Sync {
    fn meta(&self) -> Result<ModelMeta, OracleError>;
    fn predict(&self, part1: &[String], part2: &[String]) -> Result<Vec<f64>, OracleError>;
    fn encode(&self, part1: &[String], part2: &[String]) -> Result<EncodeResult, OracleError>;
}

impl<T: Oracle + ?Sized> Oracle for Arc<T> {
    fn meta(&self) -> Result<ModelMeta, OracleError> {
        (**self).meta()
    }
    fn predict(&self, part1: &[String], part2: &[String]) -> Result<Vec<f64>, OracleError> {
        (**self).predict(part1, part2)
    }
    fn encode(&self, part1: &[String], part2: &[String]) -> Result<EncodeResult, OracleError> {
        (**self).encode(part1, part2)
    }
}

impl<T: Oracle + ?Sized> Oracle for &T {
    fn meta(&self) -> Result<ModelMeta, OracleError> {
        (**self).meta()
    }
    fn predict(&self, part1: &[String], part2: &[String]) -> Result<Vec<f64>, OracleError> {
        (**self).predict(part1, part2)
    }
    fn encode(&self, part1: &[String], part2: &[String]) -> Result<EncodeResult, OracleError> {
        (**self).encode(part1, part2)
    }
}

pub(crate) fn check_parts(part1: &[String], part2: &[String]) -> Result<(), OracleError> {
    if part1.is_empty() {
        return Err(OracleError::empty_part("part1"));
    }
    if part2.is_empty() {
        return Err(OracleError::empty_part("part2"));
    }
    Ok(())
}

/// Counting semaphore bounding in-flight requests.
pub(crate) struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

pub(crate) struct SlotGuard<'a>(&'a Slots);

impl Slots {
    pub fn new(n: usize) -> Self {
        Slots { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    pub fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        SlotGuard(self)
    }
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Opens an endpoint. `max_in_flight` bounds concurrent requests on remote
/// transports and is ignored by the mock.
pub fn connect(endpoint: &str, max_in_flight: usize) -> Result<Arc<dyn Oracle>, OracleError> {
    let endpoint = endpoint.trim();
    if endpoint == "mock" {
        return Ok(Arc::new(MockOracle::new(MockConfig::default())));
    }
    if let Some(seed) = endpoint.strip_prefix("mock:") {
        let seed = seed.parse().map_err(|_| OracleError::Endpoint(endpoint.to_string()))?;
        return Ok(Arc::new(MockOracle::new(MockConfig { seed, ..MockConfig::default() })));
    }
    if endpoint.starts_with("http://") {
        return Ok(Arc::new(HttpOracle::new(endpoint, max_in_flight)));
    }
    if let Some(cmd) = endpoint.strip_prefix("stdio:") {
        let argv: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
        if argv.is_empty() {
            return Err(OracleError::Endpoint(endpoint.to_string()));
        }
        return Ok(Arc::new(StdioOracle::spawn(&argv, max_in_flight)?));
    }
    Err(OracleError::Endpoint(endpoint.to_string()))
}
