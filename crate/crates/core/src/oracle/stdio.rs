use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{channel, Sender};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;

use super::http::{check_id, decode_error};
use super::protocol::*;
use super::{check_parts, EncodeResult, ModelMeta, Oracle, OracleError, Slots};

type Reply = Result<String, OracleError>;

#[derive(Default)]
struct Pending {
    waiting: HashMap<u64, Sender<Reply>>,
    closed: Option<String>,
}

/// Client for a backend speaking one JSON message per line on stdin/stdout.
///
/// Requests are pipelined: many threads may write before any response comes
/// back, and a reader thread routes each response line to its caller by id.
pub struct StdioOracle {
    child: Mutex<Child>,
    stdin: Mutex<Option<ChildStdin>>,
    pending: Arc<Mutex<Pending>>,
    next_id: AtomicU64,
    slots: Slots,
    timeout: Duration,
}

fn fail_all(pending: &Mutex<Pending>, reason: String) {
    let mut p = pending.lock().unwrap_or_else(|e| e.into_inner());
    for (_, tx) in p.waiting.drain() {
        let _ = tx.send(Err(OracleError::Transport(reason.clone())));
    }
    p.closed = Some(reason);
}

impl StdioOracle {
    pub fn spawn(argv: &[String], max_in_flight: usize) -> Result<Self, OracleError> {
        let (program, args) = argv.split_first().ok_or_else(|| OracleError::Endpoint("stdio:".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| OracleError::Transport(format!("cannot start '{program}': {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let pending = Arc::new(Mutex::new(Pending::default()));

        let reader_pending = pending.clone();
        std::thread::Builder::new()
            .name("spanex-stdio-reader".into())
            .spawn(move || {
                for line in BufReader::new(stdout).lines() {
                    let line = match line {
                        Ok(l) => l,
                        Err(e) => return fail_all(&reader_pending, format!("read failed: {e}")),
                    };
                    if line.trim().is_empty() {
                        continue;
                    }
                    let id = serde_json::from_str::<serde_json::Value>(&line).ok().and_then(|v| v.get("id")?.as_u64());
                    match id {
                        Some(id) => {
                            let tx = reader_pending.lock().unwrap_or_else(|e| e.into_inner()).waiting.remove(&id);
                            if let Some(tx) = tx {
                                let _ = tx.send(Ok(line));
                            }
                        }
                        // an error the backend could not attribute poisons the stream
                        None => return fail_all(&reader_pending, format!("unroutable response: {line}")),
                    }
                }
                fail_all(&reader_pending, "backend closed its output".into());
            })
            .map_err(|e| OracleError::Transport(e.to_string()))?;

        Ok(StdioOracle {
            child: Mutex::new(child),
            stdin: Mutex::new(stdin),
            pending,
            next_id: AtomicU64::new(1),
            slots: Slots::new(max_in_flight),
            timeout: Duration::from_secs(300),
        })
    }

    fn call<T: DeserializeOwned>(&self, id: u64, request: &StdioRequest) -> Result<T, OracleError> {
        let line = serde_json::to_string(request).expect("request serializes");
        let _slot = self.slots.acquire();
        let (tx, rx) = channel();
        {
            let mut p = self.pending.lock().unwrap_or_else(|e| e.into_inner());
            if let Some(reason) = &p.closed {
                return Err(OracleError::Transport(reason.clone()));
            }
            p.waiting.insert(id, tx);
        }
        {
            let mut stdin = self.stdin.lock().unwrap_or_else(|e| e.into_inner());
            let pipe = stdin.as_mut().ok_or_else(|| OracleError::Transport("backend stdin closed".into()))?;
            let written = pipe.write_all(line.as_bytes()).and_then(|_| pipe.write_all(b"\n")).and_then(|_| pipe.flush());
            if let Err(e) = written {
                self.pending.lock().unwrap_or_else(|e| e.into_inner()).waiting.remove(&id);
                return Err(OracleError::Transport(format!("write failed: {e}")));
            }
        }
        let text = match rx.recv_timeout(self.timeout) {
            Ok(reply) => reply?,
            Err(_) => {
                self.pending.lock().unwrap_or_else(|e| e.into_inner()).waiting.remove(&id);
                return Err(OracleError::Transport(format!("request {id} timed out")));
            }
        };
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| OracleError::Malformed(e.to_string()))?;
        if value.get("error").is_some() {
            return Err(decode_error(200, &text));
        }
        serde_json::from_value(value).map_err(|e| OracleError::Malformed(e.to_string()))
    }

    fn id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::Relaxed)
    }
}

impl Drop for StdioOracle {
    fn drop(&mut self) {
        // closing stdin asks the backend to exit
        self.stdin.lock().unwrap_or_else(|e| e.into_inner()).take();
        let mut child = self.child.lock().unwrap_or_else(|e| e.into_inner());
        for _ in 0..50 {
            if let Ok(Some(_)) = child.try_wait() {
                return;
            }
            std::thread::sleep(Duration::from_millis(10));
        }
        let _ = child.kill();
        let _ = child.wait();
    }
}

impl Oracle for StdioOracle {
    fn meta(&self) -> Result<ModelMeta, OracleError> {
        let id = self.id();
        let r: MetaResponse = self.call(id, &StdioRequest::Meta(MetaRequest { version: PROTOCOL_VERSION.into(), id }))?;
        check_version(&r.version)?;
        check_id(id, r.id.unwrap_or(id))?;
        let meta = r.into_meta();
        meta.validate()?;
        Ok(meta)
    }

    fn predict(&self, part1: &[String], part2: &[String]) -> Result<Vec<f64>, OracleError> {
        check_parts(part1, part2)?;
        let id = self.id();
        let req =
            PredictRequest { version: PROTOCOL_VERSION.into(), id, part1: part1.to_vec(), part2: part2.to_vec() };
        let r: PredictResponse = self.call(id, &StdioRequest::Predict(req))?;
        check_version(&r.version)?;
        check_id(id, r.id)?;
        validate_probabilities(&r.probabilities, None)?;
        Ok(r.probabilities)
    }

    fn encode(&self, part1: &[String], part2: &[String]) -> Result<EncodeResult, OracleError> {
        check_parts(part1, part2)?;
        let id = self.id();
        let req = EncodeRequest { version: PROTOCOL_VERSION.into(), id, part1: part1.to_vec(), part2: part2.to_vec() };
        let r: EncodeResponse = self.call(id, &StdioRequest::Encode(req))?;
        check_version(&r.version)?;
        check_id(id, r.id)?;
        let r = r.into_result();
        r.validate()?;
        Ok(r)
    }
}
