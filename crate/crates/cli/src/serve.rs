use std::io::{BufReader, Write};
use std::sync::Arc;

use anyhow::Context;

use spanex_core::oracle::server::{handle_http, serve_lines};
use spanex_core::oracle::{MockConfig, MockOracle, Oracle};

use crate::args::MockOracleArgs;
use crate::EXIT_OK;

/// Serves until stdin closes (`--stdio`) or the process is killed. In HTTP
/// mode the first stdout line is `listening on http://127.0.0.1:<port>`.
pub fn mock_oracle(a: MockOracleArgs) -> anyhow::Result<i32> {
    let oracle: Arc<dyn Oracle> = Arc::new(MockOracle::new(MockConfig { seed: a.seed, ..MockConfig::default() }));
    if a.stdio {
        let stdin = std::io::stdin();
        serve_lines(&*oracle, BufReader::new(stdin.lock()), std::io::stdout().lock())?;
        return Ok(EXIT_OK);
    }
    let server = tiny_http::Server::http(("127.0.0.1", a.port))
        .map_err(|e| anyhow::anyhow!("binding 127.0.0.1:{}: {e}", a.port))?;
    let port = server.server_addr().to_ip().context("server has no IP address")?.port();
    let mut stdout = std::io::stdout();
    writeln!(stdout, "listening on http://127.0.0.1:{port}")?;
    stdout.flush()?;
    for mut request in server.incoming_requests() {
        let oracle = Arc::clone(&oracle);
        std::thread::spawn(move || {
            let mut body = String::new();
            let (status, json) = match request.as_reader().read_to_string(&mut body) {
                Ok(_) => handle_http(&*oracle, request.method().as_str(), request.url(), &body),
                Err(e) => (400, format!("{{\"error\":{{\"code\":\"bad_request\",\"message\":\"{e}\"}}}}")),
            };
            let header = tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
                .expect("static header is valid");
            let _ = request.respond(tiny_http::Response::from_string(json).with_status_code(status).with_header(header));
        });
    }
    Ok(EXIT_OK)
}
