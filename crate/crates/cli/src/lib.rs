//! The `spanex` command line.
//!
//! Every JSON artifact carries `toolkit_version`, `config_hash` and `seed`.
//! The hash covers the effective settings and the SHA-256 of each input
//! file, not its path, so reruns on the same inputs give identical bytes.

mod args;
mod commands;
mod config;
mod eval_cmd;
mod model_cmd;
mod provenance;
mod serve;

use std::ffi::OsString;
use std::fmt;

use clap::{CommandFactory, FromArgMatches};

pub use args::Cli;
use args::Command;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Bad flag values found after parsing; reported like clap usage errors.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub(crate) fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match config::expand(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            return if e.downcast_ref::<UsageError>().is_some() { EXIT_USAGE } else { EXIT_FAILURE };
        }
    };
    let command = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let cli = match command.try_get_matches_from(argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Convert(a) => commands::convert(a),
        Command::Validate(a) => commands::validate(a),
        Command::Stats(a) => commands::stats(a),
        Command::Agreement(a) => commands::agreement(a),
        Command::SelectHead(a) => model_cmd::select_head(a),
        Command::Extract(a) => model_cmd::extract(a),
        Command::Eval(a) => eval_cmd::eval(a),
        Command::Report(a) => eval_cmd::report(a),
        Command::MockOracle(a) => serve::mock_oracle(a),
    };
    match result {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            EXIT_FAILURE
        }
    }
}

/// The error chain joined by `: `, skipping causes a message already quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}
