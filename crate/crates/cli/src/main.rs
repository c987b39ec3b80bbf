//! ym2d: runs and checks for Lorenz-gauge Yang-Mills on the 2D torus.
//!
//! Exit codes: 0 all checks pass, 1 some check fails, 2 bad configuration,
//! 3 numerical abort.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use ym_core::ym::DiagnosticsRecord;

use commands::{Failure, Outcome};
use config::{Cli, RunConfig};

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    artifacts: Vec<PathBuf>,
    status: &'static str,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    last_diagnostics: Option<DiagnosticsRecord>,
}

fn execute(cfg: &RunConfig) -> Result<Outcome, Failure> {
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Config(e.to_string()))?
            .install(|| commands::run(cfg)),
        None => commands::run(cfg),
    }
}

fn main() -> ExitCode {
    let cfg = match config::resolve(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("ym2d: configuration error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = execute(&cfg);
    let (status, code, artifacts, error, last) = match result {
        Ok(o) if o.pass => ("PASS", 0, o.artifacts, None, o.last),
        Ok(o) => ("FAIL", 1, o.artifacts, None, o.last),
        Err(Failure::Config(e)) => ("CONFIG_ERROR", 2, vec![], Some(e), None),
        Err(Failure::Numerical { error, last }) => ("NUMERICAL_ABORT", 3, vec![], Some(error.to_string()), last),
        Err(Failure::Io(e)) => ("IO_ERROR", 1, vec![], Some(e), None),
    };
    if let Some(e) = &error {
        eprintln!("ym2d: {e}");
    }
    if code == 3 {
        match &last {
            Some(r) => eprintln!("ym2d: last diagnostics\n{}\n{}", DiagnosticsRecord::CSV_HEADER, r.csv_row()),
            None => eprintln!("ym2d: no diagnostics were recorded"),
        }
    }
    let manifest = Manifest {
        tool: "ym2d",
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        artifacts,
        status,
        exit_code: code,
        error,
        last_diagnostics: last,
    };
    let path = cfg.manifest_path();
    let written = serde_json::to_string_pretty(&manifest)
        .map_err(|e| e.to_string())
        .and_then(|s| std::fs::write(&path, s + "\n").map_err(|e| e.to_string()));
    if let Err(e) = written {
        eprintln!("ym2d: cannot write manifest {}: {e}", path.display());
        return ExitCode::from(code.max(1));
    }
    println!("{status}");
    ExitCode::from(code)
}
