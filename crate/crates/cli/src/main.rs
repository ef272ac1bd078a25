mod bench;
mod config;
mod error;
mod run;

use std::process::ExitCode;

use clap::Parser;

use crate::config::{Args, RunConfig};
use crate::error::CliResult;

fn main() -> ExitCode {
    let result = RunConfig::from_args(Args::parse()).and_then(|cfg| dispatch(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("exgraph: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn dispatch(cfg: &RunConfig) -> CliResult<()> {
    match &cfg.bench {
        Some(sweep) => bench::run_bench(cfg, sweep),
        None => run::run(cfg),
    }
}
