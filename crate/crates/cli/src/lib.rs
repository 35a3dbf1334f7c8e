//! The `privopt` command line: channel certificates, tradeoff sweeps, bound
//! tables and the biased-gradient diagnostic. Every command is a pure
//! function of its configuration and seed, so reruns produce identical bytes.

pub mod bias_demo;
pub mod bounds;
pub mod certify;
pub mod table;
pub mod tradeoff;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

pub const DEFAULT_SEED: u64 = 20_130_101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Certify,
    Tradeoff,
    Bounds,
    BiasDemo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// The JSON or CSV document.
    pub body: String,
    pub exit_code: i32,
    /// Violations or failed checks, for stderr.
    pub messages: Vec<String>,
}

fn parse<T: DeserializeOwned + Default>(config: Option<&str>) -> Result<T> {
    match config {
        Some(text) => serde_json::from_str(text).context("invalid configuration"),
        None => Ok(T::default()),
    }
}

/// Run one command. `config` is the JSON text of the configuration; a CLI
/// seed overrides one given in the configuration. Errors are usage errors.
pub fn execute(
    command: Command,
    config: Option<&str>,
    seed: Option<u64>,
    check: bool,
) -> Result<Outcome> {
    let finish = |body: String, failures: Vec<String>| Outcome {
        body,
        exit_code: if check && !failures.is_empty() {
            EXIT_CHECK
        } else {
            EXIT_OK
        },
        messages: failures,
    };
    match command {
        Command::Certify => {
            let text = config.context("certify needs --config with a channel description")?;
            let cfg = certify::CertifyConfig::from_json(text).context("invalid configuration")?;
            let s = seed.unwrap_or(cfg.channel.seed);
            let report = certify::certify(&cfg, s)?;
            let mut body = serde_json::to_string_pretty(&report)?;
            body.push('\n');
            let code = if report.violations.is_empty() {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            };
            Ok(Outcome {
                body,
                exit_code: code,
                messages: report.violations,
            })
        }
        Command::Tradeoff => {
            let cfg: tradeoff::TradeoffConfig = parse(config)?;
            let s = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let out = tradeoff::tradeoff(&cfg, s)?;
            Ok(finish(out.table.to_csv(), out.failures))
        }
        Command::Bounds => {
            let cfg: bounds::BoundsConfig = parse(config)?;
            let out = bounds::bounds(&cfg)?;
            Ok(finish(out.table.to_csv(), out.failures))
        }
        Command::BiasDemo => {
            let cfg: bias_demo::BiasDemoConfig = parse(config)?;
            let s = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
            let out = bias_demo::bias_demo(&cfg, s)?;
            Ok(finish(out.table.to_csv(), out.failures))
        }
    }
}
