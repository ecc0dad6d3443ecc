//! Command-line front end for the Duffing/Floquet toolkit.
//!
//! ```text
//! duffing-floquet <solve | certify | scan-hill | decay>
//!     --config FILE [--set key=value]... [--output FILE]
//!     [--format json|csv|text]
//! ```
//!
//! One JSON config document describes a run; `--set` overrides scalar
//! fields through dotted paths (`--set solve.tol=1e-12`). Reports go to
//! stdout unless `--output` names a file. Exit codes: 0 success, 1 config
//! or validation error, 2 shooting did not converge, 3 singular
//! period-map Jacobian (degenerate orbit), 4 tongue scan too coarse,
//! 5 decay iteration diverged.

// Validation guards are written `!(x > 0.0)` on purpose: NaN fails every
// comparison, so the negated form rejects NaN inputs where `x <= 0.0`
// would wave them through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: String) -> Failure {
        Failure { code: 1, message }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Solve,
    Certify,
    ScanHill,
    Decay,
}

#[derive(Debug)]
pub struct Invocation {
    pub command: CommandKind,
    pub config_path: String,
    pub overrides: Vec<(String, String)>,
    pub output: Option<String>,
    pub format: Format,
}

pub const USAGE: &str = "usage: duffing-floquet <solve|certify|scan-hill|decay> --config FILE \
[--set key=value]... [--output FILE] [--format json|csv|text]";

pub fn parse_args(args: &[String]) -> Result<Invocation, String> {
    let mut iter = args.iter();
    let command = match iter.next().map(String::as_str) {
        Some("solve") => CommandKind::Solve,
        Some("certify") => CommandKind::Certify,
        Some("scan-hill") => CommandKind::ScanHill,
        Some("decay") => CommandKind::Decay,
        Some(other) => return Err(format!("unknown command `{other}`")),
        None => return Err("missing command".into()),
    };
    let mut config_path = None;
    let mut overrides = Vec::new();
    let mut output = None;
    let mut format = Format::Json;
    while let Some(flag) = iter.next() {
        match flag.as_str() {
            "--config" => {
                config_path = Some(
                    iter.next()
                        .ok_or("--config needs a file path")?
                        .to_string(),
                );
            }
            "--set" => {
                let spec = iter.next().ok_or("--set needs key=value")?;
                let (key, value) = spec
                    .split_once('=')
                    .ok_or_else(|| format!("--set `{spec}` is not key=value"))?;
                overrides.push((key.to_string(), value.to_string()));
            }
            "--output" => {
                output = Some(
                    iter.next()
                        .ok_or("--output needs a file path")?
                        .to_string(),
                );
            }
            "--format" => {
                format = match iter.next().map(String::as_str) {
                    Some("json") => Format::Json,
                    Some("csv") => Format::Csv,
                    Some("text") => Format::Text,
                    Some(other) => return Err(format!("unknown format `{other}`")),
                    None => return Err("--format needs json, csv, or text".into()),
                };
            }
            other => return Err(format!("unknown flag `{other}`")),
        }
    }
    Ok(Invocation {
        command,
        config_path: config_path.ok_or("--config is required")?,
        overrides,
        output,
        format,
    })
}

/// Loads the config and dispatches; returns the rendered report.
pub fn run(invocation: &Invocation) -> Result<String, Failure> {
    let raw = std::fs::read_to_string(&invocation.config_path).map_err(|e| {
        Failure::config(format!(
            "cannot read config `{}`: {e}",
            invocation.config_path
        ))
    })?;
    let doc = config::load(&raw, &invocation.overrides)?;
    match invocation.command {
        CommandKind::Solve => commands::cmd_solve(&doc, invocation.format),
        CommandKind::Certify => commands::cmd_certify(&doc, invocation.format),
        CommandKind::ScanHill => commands::cmd_scan_hill(&doc, invocation.format),
        CommandKind::Decay => commands::cmd_decay(&doc, invocation.format),
    }
}
