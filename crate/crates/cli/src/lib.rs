//! Command-line front end: configuration layering, CSV ingestion, the
//! subcommands and their output files.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches};

pub use commands::{run_command, RESOLVED_CONFIG};
pub use config::{Command, RunConfig, KEYS};
pub use error::{CliError, CliResult};
pub use report::{emit_report, KvRecord};

fn about(c: Command) -> &'static str {
    match c {
        Command::Solve => "Solve the price function and dump it",
        Command::Simulate => "Simulate a price path from the model",
        Command::Estimate => "Estimate the structural parameters from a price CSV",
        Command::Bootstrap => "Estimate, then parametric-bootstrap standard errors",
        Command::Experiment => "Monte Carlo study of the estimators on simulated data",
        Command::Compare => "Bootstrap likelihood-ratio comparison with a benchmark model",
        Command::Diagnose => "Residual diagnostics and benchmark fits at given parameters",
    }
}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

pub fn cli() -> clap::Command {
    let mut app = clap::Command::new("storage-sml")
        .about("Storage model price solver and likelihood-based estimation")
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .global(true)
                .help("key = value configuration file; flags override it"),
        )
        .arg(
            Arg::new("set")
                .long("set")
                .value_name("KEY=VALUE")
                .action(ArgAction::Append)
                .global(true)
                .help("Override any configuration key"),
        );
    for key in KEYS.iter().filter(|k| **k != "command") {
        app = app.arg(Arg::new(*key).long(flag_name(key)).value_name("VALUE").global(true).help(format!("Set `{key}`")));
    }
    for c in Command::ALL {
        app = app.subcommand(clap::Command::new(c.name()).about(about(c)));
    }
    app
}

fn resolve(matches: &ArgMatches) -> CliResult<RunConfig> {
    let (sub, sub_matches) = matches.subcommand().ok_or_else(|| CliError::Usage("missing command".into()))?;
    let command = Command::parse(sub)?;
    let mut cfg = RunConfig::defaults(command);
    let lookup = |id: &str| -> Option<&String> {
        sub_matches.get_one::<String>(id).or_else(|| matches.get_one::<String>(id))
    };
    let config_path =
        sub_matches.get_one::<PathBuf>("config").or_else(|| matches.get_one::<PathBuf>("config"));
    if let Some(path) = config_path {
        cfg.apply_file(path)?;
    }
    for key in KEYS.iter().filter(|k| **k != "command") {
        if let Some(v) = lookup(key) {
            cfg.set(key, v)?;
        }
    }
    let sets: Vec<&String> = sub_matches
        .get_many::<String>("set")
        .or_else(|| matches.get_many::<String>("set"))
        .map(|v| v.collect())
        .unwrap_or_default();
    for s in sets {
        let (k, v) = s.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        cfg.set(k.trim(), v)?;
    }
    Ok(cfg)
}

/// Parses arguments into a fully layered configuration.
pub fn config_from_args<I, T>(args: I) -> CliResult<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = cli().try_get_matches_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    resolve(&matches)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match resolve(&matches).and_then(|cfg| run_command(&cfg)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_set_overrides_flags() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        std::fs::write(&file, "seed = 5\nmz = 32\nparticles = 100\n").unwrap();
        let cfg = config_from_args([
            "storage-sml",
            "estimate",
            "--config",
            file.to_str().unwrap(),
            "--seed",
            "9",
            "--set",
            "particles=200",
        ])
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.mz, 32);
        assert_eq!(cfg.particles, 200);
        assert_eq!(cfg.command, Command::Estimate);
    }

    #[test]
    fn unknown_command_is_usage_error() {
        assert_eq!(run(["storage-sml", "frobnicate"]), 2);
        assert!(matches!(config_from_args(["storage-sml"]), Err(CliError::Usage(_))));
    }
}
