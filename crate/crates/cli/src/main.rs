//! `cdpp`: run experiments from flat configuration files.
//!
//! Exit status: 0 all checks passed, 1 a check failed, 2 usage or
//! configuration error, 3 numerical failure.

mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use canonical_dpp::testfn::PRESETS;
use clap::{Parser, Subcommand};

use config::Config;
use experiments::{RunError, EXPERIMENTS};
use report::{Outcome, Report};

#[derive(Parser)]
#[command(name = "cdpp", version, about = "Canonical determinantal point process experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write CSV tables plus a JSON report.
    Run {
        experiment: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        replicas: Option<u64>,
        /// Extra `key=value` override; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List test-function presets and experiment ids.
    ListPresets,
}

fn list_presets() -> String {
    let mut s = String::from("presets:\n");
    for (name, desc) in PRESETS {
        s.push_str(&format!("  {name:<18} {desc}\n"));
    }
    s.push_str("experiments:\n");
    for e in EXPERIMENTS {
        s.push_str(&format!("  {:<18} {}\n", e.id, e.description));
    }
    s
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("cdpp: {msg}");
    ExitCode::from(2)
}

fn run(experiment: &str, config: PathBuf, seed: Option<u64>, out: PathBuf, replicas: Option<u64>, overrides: Vec<String>) -> ExitCode {
    let Some(exp) = experiments::find(experiment) else {
        return usage(format!("unknown experiment `{experiment}` (see `cdpp list-presets`)"));
    };
    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => return usage(format!("cannot read {}: {e}", config.display())),
    };
    let mut cfg = match Config::parse(&text) {
        Ok(c) => c,
        Err(e) => return usage(format!("{}: {e}", config.display())),
    };
    for o in &overrides {
        match o.split_once('=') {
            Some((k, v)) => cfg.set(k.trim(), v.trim()),
            None => return usage(format!("override `{o}` is not key=value")),
        }
    }
    if let Some(s) = seed {
        cfg.set("seed", s);
    }
    if let Some(r) = replicas {
        if !exp.stochastic {
            return usage(format!("`{experiment}` is deterministic and takes no replicas"));
        }
        cfg.set("replicas", r);
    }
    match cfg.string("experiment", experiment) {
        Ok(e) if e == experiment => {}
        Ok(e) => return usage(format!("config is for `{e}`, not `{experiment}`")),
        Err(e) => return usage(e),
    }
    let seed = match cfg.get("seed", 1u64) {
        Ok(s) => s,
        Err(e) => return usage(e),
    };

    let start = Instant::now();
    let result = (exp.run)(&cfg, seed);
    let wall = start.elapsed().as_secs_f64();
    let (outcome, error) = match result {
        Ok(o) => match cfg.finish() {
            Ok(()) => (o, None),
            Err(e) => return usage(e),
        },
        Err(RunError::Config(e)) => return usage(e),
        Err(e @ RunError::Core(_)) => (Outcome::default(), Some(e.to_string())),
    };
    let mut report = Report::new(exp.id, cfg.echo(), &outcome, wall);
    report.passed = error.is_none() && outcome.passed();
    report.error = error.clone();
    if let Err(e) = report::write(&out, &outcome, &mut report) {
        eprintln!("cdpp: cannot write to {}: {e}", out.display());
        return ExitCode::from(3);
    }
    for c in &outcome.checks {
        println!("{} {:<40} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(e) = error {
        eprintln!("cdpp: {experiment} failed: {e}");
        return ExitCode::from(3);
    }
    println!("{}: {} ({wall:.1}s), outputs in {}", exp.id, if report.passed { "passed" } else { "FAILED" }, out.display());
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListPresets => {
            print!("{}", list_presets());
            ExitCode::SUCCESS
        }
        Command::Run { experiment, config, seed, out, replicas, overrides } => run(&experiment, config, seed, out, replicas, overrides),
    }
}
