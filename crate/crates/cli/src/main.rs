//! `phaseseed` command-line interface.
//!
//! Exit codes: 0 success, 2 configuration error, 3 integration failure,
//! 4 I/O error.

mod config;
mod error;
mod output;
mod recipes;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phaseseed::export::write_report;
use serde_json::Value;

use config::RunConfig;
use error::CliError;
use output::{OutputDir, RunManifest};

#[derive(Parser)]
#[command(name = "phaseseed", version, about = "Simulate phase-seeded semiconductor laser transmitters")]
struct Cli {
    /// Output directory (default: the config's output_dir, else ./out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration end to end.
    Simulate {
        /// Config file, or the name of a bundled recipe.
        config: String,
    },
    /// Run one configuration per value of a single key.
    Sweep {
        config: String,
        /// Dotted config key, e.g. injection.efficiency.
        #[arg(long)]
        param: String,
        /// Comma-separated values, JSON literals or bare strings.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<String>,
    },
    /// Check a configuration and print derived quantities.
    Validate { config: String },
    /// List bundled recipes.
    Recipes,
}

fn load(source: &str, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let path = Path::new(source);
    let mut cfg = if path.exists() {
        RunConfig::load(path)?
    } else if let Some(text) = recipes::find(source) {
        RunConfig::from_json(text, source)?
    } else {
        return Err(CliError::Io(format!("{source}: no such file or bundled recipe")));
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Prints to stdout, ignoring a closed pipe.
fn say(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn report_text(entries: &[(String, String)]) -> String {
    let mut buf = Vec::new();
    write_report(&mut buf, entries).expect("writes to memory");
    String::from_utf8(buf).expect("utf-8 report")
}

/// Runs one configuration into `dir` and returns its manifest and metrics.
fn simulate_into(cfg: &RunConfig, dir: &Path) -> Result<(RunManifest, run::Metrics, String), CliError> {
    let resolved = cfg.resolve()?;
    let outcome = run::execute(cfg, &resolved)?;
    let canonical = cfg.canonical_json();
    let mut out = OutputDir::create(dir, RunManifest::new(&canonical, cfg.seed, resolved.scenario.to_string()))?;
    out.put("config.json", canonical.as_bytes())?;
    for (name, bytes) in &outcome.files {
        out.put(name, bytes)?;
    }
    let report = report_text(&outcome.report);
    out.put("report.txt", report.as_bytes())?;
    Ok((out.finish()?, outcome.metrics, report))
}

fn cmd_simulate(cli: &Cli, source: &str) -> Result<(), CliError> {
    let cfg = load(source, cli.seed)?;
    let dir = out_dir(cli, &cfg);
    let (manifest, _, report) = simulate_into(&cfg, &dir)?;
    if !cli.quiet {
        say(&report);
        say(&format!("wrote {} files to {}\n", manifest.files.len() + 1, dir.display()));
    }
    Ok(())
}

/// Replaces the value at a dotted key. The key must already exist in the
/// fully defaulted config.
fn with_override(cfg: &RunConfig, key: &str, raw: &str) -> Result<RunConfig, CliError> {
    let bad = |m: String| CliError::Config(vec![m]);
    let mut doc = serde_json::to_value(cfg).expect("config serialises");
    let mut slot = &mut doc;
    for part in key.split('.') {
        slot = match slot {
            Value::Object(map) => map
                .get_mut(part)
                .ok_or_else(|| bad(format!("--param {key}: not a recognized config key")))?,
            _ => return Err(bad(format!("--param {key}: not a recognized config key"))),
        };
    }
    if slot.is_object() {
        return Err(bad(format!("--param {key}: names a section, not a value")));
    }
    *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    serde_json::from_value(doc).map_err(|e| bad(format!("--param {key}={raw}: {e}")))
}

fn cmd_sweep(cli: &Cli, source: &str, key: &str, values: &[String]) -> Result<(), CliError> {
    let values: Vec<&str> = values.iter().map(|v| v.trim()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Config(vec!["--values: empty value list".into()]));
    }
    let base = load(source, cli.seed)?;
    let mut runs = Vec::new();
    let mut bad = Vec::new();
    for v in &values {
        match with_override(&base, key, v).and_then(|c| c.resolve().map(|_| c)) {
            Ok(c) => runs.push(c),
            Err(CliError::Config(list)) => bad.extend(list.into_iter().map(|m| format!("{key}={v}: {m}"))),
            Err(e) => return Err(e),
        }
    }
    if !bad.is_empty() {
        return Err(CliError::Config(bad));
    }
    let dir = out_dir(cli, &base);
    let mut top = OutputDir::create(&dir, RunManifest::new(&base.canonical_json(), base.seed, format!("sweep:{key}")))?;
    let mut summary = format!("index,{key},{}\n", run::Metrics::HEADER);
    let mut failure = None;
    for (i, (cfg, v)) in runs.iter().zip(&values).enumerate() {
        let sub = format!("run_{i:03}");
        match simulate_into(cfg, &dir.join(&sub)) {
            Ok((m, metrics, _)) => {
                top.adopt(&sub, &m.files);
                summary.push_str(&format!("{i},{v},{}\n", metrics.csv_fields()));
                if !cli.quiet {
                    say(&format!("{key}={v}: {}\n", metrics.csv_fields()));
                }
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    top.put("sweep.csv", summary.as_bytes())?;
    top.finish()?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_validate(cli: &Cli, source: &str) -> Result<(), CliError> {
    let cfg = load(source, cli.seed)?;
    let resolved = cfg.resolve()?;
    let derived = resolved.derived(&cfg)?;
    if !cli.quiet {
        say(&report_text(&derived));
        say("ok\n");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config } => cmd_simulate(&cli, config),
        Command::Sweep { config, param, values } => cmd_sweep(&cli, config, param, values),
        Command::Validate { config } => cmd_validate(&cli, config),
        Command::Recipes => {
            for (name, _) in recipes::RECIPES {
                say(&format!("{name}\n"));
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
