use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rca_lab::experiment::{
    configure_threads, exit_code, exit_code_for, run_experiment, write_output, ExperimentConfig,
    Format,
};
use rca_lab::{Error, LocalRule};

#[derive(Parser, Debug)]
#[command(
    name = "rca-lab",
    version,
    about = "Noisy cellular automata experiments"
)]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output` or `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "RCA_LAB_THREADS")]
    threads: Option<usize>,
    /// Table format.
    #[arg(long, value_parser = ["csv", "jsonl"])]
    format: Option<String>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prints surjectivity, injectivity and balance of a one-dimensional rule.
    AnalyzeRule {
        /// Wolfram code of an elementary rule.
        #[arg(long, conflicts_with = "rule")]
        code: Option<u32>,
        /// Rule as JSON.
        #[arg(long)]
        rule: Option<String>,
        /// Longest word checked for balance.
        #[arg(long, default_value_t = 8)]
        max_word_len: usize,
    },
}

fn fail(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code(err) as u8)
}

fn analyze_rule(code: Option<u32>, rule: Option<String>, max_word_len: usize) -> Result<(), Error> {
    let rule = match (code, rule) {
        (Some(c), None) => LocalRule::elementary(c)?,
        (None, Some(text)) => {
            serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
        }
        _ => return Err(Error::Config("give exactly one of --code or --rule".into())),
    };
    let a = rca_lab::analysis::analyze(&rule, max_word_len)?;
    println!("{}", serde_json::to_string(&a)?);
    Ok(())
}

fn run(cli: Cli) -> Result<i32, Error> {
    if let Some(t) = cli.threads {
        configure_threads(t)?;
    }
    if let Some(Command::AnalyzeRule {
        code,
        rule,
        max_word_len,
    }) = cli.command
    {
        analyze_rule(code, rule, max_word_len)?;
        return Ok(0);
    }
    let path = cli
        .config
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = cli.seed {
        config.override_seed(seed);
    }
    if let Some(f) = cli.format {
        config.override_format(f.parse::<Format>()?);
    }
    let out = run_experiment(&config)?;
    let dir = cli
        .out
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    for p in write_output(&config, &out, &dir)? {
        eprintln!("wrote {}", p.display());
    }
    if let Some(v) = &out.stdout {
        println!("{v}");
    }
    if out.violations > 0 {
        eprintln!("{} bound violation(s)", out.violations);
    }
    Ok(exit_code_for(&out))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => fail(&e),
    }
}
