//! `hintlock`: run the guessing, hint-scheme and exponent verifiers from a
//! JSON experiment config.

mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::{Output, Run};
use config::ExperimentConfig;

const DEFAULT_SEED: u64 = 2024;
const DEFAULT_BUDGET: u64 = 20_000_000;

#[derive(Parser)]
#[command(name = "hintlock", version, about = "Verify guessing-moment bounds for secrets split into hints")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every random instance; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Step budget for exhaustive oracles; overrides the config.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Read source probabilities as exact decimals or fractions.
    #[arg(long, global = true)]
    rational: bool,
    /// Worker threads for parallel oracles. HINTLOCK_JOBS takes precedence.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Write CSV here instead of stdout; a markdown summary goes next to it.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Leave out the runtime column so repeated runs are byte-identical.
    #[arg(long, global = true)]
    no_runtime: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Conditional Renyi entropy over a grid of orders.
    Entropy(ConfigArg),
    /// Optimal guessing moments, their bounds and side-information encoders.
    Guess(ConfigArg),
    /// Task encoders and the conversions between lists and guesses.
    Task(ConfigArg),
    /// Two-hint schemes against Eve's exact genie.
    Twohint(ConfigArg),
    /// Hints spread over disks with nested MDS codes.
    Disks(ConfigArg),
    /// Guessing under a distortion criterion.
    Distortion(ConfigArg),
    /// Privacy exponents and rate-distortion calculators.
    Exponent(ConfigArg),
    /// Every verification suite on seeded instances.
    VerifyAll(VerifyArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// JSON experiment config.
    config: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Optional JSON config (seed, budget, suites, output).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run only these suites.
    #[arg(long = "suite")]
    suites: Vec<String>,
}

fn jobs(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("HINTLOCK_JOBS") {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| format!("HINTLOCK_JOBS={v:?} is not a count"))?)),
        Err(_) => Ok(flag),
    }
}

fn summary_path(csv: &Path) -> PathBuf {
    csv.with_extension("md")
}

fn emit(out: &Output, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            fs::write(p, &out.csv).with_context(|| format!("writing {}", p.display()))?;
            if let Some(r) = &out.report {
                let md = summary_path(p);
                fs::write(&md, r.markdown_summary()).with_context(|| format!("writing {}", md.display()))?;
            }
        }
        None => {
            print!("{}", out.csv);
            if let Some(r) = &out.report {
                eprint!("{}", r.markdown_summary());
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = jobs(cli.global.jobs)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let (cfg, base) = match &cli.command {
        Command::Entropy(a)
        | Command::Guess(a)
        | Command::Task(a)
        | Command::Twohint(a)
        | Command::Disks(a)
        | Command::Distortion(a)
        | Command::Exponent(a) => ExperimentConfig::load(&a.config)?,
        Command::VerifyAll(v) => match &v.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => (ExperimentConfig::default(), PathBuf::new()),
        },
    };
    let g = &cli.global;
    let budget = g.budget.or(cfg.budget).unwrap_or(DEFAULT_BUDGET);
    anyhow::ensure!(budget > 0, "--budget must be positive");
    let r = Run {
        cfg: &cfg,
        base: &base,
        seed: g.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        budget,
        rational: g.rational,
    };
    let output = g.output.clone().or_else(|| cfg.output.as_ref().map(|p| base.join(p)));
    let nr = g.no_runtime;
    let out = match &cli.command {
        Command::Entropy(_) => r.entropy()?,
        Command::Guess(_) => r.guess(nr)?,
        Command::Task(_) => r.task(nr)?,
        Command::Twohint(_) => r.twohint(nr)?,
        Command::Disks(_) => r.disks(nr)?,
        Command::Distortion(_) => r.distortion(nr)?,
        Command::Exponent(_) => {
            let (out, witnesses) = r.exponent()?;
            for (i, w) in witnesses {
                match &output {
                    Some(p) => {
                        let wp = p.with_file_name(format!(
                            "{}.witness{i}.json",
                            p.file_stem().and_then(|s| s.to_str()).unwrap_or("exponent")
                        ));
                        fs::write(&wp, w).with_context(|| format!("writing {}", wp.display()))?;
                    }
                    None => eprintln!("witness {i}: {w}"),
                }
            }
            out
        }
        Command::VerifyAll(v) => r.verify_all(&v.suites, nr)?,
    };
    emit(&out, output.as_deref())?;
    Ok(out.report.as_ref().is_none_or(|rep| rep.all_pass()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
