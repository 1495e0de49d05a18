//! `tropseries`: analyses, sweeps and fixture regeneration for permutation
//! arrays and tropical modules.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 usage or input error.

mod analyze;
mod counterexample;
mod dependence;
mod figures;
mod realize;
mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "tropseries", version, about = "Permutation arrays and tropical modules on metric graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(clap::Args, Clone)]
pub struct Global {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for sweeps; results are merged in enumeration order.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Largest cube, in positions, that may be enumerated. Without it the
    /// default limits apply: r <= 2 with d <= 5, or r <= 4 with d <= 3.
    #[arg(long, global = true)]
    pub budget: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    AsciiGrid,
}

#[derive(Subcommand)]
enum Command {
    /// Ranks, redundancy and closure of a dot array.
    Analyze(analyze::Args),
    /// Enumerate permutation arrays and run property checks on their closures.
    Sweep(sweep::Args),
    /// The rank-3 dimension-4 array whose closure fails P4, with extensions.
    Counterexample(counterexample::Args),
    /// Realize a permutation array on a star graph.
    Realize(realize::Args),
    /// Find or verify tropical dependence of functions in a bundle.
    Dependence(dependence::Args),
    /// Regenerate the figure data and compare with the committed goldens.
    Figures(figures::Args),
}

/// A rendered report and whether every check in it passed.
pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub ok: bool,
}

impl Outcome {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("plain data");
                s.push('\n');
                s
            }
            Format::AsciiGrid => self.text.clone(),
        }
    }
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(cli: Cli) -> Result<Outcome> {
    let g = &cli.global;
    match cli.command {
        Command::Analyze(a) => analyze::run(a, g),
        Command::Sweep(a) => sweep::run(a, g),
        Command::Counterexample(a) => counterexample::run(a, g),
        Command::Realize(a) => realize::run(a, g),
        Command::Dependence(a) => dependence::run(a, g),
        Command::Figures(a) => figures::run(a, g),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.global.format;
    let out = cli.global.out.clone();
    let outcome = match run(cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let rendered = outcome.render(format);
    match out {
        Some(path) => {
            if let Err(e) = fs::write(&path, rendered) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{rendered}"),
    }
    if outcome.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

pub fn fmt_pos(x: &[u8]) -> String {
    let parts: Vec<String> = x.iter().map(u8::to_string).collect();
    format!("({})", parts.join(","))
}

pub fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}
