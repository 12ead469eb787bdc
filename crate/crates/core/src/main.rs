use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use neurolabel::pipeline::{self, Overrides, RunConfig};
use neurolabel::stats::format_p;
use neurolabel::{Error, SelectionPolicy};

const EXIT_ORACLE_MISMATCH: u8 = 4;

#[derive(Parser)]
#[command(
    name = "neurolabel",
    version,
    about = "Label hidden neurons by concept induction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run config (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: PathBuf,
    /// Example selection policy: main, case1, case2, case3, case4.
    #[arg(long)]
    policy: Option<String>,
    /// Which ranked hypothesis becomes the label.
    #[arg(long)]
    rank: Option<usize>,
    /// Number of ranked hypotheses kept per neuron.
    #[arg(long = "top-k")]
    top_k: Option<usize>,
    /// Holdout split seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Use the word list of the top K hypotheses as the label.
    #[arg(long = "label-list")]
    label_list: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Induce ranked label hypotheses for every active neuron.
    Hypothesize(Common),
    /// Confirm chosen labels against retrieved target images.
    Confirm(Common),
    /// Rank-test confirmed labels on held-out images.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Also evaluate neurons whose label was not confirmed.
        #[arg(long)]
        include_unconfirmed: bool,
    },
    /// Compare beam search against exhaustive enumeration.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Run even above the exhaustive-search atom limit.
        #[arg(long)]
        force: bool,
    },
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(&common.config)?;
    let policy = common
        .policy
        .as_deref()
        .map(str::parse::<SelectionPolicy>)
        .transpose()?;
    cfg.apply(&Overrides {
        policy,
        rank: common.rank,
        top_k: common.top_k,
        seed: common.seed,
        label_list: common.label_list,
    });
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Hypothesize(common) => {
            let cfg = load(&common)?;
            let report = pipeline::cmd_hypothesize(&cfg)?;
            println!(
                "{} active neurons labelled, {} skipped -> {}",
                report.neurons.len(),
                report.skipped.len(),
                cfg.paths
                    .output_dir
                    .join(pipeline::HYPOTHESES_JSON)
                    .display()
            );
        }
        Command::Confirm(common) => {
            let cfg = load(&common)?;
            let report = pipeline::cmd_confirm(&cfg)?;
            println!(
                "{} of {} labels confirmed -> {}",
                report.confirmed.len(),
                report.neurons.len(),
                cfg.paths
                    .output_dir
                    .join(pipeline::CONFIRMATION_JSON)
                    .display()
            );
        }
        Command::Evaluate {
            common,
            include_unconfirmed,
        } => {
            let mut cfg = load(&common)?;
            cfg.evaluate.include_unconfirmed |= include_unconfirmed;
            let report = pipeline::cmd_evaluate(&cfg)?;
            for r in &report.rows {
                println!(
                    "neuron {:>3}  {:<30} z = {:>7.2}  p = {}",
                    r.neuron,
                    r.label,
                    r.test.z,
                    format_p(r.test.p_one_tailed)
                );
            }
            println!(
                "Of the {} null hypotheses, {} are rejected (p < {}).",
                report.summary.evaluated, report.summary.rejected, report.alpha
            );
        }
        Command::Oracle { common, force } => {
            let mut cfg = load(&common)?;
            cfg.force_oracle |= force;
            let report = pipeline::cmd_oracle(&cfg)?;
            println!(
                "{} neurons compared, {} with differing rankings ({} where the beam held every atom)",
                report.neurons.len(),
                report.mismatched_neurons,
                report.hard_mismatches
            );
            if report.hard_mismatches > 0 {
                return Ok(ExitCode::from(EXIT_ORACLE_MISMATCH));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
