//! Command-line surface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kdeverify_core::verify::Mode;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::imdp_file::{read_imdp, write_imdp};
use crate::output::{
    build_summary, ensure_dir, heatmap, lc_summary, strategy_map, verify_summary, write_json, write_text,
};
use crate::pipeline::{build_imdp, run_lc, verify_with_config, LcOutcome};
use crate::reproduce::reproduce;

#[derive(Debug, Parser)]
#[command(name = "kdeverify", version, about = "Data-driven verification of stochastic systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Run configuration (TOML, or JSON by extension).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Paper,
    Robust,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => Mode::Paper,
            ModeArg::Robust => Mode::Robust,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the Lipschitz constant of the transition density.
    EstimateLc(Common),
    /// Build an interval MDP abstraction.
    BuildImdp(Common),
    /// Check the configured formula on an IMDP.
    Verify {
        #[command(flatten)]
        common: Common,
        /// IMDP file; built from the config when omitted.
        #[arg(long)]
        imdp: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Re-run a built-in experiment and write a pass/fail table.
    Reproduce {
        /// example5, example6, example7_case1, case_study_1 or case_study_2.
        case: String,
        #[command(flatten)]
        common: Common,
        /// Number of seeds for the LC cases.
        #[arg(long)]
        seeds: Option<usize>,
    },
}

struct Ctx {
    cfg: RunConfig,
    seed: u64,
    out: PathBuf,
}

fn context(c: &Common) -> Result<Ctx, CliError> {
    let path = c.config.as_ref().ok_or_else(|| CliError::Config {
        path: "--config".into(),
        msg: "required".into(),
    })?;
    let cfg = RunConfig::load(path)?;
    let seed = c.seed.unwrap_or(cfg.seed);
    let out = c.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    ensure_dir(&out)?;
    Ok(Ctx { cfg, seed, out })
}

#[derive(Serialize)]
struct LcFile<'a> {
    seed: u64,
    #[serde(flatten)]
    outcome: &'a LcOutcome,
    config: &'a RunConfig,
}

fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs one command, printing a short summary to stdout.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::EstimateLc(c) => {
            configure_threads(c.threads);
            let ctx = context(&c)?;
            let o = run_lc(&ctx.cfg, ctx.seed)?;
            write_json(
                &ctx.out.join("lc_report.json"),
                &LcFile {
                    seed: ctx.seed,
                    outcome: &o,
                    config: &ctx.cfg,
                },
            )?;
            let s = lc_summary(&o);
            write_text(&ctx.out.join("lc_summary.txt"), &s)?;
            print!("{s}");
        }
        Command::BuildImdp(c) => {
            configure_threads(c.threads);
            let ctx = context(&c)?;
            let (imdp, mut manifest) = build_imdp(&ctx.cfg, ctx.seed)?;
            manifest.config.seed = ctx.seed;
            write_imdp(&ctx.out.join("imdp.json"), &imdp)?;
            write_json(&ctx.out.join("manifest.json"), &manifest)?;
            let s = build_summary(&manifest);
            write_text(&ctx.out.join("build_summary.txt"), &s)?;
            print!("{s}");
        }
        Command::Verify { common, imdp, mode } => {
            configure_threads(common.threads);
            let ctx = context(&common)?;
            let model = match &imdp {
                Some(p) => read_imdp(p)?,
                None => build_imdp(&ctx.cfg, ctx.seed)?.0,
            };
            let v = verify_with_config(&ctx.cfg, &model, mode.map(Mode::from))?;
            write_json(&ctx.out.join("result.json"), &v)?;
            if let Some(h) = heatmap(&model, &v) {
                write_json(&ctx.out.join("heatmap.json"), &h)?;
            }
            if let Some(sm) = strategy_map(&model, &v) {
                write_json(&ctx.out.join("strategy_map.json"), &sm)?;
            }
            let s = verify_summary(&v);
            write_text(&ctx.out.join("verify_summary.txt"), &s)?;
            print!("{s}");
        }
        Command::Reproduce { case, common, seeds } => {
            configure_threads(common.threads);
            let seed = common.seed.unwrap_or(0);
            let base = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let out = base.join(&case);
            let rep = reproduce(&case, seeds, seed, &out)?;
            print!("{}", rep.table());
            println!("\nwritten to {}", display(&out));
            if !rep.all_pass() {
                println!("some checks failed");
            }
        }
    }
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
