//! Command-line surface. Every flag is optional and overrides the config file,
//! which overrides the built-in defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, Context, Outcome};
use crate::config::{self, Params};
use crate::error::CliResult;
use crate::output::{output_root, OUT_ENV};
use crate::params::{CompareParams, DistParams, DualVerifyParams, HaarCheckParams, IprParams};

#[derive(Debug, Parser)]
#[command(
    name = "fockdu",
    version,
    about = "Fock-space delocalization in self-dual kicked Ising chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// IPR and participation entropies against the exact dynamics.
    Ipr(IprArgs),
    /// Histograms of bit-string probabilities.
    Dist(DistArgs),
    /// Direct evolution against dual matrix products.
    DualVerify(DualVerifyArgs),
    /// Monte-Carlo Haar moments against the closed form.
    HaarCheck(HaarCheckArgs),
    /// Ergodic approach of dual, random and perturbed circuits.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// `key = value` or JSON parameters; a previous manifest.json reruns that run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output root.
    #[arg(long, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    /// Also render SVG figures from the CSVs.
    #[arg(long)]
    pub plot: bool,
    /// Suppress the per-row report.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Chain length.
    #[arg(long = "L")]
    pub sites: Option<String>,
    /// Phase `g`; default fields `h_j = g`. Accepts `pi/3`-style values.
    #[arg(long)]
    pub g: Option<String>,
    /// Ising coupling.
    #[arg(long = "J")]
    pub coupling: Option<String>,
    /// Kick strength.
    #[arg(long)]
    pub b: Option<String>,
    /// Per-site fields, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
    /// dual | boundary-kick | boundary-generic | mid1 | mid2 | random
    #[arg(long)]
    pub variant: Option<String>,
    /// Boundary kick angle.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Boundary gate as 8 numbers: row-major re, im pairs.
    #[arg(long, allow_hyphen_values = true)]
    pub gate: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
}

impl ChainArgs {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("L", self.sites.clone()),
            ("g", self.g.clone()),
            ("J", self.coupling.clone()),
            ("b", self.b.clone()),
            ("h", self.h.clone()),
            ("variant", self.variant.clone()),
            ("theta", self.theta.clone()),
            ("gate", self.gate.clone()),
            ("seed", self.seed.clone()),
        ]
    }
}

fn flag(b: bool) -> Option<String> {
    b.then(|| "true".to_string())
}

#[derive(Debug, Args)]
pub struct IprArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Orders, comma separated.
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub t_max: Option<String>,
    /// Dump |amps|^2 of every period (binary).
    #[arg(long)]
    pub dump: bool,
    /// Exit with status 3 unless every ratio to the closed form is within 5%.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Periods, comma separated.
    #[arg(long)]
    pub t: Option<String>,
    /// Shorthand for `--t 1,2,...,t-max`.
    #[arg(long)]
    pub t_max: Option<u32>,
    #[arg(long)]
    pub bins: Option<String>,
    /// Upper histogram edge in units of N p.
    #[arg(long)]
    pub x_max: Option<String>,
    /// Exit with status 3 if a KS distance to the finite-time law is too large.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct DualVerifyArgs {
    /// Largest chain length.
    #[arg(long = "L")]
    pub sites: Option<String>,
    #[arg(long)]
    pub t_max: Option<String>,
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gate: Option<String>,
    #[arg(long)]
    pub tolerance: Option<String>,
    /// Write U(0), U(1) and boundary vectors as JSON.
    #[arg(long)]
    pub dump_matrices: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct HaarCheckArgs {
    /// Matrix dimension.
    #[arg(long)]
    pub d: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Largest accepted |z|.
    #[arg(long)]
    pub sigma: Option<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Models, comma separated: dual, random, mid1, mid2.
    #[arg(long)]
    pub models: Option<String>,
    /// Chain lengths, comma separated.
    #[arg(long = "L")]
    pub sites: Option<String>,
    #[arg(long)]
    pub realizations: Option<String>,
    #[arg(long)]
    pub t_max: Option<String>,
    /// Ergodic window in nats.
    #[arg(long)]
    pub threshold: Option<String>,
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Exit with status 3 unless t* behaves as expected across sizes.
    #[arg(long)]
    pub check: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn params_from(
    common: &CommonArgs,
    subcommand: &str,
    mut flags: Vec<(&'static str, Option<String>)>,
) -> CliResult<Params> {
    let mut params = match &common.config {
        Some(p) => config::load(p, subcommand)?,
        None => Params::new(),
    };
    flags.push(("format", common.format.clone()));
    config::overlay(&mut params, &flags);
    Ok(params)
}

fn context(common: &CommonArgs) -> Context {
    let mut ctx = Context::new(output_root(common.out.as_deref()), common.threads);
    ctx.quiet = common.quiet;
    ctx
}

/// Resolves parameters and runs the chosen subcommand.
pub fn execute(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Ipr(a) => {
            let mut flags = a.chain.flags();
            flags.extend([
                ("q", a.q.clone()),
                ("t_max", a.t_max.clone()),
                ("dump", flag(a.dump)),
                ("check", flag(a.check)),
                ("plot", flag(a.common.plot)),
            ]);
            let p: IprParams = config::resolve(params_from(&a.common, "ipr", flags)?)?;
            commands::ipr::run(&p, &context(&a.common))
        }
        Command::Dist(a) => {
            let times = a.t.clone().or_else(|| {
                a.t_max.map(|m| {
                    (1..=m.max(1))
                        .map(|t| t.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                })
            });
            let mut flags = a.chain.flags();
            flags.extend([
                ("t", times),
                ("bins", a.bins.clone()),
                ("x_max", a.x_max.clone()),
                ("check", flag(a.check)),
                ("plot", flag(a.common.plot)),
            ]);
            let p: DistParams = config::resolve(params_from(&a.common, "dist", flags)?)?;
            commands::dist::run(&p, &context(&a.common))
        }
        Command::DualVerify(a) => {
            let flags = vec![
                ("L", a.sites.clone()),
                ("t_max", a.t_max.clone()),
                ("g", a.g.clone()),
                ("variant", a.variant.clone()),
                ("theta", a.theta.clone()),
                ("gate", a.gate.clone()),
                ("tolerance", a.tolerance.clone()),
                ("dump_matrices", flag(a.dump_matrices)),
            ];
            let p: DualVerifyParams =
                config::resolve(params_from(&a.common, "dual-verify", flags)?)?;
            commands::dual_verify::run(&p, &context(&a.common))
        }
        Command::HaarCheck(a) => {
            let flags = vec![
                ("d", a.d.clone()),
                ("q", a.q.clone()),
                ("samples", a.samples.clone()),
                ("seed", a.seed.clone()),
                ("sigma", a.sigma.clone()),
            ];
            let p: HaarCheckParams = config::resolve(params_from(&a.common, "haar-check", flags)?)?;
            commands::haar_check::run(&p, &context(&a.common))
        }
        Command::Compare(a) => {
            let flags = vec![
                ("models", a.models.clone()),
                ("L", a.sites.clone()),
                ("realizations", a.realizations.clone()),
                ("t_max", a.t_max.clone()),
                ("threshold", a.threshold.clone()),
                ("g", a.g.clone()),
                ("seed", a.seed.clone()),
                ("check", flag(a.check)),
                ("plot", flag(a.common.plot)),
            ];
            let p: CompareParams = config::resolve(params_from(&a.common, "compare", flags)?)?;
            commands::compare::run(&p, &context(&a.common))
        }
    }
}
