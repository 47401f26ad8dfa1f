//! `rbgpc`: offline/online reduced basis gPC experiments from a JSON configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rbgpc::harness::{self, exit, ExperimentConfig};
use rbgpc::Result;

#[derive(Parser)]
#[command(name = "rbgpc", version, about = "Goal-oriented reduced basis surrogates for gPC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; omitted fields take their defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides `output_dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Overrides `threads`.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(t) = self.threads {
            config.threads = t;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Greedy build of the reduced basis; writes the artifact.
    Offline(Common),
    /// Surrogate gPC coefficients from a stored artifact.
    Online {
        #[command(flatten)]
        common: Common,
        /// Artifact directory written by `offline`.
        #[arg(short, long)]
        artifact: PathBuf,
    },
    /// Brute-force gPC coefficients from one truth solve per node.
    Direct {
        #[command(flatten)]
        common: Common,
        /// Run even when the node count exceeds `direct_budget`.
        #[arg(long)]
        force: bool,
    },
    /// Offline + online + direct, with error-decay and efficiency tables.
    Reproduce {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        force: bool,
    },
    /// Certification suite: estimator, coefficient and QoI bounds.
    Validate(Common),
    /// Prints the default configuration.
    Config,
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Offline(common) => {
            let s = harness::cmd_offline(&common.load()?)?;
            println!(
                "N = {}  eps = {:.3e}  Q = {}  offline = {:.3} s  artifact = {}",
                s.basis_size,
                s.epsilon,
                s.quadrature_size,
                s.seconds,
                s.artifact.display()
            );
            Ok(if s.converged { exit::SUCCESS } else { exit::NOT_CONVERGED })
        }
        Command::Online { common, artifact } => {
            let s = harness::cmd_online(&common.load()?, &artifact)?;
            println!(
                "N = {}  Q = {}  M = {}  online = {:.3} s  truth solves = {}",
                s.basis_size, s.quadrature_size, s.terms, s.seconds, s.truth_solves
            );
            Ok(exit::SUCCESS)
        }
        Command::Direct { common, force } => {
            let s = harness::cmd_direct(&common.load()?, force)?;
            println!(
                "Q = {}  M = {}  direct = {:.3} s  truth solves = {}",
                s.quadrature_size, s.terms, s.seconds, s.truth_solves
            );
            Ok(exit::SUCCESS)
        }
        Command::Reproduce { common, force } => {
            let r = harness::reproduce(&common.load()?, force)?;
            println!("{:>4} {:>12} {:>12} {:>12}", "N", "eps", "xi_mean", "xi_norm");
            let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3e}"));
            for row in &r.convergence {
                println!(
                    "{:>4} {:>12.3e} {:>12} {:>12}",
                    row.n,
                    row.epsilon,
                    fmt(row.xi_mean),
                    fmt(row.xi_norm)
                );
            }
            println!(
                "offline = {:.3} s (setup {:.3} s)  online = {:.3} s  direct = {}  ratio = {}",
                r.t_offline,
                r.t_offline_setup,
                r.t_online,
                r.t_direct.map_or("-".into(), |t| format!("{t:.3} s")),
                r.efficiency_ratio.map_or("-".into(), |x| format!("{x:.2}"))
            );
            Ok(if r.converged { exit::SUCCESS } else { exit::NOT_CONVERGED })
        }
        Command::Validate(common) => {
            let r = harness::cmd_validate(&common.load()?)?;
            println!(
                "N = {}  Q = {}  violations = {}",
                r.basis_size,
                r.quadrature_size,
                r.violations()
            );
            Ok(if r.passed() { exit::SUCCESS } else { exit::CERTIFICATION })
        }
        Command::Config => {
            let text = serde_json::to_string_pretty(&ExperimentConfig::default())?;
            println!("{text}");
            Ok(exit::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            harness::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
