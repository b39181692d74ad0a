use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relaxnn::harness::{
    run_evaluate, run_grad_check, run_reference, run_train, run_uq, ExperimentConfig, HarnessError, ModeName,
    UqOptions,
};
use relaxnn::systems::{Mode, ProblemId, RelaxType};

/// Relaxation neural networks for 1-D hyperbolic conservation laws.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the networks and write the loss history and parameters.
    Train(Common),
    /// Run the finite-volume reference solver.
    Reference(Common),
    /// Compare a trained network with the reference.
    Evaluate(Common),
    /// Train a stochastic network (unless --no-train) and compute its statistics.
    Uq {
        #[command(flatten)]
        common: Common,
        /// Use the saved parameters instead of training.
        #[arg(long)]
        no_train: bool,
    },
    /// Check loss and input gradients against finite differences.
    GradCheck {
        #[arg(long, default_value = "out/grad-check")]
        out: PathBuf,
        #[arg(long, default_value_t = relaxnn::rng::DEFAULT_SEED)]
        seed: u64,
        /// Random draws per system of the loss-gradient suite.
        #[arg(long, default_value_t = 20)]
        draws: usize,
        /// Random networks of the input-derivative suite.
        #[arg(long, default_value_t = 100)]
        cases: usize,
        /// Accepted for uniformity with the other commands; unused.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long, required_unless_present = "problem")]
    config: Option<PathBuf>,
    /// Start from the built-in defaults of a catalogued problem instead.
    #[arg(long, conflicts_with = "config")]
    problem: Option<ProblemId>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    relax_type: Option<u8>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match (&self.config, self.problem) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(id)) => ExperimentConfig::catalog(id),
            (None, None) => unreachable!("clap requires one of them"),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(epochs) = self.epochs {
            cfg.train.epochs = epochs;
        }
        let relax = |level: u8| RelaxType::from_level(level).map(Mode::Relax);
        let mode = match (self.mode, self.relax_type) {
            (Some(ModeName::Pinn), _) => Some(Mode::Pinn),
            (Some(ModeName::Relaxnn), Some(l)) | (None, Some(l)) => relax(l),
            (Some(ModeName::Relaxnn), None) => match cfg.mode()? {
                Mode::Pinn => Some(relaxnn::trainer::default_mode(cfg.problem)),
                m => Some(m),
            },
            (None, None) => None,
        };
        if let Some(mode) = mode {
            cfg.set_mode(mode)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Train(c) => {
            let cfg = c.load()?;
            let out = run_train(&cfg)?;
            if let Some(last) = out.history.last() {
                println!("final loss {:.6e} after {} epochs", last.loss.total, out.history.len());
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Reference(c) => {
            let cfg = c.load()?;
            let path = run_reference(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::Evaluate(c) => {
            let cfg = c.load()?;
            let report = run_evaluate(&cfg)?;
            println!("relative L2 {:.6e}", report.relative_l2);
            println!("wrote {}", cfg.out.join("report.csv").display());
        }
        Command::Uq { common, no_train } => {
            let cfg = common.load()?;
            for path in run_uq(&cfg, UqOptions { train: !no_train })? {
                println!("wrote {}", path.display());
            }
        }
        Command::GradCheck {
            out, seed, draws, cases, ..
        } => {
            let rows = run_grad_check(&out, draws, cases, seed)?;
            let failed: Vec<_> = rows.iter().filter(|r| !r.passed).collect();
            let worst = rows.iter().map(|r| r.max_rel_dev).fold(0.0, f64::max);
            println!("{} checks, {} failed, worst relative deviation {worst:.3e}", rows.len(), failed.len());
            println!("wrote {}", out.join("grad_check.csv").display());
            if let Some(r) = failed.first() {
                return Err(HarnessError::Mismatch(format!(
                    "gradient check {} case {} failed: {:.3e}",
                    r.suite, r.case, r.max_rel_dev
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
