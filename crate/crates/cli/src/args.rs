//! Command-line surface. Flags override values from `--config`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use moment_control::spectral::Kind;

use crate::commands::{cmd_cost_sweep, cmd_lemma_verify, cmd_spectrum, cmd_synth, Outcome};
use crate::config::{ExperimentConfig, Preset};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "fastctl", version, about = "Fast boundary controls by the moment method: synthesis, cost sweeps, lemma checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the spectrum as JSON together with its asymptotic fit.
    Spectrum(Overrides),
    /// Biorthogonal and minimal-norm controls for one initial state, checked by simulation.
    Synth(Overrides),
    /// Truncated control cost and its lower bound over a T grid, with exponent fits.
    CostSweep(Overrides),
    /// Integral identities and the inequality suite.
    LemmaVerify(Overrides),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Parabolic,
    Dispersive,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file; flags given here take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub modes: Option<usize>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// comma separated, e.g. 0.5,0.25,0.12
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub digits: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// fractional exponent for the fractional presets
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub length: Option<f64>,
    /// cost-sweep: add the biorthogonal upper estimate
    #[arg(long)]
    pub biorthogonal: bool,
}

impl Overrides {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.preset {
            c.preset = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = Some(v);
        }
        if let Some(v) = self.rate {
            c.rate = v;
        }
        if let Some(v) = self.modes {
            c.modes = v;
        }
        if let Some(k) = self.kind {
            c.kind = Some(match k {
                KindArg::Parabolic => Kind::Parabolic,
                KindArg::Dispersive => Kind::Dispersive,
            });
        }
        if let Some(v) = &self.t_grid {
            c.t_grid = v.clone();
        }
        if let Some(v) = self.delta {
            c.delta = v;
        }
        if let Some(v) = self.digits {
            c.digits = Some(v);
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.out {
            c.out = v.clone();
        }
        if let Some(v) = self.gamma {
            c.gamma = v;
        }
        if let Some(v) = self.length {
            c.length = Some(v);
        }
        if self.biorthogonal {
            c.biorthogonal = true;
        }
        Ok(c)
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Spectrum(o) => cmd_spectrum(&o.resolve()?),
        Command::Synth(o) => cmd_synth(&o.resolve()?),
        Command::CostSweep(o) => cmd_cost_sweep(&o.resolve()?),
        Command::LemmaVerify(o) => cmd_lemma_verify(&o.resolve()?),
    }
}
