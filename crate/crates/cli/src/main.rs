//! `qkdlab`: thresholds, loss sweeps, figure data and protocol runs for
//! squeezed-state key distribution.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qkdlab_core::protocol::{EveModel, ProtocolConfig};

#[derive(Debug, Parser)]
#[command(name = "qkdlab", version, about = "Squeezed-state QKD analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,

    /// Round numbers to 6 significant digits (JSON: indent).
    #[arg(long, global = true)]
    pretty: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Widths and squeezing needed to keep the shift error under a threshold.
    Threshold {
        /// Error threshold; without it the 11%, 1% and 1e-6 rows are shown.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Convert one squeezing description into all the others.
    Convert(ConvertArgs),
    /// Maximum channel length against signal width, or error rate against
    /// channel length.
    LossSweep(SweepArgs),
    /// Shift-error probabilities against signal width.
    ErrorCurve {
        #[arg(long, allow_hyphen_values = true)]
        tilde_delta: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        lo: f64,
        #[arg(long, default_value_t = 0.74)]
        hi: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// One-sigma Wigner ellipses of the q- and p-squeezed signals.
    Wigner {
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        tilde_delta: f64,
    },
    /// Run the full protocol and print the outcome.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Include the public transcript in the output.
        #[arg(long)]
        transcript: bool,
    },
    /// Monte-Carlo raw-bit error rates next to the analytic prediction.
    Estimate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ConvertArgs {
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tilde_delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    r_two_mode: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepVariable {
    TildeDelta,
    KappaD,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value_t = SweepVariable::TildeDelta)]
    variable: SweepVariable,
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    #[arg(long, default_value_t = 500)]
    points: usize,
    /// Kappa-d sweeps: use the quantum-amplifier width.
    #[arg(long)]
    amplify: bool,
    /// Kappa-d sweeps: signal width.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    tilde_delta: f64,
}

/// Protocol settings; flags override values from `--config`.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// JSON protocol configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, env = "QKDLAB_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    tilde_delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    m_bits: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    kappa_d: Option<f64>,
    /// Bob rescales his outcomes by the inverse loss factor.
    #[arg(long)]
    amplify: bool,
    /// none, intercept[:WIDTH], or shift:DQ,DP
    #[arg(long, allow_hyphen_values = true)]
    eve: Option<String>,
    /// Abort threshold for the check error rate in either basis.
    #[arg(long)]
    threshold: Option<f64>,
}

impl ConfigArgs {
    fn build(&self) -> Result<ProtocolConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ProtocolConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.n {
            c.n = v;
        }
        if let Some(v) = self.tilde_delta {
            c.tilde_delta = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.m_bits {
            c.m_bits = v;
        }
        if let Some(v) = self.kappa_d {
            c.kappa_d = v;
        }
        if self.amplify {
            c.amplified = true;
        }
        if let Some(v) = self.threshold {
            c.abort_threshold = v;
        }
        if let Some(e) = &self.eve {
            c.eve = parse_eve(e, c.tilde_delta)?;
        }
        c.validate()?;
        Ok(c)
    }
}

/// `none`, `intercept` (resending at the signal width), `intercept:W`, or
/// `shift:DQ,DP`.
fn parse_eve(text: &str, signal_width: f64) -> Result<EveModel> {
    let (kind, arg) = match text.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (text, None),
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .with_context(|| format!("bad number `{s}` in --eve"))
    };
    Ok(match (kind, arg) {
        ("none", None) => EveModel::None,
        ("intercept", None) => EveModel::InterceptResend {
            resend_width: signal_width,
        },
        ("intercept", Some(w)) => EveModel::InterceptResend { resend_width: num(w)? },
        ("shift", Some(args)) => match args.split_once(',') {
            Some((dq, dp)) => EveModel::FixedShift {
                dq: num(dq)?,
                dp: num(dp)?,
            },
            None => bail!("--eve shift needs two values: shift:DQ,DP"),
        },
        _ => bail!("unknown --eve `{text}` (expected none, intercept[:WIDTH] or shift:DQ,DP)"),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
