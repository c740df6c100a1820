use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qudit_tele::qcore::MAX_DIM;

/// Tolerance for accepting λ as already normalized; anything further off is
/// rescaled with a warning.
const LAMBDA_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "qtele",
    version,
    about = "Teleportation of a d-level system through an arbitrary pure shared state"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form fidelity bound, estimation bound and maximal singlet fraction.
    Bound(StateArgs),
    /// Exact and Monte-Carlo mean fidelity of the standard protocol.
    Simulate {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Fidelity bound and exact fidelity over a grid of d = 2 states (cos θ, sin θ).
    Sweep {
        #[arg(long, default_value_t = 0.0)]
        theta_min: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        theta_max: f64,
        /// Number of intervals; the grid has steps + 1 points including both ends.
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
    /// Monte-Carlo check of the fourth-moment operators M_kl against their closed form.
    VerifyMkl {
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        mc: McArgs,
        /// Allowed deviation in standard errors.
        #[arg(long, default_value_t = 4.0)]
        sigmas: f64,
    },
    /// Completeness, optimality and Kraus checks of a protocol.
    CheckProtocol {
        /// `standard` or the path of a protocol JSON file.
        source: String,
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Brute-force search over random POVMs against the fidelity bound.
    Search {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        /// POVM outcome count; defaults to d².
        #[arg(long)]
        outcomes: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// State-estimation fidelity of the standard measurement with optimal guesses.
    Estimate {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Writes the standard protocol for the given state as a protocol JSON file.
    ExportProtocol {
        #[command(flatten)]
        state: StateArgs,
    },
}

#[derive(Debug, Args)]
pub struct StateArgs {
    /// Qudit dimension; inferred from --lambdas when omitted.
    #[arg(long)]
    pub d: Option<usize>,
    /// Schmidt coefficients, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_negative_numbers = true,
        conflicts_with = "theta"
    )]
    pub lambdas: Option<Vec<f64>>,
    /// d = 2 shorthand for λ = (cos θ, sin θ).
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Monte-Carlo worker count. Results depend on (seed, threads).
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// λ after sorting and normalization, with notes on what was changed.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedState {
    pub d: usize,
    pub lambdas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

pub fn check_dim(d: usize) -> Result<()> {
    if !(2..=MAX_DIM).contains(&d) {
        bail!("dimension d must be in 2..={MAX_DIM}, got {d}");
    }
    Ok(())
}

impl StateArgs {
    /// `default_uniform` supplies maximal entanglement when no λ is given.
    pub fn resolve(&self, default_uniform: bool) -> Result<ResolvedState> {
        let (raw, theta) = match (&self.lambdas, self.theta) {
            (Some(l), _) => (l.clone(), None),
            (None, Some(t)) => {
                if let Some(d) = self.d.filter(|&d| d != 2) {
                    bail!("--theta describes a d = 2 state, but --d is {d}");
                }
                if !t.is_finite() {
                    bail!("--theta must be finite");
                }
                (vec![t.cos(), t.sin()], Some(t))
            }
            (None, None) => match self.d {
                Some(d) if default_uniform => {
                    check_dim(d)?;
                    (vec![1.0 / (d as f64).sqrt(); d], None)
                }
                _ => bail!("provide the shared state with --lambdas or --theta"),
            },
        };
        let d = raw.len();
        if let Some(expected) = self.d {
            if expected != d {
                bail!("--d is {expected} but {d} Schmidt coefficients were given");
            }
        }
        check_dim(d)?;
        resolve_lambdas(raw, theta)
    }
}

fn resolve_lambdas(mut lambdas: Vec<f64>, theta: Option<f64>) -> Result<ResolvedState> {
    let mut warnings = Vec::new();
    if let Some(x) = lambdas.iter().find(|x| !x.is_finite()) {
        bail!("Schmidt coefficients must be finite, got {x}");
    }
    // cos/sin of θ produce tiny negative values at grid points like π/2
    for x in lambdas.iter_mut().filter(|x| x.abs() < 1e-15) {
        *x = 0.0;
    }
    if let Some(x) = lambdas.iter().find(|&&x| x < 0.0) {
        if theta.is_some() {
            // (cos θ, sin θ) with a negative entry is a local phase away from |cos θ|, |sin θ|
            lambdas.iter_mut().for_each(|x| *x = x.abs());
            warnings.push("negative Schmidt coefficient from θ replaced by its modulus".into());
        } else {
            bail!("Schmidt coefficients must be nonnegative, got {x}");
        }
    }
    let norm_sq: f64 = lambdas.iter().map(|x| x * x).sum();
    if norm_sq == 0.0 {
        bail!("Schmidt coefficients must not all be zero");
    }
    if !lambdas.windows(2).all(|w| w[0] >= w[1]) {
        lambdas.sort_by(|a, b| b.total_cmp(a));
        warnings.push("Schmidt coefficients sorted into descending order".into());
    }
    if (norm_sq - 1.0).abs() > LAMBDA_NORM_TOL {
        warnings.push(format!(
            "Schmidt coefficients rescaled to unit norm (sum of squares was {norm_sq})"
        ));
    }
    let norm = norm_sq.sqrt();
    lambdas.iter_mut().for_each(|x| *x /= norm);
    Ok(ResolvedState {
        d: lambdas.len(),
        lambdas,
        theta,
        warnings,
    })
}
