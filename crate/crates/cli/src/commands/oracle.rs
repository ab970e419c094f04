use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rivw_core::selection::{liberal_cutoff, SelectionConfig};
use rivw_core::simulate::{variance_check, RbMonteCarloConfig, VarianceCheck};

use crate::manifest::{CommandName, Run};

#[derive(clap::Args)]
pub struct Args {
    /// True exposure association
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma_x: f64,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = SelectionConfig::DEFAULT_ETA)]
    eta: f64,
    #[arg(long, default_value_t = 1_000_000)]
    draws: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write oracle.json and a manifest here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub gamma: f64,
    pub sigma_x: f64,
    pub lambda: f64,
    pub eta: f64,
    pub draws: u64,
    pub seed: u64,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let cfg = OracleConfig {
        gamma: args.gamma,
        sigma_x: args.sigma_x,
        lambda: args.lambda.unwrap_or_else(liberal_cutoff),
        eta: args.eta,
        draws: args.draws,
        seed: args.seed,
    };
    execute(&cfg, args.out.as_deref())
}

#[derive(Serialize)]
struct OracleJson<'a> {
    config: &'a OracleConfig,
    check: &'a VarianceCheck,
}

pub fn execute(cfg: &OracleConfig, out: Option<&Path>) -> anyhow::Result<()> {
    let check = variance_check(&RbMonteCarloConfig {
        ratio: cfg.gamma / cfg.sigma_x,
        sigma_x: cfg.sigma_x,
        lambda: cfg.lambda,
        eta: cfg.eta,
        draws: cfg.draws,
        seed: cfg.seed,
        bins: 1,
    })?;
    println!("{:<28} {:>14} {:>12} {:>8}", "quantity", "value", "mc_se", "z");
    println!("{:<28} {:>14.8e}", "closed-form variance", check.oracle);
    println!(
        "{:<28} {:>14.8e} {:>12.3e} {:>8.2}",
        "monte carlo variance", check.mc_variance, check.mc_variance_se, check.z_variance
    );
    println!(
        "{:<28} {:>14.8e} {:>12.3e} {:>8.2}",
        "mean variance estimate", check.mean_sigma2_rb, check.mean_sigma2_rb_se, check.z_sigma2
    );
    println!(
        "{:<28} {:>14.4}",
        "selection probability", check.monte_carlo.selection_probability
    );
    if let Some(out) = out {
        let mut run = Run::start(CommandName::Oracle, cfg, Some(cfg.seed), &[], out)?;
        run.write_json(
            "oracle.json",
            &OracleJson {
                config: cfg,
                check: &check,
            },
        )?;
        run.finish()?;
    }
    Ok(())
}
