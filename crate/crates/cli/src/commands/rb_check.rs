use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rivw_core::selection::{liberal_cutoff, SelectionConfig};
use rivw_core::simulate::{rb_monte_carlo, RbMonteCarlo, RbMonteCarloConfig};

use crate::manifest::{CommandName, Run};
use crate::tsv::{num, Tsv};

#[derive(clap::Args)]
pub struct Args {
    /// Comma-separated gamma / sigma_x values; defaults to 0.1, 1 and 4 times lambda
    #[arg(long, value_delimiter = ',')]
    ratios: Vec<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = SelectionConfig::DEFAULT_ETA)]
    eta: f64,
    /// Selected draws per ratio
    #[arg(long, default_value_t = 1_000_000)]
    draws: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    sigma_x: f64,
    #[arg(long, default_value_t = 60)]
    bins: usize,
    #[arg(long, default_value = "rivw_out")]
    out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbCheckConfig {
    pub ratios: Vec<f64>,
    pub lambda: f64,
    pub eta: f64,
    pub sigma_x: f64,
    pub draws: u64,
    pub seed: u64,
    pub bins: usize,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let lambda = args.lambda.unwrap_or_else(liberal_cutoff);
    let ratios = if args.ratios.is_empty() {
        vec![0.1 * lambda, lambda, 4.0 * lambda]
    } else {
        args.ratios
    };
    let cfg = RbCheckConfig {
        ratios,
        lambda,
        eta: args.eta,
        sigma_x: args.sigma_x,
        draws: args.draws,
        seed: args.seed,
        bins: args.bins,
    };
    execute(&cfg, &args.out)
}

#[derive(Serialize)]
struct RbCheckJson<'a> {
    results: &'a [RbMonteCarlo],
}

pub fn execute(cfg: &RbCheckConfig, out: &Path) -> anyhow::Result<()> {
    let results = cfg
        .ratios
        .iter()
        .map(|&ratio| {
            rb_monte_carlo(&RbMonteCarloConfig {
                ratio,
                sigma_x: cfg.sigma_x,
                lambda: cfg.lambda,
                eta: cfg.eta,
                draws: cfg.draws,
                seed: cfg.seed,
                bins: cfg.bins,
            })
        })
        .collect::<rivw_core::Result<Vec<_>>>()?;

    let mut run = Run::start(CommandName::RbCheck, cfg, Some(cfg.seed), &[], out)?;
    let preamble = run.preamble();
    let mut t = Tsv::create(
        &run.output("rb_summary.tsv"),
        &preamble,
        &[
            "ratio",
            "gamma",
            "selection_probability",
            "raw_mean",
            "raw_mean_se",
            "rb_mean",
            "rb_mean_se",
            "rb_variance",
            "mean_sigma2_rb",
            "rb_z",
            "raw_z",
        ],
    )?;
    for r in &results {
        t.row(&[
            num(r.config.ratio),
            num(r.gamma),
            num(r.selection_probability),
            num(r.raw.mean),
            num(r.raw.mean_se),
            num(r.rb.mean),
            num(r.rb.mean_se),
            num(r.rb.variance),
            num(r.sigma2_rb.mean),
            num((r.rb.mean - r.gamma) / r.rb.mean_se),
            num((r.raw.mean - r.gamma) / r.raw.mean_se),
        ])?;
    }
    t.finish()?;

    let mut h = Tsv::create(
        &run.output("rb_histogram.tsv"),
        &preamble,
        &["ratio", "estimate", "bin_low", "bin_high", "count"],
    )?;
    for r in &results {
        for (name, hist) in [("raw", &r.raw_histogram), ("rb", &r.rb_histogram)] {
            for (lo, hi, c) in hist.rows() {
                h.row(&[num(r.config.ratio), name.to_string(), num(lo), num(hi), c.to_string()])?;
            }
        }
    }
    h.finish()?;
    run.write_json("rb_check.json", &RbCheckJson { results: &results })?;
    run.finish()?;

    println!(
        "{:>9} {:>11} {:>11} {:>8} {:>11} {:>8}",
        "ratio", "gamma", "raw_mean", "raw_z", "rb_mean", "rb_z"
    );
    for r in &results {
        println!(
            "{:>9.4} {:>11.5} {:>11.5} {:>8.2} {:>11.5} {:>8.2}",
            r.config.ratio,
            r.gamma,
            r.raw.mean,
            (r.raw.mean - r.gamma) / r.raw.mean_se,
            r.rb.mean,
            (r.rb.mean - r.gamma) / r.rb.mean_se
        );
    }
    Ok(())
}
