use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rivw_core::gwas_io::{write_ld, write_summary};
use rivw_core::simulate::{build_fixture, run_replicates, summarize, SimConfig, SimMetrics, FULL_REPS};

use crate::manifest::{CommandName, Run};
use crate::overlay::Overlay;
use crate::tsv::{num, Tsv};

#[derive(clap::Args)]
pub struct Args {
    /// Simulation settings (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Number of replicates; overrides the file and --full
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the full replicate count instead of the quicker default
    #[arg(long)]
    full: bool,
    /// Also write per-replicate estimates
    #[arg(long)]
    traces: bool,
    /// Write one replicate as GWAS summary files instead of running the study
    #[arg(long)]
    fixture: bool,
    /// Replicate to export with --fixture
    #[arg(long, default_value_t = 0, requires = "fixture")]
    replicate: u64,
    #[arg(long, default_value = "rivw_out")]
    out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub simulation: SimConfig,
    #[serde(default)]
    pub traces: bool,
    /// Replicate exported as a fixture, if any.
    #[serde(default)]
    pub fixture: Option<u64>,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let mut o = Overlay::load(Some(&args.config))?;
    if args.full {
        o.set_u64("n_reps", Some(FULL_REPS as u64))?;
    }
    o.set_u64("n_reps", args.reps.map(|r| r as u64))?
        .set_u64("seed", args.seed)?;
    let simulation: SimConfig = o.resolve()?;
    let cfg = SimulateConfig {
        simulation,
        traces: args.traces,
        fixture: args.fixture.then_some(args.replicate),
    };
    execute(&cfg, &args.out)
}

pub fn execute(cfg: &SimulateConfig, out: &Path) -> anyhow::Result<()> {
    let sim = &cfg.simulation;
    sim.validate()?;
    let mut run = Run::start(CommandName::Simulate, cfg, Some(sim.seed), &[], out)?;
    if let Some(rep) = cfg.fixture {
        write_fixture(&mut run, sim, rep)?;
        run.finish()?;
        println!("fixture for replicate {rep} written to {}", out.display());
        return Ok(());
    }

    let outcomes = run_replicates(sim)?;
    let metrics = summarize(sim, &outcomes)?;
    let preamble = run.preamble();
    write_metrics(&run.output("metrics.tsv"), &metrics, &preamble)?;
    run.write_json("metrics.json", &MetricsJson { metrics: &metrics })?;
    if cfg.traces {
        let mut t = Tsv::create(
            &run.output("traces.tsv"),
            &preamble,
            &[
                "replicate",
                "method",
                "beta_hat",
                "se",
                "ci_low",
                "ci_high",
                "n_ivs",
                "failure",
            ],
        )?;
        for o in &outcomes {
            for (spec, res) in sim.methods.iter().zip(&o.results) {
                let row = match res {
                    Ok(r) => [
                        o.replicate.to_string(),
                        spec.label(),
                        num(r.beta_hat),
                        num(r.se),
                        num(r.ci_low),
                        num(r.ci_high),
                        r.n_selected.to_string(),
                        String::new(),
                    ],
                    Err(f) => {
                        let na = || "NA".to_string();
                        [
                            o.replicate.to_string(),
                            spec.label(),
                            na(),
                            na(),
                            na(),
                            na(),
                            na(),
                            f.class.clone(),
                        ]
                    }
                };
                t.row(&row)?;
            }
        }
        t.finish()?;
    }
    run.finish()?;
    print_metrics(&metrics);
    Ok(())
}

#[derive(Serialize)]
struct MetricsJson<'a> {
    metrics: &'a [SimMetrics],
}

fn write_metrics(path: &Path, metrics: &[SimMetrics], preamble: &[String]) -> anyhow::Result<()> {
    let mut t = Tsv::create(
        path,
        preamble,
        &[
            "method",
            "beta_hat",
            "monte_sd",
            "se",
            "cp",
            "length",
            "n_ivs",
            "mean_kappa",
            "mean_f",
            "beta_mc_se",
            "n_reps_effective",
            "n_failed",
        ],
    )?;
    for m in metrics {
        t.row(&[
            m.label.clone(),
            num(m.mean_beta),
            num(m.monte_sd),
            num(m.mean_se),
            num(m.coverage),
            num(m.mean_ci_length),
            num(m.mean_n_ivs),
            num(m.mean_kappa),
            num(m.mean_f_stat),
            num(m.mean_beta_se),
            m.n_reps_effective.to_string(),
            m.failures.values().sum::<usize>().to_string(),
        ])?;
    }
    t.finish()
}

fn print_metrics(metrics: &[SimMetrics]) {
    println!(
        "{:<44} {:>9} {:>9} {:>9} {:>7} {:>9} {:>8}",
        "method", "mean", "sd", "se", "cp", "length", "ivs"
    );
    for m in metrics {
        println!(
            "{:<44} {:>9.4} {:>9.4} {:>9.4} {:>7.3} {:>9.4} {:>8.1}",
            m.label, m.mean_beta, m.monte_sd, m.mean_se, m.coverage, m.mean_ci_length, m.mean_n_ivs
        );
    }
}

fn write_fixture(run: &mut Run, sim: &SimConfig, rep: u64) -> anyhow::Result<()> {
    let f = build_fixture(sim, rep)?;
    let preamble = run.preamble();
    write_summary(&run.output("exposure.tsv"), &f.exposure, &preamble)?;
    write_summary(&run.output("outcome.tsv"), &f.outcome, &preamble)?;
    write_ld(&run.output("ld.tsv"), &f.ld, &preamble)?;
    let mut t = Tsv::create(
        &run.output("truth.tsv"),
        &preamble,
        &["snp_id", "gamma", "alpha", "gamma_y"],
    )?;
    for (i, id) in f.model_ids.iter().enumerate() {
        t.row(&[
            id.to_string(),
            num(f.truth.gamma[i]),
            num(f.truth.alpha[i]),
            num(f.truth.gamma_y[i]),
        ])?;
    }
    t.finish()
}
