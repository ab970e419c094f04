use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rivw_core::analysis::{analyze, AnalysisConfig, AnalysisResult};
use rivw_core::estimators::Method;
use rivw_core::gwas_io::{read_ld, read_summary, write_rejects, FormatSpec, Reject, DEFAULT_R2_THRESHOLD};
use rivw_core::selection::SelectionConfig;

use super::input_path;
use crate::manifest::{CommandName, Run};
use crate::overlay::Overlay;
use crate::tsv::{num, opt, Tsv};

#[derive(clap::Args)]
pub struct Args {
    /// Exposure GWAS summary statistics (tab- or whitespace-separated)
    #[arg(long)]
    exposure: Option<PathBuf>,
    /// Outcome GWAS summary statistics
    #[arg(long)]
    outcome: Option<PathBuf>,
    /// LD pairs (`snp_id_a snp_id_b r2`) or clump assignments (`snp_id cluster`)
    #[arg(long)]
    ld: Option<PathBuf>,
    /// rivw, srivw, ivw or divw
    #[arg(long)]
    method: Option<String>,
    /// Selection cutoff on the |z| scale; defaults depend on the method
    #[arg(long)]
    lambda: Option<f64>,
    /// Pseudo-noise standard deviation for randomized selection
    #[arg(long)]
    eta: Option<f64>,
    /// Confidence intervals have level 1 - alpha
    #[arg(long)]
    alpha: Option<f64>,
    /// Seed for the pseudo-noise; required by rivw
    #[arg(long)]
    seed: Option<u64>,
    /// LD pruning threshold on r^2
    #[arg(long = "r2")]
    r2_threshold: Option<f64>,
    /// TOML file with any of the settings above; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "rivw_out")]
    out: PathBuf,
}

fn default_method() -> Method {
    Method::Rivw
}

fn default_eta() -> f64 {
    SelectionConfig::DEFAULT_ETA
}

fn default_alpha() -> f64 {
    rivw_core::estimators::DEFAULT_ALPHA
}

fn default_r2() -> f64 {
    DEFAULT_R2_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub exposure: PathBuf,
    pub outcome: PathBuf,
    #[serde(default)]
    pub ld: Option<PathBuf>,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_r2")]
    pub r2_threshold: f64,
}

impl AnalyzeConfig {
    fn analysis(&self) -> AnalysisConfig {
        AnalysisConfig {
            method: self.method,
            lambda: self.lambda,
            eta: self.eta,
            alpha: self.alpha,
            seed: self.seed,
            r2_threshold: self.r2_threshold,
        }
    }

    pub fn inputs(&self) -> Vec<&Path> {
        let mut v = vec![self.exposure.as_path(), self.outcome.as_path()];
        v.extend(self.ld.as_deref());
        v
    }
}

fn path_value(p: Option<PathBuf>) -> anyhow::Result<Option<String>> {
    p.map(|p| Ok(input_path(&p)?.to_string_lossy().into_owned()))
        .transpose()
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let mut o = Overlay::load(args.config.as_deref())?;
    // Paths from the file are taken relative to the working directory.
    for key in ["exposure", "outcome", "ld"] {
        if let Some(toml::Value::String(s)) = o.get(key).cloned() {
            o.set(key, path_value(Some(PathBuf::from(s)))?);
        }
    }
    if let Some(m) = &args.method {
        let m: Method = m.parse()?;
        o.set("method", Some(m.key()));
    }
    o.set("exposure", path_value(args.exposure)?)
        .set("outcome", path_value(args.outcome)?)
        .set("ld", path_value(args.ld)?)
        .set("lambda", args.lambda)
        .set("eta", args.eta)
        .set("alpha", args.alpha)
        .set("r2_threshold", args.r2_threshold);
    o.set_u64("seed", args.seed)?;
    let cfg: AnalyzeConfig = o.resolve()?;
    execute(&cfg, &args.out)
}

pub fn execute(cfg: &AnalyzeConfig, out: &Path) -> anyhow::Result<()> {
    let spec = FormatSpec::default();
    let exposure = read_summary(&cfg.exposure, &spec)?;
    let outcome = read_summary(&cfg.outcome, &spec)?;
    let ld = cfg.ld.as_deref().map(read_ld).transpose()?;
    let result = analyze(&exposure.records, &outcome.records, ld.as_ref(), &cfg.analysis())?;

    let mut run = Run::start(CommandName::Analyze, cfg, cfg.seed, &cfg.inputs(), out)?;
    let preamble = run.preamble();
    run.write_json("report.json", &result_json(&result))?;
    write_diagnostics(&run.output("diagnostics.tsv"), &result, &preamble)?;

    let prefixed = |source: &str, rs: &[Reject]| {
        rs.iter()
            .map(|r| Reject {
                snp_id: r.snp_id.clone(),
                reason: format!("{source}: {}", r.reason),
            })
            .collect::<Vec<_>>()
    };
    let mut rejects = prefixed("exposure", &exposure.rejects);
    rejects.extend(prefixed("outcome", &outcome.rejects));
    rejects.extend(prefixed("harmonize", &result.harmonize.dropped));
    write_rejects(&run.output("rejects.tsv"), &rejects, &preamble)?;
    run.finish()?;

    let r = &result.report;
    println!(
        "{}: beta = {:.6} (se {:.6}), {:.0}% CI [{:.6}, {:.6}], {} instruments of {} after pruning",
        r.method.label(),
        r.beta_hat,
        r.se,
        100.0 * (1.0 - r.alpha_level),
        r.ci_low,
        r.ci_high,
        r.n_selected,
        result.n_pruned
    );
    Ok(())
}

#[derive(Serialize)]
struct ReportJson<'a> {
    report: &'a rivw_core::estimators::EstimateReport,
    lambda: f64,
    eta: Option<f64>,
    n_exposure: usize,
    n_outcome: usize,
    n_harmonized: usize,
    allele_swapped: usize,
    strand_flipped: usize,
    n_dropped: usize,
    n_pruned: usize,
}

fn result_json(r: &AnalysisResult) -> ReportJson<'_> {
    ReportJson {
        report: &r.report,
        lambda: r.lambda,
        eta: r.eta,
        n_exposure: r.n_exposure,
        n_outcome: r.n_outcome,
        n_harmonized: r.harmonize.kept,
        allele_swapped: r.harmonize.allele_swapped,
        strand_flipped: r.harmonize.strand_flipped,
        n_dropped: r.harmonize.dropped.len(),
        n_pruned: r.n_pruned,
    }
}

fn write_diagnostics(path: &Path, r: &AnalysisResult, preamble: &[String]) -> anyhow::Result<()> {
    let mut t = Tsv::create(
        path,
        preamble,
        &[
            "snp_id",
            "chrom",
            "pos",
            "gamma_hat",
            "sigma_x",
            "gamma_y",
            "sigma_y",
            "z",
            "pseudo_noise",
            "selected",
            "gamma_rb",
            "sigma2_rb",
            "weight",
        ],
    )?;
    for d in &r.diagnostics {
        t.row(&[
            d.snp_id.to_string(),
            d.chrom.clone(),
            d.pos.to_string(),
            num(d.gamma_hat),
            num(d.sigma_x),
            num(d.gamma_y),
            num(d.sigma_y),
            num(d.z),
            opt(d.pseudo_noise),
            u8::from(d.selected).to_string(),
            opt(d.gamma_rb),
            opt(d.sigma2_rb),
            opt(d.weight),
        ])?;
    }
    t.finish()
}
