//! End-to-end analysis of GWAS summary statistics: harmonize, prune,
//! select instruments and estimate the causal effect.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{divw, ivw, rivw, srivw, EstimateReport, InstrumentPair, Method, SnpId};
use crate::gwas_io::{
    genomic_order, harmonize, sigma_prune, HarmonizeReport, LdInfo, SummaryRecord, DEFAULT_R2_THRESHOLD,
};
use crate::rng::{stream, Role};
use crate::selection::{hard_threshold, rao_blackwellize, select_randomized, RbInstrument, SelectionConfig};
use crate::simulate::default_lambda;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub method: Method,
    /// Selection cutoff; the method's customary default when absent.
    pub lambda: Option<f64>,
    pub eta: f64,
    pub alpha: f64,
    /// Required for randomized selection.
    pub seed: Option<u64>,
    pub r2_threshold: f64,
}

impl AnalysisConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            lambda: None,
            eta: SelectionConfig::DEFAULT_ETA,
            alpha: crate::estimators::DEFAULT_ALPHA,
            seed: None,
            r2_threshold: DEFAULT_R2_THRESHOLD,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or_else(|| default_lambda(self.method))
    }
}

/// Per-SNP record of what the pipeline did with each harmonized, pruned SNP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnpDiagnostic {
    pub snp_id: SnpId,
    pub chrom: String,
    pub pos: u64,
    pub gamma_hat: f64,
    pub sigma_x: f64,
    pub gamma_y: f64,
    pub sigma_y: f64,
    pub z: f64,
    pub pseudo_noise: Option<f64>,
    pub selected: bool,
    pub gamma_rb: Option<f64>,
    pub sigma2_rb: Option<f64>,
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub report: EstimateReport,
    pub lambda: f64,
    pub eta: Option<f64>,
    pub n_exposure: usize,
    pub n_outcome: usize,
    pub harmonize: HarmonizeReport,
    /// SNPs left after LD pruning.
    pub n_pruned: usize,
    pub diagnostics: Vec<SnpDiagnostic>,
}

/// Runs the full pipeline. Randomized selection draws one pseudo-noise value
/// per SNP in canonical genomic order, so the result depends only on the
/// inputs and the seed.
pub fn analyze(
    exposure: &[SummaryRecord],
    outcome: &[SummaryRecord],
    ld: Option<&LdInfo>,
    cfg: &AnalysisConfig,
) -> Result<AnalysisResult> {
    let lambda = cfg.lambda();
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let selection = match cfg.method {
        Method::Rivw | Method::Srivw => Some(SelectionConfig::new(lambda, cfg.eta, cfg.seed.unwrap_or(0))?),
        Method::Ivw | Method::Divw => None,
        m => {
            return Err(Error::Config(format!(
                "{m} needs an independent selection sample and is only available in simulations"
            )))
        }
    };
    let seed = match (cfg.method, cfg.seed) {
        (Method::Rivw, None) => return Err(Error::Config("randomized selection requires an explicit seed".into())),
        (_, s) => s,
    };

    let (pairs, harmonize_report) = harmonize(exposure, outcome)?;
    let by_id: HashMap<&SnpId, &SummaryRecord> = exposure.iter().map(|r| (&r.snp_id, r)).collect();
    let harmonized: Vec<SummaryRecord> = pairs.iter().map(|p| by_id[&p.snp_id].clone()).collect();
    let empty = LdInfo::new();
    let retained = sigma_prune(&harmonized, ld.unwrap_or(&empty), cfg.r2_threshold)?;
    let pair_by_id: HashMap<&SnpId, &InstrumentPair> = pairs.iter().map(|p| (&p.snp_id, p)).collect();
    let mut kept: Vec<&SummaryRecord> = retained.iter().map(|id| by_id[id]).collect();
    kept.sort_by(|a, b| genomic_order(a, b));
    let kept_pairs: Vec<InstrumentPair> = kept.iter().map(|r| pair_by_id[&r.snp_id].clone()).collect();

    let rb: Option<Vec<RbInstrument>> = selection
        .as_ref()
        .map(|sel| {
            kept_pairs
                .iter()
                .map(|p| rao_blackwellize(p.gamma_x, p.sigma_x, sel))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;

    let mut noise = vec![None; kept_pairs.len()];
    let selected: Vec<bool> = match cfg.method {
        Method::Rivw => {
            let sel = selection.as_ref().expect("randomized methods carry a selection config");
            let mut rng = stream(seed.expect("checked above"), 0, Role::PseudoNoise(0));
            kept_pairs
                .iter()
                .zip(noise.iter_mut())
                .map(|(p, slot)| {
                    let w = sel.eta * rng.sample::<f64, _>(StandardNormal);
                    *slot = Some(w);
                    select_randomized(p.z_x(), sel, w).map(|o| o.selected)
                })
                .collect::<Result<_>>()?
        }
        Method::Srivw => vec![true; kept_pairs.len()],
        _ => kept_pairs
            .iter()
            .map(|p| lambda <= 0.0 || hard_threshold(p.z_x(), lambda))
            .collect(),
    };

    let chosen: Vec<usize> = (0..kept_pairs.len()).filter(|&i| selected[i]).collect();
    let report = match cfg.method {
        Method::Ivw => ivw(&kept_pairs, &chosen, cfg.alpha)?,
        Method::Divw => divw(&kept_pairs, &chosen, cfg.alpha)?,
        Method::Rivw => {
            let rb = rb.as_ref().expect("computed for randomized methods");
            let pairs: Vec<InstrumentPair> = chosen.iter().map(|&i| kept_pairs[i].clone()).collect();
            let corrected: Vec<RbInstrument> = chosen.iter().map(|&i| rb[i]).collect();
            rivw(&pairs, &corrected, cfg.alpha)?
        }
        Method::Srivw => srivw(
            &kept_pairs,
            rb.as_ref().expect("computed for randomized methods"),
            cfg.alpha,
        )?,
        _ => unreachable!("rejected above"),
    };

    let diagnostics = kept
        .iter()
        .zip(&kept_pairs)
        .enumerate()
        .map(|(i, (rec, p))| {
            let r = rb.as_ref().map(|v| v[i]);
            SnpDiagnostic {
                snp_id: p.snp_id.clone(),
                chrom: rec.chrom.clone(),
                pos: rec.pos,
                gamma_hat: p.gamma_x,
                sigma_x: p.sigma_x,
                gamma_y: p.gamma_y,
                sigma_y: p.sigma_y,
                z: p.z_x(),
                pseudo_noise: noise[i],
                selected: selected[i],
                gamma_rb: r.map(|r| r.gamma_rb),
                sigma2_rb: r.map(|r| r.sigma2_rb),
                weight: r.map(|r| r.weight_cond),
            }
        })
        .collect();

    Ok(AnalysisResult {
        report,
        lambda,
        eta: selection.map(|s| s.eta),
        n_exposure: exposure.len(),
        n_outcome: outcome.len(),
        harmonize: harmonize_report,
        n_pruned: kept_pairs.len(),
        diagnostics,
    })
}
