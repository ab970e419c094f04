use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{draw_replicate, MethodSpec, SimConfig, SummaryDraw, TrueEffects};
use crate::error::{Error, Result};
use crate::estimators::{
    divw, ivw, rivw, srivw, three_sample_ivw, EstimateReport, InstrumentPair, Method, SnpId, ThreeSampleVariant,
};
use crate::numeric::OnlineMoments;
use crate::rng::{stream, Role};
use crate::selection::{hard_threshold, rao_blackwellize, select_randomized, RbInstrument};

/// Why a method produced no estimate in one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodFailure {
    pub class: String,
    pub message: String,
}

impl From<Error> for MethodFailure {
    fn from(e: Error) -> Self {
        MethodFailure {
            class: e.class().to_string(),
            message: e.to_string(),
        }
    }
}

/// Per-method results of one replicate, in configuration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: u64,
    pub results: Vec<std::result::Result<EstimateReport, MethodFailure>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub method: MethodSpec,
    pub label: String,
    pub mean_beta: f64,
    pub monte_sd: f64,
    /// Monte Carlo standard error of `mean_beta`.
    pub mean_beta_se: f64,
    pub mean_se: f64,
    pub coverage: f64,
    pub mean_ci_length: f64,
    pub mean_n_ivs: f64,
    pub mean_kappa: f64,
    pub mean_f_stat: f64,
    /// Replicates in which the method returned an estimate. Failed
    /// replicates are counted in `failures` and excluded from every moment.
    pub n_reps_effective: usize,
    pub failures: BTreeMap<String, usize>,
}

struct Replicate<'a> {
    cfg: &'a SimConfig,
    ids: &'a [SnpId],
    replicate: u64,
    truth: TrueEffects,
    draw: SummaryDraw,
}

impl Replicate<'_> {
    fn pairs(&self, indices: &[usize]) -> Vec<InstrumentPair> {
        indices
            .iter()
            .map(|&j| InstrumentPair {
                snp_id: self.ids[j].clone(),
                gamma_x: self.draw.gamma_hat[j],
                sigma_x: self.draw.sigma_x,
                gamma_y: self.draw.gamma_y_hat[j],
                sigma_y: self.draw.sigma_y,
            })
            .collect()
    }

    fn kappa(&self, indices: &[usize]) -> f64 {
        let s2 = self.draw.sigma_x * self.draw.sigma_x;
        let total: f64 = indices
            .iter()
            .map(|&j| self.truth.gamma[j] * self.truth.gamma[j] / s2)
            .sum();
        total / indices.len() as f64
    }

    fn hard_selected(&self, estimates: &[f64], lambda: f64) -> Vec<usize> {
        let sx = self.draw.sigma_x;
        (0..estimates.len())
            .filter(|&j| lambda <= 0.0 || hard_threshold(estimates[j] / sx, lambda))
            .collect()
    }

    fn rb(&self, pairs: &[InstrumentPair], spec: &MethodSpec) -> Result<Vec<RbInstrument>> {
        let sel = spec.selection();
        pairs
            .iter()
            .map(|p| rao_blackwellize(p.gamma_x, p.sigma_x, &sel))
            .collect()
    }

    fn evaluate(&self, slot: usize, spec: &MethodSpec) -> Result<EstimateReport> {
        let alpha = self.cfg.alpha;
        let lambda = spec.lambda();
        let (report, used) = match spec.method {
            Method::Ivw | Method::Divw => {
                let used = self.hard_selected(&self.draw.gamma_hat, lambda);
                let pairs = self.pairs(&used);
                let all: Vec<usize> = (0..pairs.len()).collect();
                let report = if spec.method == Method::Ivw {
                    ivw(&pairs, &all, alpha)?
                } else {
                    divw(&pairs, &all, alpha)?
                };
                (report, used)
            }
            Method::Rivw => {
                let sel = spec.selection();
                let mut rng = stream(self.cfg.seed, self.replicate, Role::PseudoNoise(slot as u32));
                let sx = self.draw.sigma_x;
                let mut used = Vec::new();
                for (j, g) in self.draw.gamma_hat.iter().enumerate() {
                    let noise: f64 = rng.sample(StandardNormal);
                    if select_randomized(g / sx, &sel, sel.eta * noise)?.selected {
                        used.push(j);
                    }
                }
                let pairs = self.pairs(&used);
                let rb = self.rb(&pairs, spec)?;
                (rivw(&pairs, &rb, alpha)?, used)
            }
            Method::Srivw => {
                let used: Vec<usize> = (0..self.draw.gamma_hat.len()).collect();
                let pairs = self.pairs(&used);
                let rb = self.rb(&pairs, spec)?;
                (srivw(&pairs, &rb, alpha)?, used)
            }
            Method::ThreeSampleIvw | Method::ThreeSampleDivw => {
                let third = self
                    .draw
                    .selection_gamma_hat
                    .as_ref()
                    .ok_or_else(|| Error::Contract("three-sample method without a selection sample".into()))?;
                let used = self.hard_selected(third, lambda);
                let pairs = self.pairs(&used);
                let z: Vec<f64> = used.iter().map(|&j| third[j] / self.draw.sigma_x).collect();
                let variant = if spec.method == Method::ThreeSampleIvw {
                    ThreeSampleVariant::Ivw
                } else {
                    ThreeSampleVariant::Divw
                };
                (three_sample_ivw(&pairs, &z, lambda, variant, alpha)?, used)
            }
        };
        Ok(report.with_kappa(self.kappa(&used)))
    }
}

pub(super) fn snp_ids(p: usize) -> Arc<[SnpId]> {
    (1..=p).map(|j| SnpId::new(&format!("snp{j}"))).collect()
}

pub(super) fn run_one_with<T>(
    cfg: &SimConfig,
    ids: &[SnpId],
    replicate: u64,
    inspect: impl FnOnce(&TrueEffects, &SummaryDraw) -> T,
) -> Result<(ReplicateOutcome, T)> {
    let (truth, draw) = draw_replicate(cfg, replicate)?;
    let extra = inspect(&truth, &draw);
    let rep = Replicate {
        cfg,
        ids,
        replicate,
        truth,
        draw,
    };
    let results = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(slot, spec)| rep.evaluate(slot, spec).map_err(MethodFailure::from))
        .collect();
    Ok((ReplicateOutcome { replicate, results }, extra))
}

/// Runs every replicate on the current rayon pool. Results come back in
/// replicate order and do not depend on the number of workers.
pub fn run_replicates(cfg: &SimConfig) -> Result<Vec<ReplicateOutcome>> {
    cfg.validate()?;
    let ids = snp_ids(cfg.p);
    (0..cfg.n_reps as u64)
        .into_par_iter()
        .map(|r| run_one_with(cfg, &ids, r, |_, _| ()).map(|(o, _)| o))
        .collect()
}

/// Aggregates replicate outcomes in replicate order.
pub fn summarize(cfg: &SimConfig, outcomes: &[ReplicateOutcome]) -> Result<Vec<SimMetrics>> {
    let mut metrics = Vec::with_capacity(cfg.methods.len());
    let mut any_success = false;
    for (slot, spec) in cfg.methods.iter().enumerate() {
        let mut beta = OnlineMoments::default();
        let mut se = OnlineMoments::default();
        let mut cover = OnlineMoments::default();
        let mut length = OnlineMoments::default();
        let mut n_ivs = OnlineMoments::default();
        let mut kappa = OnlineMoments::default();
        let mut f_stat = OnlineMoments::default();
        let mut failures = BTreeMap::new();
        for outcome in outcomes {
            let result = outcome
                .results
                .get(slot)
                .ok_or_else(|| Error::Contract(format!("replicate {} lacks method slot {slot}", outcome.replicate)))?;
            match result {
                Ok(r) => {
                    beta.push(r.beta_hat);
                    se.push(r.se);
                    cover.push(if r.covers(cfg.beta) { 1.0 } else { 0.0 });
                    length.push(r.ci_length());
                    n_ivs.push(r.n_selected as f64);
                    kappa.push(r.kappa_hat.unwrap_or(f64::NAN));
                    f_stat.push(r.f_stat);
                }
                Err(f) => *failures.entry(f.class.clone()).or_insert(0) += 1,
            }
        }
        any_success |= beta.count() > 0;
        let n = beta.count() as usize;
        let finite_or_nan = |m: &OnlineMoments| if n > 0 { m.mean() } else { f64::NAN };
        metrics.push(SimMetrics {
            method: *spec,
            label: spec.label(),
            mean_beta: finite_or_nan(&beta),
            monte_sd: if n > 1 { beta.std_dev() } else { 0.0 },
            mean_beta_se: if n > 1 { beta.mean_se() } else { f64::NAN },
            mean_se: finite_or_nan(&se),
            coverage: finite_or_nan(&cover),
            mean_ci_length: finite_or_nan(&length),
            mean_n_ivs: finite_or_nan(&n_ivs),
            mean_kappa: finite_or_nan(&kappa),
            mean_f_stat: finite_or_nan(&f_stat),
            n_reps_effective: n,
            failures,
        });
    }
    if !any_success {
        return Err(Error::Experiment(format!(
            "every method failed in all {} replicates",
            outcomes.len()
        )));
    }
    Ok(metrics)
}

pub fn run_experiment(cfg: &SimConfig) -> Result<Vec<SimMetrics>> {
    let outcomes = run_replicates(cfg)?;
    summarize(cfg, &outcomes)
}

#[cfg(test)]
mod tests {
    use super::super::PleiotropyLaw;
    use super::*;

    fn small(methods: Vec<MethodSpec>) -> SimConfig {
        SimConfig {
            p: 20_000,
            pi_x: 0.02,
            pi_y: 0.02,
            rho: 1.0,
            eps_x2: 1e-4,
            tau2: 1e-4,
            beta: 0.2,
            n_x: 100_000,
            n_y: 100_000,
            n_reps: 6,
            seed: 2024,
            methods,
            pleiotropy: PleiotropyLaw::Normal,
            alpha: 0.05,
        }
    }

    fn all_methods() -> Vec<MethodSpec> {
        Method::ALL.into_iter().map(MethodSpec::new).collect()
    }

    #[test]
    fn every_method_runs_and_reports_in_order() {
        let cfg = small(all_methods());
        let m = run_experiment(&cfg).unwrap();
        assert_eq!(m.len(), 6);
        for (row, spec) in m.iter().zip(&cfg.methods) {
            assert_eq!(row.method, *spec);
            assert_eq!(row.n_reps_effective, 6, "{}", row.label);
            assert!((0.0..=1.0).contains(&row.coverage));
            assert!(row.monte_sd >= 0.0);
            assert!(row.mean_kappa > 0.0);
        }
        assert_eq!(m[1].mean_n_ivs, 20_000.0);
        assert_eq!(m[3].mean_n_ivs, 20_000.0);
        assert!(m[2].mean_n_ivs > m[0].mean_n_ivs);
    }

    #[test]
    fn single_replicate_coverage_is_binary() {
        let mut cfg = small(vec![MethodSpec::new(Method::Rivw)]);
        cfg.n_reps = 1;
        let m = run_experiment(&cfg).unwrap();
        assert!(m[0].coverage == 0.0 || m[0].coverage == 1.0);
        assert_eq!(m[0].monte_sd, 0.0);
    }

    #[test]
    fn replay_is_bitwise_and_independent_of_pool_size() {
        let cfg = small(vec![MethodSpec::new(Method::Rivw), MethodSpec::new(Method::Ivw)]);
        let a = run_replicates(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| run_replicates(&cfg)).unwrap();
        assert_eq!(a, b);
        let (ma, mb) = (summarize(&cfg, &a).unwrap(), summarize(&cfg, &b).unwrap());
        assert_eq!(ma, mb);
        assert_eq!(ma[0].mean_beta.to_bits(), mb[0].mean_beta.to_bits());
    }

    #[test]
    fn failures_are_bookkept_not_averaged() {
        // A cutoff this high leaves no instruments.
        let cfg = small(vec![
            MethodSpec::new(Method::Ivw).with_lambda(30.0),
            MethodSpec::new(Method::Rivw),
        ]);
        let m = run_experiment(&cfg).unwrap();
        assert_eq!(m[0].n_reps_effective, 0);
        assert_eq!(m[0].failures.get("insufficient-instruments"), Some(&6));
        assert!(m[0].mean_beta.is_nan());
        assert_eq!(m[1].n_reps_effective, 6);

        let cfg = small(vec![MethodSpec::new(Method::Ivw).with_lambda(30.0)]);
        assert!(matches!(run_experiment(&cfg), Err(Error::Experiment(_))));
    }
}
