//! Mixture-model summary-statistics generator and Monte Carlo experiments.
//!
//! Each SNP falls independently into one of four groups: exposure-relevant
//! without pleiotropy, exposure-relevant with pleiotropy, outcome-only, and
//! null. Exposure effects are `N(0, eps_x2)` in the first two groups,
//! pleiotropic effects have variance `tau2` in the middle two, and the true
//! outcome association is `beta * gamma + alpha`.

mod experiment;
mod fixture;
mod profile;
mod rb_mc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{Method, DEFAULT_ALPHA};
use crate::rng::{stream, Role};
use crate::selection::{genome_wide_cutoff, liberal_cutoff, SelectionConfig};

pub use experiment::{run_experiment, run_replicates, summarize, MethodFailure, ReplicateOutcome, SimMetrics};
pub use fixture::{build_fixture, Fixture};
pub use profile::{bias_proportion, winners_curse_profile, ProfileGrid, ProfilePoint};
pub use rb_mc::{
    rb_monte_carlo, variance_check, Histogram, MomentSummary, RbMonteCarlo, RbMonteCarloConfig, VarianceCheck,
};

/// Law of the pleiotropic effects; both have mean zero and variance `tau2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PleiotropyLaw {
    #[default]
    Normal,
    Uniform,
}

/// An estimator plus its selection tuning. Missing values fall back to the
/// method's customary defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            lambda: None,
            eta: None,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    /// Default cutoff: genome-wide significance for the two-sample and
    /// three-sample IVW variants, every SNP for dIVW, and the liberal
    /// threshold for the randomized estimators.
    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or_else(|| default_lambda(self.method))
    }

    pub fn eta(&self) -> f64 {
        self.eta.unwrap_or(SelectionConfig::DEFAULT_ETA)
    }

    pub fn label(&self) -> String {
        match self.method {
            Method::Rivw | Method::Srivw => {
                format!(
                    "{} (lambda={:.2}, eta={})",
                    self.method.label(),
                    self.lambda(),
                    self.eta()
                )
            }
            m => format!("{} (lambda={:.2})", m.label(), self.lambda()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lambda = self.lambda();
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Config(format!(
                "{}: lambda must be finite and >= 0",
                self.method
            )));
        }
        if self.method.is_randomized() || self.method == Method::Srivw {
            SelectionConfig::new(lambda, self.eta(), 0).map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub(crate) fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            lambda: self.lambda(),
            eta: self.eta(),
            seed: 0,
        }
    }
}

pub fn default_lambda(method: Method) -> f64 {
    match method {
        Method::Ivw | Method::ThreeSampleIvw => genome_wide_cutoff(),
        Method::Divw => 0.0,
        // dIVW tolerates weaker instruments, so the independent-sample
        // variant selects at the liberal cutoff like the randomized methods.
        Method::ThreeSampleDivw | Method::Rivw | Method::Srivw => liberal_cutoff(),
    }
}

/// Replicates run when a configuration does not say.
pub const DESK_REPS: usize = 500;
/// Replicate count for final simulation tables.
pub const FULL_REPS: usize = 2000;

fn default_reps() -> usize {
    DESK_REPS
}

fn default_rho() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Number of independent SNPs.
    pub p: usize,
    pub pi_x: f64,
    pub pi_y: f64,
    /// Fraction of exposure-relevant SNPs without pleiotropy.
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub eps_x2: f64,
    pub tau2: f64,
    pub beta: f64,
    pub n_x: u64,
    pub n_y: u64,
    #[serde(default = "default_reps")]
    pub n_reps: usize,
    pub seed: u64,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub pleiotropy: PleiotropyLaw,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl SimConfig {
    /// Expected exposure heritability `p * pi_x * eps_x2`.
    pub fn h2_x(&self) -> f64 {
        self.p as f64 * self.pi_x * self.eps_x2
    }

    pub fn h2_y(&self) -> f64 {
        self.beta * self.beta * self.h2_x() + self.p as f64 * (self.pi_x * (1.0 - self.rho) + self.pi_y) * self.tau2
    }

    pub fn sigma_x(&self) -> f64 {
        1.0 / (self.n_x as f64).sqrt()
    }

    pub fn sigma_y(&self) -> f64 {
        1.0 / (self.n_y as f64).sqrt()
    }

    pub fn needs_third_sample(&self) -> bool {
        self.methods.iter().any(|m| m.method.needs_third_sample())
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        prob("pi_x", self.pi_x)?;
        prob("pi_y", self.pi_y)?;
        prob("rho", self.rho)?;
        if self.pi_x + self.pi_y > 1.0 {
            return Err(Error::Config(format!(
                "pi_x + pi_y must not exceed 1, got {}",
                self.pi_x + self.pi_y
            )));
        }
        if !(self.eps_x2 > 0.0 && self.eps_x2.is_finite()) {
            return Err(Error::Config(format!("eps_x2 must be positive, got {}", self.eps_x2)));
        }
        if !(self.tau2 >= 0.0 && self.tau2.is_finite()) {
            return Err(Error::Config(format!("tau2 must be non-negative, got {}", self.tau2)));
        }
        if !self.beta.is_finite() {
            return Err(Error::Config("beta must be finite".into()));
        }
        if self.p == 0 || self.n_x == 0 || self.n_y == 0 {
            return Err(Error::Config("p, n_x and n_y must be positive".into()));
        }
        if self.n_reps == 0 {
            return Err(Error::Config("n_reps must be positive".into()));
        }
        let (hx, hy) = (self.h2_x(), self.h2_y());
        if !(hx > 0.0 && hx < 1.0) {
            return Err(Error::Config(format!(
                "exposure heritability p * pi_x * eps_x2 = {hx} must lie in (0, 1)"
            )));
        }
        if !(hy > 0.0 && hy < 1.0) {
            return Err(Error::Config(format!("outcome heritability {hy} must lie in (0, 1)")));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        for m in &self.methods {
            m.validate()?;
        }
        gauss_alpha(self.alpha)?;
        Ok(())
    }
}

fn gauss_alpha(alpha: f64) -> Result<()> {
    crate::gauss::two_sided_cutoff(alpha)
        .map(|_| ())
        .map_err(|_| Error::Config(format!("alpha must lie in (0, 1), got {alpha}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrueEffects {
    pub gamma: Vec<f64>,
    /// Pleiotropic effects.
    pub alpha: Vec<f64>,
    /// `beta * gamma + alpha`.
    pub gamma_y: Vec<f64>,
}

impl TrueEffects {
    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws the mixture for every SNP in index order from `rng`.
pub fn draw_true_effects<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Result<TrueEffects> {
    if !(cfg.pi_x >= 0.0 && cfg.pi_y >= 0.0 && cfg.pi_x + cfg.pi_y <= 1.0 && (0.0..=1.0).contains(&cfg.rho)) {
        return Err(Error::Config("invalid mixture weights".into()));
    }
    let c1 = cfg.pi_x * cfg.rho;
    let c2 = cfg.pi_x;
    let c3 = cfg.pi_x + cfg.pi_y;
    let eps = cfg.eps_x2.sqrt();
    let tau = cfg.tau2.sqrt();
    let half_width = tau * 3f64.sqrt();
    let mut gamma = vec![0.0; cfg.p];
    let mut alpha = vec![0.0; cfg.p];
    for j in 0..cfg.p {
        let u: f64 = rng.random();
        let (relevant, pleiotropic) = if u < c1 {
            (true, false)
        } else if u < c2 {
            (true, true)
        } else if u < c3 {
            (false, true)
        } else {
            (false, false)
        };
        if relevant {
            gamma[j] = eps * standard_normal(rng);
        }
        if pleiotropic {
            alpha[j] = match cfg.pleiotropy {
                PleiotropyLaw::Normal => tau * standard_normal(rng),
                PleiotropyLaw::Uniform => rng.random_range(-half_width..=half_width),
            };
        }
    }
    let gamma_y = gamma.iter().zip(&alpha).map(|(g, a)| cfg.beta * g + a).collect();
    Ok(TrueEffects { gamma, alpha, gamma_y })
}

/// One replicate's summary statistics under common standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryDraw {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub gamma_hat: Vec<f64>,
    pub gamma_y_hat: Vec<f64>,
    /// Exposure estimates from an independent sample of the same size, used
    /// only for selection.
    pub selection_gamma_hat: Option<Vec<f64>>,
}

fn perturb<R: Rng>(truth: &[f64], sd: f64, rng: &mut R) -> Vec<f64> {
    truth.iter().map(|t| t + sd * standard_normal(rng)).collect()
}

pub fn draw_summary_stats(
    truth: &TrueEffects,
    cfg: &SimConfig,
    seed: u64,
    replicate: u64,
    with_selection_sample: bool,
) -> SummaryDraw {
    let (sx, sy) = (cfg.sigma_x(), cfg.sigma_y());
    let gamma_hat = perturb(&truth.gamma, sx, &mut stream(seed, replicate, Role::Exposure));
    let gamma_y_hat = perturb(&truth.gamma_y, sy, &mut stream(seed, replicate, Role::Outcome));
    let selection_gamma_hat =
        with_selection_sample.then(|| perturb(&truth.gamma, sx, &mut stream(seed, replicate, Role::SelectionSample)));
    SummaryDraw {
        sigma_x: sx,
        sigma_y: sy,
        gamma_hat,
        gamma_y_hat,
        selection_gamma_hat,
    }
}

/// Truth and summary statistics of replicate `replicate`.
pub fn draw_replicate(cfg: &SimConfig, replicate: u64) -> Result<(TrueEffects, SummaryDraw)> {
    let truth = draw_true_effects(cfg, &mut stream(cfg.seed, replicate, Role::TrueEffects))?;
    let draw = draw_summary_stats(&truth, cfg, cfg.seed, replicate, cfg.needs_third_sample());
    Ok((truth, draw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::OnlineMoments;

    pub(crate) fn low_block() -> SimConfig {
        SimConfig {
            p: 200_000,
            pi_x: 0.002,
            pi_y: 0.002,
            rho: 1.0,
            eps_x2: 1e-4,
            tau2: 1e-4,
            beta: 0.2,
            n_x: 100_000,
            n_y: 100_000,
            n_reps: 4,
            seed: 11,
            methods: vec![MethodSpec::new(Method::Rivw)],
            pleiotropy: PleiotropyLaw::Normal,
            alpha: 0.05,
        }
    }

    #[test]
    fn heritability_algebra() {
        let cfg = low_block();
        assert!((cfg.h2_x() - 0.04).abs() < 1e-12);
        assert!((cfg.h2_y() - 0.0416).abs() < 1e-12);
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected_by_invariant() {
        let mut cfg = low_block();
        cfg.pi_x = 0.7;
        cfg.pi_y = 0.4;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("pi_x + pi_y"), "{msg}");
        let mut cfg = low_block();
        cfg.eps_x2 = 1e-2;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("heritability"), "{msg}");
        let mut cfg = low_block();
        cfg.methods.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = low_block();
        cfg.methods = vec![MethodSpec {
            method: Method::Rivw,
            lambda: Some(4.0),
            eta: Some(0.0),
        }];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn degenerate_mixtures() {
        let mut cfg = low_block();
        cfg.pi_y = 0.0;
        let t = draw_true_effects(&cfg, &mut stream(1, 0, Role::TrueEffects)).unwrap();
        assert!(t.alpha.iter().all(|a| *a == 0.0));
        cfg.pi_x = 0.0;
        let t = draw_true_effects(&cfg, &mut stream(1, 0, Role::TrueEffects)).unwrap();
        assert!(t.gamma.iter().chain(&t.alpha).chain(&t.gamma_y).all(|a| *a == 0.0));
        cfg.pi_x = 0.8;
        cfg.pi_y = 0.5;
        assert!(draw_true_effects(&cfg, &mut stream(1, 0, Role::TrueEffects)).is_err());
    }

    #[test]
    fn realized_heritability_tracks_formula() {
        let cfg = low_block();
        for seed in 0..5 {
            let t = draw_true_effects(&cfg, &mut stream(seed, 0, Role::TrueEffects)).unwrap();
            let hx: f64 = t.gamma.iter().map(|g| g * g).sum();
            let hy: f64 = t.gamma_y.iter().map(|g| g * g).sum();
            assert!((hx / cfg.h2_x() - 1.0).abs() < 0.15, "h2_x {hx}");
            assert!((hy / cfg.h2_y() - 1.0).abs() < 0.15, "h2_y {hy}");
            let active = t.gamma.iter().filter(|g| **g != 0.0).count() as f64;
            let expect = cfg.p as f64 * cfg.pi_x;
            assert!((active - expect).abs() < 4.0 * expect.sqrt());
        }
    }

    #[test]
    fn pleiotropic_fraction_among_relevant_snps() {
        let mut cfg = low_block();
        cfg.rho = 0.5;
        cfg.pi_x = 0.01;
        cfg.pi_y = 0.0;
        cfg.pleiotropy = PleiotropyLaw::Uniform;
        let t = draw_true_effects(&cfg, &mut stream(3, 0, Role::TrueEffects)).unwrap();
        let both = t
            .gamma
            .iter()
            .zip(&t.alpha)
            .filter(|(g, a)| **g != 0.0 && **a != 0.0)
            .count() as f64;
        let expect = cfg.p as f64 * cfg.pi_x * (1.0 - cfg.rho);
        assert!((both - expect).abs() < 4.0 * expect.sqrt());
        let bound = (3.0 * cfg.tau2).sqrt();
        assert!(t.alpha.iter().all(|a| a.abs() <= bound));
    }

    #[test]
    fn standardized_noise_is_standard_normal() {
        let cfg = low_block();
        let (truth, draw) = draw_replicate(&cfg, 0).unwrap();
        let mut m = OnlineMoments::default();
        for (g, t) in draw.gamma_hat.iter().zip(&truth.gamma) {
            m.push((g - t) / draw.sigma_x);
        }
        assert!(m.mean().abs() < 3.0 * m.mean_se());
        assert!((m.variance() - 1.0).abs() < 3.0 * m.variance_se());
        assert!(draw.selection_gamma_hat.is_none());
    }

    #[test]
    fn tiny_noise_recovers_truth() {
        let mut cfg = low_block();
        cfg.p = 1000;
        cfg.pi_x = 0.2;
        cfg.n_x = 1_000_000_000_000;
        let (truth, draw) = draw_replicate(&cfg, 2).unwrap();
        let worst = draw
            .gamma_hat
            .iter()
            .zip(&truth.gamma)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-5);
    }

    #[test]
    fn replicate_draws_replay_bitwise() {
        let mut cfg = low_block();
        cfg.methods.push(MethodSpec::new(Method::ThreeSampleIvw));
        let a = draw_replicate(&cfg, 5).unwrap();
        let b = draw_replicate(&cfg, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.1.selection_gamma_hat.is_some());
        let c = draw_replicate(&cfg, 6).unwrap();
        assert_ne!(a.1.gamma_hat, c.1.gamma_hat);
    }

    #[test]
    fn config_round_trips_through_toml_shape() {
        let text = r#"
            p = 1000
            pi_x = 0.01
            pi_y = 0.01
            eps_x2 = 1e-4
            tau2 = 1e-4
            beta = 0.2
            n_x = 100000
            n_y = 100000
            seed = 9
            [[methods]]
            method = "rivw"
            lambda = 4.06
            [[methods]]
            method = "three-sample-divw"
        "#;
        let cfg: SimConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.rho, 1.0);
        assert_eq!(cfg.n_reps, DESK_REPS);
        assert_eq!(cfg.methods[0].eta(), 0.5);
        assert_eq!(cfg.methods[1].lambda(), liberal_cutoff());
        assert_eq!(MethodSpec::new(Method::ThreeSampleIvw).lambda(), genome_wide_cutoff());
        assert_eq!(MethodSpec::new(Method::Divw).lambda(), 0.0);
        assert!(cfg.methods[0].label().starts_with("RIVW (lambda=4.06"));
    }
}
