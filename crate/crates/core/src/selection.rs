//! Randomized instrument selection and the Rao-Blackwellized exposure
//! association.
//!
//! A SNP with exposure z-score `z = gamma_hat / sigma_x` is selected when
//! `|z + Z| > lambda`, with pseudo-noise `Z ~ N(0, eta^2)` supplied by the
//! caller. Conditioning the unbiased initial estimator
//! `gamma_hat - sigma_x * Z / eta^2` on `gamma_hat` and on the selection event
//! gives a closed-form correction that is unbiased for the true association
//! after selection. All functions here are deterministic; callers own the
//! random streams.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::gauss::{self, integrate, QuadratureSpec};

/// Tuning of the randomized selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// z-score cutoff.
    pub lambda: f64,
    /// Standard deviation of the pseudo-noise added to each z-score.
    pub eta: f64,
    /// Root of the random stream used to draw pseudo-noise.
    pub seed: u64,
}

impl SelectionConfig {
    pub const DEFAULT_ETA: f64 = 0.5;

    pub fn new(lambda: f64, eta: f64, seed: u64) -> Result<Self> {
        Self { lambda, eta, seed }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Domain(format!("eta must be positive, got {}", self.eta)));
        }
        Ok(self)
    }
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            lambda: liberal_cutoff(),
            eta: Self::DEFAULT_ETA,
            seed: 0,
        }
    }
}

/// `Phi^{-1}(1 - 5e-5 / 2)`, about 4.0556: the default RIVW cutoff.
pub fn liberal_cutoff() -> f64 {
    gauss::isf(2.5e-5)
}

/// `Phi^{-1}(1 - 5e-8 / 2)`, about 5.4513: the genome-wide significance cutoff.
pub fn genome_wide_cutoff() -> f64 {
    gauss::isf(2.5e-8)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub selected: bool,
    pub pseudo_noise: f64,
    /// `|z + Z| - lambda`; the SNP is selected iff this is positive.
    pub score: f64,
}

/// Randomized selection of one SNP given its exposure z-score and a
/// realization of `N(0, eta^2)`.
pub fn select_randomized(z: f64, cfg: &SelectionConfig, noise_draw: f64) -> Result<SelectionOutcome> {
    ensure_finite("z-score", z)?;
    ensure_finite("noise draw", noise_draw)?;
    let score = (z + noise_draw).abs() - cfg.lambda;
    Ok(SelectionOutcome {
        selected: score > 0.0,
        pseudo_noise: noise_draw,
        score,
    })
}

/// Deterministic rule `|z| > lambda`.
#[inline]
pub fn hard_threshold(z: f64, lambda: f64) -> bool {
    z.abs() > lambda
}

/// A selected SNP after the Rao-Blackwell correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbInstrument {
    pub gamma_hat: f64,
    pub sigma_x: f64,
    /// Bias-corrected exposure association.
    pub gamma_rb: f64,
    /// Conditionally unbiased estimate of the variance of `gamma_rb`. Can be
    /// negative for individual SNPs; only sums of it are meaningful.
    pub sigma2_rb: f64,
    /// Probability of selection given `gamma_hat`.
    pub weight_cond: f64,
    pub a_plus: f64,
    pub a_minus: f64,
}

#[inline]
fn boundaries(z: f64, cfg: &SelectionConfig) -> (f64, f64) {
    ((cfg.lambda - z) / cfg.eta, (-cfg.lambda - z) / cfg.eta)
}

pub fn rao_blackwellize(gamma_hat: f64, sigma_x: f64, cfg: &SelectionConfig) -> Result<RbInstrument> {
    ensure_finite("gamma_hat", gamma_hat)?;
    check_sigma(sigma_x)?;
    let (a_plus, a_minus) = boundaries(gamma_hat / sigma_x, cfg);
    let tails = gauss::tail_ratios(a_plus, a_minus);
    let ratio = tails.diff();
    let inv_eta2 = 1.0 / (cfg.eta * cfg.eta);
    let boundary_moment = a_plus * tails.upper - a_minus * tails.lower;
    Ok(RbInstrument {
        gamma_hat,
        sigma_x,
        gamma_rb: gamma_hat - (sigma_x / cfg.eta) * ratio,
        sigma2_rb: sigma_x * sigma_x * (1.0 - inv_eta2 * boundary_moment + inv_eta2 * ratio * ratio),
        weight_cond: tails.mass(),
        a_plus,
        a_minus,
    })
}

/// `P(selected | gamma_hat) = 1 - Phi(A+) + Phi(A-)`.
pub fn conditional_weight(gamma_hat: f64, sigma_x: f64, cfg: &SelectionConfig) -> Result<f64> {
    ensure_finite("gamma_hat", gamma_hat)?;
    check_sigma(sigma_x)?;
    let (a_plus, a_minus) = boundaries(gamma_hat / sigma_x, cfg);
    Ok(gauss::sf(a_plus) + gauss::cdf(a_minus))
}

/// Selection probability over both the estimation noise and the pseudo-noise,
/// for a SNP whose true standardized association is `gamma_true_over_sigma`.
pub fn unconditional_weight(gamma_true_over_sigma: f64, cfg: &SelectionConfig) -> f64 {
    let scale = (1.0 + cfg.eta * cfg.eta).sqrt();
    gauss::sf((cfg.lambda - gamma_true_over_sigma) / scale) + gauss::sf((cfg.lambda + gamma_true_over_sigma) / scale)
}

/// Conditional variance of `gamma_rb` given selection, by quadrature over the
/// standardized estimation noise `y`. Depends on the true association, so it
/// is a verification oracle rather than an estimator.
pub fn rb_variance_quadrature(
    gamma_true: f64,
    sigma_x: f64,
    cfg: &SelectionConfig,
    quad: &QuadratureSpec,
) -> Result<f64> {
    ensure_finite("gamma_true", gamma_true)?;
    check_sigma(sigma_x)?;
    let mu = gamma_true / sigma_x;
    let prob = unconditional_weight(mu, cfg);
    if prob.is_nan() || prob <= 1e-300 {
        return Err(Error::Domain(format!(
            "selection probability {prob:e} is too small for the variance oracle"
        )));
    }
    let eta = cfg.eta;
    let lambda = cfg.lambda;
    let upper = move |y: f64| (lambda - mu - y) / eta;
    let lower = move |y: f64| (-lambda - mu - y) / eta;

    // Both integrands are pre-divided by the selection probability so the
    // absolute tolerance applies to the final bracketed terms.
    let cross = integrate(
        |y| {
            let ly = gauss::log_pdf(y);
            y * ((ly + gauss::log_pdf(upper(y))).exp() - (ly + gauss::log_pdf(lower(y))).exp()) / (eta * prob)
        },
        quad,
    )?;
    let squared = integrate(
        |y| {
            let tails = gauss::tail_ratios(upper(y), lower(y));
            let r = tails.diff();
            (gauss::log_pdf(y) + tails.log_mass).exp() * r * r / (eta * eta * prob)
        },
        quad,
    )?;
    Ok(sigma_x * sigma_x * (1.0 - cross + squared))
}

fn check_sigma(sigma_x: f64) -> Result<()> {
    if sigma_x > 0.0 && sigma_x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "sigma_x must be positive and finite, got {sigma_x}"
        )))
    }
}
