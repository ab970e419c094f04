//! Inverse-variance weighted causal-effect estimators and their inference.
//!
//! Every estimator here is a ratio `sum(n_j / s_j^2) / sum(d_j / s_j^2)` over
//! per-SNP numerator and denominator terms, with `s_j` the outcome standard
//! error. Standard errors come from the residual form
//! `sum((n_j - beta * d_j)^2 / s_j^4) / (sum(d_j / s_j^2))^2`.
//!
//! | method | n_j | d_j |
//! |---|---|---|
//! | IVW | `G_j g_j` | `g_j^2` |
//! | dIVW | `G_j g_j` | `g_j^2 - sx_j^2` |
//! | RIVW | `G_j g_rb_j` | `g_rb_j^2 - s2_rb_j` |
//! | sRIVW | `w_j G_j g_rb_j` | `w_j (g_rb_j^2 - s2_rb_j)` |

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gauss;
use crate::numeric::CompensatedSum;
use crate::selection::{hard_threshold, RbInstrument};

/// Estimators refuse to run on fewer selected instruments than this.
pub const MIN_INSTRUMENTS: usize = 3;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// SNP identifier (usually an rsID). Cheap to clone.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SnpId(Arc<str>);

impl SnpId {
    pub fn new(id: &str) -> Self {
        SnpId(Arc::from(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SnpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for SnpId {
    fn from(s: &str) -> Self {
        SnpId::new(s)
    }
}

impl Serialize for SnpId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for SnpId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ok(SnpId::new(&s))
    }
}

/// Harmonized exposure and outcome associations of one SNP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentPair {
    pub snp_id: SnpId,
    /// SNP-exposure association.
    pub gamma_x: f64,
    pub sigma_x: f64,
    /// SNP-outcome association.
    pub gamma_y: f64,
    pub sigma_y: f64,
}

impl InstrumentPair {
    pub fn new(snp_id: SnpId, gamma_x: f64, sigma_x: f64, gamma_y: f64, sigma_y: f64) -> Result<Self> {
        let pair = Self {
            snp_id,
            gamma_x,
            sigma_x,
            gamma_y,
            sigma_y,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_x.is_finite() && self.gamma_y.is_finite()) {
            return Err(Error::Domain(format!("{}: associations must be finite", self.snp_id)));
        }
        if !(self.sigma_x > 0.0 && self.sigma_x.is_finite() && self.sigma_y > 0.0 && self.sigma_y.is_finite()) {
            return Err(Error::Domain(format!(
                "{}: standard errors must be positive and finite",
                self.snp_id
            )));
        }
        Ok(())
    }

    /// Exposure z-score.
    #[inline]
    pub fn z_x(&self) -> f64 {
        self.gamma_x / self.sigma_x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ivw,
    Divw,
    Rivw,
    Srivw,
    ThreeSampleIvw,
    ThreeSampleDivw,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ivw,
        Method::Divw,
        Method::Rivw,
        Method::Srivw,
        Method::ThreeSampleIvw,
        Method::ThreeSampleDivw,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Ivw => "IVW",
            Method::Divw => "dIVW",
            Method::Rivw => "RIVW",
            Method::Srivw => "sRIVW",
            Method::ThreeSampleIvw => "Three-sample IVW",
            Method::ThreeSampleDivw => "Three-sample dIVW",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Method::Ivw => "ivw",
            Method::Divw => "divw",
            Method::Rivw => "rivw",
            Method::Srivw => "srivw",
            Method::ThreeSampleIvw => "three-sample-ivw",
            Method::ThreeSampleDivw => "three-sample-divw",
        }
    }

    /// Whether the method draws pseudo-noise for randomized selection.
    pub fn is_randomized(self) -> bool {
        matches!(self, Method::Rivw)
    }

    pub fn needs_third_sample(self) -> bool {
        matches!(self, Method::ThreeSampleIvw | Method::ThreeSampleDivw)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.key() == key)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: Method,
    pub beta_hat: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha_level: f64,
    /// Number of instruments entering the estimator.
    pub n_selected: usize,
    /// Mean squared exposure z-score over the instruments used.
    pub f_stat: f64,
    /// Mean squared true standardized association over the instruments used;
    /// only known for simulated data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_hat: Option<f64>,
}

impl EstimateReport {
    pub fn covers(&self, beta: f64) -> bool {
        self.ci_low <= beta && beta <= self.ci_high
    }

    pub fn ci_length(&self) -> f64 {
        self.ci_high - self.ci_low
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa_hat = Some(kappa);
        self
    }
}

/// Plug-in estimating-function residual of one SNP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualTerm {
    /// `n_j - beta * d_j`.
    pub value: f64,
    /// `1 / sigma_y^4`.
    pub weight: f64,
}

struct RatioFit {
    beta: f64,
    variance: f64,
}

/// `(n_j, d_j, sigma_y_j)` triples in a fixed order.
fn ratio_fit(terms: &[(f64, f64, f64)]) -> Result<RatioFit> {
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    for &(n, d, sy) in terms {
        let w = 1.0 / (sy * sy);
        num.add(n * w);
        den.add(d * w);
    }
    let den = den.value();
    if !den.is_finite() || den <= 0.0 {
        return Err(Error::DegenerateInstruments { denominator: den });
    }
    let beta = num.value() / den;
    let mut meat = CompensatedSum::default();
    for &(n, d, sy) in terms {
        let r = n - beta * d;
        let s2 = sy * sy;
        meat.add(r * r / (s2 * s2));
    }
    Ok(RatioFit {
        beta,
        variance: meat.value() / (den * den),
    })
}

fn check_alpha(alpha: f64) -> Result<f64> {
    gauss::two_sided_cutoff(alpha)
}

fn guard(n: usize) -> Result<()> {
    if n < MIN_INSTRUMENTS {
        Err(Error::InsufficientInstruments {
            found: n,
            required: MIN_INSTRUMENTS,
        })
    } else {
        Ok(())
    }
}

fn report(method: Method, fit: RatioFit, alpha: f64, crit: f64, n_selected: usize, f_stat: f64) -> EstimateReport {
    let se = fit.variance.max(0.0).sqrt();
    EstimateReport {
        method,
        beta_hat: fit.beta,
        se,
        ci_low: fit.beta - crit * se,
        ci_high: fit.beta + crit * se,
        alpha_level: alpha,
        n_selected,
        f_stat,
        kappa_hat: None,
    }
}

fn selected_pairs<'a>(pairs: &'a [InstrumentPair], selected: &[usize]) -> Result<Vec<&'a InstrumentPair>> {
    selected
        .iter()
        .map(|&i| {
            pairs
                .get(i)
                .ok_or_else(|| Error::Contract(format!("selected index {i} out of range for {} pairs", pairs.len())))
        })
        .collect()
}

fn mean_sq_z<'a, I: Iterator<Item = &'a InstrumentPair>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::default();
    let mut n = 0usize;
    for p in iter {
        let z = p.z_x();
        acc.add(z * z);
        n += 1;
    }
    acc.value() / n as f64
}

fn plain_ivw(
    method: Method,
    pairs: &[InstrumentPair],
    selected: &[usize],
    alpha: f64,
    debiased: bool,
) -> Result<EstimateReport> {
    let crit = check_alpha(alpha)?;
    let chosen = selected_pairs(pairs, selected)?;
    guard(chosen.len())?;
    let terms: Vec<(f64, f64, f64)> = chosen
        .iter()
        .map(|p| {
            let d = if debiased {
                p.gamma_x * p.gamma_x - p.sigma_x * p.sigma_x
            } else {
                p.gamma_x * p.gamma_x
            };
            (p.gamma_y * p.gamma_x, d, p.sigma_y)
        })
        .collect();
    let fit = ratio_fit(&terms)?;
    Ok(report(
        method,
        fit,
        alpha,
        crit,
        chosen.len(),
        mean_sq_z(chosen.into_iter()),
    ))
}

/// Classical IVW over the selected SNPs.
pub fn ivw(pairs: &[InstrumentPair], selected: &[usize], alpha: f64) -> Result<EstimateReport> {
    plain_ivw(Method::Ivw, pairs, selected, alpha, false)
}

/// Debiased IVW: the denominator subtracts `sigma_x^2` from each `gamma_x^2`.
pub fn divw(pairs: &[InstrumentPair], selected: &[usize], alpha: f64) -> Result<EstimateReport> {
    plain_ivw(Method::Divw, pairs, selected, alpha, true)
}

fn check_aligned(pairs: &[InstrumentPair], rb: &[RbInstrument]) -> Result<()> {
    if pairs.len() != rb.len() {
        return Err(Error::Contract(format!(
            "{} instrument pairs but {} Rao-Blackwellized instruments",
            pairs.len(),
            rb.len()
        )));
    }
    for (p, r) in pairs.iter().zip(rb) {
        if p.gamma_x != r.gamma_hat || p.sigma_x != r.sigma_x {
            return Err(Error::Contract(format!(
                "{}: Rao-Blackwellized instrument does not match its pair",
                p.snp_id
            )));
        }
    }
    Ok(())
}

fn rb_terms(pairs: &[InstrumentPair], rb: &[RbInstrument], weights: Option<&[f64]>) -> Vec<(f64, f64, f64)> {
    pairs
        .iter()
        .zip(rb)
        .enumerate()
        .map(|(i, (p, r))| {
            let w = weights.map_or(1.0, |w| w[i]);
            (
                w * (p.gamma_y * r.gamma_rb),
                w * (r.gamma_rb * r.gamma_rb - r.sigma2_rb),
                p.sigma_y,
            )
        })
        .collect()
}

/// Rerandomized IVW over the randomly selected, Rao-Blackwellized SNPs.
/// `rb[i]` must be the correction of `pairs[i]`.
pub fn rivw(pairs: &[InstrumentPair], rb: &[RbInstrument], alpha: f64) -> Result<EstimateReport> {
    let crit = check_alpha(alpha)?;
    check_aligned(pairs, rb)?;
    guard(pairs.len())?;
    let fit = ratio_fit(&rb_terms(pairs, rb, None))?;
    Ok(report(
        Method::Rivw,
        fit,
        alpha,
        crit,
        pairs.len(),
        mean_sq_z(pairs.iter()),
    ))
}

/// Plug-in residuals of the RIVW estimating equation at `beta`.
pub fn rivw_residuals(pairs: &[InstrumentPair], rb: &[RbInstrument], beta: f64) -> Result<Vec<ResidualTerm>> {
    check_aligned(pairs, rb)?;
    Ok(pairs
        .iter()
        .zip(rb)
        .map(|(p, r)| {
            let s2 = p.sigma_y * p.sigma_y;
            ResidualTerm {
                value: p.gamma_y * r.gamma_rb - beta * (r.gamma_rb * r.gamma_rb - r.sigma2_rb),
                weight: 1.0 / (s2 * s2),
            }
        })
        .collect())
}

/// Smoothed RIVW over every SNP, each weighted by its conditional selection
/// probability.
pub fn srivw(pairs: &[InstrumentPair], rb: &[RbInstrument], alpha: f64) -> Result<EstimateReport> {
    let weights: Vec<f64> = rb.iter().map(|r| r.weight_cond).collect();
    srivw_with_weights(pairs, rb, &weights, alpha)
}

/// sRIVW with caller-supplied weights.
pub fn srivw_with_weights(
    pairs: &[InstrumentPair],
    rb: &[RbInstrument],
    weights: &[f64],
    alpha: f64,
) -> Result<EstimateReport> {
    let crit = check_alpha(alpha)?;
    check_aligned(pairs, rb)?;
    if weights.len() != pairs.len() {
        return Err(Error::Contract("one weight per instrument is required".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && **w <= 1.0)) {
        return Err(Error::Domain(format!("selection weights must lie in [0, 1], got {w}")));
    }
    guard(pairs.len())?;
    let fit = ratio_fit(&rb_terms(pairs, rb, Some(weights)))?;
    Ok(report(
        Method::Srivw,
        fit,
        alpha,
        crit,
        pairs.len(),
        mean_sq_z(pairs.iter()),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThreeSampleVariant {
    Ivw,
    Divw,
}

/// Hard-threshold selection on z-scores from an independent exposure GWAS,
/// then IVW or dIVW on the retained pairs.
pub fn three_sample_ivw(
    pairs: &[InstrumentPair],
    selection_zscores: &[f64],
    lambda: f64,
    variant: ThreeSampleVariant,
    alpha: f64,
) -> Result<EstimateReport> {
    if selection_zscores.len() != pairs.len() {
        return Err(Error::Contract(format!(
            "{} selection z-scores for {} pairs",
            selection_zscores.len(),
            pairs.len()
        )));
    }
    let selected: Vec<usize> = selection_zscores
        .iter()
        .enumerate()
        .filter(|(_, z)| hard_threshold(**z, lambda))
        .map(|(i, _)| i)
        .collect();
    let (method, debiased) = match variant {
        ThreeSampleVariant::Ivw => (Method::ThreeSampleIvw, false),
        ThreeSampleVariant::Divw => (Method::ThreeSampleDivw, true),
    };
    plain_ivw(method, pairs, &selected, alpha, debiased)
}

/// Indices with `|z| > lambda`; a non-positive `lambda` keeps every SNP.
pub fn select_hard(pairs: &[InstrumentPair], lambda: f64) -> Vec<usize> {
    pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| lambda <= 0.0 || hard_threshold(p.z_x(), lambda))
        .map(|(i, _)| i)
        .collect()
}

/// Mean squared exposure z-score over the selected SNPs.
pub fn f_statistic(pairs: &[InstrumentPair], selected: &[usize]) -> Result<f64> {
    if selected.is_empty() {
        return Err(Error::Domain("F statistic of an empty instrument set".into()));
    }
    let chosen = selected_pairs(pairs, selected)?;
    Ok(mean_sq_z(chosen.into_iter()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{rao_blackwellize, SelectionConfig};
    use proptest::prelude::*;

    fn pair(id: &str, gx: f64, sx: f64, gy: f64, sy: f64) -> InstrumentPair {
        InstrumentPair::new(SnpId::new(id), gx, sx, gy, sy).unwrap()
    }

    fn three_equal(gy: f64, gx: f64) -> Vec<InstrumentPair> {
        (0..3).map(|i| pair(&format!("rs{i}"), gx, 1.0, gy, 0.7)).collect()
    }

    #[test]
    fn ivw_ratio_examples() {
        let pairs = three_equal(0.4, 2.0);
        let r = ivw(&pairs, &[0, 1, 2], 0.05).unwrap();
        assert!((r.beta_hat - 0.2).abs() < 1e-15);
        assert!(r.se < 1e-15);

        let pairs = vec![
            pair("a", 2.0, 1.0, 0.4, 1.0),
            pair("b", 1.0, 1.0, 0.1, 1.0),
            pair("c", 0.0, 1.0, 0.3, 1.0),
        ];
        let r = ivw(&pairs, &[0, 1, 2], 0.05).unwrap();
        assert!((r.beta_hat - 0.18).abs() < 1e-15);
        assert_eq!(r.n_selected, 3);
        assert!((r.f_stat - 5.0 / 3.0).abs() < 1e-15);
        // hand-computed residual variance: residuals 0.8-0.72, 0.1-0.18, 0
        let v = (0.08f64.powi(2) + 0.08f64.powi(2)) / 25.0;
        assert!((r.se - v.sqrt()).abs() < 1e-15);
        let crit = gauss::isf(0.025);
        assert!((r.ci_low - (0.18 - crit * r.se)).abs() < 1e-15);
        assert!((r.ci_high - (0.18 + crit * r.se)).abs() < 1e-15);
    }

    #[test]
    fn divw_example() {
        let pairs = three_equal(0.4, 2.0);
        let r = divw(&pairs, &[0, 1, 2], 0.05).unwrap();
        assert!((r.beta_hat - 0.8 / 3.0).abs() < 1e-15);
        let degenerate = three_equal(0.4, 1.0);
        assert!(matches!(
            divw(&degenerate, &[0, 1, 2], 0.05),
            Err(Error::DegenerateInstruments { .. })
        ));
    }

    #[test]
    fn guard_and_index_errors() {
        let pairs = three_equal(0.4, 2.0);
        assert!(matches!(
            ivw(&pairs, &[0, 1], 0.05),
            Err(Error::InsufficientInstruments { found: 2, required: 3 })
        ));
        assert!(matches!(ivw(&pairs, &[0, 1, 7], 0.05), Err(Error::Contract(_))));
        assert!(matches!(ivw(&pairs, &[0, 1, 2], 1.5), Err(Error::Domain(_))));
        assert!(f_statistic(&pairs, &[]).is_err());
    }

    #[test]
    fn rivw_single_instrument_has_zero_variance_and_hits_guard() {
        let cfg = SelectionConfig::new(4.06, 0.5, 0).unwrap();
        let p = pair("rs1", 0.05, 0.01, 0.012, 0.01);
        let rb = rao_blackwellize(p.gamma_x, p.sigma_x, &cfg).unwrap();
        let fit = ratio_fit(&rb_terms(std::slice::from_ref(&p), &[rb], None)).unwrap();
        assert!(fit.variance.sqrt() <= 1e-14 * fit.beta.abs());
        assert!(matches!(
            rivw(&[p], &[rb], 0.05),
            Err(Error::InsufficientInstruments { found: 1, .. })
        ));
    }

    #[test]
    fn rivw_rejects_misaligned_inputs() {
        let cfg = SelectionConfig::default();
        let pairs = three_equal(0.4, 5.0);
        let rb: Vec<_> = pairs
            .iter()
            .map(|p| rao_blackwellize(p.gamma_x + 1.0, p.sigma_x, &cfg).unwrap())
            .collect();
        assert!(matches!(rivw(&pairs, &rb, 0.05), Err(Error::Contract(_))));
        assert!(matches!(rivw(&pairs, &rb[..2], 0.05), Err(Error::Contract(_))));
    }

    fn rb_all(pairs: &[InstrumentPair], cfg: &SelectionConfig) -> Vec<RbInstrument> {
        pairs
            .iter()
            .map(|p| rao_blackwellize(p.gamma_x, p.sigma_x, cfg).unwrap())
            .collect()
    }

    fn sample_pairs() -> Vec<InstrumentPair> {
        (0..12)
            .map(|i| {
                let gx = 0.01 * (3.0 + (i as f64 * 0.77).sin() * 4.0);
                let gy = 0.2 * gx + 0.004 * (i as f64 * 1.3).cos();
                pair(&format!("rs{i}"), gx, 0.01, gy, 0.008 + 0.001 * (i % 3) as f64)
            })
            .collect()
    }

    #[test]
    fn srivw_with_unit_weights_equals_rivw() {
        let cfg = SelectionConfig::default();
        let pairs = sample_pairs();
        let rb = rb_all(&pairs, &cfg);
        let ones = vec![1.0; pairs.len()];
        let s = srivw_with_weights(&pairs, &rb, &ones, 0.05).unwrap();
        let r = rivw(&pairs, &rb, 0.05).unwrap();
        assert_eq!(s.beta_hat, r.beta_hat);
        assert_eq!(s.se, r.se);
        assert!(srivw_with_weights(&pairs, &rb, &ones[1..], 0.05).is_err());
    }

    #[test]
    fn srivw_single_snp_weight_cancels() {
        // One SNP repeated three times so the guard is satisfied; a common
        // weight cancels from the ratio.
        let cfg = SelectionConfig::default();
        let pairs: Vec<_> = (0..3)
            .map(|i| pair(&format!("rs{i}"), 0.045, 0.01, 0.01, 0.01))
            .collect();
        let rb = rb_all(&pairs, &cfg);
        let w = rb[0].weight_cond;
        assert!(w > 0.0 && w < 1.0);
        let s = srivw(&pairs, &rb, 0.05).unwrap();
        let r = rivw(&pairs, &rb, 0.05).unwrap();
        assert!((s.beta_hat - r.beta_hat).abs() <= 1e-14 * r.beta_hat.abs());
    }

    #[test]
    fn residuals_vanish_at_the_estimate() {
        let cfg = SelectionConfig::default();
        let pairs = sample_pairs();
        let rb = rb_all(&pairs, &cfg);
        let r = rivw(&pairs, &rb, 0.05).unwrap();
        let res = rivw_residuals(&pairs, &rb, r.beta_hat).unwrap();
        let total: f64 = res
            .iter()
            .zip(&pairs)
            .map(|(t, p)| t.value / (p.sigma_y * p.sigma_y))
            .sum();
        let scale: f64 = pairs
            .iter()
            .zip(&rb)
            .map(|(p, b)| (p.gamma_y * b.gamma_rb).abs() / (p.sigma_y * p.sigma_y))
            .sum();
        assert!(total.abs() <= 1e-10 * scale);
        let v: f64 = res.iter().map(|t| t.value * t.value * t.weight).sum::<f64>();
        let den: f64 = pairs
            .iter()
            .zip(&rb)
            .map(|(p, b)| (b.gamma_rb * b.gamma_rb - b.sigma2_rb) / (p.sigma_y * p.sigma_y))
            .sum();
        assert!(((v / (den * den)).sqrt() - r.se).abs() <= 1e-12 * r.se);
    }

    #[test]
    fn three_sample_selection() {
        let pairs = sample_pairs();
        let all_pass = vec![10.0; pairs.len()];
        let t = three_sample_ivw(&pairs, &all_pass, 5.45, ThreeSampleVariant::Ivw, 0.05).unwrap();
        let all: Vec<usize> = (0..pairs.len()).collect();
        let i = ivw(&pairs, &all, 0.05).unwrap();
        assert_eq!(t.beta_hat, i.beta_hat);
        assert_eq!(t.method, Method::ThreeSampleIvw);
        let t = three_sample_ivw(&pairs, &all_pass, 5.45, ThreeSampleVariant::Divw, 0.05).unwrap();
        assert_eq!(t.beta_hat, divw(&pairs, &all, 0.05).unwrap().beta_hat);

        let mut z = vec![0.0; pairs.len()];
        z[1] = -6.0;
        z[4] = 7.0;
        z[9] = 5.5;
        let t = three_sample_ivw(&pairs, &z, 5.45, ThreeSampleVariant::Ivw, 0.05).unwrap();
        assert_eq!(t.beta_hat, ivw(&pairs, &[1, 4, 9], 0.05).unwrap().beta_hat);
        assert!(three_sample_ivw(&pairs, &z[1..], 5.45, ThreeSampleVariant::Ivw, 0.05).is_err());
    }

    #[test]
    fn f_statistic_examples() {
        let pairs = vec![pair("a", 2.0, 1.0, 0.0, 1.0), pair("b", 0.4, 0.1, 0.0, 1.0)];
        assert!((f_statistic(&pairs, &[0, 1]).unwrap() - 10.0).abs() < 1e-12);
        let lambda = 4.06;
        let at_cutoff = vec![pair("a", lambda * 0.01, 0.01, 0.0, 1.0); 4];
        assert!((f_statistic(&at_cutoff, &[0, 1, 2, 3]).unwrap() - lambda * lambda).abs() < 1e-12);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.key().parse::<Method>().unwrap(), m);
        }
        assert_eq!("RIVW".parse::<Method>().unwrap(), Method::Rivw);
        assert!("raps".parse::<Method>().is_err());
    }

    proptest! {
        #[test]
        fn common_outcome_scale_leaves_beta_unchanged(c in 0.01f64..100.0) {
            let cfg = SelectionConfig::default();
            let pairs = sample_pairs();
            let scaled: Vec<_> = pairs
                .iter()
                .map(|p| InstrumentPair { sigma_y: p.sigma_y * c, ..p.clone() })
                .collect();
            let rb = rb_all(&pairs, &cfg);
            let all: Vec<usize> = (0..pairs.len()).collect();
            let a = rivw(&pairs, &rb, 0.05).unwrap();
            let b = rivw(&scaled, &rb, 0.05).unwrap();
            prop_assert!((a.beta_hat - b.beta_hat).abs() <= 1e-12 * a.beta_hat.abs());
            prop_assert!((a.se - b.se).abs() <= 1e-10 * a.se);
            let a = ivw(&pairs, &all, 0.05).unwrap();
            let b = ivw(&scaled, &all, 0.05).unwrap();
            prop_assert!((a.beta_hat - b.beta_hat).abs() <= 1e-12 * a.beta_hat.abs());
            prop_assert!(b.ci_low <= b.beta_hat && b.beta_hat <= b.ci_high);
        }
    }
}
