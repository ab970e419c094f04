//! Monte Carlo behaviour of the Rao-Blackwellized estimate for a single SNP
//! conditional on its randomized selection.
//!
//! With `z ~ N(mu, 1)` and pseudo-noise `Z ~ N(0, eta^2)`, the selection
//! score `W = z + Z` is `N(mu, 1 + eta^2)` and selection keeps `|W| > lambda`.
//! Draws come from that two-tailed truncated normal, then
//! `z | W ~ N(mu + (W - mu) / (1 + eta^2), eta^2 / (1 + eta^2))`, so every
//! draw is a selected one and no rejection is needed.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::QuadratureSpec;
use crate::gauss::{self, log_add_exp};
use crate::numeric::OnlineMoments;
use crate::rng::{stream, Role};
use crate::selection::{rao_blackwellize, rb_variance_quadrature, unconditional_weight, SelectionConfig};

const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbMonteCarloConfig {
    /// True standardized association `gamma / sigma_x`.
    pub ratio: f64,
    pub sigma_x: f64,
    pub lambda: f64,
    pub eta: f64,
    /// Number of selected draws.
    pub draws: u64,
    pub seed: u64,
    pub bins: usize,
}

impl RbMonteCarloConfig {
    pub const MIN_DRAWS: u64 = 10_000;

    fn validate(&self) -> Result<SelectionConfig> {
        if !self.ratio.is_finite() {
            return Err(Error::Domain("gamma / sigma_x must be finite".into()));
        }
        if !(self.sigma_x > 0.0 && self.sigma_x.is_finite()) {
            return Err(Error::Domain("sigma_x must be positive".into()));
        }
        if self.draws < Self::MIN_DRAWS {
            return Err(Error::Domain(format!(
                "at least {} draws are required",
                Self::MIN_DRAWS
            )));
        }
        if self.bins == 0 {
            return Err(Error::Domain("histograms need at least one bin".into()));
        }
        SelectionConfig::new(self.lambda, self.eta, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(lower: f64, upper: f64, bins: usize) -> Self {
        Self {
            lower,
            upper,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn bin_width(&self) -> f64 {
        (self.upper - self.lower) / self.counts.len() as f64
    }

    pub fn add(&mut self, x: f64) {
        if x < self.lower {
            self.underflow += 1;
        } else if x >= self.upper {
            self.overflow += 1;
        } else {
            let last = self.counts.len() - 1;
            let i = ((x - self.lower) / self.bin_width()) as usize;
            self.counts[i.min(last)] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    /// `(left edge, right edge, count)` per bin.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        let w = self.bin_width();
        self.counts
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.lower + i as f64 * w, self.lower + (i + 1) as f64 * w, *c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
}

impl From<&OnlineMoments> for MomentSummary {
    fn from(m: &OnlineMoments) -> Self {
        Self {
            mean: m.mean(),
            mean_se: m.mean_se(),
            variance: m.variance(),
            variance_se: m.variance_se(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbMonteCarlo {
    pub config: RbMonteCarloConfig,
    pub gamma: f64,
    /// Unconditional probability that the SNP is selected.
    pub selection_probability: f64,
    /// Selected raw estimates.
    pub raw: MomentSummary,
    pub rb: MomentSummary,
    /// Variance estimates reported by the correction.
    pub sigma2_rb: MomentSummary,
    pub raw_histogram: Histogram,
    pub rb_histogram: Histogram,
}

struct ChunkStats {
    raw: OnlineMoments,
    rb: OnlineMoments,
    s2: OnlineMoments,
    raw_hist: Histogram,
    rb_hist: Histogram,
}

/// Samples `W` given `|W| > lambda` for `W ~ N(mu, s^2)`.
struct TailSampler {
    mu: f64,
    s: f64,
    /// Standardized upper cutoff; the upper tail is `N(0,1) > a`.
    a: f64,
    /// Standardized lower cutoff, mirrored: the lower tail is `N(0,1) > b`.
    b: f64,
    p_upper: f64,
}

impl TailSampler {
    fn new(mu: f64, s: f64, lambda: f64) -> Result<Self> {
        let a = (lambda - mu) / s;
        let b = (lambda + mu) / s;
        let (la, lb) = (gauss::log_sf(a), gauss::log_sf(b));
        if la.max(lb) < -690.0 {
            return Err(Error::Domain(format!(
                "selection probability underflows for standardized cutoffs {a} and {b}"
            )));
        }
        Ok(Self {
            mu,
            s,
            a,
            b,
            p_upper: (la - log_add_exp(la, lb)).exp(),
        })
    }

    fn tail<R: Rng>(rng: &mut R, cut: f64) -> f64 {
        let u: f64 = rng.random();
        // `1 - u` lies in (0, 1], keeping the target probability positive.
        let q = gauss::sf(cut) * (1.0 - u);
        gauss::isf(q).max(cut)
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.p_upper {
            self.mu + self.s * Self::tail(rng, self.a)
        } else {
            self.mu - self.s * Self::tail(rng, self.b)
        }
    }
}

pub fn rb_monte_carlo(cfg: &RbMonteCarloConfig) -> Result<RbMonteCarlo> {
    let sel = cfg.validate()?;
    let mu = cfg.ratio;
    let s2 = 1.0 + cfg.eta * cfg.eta;
    let sampler = TailSampler::new(mu, s2.sqrt(), cfg.lambda)?;
    let cond_sd = cfg.eta / s2.sqrt();
    let sigma = cfg.sigma_x;
    let gamma = mu * sigma;

    let lo = (mu.min(-cfg.lambda) - 6.0) * sigma;
    let hi = (mu.max(cfg.lambda) + 6.0) * sigma;

    let n_chunks = cfg.draws.div_ceil(CHUNK);
    let chunks: Vec<Result<ChunkStats>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(cfg.draws - c * CHUNK);
            let mut rng = stream(cfg.seed, 0, Role::Chunk(c as u32));
            let mut st = ChunkStats {
                raw: OnlineMoments::default(),
                rb: OnlineMoments::default(),
                s2: OnlineMoments::default(),
                raw_hist: Histogram::new(lo, hi, cfg.bins),
                rb_hist: Histogram::new(lo, hi, cfg.bins),
            };
            for _ in 0..n {
                let w = sampler.sample(&mut rng);
                let e: f64 = rng.sample(rand_distr::StandardNormal);
                let z = mu + (w - mu) / s2 + cond_sd * e;
                let g = z * sigma;
                let r = rao_blackwellize(g, sigma, &sel)?;
                st.raw.push(g);
                st.rb.push(r.gamma_rb);
                st.s2.push(r.sigma2_rb);
                st.raw_hist.add(g);
                st.rb_hist.add(r.gamma_rb);
            }
            Ok(st)
        })
        .collect();

    let mut total: Option<ChunkStats> = None;
    for chunk in chunks {
        let chunk = chunk?;
        match total.as_mut() {
            None => total = Some(chunk),
            Some(t) => {
                t.raw.merge(&chunk.raw);
                t.rb.merge(&chunk.rb);
                t.s2.merge(&chunk.s2);
                t.raw_hist.merge(&chunk.raw_hist);
                t.rb_hist.merge(&chunk.rb_hist);
            }
        }
    }
    let t = total.expect("at least one chunk");
    Ok(RbMonteCarlo {
        config: *cfg,
        gamma,
        selection_probability: unconditional_weight(mu, &sel),
        raw: (&t.raw).into(),
        rb: (&t.rb).into(),
        sigma2_rb: (&t.s2).into(),
        raw_histogram: t.raw_hist,
        rb_histogram: t.rb_hist,
    })
}

/// Closed-form conditional variance of the corrected estimate next to its
/// Monte Carlo counterparts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheck {
    pub oracle: f64,
    /// Variance of the corrected estimate across selected draws.
    pub mc_variance: f64,
    pub mc_variance_se: f64,
    /// Mean of the reported variance estimates across selected draws.
    pub mean_sigma2_rb: f64,
    pub mean_sigma2_rb_se: f64,
    /// `(mc_variance - oracle) / mc_variance_se`.
    pub z_variance: f64,
    /// `(mean_sigma2_rb - oracle) / mean_sigma2_rb_se`.
    pub z_sigma2: f64,
    /// Standardized difference of the two Monte Carlo quantities.
    pub z_between: f64,
    pub monte_carlo: RbMonteCarlo,
}

impl VarianceCheck {
    /// Largest absolute standardized discrepancy.
    pub fn max_abs_z(&self) -> f64 {
        self.z_variance.abs().max(self.z_sigma2.abs()).max(self.z_between.abs())
    }
}

/// `diff / se`, with the standard error floored at rounding level: for strong
/// instruments every reported variance equals `sigma_x^2` and the Monte Carlo
/// standard error is exactly zero.
fn standardized(diff: f64, se: f64, scale: f64) -> f64 {
    diff / se.max(1e-12 * scale.abs())
}

pub fn variance_check(cfg: &RbMonteCarloConfig) -> Result<VarianceCheck> {
    let sel = cfg.validate()?;
    let oracle = rb_variance_quadrature(
        cfg.ratio * cfg.sigma_x,
        cfg.sigma_x,
        &sel,
        &QuadratureSpec::normal_domain(),
    )?;
    let mc = rb_monte_carlo(cfg)?;
    let (v, vse) = (mc.rb.variance, mc.rb.variance_se);
    let (s, sse) = (mc.sigma2_rb.mean, mc.sigma2_rb.mean_se);
    Ok(VarianceCheck {
        oracle,
        mc_variance: v,
        mc_variance_se: vse,
        mean_sigma2_rb: s,
        mean_sigma2_rb_se: sse,
        z_variance: standardized(v - oracle, vse, oracle),
        z_sigma2: standardized(s - oracle, sse, oracle),
        z_between: standardized(v - s, vse.hypot(sse), oracle),
        monte_carlo: mc,
    })
}
