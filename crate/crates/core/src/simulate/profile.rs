//! Winner's-curse profile: bias of IVW with genome-wide selection, of
//! three-sample IVW and of RIVW across a grid of exposure effect variances
//! and mixture proportions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiment::{run_one_with, snp_ids, summarize};
use super::{MethodSpec, PleiotropyLaw, SimConfig, SimMetrics};
use crate::error::{Error, Result};
use crate::estimators::{Method, DEFAULT_ALPHA};
use crate::gauss;
use crate::selection::genome_wide_cutoff;

/// Selection p-value of the genome-wide threshold.
pub const GENOME_WIDE_P: f64 = 5e-8;
/// Upper edge of the "near the cutoff" band used for the IV proportion.
pub const NEAR_CUTOFF_P: f64 = 5e-10;

fn default_eps() -> Vec<f64> {
    vec![2e-5, 3e-5, 5e-5, 1e-4, 3e-4, 5e-4]
}

fn default_pi() -> Vec<f64> {
    vec![0.005, 0.05]
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

/// Grid over `eps_x2 = tau2` and `pi_x = pi_y`, with `rho = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileGrid {
    pub p: usize,
    pub n_x: u64,
    pub n_y: u64,
    pub beta: f64,
    pub n_reps: usize,
    pub seed: u64,
    #[serde(default = "default_eps")]
    pub eps_values: Vec<f64>,
    #[serde(default = "default_pi")]
    pub pi_values: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl ProfileGrid {
    pub fn methods() -> Vec<MethodSpec> {
        vec![
            MethodSpec::new(Method::Ivw),
            MethodSpec::new(Method::ThreeSampleIvw),
            MethodSpec::new(Method::Rivw),
        ]
    }

    fn point_config(&self, eps_x2: f64, pi: f64, index: usize) -> SimConfig {
        SimConfig {
            p: self.p,
            pi_x: pi,
            pi_y: pi,
            rho: 1.0,
            eps_x2,
            tau2: eps_x2,
            beta: self.beta,
            n_x: self.n_x,
            n_y: self.n_y,
            n_reps: self.n_reps,
            seed: self.seed.wrapping_add(index as u64),
            methods: Self::methods(),
            pleiotropy: PleiotropyLaw::Normal,
            alpha: self.alpha,
        }
    }

    /// Expected number of SNPs passing the genome-wide threshold.
    pub fn expected_ivs(&self, eps_x2: f64, pi: f64) -> f64 {
        let c = genome_wide_cutoff();
        let scale = (1.0 + self.n_x as f64 * eps_x2).sqrt();
        let p = self.p as f64;
        2.0 * (p * pi * gauss::sf(c / scale) + p * (1.0 - pi) * gauss::sf(c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub eps_x2: f64,
    pub pi: f64,
    pub h2_x: f64,
    pub h2_y: f64,
    /// Why the point was left out, if it was.
    pub skipped: Option<String>,
    /// Share of genome-wide-significant SNPs whose p-value lies between the
    /// genome-wide threshold and `NEAR_CUTOFF_P`, pooled over replicates.
    pub iv_proportion: f64,
    /// Mean F statistic of the three-sample IVW instruments.
    pub mean_f_three_sample: f64,
    pub ivw_bias_proportion: f64,
    pub three_sample_bias_proportion: f64,
    pub rivw_bias_proportion: f64,
    pub metrics: Vec<SimMetrics>,
}

/// `|mean - beta| / |beta|`.
pub fn bias_proportion(mean_estimate: f64, beta: f64) -> f64 {
    (mean_estimate - beta).abs() / beta.abs()
}

fn skipped(eps_x2: f64, pi: f64, cfg: &SimConfig, reason: String) -> ProfilePoint {
    ProfilePoint {
        eps_x2,
        pi,
        h2_x: cfg.h2_x(),
        h2_y: cfg.h2_y(),
        skipped: Some(reason),
        iv_proportion: f64::NAN,
        mean_f_three_sample: f64::NAN,
        ivw_bias_proportion: f64::NAN,
        three_sample_bias_proportion: f64::NAN,
        rivw_bias_proportion: f64::NAN,
        metrics: Vec::new(),
    }
}

/// Runs every admissible grid point, in `(eps, pi)` row-major order.
///
/// A point is skipped when its heritabilities leave `(0, 1)` or when fewer
/// than three SNPs are expected to pass the genome-wide threshold.
pub fn winners_curse_profile(grid: &ProfileGrid) -> Result<Vec<ProfilePoint>> {
    if grid.beta == 0.0 || !grid.beta.is_finite() {
        return Err(Error::Config("the profile needs a finite nonzero beta".into()));
    }
    let ids = snp_ids(grid.p);
    let c_wide = gauss::isf(GENOME_WIDE_P / 2.0);
    let c_near = gauss::isf(NEAR_CUTOFF_P / 2.0);
    let mut out = Vec::new();
    for (i, &eps) in grid.eps_values.iter().enumerate() {
        for (k, &pi) in grid.pi_values.iter().enumerate() {
            let cfg = grid.point_config(eps, pi, i * grid.pi_values.len() + k);
            if let Err(e) = cfg.validate() {
                out.push(skipped(eps, pi, &cfg, e.to_string()));
                continue;
            }
            let expected = grid.expected_ivs(eps, pi);
            if expected < 3.0 {
                out.push(skipped(
                    eps,
                    pi,
                    &cfg,
                    format!("expected {expected:.2} genome-wide IVs, fewer than three"),
                ));
                continue;
            }
            let runs: Vec<_> = (0..cfg.n_reps as u64)
                .into_par_iter()
                .map(|r| {
                    run_one_with(&cfg, &ids, r, |_, draw| {
                        let (mut wide, mut near) = (0u64, 0u64);
                        for g in &draw.gamma_hat {
                            let z = (g / draw.sigma_x).abs();
                            if z > c_wide {
                                wide += 1;
                                if z <= c_near {
                                    near += 1;
                                }
                            }
                        }
                        (wide, near)
                    })
                })
                .collect::<Result<_>>()?;
            let (wide, near) = runs.iter().fold((0u64, 0u64), |acc, (_, c)| (acc.0 + c.0, acc.1 + c.1));
            let outcomes: Vec<_> = runs.into_iter().map(|(o, _)| o).collect();
            let metrics = summarize(&cfg, &outcomes)?;
            let bias = |m: &SimMetrics| bias_proportion(m.mean_beta, grid.beta);
            out.push(ProfilePoint {
                eps_x2: eps,
                pi,
                h2_x: cfg.h2_x(),
                h2_y: cfg.h2_y(),
                skipped: None,
                iv_proportion: if wide > 0 { near as f64 / wide as f64 } else { f64::NAN },
                mean_f_three_sample: metrics[1].mean_f_stat,
                ivw_bias_proportion: bias(&metrics[0]),
                three_sample_bias_proportion: bias(&metrics[1]),
                rivw_bias_proportion: bias(&metrics[2]),
                metrics,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ProfileGrid {
        ProfileGrid {
            p: 200_000,
            n_x: 100_000,
            n_y: 100_000,
            beta: 0.2,
            n_reps: 2,
            seed: 1,
            eps_values: default_eps(),
            pi_values: default_pi(),
            alpha: 0.05,
        }
    }

    #[test]
    fn perfect_estimator_has_zero_bias() {
        assert_eq!(bias_proportion(0.2, 0.2), 0.0);
        assert!((bias_proportion(0.18, 0.2) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn infeasible_points_are_flagged() {
        let g = grid();
        // Heritability 10000 * 5e-4 is far above one.
        assert!(g.point_config(5e-4, 0.05, 0).validate().is_err());
        assert!(g.expected_ivs(2e-5, 0.005) < 3.0);
        assert!(g.expected_ivs(3e-5, 0.005) > 3.0);
        let mut small = g.clone();
        small.eps_values = vec![2e-5, 5e-4];
        small.pi_values = vec![0.005, 0.05];
        small.n_reps = 1;
        let pts = winners_curse_profile(&small).unwrap();
        assert_eq!(pts.len(), 4);
        assert!(pts[0].skipped.as_deref().unwrap().contains("fewer than three"));
        assert!(pts[3].skipped.as_deref().unwrap().contains("heritability"));
        assert!(pts[2].skipped.is_none());
        assert!((0.0..=1.0).contains(&pts[2].iv_proportion));
    }
}
