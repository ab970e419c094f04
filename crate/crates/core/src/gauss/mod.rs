//! Standard normal kernels and one-dimensional adaptive quadrature.
//!
//! Upper-tail masses are always evaluated through the complementary error
//! function, never as `1 - cdf(x)`. The selection-probability denominators
//! used by the Rao-Blackwell correction are two-sided tail masses that can be
//! as small as `1e-16` for null SNPs, and far smaller for extreme inputs, so
//! [`tail_ratios`] works on the log scale and never divides by an underflowed
//! mass.
//!
//! The unchecked kernels (`pdf`, `cdf`, `sf`, ...) are used in hot loops. The
//! `norm_*` wrappers validate their input and return [`Error::Domain`].

mod quadrature;

pub use quadrature::{integrate, integrate_with_estimate, Integral, QuadratureSpec};

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{ensure_finite, Error, Result};

/// 1 / sqrt(2 pi)
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_677_939_946_059_934_381_9;
/// ln(sqrt(2 pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_405_617_6;

/// Above this point `sf` is evaluated through the continued-fraction Mills
/// ratio on the log scale; `erfc` underflows into subnormals near x = 37.5.
const LOG_SF_CF_CUTOFF: f64 = 30.0;
/// Below this point the Mills ratio is `sf / pdf` directly.
const MILLS_CF_CUTOFF: f64 = 8.0;

#[inline]
pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub fn log_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Survival function `1 - Phi(x)` with full relative accuracy in the upper tail.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `ln(1 - Phi(x))`, finite for every finite `x`.
pub fn log_sf(x: f64) -> f64 {
    if x < 0.0 {
        (-sf(-x)).ln_1p()
    } else if x <= LOG_SF_CF_CUTOFF {
        sf(x).ln()
    } else {
        log_pdf(x) + mills_ratio_cf(x).ln()
    }
}

/// Mills ratio `(1 - Phi(x)) / phi(x)`.
pub fn mills_ratio(x: f64) -> f64 {
    if x < MILLS_CF_CUTOFF {
        sf(x) / pdf(x)
    } else {
        mills_ratio_cf(x)
    }
}

/// Laplace continued fraction `R(x) = 1/(x + 1/(x + 2/(x + 3/(x + ...))))`,
/// evaluated with the modified Lentz algorithm. Intended for `x >= 8`.
fn mills_ratio_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// Inverse survival function: the `x` with `sf(x) = q`, for `0 < q < 1`.
pub fn isf(q: f64) -> f64 {
    if q > 0.5 {
        // 1 - q is exact for q in [0.5, 1].
        return -isf(1.0 - q);
    }
    if q == 0.5 {
        return 0.0;
    }
    let log_q = q.ln();
    let mut x = -acklam_quantile(q);
    for _ in 0..8 {
        let step = (log_sf(x) - log_q) * mills_ratio(x);
        x += step;
        if step.abs() <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Quantile function `Phi^{-1}(p)`, for `0 < p < 1`.
#[inline]
pub fn quantile(p: f64) -> f64 {
    -isf(p)
}

/// Acklam's rational approximation (relative error about 1e-9), used only as
/// the starting point for the Newton refinement in [`isf`].
fn acklam_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    let tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    if p < P_LOW {
        tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(1.0 - p)
    }
}

/// `ln(e^x + e^y)`, symmetric in its arguments.
#[inline]
pub(crate) fn log_add_exp(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Density-to-mass ratios at the two boundaries of an exterior interval.
///
/// For `a >= b` the exterior mass is `D = 1 - Phi(a) + Phi(b)` and
/// `upper = phi(a) / D`, `lower = phi(b) / D`. Both ratios stay bounded by
/// roughly `max(|a|, |b|) + 1` even when `D` itself underflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRatios {
    pub upper: f64,
    pub lower: f64,
    pub log_mass: f64,
}

impl TailRatios {
    /// `(phi(a) - phi(b)) / D`
    #[inline]
    pub fn diff(&self) -> f64 {
        self.upper - self.lower
    }

    /// The exterior mass `D` (may underflow to zero; `log_mass` does not).
    #[inline]
    pub fn mass(&self) -> f64 {
        self.log_mass.exp()
    }
}

/// Unchecked; the caller guarantees `a >= b` and both finite.
pub fn tail_ratios(a: f64, b: f64) -> TailRatios {
    let log_mass = log_add_exp(log_sf(a), log_sf(-b));
    TailRatios {
        upper: (log_pdf(a) - log_mass).exp(),
        lower: (log_pdf(b) - log_mass).exp(),
        log_mass,
    }
}

pub fn norm_pdf(x: f64) -> Result<f64> {
    ensure_finite("x", x).map(pdf)
}

pub fn norm_cdf(x: f64) -> Result<f64> {
    ensure_finite("x", x).map(cdf)
}

pub fn norm_sf(x: f64) -> Result<f64> {
    ensure_finite("x", x).map(sf)
}

pub fn norm_quantile(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(quantile(p))
    } else {
        Err(Error::Domain(format!("probability must lie in (0, 1), got {p}")))
    }
}

/// Stable `(phi(a) - phi(b)) / (1 - Phi(a) + Phi(b))` for `a >= b`.
pub fn mills_ratio_diff(a: f64, b: f64) -> Result<f64> {
    ensure_finite("a", a)?;
    ensure_finite("b", b)?;
    if a < b {
        return Err(Error::Contract(format!(
            "mills_ratio_diff requires a >= b, got a = {a}, b = {b}"
        )));
    }
    Ok(tail_ratios(a, b).diff())
}

/// Two-sided cutoff `Phi^{-1}(1 - alpha / 2)` for a significance level.
pub fn two_sided_cutoff(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(isf(0.5 * alpha))
    } else {
        Err(Error::Domain(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Two-sided p-value of a z-score.
#[inline]
pub fn two_sided_pvalue(z: f64) -> f64 {
    2.0 * sf(z.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values computed with mpmath at 50 significant digits.
    const SF_REFERENCE: [(f64, f64); 8] = [
        (1.0, 0.158_655_253_931_457_05),
        (3.0, 1.349_898_031_630_094_5e-3),
        (5.45, 2.518_491_005_446_114_5e-8),
        (8.12, 2.330_918_404_818_305_8e-16),
        (10.0, 7.619_853_024_160_526e-24),
        (20.0, 2.753_624_118_606_233_7e-89),
        (30.0, 4.906_713_927_148_187e-198),
        (37.0, 5.725_571_222_524_577e-300),
    ];

    #[test]
    fn pdf_closed_form_and_symmetry() {
        assert_eq!(norm_pdf(0.0).unwrap(), 0.398_942_280_401_432_7);
        let far = norm_pdf(8.12).unwrap();
        assert!(far > 0.0 && far < 1e-14);
        assert!(rel(far, 1.920_600_431_144_551_2e-15) < 1e-13);
        assert_eq!(pdf(1.7), pdf(-1.7));
    }

    #[test]
    fn non_finite_inputs_are_domain_errors() {
        assert!(matches!(norm_pdf(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(norm_cdf(f64::INFINITY), Err(Error::Domain(_))));
        assert!(matches!(norm_sf(f64::NEG_INFINITY), Err(Error::Domain(_))));
        assert!(matches!(norm_quantile(0.0), Err(Error::Domain(_))));
        assert!(matches!(norm_quantile(1.0), Err(Error::Domain(_))));
        assert!(matches!(norm_quantile(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn cdf_median_and_reflection() {
        assert_eq!(norm_cdf(0.0).unwrap(), 0.5);
        for i in -400..=400 {
            let x = i as f64 * 0.1;
            assert!((cdf(x) + cdf(-x) - 1.0).abs() <= 1e-15, "x = {x}");
        }
    }

    #[test]
    fn survival_matches_extended_precision_reference() {
        for (x, expected) in SF_REFERENCE {
            let got = sf(x);
            assert!(rel(got, expected) < 1e-12, "sf({x}) = {got:e}, expected {expected:e}");
            assert!(rel(log_sf(x), expected.ln()) < 1e-14, "log_sf({x})");
        }
        // two-sided genome-wide threshold
        assert!((2.0 * sf(5.45) - 5.04e-8).abs() < 1e-9);
    }

    #[test]
    fn log_sf_is_finite_far_beyond_underflow() {
        // sf(40) ~ 3.6e-350 underflows in f64; the log stays exact.
        let l = log_sf(40.0);
        assert!(l.is_finite());
        assert!((l - (-804.608_442_013_754_3)).abs() < 1e-9, "{l}");
        assert!(log_sf(-50.0) == 0.0);
        assert!((log_sf(-3.0) - (-1.349_898_031_630_094_5e-3_f64).ln_1p()).abs() < 1e-16);
    }

    #[test]
    fn mills_ratio_branches_agree() {
        for x in [8.0, 9.5, 12.0, 20.0] {
            let direct = sf(x) / pdf(x);
            assert!(rel(mills_ratio_cf(x), direct) < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn cdf_is_monotone_on_dense_grid() {
        // Strict monotonicity in the upper half is carried by the survival
        // function, which keeps full relative precision there. Beyond
        // |x| ~ 37.5 the tail mass is below the smallest normal f64.
        let mut prev_cdf = cdf(-40.0);
        let mut prev_sf = sf(-40.0);
        for i in 1..=80_000 {
            let x = -40.0 + i as f64 * 1e-3;
            let c = cdf(x);
            let s = sf(x);
            assert!(c >= prev_cdf, "cdf not monotone at {x}");
            assert!(s <= prev_sf, "sf not monotone at {x}");
            if x > -37.0 && x < 0.0 {
                assert!(c > prev_cdf, "cdf not strictly increasing at {x}");
            } else if (0.0..37.0).contains(&x) {
                assert!(s < prev_sf, "sf not strictly decreasing at {x}");
            }
            prev_cdf = c;
            prev_sf = s;
        }
    }

    #[test]
    fn quantile_reference_points() {
        assert_eq!(norm_quantile(0.5).unwrap(), 0.0);
        let gws = norm_quantile(1.0 - 5e-8 / 2.0).unwrap();
        assert!((gws - 5.451_310_437_845_478_5).abs() < 1e-8, "{gws}");
        assert!((gws - 5.45).abs() < 0.005);
        let liberal = norm_quantile(1.0 - 5e-5 / 2.0).unwrap();
        assert!((liberal - 4.055_626_981_122_401).abs() < 1e-10, "{liberal}");
        assert!((liberal - 4.06).abs() < 0.005);
        // the tail inverse keeps full precision where 1 - q would not
        assert!(rel(isf(2.5e-8), 5.451_310_437_845_478_5) < 1e-14);
        assert!(rel(isf(1e-300), 37.047_096_299_361_2) < 1e-12);
    }

    #[test]
    fn quantile_round_trip() {
        let mut p = 1e-10;
        while p < 1.0 - 1e-10 {
            for q in [p, 1.0 - p] {
                let x = quantile(q);
                assert!((cdf(x) - q).abs() <= 1e-12, "p = {q}");
            }
            p *= 1.37;
        }
    }

    #[test]
    fn mills_ratio_diff_reference_points() {
        for c in [0.0, 0.3, 2.0, 8.12, 25.0, 60.0] {
            assert_eq!(mills_ratio_diff(c, -c).unwrap(), 0.0);
        }
        let t = tail_ratios(8.12, -8.12);
        assert!(rel(t.mass(), 4.661_836_809_636_611_7e-16) < 1e-12);
        let v = mills_ratio_diff(0.0, -16.24).unwrap();
        assert!((v - 0.797_884_560_802_865_4).abs() < 1e-14);
        let cases = [
            ((3.0, -1.0), -1.484_570_172_852_965_8),
            ((10.0, 2.0), -0.055_247_862_678_989_96),
            ((-2.0, -30.0), 0.055_247_862_678_989_96),
        ];
        for ((a, b), expected) in cases {
            let got = mills_ratio_diff(a, b).unwrap();
            assert!(rel(got, expected) < 1e-12, "({a}, {b}) -> {got}");
        }
        // both boundaries in the far upper tail: the mass underflows, the
        // ratio is ~ -2.1e-331 and must come out finite
        let deep = mills_ratio_diff(40.0, 39.0).unwrap();
        assert!(deep.is_finite() && deep <= 0.0 && deep > -1e-300);
        assert!(matches!(mills_ratio_diff(-1.0, 1.0), Err(Error::Contract(_))));
    }

    proptest! {
        #[test]
        fn mills_ratio_diff_matches_naive_formula(
            b in -12.0f64..12.0,
            width in 0.0f64..14.0,
        ) {
            let a = b + width;
            let denom = sf(a) + cdf(b);
            prop_assume!(denom >= 1e-6);
            let naive = (pdf(a) - pdf(b)) / denom;
            let stable = mills_ratio_diff(a, b).unwrap();
            prop_assert!((stable - naive).abs() <= 1e-10 * (1.0 + naive.abs()));
        }

        #[test]
        fn mills_ratio_diff_is_finite_everywhere(
            b in -1e3f64..1e3,
            width in 0.0f64..1e3,
        ) {
            let v = mills_ratio_diff(b + width, b).unwrap();
            prop_assert!(v.is_finite());
        }
    }
}
