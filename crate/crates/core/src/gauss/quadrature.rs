//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances and domain of a one-dimensional integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub lower: f64,
    pub upper: f64,
}

impl QuadratureSpec {
    pub const DEFAULT_ABS_TOL: f64 = 1e-12;
    pub const DEFAULT_REL_TOL: f64 = 1e-10;
    pub const DEFAULT_MAX_SUBDIVISIONS: usize = 2000;
    /// Truncation point for integrals against the standard normal density.
    /// The discarded mass beyond |y| = 12 is 2 * (1 - Phi(12)) < 4e-33.
    pub const NORMAL_TRUNCATION: f64 = 12.0;

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        Self {
            abs_tol: Self::DEFAULT_ABS_TOL,
            rel_tol: Self::DEFAULT_REL_TOL,
            max_subdivisions: Self::DEFAULT_MAX_SUBDIVISIONS,
            lower,
            upper,
        }
        .validated()
    }

    /// `[-12, 12]` with default tolerances.
    pub fn normal_domain() -> Self {
        Self::new(-Self::NORMAL_TRUNCATION, Self::NORMAL_TRUNCATION).expect("static domain is valid")
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Result<Self> {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self.validated()
    }

    pub fn with_max_subdivisions(mut self, max_subdivisions: usize) -> Result<Self> {
        self.max_subdivisions = max_subdivisions;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::Domain(format!("abs_tol must be positive, got {}", self.abs_tol)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::Domain(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::Domain("max_subdivisions must be at least 1".into()));
        }
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(Error::Domain(format!(
                "integration domain must be a finite interval with lower < upper, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

// Kronrod abscissae and weights (QUADPACK qk15); odd indices are the Gauss
// 7-point nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lower: f64,
    upper: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lower.total_cmp(&self.lower))
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, lower: f64, upper: f64) -> Segment {
    let center = 0.5 * (lower + upper);
    let half = 0.5 * (upper - lower);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Segment {
        lower,
        upper,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `spec`'s domain, stopping once the summed error
/// estimate is at most `max(abs_tol, rel_tol * |result|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64> {
    integrate_with_estimate(f, spec).map(|i| i.value)
}

pub fn integrate_with_estimate<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<Integral> {
    let spec = spec.validated()?;
    let mut heap = BinaryHeap::new();
    heap.push(kronrod15(&f, spec.lower, spec.upper));
    let mut subdivisions = 0;
    loop {
        let (value, error) = totals(&heap);
        if !value.is_finite() {
            return Err(Error::Domain("integrand is not finite on the domain".into()));
        }
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            return Ok(Integral {
                value,
                error_estimate: error,
                subdivisions,
            });
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Convergence {
                value,
                error_estimate: error,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lower + worst.upper);
        heap.push(kronrod15(&f, worst.lower, mid));
        heap.push(kronrod15(&f, mid, worst.upper));
        subdivisions += 1;
    }
}

/// Sums segment values left to right so the result does not depend on heap
/// layout.
fn totals(heap: &BinaryHeap<Segment>) -> (f64, f64) {
    let mut segments: Vec<&Segment> = heap.iter().collect();
    segments.sort_by(|a, b| a.lower.total_cmp(&b.lower));
    let value = crate::numeric::neumaier_sum(segments.iter().map(|s| s.value));
    let error = segments.iter().map(|s| s.error).sum();
    (value, error)
}
