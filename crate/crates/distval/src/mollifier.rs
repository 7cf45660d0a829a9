//! Positive normalized test functions and delta-sequence generators for the
//! four probe families: all standard sequences, even ones, radial ones (2-d),
//! and arbitrary positive sequences with shrinking supports.

use crate::expr::{Env, Expr, Var};
use crate::quad::{self, QuadOutcome};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MollifierError {
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("negative mixture weight {0}")]
    NegativeWeight(f64),
    #[error("mixture weights sum to {0}, expected 1")]
    WeightsNotNormalized(f64),
    #[error("mixture of empty list")]
    EmptyMixture,
    #[error("mixture members have different dimensions")]
    DimensionMismatch,
    #[error("scale schedule not positive and finite at n = {0}")]
    BadScale(usize),
    #[error("scale schedule not increasing at n = {0}")]
    ScaleNotIncreasing(usize),
    #[error("normalization defect {0:e} exceeds 1e-9")]
    NormalizationDefect(f64),
}

/// Where a test function is allowed to be nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Support {
    Interval { lo: f64, hi: f64 },
    Ball { radius: f64 },
}

impl Support {
    pub fn contains_origin(&self) -> bool {
        match *self {
            Support::Interval { lo, hi } => lo < 0.0 && hi > 0.0,
            Support::Ball { radius } => radius > 0.0,
        }
    }

    /// Hull of two supports of the same shape.
    fn hull(self, other: Support) -> Support {
        match (self, other) {
            (Support::Interval { lo: a, hi: b }, Support::Interval { lo: c, hi: d }) => {
                Support::Interval { lo: a.min(c), hi: b.max(d) }
            }
            (Support::Ball { radius: a }, Support::Ball { radius: b }) => {
                Support::Ball { radius: a.max(b) }
            }
            _ => unreachable!("mixture dimension check precedes hull"),
        }
    }
}

/// A positive test function with certified unit mass. `body` is an expression
/// in x (dim 1) or in x and y (dim 2); it vanishes outside `support`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub dim: u8,
    pub body: Expr,
    pub support: Support,
    /// True when the body depends on x² + y² only; lets 2-d integrals reduce
    /// to a radial profile.
    pub radial: bool,
    /// Certified value of the integral of `body` after scaling.
    pub normalization: f64,
    /// Quadrature error bound on `normalization`.
    pub norm_err: f64,
}

const NORM_TOL: f64 = 1e-12;
const NORM_DEFECT_MAX: f64 = 1e-9;

impl TestFunction {
    pub fn eval1(&self, x: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.body.eval(&Env::x(x)).expect("1-d test function body uses x only")
    }

    pub fn eval2(&self, x: f64, y: f64) -> f64 {
        debug_assert_eq!(self.dim, 2);
        self.body.eval(&Env::xy(x, y)).expect("2-d test function body uses x, y only")
    }

    pub fn interval(&self) -> (f64, f64) {
        match self.support {
            Support::Interval { lo, hi } => (lo, hi),
            Support::Ball { radius } => (-radius, radius),
        }
    }

    /// Integral of the body over its support.
    pub fn integral(&self, tol: f64) -> QuadOutcome {
        match (self.dim, self.radial) {
            (1, _) => {
                let (lo, hi) = self.interval();
                quad::adaptive(&|x| self.eval1(x), lo, hi, tol, 48)
            }
            (2, true) => {
                let radius = match self.support {
                    Support::Ball { radius } => radius,
                    Support::Interval { .. } => unreachable!("2-d support is a ball"),
                };
                // 2π ∫ r·profile(r) dr
                let mut out = quad::adaptive(
                    &|r| r * self.eval2(r, 0.0),
                    0.0,
                    radius,
                    tol / (2.0 * std::f64::consts::PI),
                    48,
                );
                out.value *= 2.0 * std::f64::consts::PI;
                out.err *= 2.0 * std::f64::consts::PI;
                out
            }
            (2, false) => {
                let radius = match self.support {
                    Support::Ball { radius } => radius,
                    Support::Interval { .. } => unreachable!("2-d support is a ball"),
                };
                let body = &self.body;
                let edges = |x: f64| {
                    let s2 = radius * radius - x * x;
                    if s2 <= 0.0 {
                        vec![]
                    } else {
                        vec![-s2.sqrt(), s2.sqrt()]
                    }
                };
                quad::adaptive_2d(
                    &|x, y| body.eval(&Env::xy(x, y)).unwrap_or(f64::NAN),
                    (-radius, radius),
                    (-radius, radius),
                    &[0.0],
                    edges,
                    tol,
                )
            }
            _ => unreachable!("dim is 1 or 2"),
        }
    }

    /// Rescales so the certified integral is 1 and records the defect.
    fn normalized(mut self) -> Result<TestFunction, MollifierError> {
        let total = self.integral(NORM_TOL);
        if !(total.value.is_finite() && total.value > 0.0) {
            return Err(MollifierError::NormalizationDefect(f64::INFINITY));
        }
        self.body = self.body.scale(1.0 / total.value);
        self.normalization = 1.0;
        self.norm_err = total.err / total.value;
        if self.norm_err > NORM_DEFECT_MAX {
            return Err(MollifierError::NormalizationDefect(self.norm_err));
        }
        Ok(self)
    }

    /// Minimum of the body over a 1000-point support grid; a certified member
    /// never goes below -1e-12.
    pub fn grid_min(&self) -> f64 {
        const GRID: usize = 1000;
        let mut min = f64::INFINITY;
        match self.dim {
            1 => {
                let (lo, hi) = self.interval();
                for i in 0..=GRID {
                    let x = lo + (hi - lo) * i as f64 / GRID as f64;
                    min = min.min(self.eval1(x));
                }
            }
            _ => {
                let radius = match self.support {
                    Support::Ball { radius } => radius,
                    Support::Interval { .. } => unreachable!("2-d support is a ball"),
                };
                let side = 32;
                for i in 0..=side {
                    for j in 0..=side {
                        let x = -radius + 2.0 * radius * i as f64 / side as f64;
                        let y = -radius + 2.0 * radius * j as f64 / side as f64;
                        min = min.min(self.eval2(x, y));
                    }
                }
            }
        }
        min
    }

    /// Even on a symmetric grid (dim 1): body(x) = body(-x).
    pub fn is_even(&self) -> bool {
        let (lo, hi) = self.interval();
        let reach = hi.abs().max(lo.abs());
        (0..=500).all(|i| {
            let x = reach * i as f64 / 500.0;
            let d = (self.eval1(x) - self.eval1(-x)).abs();
            d <= 1e-10 * (1.0 + self.eval1(x).abs())
        })
    }
}

/// The bump exp(-1/(1-|x|²)) scaled to unit mass; support is the unit ball.
pub fn canonical_bump(d: u8) -> TestFunction {
    assert!(d == 1 || d == 2, "dimension must be 1 or 2");
    let (body, radial) = match d {
        1 => (Expr::var(Var::X).bump(), false),
        _ => {
            let r2 = Expr::var(Var::X)
                .mul(Expr::var(Var::X))
                .add(Expr::var(Var::Y).mul(Expr::var(Var::Y)));
            (r2.sqrt().bump(), true)
        }
    };
    let support = match d {
        1 => Support::Interval { lo: -1.0, hi: 1.0 },
        _ => Support::Ball { radius: 1.0 },
    };
    TestFunction { dim: d, body, support, radial, normalization: 0.0, norm_err: 0.0 }
        .normalized()
        .expect("canonical bump normalizes")
}

/// Unit-mass bump concentrated on (center-radius, center+radius).
pub fn affine_bump(center: f64, radius: f64) -> Result<TestFunction, MollifierError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(MollifierError::BadRadius(radius));
    }
    let canonical = canonical_bump(1);
    let arg = Expr::var(Var::X).sub(Expr::constant(center)).div(Expr::constant(radius));
    let body = canonical.body.substitute(Var::X, &arg).scale(1.0 / radius);
    TestFunction {
        dim: 1,
        body,
        support: Support::Interval { lo: center - radius, hi: center + radius },
        radial: false,
        normalization: 0.0,
        norm_err: 0.0,
    }
    .normalized()
}

/// Unit-mass radial bump on the ball of the given radius (dim 2).
pub fn radial_bump(radius: f64) -> Result<TestFunction, MollifierError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(MollifierError::BadRadius(radius));
    }
    let canonical = canonical_bump(2);
    let sx = Expr::var(Var::X).div(Expr::constant(radius));
    let sy = Expr::var(Var::Y).div(Expr::constant(radius));
    let body = canonical.body.substitute_xy(&sx, &sy).scale(1.0 / (radius * radius));
    TestFunction {
        dim: 2,
        body,
        support: Support::Ball { radius },
        radial: true,
        normalization: 0.0,
        norm_err: 0.0,
    }
    .normalized()
}

/// Convex combination of test functions of one dimension.
pub fn mixture(parts: &[(f64, TestFunction)]) -> Result<TestFunction, MollifierError> {
    let (first_w, first) = parts.first().ok_or(MollifierError::EmptyMixture)?;
    let mut wsum = 0.0;
    for (w, tf) in parts {
        if *w < 0.0 {
            return Err(MollifierError::NegativeWeight(*w));
        }
        if tf.dim != first.dim {
            return Err(MollifierError::DimensionMismatch);
        }
        wsum += w;
    }
    if (wsum - 1.0).abs() > 1e-9 {
        return Err(MollifierError::WeightsNotNormalized(wsum));
    }
    let mut body = first.body.clone().scale(*first_w);
    let mut support = first.support;
    let mut radial = first.radial;
    for (w, tf) in &parts[1..] {
        body = body.add(tf.body.clone().scale(*w));
        support = support.hull(tf.support);
        radial &= tf.radial;
    }
    TestFunction {
        dim: first.dim,
        body,
        support,
        radial,
        normalization: 0.0,
        norm_err: 0.0,
    }
    .normalized()
}

/// Recipe for a sequence of test functions concentrating at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DeltaSequenceSpec {
    /// φ_n(x) = ξ(n)^d · base(ξ(n)x) with ξ positive, increasing, unbounded.
    Standard { base: TestFunction, xi: Expr, len: usize },
    /// φ_n = unit bump on (c_n - r_n, c_n + r_n); radii are clamped to
    /// min(1/n, |c_n|/2) so supports shrink and, when the centers vanish,
    /// collapse onto the origin.
    Shifted {
        centers: Expr,
        radii: Expr,
        len: usize,
        /// False when the center schedule does not tend to 0; such a spec is
        /// not a delta sequence and exists for negative tests.
        centers_vanish: bool,
    },
    Explicit { members: Vec<TestFunction> },
}

/// Builds a standard sequence after validating the scale schedule on 1..=N.
pub fn standard_sequence(
    base: TestFunction,
    xi: Expr,
    len: usize,
) -> Result<DeltaSequenceSpec, MollifierError> {
    let mut prev = 0.0;
    for n in 1..=len {
        let v = xi.eval(&Env::n(n as f64)).map_err(|_| MollifierError::BadScale(n))?;
        if !(v.is_finite() && v > 0.0) {
            return Err(MollifierError::BadScale(n));
        }
        if v <= prev {
            return Err(MollifierError::ScaleNotIncreasing(n));
        }
        prev = v;
    }
    Ok(DeltaSequenceSpec::Standard { base, xi, len })
}

/// Builds a shifted-bump sequence; flags center schedules that fail to decay.
pub fn shifted_sequence(centers: Expr, radii: Expr, len: usize) -> DeltaSequenceSpec {
    let c = |n: usize| centers.eval(&Env::n(n as f64)).unwrap_or(f64::NAN).abs();
    let head: f64 = (1..=len.min(5)).map(c).fold(0.0, f64::max);
    let tail: f64 = (len.saturating_sub(4).max(1)..=len).map(c).fold(0.0, f64::max);
    let centers_vanish = tail <= 0.25 * head.max(1e-300) || tail < 1e-9;
    DeltaSequenceSpec::Shifted { centers, radii, len, centers_vanish }
}

impl DeltaSequenceSpec {
    pub fn len(&self) -> usize {
        match self {
            DeltaSequenceSpec::Standard { len, .. } => *len,
            DeltaSequenceSpec::Shifted { len, .. } => *len,
            DeltaSequenceSpec::Explicit { members } => members.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Materializes the n-th member (1-based).
    pub fn member(&self, n: usize) -> TestFunction {
        assert!(n >= 1 && n <= self.len(), "member index out of range");
        match self {
            DeltaSequenceSpec::Standard { base, xi, .. } => {
                let s = xi.eval(&Env::n(n as f64)).expect("validated schedule");
                let d = base.dim;
                let (body, support) = match d {
                    1 => {
                        let arg = Expr::var(Var::X).scale(s);
                        let (lo, hi) = base.interval();
                        (
                            base.body.substitute(Var::X, &arg).scale(s),
                            Support::Interval { lo: lo / s, hi: hi / s },
                        )
                    }
                    _ => {
                        let sx = Expr::var(Var::X).scale(s);
                        let sy = Expr::var(Var::Y).scale(s);
                        let radius = match base.support {
                            Support::Ball { radius } => radius,
                            Support::Interval { .. } => unreachable!("2-d support is a ball"),
                        };
                        (
                            base.body.substitute_xy(&sx, &sy).scale(s * s),
                            Support::Ball { radius: radius / s },
                        )
                    }
                };
                TestFunction {
                    dim: d,
                    body,
                    support,
                    radial: base.radial,
                    normalization: base.normalization,
                    norm_err: base.norm_err,
                }
            }
            DeltaSequenceSpec::Shifted { centers, radii, .. } => {
                let c = centers.eval(&Env::n(n as f64)).expect("center schedule in n");
                let r = radii.eval(&Env::n(n as f64)).expect("radius schedule in n");
                let r = self.clamped_radius(c, r, n);
                affine_bump(c, r).expect("clamped radius is positive")
            }
            DeltaSequenceSpec::Explicit { members } => members[n - 1].clone(),
        }
    }

    fn clamped_radius(&self, center: f64, radius: f64, n: usize) -> f64 {
        let mut cap = 1.0 / n as f64;
        if center != 0.0 {
            cap = cap.min(center.abs() / 2.0);
        }
        radius.min(cap).max(1e-300)
    }

    /// Radius of the smallest origin-centered ball containing supp φ_n.
    pub fn support_radius(&self, n: usize) -> f64 {
        let m = self.member(n);
        match m.support {
            Support::Interval { lo, hi } => lo.abs().max(hi.abs()),
            Support::Ball { radius } => radius,
        }
    }
}

/// Probe families over which point values are required to agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// Standard sequences from arbitrary positive normalized bases.
    F,
    /// Standard sequences from even bases.
    #[serde(rename = "F_sy")]
    FSy,
    /// Standard sequences from radial bases (dim 2).
    #[serde(rename = "F_rad")]
    FRad,
    /// Arbitrary positive normalized sequences with shrinking supports.
    #[serde(rename = "F_all")]
    FAll,
}

/// Deterministic generator of family members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySampler {
    pub family: Family,
    pub seed: u64,
    /// At most this many bumps per mixture (≤ 5).
    pub mixture_cap: usize,
    /// Length of each emitted sequence.
    pub len: usize,
}

impl FamilySampler {
    pub fn new(family: Family, seed: u64) -> FamilySampler {
        FamilySampler { family, seed, mixture_cap: 5, len: 100 }
    }
}

/// Draws `count` sequence specs; identical (sampler, count) always produces
/// identical specs.
pub fn sample_family(s: &FamilySampler, count: usize) -> Vec<DeltaSequenceSpec> {
    assert!(count >= 1, "count must be positive");
    let cap = s.mixture_cap.clamp(1, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(match s.family {
            Family::F => standard_from_mixture(&mut rng, cap, s.len, false),
            Family::FSy => standard_from_mixture(&mut rng, cap, s.len, true),
            Family::FRad => standard_radial(&mut rng, cap, s.len),
            Family::FAll => shrinking_support_draw(&mut rng, s.len),
        });
    }
    out
}

fn standard_from_mixture(
    rng: &mut ChaCha8Rng,
    cap: usize,
    len: usize,
    symmetrize: bool,
) -> DeltaSequenceSpec {
    let m = rng.gen_range(1..=cap);
    let mut parts = Vec::new();
    let mut weights = Vec::new();
    for _ in 0..m {
        let center = rng.gen_range(-0.6..0.6);
        let radius = rng.gen_range(0.15..0.6);
        weights.push(rng.gen_range(0.2..1.0));
        parts.push((center, radius));
    }
    let wsum: f64 = weights.iter().sum();
    let mut mix = Vec::new();
    for ((center, radius), w) in parts.into_iter().zip(weights) {
        let w = w / wsum;
        if symmetrize {
            // average with the reflection to force evenness
            mix.push((0.5 * w, affine_bump(center, radius).expect("positive radius")));
            mix.push((0.5 * w, affine_bump(-center, radius).expect("positive radius")));
        } else {
            mix.push((w, affine_bump(center, radius).expect("positive radius")));
        }
    }
    let base = mixture(&mix).expect("convex combination of certified bumps");
    standard_sequence(base, Expr::var(Var::N), len).expect("xi = n is valid")
}

fn standard_radial(rng: &mut ChaCha8Rng, cap: usize, len: usize) -> DeltaSequenceSpec {
    let m = rng.gen_range(1..=cap);
    let mut mix = Vec::new();
    let mut weights = Vec::new();
    for _ in 0..m {
        let radius = rng.gen_range(0.2..1.0);
        weights.push(rng.gen_range(0.2..1.0));
        mix.push(radial_bump(radius).expect("positive radius"));
    }
    let wsum: f64 = weights.iter().sum();
    let mix: Vec<(f64, TestFunction)> =
        weights.into_iter().map(|w| w / wsum).zip(mix).map(|(w, tf)| (w, tf)).collect();
    let base = mixture(&mix).expect("convex combination of certified bumps");
    standard_sequence(base, Expr::var(Var::N), len).expect("xi = n is valid")
}

fn shrinking_support_draw(rng: &mut ChaCha8Rng, len: usize) -> DeltaSequenceSpec {
    // alternate between drifting centers c/n^p and origin-centered collapse
    if rng.gen_bool(0.5) {
        let c = rng.gen_range(0.05..0.8) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let p = rng.gen_range(0.5..2.0);
        let q = rng.gen_range(1.0..2.5);
        let centers = Expr::constant(c).mul(Expr::var(Var::N).pow(Expr::constant(-p)));
        let radii = Expr::var(Var::N).pow(Expr::constant(-q));
        shifted_sequence(centers, radii, len)
    } else {
        let q = rng.gen_range(1.0..2.0);
        let radii = Expr::var(Var::N).pow(Expr::constant(-q));
        shifted_sequence(Expr::constant(0.0), radii, len)
    }
}

/// L¹ mass of each member on B \ U; both intervals must contain the origin.
/// A genuine delta sequence sends this to 0.
pub fn tail_mass(seq: &DeltaSequenceSpec, b: (f64, f64), u: (f64, f64)) -> Vec<f64> {
    assert!(b.0 < 0.0 && b.1 > 0.0, "B must contain the origin");
    assert!(u.0 < 0.0 && u.1 > 0.0, "U must contain the origin");
    assert!(b.0 <= u.0 && u.1 <= b.1, "U must sit inside B");
    (1..=seq.len())
        .map(|n| {
            let m = seq.member(n);
            let (slo, shi) = m.interval();
            let mut acc = 0.0;
            for (lo, hi) in [(b.0, u.0), (u.1, b.1)] {
                let lo = lo.max(slo);
                let hi = hi.min(shi);
                if lo < hi {
                    acc += quad::adaptive(&|x| m.eval1(x), lo, hi, 1e-11, 48).value;
                }
            }
            acc
        })
        .collect()
}
