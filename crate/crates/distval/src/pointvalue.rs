//! Point-value evaluators: single-sequence limits, scaling limits over a
//! test-function basis, family-relative values with adversarial probing,
//! symmetric and radial variants, jump fits, angular profiles, and
//! orthogonal-invariance checks.

use serde::{Deserialize, Serialize};

use crate::accel;
use crate::distribution::{even_part, translate_scale, Distribution};
use crate::expr::{Env, Expr, Var};
use crate::mollifier::{
    affine_bump, canonical_bump, mixture, radial_bump, sample_family, DeltaSequenceSpec, Family,
    FamilySampler, Support, TestFunction,
};
use crate::pairing::{pair, PairOptions, PairResult};
use crate::par;
use crate::quad;

#[derive(Debug, Clone, Copy)]
pub struct LimitOptions {
    /// Absolute tolerance of the tail-convergence criterion.
    pub tol: f64,
    /// Tail window length.
    pub tail_m: usize,
    pub pair: PairOptions,
}

impl Default for LimitOptions {
    fn default() -> LimitOptions {
        LimitOptions { tol: 1e-4, tail_m: 8, pair: PairOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Converged { gamma: f64, err: f64 },
    Diverged { exponent: f64 },
    /// The limit depends on the probe; samples carry (probe index, value).
    NonConstantProfile { samples: Vec<(f64, f64)> },
    Inconclusive,
}

impl Verdict {
    pub fn gamma(&self) -> Option<f64> {
        match self {
            Verdict::Converged { gamma, .. } => Some(*gamma),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitVerdict {
    pub verdict: Verdict,
    /// (n or ε, pairing value) series behind the verdict.
    pub raw: Vec<(f64, f64)>,
}

/// Classifies a series indexed by a growing parameter (n, or 1/ε): settled
/// tail, power-law growth, or neither.
fn classify(raw: Vec<(f64, f64)>, grow: Vec<f64>, bad: usize, o: &LimitOptions) -> LimitVerdict {
    let ys: Vec<f64> = raw.iter().map(|&(_, v)| v).collect();
    let eps: Vec<f64> = grow.iter().map(|g| 1.0 / g).collect();
    let p = eps_limit(&eps, &ys, bad, o);
    let verdict = if let Some(gamma) = p.gamma {
        Verdict::Converged { gamma, err: p.err }
    } else if let Some(exponent) = p.exponent {
        Verdict::Diverged { exponent }
    } else {
        Verdict::Inconclusive
    };
    LimitVerdict { verdict, raw }
}

/// lim_{n→∞} ⟨f(x₀+·), φ_n⟩ along one delta sequence.
pub fn sequence_limit(
    f: &Distribution,
    x0: [f64; 2],
    seq: &DeltaSequenceSpec,
    n_max: usize,
    o: &LimitOptions,
) -> LimitVerdict {
    assert!(n_max >= 16, "need at least 16 members for the tail criterion");
    let n_max = n_max.min(seq.len());
    let shifted = translate_scale(f, x0, 1.0).expect("unit scale");
    let results = par::map_ordered(n_max, |i| pair(&shifted, &seq.member(i + 1), &o.pair));
    let bad = results.iter().filter(|r| r.inaccurate || r.divergent).count();
    let raw: Vec<(f64, f64)> =
        results.iter().enumerate().map(|(i, r)| ((i + 1) as f64, r.value)).collect();
    let grow: Vec<f64> = raw.iter().map(|&(n, _)| n).collect();
    classify(raw, grow, bad, o)
}

pub fn default_eps_grid() -> Vec<f64> {
    (0..=20).map(|j| 2f64.powi(-j)).collect()
}

/// Shallower grid for planar probes: past ε ≈ 2⁻¹⁰ the 2-d pairings stop
/// certifying their tolerance and would only add discarded cells.
pub fn default_radial_eps_grid() -> Vec<f64> {
    (0..=10).map(|j| 2f64.powi(-j)).collect()
}

/// Twelve-member probe basis: six one-sided bumps, three mixtures, three
/// even functions. Spans left/right mass so jump fits are well conditioned.
pub fn default_basis() -> Vec<TestFunction> {
    let b = |c: f64| affine_bump(c, 0.19).expect("positive radius");
    vec![
        b(0.2),
        b(-0.2),
        b(0.5),
        b(-0.5),
        b(0.8),
        b(-0.8),
        mixture(&[(0.5, b(-0.2)), (0.5, b(0.5))]).expect("unit weights"),
        mixture(&[(0.3, b(-0.5)), (0.7, b(0.2))]).expect("unit weights"),
        mixture(&[(0.6, b(0.8)), (0.4, b(-0.8))]).expect("unit weights"),
        canonical_bump(1),
        affine_bump(0.0, 0.5).expect("positive radius"),
        mixture(&[(0.5, b(-0.4)), (0.5, b(0.4))]).expect("unit weights"),
    ]
}

pub fn default_radial_basis() -> Vec<TestFunction> {
    let r = |radius: f64| radial_bump(radius).expect("positive radius");
    vec![r(1.0), r(0.5), mixture(&[(0.5, r(0.8)), (0.5, r(0.3))]).expect("unit weights")]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiLimit {
    pub gamma: Option<f64>,
    pub err: f64,
    pub exponent: Option<f64>,
    pub raw: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingOutcome {
    pub verdict: LimitVerdict,
    pub per_phi: Vec<PhiLimit>,
}

/// Estimates the ε → 0 limit of a series sampled on a decreasing geometric
/// grid: tail criterion first, then a Richardson refinement that is kept
/// only when it agrees with the plain tail estimate.
pub(crate) fn eps_limit(
    eps: &[f64],
    ys: &[f64],
    bad: usize,
    o: &LimitOptions,
) -> PhiLimit {
    let raw: Vec<(f64, f64)> = eps.iter().copied().zip(ys.iter().copied()).collect();
    if bad * 5 > ys.len() {
        return PhiLimit { gamma: None, err: f64::NAN, exponent: None, raw };
    }
    // accelerate over a sliding window first: a drift that is polynomial in
    // ε is removed exactly, while a settled series passes through unchanged
    const WINDOW: usize = 6;
    if ys.len() > WINDOW + 1 {
        let acc: Vec<f64> = (WINDOW - 1..ys.len())
            .map(|j| {
                accel::neville_at_zero(&eps[j + 1 - WINDOW..=j], &ys[j + 1 - WINDOW..=j])
            })
            .collect();
        if acc.iter().all(|v| v.is_finite()) {
            if let Some((gamma, err)) = accel::tail_converged(&acc, o.tail_m.min(acc.len()), o.tol)
            {
                return PhiLimit { gamma: Some(gamma), err, exponent: None, raw };
            }
        }
    }
    if let Some((gamma, err)) = accel::tail_converged(ys, o.tail_m, o.tol) {
        return PhiLimit { gamma: Some(gamma), err, exponent: None, raw };
    }
    let grow: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
    if let Some((slope, r2)) = accel::growth_exponent(&grow, ys) {
        if slope > 0.5 && r2 > 0.9 {
            return PhiLimit { gamma: None, err: f64::NAN, exponent: Some(slope), raw };
        }
    }
    PhiLimit { gamma: None, err: f64::NAN, exponent: None, raw }
}

fn assemble_scaling(per_phi: Vec<PhiLimit>, grid: &[f64], o: &LimitOptions) -> ScalingOutcome {
    let mean_raw: Vec<(f64, f64)> = grid
        .iter()
        .enumerate()
        .map(|(j, &e)| {
            let s: f64 = per_phi.iter().map(|p| p.raw[j].1).sum();
            (e, s / per_phi.len() as f64)
        })
        .collect();
    let gammas: Vec<f64> = per_phi.iter().filter_map(|p| p.gamma).collect();
    let exponents: Vec<f64> = per_phi.iter().filter_map(|p| p.exponent).collect();
    let verdict = if gammas.len() == per_phi.len() {
        let lo = gammas.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let errs = per_phi.iter().map(|p| p.err).fold(0.0, f64::max);
        if hi - lo <= o.tol.max(4.0 * errs) {
            let gamma = gammas.iter().sum::<f64>() / gammas.len() as f64;
            Verdict::Converged { gamma, err: (hi - lo).max(errs) }
        } else {
            Verdict::NonConstantProfile {
                samples: gammas.iter().enumerate().map(|(i, &g)| (i as f64, g)).collect(),
            }
        }
    } else if !exponents.is_empty() && gammas.len() + exponents.len() == per_phi.len() {
        // one diverging probe already rules out a point value, even if
        // probes that vanish at the mass settle
        Verdict::Diverged {
            exponent: exponents.iter().sum::<f64>() / exponents.len() as f64,
        }
    } else {
        Verdict::Inconclusive
    };
    ScalingOutcome { verdict: LimitVerdict { verdict, raw: mean_raw }, per_phi }
}

/// Scaling point value: per basis member φ, lim_{ε→0} ⟨f(x₀+εx), φ⟩/∫φ over
/// the ε grid; the verdict is Converged only when all per-φ limits agree.
pub fn lojasiewicz_value(
    f: &Distribution,
    x0: [f64; 2],
    basis: &[TestFunction],
    eps_grid: &[f64],
    o: &LimitOptions,
) -> ScalingOutcome {
    assert!(!basis.is_empty(), "basis must be nonempty");
    assert!(
        eps_grid.windows(2).all(|w| w[1] < w[0]) && *eps_grid.last().unwrap() > 0.0,
        "eps grid must decrease to 0"
    );
    let masses: Vec<f64> = basis.iter().map(|p| p.integral(1e-10).value).collect();
    let cells = par::map_ordered(basis.len() * eps_grid.len(), |k| {
        let (pi, ej) = (k / eps_grid.len(), k % eps_grid.len());
        let zoom = translate_scale(f, x0, eps_grid[ej]).expect("positive eps");
        pair(&zoom, &basis[pi], &o.pair)
    });
    let per_phi: Vec<PhiLimit> = basis
        .iter()
        .enumerate()
        .map(|(pi, _)| {
            let row: Vec<&PairResult> =
                (0..eps_grid.len()).map(|j| &cells[pi * eps_grid.len() + j]).collect();
            let ys: Vec<f64> = row.iter().map(|r| r.value / masses[pi]).collect();
            let bad = row.iter().filter(|r| r.inaccurate || r.divergent).count();
            eps_limit(eps_grid, &ys, bad, o)
        })
        .collect();
    assemble_scaling(per_phi, eps_grid, o)
}

/// Scaling value of the even part, probed with even basis members only.
pub fn symmetric_value(
    f: &Distribution,
    x0: [f64; 2],
    basis: &[TestFunction],
    eps_grid: &[f64],
    o: &LimitOptions,
) -> ScalingOutcome {
    assert_eq!(f.ambient_dim(), 1, "symmetric values are one-dimensional");
    let centered = translate_scale(f, x0, 1.0).expect("unit scale");
    let even = even_part(&centered).expect("one-dimensional");
    let even_basis: Vec<TestFunction> =
        basis.iter().filter(|p| p.is_even()).cloned().collect();
    assert!(!even_basis.is_empty(), "basis has no even members");
    lojasiewicz_value(&even, [0.0; 2], &even_basis, eps_grid, o)
}

/// d = 2 point value probed with radial test functions.
pub fn radial_value(
    f: &Distribution,
    x0: [f64; 2],
    basis: &[TestFunction],
    eps_grid: &[f64],
    o: &LimitOptions,
) -> ScalingOutcome {
    assert!(basis.iter().all(|p| p.radial), "radial probes required");
    lojasiewicz_value(f, x0, basis, eps_grid, o)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpFit {
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    pub residual: f64,
}

fn half_masses(phi: &TestFunction) -> (f64, f64) {
    let (lo, hi) = phi.interval();
    let g = |x: f64| phi.eval1(x);
    let left = if lo < 0.0 { quad::adaptive(&g, lo, hi.min(0.0), 1e-11, 40).value } else { 0.0 };
    let right = if hi > 0.0 { quad::adaptive(&g, lo.max(0.0), hi, 1e-11, 40).value } else { 0.0 };
    (left, right)
}

/// Least-squares fit of per-φ limits against γ₋∫_{−∞}^0 φ + γ₊∫_0^∞ φ.
/// Limits enter normalized, so the masses are taken relative to ∫φ.
pub fn jump_fit(
    f: &Distribution,
    x0: [f64; 2],
    basis: &[TestFunction],
    eps_grid: &[f64],
    o: &LimitOptions,
) -> Option<JumpFit> {
    let outcome = lojasiewicz_value(f, x0, basis, eps_grid, o);
    let mut rows = Vec::new();
    for (phi, lim) in basis.iter().zip(&outcome.per_phi) {
        let gamma = lim.gamma?;
        let (l, r) = half_masses(phi);
        let total = l + r;
        rows.push((l / total, r / total, gamma));
    }
    regress_jump(&rows)
}

fn regress_jump(rows: &[(f64, f64, f64)]) -> Option<JumpFit> {
    let (mut sll, mut slr, mut srr, mut slg, mut srg) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(l, r, g) in rows {
        sll += l * l;
        slr += l * r;
        srr += r * r;
        slg += l * g;
        srg += r * g;
    }
    let det = sll * srr - slr * slr;
    if det.abs() < 1e-12 * (sll * srr).max(1e-300) {
        return None;
    }
    let gm = (srr * slg - slr * srg) / det;
    let gp = (sll * srg - slr * slg) / det;
    let ss: f64 = rows.iter().map(|&(l, r, g)| (g - gm * l - gp * r).powi(2)).sum();
    Some(JumpFit {
        gamma_minus: gm,
        gamma_plus: gp,
        residual: (ss / rows.len() as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyOutcome {
    pub per_sequence: Vec<LimitVerdict>,
    pub aggregate: Verdict,
    /// One-sided-limit fit across sampled sequences (family of arbitrary
    /// positive bases, d = 1 only).
    pub jump: Option<JumpFit>,
    /// Centers chasing the worst deviation from the candidate value.
    pub adversarial: Option<LimitVerdict>,
}

/// Point value relative to a sampled family of delta sequences.
pub fn family_value(
    f: &Distribution,
    x0: [f64; 2],
    sampler: &FamilySampler,
    samples: usize,
    n_max: usize,
    o: &LimitOptions,
) -> FamilyOutcome {
    assert!(samples >= 1);
    let seqs = sample_family(sampler, samples);
    let per_sequence: Vec<LimitVerdict> =
        seqs.iter().map(|s| sequence_limit(f, x0, s, n_max, o)).collect();
    let gammas: Vec<f64> = per_sequence.iter().filter_map(|v| v.verdict.gamma()).collect();
    let candidate = if gammas.is_empty() {
        0.0
    } else {
        gammas.iter().sum::<f64>() / gammas.len() as f64
    };

    let jump = if sampler.family == Family::F && f.ambient_dim() == 1 {
        let mut rows = Vec::new();
        for (seq, v) in seqs.iter().zip(&per_sequence) {
            if let (DeltaSequenceSpec::Standard { base, .. }, Some(g)) = (seq, v.verdict.gamma()) {
                let (l, r) = half_masses(base);
                let total = l + r;
                rows.push((l / total, r / total, g));
            }
        }
        if rows.len() >= 3 { regress_jump(&rows) } else { None }
    } else {
        None
    };

    let adversarial = if sampler.family == Family::FAll {
        adversarial_sequence(f, x0, candidate, n_max)
            .map(|seq| sequence_limit(f, x0, &seq, n_max, o))
    } else {
        None
    };

    let mut all = per_sequence.clone();
    if let Some(a) = &adversarial {
        all.push(a.clone());
    }
    let aggregate = aggregate_verdicts(&all, o);
    FamilyOutcome { per_sequence, aggregate, jump, adversarial }
}

fn aggregate_verdicts(verdicts: &[LimitVerdict], o: &LimitOptions) -> Verdict {
    if verdicts.iter().any(|v| v.verdict == Verdict::Inconclusive) {
        return Verdict::Inconclusive;
    }
    let gammas: Vec<f64> = verdicts.iter().filter_map(|v| v.verdict.gamma()).collect();
    if gammas.len() == verdicts.len() {
        let lo = gammas.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = gammas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= 4.0 * o.tol {
            return Verdict::Converged {
                gamma: gammas.iter().sum::<f64>() / gammas.len() as f64,
                err: hi - lo,
            };
        }
        return Verdict::NonConstantProfile {
            samples: gammas.iter().enumerate().map(|(i, &g)| (i as f64, g)).collect(),
        };
    }
    let exps: Vec<f64> = verdicts
        .iter()
        .filter_map(|v| match v.verdict {
            Verdict::Diverged { exponent } => Some(exponent),
            _ => None,
        })
        .collect();
    if exps.len() == verdicts.len() {
        return Verdict::Diverged { exponent: exps.iter().sum::<f64>() / exps.len() as f64 };
    }
    Verdict::NonConstantProfile {
        samples: verdicts
            .iter()
            .enumerate()
            .map(|(i, v)| (i as f64, v.verdict.gamma().unwrap_or(f64::NAN)))
            .collect(),
    }
}

/// Builds a shifted sequence whose centers chase, on a radius-1/n grid, the
/// largest deviation of the regular part from the candidate value. Windows
/// shrink fast enough that each pairing sees the sampled value.
fn adversarial_sequence(
    f: &Distribution,
    x0: [f64; 2],
    gamma: f64,
    len: usize,
) -> Option<DeltaSequenceSpec> {
    if f.ambient_dim() != 1 {
        return None;
    }
    let g = translate_scale(f, x0, 1.0).ok()?.resolve_affine();
    let mut members = Vec::with_capacity(len);
    for n in 1..=len {
        let r = 1.0 / n as f64;
        let mut best = (0.0, -1.0);
        for i in 1..=64 {
            for sgn in [-1.0, 1.0] {
                let c = sgn * r * i as f64 / 64.0;
                let v = g.regular.eval(&Env::x(c)).ok()?;
                if v.is_finite() && (v - gamma).abs() > best.1 {
                    best = (c, (v - gamma).abs());
                }
            }
        }
        if best.1 < 0.0 {
            return None;
        }
        let c = best.0;
        let radius = (c.abs() * 0.5).min(0.02 * c * c).max(1e-12);
        members.push(affine_bump(c, radius).ok()?);
    }
    Some(DeltaSequenceSpec::Explicit { members })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngleSample {
    /// In [0, 2π).
    pub theta: f64,
    pub alpha: Option<f64>,
    pub err: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngularProfile {
    pub samples: Vec<AngleSample>,
}

/// Thick-limit profile: α(θ) = lim_{ε→0} ∫ f(x₀+rε·w(θ)) ρ(r) dr / ∫ρ, with
/// ρ ≥ 0 supported in (0, ∞) and normalized against plain dr. The ratio form
/// makes the estimate independent of that normalization convention.
pub fn angular_profile(
    f: &Distribution,
    x0: [f64; 2],
    angles: &[f64],
    rho: &TestFunction,
    eps_grid: &[f64],
    o: &LimitOptions,
) -> AngularProfile {
    assert_eq!(f.ambient_dim(), 2, "angular profiles are two-dimensional");
    assert_eq!(rho.dim, 1);
    let (rlo, rhi) = rho.interval();
    assert!(rlo >= 0.0 && rho.grid_min() >= 0.0, "rho must be positive on (0, inf)");
    let rho_mass = rho.integral(1e-10).value;
    let g = translate_scale(f, x0, 1.0).expect("unit scale").resolve_affine();
    let samples = par::map_ordered(angles.len(), |ai| {
        let theta = angles[ai].rem_euclid(2.0 * std::f64::consts::PI);
        let (c, s) = (theta.cos(), theta.sin());
        let mut ys = Vec::with_capacity(eps_grid.len());
        let mut bad = 0;
        for &eps in eps_grid {
            let ray = |r: f64| {
                let v = g
                    .regular
                    .eval(&Env::xy(eps * r * c, eps * r * s))
                    .expect("regular part in x, y");
                if v.is_finite() {
                    v * rho.eval1(r)
                } else {
                    f64::NAN
                }
            };
            let q = quad::adaptive(&ray, rlo, rhi, o.pair.tol, o.pair.max_depth);
            if q.inaccurate {
                bad += 1;
            }
            ys.push(q.value / rho_mass);
        }
        let lim = eps_limit(eps_grid, &ys, bad, o);
        AngleSample { theta, alpha: lim.gamma, err: lim.err }
    });
    AngularProfile { samples }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotationCheck {
    pub angle: f64,
    pub gamma: Option<f64>,
    /// |γ_T − γ_identity|; NaN when either limit is missing.
    pub deviation: f64,
}

fn rotate_testfn(phi: &TestFunction, angle: f64) -> TestFunction {
    match phi.dim {
        1 => {
            // only the identity and the reflection exist in d = 1
            if angle.rem_euclid(2.0 * std::f64::consts::PI) < 1e-9 {
                return phi.clone();
            }
            let (lo, hi) = phi.interval();
            TestFunction {
                dim: 1,
                body: phi.body.substitute(Var::X, &Expr::var(Var::X).neg()),
                support: Support::Interval { lo: -hi, hi: -lo },
                radial: phi.radial,
                normalization: phi.normalization,
                norm_err: phi.norm_err,
            }
        }
        _ => {
            // φ(T⁻¹x) with T the rotation by `angle`
            let (c, s) = (angle.cos(), angle.sin());
            let fx = Expr::var(Var::X).scale(c).add(Expr::var(Var::Y).scale(s));
            let fy = Expr::var(Var::X).scale(-s).add(Expr::var(Var::Y).scale(c));
            TestFunction {
                dim: 2,
                body: phi.body.substitute_xy(&fx, &fy),
                support: phi.support,
                radial: phi.radial,
                normalization: phi.normalization,
                norm_err: phi.norm_err,
            }
        }
    }
}

/// Re-evaluates a sequence limit after rotating every member of the
/// sequence. In d = 1 the angle 0 means the identity and any other angle the
/// reflection x ↦ −x.
pub fn orthogonal_invariance_check(
    f: &Distribution,
    x0: [f64; 2],
    seq: &DeltaSequenceSpec,
    rotations: &[f64],
    n_max: usize,
    o: &LimitOptions,
) -> Vec<RotationCheck> {
    let base = sequence_limit(f, x0, seq, n_max, o);
    let gamma_id = base.verdict.gamma();
    rotations
        .iter()
        .map(|&angle| {
            let members: Vec<TestFunction> =
                (1..=seq.len().min(n_max)).map(|n| rotate_testfn(&seq.member(n), angle)).collect();
            let rotated = DeltaSequenceSpec::Explicit { members };
            let v = sequence_limit(f, x0, &rotated, n_max, o);
            let gamma = v.verdict.gamma();
            let deviation = match (gamma, gamma_id) {
                (Some(a), Some(b)) => (a - b).abs(),
                _ => f64::NAN,
            };
            RotationCheck { angle, gamma, deviation }
        })
        .collect()
}
