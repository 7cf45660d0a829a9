//! L∞ diagnostics through positive unit-mass probes: a distribution given
//! by a bounded function keeps all its pairings inside [essinf, esssup], and
//! concentrated probes approach those bounds. The ladder below evaluates
//! pairings against bumps on refining center grids and shrinking scales,
//! greedily following the extremes.

use serde::{Deserialize, Serialize};

use crate::distribution::{translate_scale, Distribution};
use crate::mollifier::{affine_bump, radial_bump};
use crate::pairing::{pair, PairOptions};
use crate::par;

/// Bounded open probe region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum Region {
    Interval { lo: f64, hi: f64 },
    Box { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl Region {
    pub fn dim(&self) -> u8 {
        match self {
            Region::Interval { .. } => 1,
            Region::Box { .. } => 2,
        }
    }

    fn validate(&self) {
        match *self {
            Region::Interval { lo, hi } => assert!(lo < hi, "empty interval"),
            Region::Box { x0, x1, y0, y1 } => assert!(x0 < x1 && y0 < y1, "empty box"),
        }
    }

    fn min_width(&self) -> f64 {
        match *self {
            Region::Interval { lo, hi } => hi - lo,
            Region::Box { x0, x1, y0, y1 } => (x1 - x0).min(y1 - y0),
        }
    }

    /// Distance from an interior point to the boundary (≤ 0 outside).
    fn margin(&self, c: [f64; 2]) -> f64 {
        match *self {
            Region::Interval { lo, hi } => (c[0] - lo).min(hi - c[0]),
            Region::Box { x0, x1, y0, y1 } => {
                (c[0] - x0).min(x1 - c[0]).min(c[1] - y0).min(y1 - c[1])
            }
        }
    }
}

/// One evaluated probe: unit-mass bump of the given radius at the center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub center: [f64; 2],
    pub radius: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundVerdict {
    /// Largest |pairing| seen; a certificate only up to probe resolution,
    /// never a proof of boundedness.
    BoundedWitness { bound: f64 },
    /// A concrete probe whose pairing escaped the running bound.
    UnboundedWitness { probe: ProbeRow },
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub verdict: BoundVerdict,
    pub probes_used: usize,
    /// Strongest probes seen, largest |pairing| first.
    pub table: Vec<ProbeRow>,
}

/// Essential extremum estimate; infinities flag growth of signed pairings
/// along shrinking scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Extremum {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

impl Extremum {
    pub fn finite(self) -> Option<f64> {
        match self {
            Extremum::Finite(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremaReport {
    pub esssup: Extremum,
    pub essinf: Extremum,
    pub probes_used: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinfEstimate {
    /// Certified lower bound on the essential sup of |f|; converges to it
    /// as the budget grows.
    pub value: f64,
    /// False when the budget ran out before the scale ladder settled.
    pub stabilized: bool,
    pub probes_used: usize,
}

/// Default number of halving rounds in the scale ladder.
pub const DEFAULT_DEPTH: usize = 16;
const BLOWUP: f64 = 1e9;

/// Pairing of f against a unit bump at `center` with the given radius,
/// clipped to stay inside the region. None when the probe cannot fit or
/// the pairing fails.
pub fn probe_value(
    f: &Distribution,
    u: &Region,
    center: [f64; 2],
    radius: f64,
    o: &PairOptions,
) -> Option<f64> {
    let r = radius.min(0.9 * u.margin(center));
    if !(r > 1e-12) {
        return None;
    }
    let phi = if u.dim() == 1 { affine_bump(0.0, r) } else { radial_bump(r) }.ok()?;
    let shifted = translate_scale(f, center, 1.0).ok()?;
    let res = pair(&shifted, &phi, o);
    if res.divergent || !res.value.is_finite() {
        return None;
    }
    Some(res.value)
}

struct Ladder {
    /// Rows grouped by scale round.
    scales: Vec<Vec<ProbeRow>>,
    used: usize,
    /// The final round ran out of budget midway; its extremes are not
    /// comparable to the completed rounds.
    partial_last: bool,
}

fn initial_centers(u: &Region) -> Vec<[f64; 2]> {
    match *u {
        Region::Interval { lo, hi } => {
            let n = 33;
            (1..n)
                .map(|i| [lo + (hi - lo) * i as f64 / n as f64, 0.0])
                .collect()
        }
        Region::Box { x0, x1, y0, y1 } => {
            let n = 8;
            let mut out = Vec::new();
            for i in 1..n {
                for j in 1..n {
                    out.push([
                        x0 + (x1 - x0) * i as f64 / n as f64,
                        y0 + (y1 - y0) * j as f64 / n as f64,
                    ]);
                }
            }
            out
        }
    }
}

fn children(u: &Region, parents: &[[f64; 2]], r: f64) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::new();
    let offsets: &[f64] = &[-2.0, -1.0, 0.0, 1.0, 2.0];
    for &c in parents {
        match u {
            Region::Interval { .. } => {
                for &dx in offsets {
                    out.push([c[0] + dx * r, c[1]]);
                }
            }
            Region::Box { .. } => {
                for &dx in &[-1.0, 0.0, 1.0] {
                    for &dy in &[-1.0, 0.0, 1.0] {
                        out.push([c[0] + dx * r, c[1] + dy * r]);
                    }
                }
            }
        }
    }
    out.retain(|&c| u.margin(c) > 0.0);
    out.dedup_by(|a, b| a == b);
    out
}

/// Runs the greedy probe ladder: a coarse center grid at the widest scale,
/// then rounds that halve the radius and re-seed around the current signed
/// extremes. Deterministic, and a larger budget extends (never reorders)
/// the probe sequence.
fn run_ladder(f: &Distribution, u: &Region, budget: usize, depth: usize, o: &PairOptions) -> Ladder {
    u.validate();
    assert_eq!(f.ambient_dim(), u.dim(), "region dimension mismatch");
    let r0 = u.min_width() / 4.0;
    let mut ladder = Ladder { scales: Vec::new(), used: 0, partial_last: false };
    let mut centers = initial_centers(u);
    for j in 0..depth.max(1) {
        let r = r0 * 2f64.powi(-(j as i32));
        if ladder.used >= budget {
            break;
        }
        if centers.len() > budget - ladder.used {
            centers.truncate(budget - ladder.used);
            ladder.partial_last = true;
        }
        let vals = par::map_ordered(centers.len(), |i| probe_value(f, u, centers[i], r, o));
        ladder.used += centers.len();
        let rows: Vec<ProbeRow> = centers
            .iter()
            .zip(&vals)
            .filter_map(|(&center, v)| v.map(|value| ProbeRow { center, radius: r, value }))
            .collect();
        if rows.is_empty() {
            break;
        }
        // follow both signed extremes so sup and inf refine together
        let mut by_value = rows.clone();
        by_value.sort_by(|a, b| a.value.total_cmp(&b.value));
        let take = if u.dim() == 1 { 4 } else { 2 };
        let mut parents: Vec<[f64; 2]> = Vec::new();
        for row in by_value.iter().take(take).chain(by_value.iter().rev().take(take)) {
            if !parents.contains(&row.center) {
                parents.push(row.center);
            }
        }
        let escaped = rows.iter().any(|row| row.value.abs() > BLOWUP);
        ladder.scales.push(rows);
        if escaped {
            break;
        }
        centers = children(u, &parents, r / 2.0);
    }
    ladder
}

impl Ladder {
    fn all_rows(&self) -> impl Iterator<Item = &ProbeRow> {
        self.scales.iter().flatten()
    }

    /// Per-round statistic over the completed rounds only.
    fn per_scale(&self, pick: impl Fn(&[ProbeRow]) -> f64) -> Vec<f64> {
        let n = self.scales.len() - usize::from(self.partial_last && self.scales.len() > 1);
        self.scales[..n].iter().map(|rows| pick(rows)).collect()
    }
}

/// True when the last few per-scale extremes kept advancing by a
/// non-shrinking margin: pairings of a bounded function settle, pairings of
/// an unbounded one keep gaining at every finer scale.
fn growing(series: &[f64]) -> bool {
    const LOOKBACK: usize = 3;
    if series.len() < LOOKBACK + 1 {
        return false;
    }
    let last = *series.last().unwrap();
    let thresh = (0.02 * last.abs()).max(0.05);
    series[series.len() - LOOKBACK - 1..]
        .windows(2)
        .all(|w| w[1] - w[0] > thresh)
}

/// Searches for escape to infinity of |⟨f, φ⟩| over the probe ladder.
pub fn boundedness_probe(
    f: &Distribution,
    u: &Region,
    budget: usize,
    depth: usize,
    o: &PairOptions,
) -> BoundednessReport {
    let ladder = run_ladder(f, u, budget, depth, o);
    let mut table: Vec<ProbeRow> = ladder.all_rows().copied().collect();
    table.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()));
    table.truncate(16);
    let absmax = ladder.per_scale(|rows| {
        rows.iter().map(|r| r.value.abs()).fold(f64::NEG_INFINITY, f64::max)
    });
    let verdict = if absmax.last().is_some_and(|m| *m > BLOWUP) || growing(&absmax) {
        BoundVerdict::UnboundedWitness { probe: table[0] }
    } else if absmax.len() >= 4 {
        BoundVerdict::BoundedWitness { bound: table.first().map_or(0.0, |r| r.value.abs()) }
    } else {
        BoundVerdict::Inconclusive
    };
    BoundednessReport { verdict, probes_used: ladder.used, table }
}

/// Certified lower bound on ‖f‖_{L∞(U)}: the largest |pairing| over the
/// ladder. Nondecreasing in the budget.
pub fn linf_norm_estimate(
    f: &Distribution,
    u: &Region,
    budget: usize,
    depth: usize,
    o: &PairOptions,
) -> LinfEstimate {
    let ladder = run_ladder(f, u, budget, depth, o);
    let absmax = ladder.per_scale(|rows| {
        rows.iter().map(|r| r.value.abs()).fold(f64::NEG_INFINITY, f64::max)
    });
    let value = absmax.iter().copied().fold(0.0, f64::max);
    let stabilized = absmax.len() >= 6
        && absmax[absmax.len() - 2..]
            .iter()
            .all(|m| value - m <= 1e-2 * value.abs().max(1.0));
    LinfEstimate { value, stabilized, probes_used: ladder.used }
}

/// Essential sup and inf via signed pairings over the same ladder; growth
/// of a signed extreme along shrinking scales signals ±∞.
pub fn esssup_essinf(
    f: &Distribution,
    u: &Region,
    budget: usize,
    depth: usize,
    o: &PairOptions,
) -> ExtremaReport {
    let ladder = run_ladder(f, u, budget, depth, o);
    let maxs = ladder
        .per_scale(|rows| rows.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max));
    let mins =
        ladder.per_scale(|rows| rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min));
    let neg_mins: Vec<f64> = mins.iter().map(|m| -m).collect();
    let sup_raw = maxs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf_raw = mins.iter().copied().fold(f64::INFINITY, f64::min);
    let esssup = if sup_raw > BLOWUP || growing(&maxs) {
        Extremum::PlusInfinity
    } else {
        Extremum::Finite(sup_raw)
    };
    let essinf = if -inf_raw > BLOWUP || growing(&neg_mins) {
        Extremum::MinusInfinity
    } else {
        Extremum::Finite(inf_raw)
    };
    ExtremaReport { esssup, essinf, probes_used: ladder.used }
}
