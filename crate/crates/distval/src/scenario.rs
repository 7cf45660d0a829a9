//! Scenario files: a JSON description of one distribution plus one task,
//! strict-validated (unknown fields rejected), and the dispatcher that runs
//! the task against the evaluators.

use serde::{Deserialize, Serialize};

use crate::boundedness::{
    boundedness_probe, esssup_essinf, linf_norm_estimate, BoundednessReport, ExtremaReport,
    LinfEstimate, Region,
};
use crate::distribution::{DeltaTerm, Distribution};
use crate::expr::{parse, Expr};
use crate::limitlab::{convergence_in_measure, scaling_probe, MeasureStat, ScalingProbeReport};
use crate::mollifier::{affine_bump, Family, FamilySampler};
use crate::pairing::{moments, MomentTable, PairOptions};
use crate::pointvalue::{
    angular_profile, default_basis, default_eps_grid, default_radial_basis,
    default_radial_eps_grid, family_value,
    jump_fit, lojasiewicz_value, radial_value, symmetric_value, AngularProfile, FamilyOutcome,
    JumpFit, LimitOptions, ScalingOutcome, Verdict,
};

/// Wire form of a distribution: dimension, regular-part grammar string,
/// delta terms, principal-value flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub dim: DimSpec,
    pub regular: String,
    #[serde(default)]
    pub deltas: Vec<DeltaTerm>,
    #[serde(default)]
    pub pv: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimSpec {
    Flat(u8),
    Radial { radial: u32 },
}

impl DistributionSpec {
    pub fn build(&self) -> Result<Distribution, String> {
        let regular =
            parse(&self.regular).map_err(|e| format!("distribution.regular: {e}"))?;
        let built = match self.dim {
            DimSpec::Flat(1) => Distribution::new_1d(regular, self.deltas.clone(), self.pv),
            DimSpec::Flat(2) => {
                if self.pv {
                    return Err("distribution.pv: principal values are one-dimensional".into());
                }
                Distribution::new_2d(regular, self.deltas.clone())
            }
            DimSpec::Flat(d) => {
                return Err(format!("distribution.dim: {d} is not supported (1, 2, or radial)"))
            }
            DimSpec::Radial { radial } => {
                if self.pv {
                    return Err("distribution.pv: principal values are one-dimensional".into());
                }
                Distribution::new_radial(radial, regular, self.deltas.clone())
            }
        };
        built.map_err(|e| format!("distribution: {e}"))
    }
}

const fn default_count() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    /// Scaling point value over the default probe basis and ε grid.
    PointValue {
        #[serde(default)]
        x0: [f64; 2],
    },
    /// Point value relative to a sampled delta-sequence family.
    FamilyProbe {
        #[serde(default)]
        x0: [f64; 2],
        family: Family,
        #[serde(default = "default_count")]
        count: usize,
    },
    SymValue {
        #[serde(default)]
        x0: [f64; 2],
    },
    RadialValue {
        #[serde(default)]
        x0: [f64; 2],
    },
    JumpFit {
        #[serde(default)]
        x0: [f64; 2],
    },
    AngularProfile {
        #[serde(default)]
        x0: [f64; 2],
        angles: Vec<f64>,
    },
    /// Classical scaling probe of the regular part along a sequence ξ(n).
    LimitProbe { xi: String, a_grid: Vec<f64> },
    /// Window exceedance ratios of the regular part.
    MeasureStat {
        l: f64,
        eps: f64,
        c: f64,
        x_grid: Vec<f64>,
        samples: usize,
    },
    /// Boundedness / L∞ / essential-extrema probes over a region.
    Linf {
        region: Region,
        budget: usize,
        #[serde(default = "crate::scenario::default_depth")]
        grid_depth: usize,
    },
    Moments { k_max: u32 },
}

pub(crate) const fn default_depth() -> usize {
    crate::boundedness::DEFAULT_DEPTH
}

const fn default_tol() -> f64 {
    1e-4
}

const fn default_n_max() -> usize {
    40
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub distribution: DistributionSpec,
    pub task: Task,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Tighter pairing tolerances, slower.
    #[serde(default)]
    pub oracle: bool,
}

/// Task-specific result carried by a report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    PointValue { outcome: ScalingOutcome },
    FamilyProbe { outcome: FamilyOutcome },
    SymValue { outcome: ScalingOutcome },
    RadialValue { outcome: ScalingOutcome },
    JumpFit { fit: Option<JumpFit> },
    AngularProfile { profile: AngularProfile },
    LimitProbe { report: ScalingProbeReport },
    MeasureStat { stat: MeasureStat, tau: f64, z: f64 },
    Linf {
        report: BoundednessReport,
        norm: LinfEstimate,
        extrema: ExtremaReport,
    },
    Moments { table: MomentTable },
}

impl Scenario {
    pub fn limit_options(&self) -> LimitOptions {
        let pair = if self.oracle { PairOptions::oracle() } else { PairOptions::default() };
        LimitOptions { tol: self.tol, tail_m: 8, pair }
    }
}

/// Runs a validated scenario. String errors here are user errors (bad
/// grammar, dimension mismatch, unsupported combination), not panics.
pub fn run_scenario(sc: &Scenario) -> Result<Outcome, String> {
    let o = sc.limit_options();
    let f = sc.distribution.build()?;
    let eps = if f.ambient_dim() == 1 { default_eps_grid() } else { default_radial_eps_grid() };
    match &sc.task {
        Task::PointValue { x0 } => {
            let basis = if f.ambient_dim() == 1 { default_basis() } else { default_radial_basis() };
            Ok(Outcome::PointValue { outcome: lojasiewicz_value(&f, *x0, &basis, &eps, &o) })
        }
        Task::FamilyProbe { x0, family, count } => {
            if *family == Family::FRad && f.ambient_dim() != 2 {
                return Err("task.family: F_rad needs a two-dimensional distribution".into());
            }
            let sampler = FamilySampler::new(*family, sc.seed);
            Ok(Outcome::FamilyProbe {
                outcome: family_value(&f, *x0, &sampler, *count, sc.n_max, &o),
            })
        }
        Task::SymValue { x0 } => {
            if f.ambient_dim() != 1 {
                return Err("task: sym-value needs a one-dimensional distribution".into());
            }
            Ok(Outcome::SymValue { outcome: symmetric_value(&f, *x0, &default_basis(), &eps, &o) })
        }
        Task::RadialValue { x0 } => {
            Ok(Outcome::RadialValue {
                outcome: radial_value(&f, *x0, &default_radial_basis(), &eps, &o),
            })
        }
        Task::JumpFit { x0 } => {
            if f.ambient_dim() != 1 {
                return Err("task: jump-fit needs a one-dimensional distribution".into());
            }
            Ok(Outcome::JumpFit { fit: jump_fit(&f, *x0, &default_basis(), &eps, &o) })
        }
        Task::AngularProfile { x0, angles } => {
            if angles.is_empty() {
                return Err("task.angles: need at least one angle".into());
            }
            let rho = affine_bump(0.5, 0.45).expect("static probe");
            let grid: Vec<f64> = (0..=12).map(|j| 2f64.powi(-j)).collect();
            Ok(Outcome::AngularProfile {
                profile: angular_profile(&f, *x0, angles, &rho, &grid, &o),
            })
        }
        Task::LimitProbe { xi, a_grid } => {
            let fx = scalar_function(sc)?;
            let xi = parse(xi).map_err(|e| format!("task.xi: {e}"))?;
            if a_grid.is_empty() {
                return Err("task.a_grid: need at least one starting point".into());
            }
            Ok(Outcome::LimitProbe { report: scaling_probe(&fx, &xi, a_grid, sc.n_max.max(16), &o) })
        }
        Task::MeasureStat { l, eps, c, x_grid, samples } => {
            let fx = scalar_function(sc)?;
            if !(*c > 1.0) {
                return Err("task.c: window factor must exceed 1".into());
            }
            if x_grid.len() < 3 {
                return Err("task.x_grid: need at least three windows for a trend".into());
            }
            let stat = convergence_in_measure(&fx, *l, *eps, *c, x_grid, *samples, sc.seed);
            let (tau, z) = stat.trend();
            Ok(Outcome::MeasureStat { stat, tau, z })
        }
        Task::Linf { region, budget, grid_depth } => {
            if region.dim() != f.ambient_dim() {
                return Err("task.region: dimension does not match the distribution".into());
            }
            Ok(Outcome::Linf {
                report: boundedness_probe(&f, region, *budget, *grid_depth, &o.pair),
                norm: linf_norm_estimate(&f, region, *budget, *grid_depth, &o.pair),
                extrema: esssup_essinf(&f, region, *budget, *grid_depth, &o.pair),
            })
        }
        Task::Moments { k_max } => {
            let table = moments(&f, *k_max, &o.pair).map_err(|e| format!("task: {e}"))?;
            Ok(Outcome::Moments { table })
        }
    }
}

/// The tasks that treat the distribution as a plain function need a 1-d
/// regular part and nothing else.
fn scalar_function(sc: &Scenario) -> Result<Expr, String> {
    if sc.distribution.dim != DimSpec::Flat(1)
        || !sc.distribution.deltas.is_empty()
        || sc.distribution.pv
    {
        return Err("task: this task reads the distribution as a plain 1-d function".into());
    }
    parse(&sc.distribution.regular).map_err(|e| format!("distribution.regular: {e}"))
}

/// Exit-code contract: 0 completed/converged, 2 inconclusive, 3 diverged
/// where a value was expected. (Code 1 is reserved for errors upstream.)
pub fn exit_code(outcome: &Outcome) -> i32 {
    fn of_verdict(v: &Verdict) -> i32 {
        match v {
            Verdict::Converged { .. } | Verdict::NonConstantProfile { .. } => 0,
            Verdict::Inconclusive => 2,
            Verdict::Diverged { .. } => 3,
        }
    }
    match outcome {
        Outcome::PointValue { outcome }
        | Outcome::SymValue { outcome }
        | Outcome::RadialValue { outcome } => of_verdict(&outcome.verdict.verdict),
        Outcome::FamilyProbe { outcome } => of_verdict(&outcome.aggregate),
        Outcome::JumpFit { fit } => {
            if fit.is_some() {
                0
            } else {
                2
            }
        }
        Outcome::LimitProbe { report } => {
            use crate::limitlab::Constancy;
            match report.constancy {
                Constancy::Constant { .. } | Constancy::NonConstant { .. } => 0,
                Constancy::Mixed => 2,
            }
        }
        Outcome::AngularProfile { profile } => {
            if profile.samples.iter().all(|s| s.alpha.is_some()) {
                0
            } else {
                2
            }
        }
        Outcome::Linf { report, .. } => {
            use crate::boundedness::BoundVerdict;
            match report.verdict {
                BoundVerdict::Inconclusive => 2,
                _ => 0,
            }
        }
        Outcome::MeasureStat { .. } | Outcome::Moments { .. } => 0,
    }
}

/// Plot-ready series behind the outcome: (parameter, value, error estimate)
/// rows, meaning depending on the task (ε, n, a, θ, x, or an index).
pub fn series(outcome: &Outcome) -> Vec<(f64, f64, f64)> {
    fn scaling_rows(outcome: &ScalingOutcome) -> Vec<(f64, f64, f64)> {
        let err = match outcome.verdict.verdict {
            Verdict::Converged { err, .. } => err,
            _ => f64::NAN,
        };
        outcome.verdict.raw.iter().map(|&(p, v)| (p, v, err)).collect()
    }
    match outcome {
        Outcome::PointValue { outcome }
        | Outcome::SymValue { outcome }
        | Outcome::RadialValue { outcome } => scaling_rows(outcome),
        Outcome::FamilyProbe { outcome } => outcome
            .per_sequence
            .iter()
            .enumerate()
            .map(|(i, v)| match v.verdict {
                Verdict::Converged { gamma, err } => (i as f64, gamma, err),
                _ => (i as f64, f64::NAN, f64::NAN),
            })
            .collect(),
        Outcome::JumpFit { fit } => match fit {
            Some(j) => vec![
                (0.0, j.gamma_minus, j.residual),
                (1.0, j.gamma_plus, j.residual),
            ],
            None => vec![],
        },
        Outcome::AngularProfile { profile } => profile
            .samples
            .iter()
            .map(|s| (s.theta, s.alpha.unwrap_or(f64::NAN), s.err))
            .collect(),
        Outcome::LimitProbe { report } => report
            .a_grid
            .iter()
            .zip(&report.per_a)
            .map(|(&a, v)| match v.verdict {
                Verdict::Converged { gamma, err } => (a, gamma, err),
                _ => (a, f64::NAN, f64::NAN),
            })
            .collect(),
        Outcome::MeasureStat { stat, .. } => stat
            .x_grid
            .iter()
            .zip(stat.ratios.iter().zip(&stat.errs))
            .map(|(&x, (&r, &e))| (x, r, e))
            .collect(),
        Outcome::Linf { report, .. } => {
            report.table.iter().map(|r| (r.radius, r.value, 0.0)).collect()
        }
        Outcome::Moments { table } => table
            .mu
            .iter()
            .zip(&table.err)
            .enumerate()
            .map(|(k, (&m, &e))| (k as f64, m, e))
            .collect(),
    }
}
