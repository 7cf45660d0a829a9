//! Distributions as regular expressions plus delta terms, with lazy affine
//! records f(x₀ + εx), parity decomposition, and radial reduction.

use crate::expr::{singularities, Env, Expr, SingularKind, Var};
use crate::mollifier::TestFunction;
use crate::quad;
use serde::{Deserialize, Serialize};

pub const MAX_DELTA_ORDER: u32 = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DistError {
    #[error("scale must be positive, got {0}")]
    BadScale(f64),
    #[error("delta derivative order {0} exceeds cap {MAX_DELTA_ORDER}")]
    OrderTooHigh(u32),
    #[error("delta coefficient not finite")]
    BadCoefficient,
    #[error("derivative deltas off the origin are 1-d only")]
    Bad2dDelta,
    #[error("regular part not locally integrable near {0}")]
    NotLocallyIntegrable(f64),
    #[error("pole at {0} too strong for principal-value handling")]
    PoleTooStrong(f64),
    #[error("operation requires dimension {0}")]
    WrongDim(u8),
}

/// coefficient · D^order δ(x − loc).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaTerm {
    pub loc: f64,
    pub order: u32,
    pub coef: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    One,
    Two,
    /// Radial profile in r, paired against the measure ω_d·r^{d-1} dr.
    Radial { d: u32 },
}

/// Regular part + delta terms, composed with an affine record: the value
/// represented is base(shift + scale·x). The affine record stays lazy so
/// repeated zoom steps compose exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub dim: Dim,
    pub regular: Expr,
    pub deltas: Vec<DeltaTerm>,
    pub shift: [f64; 2],
    pub scale: f64,
    /// Principal-value flag: simple poles of the regular part are paired by
    /// symmetric excision instead of being rejected.
    pub pv: bool,
}

impl Distribution {
    pub fn new_1d(regular: Expr, deltas: Vec<DeltaTerm>, pv: bool) -> Result<Distribution, DistError> {
        for t in &deltas {
            if t.order > MAX_DELTA_ORDER {
                return Err(DistError::OrderTooHigh(t.order));
            }
            if !t.coef.is_finite() {
                return Err(DistError::BadCoefficient);
            }
        }
        check_local_integrability(&regular, Var::X, pv)?;
        Ok(Distribution { dim: Dim::One, regular, deltas, shift: [0.0; 2], scale: 1.0, pv })
    }

    pub fn new_2d(regular: Expr, deltas: Vec<DeltaTerm>) -> Result<Distribution, DistError> {
        for t in &deltas {
            if t.order != 0 || t.loc != 0.0 {
                return Err(DistError::Bad2dDelta);
            }
            if !t.coef.is_finite() {
                return Err(DistError::BadCoefficient);
            }
        }
        Ok(Distribution { dim: Dim::Two, regular, deltas, shift: [0.0; 2], scale: 1.0, pv: false })
    }

    pub fn new_radial(d: u32, profile: Expr, deltas: Vec<DeltaTerm>) -> Result<Distribution, DistError> {
        assert!(d >= 1, "radial source dimension must be at least 1");
        for t in &deltas {
            if t.order != 0 || t.loc != 0.0 {
                return Err(DistError::Bad2dDelta);
            }
            if !t.coef.is_finite() {
                return Err(DistError::BadCoefficient);
            }
        }
        Ok(Distribution {
            dim: Dim::Radial { d },
            regular: profile,
            deltas,
            shift: [0.0; 2],
            scale: 1.0,
            pv: false,
        })
    }

    /// Dirac delta at the origin.
    pub fn delta(coef: f64) -> Distribution {
        Distribution {
            dim: Dim::One,
            regular: Expr::constant(0.0),
            deltas: vec![DeltaTerm { loc: 0.0, order: 0, coef }],
            shift: [0.0; 2],
            scale: 1.0,
            pv: false,
        }
    }

    pub fn ambient_dim(&self) -> u8 {
        match self.dim {
            Dim::One => 1,
            Dim::Two => 2,
            Dim::Radial { d } => d as u8,
        }
    }

    /// Resolves the affine record into the expressions and delta terms, so
    /// shift = 0 and scale = 1 afterwards. Pairings of the result agree with
    /// pairings of the lazy form.
    pub fn resolve_affine(&self) -> Distribution {
        if self.shift == [0.0; 2] && self.scale == 1.0 {
            return self.clone();
        }
        let (s, e) = (self.shift, self.scale);
        let d = self.ambient_dim() as i32;
        let regular = match self.dim {
            Dim::One => {
                let arg = Expr::constant(s[0]).add(Expr::var(Var::X).scale(e));
                self.regular.substitute(Var::X, &arg)
            }
            Dim::Two => {
                let ax = Expr::constant(s[0]).add(Expr::var(Var::X).scale(e));
                let ay = Expr::constant(s[1]).add(Expr::var(Var::Y).scale(e));
                self.regular.substitute_xy(&ax, &ay)
            }
            Dim::Radial { .. } => {
                // radial zooms keep the origin fixed
                assert_eq!(s[0], 0.0, "radial distributions shift only at the origin");
                let arg = Expr::var(Var::R).scale(e);
                self.regular.substitute(Var::R, &arg)
            }
        };
        // D^k δ(s + εx − a) = ε^{-d-k} · D^k δ(x − (a−s)/ε) up to pairing
        let deltas = self
            .deltas
            .iter()
            .map(|t| DeltaTerm {
                loc: (t.loc - s[0]) / e,
                order: t.order,
                coef: t.coef * e.powi(-d - t.order as i32),
            })
            .collect();
        Distribution {
            dim: self.dim,
            regular,
            deltas,
            shift: [0.0; 2],
            scale: 1.0,
            pv: self.pv,
        }
    }
}

/// f(x₀ + εx): composes onto the existing affine record.
pub fn translate_scale(f: &Distribution, x0: [f64; 2], eps: f64) -> Result<Distribution, DistError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(DistError::BadScale(eps));
    }
    let mut g = f.clone();
    g.shift = [f.shift[0] + f.scale * x0[0], f.shift[1] + f.scale * x0[1]];
    g.scale = f.scale * eps;
    Ok(g)
}

/// (f(x) + f(−x))/2; delta terms reflect with sign (−1)^order.
pub fn even_part(f: &Distribution) -> Result<Distribution, DistError> {
    parity_part(f, 1.0)
}

/// (f(x) − f(−x))/2.
pub fn odd_part(f: &Distribution) -> Result<Distribution, DistError> {
    parity_part(f, -1.0)
}

fn parity_part(f: &Distribution, sign: f64) -> Result<Distribution, DistError> {
    if f.dim != Dim::One {
        return Err(DistError::WrongDim(1));
    }
    let f = f.resolve_affine();
    let reflected = f.regular.substitute(Var::X, &Expr::var(Var::X).neg());
    let regular = f
        .regular
        .clone()
        .add(reflected.scale(sign))
        .scale(0.5);
    let mut deltas = Vec::with_capacity(2 * f.deltas.len());
    for t in &f.deltas {
        let refl_sign = sign * if t.order % 2 == 0 { 1.0 } else { -1.0 };
        deltas.push(DeltaTerm { loc: t.loc, order: t.order, coef: 0.5 * t.coef });
        deltas.push(DeltaTerm { loc: -t.loc, order: t.order, coef: 0.5 * t.coef * refl_sign });
    }
    Ok(Distribution { dim: Dim::One, regular, deltas, shift: [0.0; 2], scale: 1.0, pv: f.pv })
}

/// Angular mean of a 2-d test function, tabulated on a radial grid with
/// cubic interpolation between the nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialComponent {
    pub source_dim: u32,
    pub rmax: f64,
    vals: Vec<f64>,
}

impl RadialComponent {
    /// Even by construction: depends on |r| only.
    pub fn eval(&self, r: f64) -> f64 {
        let t = r.abs();
        if t >= self.rmax {
            return 0.0;
        }
        let m = self.vals.len() - 1;
        let pos = t / self.rmax * m as f64;
        let i = (pos.floor() as usize).min(m - 1);
        // 4-point Lagrange cubic on the uniform grid
        let i0 = i.saturating_sub(1).min(m - 3);
        let s = pos - i0 as f64;
        let v = &self.vals[i0..i0 + 4];
        let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
        let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
        let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
        let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
        v[0] * l0 + v[1] * l1 + v[2] * l2 + v[3] * l3
    }
}

/// Angular average (1/2π)∫ f(r cosθ, r sinθ) dθ by 64-point trapezoid,
/// tabulated on a refining radial grid until interpolation stabilizes.
pub fn radialize_fn<F: Fn(f64, f64) -> f64>(f: F, rmax: f64, source_dim: u32) -> RadialComponent {
    const ANGLES: usize = 64;
    let mean = |r: f64| {
        let mut acc = 0.0;
        for j in 0..ANGLES {
            let th = 2.0 * std::f64::consts::PI * j as f64 / ANGLES as f64;
            acc += f(r * th.cos(), r * th.sin());
        }
        acc / ANGLES as f64
    };
    let mut m = 128;
    let mut comp = RadialComponent {
        source_dim,
        rmax,
        vals: (0..=m).map(|i| mean(rmax * i as f64 / m as f64)).collect(),
    };
    while m < 4096 {
        let fine = 2 * m;
        let vals: Vec<f64> = (0..=fine).map(|i| mean(rmax * i as f64 / fine as f64)).collect();
        let worst = (0..=fine)
            .map(|i| (comp.eval(rmax * i as f64 / fine as f64) - vals[i]).abs())
            .fold(0.0, f64::max);
        comp = RadialComponent { source_dim, rmax, vals };
        m = fine;
        if worst < 1e-9 {
            break;
        }
    }
    comp
}

/// Radial component of a 2-d test function.
pub fn radialize_testfn(phi: &TestFunction) -> RadialComponent {
    assert_eq!(phi.dim, 2, "radialization takes 2-d test functions");
    let rmax = match phi.support {
        crate::mollifier::Support::Ball { radius } => radius,
        crate::mollifier::Support::Interval { .. } => unreachable!("2-d support is a ball"),
    };
    radialize_fn(|x, y| phi.eval2(x, y), rmax, 2)
}

/// 1-d integrand f₁(r)·r^{d−1} for pairing a radial distribution over
/// (0, ∞); the caller supplies the sphere-area factor ω_d.
pub fn radial_pullback(f: &Distribution) -> Result<Expr, DistError> {
    let d = match f.dim {
        Dim::Radial { d } => d,
        _ => return Err(DistError::WrongDim(2)),
    };
    let f = f.resolve_affine();
    let weight = match d {
        1 => Expr::constant(1.0),
        2 => Expr::var(Var::R),
        _ => Expr::var(Var::R).pow(Expr::constant((d - 1) as f64)),
    };
    Ok(f.regular.mul(weight))
}

/// Sphere surface area ω_d for d = 1, 2, 3.
pub fn sphere_area(d: u32) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        _ => panic!("sphere area implemented for d ≤ 3"),
    }
}

/// Checks that |f| is integrable near each of its poles on a probe interval
/// by watching dyadic annulus masses: they must decay for a plain
/// distribution and must not grow for a principal-value one.
fn check_local_integrability(regular: &Expr, var: Var, pv: bool) -> Result<(), DistError> {
    let probes = singularities(regular, var, -4.0, 4.0);
    for p in probes {
        if p.kind != SingularKind::Pole {
            continue;
        }
        let mut masses = Vec::new();
        for k in 3..18 {
            let h = 2f64.powi(-k);
            let mass = |lo: f64, hi: f64| {
                quad::adaptive(
                    &|x| {
                        // outside the domain (ln of a negative, say) there is
                        // no mass to integrate
                        let v = regular.eval(&Env::x(x)).unwrap_or(f64::NAN);
                        if v.is_finite() { v.abs() } else { 0.0 }
                    },
                    lo,
                    hi,
                    1e-9,
                    30,
                )
                .value
            };
            masses.push(mass(p.location + h, p.location + 2.0 * h) + mass(p.location - 2.0 * h, p.location - h));
        }
        let head: f64 = masses[..3].iter().copied().fold(0.0, f64::max);
        let tail: f64 = masses[masses.len() - 3..].iter().copied().fold(0.0, f64::max);
        let decays = tail <= 0.2 * head.max(1e-12) || tail < 1e-10;
        if decays {
            continue;
        }
        if !pv {
            return Err(DistError::NotLocallyIntegrable(p.location));
        }
        // principal value covers simple poles only: annulus masses stay
        // bounded for 1/x but double per level for 1/x²
        if tail > 4.0 * head {
            return Err(DistError::PoleTooStrong(p.location));
        }
    }
    Ok(())
}
