//! Structural singularity report: denominator zeros, ln/sqrt domain
//! boundaries, indicator endpoints, support edges of the bump core. The
//! list may over-report; quadrature only uses it to place split points.

use super::{BinaryOp, Env, Expr, UnaryOp, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularKind {
    Pole,
    EssentialOscillation,
    BoundaryOfSupport,
    Kink,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPoint {
    pub location: f64,
    pub kind: SingularKind,
}

/// Reports candidate singular points of `e` as a function of `var` on
/// (lo, hi). A `1/u` inside a sin/cos argument is flagged as an essential
/// oscillation rather than a pole.
pub fn singularities(e: &Expr, var: Var, lo: f64, hi: f64) -> Vec<SingularPoint> {
    assert!(lo < hi, "empty interval");
    let mut out = Vec::new();
    walk(e, var, lo, hi, false, &mut out);
    out.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());
    // collapse near-duplicates, keeping the "stronger" kind
    let mut dedup: Vec<SingularPoint> = Vec::new();
    let tol = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
    for p in out {
        match dedup.last_mut() {
            Some(q) if (q.location - p.location).abs() <= tol => {
                if rank(p.kind) > rank(q.kind) {
                    q.kind = p.kind;
                }
            }
            _ => dedup.push(p),
        }
    }
    dedup
}

fn rank(k: SingularKind) -> u8 {
    match k {
        SingularKind::Kink => 0,
        SingularKind::BoundaryOfSupport => 1,
        SingularKind::Pole => 2,
        SingularKind::EssentialOscillation => 3,
    }
}

fn walk(e: &Expr, var: Var, lo: f64, hi: f64, in_osc: bool, out: &mut Vec<SingularPoint>) {
    match e {
        Expr::Const(_) | Expr::Var(_) => {}
        Expr::Unary(op, a) => {
            let inner_osc = in_osc || matches!(op, UnaryOp::Sin | UnaryOp::Cos);
            match op {
                UnaryOp::Ln => {
                    push_roots(a, var, lo, hi, SingularKind::Pole, out);
                }
                UnaryOp::Sqrt | UnaryOp::Abs => {
                    push_roots(a, var, lo, hi, SingularKind::Kink, out);
                }
                _ => {}
            }
            walk(a, var, lo, hi, inner_osc, out);
        }
        Expr::Binary(op, a, b) => {
            if *op == BinaryOp::Div {
                let kind = if in_osc {
                    SingularKind::EssentialOscillation
                } else {
                    SingularKind::Pole
                };
                push_roots(b, var, lo, hi, kind, out);
            }
            if *op == BinaryOp::Pow {
                if let Expr::Const(c) = b.as_ref() {
                    if c.fract() != 0.0 {
                        push_roots(a, var, lo, hi, SingularKind::Kink, out);
                    } else if *c < 0.0 {
                        let kind = if in_osc {
                            SingularKind::EssentialOscillation
                        } else {
                            SingularKind::Pole
                        };
                        push_roots(a, var, lo, hi, kind, out);
                    }
                }
            }
            walk(a, var, lo, hi, in_osc, out);
            walk(b, var, lo, hi, in_osc, out);
        }
        Expr::Indicator { lo: a, hi: b, arg } => {
            if **arg == Expr::Var(var) {
                for &p in &[*a, *b] {
                    if p > lo && p < hi {
                        out.push(SingularPoint { location: p, kind: SingularKind::Kink });
                    }
                }
            } else if arg.contains_var(var) {
                // jumps where the argument crosses either endpoint
                let cross_lo = arg.as_ref().clone().sub(Expr::Const(*a));
                let cross_hi = arg.as_ref().clone().sub(Expr::Const(*b));
                push_roots(&cross_lo, var, lo, hi, SingularKind::Kink, out);
                push_roots(&cross_hi, var, lo, hi, SingularKind::Kink, out);
                walk(arg, var, lo, hi, in_osc, out);
            }
        }
        Expr::Piecewise(pieces) => {
            if var == Var::X {
                for (a, b, e) in pieces {
                    for &p in &[*a, *b] {
                        if p > lo && p < hi {
                            out.push(SingularPoint { location: p, kind: SingularKind::Kink });
                        }
                    }
                    walk(e, var, lo, hi, in_osc, out);
                }
            }
        }
        Expr::BumpCore(t) => {
            let shifted_up = t.as_ref().clone().sub(Expr::Const(1.0));
            let shifted_dn = t.as_ref().clone().add(Expr::Const(1.0));
            push_roots(&shifted_up, var, lo, hi, SingularKind::BoundaryOfSupport, out);
            push_roots(&shifted_dn, var, lo, hi, SingularKind::BoundaryOfSupport, out);
            walk(t, var, lo, hi, in_osc, out);
        }
    }
}

fn env_for(var: Var, v: f64) -> Env {
    match var {
        Var::X => Env::x(v),
        Var::Y => Env { y: Some(v), ..Env::default() },
        Var::R => Env::radial(v),
        Var::N => Env::n(v),
    }
}

/// Numeric roots of `g` on (lo, hi) by dense sampling plus bisection. Also
/// catches touch-zeros at grid points (e.g. x^2).
fn push_roots(g: &Expr, var: Var, lo: f64, hi: f64, kind: SingularKind, out: &mut Vec<SingularPoint>) {
    if !g.contains_var(var) {
        return;
    }
    const GRID: usize = 1024;
    let eval = |x: f64| g.eval(&env_for(var, x)).map(|v| v).unwrap_or(f64::NAN);
    let step = (hi - lo) / GRID as f64;
    // touch-zeros between grid points: local minima of |g| that are tiny
    let vals: Vec<f64> = (0..=GRID).map(|i| eval(lo + step * i as f64)).collect();
    for i in 1..GRID {
        let (a, b, c) = (vals[i - 1].abs(), vals[i].abs(), vals[i + 1].abs());
        if b < a && b < c && b > 0.0 && b < 1e-8 * (1.0 + a.max(c)) {
            out.push(SingularPoint { location: lo + step * i as f64, kind });
        }
    }
    let mut prev_x = lo;
    let mut prev_v = eval(lo);
    for i in 1..=GRID {
        let x = lo + step * i as f64;
        let v = eval(x);
        if v == 0.0 && x > lo && x < hi {
            out.push(SingularPoint { location: x, kind });
        } else if prev_v.is_finite() && v.is_finite() && prev_v.signum() != v.signum() && prev_v != 0.0 && v != 0.0 {
            let root = bisect(&eval, prev_x, x);
            if root > lo && root < hi {
                out.push(SingularPoint { location: root, kind });
            }
        } else if prev_v.is_nan() && v.is_finite() || prev_v.is_finite() && v.is_nan() {
            // domain edge inside the interval; report the finite side's bracket midpoint
            let m = 0.5 * (prev_x + x);
            if m > lo && m < hi {
                out.push(SingularPoint { location: m, kind });
            }
        }
        prev_x = x;
        prev_v = v;
    }
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || !fm.is_finite() {
            return m;
        }
        if fa.signum() != fm.signum() {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}
