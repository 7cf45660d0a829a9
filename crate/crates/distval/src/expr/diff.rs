//! Symbolic differentiation. Indicator and piecewise nodes on the
//! differentiation path are rejected; everything else produces an `Expr`
//! that can be evaluated like any other.

use super::{BinaryOp, Expr, UnaryOp, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffError {
    #[error("cannot differentiate through {0}")]
    NonDifferentiable(&'static str),
}

pub fn differentiate(e: &Expr, var: Var) -> Result<Expr, DiffError> {
    if !e.contains_var(var) {
        return Ok(Expr::Const(0.0));
    }
    match e {
        Expr::Const(_) => Ok(Expr::Const(0.0)),
        Expr::Var(v) => Ok(Expr::Const(if *v == var { 1.0 } else { 0.0 })),
        Expr::Unary(op, a) => {
            let da = differentiate(a, var)?;
            let a = a.as_ref().clone();
            Ok(match op {
                UnaryOp::Neg => da.neg(),
                UnaryOp::Sin => a.cos().mul(da),
                UnaryOp::Cos => a.sin().neg().mul(da),
                UnaryOp::Exp => a.exp().mul(da),
                UnaryOp::Ln => da.div(a),
                UnaryOp::Arctan => da.div(Expr::Const(1.0).add(a.clone().mul(a))),
                // sgn(u)·u', undefined at u = 0
                UnaryOp::Abs => a.clone().div(a.abs()).mul(da),
                UnaryOp::Sqrt => da.div(Expr::Const(2.0).mul(a.sqrt())),
            })
        }
        Expr::Binary(op, a, b) => {
            match op {
                BinaryOp::Add => Ok(differentiate(a, var)?.add(differentiate(b, var)?)),
                BinaryOp::Sub => Ok(differentiate(a, var)?.sub(differentiate(b, var)?)),
                BinaryOp::Mul => {
                    let da = differentiate(a, var)?;
                    let db = differentiate(b, var)?;
                    Ok(da.mul(b.as_ref().clone()).add(a.as_ref().clone().mul(db)))
                }
                BinaryOp::Div => {
                    let da = differentiate(a, var)?;
                    let db = differentiate(b, var)?;
                    let num = da.mul(b.as_ref().clone()).sub(a.as_ref().clone().mul(db));
                    let den = b.as_ref().clone().mul(b.as_ref().clone());
                    Ok(num.div(den))
                }
                BinaryOp::Pow => {
                    // Only constant exponents are differentiable in this
                    // grammar; integer powers are exact, fractional powers
                    // require a positive base at evaluation time.
                    let c = match b.as_ref() {
                        Expr::Const(c) => *c,
                        _ => return Err(DiffError::NonDifferentiable("pow with variable exponent")),
                    };
                    let da = differentiate(a, var)?;
                    let u = a.as_ref().clone();
                    Ok(Expr::Const(c).mul(u.pow(Expr::Const(c - 1.0))).mul(da))
                }
            }
        }
        Expr::Indicator { .. } => Err(DiffError::NonDifferentiable("indicator")),
        Expr::Piecewise(_) => Err(DiffError::NonDifferentiable("piecewise")),
        Expr::BumpCore(t) => {
            let dt = differentiate(t, var)?;
            let t = t.as_ref().clone();
            // d/dt exp(-1/(1-t^2)) = exp(-1/(1-t^2)) * (-2t)/(1-t^2)^2
            let one_minus = Expr::Const(1.0).sub(t.clone().mul(t.clone()));
            let factor = Expr::Const(-2.0)
                .mul(t.clone())
                .div(one_minus.clone().mul(one_minus));
            Ok(t.bump().mul(factor).mul(dt))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Env};

    fn central_diff(e: &Expr, x: f64, h: f64) -> f64 {
        let a = e.eval(&Env::x(x + h)).unwrap();
        let b = e.eval(&Env::x(x - h)).unwrap();
        (a - b) / (2.0 * h)
    }

    #[test]
    fn d_sin_is_cos() {
        let d = parse("sin(x)").unwrap().differentiate(Var::X).unwrap();
        for &x in &[0.0, 0.3, 1.7, -2.0] {
            let got = d.eval(&Env::x(x)).unwrap();
            assert!((got - x.cos()).abs() < 1e-12, "x={x}: {got}");
        }
    }

    #[test]
    fn d_bump_at_zero_is_zero() {
        let d = parse("bump(x)").unwrap().differentiate(Var::X).unwrap();
        assert_eq!(d.eval(&Env::x(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn d_bump_matches_central_difference() {
        let e = parse("bump(x)").unwrap();
        let d = e.differentiate(Var::X).unwrap();
        let got = d.eval(&Env::x(0.5)).unwrap();
        let fd = central_diff(&e, 0.5, 1e-5);
        assert!(
            (got - fd).abs() <= 1e-7 * (1.0 + got.abs()),
            "symbolic {got} vs fd {fd}"
        );
    }

    #[test]
    fn indicator_on_path_is_rejected() {
        let e = parse("chi(0,1)*x").unwrap();
        assert!(e.differentiate(Var::X).is_err());
    }

    #[test]
    fn indicator_off_path_is_fine() {
        // chi depends on x only; derivative in n never touches it
        let e = parse("chi(0,1)+n").unwrap();
        let d = e.differentiate(Var::N).unwrap();
        assert_eq!(d.eval(&Env { x: Some(0.5), n: Some(3.0), ..Env::default() }).unwrap(), 1.0);
    }

    #[test]
    fn corpus_matches_central_difference() {
        let corpus = [
            "sin(x)*cos(x)",
            "exp(-x^2)",
            "x^3-2*x+1",
            "arctan(x)",
            "sqrt(x+2)",
            "bump(x/2)",
            "1/(1+x^2)",
            "ln(x+3)",
        ];
        for src in corpus {
            let e = parse(src).unwrap();
            let d = e.differentiate(Var::X).unwrap();
            for i in 0..20 {
                let x = -0.9 + 1.8 * (i as f64) / 19.0;
                let got = d.eval(&Env::x(x)).unwrap();
                let fd = central_diff(&e, x, 1e-5);
                assert!(
                    (got - fd).abs() <= 1e-6 * (1.0 + got.abs()),
                    "{src} at {x}: {got} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn bump_higher_derivatives_vanish_toward_support_edge() {
        let mut d = parse("bump(x)").unwrap();
        for _ in 0..6 {
            d = d.differentiate(Var::X).unwrap();
        }
        let near = d.eval(&Env::x(1.0 - 1e-3)).unwrap();
        assert!(near.is_finite());
        // decreasing magnitude along a grid approaching the edge; deeper grids
        // underflow the unsimplified quotient-rule denominators
        let mut prev = f64::INFINITY;
        for k in 3..6 {
            let x = 1.0 - 10f64.powi(-k);
            let v = d.eval(&Env::x(x)).unwrap().abs();
            assert!(v.is_finite());
            assert!(v <= prev.max(1e-280), "k={k}: {v} vs {prev}");
            prev = v;
        }
    }
}
