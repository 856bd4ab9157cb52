use super::ast::{Expr, Func, Var};
use super::simplify::simplify;

/// Exact partial derivative with respect to `var`, simplified.
pub fn differentiate(e: &Expr, var: Var) -> Expr {
    simplify(&derive(e, var))
}

/// Second partial derivative.
pub fn differentiate2(e: &Expr, first: Var, second: Var) -> Expr {
    differentiate(&differentiate(e, first), second)
}

fn derive(e: &Expr, var: Var) -> Expr {
    match e {
        Expr::Num(_) | Expr::Pi | Expr::Param(_) => Expr::zero(),
        Expr::Var(v) => Expr::int(i64::from(*v == var)),
        Expr::Neg(a) => -derive(a, var),
        Expr::Add(xs) => Expr::Add(xs.iter().map(|x| derive(x, var)).collect()),
        Expr::Sub(a, b) => derive(a, var) - derive(b, var),
        Expr::Mul(xs) => Expr::Add(
            (0..xs.len())
                .map(|i| {
                    let mut factors = xs.clone();
                    factors[i] = derive(&xs[i], var);
                    Expr::Mul(factors)
                })
                .collect(),
        ),
        Expr::Div(a, b) => {
            let (a, b) = (a.as_ref(), b.as_ref());
            (derive(a, var) * b.clone() - a.clone() * derive(b, var)) / b.clone().pow(2)
        }
        Expr::Pow(a, n) => Expr::Mul(vec![Expr::int(*n), a.as_ref().clone().pow(n - 1), derive(a, var)]),
        Expr::Call(f, a) => {
            let inner = a.as_ref().clone();
            let da = derive(a, var);
            match f {
                Func::Sin => inner.cos() * da,
                Func::Cos => -(inner.sin() * da),
                Func::Tan => da / inner.cos().pow(2),
                Func::Cot => -(da / inner.sin().pow(2)),
                Func::Exp => inner.exp() * da,
                Func::Ln => da / inner,
                Func::Sqrt => da / (Expr::int(2) * inner.sqrt()),
            }
        }
    }
}
