//! Terminating, bottom-up normalization.
//!
//! Rules: exact constant folding, the 0/1 identities, double negation, and
//! flattening of nested sums and products into sorted n-ary nodes. The
//! output never contains `Neg` or `Sub`: `-x` becomes `(-1)*x` and `a - b`
//! becomes `a + (-1)*b`. No factoring, cancellation or trig identities.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::ast::{Expr, Func, Rational};

// Folding larger powers of constants bloats the rationals for no benefit.
const MAX_FOLDED_POWER: i64 = 64;

pub fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Num(_) | Expr::Pi | Expr::Var(_) | Expr::Param(_) => e.clone(),
        Expr::Neg(a) => negate(simplify(a)),
        Expr::Add(xs) => sum(xs.iter().map(simplify).collect()),
        Expr::Sub(a, b) => sum(vec![simplify(a), negate(simplify(b))]),
        Expr::Mul(xs) => product(xs.iter().map(simplify).collect()),
        Expr::Div(a, b) => quotient(simplify(a), simplify(b)),
        Expr::Pow(a, n) => power(simplify(a), *n),
        Expr::Call(f, a) => call(*f, simplify(a)),
    }
}

fn num(q: BigRational) -> Expr {
    Expr::Num(Rational::new(q))
}

fn negate(x: Expr) -> Expr {
    match x {
        Expr::Num(q) => num(-q.value().clone()),
        other => product(vec![Expr::int(-1), other]),
    }
}

fn sum(terms: Vec<Expr>) -> Expr {
    let mut constant = BigRational::zero();
    let mut rest = Vec::with_capacity(terms.len());
    let mut push = |t: Expr, rest: &mut Vec<Expr>| match t {
        Expr::Num(q) => constant += q.value(),
        other => rest.push(other),
    };
    for t in terms {
        match t {
            Expr::Add(inner) => inner.into_iter().for_each(|x| push(x, &mut rest)),
            other => push(other, &mut rest),
        }
    }
    if !constant.is_zero() {
        rest.push(num(constant));
    }
    rest.sort();
    match rest.len() {
        0 => Expr::zero(),
        1 => rest.pop().unwrap(),
        _ => Expr::Add(rest),
    }
}

fn product(factors: Vec<Expr>) -> Expr {
    let mut coeff = BigRational::one();
    let mut rest = Vec::with_capacity(factors.len());
    let mut push = |t: Expr, rest: &mut Vec<Expr>| match t {
        Expr::Num(q) => coeff *= q.value(),
        other => rest.push(other),
    };
    for t in factors {
        match t {
            Expr::Mul(inner) => inner.into_iter().for_each(|x| push(x, &mut rest)),
            other => push(other, &mut rest),
        }
    }
    if coeff.is_zero() {
        return Expr::zero();
    }
    rest.sort();
    if rest.is_empty() {
        return num(coeff);
    }
    if coeff.is_one() {
        if rest.len() == 1 {
            return rest.pop().unwrap();
        }
        return Expr::Mul(rest);
    }
    rest.insert(0, num(coeff));
    Expr::Mul(rest)
}

fn quotient(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Num(q)) if q.is_zero() => Expr::Div(Box::new(a), Box::new(b)),
        (_, Expr::Num(q)) => product(vec![a, num(q.value().recip())]),
        (Expr::Num(q), _) if q.is_zero() => Expr::zero(),
        _ if a == b => Expr::one(),
        // cancel one syntactically equal factor
        (Expr::Mul(xs), _) if xs.contains(&b) => {
            let mut xs = xs.clone();
            let i = xs.iter().position(|x| *x == b).expect("factor present");
            xs.remove(i);
            product(xs)
        }
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn power(a: Expr, n: i64) -> Expr {
    match (&a, n) {
        (_, 0) => Expr::one(),
        (_, 1) => a,
        (Expr::Num(q), _) if q.is_zero() && n < 0 => Expr::Pow(Box::new(a), n),
        (Expr::Num(q), _) if q.is_zero() || q.is_one() => a,
        (Expr::Num(q), _) if n.abs() <= MAX_FOLDED_POWER => num(num_traits::Pow::pow(q.value(), n as i32)),
        _ => Expr::Pow(Box::new(a), n),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    let zero = a.is_zero();
    let one = a.is_one();
    match f {
        Func::Sin | Func::Tan | Func::Sqrt if zero => Expr::zero(),
        Func::Cos | Func::Exp if zero => Expr::one(),
        Func::Ln if one => Expr::zero(),
        Func::Sqrt if one => Expr::one(),
        _ => Expr::Call(f, Box::new(a)),
    }
}
