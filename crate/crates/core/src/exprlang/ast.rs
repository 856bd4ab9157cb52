use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};
use std::ops;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Independent variable of the axially symmetric problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    R,
    Z,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::R => "r",
            Var::Z => "z",
        }
    }
}

/// Elementary functions of one argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Cot,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 7] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Cot,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Cot => "cot",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Exact rational constant with a cached double approximation.
#[derive(Clone, Debug)]
pub struct Rational {
    value: BigRational,
    approx: f64,
}

impl Rational {
    pub fn new(value: BigRational) -> Self {
        let approx = value.to_f64().unwrap_or(f64::NAN);
        Rational { value, approx }
    }

    pub fn from_integer(n: i64) -> Self {
        Rational::new(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Rational::new(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn to_f64(&self) -> f64 {
        self.approx
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.value.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.value.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.value.is_integer()
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl Eq for Rational {}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.cmp(&other.value)
    }
}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.value.hash(state);
    }
}

/// Closed-form expression in `r`, `z` and named parameters.
///
/// `Add` and `Mul` are n-ary so that chains such as `a + b + c` parse to a
/// single node; `Sub` and `Div` stay binary and left-associative.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Num(Rational),
    Pi,
    Var(Var),
    Param(String),
    Neg(Box<Expr>),
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Num(Rational::from_integer(n))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::Num(Rational::ratio(num, den))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn r() -> Expr {
        Expr::Var(Var::R)
    }

    pub fn z() -> Expr {
        Expr::Var(Var::Z)
    }

    pub fn param(name: impl Into<String>) -> Expr {
        Expr::Param(name.into())
    }

    pub fn pow(self, n: i64) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }

    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }

    pub fn ln(self) -> Expr {
        Expr::call(Func::Ln, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self {
            Expr::Num(q) => Some(q),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Num(q) if q.is_one())
    }

    /// Variables and parameters occurring in the expression (`pi` excluded).
    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| match e {
            Expr::Var(v) => {
                out.insert(v.name().to_string());
            }
            Expr::Param(p) => {
                out.insert(p.clone());
            }
            _ => {}
        });
        out
    }

    /// Parameters only, without `r` and `z`.
    pub fn parameters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Param(p) = e {
                out.insert(p.clone());
            }
        });
        out
    }

    pub fn depends_on(&self, var: Var) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= *e == Expr::Var(var));
        found
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Pre-order traversal.
    pub fn visit<F: FnMut(&Expr)>(&self, f: &mut F) {
        f(self);
        match self {
            Expr::Num(_) | Expr::Pi | Expr::Var(_) | Expr::Param(_) => {}
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.visit(f),
            Expr::Add(xs) | Expr::Mul(xs) => xs.iter().for_each(|x| x.visit(f)),
            Expr::Sub(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Rebuilds the tree bottom-up, replacing every node by `f(node)`.
    pub fn map_bottom_up<F: FnMut(Expr) -> Expr>(&self, f: &mut F) -> Expr {
        let rebuilt = match self {
            Expr::Num(_) | Expr::Pi | Expr::Var(_) | Expr::Param(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.map_bottom_up(f))),
            Expr::Pow(a, n) => Expr::Pow(Box::new(a.map_bottom_up(f)), *n),
            Expr::Call(g, a) => Expr::Call(*g, Box::new(a.map_bottom_up(f))),
            Expr::Add(xs) => Expr::Add(xs.iter().map(|x| x.map_bottom_up(f)).collect()),
            Expr::Mul(xs) => Expr::Mul(xs.iter().map(|x| x.map_bottom_up(f)).collect()),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.map_bottom_up(f)), Box::new(b.map_bottom_up(f))),
            Expr::Div(a, b) => Expr::Div(Box::new(a.map_bottom_up(f)), Box::new(b.map_bottom_up(f))),
        };
        f(rebuilt)
    }

    /// Replaces every occurrence of `var` by `with`.
    pub fn substitute(&self, var: Var, with: &Expr) -> Expr {
        self.map_bottom_up(&mut |e| match e {
            Expr::Var(v) if v == var => with.clone(),
            other => other,
        })
    }

    /// Bases of every denominator in the tree: divisors of `Div`, bases of
    /// negative powers, and the implicit denominators of `tan`, `cot` and
    /// `ln`. Integer powers are stripped so that a sign change of the base
    /// stays visible.
    pub fn denominators(&self) -> Vec<Expr> {
        fn strip(e: &Expr) -> &Expr {
            match e {
                Expr::Pow(b, _) | Expr::Neg(b) => strip(b),
                _ => e,
            }
        }
        fn push_factors(e: &Expr, out: &mut Vec<Expr>) {
            match strip(e) {
                Expr::Mul(xs) => xs.iter().for_each(|x| push_factors(x, out)),
                Expr::Num(_) | Expr::Pi => {}
                other => {
                    if !out.contains(other) {
                        out.push(other.clone());
                    }
                }
            }
        }
        let mut out = Vec::new();
        self.visit(&mut |e| match e {
            Expr::Div(_, b) => push_factors(b, &mut out),
            Expr::Pow(b, n) if *n < 0 => push_factors(b, &mut out),
            Expr::Call(Func::Tan, a) => push_factors(&a.clone().cos(), &mut out),
            Expr::Call(Func::Cot, a) => push_factors(&a.clone().sin(), &mut out),
            Expr::Call(Func::Ln, a) => push_factors(a, &mut out),
            _ => {}
        });
        out
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Self {
        Expr::Var(v)
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(vec![self, rhs])
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(vec![self, rhs])
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_symbols_skip_pi() {
        let e = (Expr::param("k") * Expr::z()).sin() + Expr::Pi;
        let syms: Vec<_> = e.free_symbols().into_iter().collect();
        assert_eq!(syms, vec!["k", "z"]);
        assert!(Expr::int(5).free_symbols().is_empty());
    }

    #[test]
    fn denominators_strip_powers_and_products() {
        let d = Expr::r() * (Expr::r().pow(2) - Expr::int(2) * Expr::z().pow(2));
        let e = Expr::one() / d.clone().pow(2) + (Expr::z()).call_cot();
        let dens = e.denominators();
        assert!(dens.contains(&Expr::r()));
        assert!(dens.contains(&(Expr::r().pow(2) - Expr::int(2) * Expr::z().pow(2))));
        assert!(dens.contains(&Expr::z().sin()));
    }

    impl Expr {
        fn call_cot(self) -> Expr {
            Expr::call(Func::Cot, self)
        }
    }
}
