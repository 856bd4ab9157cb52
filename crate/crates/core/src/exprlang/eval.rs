use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::ast::{Expr, Func, Var};
use super::hyperdual::HyperDual;
use crate::error::{Error, Result};

/// Numeric values for the named parameters of an expression.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterSet(BTreeMap<String, f64>);

impl ParameterSet {
    pub fn new() -> Self {
        ParameterSet::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        ParameterSet(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Bindings of `other` take precedence.
    pub fn merged(&self, other: &ParameterSet) -> ParameterSet {
        let mut out = self.clone();
        out.0.extend(other.0.iter().map(|(k, v)| (k.clone(), *v)));
        out
    }

    /// Errors on the first parameter of `e` that has no binding.
    pub fn check_bound(&self, e: &Expr) -> Result<()> {
        match e.parameters().into_iter().find(|p| !self.0.contains_key(p)) {
            Some(p) => Err(Error::UnboundParameter(p)),
            None => Ok(()),
        }
    }
}

/// Numeric type the evaluator can run on.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn coordinate(var: Var, r: f64, z: f64) -> Self;
    fn value(&self) -> f64;
    fn finite(&self) -> bool;
    fn powi(self, n: i32) -> Self;
    fn apply(self, f: Func) -> Self;
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn coordinate(var: Var, r: f64, z: f64) -> Self {
        match var {
            Var::R => r,
            Var::Z => z,
        }
    }
    fn value(&self) -> f64 {
        *self
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn apply(self, f: Func) -> Self {
        match f {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Tan => self.tan(),
            Func::Cot => {
                let (s, c) = self.sin_cos();
                c / s
            }
            Func::Exp => self.exp(),
            Func::Ln => self.ln(),
            Func::Sqrt => self.sqrt(),
        }
    }
}

impl Scalar for HyperDual {
    fn constant(v: f64) -> Self {
        HyperDual::constant(v)
    }
    fn coordinate(var: Var, r: f64, z: f64) -> Self {
        match var {
            Var::R => HyperDual::r(r),
            Var::Z => HyperDual::z(z),
        }
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
    fn powi(self, n: i32) -> Self {
        HyperDual::powi(self, n)
    }
    fn apply(self, f: Func) -> Self {
        match f {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Tan => self.tan(),
            Func::Cot => self.cot(),
            Func::Exp => self.exp(),
            Func::Ln => self.ln(),
            Func::Sqrt => self.sqrt(),
        }
    }
}

fn domain(e: &Expr, value: f64, reason: &'static str) -> Error {
    Error::Domain {
        expr: e.to_string(),
        value,
        reason,
    }
}

/// Evaluates `e` at `(r, z)` over any [`Scalar`], rejecting every domain
/// violation instead of propagating NaN or infinity.
pub fn eval_scalar<S: Scalar>(e: &Expr, r: f64, z: f64, params: &ParameterSet) -> Result<S> {
    let out = match e {
        Expr::Num(q) => S::constant(q.to_f64()),
        Expr::Pi => S::constant(PI),
        Expr::Var(v) => S::coordinate(*v, r, z),
        Expr::Param(p) => S::constant(params.get(p).ok_or_else(|| Error::UnboundParameter(p.clone()))?),
        Expr::Neg(a) => -eval_scalar::<S>(a, r, z, params)?,
        Expr::Add(xs) => {
            let mut acc = S::constant(0.0);
            for x in xs {
                acc = acc + eval_scalar(x, r, z, params)?;
            }
            acc
        }
        Expr::Sub(a, b) => eval_scalar::<S>(a, r, z, params)? - eval_scalar(b, r, z, params)?,
        Expr::Mul(xs) => {
            let mut acc = S::constant(1.0);
            for x in xs {
                acc = acc * eval_scalar(x, r, z, params)?;
            }
            acc
        }
        Expr::Div(a, b) => {
            let num = eval_scalar::<S>(a, r, z, params)?;
            let den = eval_scalar::<S>(b, r, z, params)?;
            if den.value() == 0.0 {
                return Err(domain(b, 0.0, "division by zero"));
            }
            num / den
        }
        Expr::Pow(a, n) => {
            let base = eval_scalar::<S>(a, r, z, params)?;
            if *n < 0 && base.value() == 0.0 {
                return Err(domain(a, 0.0, "negative power of zero"));
            }
            let n = i32::try_from(*n).map_err(|_| domain(e, f64::INFINITY, "exponent overflow"))?;
            base.powi(n)
        }
        Expr::Call(f, a) => {
            let x = eval_scalar::<S>(a, r, z, params)?;
            let v = x.value();
            match f {
                Func::Ln if v <= 0.0 => return Err(domain(e, v, "logarithm of a non-positive number")),
                Func::Sqrt if v < 0.0 => return Err(domain(e, v, "square root of a negative number")),
                Func::Cot if v.sin() == 0.0 => return Err(domain(e, v, "cotangent pole")),
                Func::Tan if v.cos() == 0.0 => return Err(domain(e, v, "tangent pole")),
                _ => {}
            }
            x.apply(*f)
        }
    };
    if !out.finite() {
        return Err(domain(e, out.value(), "non-finite result"));
    }
    Ok(out)
}

/// Evaluates `e` in double precision.
pub fn evaluate(e: &Expr, r: f64, z: f64, params: &ParameterSet) -> Result<f64> {
    eval_scalar::<f64>(e, r, z, params)
}

/// Value and all first and second partials of `e` by forward propagation.
pub fn evaluate_hyperdual(e: &Expr, r: f64, z: f64, params: &ParameterSet) -> Result<HyperDual> {
    eval_scalar::<HyperDual>(e, r, z, params)
}

/// Magnitude of `e` with every sign discarded: sums add absolute values,
/// and elementary functions count as order one. Comparing `|e|` against
/// this measures how close `e` is to a cancellation zero.
pub fn magnitude(e: &Expr, r: f64, z: f64, params: &ParameterSet) -> Result<f64> {
    Ok(match e {
        Expr::Num(q) => q.to_f64().abs(),
        Expr::Pi => PI,
        Expr::Var(Var::R) => r.abs(),
        Expr::Var(Var::Z) => z.abs(),
        Expr::Param(p) => params.get(p).ok_or_else(|| Error::UnboundParameter(p.clone()))?.abs(),
        Expr::Neg(a) => magnitude(a, r, z, params)?,
        Expr::Add(xs) | Expr::Mul(xs) => {
            let is_sum = matches!(e, Expr::Add(_));
            let mut acc = if is_sum { 0.0 } else { 1.0 };
            for x in xs {
                let m = magnitude(x, r, z, params)?;
                acc = if is_sum { acc + m } else { acc * m };
            }
            acc
        }
        Expr::Sub(a, b) => magnitude(a, r, z, params)? + magnitude(b, r, z, params)?,
        Expr::Div(a, b) => magnitude(a, r, z, params)? / evaluate(b, r, z, params)?.abs(),
        Expr::Pow(a, n) => magnitude(a, r, z, params)?.powi(*n as i32),
        Expr::Call(Func::Sqrt, a) => magnitude(a, r, z, params)?.sqrt(),
        Expr::Call(..) => evaluate(e, r, z, params)?.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;

    fn ev(text: &str, r: f64, z: f64) -> Result<f64> {
        evaluate(&parse(text).unwrap(), r, z, &ParameterSet::new())
    }

    #[test]
    fn arithmetic() {
        assert_eq!(ev("r^2-2*z^2", 1.0, 1.0).unwrap(), -1.0);
        let u1 = "(4*z^4+13*r^4+20*r^2*z^2)/((r^2-2*z^2)^2*r^2)";
        assert_eq!(ev(u1, 1.0, 1.0).unwrap(), 37.0);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        match ev("ln(r^2-2*z^2)", 1.0, 1.0).unwrap_err() {
            Error::Domain { expr, value, .. } => {
                assert_eq!(expr, "ln(r^2 - 2*z^2)");
                assert_eq!(value, -1.0);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(ev("1/(r-z)", 1.0, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(ev("sqrt(z)", 1.0, -1.0), Err(Error::Domain { .. })));
        assert!(matches!(ev("cot(z)", 1.0, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(ev("r^-1", 0.0, 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn unbound_parameter_is_an_error() {
        assert!(matches!(ev("k*z", 1.0, 1.0), Err(Error::UnboundParameter(p)) if p == "k"));
        let e = parse("k*z").unwrap();
        let p = ParameterSet::new().with("k", 2.0);
        assert_eq!(evaluate(&e, 1.0, 3.0, &p).unwrap(), 6.0);
    }

    #[test]
    fn hyperdual_polynomial() {
        let e = parse("r^2-2*z^2").unwrap();
        let h = evaluate_hyperdual(&e, 2.0, 1.0, &ParameterSet::new()).unwrap();
        assert_eq!(
            (h.value, h.d_r, h.d_z, h.d_rr, h.d_rz, h.d_zz),
            (2.0, 4.0, -4.0, 2.0, 0.0, -4.0)
        );
    }

    #[test]
    fn hyperdual_sqrt_at_zero_is_rejected() {
        let e = parse("sqrt(r^2+z^2)").unwrap();
        assert!(evaluate(&e, 0.0, 0.0, &ParameterSet::new()).is_ok());
        assert!(evaluate_hyperdual(&e, 0.0, 0.0, &ParameterSet::new()).is_err());
    }

    #[test]
    fn magnitude_measures_cancellation() {
        let e = parse("r^2-2*z^2").unwrap();
        let p = ParameterSet::new();
        assert_eq!(magnitude(&e, 1.0, 1.0, &p).unwrap(), 3.0);
    }
}
