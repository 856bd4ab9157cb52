//! Closed-form expressions in `r`, `z` and named parameters: parsing,
//! printing, simplification, symbolic differentiation and evaluation.
//!
//! Constants are exact rationals; conversion to `f64` happens only during
//! evaluation. Evaluation never returns NaN or infinity as a value: domain
//! violations come back as [`Error::Domain`](crate::Error::Domain).
//!
//! ```
//! use moutard::exprlang::{differentiate, evaluate, parse, ParameterSet, Var};
//!
//! let seed = parse("r^2 - 2*z^2").unwrap();
//! let d_r = differentiate(&seed, Var::R);
//! assert_eq!(d_r.to_string(), "2*r");
//! assert_eq!(evaluate(&seed, 1.0, 1.0, &ParameterSet::new()).unwrap(), -1.0);
//! ```

mod ast;
mod diff;
mod eval;
mod hyperdual;
mod parse;
mod print;
mod simplify;

pub use ast::{Expr, Func, Rational, Var};
pub use diff::{differentiate, differentiate2};
pub use eval::{eval_scalar, evaluate, evaluate_hyperdual, magnitude, ParameterSet, Scalar};
pub use hyperdual::HyperDual;
pub use parse::{parse, ParseError, ParseErrorKind, MAX_EXPONENT};
pub use simplify::simplify;
