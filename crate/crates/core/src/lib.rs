//! Darboux-type transformations of the axially symmetric stationary
//! Schrödinger equation
//!
//! ```text
//! Y_rr + Y_r/r + Y_zz - u(r, z) Y = 0
//! ```
//!
//! A solution `Y_h` maps the potential `u` to a new potential `ũ`, and every
//! other solution `Y` of the old equation to a solution `Ỹ` of the new one
//! through a line integral. Potentials and seeds are symbolic
//! ([`exprlang`]); transported solutions are numerical fields
//! ([`moutard::TransformedSolutionField`]).
//!
//! ```
//! use moutard::exprlang::ParameterSet;
//! use moutard::moutard::transform_potential;
//! use moutard::schrodinger::{Potential, SeedSolution};
//!
//! let p = ParameterSet::new();
//! let step = transform_potential(&Potential::parse("0")?, &SeedSolution::parse("r^2 - 2*z^2")?, &p)?;
//! assert_eq!(step.u_tilde.eval(1.0, 1.0, &p)?, 37.0);
//! # Ok::<(), moutard::Error>(())
//! ```

pub mod catalog;
pub mod cli;
pub mod error;
pub mod exprlang;
pub mod moutard;
pub mod quadrature;
pub mod schrodinger;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/expressions.md")]
    mod expressions {}
    #[doc = include_str!("../../../book/src/equation.md")]
    mod equation {}
    #[doc = include_str!("../../../book/src/transformation.md")]
    mod transformation {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/chains.md")]
    mod chains {}
    #[doc = include_str!("../../../book/src/catalog.md")]
    mod catalog {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
