//! Random expressions and the three-way derivative comparison shared by the
//! property tests and the acceptance run.
#![allow(dead_code)]

use moutard::exprlang::{
    differentiate, differentiate2, evaluate, evaluate_hyperdual, magnitude, Expr, Func, ParameterSet, Var,
};
use moutard::schrodinger::SingularSet;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;

pub fn params() -> ParameterSet {
    ParameterSet::new().with("k", 1.3).with("C1", 0.7)
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        3 => Just(Expr::r()),
        3 => Just(Expr::z()),
        1 => Just(Expr::param("k")),
        1 => Just(Expr::param("C1")),
        1 => Just(Expr::Pi),
        2 => (-5i64..=5).prop_map(Expr::int),
        1 => (1i64..=4, 2i64..=5).prop_map(|(p, q)| Expr::ratio(p, q)),
    ]
}

pub fn arb_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::Add),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Expr::Mul),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (inner.clone(), -2i64..=3).prop_map(|(a, n)| a.pow(n)),
            (inner, prop::sample::select(Func::ALL.to_vec())).prop_map(|(a, f)| Expr::call(f, a)),
        ]
    })
}

pub fn arb_point() -> impl Strategy<Value = (f64, f64)> {
    (0.3f64..2.0, -1.5f64..1.5)
}

/// The five partials in the order r, z, rr, rz, zz.
pub struct Partials {
    pub exprs: [Expr; 5],
}

impl Partials {
    pub fn of(e: &Expr) -> Partials {
        Partials {
            exprs: [
                differentiate(e, Var::R),
                differentiate(e, Var::Z),
                differentiate2(e, Var::R, Var::R),
                differentiate2(e, Var::R, Var::Z),
                differentiate2(e, Var::Z, Var::Z),
            ],
        }
    }
}

/// Worst relative disagreements at one point, or `None` when the point is
/// too close to a singularity for the comparison to mean anything.
#[derive(Clone, Copy, Debug)]
pub struct Agreement {
    pub hyperdual: f64,
    pub finite_difference: f64,
}

fn stencil(e: &Expr, p: &ParameterSet, r: f64, z: f64) -> Option<f64> {
    evaluate(e, r, z, p).ok().filter(|v| v.abs() < 1e8)
}

/// Central differences at step `h`, in the order of [`Partials`].
fn differences(e: &Expr, p: &ParameterSet, r: f64, z: f64, h: f64) -> Option<[f64; 5]> {
    let f = |dr: f64, dz: f64| stencil(e, p, r + dr, z + dz);
    let c = f(0.0, 0.0)?;
    let (rp, rm, zp, zm) = (f(h, 0.0)?, f(-h, 0.0)?, f(0.0, h)?, f(0.0, -h)?);
    let mixed = f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?;
    Some([
        (rp - rm) / (2.0 * h),
        (zp - zm) / (2.0 * h),
        (rp - 2.0 * c + rm) / (h * h),
        mixed / (4.0 * h * h),
        (zp - 2.0 * c + zm) / (h * h),
    ])
}

/// One Richardson step on central differences at `h` and `h/2`.
fn richardson(e: &Expr, p: &ParameterSet, r: f64, z: f64, h: f64) -> Option<[f64; 5]> {
    let coarse = differences(e, p, r, z, h)?;
    let fine = differences(e, p, r, z, h / 2.0)?;
    Some(std::array::from_fn(|i| (4.0 * fine[i] - coarse[i]) / 3.0))
}

pub const FD_STEP: f64 = 1e-2;

pub fn compare(e: &Expr, partials: &Partials, p: &ParameterSet, r: f64, z: f64) -> Option<Agreement> {
    let mut singular = SingularSet::of([e]);
    for d in &partials.exprs {
        singular.extend(d);
    }
    if singular.clearance(r, z, p) < 1e-3 {
        return None;
    }
    let value = stencil(e, p, r, z)?;
    let hd = evaluate_hyperdual(e, r, z, p).ok()?;
    let hd = [hd.d_r, hd.d_z, hd.d_rr, hd.d_rz, hd.d_zz];
    let fd = richardson(e, p, r, z, FD_STEP)?;
    let fd_fine = richardson(e, p, r, z, FD_STEP / 2.0)?;

    let mut worst = Agreement {
        hyperdual: 0.0,
        finite_difference: 0.0,
    };
    for i in 0..5 {
        let sym = stencil(&partials.exprs[i], p, r, z)?;
        let m = magnitude(&partials.exprs[i], r, z, p).ok()?;
        let scale = sym.abs().max(hd[i].abs()).max(m).max(1e-30);
        worst.hyperdual = worst.hyperdual.max((sym - hd[i]).abs() / scale);

        // the difference quotients lose digits to |f| as well
        let fd_scale = scale.max(value.abs());
        if (fd[i] - fd_fine[i]).abs() > 1e-8 * fd_scale {
            // step sequence not yet converged here; the point says nothing
            return None;
        }
        worst.finite_difference = worst.finite_difference.max((sym - fd_fine[i]).abs() / fd_scale);
    }
    Some(worst)
}

pub struct OracleRun {
    pub samples: usize,
    pub drawn: usize,
    pub worst_hyperdual: f64,
    pub worst_finite_difference: f64,
}

/// Draws `(expression, point)` pairs from the generators with a fixed seed
/// until `n` usable samples have been compared.
pub fn derivative_oracle(n: usize) -> OracleRun {
    let mut runner = TestRunner::deterministic();
    let p = params();
    let exprs = arb_expr();
    let points = arb_point();
    let mut run = OracleRun {
        samples: 0,
        drawn: 0,
        worst_hyperdual: 0.0,
        worst_finite_difference: 0.0,
    };
    while run.samples < n && run.drawn < 200 * n {
        let e = exprs.new_tree(&mut runner).unwrap().current();
        let partials = Partials::of(&e);
        for _ in 0..4 {
            let (r, z) = points.new_tree(&mut runner).unwrap().current();
            run.drawn += 1;
            if let Some(a) = compare(&e, &partials, &p, r, z) {
                run.samples += 1;
                run.worst_hyperdual = run.worst_hyperdual.max(a.hyperdual);
                run.worst_finite_difference = run.worst_finite_difference.max(a.finite_difference);
                break;
            }
        }
    }
    run
}
