mod common;

use common::{arb_expr, arb_point, compare, params, Partials};
use moutard::exprlang::{differentiate, evaluate, parse, simplify, Expr, Var};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(simplify(&back), simplify(&e));
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn simplify_is_idempotent(e in arb_expr()) {
        let once = simplify(&e);
        prop_assert_eq!(simplify(&once), once);
    }

    #[test]
    fn simplify_preserves_value(e in arb_expr(), (r, z) in arb_point()) {
        let p = params();
        if let (Ok(a), Ok(b)) = (evaluate(&e, r, z, &p), evaluate(&simplify(&e), r, z, &p)) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn differentiation_is_linear(a in arb_expr(), b in arb_expr(), (r, z) in arb_point()) {
        let p = params();
        let combo = Expr::Add(vec![Expr::int(3) * a.clone(), Expr::ratio(-1, 2) * b.clone()]);
        for var in [Var::R, Var::Z] {
            let lhs = evaluate(&differentiate(&combo, var), r, z, &p);
            let da = evaluate(&differentiate(&a, var), r, z, &p);
            let db = evaluate(&differentiate(&b, var), r, z, &p);
            if let (Ok(l), Ok(x), Ok(y)) = (lhs, da, db) {
                let want = 3.0 * x - 0.5 * y;
                let scale = (3.0 * x).abs().max((0.5 * y).abs()).max(1e-300);
                prop_assert!((l - want).abs() <= 1e-9 * scale, "{} vs {}", l, want);
            }
        }
    }

    #[test]
    fn symbolic_hyperdual_and_differences_agree(e in arb_expr(), (r, z) in arb_point()) {
        if let Some(a) = compare(&e, &Partials::of(&e), &params(), r, z) {
            prop_assert!(a.hyperdual <= 1e-12, "hyperdual {:e} for {}", a.hyperdual, e);
            prop_assert!(a.finite_difference <= 1e-6, "finite difference {:e} for {}", a.finite_difference, e);
        }
    }
}
