//! The stationary axially symmetric Schrödinger operator
//! `Y_rr + Y_r/r + Y_zz - u Y`, residual verification on grids, and the
//! conversions between the seed `Y_h`, the exponent `h` and the potential `u`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprlang::{
    differentiate, evaluate, evaluate_hyperdual, magnitude, parse, simplify, Expr, HyperDual, ParameterSet, Var,
};
use crate::quadrature::GridSpec;

/// Default relative distance to a denominator zero below which a grid point
/// counts as singular.
pub const DEFAULT_SINGULAR_THRESHOLD: f64 = 1e-8;

/// Floor of the pointwise residual scale.
pub const SCALE_FLOOR: f64 = 1e-30;

fn default_region() -> GridSpec {
    GridSpec::standard(5.0, 41)
}

/// Closed-form potential `u(r, z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    #[serde(with = "expr_text")]
    pub expr: Expr,
    pub region: GridSpec,
    pub singular_threshold: f64,
}

/// Closed-form solution `Y(r, z)` claimed to satisfy the equation under some
/// potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSolution {
    #[serde(with = "expr_text")]
    pub expr: Expr,
    pub region: GridSpec,
    pub singular_threshold: f64,
}

macro_rules! closed_form {
    ($ty:ident) => {
        impl $ty {
            pub fn new(expr: Expr) -> Self {
                $ty {
                    expr,
                    region: default_region(),
                    singular_threshold: DEFAULT_SINGULAR_THRESHOLD,
                }
            }

            pub fn parse(text: &str) -> Result<Self> {
                Ok($ty::new(parse(text)?))
            }

            pub fn with_region(mut self, region: GridSpec) -> Self {
                self.region = region;
                self
            }

            pub fn eval(&self, r: f64, z: f64, params: &ParameterSet) -> Result<f64> {
                evaluate(&self.expr, r, z, params)
            }
        }

        impl From<Expr> for $ty {
            fn from(expr: Expr) -> Self {
                $ty::new(expr)
            }
        }
    };
}

closed_form!(Potential);
closed_form!(SeedSolution);

pub(crate) mod expr_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::exprlang::{parse, Expr};

    pub fn serialize<S: Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(e)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Expr, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Anything that yields a value with first and second partials at a point:
/// closed-form seeds as well as numerically transported solutions.
pub trait SolutionField: Sync {
    fn jet(&self, r: f64, z: f64) -> Result<HyperDual>;

    /// `None` near the field's singular set, otherwise the sign pattern of
    /// its denominators.
    fn signature(&self, r: f64, z: f64, margin: f64) -> Option<u64>;
}

/// A closed-form solution bound to parameter values.
pub struct BoundSeed<'a> {
    pub seed: &'a SeedSolution,
    pub params: &'a ParameterSet,
    singular: SingularSet,
}

impl<'a> BoundSeed<'a> {
    pub fn new(seed: &'a SeedSolution, params: &'a ParameterSet) -> Self {
        BoundSeed {
            seed,
            params,
            singular: SingularSet::of([&seed.expr]),
        }
    }
}

impl SolutionField for BoundSeed<'_> {
    fn jet(&self, r: f64, z: f64) -> Result<HyperDual> {
        evaluate_hyperdual(&self.seed.expr, r, z, self.params)
    }

    fn signature(&self, r: f64, z: f64, margin: f64) -> Option<u64> {
        self.singular.signature(r, z, self.params, margin)
    }
}

/// Denominators collected from a set of expressions.
#[derive(Clone, Debug, Default)]
pub struct SingularSet {
    denominators: Vec<Expr>,
}

impl SingularSet {
    pub fn of<'a>(exprs: impl IntoIterator<Item = &'a Expr>) -> Self {
        let mut s = SingularSet::default();
        for e in exprs {
            s.extend(e);
        }
        s
    }

    pub fn extend(&mut self, e: &Expr) {
        for d in e.denominators() {
            let d = simplify(&d);
            if d.as_num().is_none() && !self.denominators.contains(&d) {
                self.denominators.push(d);
            }
        }
    }

    /// Adds `e` itself as a monitored denominator.
    pub fn push(&mut self, e: &Expr) {
        let e = simplify(e);
        if !self.denominators.contains(&e) {
            self.denominators.push(e);
        }
    }

    pub fn denominators(&self) -> &[Expr] {
        &self.denominators
    }

    /// Sign pattern of the denominators, or `None` if one of them is within
    /// `margin` of zero relative to its own magnitude.
    pub fn signature(&self, r: f64, z: f64, params: &ParameterSet, margin: f64) -> Option<u64> {
        let mut bits = 0u64;
        for (i, d) in self.denominators.iter().enumerate() {
            let v = evaluate(d, r, z, params).ok()?;
            let m = magnitude(d, r, z, params).ok()?;
            if v == 0.0 || v.abs() < margin * m {
                return None;
            }
            if v < 0.0 && i < 64 {
                bits |= 1 << i;
            }
        }
        Some(bits)
    }

    /// Smallest relative distance `|d| / magnitude(d)` over all denominators
    /// (1 when there are none, 0 on evaluation failure).
    pub fn clearance(&self, r: f64, z: f64, params: &ParameterSet) -> f64 {
        self.denominators
            .iter()
            .map(|d| match (evaluate(d, r, z, params), magnitude(d, r, z, params)) {
                (Ok(v), Ok(m)) if m > 0.0 => (v.abs() / m).min(1.0),
                _ => 0.0,
            })
            .fold(1.0, f64::min)
    }
}

/// Outcome of checking an identity pointwise on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub grid: GridSpec,
    pub n_evaluated: usize,
    #[serde(rename = "n_skipped")]
    pub n_skipped_singular: usize,
    #[serde(rename = "max_abs")]
    pub max_abs_residual: f64,
    #[serde(rename = "max_rel")]
    pub max_rel_residual: f64,
    pub worst_point: (f64, f64),
}

impl ResidualReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_residual < tol
    }
}

/// Points of the grid excluded by `|expr| < min_abs`, on top of the
/// automatic singular-point skipping.
#[derive(Clone, Debug)]
pub struct Exclusion {
    pub expr: Expr,
    pub min_abs: f64,
}

impl Exclusion {
    pub fn new(expr: Expr, min_abs: f64) -> Self {
        Exclusion { expr, min_abs }
    }

    fn excludes(&self, r: f64, z: f64, params: &ParameterSet) -> bool {
        evaluate(&self.expr, r, z, params).map_or(true, |v| v.abs() < self.min_abs)
    }
}

/// Pointwise residual: `None` for a skipped point, else `(abs, rel)`.
pub(crate) type PointResidual = Option<(f64, f64)>;

/// Runs `f` over the grid in parallel and reduces in grid order.
pub(crate) fn sweep<F>(grid: &GridSpec, f: F) -> Result<ResidualReport>
where
    F: Fn(f64, f64) -> Result<PointResidual> + Sync,
{
    grid.validate()?;
    let points = grid.points();
    let results: Vec<Result<PointResidual>> = points.par_iter().map(|&(r, z)| f(r, z)).collect();
    let mut report = ResidualReport {
        grid: *grid,
        n_evaluated: 0,
        n_skipped_singular: 0,
        max_abs_residual: 0.0,
        max_rel_residual: 0.0,
        worst_point: points[0],
    };
    for (point, res) in points.iter().zip(results) {
        match res {
            Ok(Some((abs, rel))) => {
                report.n_evaluated += 1;
                report.max_abs_residual = report.max_abs_residual.max(abs);
                if rel > report.max_rel_residual || report.n_evaluated == 1 {
                    report.max_rel_residual = rel;
                    report.worst_point = *point;
                }
            }
            Ok(None) => report.n_skipped_singular += 1,
            Err(e) if e.is_numerical() => report.n_skipped_singular += 1,
            Err(e) => return Err(e),
        }
    }
    if report.n_evaluated == 0 {
        return Err(Error::EmptyDomain);
    }
    Ok(report)
}

pub(crate) fn relative(terms: &[f64], residual: f64) -> (f64, f64) {
    let scale = terms.iter().fold(SCALE_FLOOR, |m, t| m.max(t.abs()));
    (residual.abs(), residual.abs() / scale)
}

fn r_expr() -> Expr {
    Expr::r()
}

/// `Y_rr + Y_r/r + Y_zz - u Y`, symbolically.
pub fn apply_operator(u: &Potential, y: &SeedSolution) -> Expr {
    let y_r = differentiate(&y.expr, Var::R);
    let y_rr = differentiate(&y_r, Var::R);
    let y_zz = differentiate(&differentiate(&y.expr, Var::Z), Var::Z);
    simplify(&(y_rr + y_r / r_expr() + y_zz - u.expr.clone() * y.expr.clone()))
}

/// Residual of the equation for `y` under `u`, sampled on `grid`.
pub fn residual_report(
    u: &Potential,
    y: &SeedSolution,
    grid: &GridSpec,
    params: &ParameterSet,
) -> Result<ResidualReport> {
    residual_report_excluding(u, y, grid, params, &[])
}

pub fn residual_report_excluding(
    u: &Potential,
    y: &SeedSolution,
    grid: &GridSpec,
    params: &ParameterSet,
    exclusions: &[Exclusion],
) -> Result<ResidualReport> {
    params.check_bound(&u.expr)?;
    params.check_bound(&y.expr)?;
    let y_r = differentiate(&y.expr, Var::R);
    let y_rr = differentiate(&y_r, Var::R);
    let y_zz = differentiate(&differentiate(&y.expr, Var::Z), Var::Z);
    let singular = SingularSet::of([&u.expr, &y.expr, &y_r, &y_rr, &y_zz]);
    let threshold = u.singular_threshold.max(y.singular_threshold);

    sweep(grid, |r, z| {
        if exclusions.iter().any(|x| x.excludes(r, z, params)) {
            return Ok(None);
        }
        if singular.signature(r, z, params, threshold).is_none() {
            return Ok(None);
        }
        let terms = [
            evaluate(&y_rr, r, z, params)?,
            evaluate(&y_r, r, z, params)? / r,
            evaluate(&y_zz, r, z, params)?,
            evaluate(&u.expr, r, z, params)? * evaluate(&y.expr, r, z, params)?,
        ];
        let res = terms[0] + terms[1] + terms[2] - terms[3];
        Ok(Some(relative(&terms, res)))
    })
}

/// Residual of a numerically represented solution, using its propagated
/// second derivatives.
pub fn residual_report_field<F: SolutionField + ?Sized>(
    u: &Potential,
    field: &F,
    grid: &GridSpec,
    params: &ParameterSet,
    exclusions: &[Exclusion],
) -> Result<ResidualReport> {
    params.check_bound(&u.expr)?;
    let u_singular = SingularSet::of([&u.expr]);
    let threshold = u.singular_threshold;
    sweep(grid, |r, z| {
        if exclusions.iter().any(|x| x.excludes(r, z, params)) {
            return Ok(None);
        }
        if u_singular.signature(r, z, params, threshold).is_none() || field.signature(r, z, threshold).is_none() {
            return Ok(None);
        }
        let y = field.jet(r, z)?;
        let terms = [y.d_rr, y.d_r / r, y.d_zz, evaluate(&u.expr, r, z, params)? * y.value];
        let res = terms[0] + terms[1] + terms[2] - terms[3];
        Ok(Some(relative(&terms, res)))
    })
}

/// `u = -h_rr + h_r^2 + h_r/r + 1/r^2 - h_zz + h_z^2`.
pub fn potential_from_h(h: &Expr) -> Potential {
    let h_r = differentiate(h, Var::R);
    let h_z = differentiate(h, Var::Z);
    let h_rr = differentiate(&h_r, Var::R);
    let h_zz = differentiate(&h_z, Var::Z);
    let u = -h_rr + h_r.clone().pow(2) + h_r / r_expr() + Expr::one() / r_expr().pow(2) - h_zz + h_z.pow(2);
    Potential::new(simplify(&u))
}

/// `h = -ln(r Y_h)`; defined only where `r Y_h > 0`.
pub fn h_from_seed(y_h: &SeedSolution) -> Expr {
    simplify(&-(r_expr() * y_h.expr.clone()).ln())
}

/// Checks the first-order system for `W = r Y Y_h` and `Q = r Y_h Ỹ`:
///
/// ```text
/// W_r + 2 h_r W + W/r - Q_z = r (Y_r Y_h - Y Y_h,r) - Q_z
/// W_z + 2 h_z W + Q_r       = r (Y_z Y_h - Y Y_h,z) + Q_r
/// ```
///
/// with `h = -ln(r Y_h)` eliminated, so sign changes of `Y_h` are harmless.
/// The report carries the larger of the two relative residuals.
pub fn wq_consistency(
    y: &SeedSolution,
    y_tilde: &SeedSolution,
    y_h: &SeedSolution,
    grid: &GridSpec,
    params: &ParameterSet,
) -> Result<ResidualReport> {
    for e in [&y.expr, &y_tilde.expr, &y_h.expr] {
        params.check_bound(e)?;
    }
    let r = r_expr;
    let q = simplify(&(r() * y_h.expr.clone() * y_tilde.expr.clone()));
    let q_r = differentiate(&q, Var::R);
    let q_z = differentiate(&q, Var::Z);
    let y_r = differentiate(&y.expr, Var::R);
    let y_z = differentiate(&y.expr, Var::Z);
    let yh_r = differentiate(&y_h.expr, Var::R);
    let yh_z = differentiate(&y_h.expr, Var::Z);
    let singular = SingularSet::of([&y.expr, &y_tilde.expr, &y_h.expr, &q_r, &q_z]);
    let threshold = y.singular_threshold.max(y_tilde.singular_threshold);

    sweep(grid, |rv, zv| {
        if singular.signature(rv, zv, params, threshold).is_none() {
            return Ok(None);
        }
        let ev = |e: &Expr| evaluate(e, rv, zv, params);
        let (yv, yh) = (ev(&y.expr)?, ev(&y_h.expr)?);
        let first = [rv * ev(&y_r)? * yh, rv * yv * ev(&yh_r)?, ev(&q_z)?];
        let second = [rv * ev(&y_z)? * yh, rv * yv * ev(&yh_z)?, ev(&q_r)?];
        let (a1, r1) = relative(&first, first[0] - first[1] - first[2]);
        let (a2, r2) = relative(&second, second[0] - second[1] + second[2]);
        Ok(Some((a1.max(a2), r1.max(r2))))
    })
}

/// Range and sign behaviour of an expression over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub grid: GridSpec,
    pub n_points: usize,
    pub n_singular: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub argmin: Option<(f64, f64)>,
    pub argmax: Option<(f64, f64)>,
    /// Neighbouring regular grid points (along either axis) with values of
    /// strictly opposite sign.
    pub sign_changes: usize,
}

impl ScanReport {
    pub fn finite_everywhere(&self) -> bool {
        self.n_singular == 0
    }

    pub fn negative_everywhere(&self) -> bool {
        self.n_singular == 0 && self.max.is_some_and(|m| m < 0.0)
    }
}

/// Evaluates `expr` on every grid point. A point is singular when evaluation
/// fails or a denominator is within `threshold` of zero relative to its
/// magnitude.
pub fn scan(expr: &Expr, grid: &GridSpec, params: &ParameterSet, threshold: f64) -> Result<ScanReport> {
    grid.validate()?;
    params.check_bound(expr)?;
    let singular = SingularSet::of([expr]);
    let points = grid.points();
    let values: Vec<Option<f64>> = points
        .par_iter()
        .map(|&(r, z)| {
            singular.signature(r, z, params, threshold)?;
            evaluate(expr, r, z, params).ok()
        })
        .collect();
    let mut report = ScanReport {
        grid: *grid,
        n_points: points.len(),
        n_singular: values.iter().filter(|v| v.is_none()).count(),
        min: None,
        max: None,
        argmin: None,
        argmax: None,
        sign_changes: 0,
    };
    for (p, v) in points.iter().zip(&values) {
        let Some(v) = *v else { continue };
        if report.min.is_none_or(|m| v < m) {
            report.min = Some(v);
            report.argmin = Some(*p);
        }
        if report.max.is_none_or(|m| v > m) {
            report.max = Some(v);
            report.argmax = Some(*p);
        }
    }
    let at = |i: usize, j: usize| values[i * grid.n_z + j];
    let flips = |a: Option<f64>, b: Option<f64>| matches!((a, b), (Some(a), Some(b)) if a * b < 0.0);
    for i in 0..grid.n_r {
        for j in 0..grid.n_z {
            if i + 1 < grid.n_r && flips(at(i, j), at(i + 1, j)) {
                report.sign_changes += 1;
            }
            if j + 1 < grid.n_z && flips(at(i, j), at(i, j + 1)) {
                report.sign_changes += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new((0.2, 3.0), (-3.0, 3.0), 30, 30).unwrap()
    }

    fn seed(s: &str) -> SeedSolution {
        SeedSolution::parse(s).unwrap()
    }

    fn pot(s: &str) -> Potential {
        Potential::parse(s).unwrap()
    }

    #[test]
    fn harmonic_seeds_have_zero_operator() {
        let p = ParameterSet::new().with("k", 1.0);
        for (u, y) in [("0", "r^2-2*z^2"), ("-k^2", "sin(k*z)"), ("0", "1/sqrt(r^2+z^2)")] {
            let e = apply_operator(&pot(u), &seed(y));
            for &(r, z) in &[(0.5, 0.3), (1.7, -2.2), (2.9, 1.0)] {
                assert!(evaluate(&e, r, z, &p).unwrap().abs() < 1e-13, "{u} / {y}");
            }
        }
        // the polynomial case simplifies all the way down
        assert_eq!(apply_operator(&pot("0"), &seed("r^2-2*z^2")), Expr::zero());
    }

    #[test]
    fn non_solution_has_order_one_residual() {
        let rep = residual_report(&pot("0"), &seed("r"), &grid(), &ParameterSet::new()).unwrap();
        assert!((rep.max_rel_residual - 1.0).abs() < 1e-12);
        assert_eq!(rep.n_skipped_singular, 0);
    }

    #[test]
    fn helmholtz_seed_is_exact() {
        let p = ParameterSet::new().with("k", 1.0);
        let rep = residual_report(&pot("-k^2"), &seed("sin(k*z)"), &grid(), &p).unwrap();
        assert!(rep.max_rel_residual < 1e-14, "{rep:?}");
        assert_eq!(rep.n_evaluated + rep.n_skipped_singular, grid().len());
    }

    #[test]
    fn first_example_pair_with_exclusion_band() {
        let u = pot("(4*z^4+13*r^4+20*r^2*z^2)/((r^2-2*z^2)^2*r^2)");
        let y = seed("(4*r^2*z^2+r^4+C1)/(r*(r^2-2*z^2))");
        let p = ParameterSet::new().with("C1", 1.0);
        let g = GridSpec::new((0.2, 3.0), (-3.0, 3.0), 50, 50).unwrap();
        let band = Exclusion::new(parse("r^2-2*z^2").unwrap(), 0.05);
        let rep = residual_report_excluding(&u, &y, &g, &p, &[band]).unwrap();
        assert!(rep.max_rel_residual < 1e-8, "{rep:?}");
        assert!(rep.n_skipped_singular > 0);
    }

    #[test]
    fn unbound_parameter_propagates() {
        let err = residual_report(&pot("-k^2"), &seed("sin(k*z)"), &grid(), &ParameterSet::new());
        assert!(matches!(err, Err(Error::UnboundParameter(_))));
    }

    #[test]
    fn all_singular_grid_is_an_error() {
        let g = GridSpec::new((1.0, 2.0), (0.0, 0.0), 3, 2).unwrap();
        let err = residual_report(&pot("0"), &seed("1/z"), &g, &ParameterSet::new());
        assert!(matches!(err, Err(Error::EmptyDomain)));
    }

    fn check_potential(h: &str, expected: &str, params: &ParameterSet, pts: &[(f64, f64)]) {
        let u = potential_from_h(&parse(h).unwrap());
        let want = parse(expected).unwrap();
        for &(r, z) in pts {
            let a = u.eval(r, z, params).unwrap();
            let b = evaluate(&want, r, z, params).unwrap();
            assert!((a - b).abs() <= 1e-11 * (1.0 + b.abs()), "{h} at ({r},{z}): {a} vs {b}");
        }
    }

    #[test]
    fn potential_from_h_examples() {
        let p = ParameterSet::new().with("k", 1.0);
        let pts = [(0.4, 0.7), (1.3, 2.1), (2.5, 0.2)];
        check_potential("-ln(r)", "0", &p, &pts);
        check_potential("-ln(r*sin(k*z))", "-k^2", &p, &pts);
        // r^2 - 2 z^2 > 0 at these points
        check_potential("-ln(r*(r^2-2*z^2))", "0", &p, &[(1.0, 0.1), (2.0, 0.5), (3.0, -1.2)]);
    }

    #[test]
    fn h_from_seed_examples() {
        let p = ParameterSet::new().with("k", 1.0);
        let h = h_from_seed(&seed("1/r"));
        assert!(evaluate(&h, 2.3, 0.4, &p).unwrap().abs() < 1e-15);
        let h = h_from_seed(&seed("sin(k*z)"));
        let v = evaluate(&h, 2.0, 0.5, &p).unwrap();
        assert!((v + (2.0 * 0.5f64.sin()).ln()).abs() < 1e-15);
        let h = h_from_seed(&seed("r^2-2*z^2"));
        assert!(matches!(evaluate(&h, 1.0, 1.0, &p), Err(Error::Domain { .. })));
    }

    #[test]
    fn h_round_trip_recovers_seed() {
        let p = ParameterSet::new().with("k", 1.0);
        let y_h = seed("exp(r*z)*(2+sin(k*z))");
        let h = h_from_seed(&y_h);
        let back = simplify(&(Expr::one() / Expr::r() * (-h).exp()));
        for &(r, z) in &[(0.3, 0.2), (1.5, -0.7), (2.2, 1.1)] {
            let a = evaluate(&back, r, z, &p).unwrap();
            let b = y_h.eval(r, z, &p).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn scan_reports_range_and_singularities() {
        let g = GridSpec::new((0.5, 2.0), (-1.0, 1.0), 3, 5).unwrap();
        let p = ParameterSet::new();
        let rep = scan(&parse("r - 1").unwrap(), &g, &p, 1e-8).unwrap();
        assert_eq!((rep.min, rep.max), (Some(-0.5), Some(1.0)));
        assert_eq!(rep.sign_changes, 5);
        assert!(rep.finite_everywhere() && !rep.negative_everywhere());
        let rep = scan(&parse("1/z").unwrap(), &g, &p, 1e-8).unwrap();
        assert_eq!(rep.n_singular, 3);
    }

    #[test]
    fn wq_trivial_pair_is_exact() {
        let y_h = seed("r^2-2*z^2");
        let partner = seed("1/(r*(r^2-2*z^2))");
        let rep = wq_consistency(&y_h, &partner, &y_h, &grid(), &ParameterSet::new()).unwrap();
        assert!(rep.max_abs_residual < 1e-12, "{rep:?}");
    }

    #[test]
    fn wq_first_example_triple() {
        let y_tilde = seed("-(4*r^2*z^2+r^4+C1)/(4*r*(r^2-2*z^2))");
        let p = ParameterSet::new().with("C1", 0.0);
        let rep = wq_consistency(&seed("z"), &y_tilde, &seed("r^2-2*z^2"), &grid(), &p).unwrap();
        assert!(rep.max_rel_residual < 1e-8, "{rep:?}");
    }

    #[test]
    fn wq_rejects_unrelated_partner() {
        let rep = wq_consistency(
            &seed("z"),
            &seed("exp(r)*cos(z)"),
            &seed("r^2-2*z^2"),
            &grid(),
            &ParameterSet::new(),
        )
        .unwrap();
        assert!(rep.max_rel_residual > 0.1);
    }
}
