//! Worked examples as fixtures: inputs, the published closed forms, default
//! parameters and the sign/regularity claims made about each result.
//!
//! Expected expressions are stored as written in the source material, never
//! regenerated by this crate, so that [`verify_entry`] compares the
//! transformation code against an independent oracle.

use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exprlang::{evaluate, parse, Expr, ParameterSet};
use crate::moutard::{
    trivial_partner, FieldOptions, GaugeFit, SolutionSource, TransformStep, TransformedSolutionField,
};
use crate::quadrature::GridSpec;
use crate::schrodinger::{
    residual_report, residual_report_field, scan, Exclusion, Potential, SeedSolution, SingularSet,
    DEFAULT_SINGULAR_THRESHOLD,
};

const RHO: &str = "sqrt(r^2 + z^2)";
const RHO3: &str = "sqrt(r^2 + (z + z0)^2)";

const U1: &str = "(4*z^4 + 13*r^4 + 20*r^2*z^2)/((r^2 - 2*z^2)^2*r^2)";
const Y1: &str = "(4*r^2*z^2 + r^4 + C1)/(r*(r^2 - 2*z^2))";
const UU1: &str = "(-8*r^2*((r^2 - 5*z^2)^2 - 33*z^4) - 8*C1*(5*r^2 + 2*z^2))/(4*r^2*z^2 + r^4 + C1)^2";
const YS1: &str = "r*z/((r^2 - 2*z^2)*sqrt(r^2 + z^2))";
const YYS1: &str = "(3*r^4 - C1)/(sqrt(r^2 + z^2)*(4*r^2*z^2 + r^4 + C1))";
const U2: &str = "-k^2 + 1/r^2 + 2*k^2/sin(k*z)^2";
const Y2: &str = "(r^2 + C2)/(r*sin(k*z))";
const UU2: &str = "-k^2 + 4/(r^2 + C2) - 8*C2/(r^2 + C2)^2";
const YY2: &str = "sin(k*z)/(r^2 + C2)";

fn ex3(template: &str) -> String {
    template.replace("RHO", RHO3)
}

/// A gridded claim about a stage's potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// No singular grid points.
    Finite,
    /// Finite and strictly negative on every grid point.
    Negative,
}

/// Condition on the parameters under which the published potential has the
/// stated property, plus the scan that confirms the property.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideCondition {
    /// Expression that must be positive for the condition to hold.
    pub predicate: String,
    /// Human-readable form of `predicate > 0`.
    pub condition: String,
    pub claim: String,
    pub stage: usize,
    pub grid: GridSpec,
    pub expect: Expectation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// Compare directly.
    Exact,
    /// Compare after fitting `α Ỹ + β / (r Y_h)` at two points.
    Fit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolutionInput {
    /// A closed-form solution of the stage's input potential.
    Closed(String),
    /// The solution transported at the previous stage.
    Carried,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spot {
    pub at: (f64, f64),
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageSolution {
    pub input: SolutionInput,
    pub expected: String,
    pub gauge: Gauge,
    pub additive_constant: f64,
    pub basepoint: (f64, f64),
    /// Box the comparison points are drawn from; it lies inside the
    /// basepoint's component of the regular set.
    pub sample_box: GridSpec,
    pub tolerance: f64,
    pub spots: Vec<Spot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub y_h: String,
    pub expected_potential: String,
    pub potential_spots: Vec<Spot>,
    pub solution: Option<StageSolution>,
    /// Published form of `1/(r Y_h)` under the new potential.
    pub expected_partner: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusionSpec {
    pub expr: String,
    pub min_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub summary: String,
    pub u: String,
    pub stages: Vec<Stage>,
    pub params_default: ParameterSet,
    pub region: GridSpec,
    /// Bands around singular curves left out of random sampling.
    pub exclusions: Vec<ExclusionSpec>,
    pub side_conditions: Vec<SideCondition>,
}

fn grid(r: (f64, f64), z: (f64, f64), n_r: usize, n_z: usize) -> GridSpec {
    GridSpec::new(r, z, n_r, n_z).expect("static grid is valid")
}

fn region() -> GridSpec {
    grid((0.1, 5.0), (-5.0, 5.0), 41, 41)
}

fn exclusion(expr: &str, min_abs: f64) -> ExclusionSpec {
    ExclusionSpec {
        expr: expr.to_string(),
        min_abs,
    }
}

fn spot(r: f64, z: f64, value: f64) -> Spot {
    Spot { at: (r, z), value }
}

fn fitted(input: SolutionInput, expected: &str, basepoint: (f64, f64), sample_box: GridSpec) -> StageSolution {
    StageSolution {
        input,
        expected: expected.to_string(),
        gauge: Gauge::Fit,
        additive_constant: 0.0,
        basepoint,
        sample_box,
        tolerance: 1e-6,
        spots: Vec::new(),
    }
}

fn stage(y_h: &str, expected_potential: &str) -> Stage {
    Stage {
        y_h: y_h.to_string(),
        expected_potential: expected_potential.to_string(),
        potential_spots: Vec::new(),
        solution: None,
        expected_partner: None,
    }
}

fn build() -> Vec<CatalogEntry> {
    let cone = || vec![exclusion("r^2 - 2*z^2", 0.05)];
    let exterior = grid((1.5, 5.0), (-1.0, 1.0), 2, 2);

    let trivial = CatalogEntry {
        name: "trivial-pair".into(),
        summary: "Y = Y_h: the one-form vanishes and the transported solution is c/(r Y_h)".into(),
        u: "0".into(),
        stages: vec![Stage {
            solution: Some(StageSolution {
                gauge: Gauge::Exact,
                additive_constant: 1.0,
                ..fitted(
                    SolutionInput::Closed("r^2 - 2*z^2".into()),
                    "1/(r*(r^2 - 2*z^2))",
                    (1.0, 0.0),
                    region(),
                )
            }),
            ..stage("r^2 - 2*z^2", U1)
        }],
        params_default: ParameterSet::new(),
        region: region(),
        exclusions: cone(),
        side_conditions: vec![],
    };

    let ex1_first_stage = Stage {
        potential_spots: vec![spot(1.0, 1.0, 37.0)],
        solution: Some(fitted(SolutionInput::Closed("z".into()), Y1, (1.0, 0.0), region())),
        ..stage("r^2 - 2*z^2", U1)
    };
    let ex1_first = CatalogEntry {
        name: "ex1-first".into(),
        summary: "harmonic quadratic seed; first transformation of u = 0".into(),
        u: "0".into(),
        stages: vec![ex1_first_stage.clone()],
        params_default: ParameterSet::new().with("C1", 1.0),
        region: region(),
        exclusions: cone(),
        side_conditions: vec![],
    };

    let ex1_second = CatalogEntry {
        name: "ex1-second".into(),
        summary: "second transformation with the first stage's solution as seed".into(),
        u: "0".into(),
        stages: vec![
            ex1_first_stage,
            Stage {
                potential_spots: vec![spot(1.0, 0.0, -12.0)],
                solution: Some(fitted(SolutionInput::Closed(YS1.into()), YYS1, (2.0, 0.0), exterior)),
                expected_partner: Some("(r^2 - 2*z^2)/(4*r^2*z^2 + r^4 + C1)".into()),
                ..stage(Y1, UU1)
            },
        ],
        params_default: ParameterSet::new().with("C1", 1.0),
        region: region(),
        exclusions: cone(),
        side_conditions: vec![SideCondition {
            predicate: "C1".into(),
            condition: "C1 > 0".into(),
            claim: "second-stage potential is free of singular points".into(),
            stage: 2,
            grid: grid((0.05, 5.0), (-5.0, 5.0), 200, 200),
            expect: Expectation::Finite,
        }],
    };

    let ex1_carried = CatalogEntry {
        name: "ex1-carried".into(),
        summary: "the point-source solution 1/rho carried through both transformations".into(),
        u: "0".into(),
        stages: vec![
            Stage {
                solution: Some(fitted(
                    SolutionInput::Closed(format!("1/{RHO}")),
                    YS1,
                    (1.0, 0.0),
                    region(),
                )),
                ..stage("r^2 - 2*z^2", U1)
            },
            Stage {
                solution: Some(StageSolution {
                    tolerance: 1e-5,
                    spots: vec![spot(1.0, 1.0, 3.0 / (5.0 * 2f64.sqrt()))],
                    ..fitted(
                        SolutionInput::Carried,
                        YYS1,
                        (1.0, 2.0),
                        grid((0.2, 2.5), (2.0, 5.0), 2, 2),
                    )
                }),
                ..stage(Y1, UU1)
            },
        ],
        params_default: ParameterSet::new().with("C1", 0.0),
        region: region(),
        exclusions: cone(),
        side_conditions: vec![],
    };

    let k_band = || vec![exclusion("sin(k*z)", 0.05)];
    let ex2_first_stage = Stage {
        potential_spots: vec![spot(1.0, FRAC_PI_2, 2.0)],
        solution: Some(fitted(
            SolutionInput::Closed("cos(k*z)".into()),
            Y2,
            (1.0, 1.0),
            region(),
        )),
        ..stage("sin(k*z)", U2)
    };
    let ex2_first = CatalogEntry {
        name: "ex2-first".into(),
        summary: "plane-wave seed of the Helmholtz case u = -k^2".into(),
        u: "-k^2".into(),
        stages: vec![ex2_first_stage.clone()],
        params_default: ParameterSet::new().with("k", 1.0).with("C2", 5.0),
        region: region(),
        exclusions: k_band(),
        side_conditions: vec![],
    };
    let ex2_second = CatalogEntry {
        name: "ex2-second".into(),
        summary: "second transformation of the Helmholtz case".into(),
        u: "-k^2".into(),
        stages: vec![
            ex2_first_stage,
            Stage {
                potential_spots: vec![spot(1.0, 0.3, -13.0 / 9.0), spot(1.0, 2.0, -13.0 / 9.0)],
                expected_partner: Some(YY2.into()),
                ..stage(Y2, UU2)
            },
        ],
        params_default: ParameterSet::new().with("k", 1.0).with("C2", 5.0),
        region: region(),
        exclusions: k_band(),
        side_conditions: vec![SideCondition {
            predicate: "C2 - 4/k^2".into(),
            condition: "C2 > 4/k^2".into(),
            claim: "second-stage potential is negative".into(),
            stage: 2,
            grid: grid((0.05, 10.0), (-5.0, 5.0), 200, 21),
            expect: Expectation::Negative,
        }],
    };

    let ex3_yh = ex3("sin(k*RHO)/RHO");
    let ex3_first_stage = Stage {
        solution: Some(fitted(
            SolutionInput::Closed(ex3("cos(k*RHO)/RHO")),
            &ex3("(z + z0 + C3*RHO)/(sin(k*RHO)*r)"),
            (1.0, 0.0),
            region(),
        )),
        ..stage(&ex3_yh, &ex3("-k^2 + 1/r^2 + 2*k^2/sin(k*RHO)^2 - 2*k*cot(k*RHO)/RHO"))
    };
    let ex3_params = ParameterSet::new().with("k", 2.0).with("z0", 3.0).with("C3", 1.0);
    let spherical_band = || vec![exclusion(&ex3("sin(k*RHO)"), 0.05)];
    let ex3_first = CatalogEntry {
        name: "ex3-first".into(),
        summary: "spherical-wave seeds centred at z = -z0".into(),
        u: "-k^2".into(),
        stages: vec![ex3_first_stage.clone()],
        params_default: ex3_params.clone(),
        region: region(),
        exclusions: spherical_band(),
        side_conditions: vec![],
    };
    let ex3_second = CatalogEntry {
        name: "ex3-second".into(),
        summary: "second transformation of the spherical-wave case".into(),
        u: "-k^2".into(),
        stages: vec![
            ex3_first_stage,
            Stage {
                expected_partner: Some(ex3("sin(k*RHO)/(z + z0 + C3*RHO)")),
                ..stage(
                    &ex3("(z + z0 + C3*RHO)/(sin(k*RHO)*r)"),
                    &ex3("-k^2 + 2*(z + z0 + C3*RHO)^(-2) + 2*C3*(z + z0)/(RHO*(z + z0 + C3*RHO)^2)"),
                )
            },
        ],
        params_default: ex3_params,
        region: region(),
        exclusions: spherical_band(),
        side_conditions: vec![SideCondition {
            predicate: "k^2 - 2/(z0^2*(1 + C3))".into(),
            condition: "2/(z0^2*(1 + C3)) < k^2".into(),
            claim: "second-stage potential is negative for z >= 0".into(),
            stage: 2,
            grid: grid((0.05, 10.0), (0.0, 10.0), 100, 100),
            expect: Expectation::Negative,
        }],
    };

    vec![
        trivial,
        ex1_first,
        ex1_second,
        ex1_carried,
        ex2_first,
        ex2_second,
        ex3_first,
        ex3_second,
    ]
}

/// All built-in entries.
pub fn entries() -> &'static [CatalogEntry] {
    static ENTRIES: OnceLock<Vec<CatalogEntry>> = OnceLock::new();
    ENTRIES.get_or_init(build)
}

pub fn list_entries() -> Vec<&'static str> {
    entries().iter().map(|e| e.name.as_str()).collect()
}

pub fn get_entry(name: &str) -> Result<&'static CatalogEntry> {
    entries()
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownEntry(name.to_string()))
}

/// The whole catalog as one JSON array.
pub fn export_json() -> String {
    serde_json::to_string_pretty(entries()).expect("catalog serializes")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub potential: f64,
    pub residual: f64,
    pub quadrature: f64,
    pub n_random: usize,
    pub n_held_out: usize,
    /// Grid for seed checks and closed-form residuals.
    pub residual_grid: GridSpec,
    /// Grid for residuals of transported solutions.
    pub field_grid: GridSpec,
    pub seed: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            potential: 1e-9,
            residual: 1e-7,
            quadrature: 1e-10,
            n_random: 100,
            n_held_out: 50,
            residual_grid: GridSpec::standard(5.0, 41),
            field_grid: GridSpec::standard(5.0, 41),
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn below(name: impl Into<String>, measured: f64, tolerance: f64) -> Check {
        Check {
            name: name.into(),
            passed: measured < tolerance,
            measured,
            tolerance,
            detail: None,
        }
    }

    fn failed(name: impl Into<String>, err: &Error) -> Check {
        Check {
            name: name.into(),
            passed: false,
            measured: f64::NAN,
            tolerance: f64::NAN,
            detail: Some(err.to_string()),
        }
    }

    fn with_detail(mut self, detail: String) -> Check {
        self.detail = Some(detail);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub entry: String,
    pub params: ParameterSet,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Everything an entry's run produced, for callers that need more than the
/// pass/fail summary.
pub struct EntryRun {
    pub report: VerifyReport,
    pub steps: Vec<TransformStep>,
    pub fields: Vec<(usize, Arc<TransformedSolutionField>)>,
}

fn exclusions(entry: &CatalogEntry) -> Result<Vec<Exclusion>> {
    entry
        .exclusions
        .iter()
        .map(|x| Ok(Exclusion::new(parse(&x.expr)?, x.min_abs)))
        .collect()
}

/// Deterministic uniform points of `region` outside every exclusion band
/// that also satisfy `accept`.
pub fn sample_points(
    region: &GridSpec,
    exclusions: &[Exclusion],
    params: &ParameterSet,
    n: usize,
    seed: u64,
    mut accept: impl FnMut(f64, f64) -> bool,
) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n * 200 {
        if out.len() == n {
            break;
        }
        let r = rng.gen_range(region.r_min..=region.r_max);
        let z = rng.gen_range(region.z_min..=region.z_max);
        let banned = exclusions
            .iter()
            .any(|x| evaluate(&x.expr, r, z, params).map_or(true, |v| v.abs() < x.min_abs));
        if !banned && accept(r, z) {
            out.push((r, z));
        }
    }
    out
}

/// Largest `|a - b| / max(|a|, |b|)` over the sample points, with the point.
fn max_relative_difference(
    a: &Expr,
    b: &Expr,
    points: &[(f64, f64)],
    params: &ParameterSet,
) -> Result<(f64, (f64, f64))> {
    let mut worst = (0.0, (f64::NAN, f64::NAN));
    for &(r, z) in points {
        let x = evaluate(a, r, z, params)?;
        let y = evaluate(b, r, z, params)?;
        let rel = (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE);
        if rel > worst.0 {
            worst = (rel, (r, z));
        }
    }
    Ok(worst)
}

/// Random regular points on which `exprs` all evaluate.
pub fn regular_points(
    exprs: &[&Expr],
    region: &GridSpec,
    exclusions: &[Exclusion],
    params: &ParameterSet,
    n: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    let singular = SingularSet::of(exprs.iter().copied());
    sample_points(region, exclusions, params, n, seed, |r, z| {
        singular.signature(r, z, params, 1e-6).is_some() && exprs.iter().all(|e| evaluate(e, r, z, params).is_ok())
    })
}

struct Runner<'a> {
    entry: &'a CatalogEntry,
    params: ParameterSet,
    tol: Tolerances,
    excl: Vec<Exclusion>,
    checks: Vec<Check>,
}

impl Runner<'_> {
    fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    fn record(&mut self, name: String, outcome: Result<Check>) {
        match outcome {
            Ok(c) => self.push(c),
            Err(e) => self.push(Check::failed(name, &e)),
        }
    }

    fn potential_checks(&mut self, i: usize, stage: &Stage, computed: &Potential) -> Result<()> {
        let expected = parse(&stage.expected_potential)?;
        let name = format!("stage {i}: potential matches the published form");
        let pts = regular_points(
            &[&computed.expr, &expected],
            &self.entry.region,
            &self.excl,
            &self.params,
            self.tol.n_random,
            self.tol.seed + i as u64,
        );
        let outcome = if pts.len() < self.tol.n_random {
            Err(Error::EmptyDomain)
        } else {
            max_relative_difference(&computed.expr, &expected, &pts, &self.params).map(|(rel, at)| {
                Check::below(name.clone(), rel, self.tol.potential).with_detail(format!(
                    "{} points, worst at ({:.4}, {:.4})",
                    pts.len(),
                    at.0,
                    at.1
                ))
            })
        };
        self.record(name, outcome);

        for s in &stage.potential_spots {
            let name = format!("stage {i}: potential at ({}, {})", s.at.0, s.at.1);
            let outcome = computed
                .eval(s.at.0, s.at.1, &self.params)
                .map(|v| Check::below(name.clone(), rel_diff(v, s.value), 1e-10).with_detail(format!("value {v}")));
            self.record(name, outcome);
        }

        let expected_u = Potential::new(expected);
        if let Some(partner) = &stage.expected_partner {
            let name = format!("stage {i}: published partner solves the published potential");
            let outcome = SeedSolution::parse(partner).and_then(|y| {
                residual_report(&expected_u, &y, &self.tol.residual_grid, &self.params)
                    .map(|rep| Check::below(name.clone(), rep.max_rel_residual, self.tol.residual))
            });
            self.record(name, outcome);
        }
        if let Some(sol) = &stage.solution {
            let name = format!("stage {i}: published solution solves the published potential");
            let outcome = SeedSolution::parse(&sol.expected).and_then(|y| {
                residual_report(&expected_u, &y, &self.tol.residual_grid, &self.params)
                    .map(|rep| Check::below(name.clone(), rep.max_rel_residual, self.tol.residual))
            });
            self.record(name, outcome);
        }
        Ok(())
    }

    fn transport(
        &mut self,
        i: usize,
        sol: &StageSolution,
        y_h: &SeedSolution,
        u_tilde: &Potential,
        prev: Option<Arc<TransformedSolutionField>>,
    ) -> Result<Option<Arc<TransformedSolutionField>>> {
        let source = match (&sol.input, prev) {
            (SolutionInput::Closed(text), _) => SolutionSource::Closed(SeedSolution::parse(text)?),
            (SolutionInput::Carried, Some(prev)) => SolutionSource::Carried(prev),
            (SolutionInput::Carried, None) => {
                self.push(Check::failed(
                    format!("stage {i}: transported solution"),
                    &Error::SingularPoint {
                        at: sol.basepoint,
                        what: "no solution was transported at the previous stage",
                    },
                ));
                return Ok(None);
            }
        };
        let opts = FieldOptions {
            additive_constant: sol.additive_constant,
            tol: self.tol.quadrature,
            ..FieldOptions::at(sol.basepoint)
        };
        let name = format!("stage {i}: transported solution matches the published form");
        let field = match TransformedSolutionField::new(source, y_h, &self.params, opts) {
            Ok(f) => Arc::new(f),
            Err(e) => {
                self.push(Check::failed(name, &e));
                return Ok(None);
            }
        };
        let expected = parse(&sol.expected)?;
        let partner = trivial_partner(y_h).expr;
        let comparison = self.compare_solution(sol, &field, &expected, &partner);
        self.record(name.clone(), comparison.map(|c| Check { name, ..c }));

        let name = format!("stage {i}: transported solution solves the new potential");
        let outcome =
            residual_report_field(u_tilde, field.as_ref(), &self.tol.field_grid, &self.params, &[]).map(|rep| {
                Check::below(name.clone(), rep.max_rel_residual, self.tol.residual).with_detail(format!(
                    "{} evaluated, {} skipped",
                    rep.n_evaluated, rep.n_skipped_singular
                ))
            });
        self.record(name, outcome);
        Ok(Some(field))
    }

    fn compare_solution(
        &mut self,
        sol: &StageSolution,
        field: &TransformedSolutionField,
        expected: &Expr,
        partner: &Expr,
    ) -> Result<Check> {
        let params = self.params.clone();
        let need = self.tol.n_held_out + 2;
        let mut triples = Vec::with_capacity(need);
        let points = sample_points(
            &sol.sample_box,
            &self.excl,
            &params,
            need,
            self.tol.seed ^ 0xf1e1d,
            |r, z| {
                let sample = (|| -> Result<(f64, f64, f64)> {
                    Ok((
                        field.value(r, z)?,
                        evaluate(partner, r, z, &params)?,
                        evaluate(expected, r, z, &params)?,
                    ))
                })();
                match sample {
                    Ok(t) => {
                        triples.push(t);
                        true
                    }
                    Err(_) => false,
                }
            },
        );
        if points.len() < need {
            return Err(Error::EmptyDomain);
        }
        let gauge = match sol.gauge {
            Gauge::Exact => GaugeFit { alpha: 1.0, beta: 0.0 },
            Gauge::Fit => GaugeFit::fit([triples[0], triples[1]])?,
        };
        let held_out = if sol.gauge == Gauge::Fit {
            &triples[2..]
        } else {
            &triples[..]
        };
        let mut worst = 0.0f64;
        for &(n, p, e) in held_out {
            let scale = e.abs().max((gauge.alpha * n).abs()).max((gauge.beta * p).abs());
            worst = worst.max((gauge.apply(n, p) - e).abs() / scale.max(f64::MIN_POSITIVE));
        }
        let mut detail = format!(
            "alpha = {:.12}, beta = {:.6e}, {} held-out points",
            gauge.alpha,
            gauge.beta,
            held_out.len()
        );
        for s in &sol.spots {
            let (r, z) = s.at;
            let v = gauge.apply(field.value(r, z)?, evaluate(partner, r, z, &params)?);
            let rel = rel_diff(v, s.value);
            worst = worst.max(rel);
            detail.push_str(&format!("; at ({r}, {z}): {v:.10}"));
        }
        Ok(Check::below("", worst, sol.tolerance).with_detail(detail))
    }

    fn side_conditions(&mut self, steps: &[TransformStep]) -> Result<()> {
        for sc in &self.entry.side_conditions {
            let name = format!("side condition {}", sc.condition);
            let holds = evaluate(&parse(&sc.predicate)?, 1.0, 0.0, &self.params)?;
            if holds <= 0.0 {
                self.push(Check {
                    name,
                    passed: false,
                    measured: holds,
                    tolerance: 0.0,
                    detail: Some("condition does not hold for these parameters".into()),
                });
                continue;
            }
            let stage = &self.entry.stages[sc.stage - 1];
            let targets = [
                ("published", Some(parse(&stage.expected_potential)?)),
                ("computed", steps.get(sc.stage - 1).map(|s| s.u_tilde.expr.clone())),
            ];
            for (label, expr) in targets {
                let Some(expr) = expr else { continue };
                let name = format!("{name}: {} ({label})", sc.claim);
                // the computed form may carry removable singularities, so only
                // its regular points are held to the claim
                let outcome = scan(&expr, &sc.grid, &self.params, DEFAULT_SINGULAR_THRESHOLD).map(|rep| {
                    let strict = label == "published" || sc.expect == Expectation::Finite;
                    let regular_ok = rep.n_singular == 0 || !strict;
                    let passed = regular_ok
                        && match sc.expect {
                            Expectation::Finite => true,
                            Expectation::Negative => rep.max.is_some_and(|m| m < 0.0),
                        };
                    Check {
                        name: name.clone(),
                        passed,
                        measured: rep.max.unwrap_or(f64::NAN),
                        tolerance: 0.0,
                        detail: Some(format!(
                            "{} points, {} singular, range [{:.6}, {:.6}]",
                            rep.n_points,
                            rep.n_singular,
                            rep.min.unwrap_or(f64::NAN),
                            rep.max.unwrap_or(f64::NAN)
                        )),
                    }
                });
                self.record(name, outcome);
            }
        }
        Ok(())
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs every stage of `entry`: seed verification, the transformed potential
/// against the published one, published and trivial partners, transported
/// solutions, and the side-condition scans. `params` override the defaults.
pub fn run_entry(entry: &CatalogEntry, params: &ParameterSet, tol: &Tolerances) -> Result<EntryRun> {
    let params = entry.params_default.merged(params);
    let mut run = Runner {
        entry,
        params: params.clone(),
        tol: *tol,
        excl: exclusions(entry)?,
        checks: Vec::new(),
    };
    let mut u = Potential::parse(&entry.u)?;
    let mut steps = Vec::new();
    let mut fields = Vec::new();
    let mut prev_field = None;
    for (idx, stage) in entry.stages.iter().enumerate() {
        let i = idx + 1;
        let y_h = SeedSolution::parse(&stage.y_h)?;
        let step = match TransformStep::new(&u, &y_h, &params, &tol.residual_grid, tol.residual) {
            Ok(s) => s,
            Err(e) => {
                run.push(Check::failed(format!("stage {i}: seed solves the input potential"), &e));
                break;
            }
        };
        run.push(Check::below(
            format!("stage {i}: seed solves the input potential"),
            step.verification.max_rel_residual,
            tol.residual,
        ));
        run.potential_checks(i, stage, &step.u_tilde)?;

        let name = format!("stage {i}: trivial partner solves the new potential");
        let outcome = residual_report(&step.u_tilde, &trivial_partner(&y_h), &tol.residual_grid, &params)
            .map(|rep| Check::below(name.clone(), rep.max_rel_residual, tol.residual));
        run.record(name, outcome);

        prev_field = match &stage.solution {
            Some(sol) => run.transport(i, sol, &y_h, &step.u_tilde, prev_field.take())?,
            None => None,
        };
        if let Some(f) = &prev_field {
            fields.push((i, f.clone()));
        }
        u = step.u_tilde.clone();
        steps.push(step);
    }
    run.side_conditions(&steps)?;
    let passed = run.checks.iter().all(|c| c.passed);
    Ok(EntryRun {
        report: VerifyReport {
            entry: entry.name.clone(),
            params,
            passed,
            checks: run.checks,
        },
        steps,
        fields,
    })
}

pub fn verify_entry(name: &str, params: &ParameterSet, tol: &Tolerances) -> Result<VerifyReport> {
    Ok(run_entry(get_entry(name)?, params, tol)?.report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_lookup() {
        let names = list_entries();
        for n in [
            "trivial-pair",
            "ex1-first",
            "ex1-second",
            "ex1-carried",
            "ex2-first",
            "ex2-second",
            "ex3-first",
            "ex3-second",
        ] {
            assert!(names.contains(&n), "{n}");
        }
        assert!(matches!(get_entry("nope"), Err(Error::UnknownEntry(_))));
        let e = get_entry("ex2-second").unwrap();
        assert_eq!(e.side_conditions[0].condition, "C2 > 4/k^2");
        assert_eq!(get_entry("ex1-second").unwrap().side_conditions[0].condition, "C1 > 0");
    }

    #[test]
    fn every_expression_parses() {
        for e in entries() {
            parse(&e.u).unwrap();
            for s in &e.stages {
                parse(&s.y_h).unwrap();
                parse(&s.expected_potential).unwrap();
                if let Some(p) = &s.expected_partner {
                    parse(p).unwrap();
                }
                if let Some(sol) = &s.solution {
                    parse(&sol.expected).unwrap();
                }
            }
        }
        let free = parse(&get_entry("ex3-first").unwrap().stages[0].expected_potential)
            .unwrap()
            .free_symbols();
        assert_eq!(free.into_iter().collect::<Vec<_>>(), ["k", "r", "z", "z0"]);
    }

    #[test]
    fn export_round_trips() {
        let back: Vec<CatalogEntry> = serde_json::from_str(&export_json()).unwrap();
        assert_eq!(back, entries());
    }

    #[test]
    fn first_example_verifies() {
        let rep = verify_entry("ex1-first", &ParameterSet::new(), &Tolerances::default()).unwrap();
        for c in &rep.checks {
            assert!(c.passed, "{c:?}");
        }
    }
}
