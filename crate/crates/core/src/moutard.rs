//! The transformation itself: new potentials from a seed, the exact one-form
//! whose potential `P = r Y_h Ỹ` carries a solution across, numerical
//! transport of solutions, and repeated application.
//!
//! With `Y_h = e^{-h}/r` the transformed exponent is `-h - ln r`, and the
//! potential map reads
//!
//! ```text
//! ũ = u - 2 (ln Y_h)_rr - 2 (ln Y_h)_zz + 1/r^2
//! ```
//!
//! which is evaluated in the rational form `(f'' f - f'^2) / f^2` so that seeds
//! changing sign are fine.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exprlang::{
    differentiate, evaluate, evaluate_hyperdual, magnitude, simplify, Expr, HyperDual, ParameterSet, Var,
};
use crate::quadrature::{integrate_segment, line_integral, plan_path, ExactForm, GridSpec, PathPlan, Sweep};
use crate::schrodinger::{
    relative, residual_report, residual_report_field, sweep, Potential, ResidualReport, SeedSolution, SingularSet,
    SolutionField,
};

/// Residual tolerance a seed must meet before it is used.
pub const SEED_TOLERANCE: f64 = 1e-7;
/// Default relative tolerance of the line integrals.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;
/// Default exclusion margin of path probes.
pub const DEFAULT_MARGIN: f64 = 1e-6;

fn r() -> Expr {
    Expr::r()
}

/// `(f_vv f - f_v^2) / f^2`, the second log-derivative without the log.
fn log_second(f: &Expr, var: Var) -> Expr {
    let f_v = differentiate(f, var);
    let f_vv = differentiate(&f_v, var);
    (f_vv * f.clone() - f_v.pow(2)) / f.clone().pow(2)
}

/// Transformed potential without any verification of the seed.
pub fn transformed_potential(u: &Potential, y_h: &SeedSolution) -> Potential {
    let g = &y_h.expr;
    let e = u.expr.clone() - Expr::int(2) * log_second(g, Var::R) - Expr::int(2) * log_second(g, Var::Z)
        + Expr::one() / r().pow(2);
    Potential {
        expr: simplify(&e),
        region: u.region,
        singular_threshold: u.singular_threshold,
    }
}

/// `ũ = u + 2 h_rr + 2 h_zz - 1/r^2`. Defined only where `r Y_h > 0` when
/// `h` comes from a seed.
pub fn transform_potential_from_h(u: &Potential, h: &Expr) -> Potential {
    let h_rr = differentiate(&differentiate(h, Var::R), Var::R);
    let h_zz = differentiate(&differentiate(h, Var::Z), Var::Z);
    let e = u.expr.clone() + Expr::int(2) * h_rr + Expr::int(2) * h_zz - Expr::one() / r().pow(2);
    Potential {
        expr: simplify(&e),
        region: u.region,
        singular_threshold: u.singular_threshold,
    }
}

/// Checks that `y_h` is a nonzero solution under `u` on `grid`.
pub fn verify_seed(
    u: &Potential,
    y_h: &SeedSolution,
    params: &ParameterSet,
    grid: &GridSpec,
    tol: f64,
) -> Result<ResidualReport> {
    if y_h.expr.is_zero() {
        return Err(Error::DegenerateSeed);
    }
    params.check_bound(&y_h.expr)?;
    let nonzero = grid
        .points()
        .iter()
        .any(|&(r, z)| y_h.eval(r, z, params).is_ok_and(|v| v != 0.0));
    if !nonzero {
        return Err(Error::DegenerateSeed);
    }
    let report = residual_report(u, y_h, grid, params)?;
    if !report.passes(tol) {
        return Err(Error::SeedNotSolution {
            max_rel: report.max_rel_residual,
            tol,
        });
    }
    Ok(report)
}

/// One application of the transformation with its verification record.
#[derive(Clone, Debug, Serialize)]
pub struct TransformStep {
    #[serde(serialize_with = "as_text")]
    pub u: Potential,
    #[serde(serialize_with = "as_text")]
    pub y_h: SeedSolution,
    #[serde(serialize_with = "as_text")]
    pub u_tilde: Potential,
    pub verification: ResidualReport,
    pub params: ParameterSet,
}

trait HasExpr {
    fn expr(&self) -> &Expr;
}
impl HasExpr for Potential {
    fn expr(&self) -> &Expr {
        &self.expr
    }
}
impl HasExpr for SeedSolution {
    fn expr(&self) -> &Expr {
        &self.expr
    }
}

fn as_text<T: HasExpr, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v.expr())
}

impl TransformStep {
    pub fn new(
        u: &Potential,
        y_h: &SeedSolution,
        params: &ParameterSet,
        grid: &GridSpec,
        tol: f64,
    ) -> Result<TransformStep> {
        let verification = verify_seed(u, y_h, params, grid, tol)?;
        Ok(TransformStep {
            u: u.clone(),
            y_h: y_h.clone(),
            u_tilde: transformed_potential(u, y_h),
            verification,
            params: params.clone(),
        })
    }
}

/// Verifies `y_h` on its own region at [`SEED_TOLERANCE`], then transforms.
pub fn transform_potential(u: &Potential, y_h: &SeedSolution, params: &ParameterSet) -> Result<TransformStep> {
    TransformStep::new(u, y_h, params, &y_h.region, SEED_TOLERANCE)
}

/// `1/(r Y_h)`, a solution under the transformed potential for any seed.
pub fn trivial_partner(y_h: &SeedSolution) -> SeedSolution {
    SeedSolution {
        expr: simplify(&(Expr::one() / (r() * y_h.expr.clone()))),
        region: y_h.region,
        singular_threshold: y_h.singular_threshold,
    }
}

/// `dP = A dr + B dz` for `P = r Y_h Ỹ`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    pub a: Expr,
    pub b: Expr,
    pub y: Expr,
    pub y_h: Expr,
}

/// `A = -r (Y_z Y_h - Y Y_h,z)`, `B = r (Y_r Y_h - Y Y_h,r)`.
pub fn make_oneform(y: &SeedSolution, y_h: &SeedSolution) -> OneForm {
    let (y, g) = (&y.expr, &y_h.expr);
    let wronskian = |v: Var| differentiate(y, v) * g.clone() - y.clone() * differentiate(g, v);
    OneForm {
        a: simplify(&-(r() * wronskian(Var::Z))),
        b: simplify(&(r() * wronskian(Var::R))),
        y: y.clone(),
        y_h: g.clone(),
    }
}

impl OneForm {
    /// `A_z - B_r` symbolically.
    pub fn curl(&self) -> Expr {
        simplify(&(differentiate(&self.a, Var::Z) - differentiate(&self.b, Var::R)))
    }

    pub fn singular_set(&self) -> SingularSet {
        SingularSet::of([&self.a, &self.b])
    }

    /// `|A_z - B_r|` relative to `max(|A|, |B|)` pointwise, with the term
    /// magnitudes of `A_z` and `B_r` added to the scale so that a vanishing
    /// form (`Y` proportional to `Y_h`) does not divide rounding by zero.
    pub fn closedness(&self, grid: &GridSpec, params: &ParameterSet) -> Result<ResidualReport> {
        params.check_bound(&self.a)?;
        params.check_bound(&self.b)?;
        let a_z = differentiate(&self.a, Var::Z);
        let b_r = differentiate(&self.b, Var::R);
        let singular = SingularSet::of([&self.a, &self.b, &a_z, &b_r]);
        sweep(grid, |rv, zv| {
            if singular
                .signature(rv, zv, params, crate::schrodinger::DEFAULT_SINGULAR_THRESHOLD)
                .is_none()
            {
                return Ok(None);
            }
            let ev = |e: &Expr| evaluate(e, rv, zv, params);
            let curl = ev(&a_z)? - ev(&b_r)?;
            let terms = [
                ev(&self.a)?,
                ev(&self.b)?,
                magnitude(&a_z, rv, zv, params)?,
                magnitude(&b_r, rv, zv, params)?,
            ];
            Ok(Some(relative(&terms, curl)))
        })
    }
}

/// `A`, `B` and their first partials at a point.
#[derive(Clone, Copy, Debug)]
struct FormJet {
    a: f64,
    b: f64,
    a_r: f64,
    a_z: f64,
    b_z: f64,
}

fn form_jet(y: &HyperDual, g: &HyperDual, r: f64) -> FormJet {
    let wz = y.d_z * g.value - y.value * g.d_z;
    let wr = y.d_r * g.value - y.value * g.d_r;
    let mixed = y.d_rz * g.value + y.d_z * g.d_r - y.d_r * g.d_z - y.value * g.d_rz;
    FormJet {
        a: -r * wz,
        b: r * wr,
        a_r: -wz - r * mixed,
        a_z: -r * (y.d_zz * g.value - y.value * g.d_zz),
        b_z: r * (y.d_rz * g.value + y.d_r * g.d_z - y.d_z * g.d_r - y.value * g.d_rz),
    }
}

fn wronskian_component(sweep: Sweep, y: &HyperDual, g: &HyperDual, r: f64) -> f64 {
    match sweep {
        Sweep::R => -r * (y.d_z * g.value - y.value * g.d_z),
        Sweep::Z => r * (y.d_r * g.value - y.value * g.d_r),
    }
}

/// What a transformed field is built from: a closed-form solution, or a
/// field transported at an earlier stage.
#[derive(Clone)]
pub enum SolutionSource {
    Closed(SeedSolution),
    Carried(Arc<TransformedSolutionField>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldOptions {
    pub basepoint: (f64, f64),
    pub additive_constant: f64,
    pub tol: f64,
    pub margin: f64,
    pub grid_hint: GridSpec,
}

impl FieldOptions {
    pub fn at(basepoint: (f64, f64)) -> Self {
        FieldOptions {
            basepoint,
            additive_constant: 0.0,
            tol: DEFAULT_QUAD_TOL,
            margin: DEFAULT_MARGIN,
            grid_hint: GridSpec::standard(5.0, 41),
        }
    }
}

fn combine(a: u64, b: u64) -> u64 {
    a.rotate_left(29) ^ b
}

/// Transformed solution `Ỹ = P / (r Y_h)` with `P` obtained by integrating
/// the one-form from the basepoint along an axis-parallel path.
pub struct TransformedSolutionField {
    source: SolutionSource,
    oneform: Option<OneForm>,
    form_singular: SingularSet,
    y_h: SeedSolution,
    y_h_zero: SingularSet,
    params: ParameterSet,
    opts: FieldOptions,
    cache: Mutex<HashMap<(u64, u64), f64>>,
}

impl TransformedSolutionField {
    pub fn new(source: SolutionSource, y_h: &SeedSolution, params: &ParameterSet, opts: FieldOptions) -> Result<Self> {
        params.check_bound(&y_h.expr)?;
        let (oneform, form_singular) = match &source {
            SolutionSource::Closed(y) => {
                params.check_bound(&y.expr)?;
                let form = make_oneform(y, y_h);
                let set = form.singular_set();
                (Some(form), set)
            }
            SolutionSource::Carried(_) => {
                let g_r = differentiate(&y_h.expr, Var::R);
                let g_z = differentiate(&y_h.expr, Var::Z);
                let g_rr = differentiate(&g_r, Var::R);
                let g_rz = differentiate(&g_r, Var::Z);
                let g_zz = differentiate(&g_z, Var::Z);
                (None, SingularSet::of([&y_h.expr, &g_r, &g_z, &g_rr, &g_rz, &g_zz]))
            }
        };
        let mut y_h_zero = SingularSet::default();
        y_h_zero.push(&y_h.expr);
        let field = TransformedSolutionField {
            source,
            oneform,
            form_singular,
            y_h: y_h.clone(),
            y_h_zero,
            params: params.clone(),
            opts,
            cache: Mutex::new(HashMap::new()),
        };
        let (br, bz) = opts.basepoint;
        if field.form_signature(br, bz, opts.margin).is_none() {
            return Err(Error::SingularPoint {
                at: opts.basepoint,
                what: "basepoint lies on the singular set of the one-form",
            });
        }
        Ok(field)
    }

    pub fn options(&self) -> &FieldOptions {
        &self.opts
    }

    pub fn oneform(&self) -> Option<&OneForm> {
        self.oneform.as_ref()
    }

    pub fn y_h(&self) -> &SeedSolution {
        &self.y_h
    }

    fn form_signature(&self, r: f64, z: f64, margin: f64) -> Option<u64> {
        let own = self.form_singular.signature(r, z, &self.params, margin)?;
        match &self.source {
            SolutionSource::Closed(_) => Some(own),
            SolutionSource::Carried(prev) => Some(combine(prev.signature(r, z, margin)?, own)),
        }
    }

    fn source_jet(&self, r: f64, z: f64) -> Result<HyperDual> {
        match &self.source {
            SolutionSource::Closed(y) => evaluate_hyperdual(&y.expr, r, z, &self.params),
            SolutionSource::Carried(prev) => prev.jet(r, z),
        }
    }

    /// `P(r, z)`, normalized so that `P(basepoint) = additive_constant`.
    pub fn p(&self, r: f64, z: f64) -> Result<f64> {
        let key = (r.to_bits(), z.to_bits());
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let margin = self.opts.margin;
        let probe = |pr: f64, pz: f64| self.form_signature(pr, pz, margin);
        let plan = plan_path(self.opts.basepoint, (r, z), &probe, &self.opts.grid_hint)?;
        let integral = match &self.source {
            SolutionSource::Closed(_) => line_integral(self, &plan, self.opts.tol)?.value,
            SolutionSource::Carried(prev) => self.carried_integral(prev, &plan)?,
        };
        let value = integral + self.opts.additive_constant;
        self.cache.lock().expect("cache lock").insert(key, value);
        Ok(value)
    }

    // The previous field's P is computed once per segment start and then
    // extended along the segment, which is clear of its singular set too.
    fn carried_integral(&self, prev: &TransformedSolutionField, plan: &PathPlan) -> Result<f64> {
        let mut total = 0.0;
        for seg in &plan.segments {
            let p0 = prev.p(seg.from.0, seg.from.1)?;
            let (a, b) = match seg.sweep {
                Sweep::R => (seg.from.0, seg.to.0),
                Sweep::Z => (seg.from.1, seg.to.1),
            };
            let integrand = |t: f64| {
                let (r, z) = match seg.sweep {
                    Sweep::R => (t, seg.from.1),
                    Sweep::Z => (seg.from.0, t),
                };
                let y = prev.jet_with_p(r, z, prev.p_from(seg.from, p0, (r, z))?)?;
                let g = evaluate_hyperdual(&self.y_h.expr, r, z, &self.params)?;
                Ok(wronskian_component(seg.sweep, &y, &g, r))
            };
            total += integrate_segment(integrand, a, b, self.opts.tol)?.value;
        }
        Ok(total)
    }

    /// `P` at `target` from a known value at `anchor`, integrating along the
    /// axis-parallel segment joining them.
    fn p_from(&self, anchor: (f64, f64), p_anchor: f64, target: (f64, f64)) -> Result<f64> {
        if anchor == target {
            return Ok(p_anchor);
        }
        let q = if anchor.1 == target.1 {
            integrate_segment(
                |r| self.component(Sweep::R, r, anchor.1),
                anchor.0,
                target.0,
                self.opts.tol,
            )?
        } else {
            integrate_segment(
                |z| self.component(Sweep::Z, anchor.0, z),
                anchor.1,
                target.1,
                self.opts.tol,
            )?
        };
        Ok(p_anchor + q.value)
    }

    fn jet_with_p(&self, r: f64, z: f64, p: f64) -> Result<HyperDual> {
        let y = self.source_jet(r, z)?;
        let g = evaluate_hyperdual(&self.y_h.expr, r, z, &self.params)?;
        if g.value == 0.0 {
            return Err(Error::SingularPoint {
                at: (r, z),
                what: "Y_h vanishes at the target",
            });
        }
        let f = form_jet(&y, &g, r);
        let p = HyperDual {
            value: p,
            d_r: f.a,
            d_z: f.b,
            d_rr: f.a_r,
            d_rz: f.a_z,
            d_zz: f.b_z,
        };
        Ok(p / (HyperDual::r(r) * g))
    }

    /// `Ỹ(r, z)`.
    pub fn value(&self, r: f64, z: f64) -> Result<f64> {
        let y_h = self.y_h.eval(r, z, &self.params)?;
        if y_h == 0.0 || self.y_h_zero.signature(r, z, &self.params, self.opts.margin).is_none() {
            return Err(Error::SingularPoint {
                at: (r, z),
                what: "Y_h vanishes at the target",
            });
        }
        Ok(self.p(r, z)? / (r * y_h))
    }
}

impl ExactForm for TransformedSolutionField {
    fn component(&self, sweep: Sweep, r: f64, z: f64) -> Result<f64> {
        if let Some(form) = &self.oneform {
            let e = match sweep {
                Sweep::R => &form.a,
                Sweep::Z => &form.b,
            };
            return evaluate(e, r, z, &self.params);
        }
        let y = self.source_jet(r, z)?;
        let g = evaluate_hyperdual(&self.y_h.expr, r, z, &self.params)?;
        Ok(wronskian_component(sweep, &y, &g, r))
    }
}

impl SolutionField for TransformedSolutionField {
    fn jet(&self, r: f64, z: f64) -> Result<HyperDual> {
        self.jet_with_p(r, z, self.p(r, z)?)
    }

    fn signature(&self, r: f64, z: f64, margin: f64) -> Option<u64> {
        let form = self.form_signature(r, z, margin)?;
        Some(combine(form, self.y_h_zero.signature(r, z, &self.params, margin)?))
    }
}

/// `Ỹ` at `at`.
pub fn transform_solution(field: &TransformedSolutionField, at: (f64, f64)) -> Result<f64> {
    field.value(at.0, at.1)
}

/// Grid point farthest, in the relative sense of [`SingularSet::clearance`],
/// from every given singular set. Ties go to the first point in grid order.
pub fn find_basepoint(sets: &[&SingularSet], grid: &GridSpec, params: &ParameterSet) -> Option<(f64, f64)> {
    let mut best: Option<((f64, f64), f64)> = None;
    for (r, z) in grid.points() {
        let c = sets.iter().map(|s| s.clearance(r, z, params)).fold(1.0, f64::min);
        if c > 0.0 && best.is_none_or(|(_, b)| c > b) {
            best = Some(((r, z), c));
        }
    }
    best.map(|(p, _)| p)
}

/// Coefficients of `α Ỹ + β / (r Y_h)`: the freedom left in a transported
/// solution by the scale of `Y` and the integration constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaugeFit {
    pub alpha: f64,
    pub beta: f64,
}

impl GaugeFit {
    /// Solves for `(α, β)` from two samples `(numeric, partner, expected)`.
    pub fn fit(samples: [(f64, f64, f64); 2]) -> Result<GaugeFit> {
        let [(n1, p1, e1), (n2, p2, e2)] = samples;
        let det = n1 * p2 - n2 * p1;
        if det.abs() <= 1e-12 * ((n1 * p2).abs() + (n2 * p1).abs()) || !det.is_finite() {
            return Err(Error::DegenerateFit);
        }
        Ok(GaugeFit {
            alpha: (e1 * p2 - e2 * p1) / det,
            beta: (n1 * e2 - n2 * e1) / det,
        })
    }

    pub fn apply(&self, numeric: f64, partner: f64) -> f64 {
        self.alpha * numeric + self.beta * partner
    }
}

/// Transforms `u` with `y_h`, then the result with the trivial partner, and
/// compares against `u`. The scale at each point is the largest term of the
/// twice-transformed potential.
pub fn involution_check(
    u: &Potential,
    y_h: &SeedSolution,
    grid: &GridSpec,
    params: &ParameterSet,
) -> Result<ResidualReport> {
    params.check_bound(&u.expr)?;
    params.check_bound(&y_h.expr)?;
    let once = transformed_potential(u, y_h);
    let partner = trivial_partner(y_h);
    let lr = log_second(&partner.expr, Var::R);
    let lz = log_second(&partner.expr, Var::Z);
    let singular = SingularSet::of([&u.expr, &once.expr, &lr, &lz]);
    let threshold = y_h.singular_threshold;
    sweep(grid, |rv, zv| {
        if singular.signature(rv, zv, params, threshold).is_none() {
            return Ok(None);
        }
        let ev = |e: &Expr| evaluate(e, rv, zv, params);
        let terms = [ev(&once.expr)?, -2.0 * ev(&lr)?, -2.0 * ev(&lz)?, 1.0 / (rv * rv)];
        let base = ev(&u.expr)?;
        let twice: f64 = terms.iter().sum();
        let (abs, rel) = relative(&[terms[0], terms[1], terms[2], terms[3], base], twice - base);
        Ok(Some((abs, rel)))
    })
}

/// A stage of [`chain`].
#[derive(Clone)]
pub enum ChainStep {
    /// Transform the current potential with a closed-form seed.
    Transform {
        y_h: SeedSolution,
        basepoint: Option<(f64, f64)>,
    },
    /// Start transporting `solution` (a solution under the current potential)
    /// through every later transformation.
    Carry { name: String, solution: SeedSolution },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainOptions {
    pub grid: GridSpec,
    pub carried_grid: GridSpec,
    pub residual_tol: f64,
    pub quad_tol: f64,
    pub margin: f64,
    pub basepoint: (f64, f64),
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            grid: GridSpec::standard(5.0, 41),
            carried_grid: GridSpec::standard(5.0, 41),
            residual_tol: SEED_TOLERANCE,
            quad_tol: DEFAULT_QUAD_TOL,
            margin: DEFAULT_MARGIN,
            basepoint: (1.0, 0.0),
        }
    }
}

/// A transported solution after a given stage, with its residual under that
/// stage's potential.
#[derive(Clone)]
pub struct CarriedStage {
    pub name: String,
    pub stage: usize,
    pub field: Arc<TransformedSolutionField>,
    pub verification: ResidualReport,
}

#[derive(Clone)]
pub struct Chain {
    pub steps: Vec<TransformStep>,
    pub carried: Vec<CarriedStage>,
}

impl Chain {
    pub fn final_potential(&self) -> Option<&Potential> {
        self.steps.last().map(|s| &s.u_tilde)
    }
}

/// Applies the steps in order. Every seed is verified against the potential
/// it is applied to; every carried solution is re-verified after each
/// transformation. Failures are reported with the 1-based stage number.
pub fn chain(u0: &Potential, steps: &[ChainStep], params: &ParameterSet, opts: &ChainOptions) -> Result<Chain> {
    let mut u = u0.clone();
    let mut out = Chain {
        steps: Vec::new(),
        carried: Vec::new(),
    };
    let mut active: Vec<(String, SolutionSource)> = Vec::new();
    for step in steps {
        let stage = out.steps.len() + 1;
        match step {
            ChainStep::Carry { name, solution } => {
                verify_seed(&u, solution, params, &opts.grid, opts.residual_tol).map_err(|e| e.at_stage(stage))?;
                active.push((name.clone(), SolutionSource::Closed(solution.clone())));
            }
            ChainStep::Transform { y_h, basepoint } => {
                let t = TransformStep::new(&u, y_h, params, &opts.grid, opts.residual_tol)
                    .map_err(|e| e.at_stage(stage))?;
                let field_opts = FieldOptions {
                    tol: opts.quad_tol,
                    margin: opts.margin,
                    grid_hint: opts.grid,
                    ..FieldOptions::at(basepoint.unwrap_or(opts.basepoint))
                };
                for (name, source) in active.iter_mut() {
                    let field = TransformedSolutionField::new(source.clone(), y_h, params, field_opts)
                        .map(Arc::new)
                        .map_err(|e| e.at_stage(stage))?;
                    let report = residual_report_field(&t.u_tilde, field.as_ref(), &opts.carried_grid, params, &[])
                        .map_err(|e| e.at_stage(stage))?;
                    if !report.passes(opts.residual_tol) {
                        return Err(Error::SeedNotSolution {
                            max_rel: report.max_rel_residual,
                            tol: opts.residual_tol,
                        }
                        .at_stage(stage));
                    }
                    *source = SolutionSource::Carried(field.clone());
                    out.carried.push(CarriedStage {
                        name: name.clone(),
                        stage,
                        field,
                        verification: report,
                    });
                }
                u = t.u_tilde.clone();
                out.steps.push(t);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::parse;

    fn seed(s: &str) -> SeedSolution {
        SeedSolution::parse(s).unwrap()
    }

    fn pot(s: &str) -> Potential {
        Potential::parse(s).unwrap()
    }

    const U1: &str = "(4*z^4+13*r^4+20*r^2*z^2)/((r^2-2*z^2)^2*r^2)";

    #[test]
    fn first_example_potential() {
        let step = transform_potential(&pot("0"), &seed("r^2-2*z^2"), &ParameterSet::new()).unwrap();
        let p = ParameterSet::new();
        assert!((step.u_tilde.eval(1.0, 1.0, &p).unwrap() - 37.0).abs() < 1e-12);
        let want = parse(U1).unwrap();
        for &(r, z) in &[(0.3, 1.1), (2.0, -0.4), (4.1, 2.2)] {
            let a = step.u_tilde.eval(r, z, &p).unwrap();
            let b = evaluate(&want, r, z, &p).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn h_route_matches_rational_route() {
        let p = ParameterSet::new().with("k", 1.0);
        let u = pot("-k^2");
        let y_h = seed("sin(k*z)");
        let via_h = transform_potential_from_h(&u, &crate::schrodinger::h_from_seed(&y_h));
        let direct = transformed_potential(&u, &y_h);
        let z = std::f64::consts::FRAC_PI_2;
        assert!((via_h.eval(1.0, z, &p).unwrap() - 2.0).abs() < 1e-12);
        assert!((direct.eval(1.0, z, &p).unwrap() - 2.0).abs() < 1e-12);
        let trivial = transform_potential_from_h(&pot("1/r^2"), &Expr::zero());
        assert!(trivial.eval(0.7, 0.3, &p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn non_solution_and_degenerate_seeds_are_refused() {
        let p = ParameterSet::new();
        assert!(matches!(
            transform_potential(&pot("0"), &seed("r"), &p),
            Err(Error::SeedNotSolution { .. })
        ));
        assert!(matches!(
            transform_potential(&pot("0"), &seed("0*r"), &p),
            Err(Error::DegenerateSeed)
        ));
    }

    #[test]
    fn oneform_of_first_example() {
        let f = make_oneform(&seed("z"), &seed("r^2-2*z^2"));
        let p = ParameterSet::new();
        for &(r, z) in &[(0.5, 0.2), (1.5, -1.0)] {
            let a = evaluate(&f.a, r, z, &p).unwrap();
            let b = evaluate(&f.b, r, z, &p).unwrap();
            assert!((a - (-r * r * r - 2.0 * r * z * z)).abs() < 1e-13);
            assert!((b - (-2.0 * r * r * z)).abs() < 1e-13);
            assert_eq!(evaluate(&f.curl(), r, z, &p).unwrap(), 0.0);
        }
        let same = make_oneform(&seed("r^2-2*z^2"), &seed("r^2-2*z^2"));
        for &(r, z) in &[(0.5, 0.2), (1.5, -1.0)] {
            assert_eq!(evaluate(&same.a, r, z, &p).unwrap(), 0.0);
            assert_eq!(evaluate(&same.b, r, z, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn transported_solution_spot_value() {
        let field = TransformedSolutionField::new(
            SolutionSource::Closed(seed("z")),
            &seed("r^2-2*z^2"),
            &ParameterSet::new(),
            FieldOptions::at((1.0, 0.0)),
        )
        .unwrap();
        assert!((field.p(1.0, 1.0).unwrap() + 1.0).abs() < 1e-12);
        assert!((transform_solution(&field, (1.0, 1.0)).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            field.value(1.0, 1.0 / 2f64.sqrt()),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn zero_form_gives_scaled_partner() {
        let opts = FieldOptions {
            additive_constant: 2.5,
            ..FieldOptions::at((1.0, 0.0))
        };
        let y_h = seed("r^2-2*z^2");
        let field =
            TransformedSolutionField::new(SolutionSource::Closed(y_h.clone()), &y_h, &ParameterSet::new(), opts)
                .unwrap();
        let v = field.value(2.0, -1.7).unwrap();
        assert!((v - 2.5 / (2.0 * (4.0 - 2.0 * 1.7 * 1.7))).abs() < 1e-14);
    }

    #[test]
    fn carried_field_solves_transformed_equation() {
        let p = ParameterSet::new();
        let y_h = seed("r^2-2*z^2");
        let u1 = transformed_potential(&pot("0"), &y_h);
        let field = TransformedSolutionField::new(
            SolutionSource::Closed(seed("1/sqrt(r^2+z^2)")),
            &y_h,
            &p,
            FieldOptions::at((1.0, 0.0)),
        )
        .unwrap();
        // closed form of the result: -3 r z / ((r^2 - 2 z^2) sqrt(r^2 + z^2))
        let v = field.value(1.3, 0.4).unwrap();
        let want = -3.0 * 1.3 * 0.4 / ((1.69 - 0.32) * (1.69f64 + 0.16).sqrt());
        assert!((v - want).abs() < 1e-9 * want.abs());
        let g = GridSpec::new((0.2, 3.0), (-3.0, 3.0), 8, 8).unwrap();
        let rep = residual_report_field(&u1, &field, &g, &p, &[]).unwrap();
        assert!(rep.max_rel_residual < 1e-7, "{rep:?}");
    }

    #[test]
    fn gauge_fit_recovers_coefficients() {
        let n = [1.0, 3.0];
        let pt = [2.0, -1.0];
        let e = [0.5 * n[0] + 4.0 * pt[0], 0.5 * n[1] + 4.0 * pt[1]];
        let fit = GaugeFit::fit([(n[0], pt[0], e[0]), (n[1], pt[1], e[1])]).unwrap();
        assert!((fit.alpha - 0.5).abs() < 1e-15 && (fit.beta - 4.0).abs() < 1e-15);
        assert!(matches!(
            GaugeFit::fit([(1.0, 2.0, 0.0), (2.0, 4.0, 1.0)]),
            Err(Error::DegenerateFit)
        ));
    }

    #[test]
    fn involution_examples() {
        let g = GridSpec::new((0.1, 3.0), (-3.0, 3.0), 25, 25).unwrap();
        let p = ParameterSet::new().with("k", 1.0);
        for (u, y_h) in [("0", "r^2-2*z^2"), ("-k^2", "sin(k*z)"), ("0", "1")] {
            let rep = involution_check(&pot(u), &seed(y_h), &g, &p).unwrap();
            assert!(rep.max_rel_residual < 1e-9, "{u} {y_h}: {rep:?}");
        }
    }

    #[test]
    fn basepoint_helper_avoids_singular_sets() {
        let mut set = SingularSet::default();
        set.push(&parse("r^2-2*z^2").unwrap());
        let g = GridSpec::new((0.1, 3.0), (-3.0, 3.0), 13, 13).unwrap();
        let (r, z) = find_basepoint(&[&set], &g, &ParameterSet::new()).unwrap();
        assert!(z == 0.0, "({r}, {z})");
    }

    #[test]
    fn chain_reports_failing_stage() {
        let steps = [
            ChainStep::Transform {
                y_h: seed("r^2-2*z^2"),
                basepoint: None,
            },
            ChainStep::Transform {
                y_h: seed("z"),
                basepoint: None,
            },
        ];
        let err = chain(&pot("0"), &steps, &ParameterSet::new(), &ChainOptions::default())
            .err()
            .unwrap();
        assert!(matches!(err, Error::Stage { stage: 2, .. }), "{err}");
    }

    #[test]
    fn step_serializes_expressions_as_text() {
        let step = transform_potential(&pot("0"), &seed("r^2-2*z^2"), &ParameterSet::new()).unwrap();
        let json = serde_json::to_value(&step).unwrap();
        assert_eq!(json["y_h"], "r^2 - 2*z^2");
        assert!(json["u_tilde"].is_string());
        assert!(json["verification"]["max_rel"].as_f64().unwrap() < 1e-12);
    }
}
