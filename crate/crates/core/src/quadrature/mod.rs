//! Adaptive 1-D quadrature and line integration of exact one-forms along
//! axis-parallel paths.

mod path;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use path::{plan_path, segment_is_clear, PathPlan, Segment, SingularProbe, Sweep, L_SAMPLES};

/// Rectangular sampling grid in the `(r, z)` half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub n_r: usize,
    pub n_z: usize,
}

impl GridSpec {
    pub fn new(r: (f64, f64), z: (f64, f64), n_r: usize, n_z: usize) -> Result<Self> {
        let g = GridSpec {
            r_min: r.0,
            r_max: r.1,
            z_min: z.0,
            z_max: z.1,
            n_r,
            n_z,
        };
        g.validate()?;
        Ok(g)
    }

    /// Default verification grid: `r` in `[r_max/1000, r_max]`, symmetric `z`.
    pub fn standard(extent: f64, n: usize) -> Self {
        GridSpec {
            r_min: extent * 1e-3,
            r_max: extent,
            z_min: -extent,
            z_max: extent,
            n_r: n,
            n_z: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.r_min, self.r_max, self.z_min, self.z_max]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if self.r_min <= 0.0 {
            return Err(Error::InvalidGrid(
                "r_min must be positive: the operator and the transformed potentials carry 1/r and 1/r^2 terms".into(),
            ));
        }
        if self.r_min >= self.r_max || self.z_min > self.z_max {
            return Err(Error::InvalidGrid("empty coordinate range".into()));
        }
        if self.n_r < 2 || self.n_z < 2 {
            return Err(Error::InvalidGrid("need at least two points per axis".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn r_values(&self) -> Vec<f64> {
        linspace(self.r_min, self.r_max, self.n_r)
    }

    pub fn z_values(&self) -> Vec<f64> {
        linspace(self.z_min, self.z_max, self.n_z)
    }

    /// Points in row-major order: `r` is the slow index.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let zs = self.z_values();
        self.r_values()
            .into_iter()
            .flat_map(|r| zs.iter().map(move |&z| (r, z)))
            .collect()
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + step * i as f64 })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub n_evaluations: usize,
}

impl QuadratureResult {
    pub const ZERO: QuadratureResult = QuadratureResult {
        value: 0.0,
        error_estimate: 0.0,
        n_evaluations: 0,
    };

    fn accumulate(self, other: QuadratureResult) -> QuadratureResult {
        QuadratureResult {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            n_evaluations: self.n_evaluations + other.n_evaluations,
        }
    }
}

/// Upper bound on the number of subintervals before giving up.
pub const MAX_INTERVALS: usize = 400;

// Kronrod 15-point abscissae (descending, last is the midpoint) and weights;
// odd indices are the embedded 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // Largest error first; ties broken by position so the order is total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let s = f(center - dx)? + f(center + dx)?;
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Ok(Panel {
        a,
        b,
        value: k * half,
        error: ((k - g) * half).abs(),
    })
}

/// Integrates `f` over `[a, b]` by globally adaptive Gauss–Kronrod (7/15)
/// bisection until the summed error estimate is at most
/// `tol * max(1, |value|)`.
///
/// `b < a` integrates in the reverse direction. Fails with
/// [`Error::Quadrature`] when the panel budget runs out, which is the usual
/// signature of a near-singular integrand; evaluation errors from `f` are
/// passed through.
pub fn integrate_segment<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(QuadratureResult::ZERO);
    }
    let mut evaluations = 15;
    let first = kronrod(&mut f, a, b)?;
    let mut total = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::from([first]);
    let min_width = (b - a).abs() * 1e-13;

    while error > tol * total.abs().max(1.0) {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { a, b, estimate: error });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        if (worst.b - worst.a).abs() < min_width {
            return Err(Error::Quadrature { a, b, estimate: error });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = kronrod(&mut f, worst.a, mid)?;
        let right = kronrod(&mut f, mid, worst.b)?;
        evaluations += 30;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // re-sum occasionally so the running totals do not drift
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            error = heap.iter().map(|p| p.error).sum();
        }
    }
    Ok(QuadratureResult {
        value: total,
        error_estimate: error,
        n_evaluations: evaluations,
    })
}

/// Components of an exact one-form `A dr + B dz`.
pub trait ExactForm {
    /// `A` for an `r`-sweep, `B` for a `z`-sweep.
    fn component(&self, sweep: Sweep, r: f64, z: f64) -> Result<f64>;
}

/// Sum of per-segment integrals of `A dr` along `r`-sweeps and `B dz` along
/// `z`-sweeps. Error estimates add up.
pub fn line_integral<F: ExactForm + ?Sized>(form: &F, plan: &PathPlan, tol: f64) -> Result<QuadratureResult> {
    let mut acc = QuadratureResult::ZERO;
    for seg in &plan.segments {
        let part = match seg.sweep {
            Sweep::R => {
                let z = seg.from.1;
                integrate_segment(|r| form.component(Sweep::R, r, z), seg.from.0, seg.to.0, tol)?
            }
            Sweep::Z => {
                let r = seg.from.0;
                integrate_segment(|z| form.component(Sweep::Z, r, z), seg.from.1, seg.to.1, tol)?
            }
        };
        acc = acc.accumulate(part);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate_segment(|z| Ok(-2.0 * z), 0.0, 1.0, 1e-12).unwrap();
        assert!((q.value + 1.0).abs() < 1e-15);
        assert_eq!(q.n_evaluations, 15);
    }

    #[test]
    fn cosine_quarter_period() {
        let q = integrate_segment(|x: f64| Ok(x.cos()), 0.0, FRAC_PI_2, 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oneform_component_antiderivative() {
        // A = -r^3 - 2 r z^2 at z = 1 over r in [1, 2]
        let q = integrate_segment(|r: f64| Ok(-r.powi(3) - 2.0 * r), 1.0, 2.0, 1e-12).unwrap();
        assert!((q.value + 6.75).abs() < 1e-13);
    }

    #[test]
    fn reversed_interval_changes_sign() {
        let fwd = integrate_segment(|x: f64| Ok(x.exp()), 0.0, 1.0, 1e-12).unwrap();
        let back = integrate_segment(|x: f64| Ok(x.exp()), 1.0, 0.0, 1e-12).unwrap();
        assert!((fwd.value + back.value).abs() < 1e-15);
    }

    #[test]
    fn peaked_integrand_refines() {
        let f = |x: f64| Ok(1.0 / (x * x + 1e-4));
        let q = integrate_segment(f, -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((q.value - exact).abs() <= 1e-10 * exact);
        assert!(q.n_evaluations > 15);
    }

    #[test]
    fn singular_integrand_exhausts_budget() {
        let err = integrate_segment(|x: f64| Ok((x - 1.0 / 3.0).powi(-2)), -1.0, 1.0, 1e-10);
        assert!(matches!(err, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new((0.0, 1.0), (-1.0, 1.0), 4, 4).is_err());
        assert!(GridSpec::new((0.5, 1.0), (-1.0, 1.0), 1, 4).is_err());
        let g = GridSpec::new((0.5, 1.0), (-1.0, 1.0), 3, 2).unwrap();
        assert_eq!(g.points()[..2], [(0.5, -1.0), (0.5, 1.0)]);
        assert_eq!(g.points().len(), 6);
    }
}
