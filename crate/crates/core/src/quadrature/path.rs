use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::GridSpec;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sweep {
    R,
    Z,
}

/// Axis-parallel piece of a path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub sweep: Sweep,
}

impl Segment {
    fn between(from: (f64, f64), to: (f64, f64)) -> Option<Segment> {
        if from == to {
            return None;
        }
        let sweep = if from.1 == to.1 { Sweep::R } else { Sweep::Z };
        debug_assert!(sweep == Sweep::Z || from.1 == to.1);
        Some(Segment { from, to, sweep })
    }

    pub fn length(&self) -> f64 {
        (self.to.0 - self.from.0).abs() + (self.to.1 - self.from.1).abs()
    }

    fn point(&self, t: f64) -> (f64, f64) {
        (
            self.from.0 + t * (self.to.0 - self.from.0),
            self.from.1 + t * (self.to.1 - self.from.1),
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    pub segments: Vec<Segment>,
}

impl PathPlan {
    fn from_vertices(vertices: &[(f64, f64)]) -> PathPlan {
        let mut segments: Vec<Segment> = Vec::new();
        for w in vertices.windows(2) {
            let Some(seg) = Segment::between(w[0], w[1]) else {
                continue;
            };
            match segments.last_mut() {
                Some(last) if last.sweep == seg.sweep => last.to = seg.to,
                _ => segments.push(seg),
            }
        }
        PathPlan { segments }
    }

    pub fn start(&self) -> Option<(f64, f64)> {
        self.segments.first().map(|s| s.from)
    }

    pub fn end(&self) -> Option<(f64, f64)> {
        self.segments.last().map(|s| s.to)
    }
}

/// Locates the singular set of an integrand.
pub trait SingularProbe: Sync {
    /// `None` if `(r, z)` lies within the exclusion margin of the singular
    /// set. Otherwise a bit pattern of the signs of the monitored
    /// denominators; a change of pattern between neighbouring samples means
    /// a zero was crossed.
    fn signature(&self, r: f64, z: f64) -> Option<u64>;
}

impl<F> SingularProbe for F
where
    F: Fn(f64, f64) -> Option<u64> + Sync,
{
    fn signature(&self, r: f64, z: f64) -> Option<u64> {
        self(r, z)
    }
}

/// Samples per segment when vetting an L-shaped candidate.
pub const L_SAMPLES: usize = 64;
const STAIR_SAMPLES: usize = 16;

/// True when `samples + 1` equispaced points of `seg` all pass the probe
/// with one common sign pattern.
pub fn segment_is_clear<P: SingularProbe + ?Sized>(probe: &P, seg: &Segment, samples: usize) -> bool {
    let mut first = None;
    for i in 0..=samples {
        let (r, z) = seg.point(i as f64 / samples as f64);
        match (probe.signature(r, z), first) {
            (None, _) => return false,
            (Some(s), None) => first = Some(s),
            (Some(s), Some(f)) if s != f => return false,
            _ => {}
        }
    }
    true
}

fn clear(probe: &(impl SingularProbe + ?Sized), plan: &PathPlan, samples: usize) -> bool {
    plan.segments.iter().all(|s| segment_is_clear(probe, s, samples))
}

/// Plans an axis-parallel route from `base` to `target` that stays clear of
/// the singular set.
///
/// Tries the `r`-first L, then the `z`-first L, then a breadth-first
/// staircase over the lattice spanned by `grid_hint` and the two endpoints.
/// Ties resolve deterministically, so equal inputs give equal plans.
pub fn plan_path<P: SingularProbe + ?Sized>(
    base: (f64, f64),
    target: (f64, f64),
    probe: &P,
    grid_hint: &GridSpec,
) -> Result<PathPlan> {
    let no_path = Error::NoPath { base, target };
    if probe.signature(base.0, base.1).is_none() || probe.signature(target.0, target.1).is_none() {
        return Err(no_path);
    }
    if base == target {
        return Ok(PathPlan::default());
    }
    for corner in [(target.0, base.1), (base.0, target.1)] {
        let plan = PathPlan::from_vertices(&[base, corner, target]);
        if clear(probe, &plan, L_SAMPLES) {
            return Ok(plan);
        }
    }
    staircase(base, target, probe, grid_hint).ok_or(no_path)
}

fn axis(values: Vec<f64>, extra: [f64; 2]) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().chain(extra).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn staircase<P: SingularProbe + ?Sized>(
    base: (f64, f64),
    target: (f64, f64),
    probe: &P,
    grid: &GridSpec,
) -> Option<PathPlan> {
    let rs = axis(grid.r_values(), [base.0, target.0]);
    let zs = axis(grid.z_values(), [base.1, target.1]);
    let index = |v: &[f64], x: f64| v.iter().position(|&y| y == x).expect("endpoint on lattice");
    let start = (index(&rs, base.0), index(&zs, base.1));
    let goal = (index(&rs, target.0), index(&zs, target.1));
    let at = |(i, j): (usize, usize)| (rs[i], zs[j]);

    let mut node_ok: HashMap<(usize, usize), bool> = HashMap::new();
    let mut node_clear = |n: (usize, usize)| {
        *node_ok.entry(n).or_insert_with(|| {
            let (r, z) = at(n);
            probe.signature(r, z).is_some()
        })
    };

    let mut parent: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    parent.insert(start, start);
    while let Some(node) = queue.pop_front() {
        if node == goal {
            break;
        }
        let (i, j) = node;
        // lexicographic neighbour order: r-, r+, z-, z+
        let neighbours = [
            (i > 0).then(|| (i - 1, j)),
            (i + 1 < rs.len()).then(|| (i + 1, j)),
            (j > 0).then(|| (i, j - 1)),
            (j + 1 < zs.len()).then(|| (i, j + 1)),
        ];
        for next in neighbours.into_iter().flatten() {
            if parent.contains_key(&next) || !node_clear(next) {
                continue;
            }
            let seg = Segment::between(at(node), at(next)).expect("distinct lattice nodes");
            if segment_is_clear(probe, &seg, STAIR_SAMPLES) {
                parent.insert(next, node);
                queue.push_back(next);
            }
        }
    }
    if !parent.contains_key(&goal) {
        return None;
    }
    let mut vertices = vec![at(goal)];
    let mut cur = goal;
    while cur != start {
        cur = parent[&cur];
        vertices.push(at(cur));
    }
    vertices.reverse();
    Some(PathPlan::from_vertices(&vertices))
}
