//! Pseudoorbits: validation, distance, exhaustive enumeration, final-term
//! families and the transformations between them.

pub mod families;

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::coarse::{CoarseMapCert, ControlFunction};
use crate::error::{invalid, Error, Result};
use crate::maps::{MapDescriptor, Region};
use crate::spaces::{box_grid, ellipsoid_grid, within, Point, SpaceDescriptor};

pub use families::{AxisItem, FinalTermFamily};

/// A finite sequence `(x_0, ..., x_n)` with its tolerance `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrbit {
    pub delta: f64,
    pub points: Vec<Point>,
}

impl PseudoOrbit {
    pub fn new(points: Vec<Point>, delta: f64) -> Self {
        PseudoOrbit { delta, points }
    }

    /// The length `n`: number of steps.
    pub fn len(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.points.len() <= 1
    }

    pub fn last(&self) -> &Point {
        self.points.last().expect("pseudoorbits are nonempty")
    }

    /// One JSON line: `{"delta": d, "points": [[chart, coords...], ...]}`.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("points serialize")
    }
}

/// Result of [`validate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Validity {
    pub valid: bool,
    /// Index `i` of the first step `x_i -> x_{i+1}` that fails.
    pub first_violation: Option<usize>,
}

/// Checks `d(f(x_i), x_{i+1}) <= delta` and membership of every point.
pub fn validate(map: &MapDescriptor, orbit: &PseudoOrbit) -> Validity {
    let bad = |i| Validity { valid: false, first_violation: Some(i) };
    let pts = &orbit.points;
    if pts.is_empty() {
        return bad(0);
    }
    for i in 0..pts.len() {
        if !map.domain.contains(&pts[i]) {
            return bad(i.min(pts.len().saturating_sub(2)));
        }
        if i + 1 == pts.len() {
            break;
        }
        let ok = map
            .apply(&pts[i])
            .and_then(|fx| map.domain.distance(&fx, &pts[i + 1]))
            .map(|d| within(d, orbit.delta))
            .unwrap_or(false);
        if !ok {
            return bad(i);
        }
    }
    Validity { valid: true, first_violation: None }
}

/// `max_i d(a_i, b_i)`.
pub fn orbit_distance(space: &SpaceDescriptor, a: &PseudoOrbit, b: &PseudoOrbit) -> Result<f64> {
    if a.points.len() != b.points.len() {
        return Err(invalid("orbits have different lengths"));
    }
    let mut m = 0.0f64;
    for (p, q) in a.points.iter().zip(&b.points) {
        m = m.max(space.distance(p, q)?);
    }
    Ok(m)
}

/// Orbit distance without shape checks, for inner loops.
pub(crate) fn orbit_distance_unchecked(space: &SpaceDescriptor, a: &[Point], b: &[Point]) -> f64 {
    let mut m = 0.0f64;
    for (p, q) in a.iter().zip(b) {
        m = m.max(space.distance_unchecked(p, q));
    }
    m
}

fn successors(map: &MapDescriptor, x: &Point, delta: f64, spacing: f64, budget: &Budget) -> Result<Vec<Point>> {
    let fx = map.eval(x)?;
    let mut out = Vec::new();
    map.domain.visit_lattice(&fx, delta, spacing, budget.points, &mut |p| {
        out.push(p.clone());
        Ok(())
    })?;
    Ok(out)
}

/// All grid `delta`-pseudoorbits of length `n` from `x0`: each successor
/// is a grid point within `delta` of the image of its predecessor.
///
/// Cone tolerances are tied to `spacing` (see [`SpaceDescriptor::for_spacing`]).
/// The search splits across workers below the first step; output order is
/// the sequential depth-first order.
pub fn enumerate(
    map: &MapDescriptor,
    x0: &Point,
    n: usize,
    delta: f64,
    spacing: f64,
    budget: &Budget,
) -> Result<Vec<PseudoOrbit>> {
    if n == 0 {
        return Err(invalid("orbit length must be at least 1"));
    }
    if !(delta > 0.0 && spacing > 0.0) {
        return Err(invalid("delta and spacing must be positive"));
    }
    let map = map.for_spacing(spacing);
    if !map.domain.contains(x0) {
        return Err(Error::NotMember(x0.to_string()));
    }
    let first = successors(&map, x0, delta, spacing, budget)?;
    let generated = AtomicU64::new(0);
    let chunks: Vec<Vec<PseudoOrbit>> = first
        .par_iter()
        .map(|y| {
            let mut out = Vec::new();
            let mut path = vec![x0.clone(), y.clone()];
            dfs(&map, n, delta, spacing, budget, &generated, &mut path, &mut out)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    map: &MapDescriptor,
    n: usize,
    delta: f64,
    spacing: f64,
    budget: &Budget,
    generated: &AtomicU64,
    path: &mut Vec<Point>,
    out: &mut Vec<PseudoOrbit>,
) -> Result<()> {
    if path.len() == n + 1 {
        let used = generated.fetch_add(1, Ordering::Relaxed) + 1;
        budget.check_orbits(used)?;
        out.push(PseudoOrbit::new(path.clone(), delta));
        return Ok(());
    }
    let next = successors(map, path.last().expect("nonempty"), delta, spacing, budget)?;
    for y in next {
        path.push(y);
        dfs(map, n, delta, spacing, budget, generated, path, out)?;
        path.pop();
    }
    Ok(())
}

/// Whether a final-term set is a realized lower bound or a covering hull.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    Lower,
    Upper,
}

/// Final terms of explicit pseudoorbits, each with the point its orbit
/// was built from.
#[derive(Clone, Debug, Serialize)]
pub struct FinalTermSet {
    pub points: Vec<Point>,
    /// For the ball-image family: the `y` of the orbit `(x0, y, f(y), ...,
    /// f^{n-2}(y), z)` ending at the matching point.
    pub witnesses: Vec<Point>,
    pub n: usize,
    pub delta: f64,
    pub spacing: f64,
    pub provenance: Provenance,
}

impl FinalTermSet {
    /// The explicit pseudoorbit ending at `points[index]`.
    pub fn reconstruct(&self, map: &MapDescriptor, x0: &Point, index: usize) -> Result<PseudoOrbit> {
        let map = map.for_spacing(self.spacing);
        ball_image_orbit(&map, x0, self.n, self.delta, &self.witnesses[index], &self.points[index])
    }
}

/// `(x0, y, f(y), ..., f^{n-2}(y), z)`.
pub fn ball_image_orbit(map: &MapDescriptor, x0: &Point, n: usize, delta: f64, y: &Point, z: &Point) -> Result<PseudoOrbit> {
    let mut pts = vec![x0.clone()];
    if n >= 2 {
        pts.push(y.clone());
        for _ in 0..n - 2 {
            let next = map.eval(pts.last().expect("nonempty"))?;
            pts.push(next);
        }
    }
    pts.push(z.clone());
    Ok(PseudoOrbit::new(pts, delta))
}

/// Grid discretization of `f^{n-1}(B(f(x0), delta))` plus a free
/// `delta`-step: every returned point is the final term of the explicit
/// pseudoorbit `(x0, y, f(y), ..., f^{n-2}(y), z)`.
pub fn final_terms_lower(
    map: &MapDescriptor,
    x0: &Point,
    n: usize,
    delta: f64,
    spacing: f64,
    budget: &Budget,
) -> Result<FinalTermSet> {
    let mut points = Vec::new();
    let mut witnesses = Vec::new();
    visit_ball_image(map, x0, n, delta, spacing, budget, &mut |z, y| {
        points.push(z.clone());
        witnesses.push(y.clone());
        Ok(())
    })?;
    Ok(FinalTermSet { points, witnesses, n, delta, spacing, provenance: Provenance::Lower })
}

/// Precomputed `f^k` and `f^{-k}` for affine maps.
struct AffinePower {
    forward: DMatrix<f64>,
    inverse: DMatrix<f64>,
    shift: DVector<f64>,
}

impl AffinePower {
    fn new(map: &MapDescriptor, k: u32) -> Option<Self> {
        let m = map.linear_part()?;
        let q = m.nrows();
        let forward = (0..k).fold(DMatrix::identity(q, q), |acc, _| &m * acc);
        let inverse = forward.clone().try_inverse()?;
        let mut o = Point::new(0, vec![0.0; q]);
        for _ in 0..k {
            o = map.eval(&o).ok()?;
        }
        Some(AffinePower { forward, inverse, shift: DVector::from_vec(o.coords) })
    }

    fn apply(&self, y: &[f64]) -> Vec<f64> {
        (&self.forward * DVector::from_column_slice(y) + &self.shift).iter().copied().collect()
    }

    fn unapply(&self, z: &[f64]) -> Vec<f64> {
        (&self.inverse * (DVector::from_column_slice(z) - &self.shift)).iter().copied().collect()
    }
}

pub(crate) fn iterate_eval(map: &MapDescriptor, p: &Point, k: usize) -> Result<Point> {
    let mut x = p.clone();
    for _ in 0..k {
        x = map.eval(&x)?;
    }
    Ok(x)
}

/// Visits grid points of a region that are members of `space`.
pub(crate) fn visit_region(
    space: &SpaceDescriptor,
    region: &Region,
    spacing: f64,
    max_points: u64,
    visit: &mut dyn FnMut(&Point) -> Result<()>,
) -> Result<()> {
    match region {
        Region::Ball { center, radius } => space.visit_lattice(center, *radius, spacing, max_points, visit),
        Region::Ellipsoid { center, shape } => {
            let mut p = Point::new(0, vec![0.0; center.len()]);
            ellipsoid_grid(center, shape, spacing, max_points, &mut |z| {
                p.coords.copy_from_slice(z);
                if space.contains(&p) {
                    visit(&p)?;
                }
                Ok(())
            })?;
            Ok(())
        }
        Region::Box { chart, lo, hi } => {
            let mut p = Point::new(*chart, vec![0.0; lo.len()]);
            box_grid(lo, hi, spacing, max_points, &mut |z| {
                p.coords.copy_from_slice(z);
                if space.contains(&p) {
                    visit(&p)?;
                }
                Ok(())
            })?;
            Ok(())
        }
    }
}

/// Streams the ball-image final terms `z` with their witnesses `y`.
///
/// With an invertible map and a computable image region, each grid point
/// `z` of the region is pulled back, retracted into `B(f(x0), delta)` and
/// kept when `d(z, f^{n-1}(y)) <= delta`. Otherwise the images of the grid
/// of `B(f(x0), delta)` are pushed forward and their `delta`-balls merged.
pub fn visit_ball_image(
    map: &MapDescriptor,
    x0: &Point,
    n: usize,
    delta: f64,
    spacing: f64,
    budget: &Budget,
    visit: &mut dyn FnMut(&Point, &Point) -> Result<()>,
) -> Result<()> {
    if n == 0 {
        return Err(invalid("orbit length must be at least 1"));
    }
    if !(delta > 0.0 && spacing > 0.0) {
        return Err(invalid("delta and spacing must be positive"));
    }
    let map = map.for_spacing(spacing);
    let space = &map.domain;
    if !space.contains(x0) {
        return Err(Error::NotMember(x0.to_string()));
    }
    let c = map.eval(x0)?;
    if n == 1 {
        return space.visit_lattice(&c, delta, spacing, budget.points, &mut |z| visit(z, z));
    }
    let steps = (n - 1) as u32;
    let affine = AffinePower::new(&map, steps);
    let region = map.image_region(&c, delta, steps, delta);
    let invertible = affine.is_some() || map.inverse(&c).is_some();
    if let (Some(region), true) = (region, invertible) {
        let mut y = Point::new(0, Vec::new());
        return visit_region(space, &region, spacing, budget.points, &mut |z| {
            let pulled = match &affine {
                Some(a) => Some(Point::new(z.chart, a.unapply(&z.coords))),
                None => (0..steps).try_fold(z.clone(), |acc, _| map.inverse(&acc)),
            };
            let Some(pulled) = pulled else { return Ok(()) };
            let Some(r) = space.retract(&pulled, &c, delta) else { return Ok(()) };
            y = r;
            if !space.contains(&y) {
                return Ok(());
            }
            let w = match &affine {
                Some(a) => Point::new(y.chart, a.apply(&y.coords)),
                None => iterate_eval(&map, &y, steps as usize)?,
            };
            if within(space.distance_unchecked(z, &w), delta) {
                visit(z, &y)?;
            }
            Ok(())
        });
    }
    // Forward construction.
    let seeds = {
        let mut v = Vec::new();
        space.visit_lattice(&c, delta, spacing, budget.points, &mut |p| {
            v.push(p.clone());
            Ok(())
        })?;
        v
    };
    let mut seen: HashSet<(usize, Vec<u64>)> = HashSet::new();
    let mut found: Vec<(Point, Point)> = Vec::new();
    let mut used = 0u64;
    for y in seeds {
        let w = iterate_eval(&map, &y, steps as usize)?;
        space.visit_lattice(&w, delta, spacing, budget.points, &mut |z| {
            used += 1;
            budget.check_points(used)?;
            let key = (z.chart, z.coords.iter().map(|c| c.to_bits()).collect());
            if seen.insert(key) {
                found.push((z.clone(), y.clone()));
            }
            Ok(())
        })?;
    }
    found.sort_by(|a, b| a.0.lex_cmp(&b.0));
    for (z, y) in &found {
        visit(z, y)?;
    }
    Ok(())
}

/// The covering hull `f^n(B(x0, delta / (lambda - 1)))` of all final terms
/// of `delta`-pseudoorbits of an expanding affine map.
#[derive(Clone, Debug, Serialize)]
pub struct ShadowHull {
    pub center: Point,
    /// Shadowing radius `delta / (lambda - 1)`.
    pub radius: f64,
    pub lambda: f64,
    /// Semi-axis lengths with their unit directions.
    pub axes: Vec<(f64, Vec<f64>)>,
    pub provenance: Provenance,
    #[serde(skip)]
    inverse: DMatrix<f64>,
}

impl ShadowHull {
    /// Whether `z` lies in the hull (up to the rounding tolerance).
    pub fn contains(&self, z: &Point) -> bool {
        if z.coords.len() != self.center.coords.len() {
            return false;
        }
        let v = DVector::from_iterator(z.coords.len(), z.coords.iter().zip(&self.center.coords).map(|(a, b)| a - b));
        within((&self.inverse * v).norm(), self.radius)
    }
}

/// Expansion constant of an affine map: the smallest singular value of its
/// linear part. A declared value must not exceed it.
pub fn expansion_lambda(map: &MapDescriptor, declared: Option<f64>) -> Result<f64> {
    let computed = map
        .expansion_constant()
        .ok_or_else(|| Error::Infeasible("shadowing needs a linear map or homothety".into()))?;
    let lambda = match declared {
        Some(l) if l > computed * (1.0 + 1e-12) => {
            return Err(invalid(format!("declared lambda {l} exceeds the expansion constant {computed}")))
        }
        Some(l) => l,
        None => computed,
    };
    if !(lambda > 1.0) {
        return Err(Error::Infeasible(format!("map is not expanding (lambda = {lambda})")));
    }
    Ok(lambda)
}

/// The shadowing hull of an expanding affine map.
pub fn shadow_hull(map: &MapDescriptor, x0: &Point, n: usize, delta: f64, lambda: Option<f64>) -> Result<ShadowHull> {
    let lambda = expansion_lambda(map, lambda)?;
    let power = AffinePower::new(map, n as u32).ok_or_else(|| Error::Infeasible("map is not invertible".into()))?;
    let radius = delta / (lambda - 1.0);
    let center = Point::new(x0.chart, power.apply(&x0.coords));
    let svd = power.forward.clone().svd(true, false);
    let u = svd.u.expect("requested");
    let axes = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, s)| (s * radius, u.column(i).iter().copied().collect()))
        .collect();
    Ok(ShadowHull { center, radius, lambda, axes, provenance: Provenance::Upper, inverse: power.inverse })
}

/// Every `k`-th point of `orbit`, as a pseudoorbit of `f^k` with tolerance
/// `eta_k = delta + L(delta) + ... + L^{k-1}(delta)`.
pub fn subsample(orbit: &PseudoOrbit, k: usize, control: &ControlFunction) -> Result<PseudoOrbit> {
    if k == 0 {
        return Err(invalid("subsampling step must be at least 1"));
    }
    if orbit.len() % k != 0 {
        return Err(invalid(format!("orbit length {} is not divisible by {k}", orbit.len())));
    }
    control.validate()?;
    let points = orbit.points.iter().step_by(k).cloned().collect();
    Ok(PseudoOrbit::new(points, control.eta(k as u32, orbit.delta)))
}

/// Pointwise image under a semiconjugacy certificate, with tolerance
/// `L(delta) + K`.
pub fn push_forward(orbit: &PseudoOrbit, cert: &CoarseMapCert) -> Result<PseudoOrbit> {
    let k = cert.closeness.ok_or_else(|| invalid("push-forward needs a declared closeness budget K"))?;
    let points = orbit.points.iter().map(|p| cert.phi.apply(p)).collect::<Result<_>>()?;
    Ok(PseudoOrbit::new(points, cert.control.eval(orbit.delta) + k))
}

#[cfg(test)]
mod tests;
