//! Computable metric spaces, points, and lattice discretization.
//!
//! Every space is a union of charts. A [`Point`] names its chart and holds
//! chart-local coordinates; distances are exact closed forms.

pub mod chain;
pub mod cone;
mod lattice;

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use chain::ChainBlocks;
pub use cone::{BaseSetSpec, ConeSpace};
pub use lattice::{ball_grid, box_grid, ellipsoid_grid};

/// Relative tolerance used by every "within distance r" test.
pub const TOL: f64 = 1e-9;

/// `d <= r` up to the library-wide rounding tolerance.
///
/// Enumeration, validation and the test oracles all use this predicate, so
/// grid points sitting exactly on a sphere are treated consistently.
#[inline]
pub fn within(d: f64, r: f64) -> bool {
    d <= r + TOL * r.abs().max(1.0)
}

/// A point of a space: a chart index and chart-local coordinates.
///
/// Serializes as the flat array `[chart, coords...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub chart: usize,
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(chart: usize, coords: Vec<f64>) -> Self {
        Point { chart, coords }
    }

    /// A point of a single-chart space.
    pub fn at(coords: &[f64]) -> Self {
        Point { chart: 0, coords: coords.to_vec() }
    }

    /// Total order: chart first, then coordinates lexicographically.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        self.chart.cmp(&other.chart).then_with(|| {
            for (a, b) in self.coords.iter().zip(&other.coords) {
                match a.total_cmp(b) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            self.coords.len().cmp(&other.coords.len())
        })
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.chart)?;
        for c in &self.coords {
            write!(f, ", {c}")?;
        }
        write!(f, "]")
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.coords.len() + 1))?;
        seq.serialize_element(&self.chart)?;
        for c in &self.coords {
            seq.serialize_element(c)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Point;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array [chart, coords...]")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Point, A::Error> {
                let chart: f64 = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                if chart < 0.0 || chart.fract() != 0.0 {
                    return Err(de::Error::custom("chart id must be a nonnegative integer"));
                }
                let mut coords = Vec::new();
                while let Some(c) = seq.next_element::<f64>()? {
                    coords.push(c);
                }
                Ok(Point { chart: chart as usize, coords })
            }
        }
        d.deserialize_seq(V)
    }
}

/// A computable metric space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceDescriptor {
    /// `R^dim` with the Euclidean metric.
    Euclidean { dim: usize },
    /// The integer lattice `Z^dim` with the Euclidean metric.
    Integers { dim: usize },
    /// The half-line `[start, inf)`.
    HalfLine { start: f64 },
    /// The closed upper half-plane `y >= 0`.
    Halfplane,
    /// A cone over a subset of the unit sphere, with the ambient metric.
    Cone(ConeSpace),
    /// A chain of blocks `P_0, P_1, ...` joined through their anchors.
    Chain { blocks: ChainBlocks },
    /// A half-line `[0, inf)` with a copy of `R^{2^k}` attached at each
    /// integer `k <= max_level`. Chart 0 is the half-line, chart `k + 1`
    /// the flat attached at `k`.
    Bouquet { max_level: u32 },
    /// Product with the max metric.
    Product { left: Box<SpaceDescriptor>, right: Box<SpaceDescriptor> },
}

/// Szudzik pairing of chart ids.
pub fn pair_charts(a: usize, b: usize) -> usize {
    if a >= b {
        a * a + a + b
    } else {
        b * b + a
    }
}

/// Inverse of [`pair_charts`].
pub fn unpair_chart(z: usize) -> (usize, usize) {
    let s = (z as f64).sqrt() as usize;
    // Correct for rounding in the float square root.
    let s = (s.saturating_sub(1)..=s + 1).rev().find(|&r| r * r <= z).unwrap_or(0);
    let t = z - s * s;
    if t < s {
        (t, s)
    } else {
        (s, t - s)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, c| m.max(c.abs()))
}

impl SpaceDescriptor {
    pub fn euclidean(dim: usize) -> Self {
        SpaceDescriptor::Euclidean { dim }
    }

    pub fn cone(dim: usize, base: BaseSetSpec) -> Self {
        SpaceDescriptor::Cone(ConeSpace::new(dim, base, None))
    }

    pub fn product(left: SpaceDescriptor, right: SpaceDescriptor) -> Self {
        SpaceDescriptor::Product { left: Box::new(left), right: Box::new(right) }
    }

    /// Checks the descriptor's own parameters.
    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceDescriptor::Euclidean { dim } | SpaceDescriptor::Integers { dim } => {
                if *dim == 0 {
                    return Err(invalid("dimension must be positive"));
                }
            }
            SpaceDescriptor::HalfLine { start } => {
                if !start.is_finite() {
                    return Err(invalid("half-line start must be finite"));
                }
            }
            SpaceDescriptor::Cone(c) => c.validate()?,
            SpaceDescriptor::Bouquet { max_level } => {
                if *max_level > 20 {
                    return Err(invalid("bouquet max_level above 20 is not supported"));
                }
            }
            SpaceDescriptor::Product { left, right } => {
                left.validate()?;
                right.validate()?;
            }
            SpaceDescriptor::Halfplane | SpaceDescriptor::Chain { .. } => {}
        }
        Ok(())
    }

    /// Dimension of a chart, or `None` for an invalid chart id.
    pub fn chart_dim(&self, chart: usize) -> Option<usize> {
        match self {
            SpaceDescriptor::Euclidean { dim } | SpaceDescriptor::Integers { dim } => {
                (chart == 0).then_some(*dim)
            }
            SpaceDescriptor::HalfLine { .. } => (chart == 0).then_some(1),
            SpaceDescriptor::Halfplane => (chart == 0).then_some(2),
            SpaceDescriptor::Cone(c) => (chart == 0).then_some(c.dim),
            SpaceDescriptor::Chain { blocks } => Some(match blocks {
                ChainBlocks::Rectangles => 2,
                _ => 1,
            }),
            SpaceDescriptor::Bouquet { max_level } => {
                if chart == 0 {
                    Some(1)
                } else if chart <= *max_level as usize + 1 {
                    Some(1usize << (chart - 1))
                } else {
                    None
                }
            }
            SpaceDescriptor::Product { left, right } => {
                let (a, b) = unpair_chart(chart);
                Some(left.chart_dim(a)? + right.chart_dim(b)?)
            }
        }
    }

    /// Whether every point of the space lives in chart 0.
    pub fn single_chart(&self) -> bool {
        match self {
            SpaceDescriptor::Chain { .. } | SpaceDescriptor::Bouquet { .. } => false,
            SpaceDescriptor::Product { left, right } => left.single_chart() && right.single_chart(),
            _ => true,
        }
    }

    fn check_shape(&self, p: &Point) -> Result<()> {
        match self.chart_dim(p.chart) {
            None => Err(invalid(format!("chart {} is not valid for this space", p.chart))),
            Some(d) if d != p.coords.len() => Err(invalid(format!(
                "chart {} has dimension {d}, point has {}",
                p.chart,
                p.coords.len()
            ))),
            Some(_) => Ok(()),
        }
    }

    /// Splits a product point into its factors.
    pub fn split(&self, p: &Point) -> Result<(Point, Point)> {
        let SpaceDescriptor::Product { left, right } = self else {
            return Err(invalid("split requires a product space"));
        };
        self.check_shape(p)?;
        let (a, b) = unpair_chart(p.chart);
        let k = left.chart_dim(a).expect("shape checked");
        let _ = right;
        Ok((Point::new(a, p.coords[..k].to_vec()), Point::new(b, p.coords[k..].to_vec())))
    }

    /// Joins two factor points into a product point.
    pub fn join(left: &Point, right: &Point) -> Point {
        let mut coords = Vec::with_capacity(left.coords.len() + right.coords.len());
        coords.extend_from_slice(&left.coords);
        coords.extend_from_slice(&right.coords);
        Point::new(pair_charts(left.chart, right.chart), coords)
    }

    /// Membership test; malformed points are simply not members.
    pub fn contains(&self, p: &Point) -> bool {
        if self.check_shape(p).is_err() || p.coords.iter().any(|c| !c.is_finite()) {
            return false;
        }
        let x = &p.coords;
        match self {
            SpaceDescriptor::Euclidean { .. } => true,
            SpaceDescriptor::Integers { .. } => x.iter().all(|c| (c - c.round()).abs() <= TOL),
            SpaceDescriptor::HalfLine { start } => x[0] >= start - TOL * start.abs().max(1.0),
            SpaceDescriptor::Halfplane => x[1] >= -TOL,
            SpaceDescriptor::Cone(c) => c.contains(x),
            SpaceDescriptor::Chain { blocks } => match blocks {
                ChainBlocks::Rectangles => {
                    let (w, h) = chain::rect_half_extents(p.chart);
                    within(x[0].abs(), w) && within(x[1].abs(), h)
                }
                _ => {
                    let l = chain::segment_length(*blocks, p.chart);
                    x[0] >= -TOL && within(x[0], l)
                }
            },
            SpaceDescriptor::Bouquet { .. } => p.chart != 0 || x[0] >= -TOL,
            SpaceDescriptor::Product { left, right } => match self.split(p) {
                Ok((a, b)) => left.contains(&a) && right.contains(&b),
                Err(_) => false,
            },
        }
    }

    /// Distance between two points of the space.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check_shape(p)?;
        self.check_shape(q)?;
        Ok(self.distance_unchecked(p, q))
    }

    /// Distance without shape checks; callers guarantee both points belong
    /// to valid charts of this space.
    pub fn distance_unchecked(&self, p: &Point, q: &Point) -> f64 {
        self.raw_distance(p.chart, &p.coords, q.chart, &q.coords)
    }

    fn raw_distance(&self, pc: usize, p: &[f64], qc: usize, q: &[f64]) -> f64 {
        match self {
            SpaceDescriptor::Euclidean { .. }
            | SpaceDescriptor::Integers { .. }
            | SpaceDescriptor::HalfLine { .. }
            | SpaceDescriptor::Halfplane
            | SpaceDescriptor::Cone(_) => euclid(p, q),
            SpaceDescriptor::Chain { blocks } => {
                let rect = *blocks == ChainBlocks::Rectangles;
                if pc == qc {
                    if rect {
                        (p[0] - q[0]).abs().max((p[1] - q[1]).abs())
                    } else {
                        (p[0] - q[0]).abs()
                    }
                } else {
                    let local = |v: &[f64]| if rect { max_abs(v) } else { v[0].abs() };
                    local(p) + local(q) + chain::gap(pc, qc)
                }
            }
            SpaceDescriptor::Bouquet { .. } => bouquet_distance(pc, p, qc, q),
            SpaceDescriptor::Product { left, right } => {
                let (a, b) = unpair_chart(pc);
                let (c, d) = unpair_chart(qc);
                let k1 = left.chart_dim(a).unwrap_or(0);
                let k2 = left.chart_dim(c).unwrap_or(0);
                let dl = left.raw_distance(a, &p[..k1], c, &q[..k2]);
                let dr = right.raw_distance(b, &p[k1..], d, &q[k2..]);
                dl.max(dr)
            }
        }
    }

    /// Canonical base point: the origin, the half-line start, or the
    /// anchor of block 0.
    pub fn base_point(&self) -> Point {
        match self {
            SpaceDescriptor::Euclidean { dim } | SpaceDescriptor::Integers { dim } => {
                Point::new(0, vec![0.0; *dim])
            }
            SpaceDescriptor::HalfLine { start } => Point::at(&[*start]),
            SpaceDescriptor::Halfplane => Point::at(&[0.0, 0.0]),
            SpaceDescriptor::Cone(c) => Point::new(0, vec![0.0; c.dim]),
            SpaceDescriptor::Chain { blocks } => match blocks {
                ChainBlocks::Rectangles => Point::new(0, vec![0.0, 0.0]),
                _ => Point::new(0, vec![0.0]),
            },
            SpaceDescriptor::Bouquet { .. } => Point::at(&[0.0]),
            SpaceDescriptor::Product { left, right } => {
                SpaceDescriptor::join(&left.base_point(), &right.base_point())
            }
        }
    }

    /// Chart anchor `c_n` of a chain block.
    pub fn anchor(&self, chart: usize) -> Option<Point> {
        match self {
            SpaceDescriptor::Chain { blocks } => Some(match blocks {
                ChainBlocks::Rectangles => Point::new(chart, vec![0.0, 0.0]),
                _ => Point::new(chart, vec![0.0]),
            }),
            _ => None,
        }
    }

    /// The same space with cone tolerances tied to a grid step
    /// (`spacing / 4`) wherever none is set.
    pub fn for_spacing(&self, spacing: f64) -> SpaceDescriptor {
        match self {
            SpaceDescriptor::Cone(c) if c.tolerance.is_none() && !c.is_full() => {
                SpaceDescriptor::Cone(c.with_tolerance(spacing / 4.0))
            }
            SpaceDescriptor::Product { left, right } => SpaceDescriptor::Product {
                left: Box::new(left.for_spacing(spacing)),
                right: Box::new(right.for_spacing(spacing)),
            },
            other => other.clone(),
        }
    }

    /// Coordinates `e(p)` with `|e_i(p) - e_i(q)| <= d(p, q)` for all members,
    /// when the space admits them. Used to bucket greedy scans.
    pub fn dominating_coords(&self, p: &Point) -> Option<Vec<f64>> {
        match self {
            SpaceDescriptor::Chain { .. } | SpaceDescriptor::Bouquet { .. } => None,
            SpaceDescriptor::Product { left, right } => {
                if left.single_chart() && right.single_chart() {
                    Some(p.coords.clone())
                } else {
                    None
                }
            }
            _ => Some(p.coords.clone()),
        }
    }

    pub fn is_coordinate_dominated(&self) -> bool {
        match self {
            SpaceDescriptor::Chain { .. } | SpaceDescriptor::Bouquet { .. } => false,
            SpaceDescriptor::Product { left, right } => left.single_chart() && right.single_chart(),
            _ => true,
        }
    }

    /// Moves `p` toward `center` until it is within `radius`, for spaces
    /// where the straight segment stays in the space. Returns `p` itself
    /// when it is already close enough.
    pub fn retract(&self, p: &Point, center: &Point, radius: f64) -> Option<Point> {
        let d = self.distance(p, center).ok()?;
        if within(d, radius) {
            return Some(p.clone());
        }
        match self {
            SpaceDescriptor::Euclidean { .. }
            | SpaceDescriptor::HalfLine { .. }
            | SpaceDescriptor::Halfplane
            | SpaceDescriptor::Cone(_) => {
                let t = radius / d;
                let coords =
                    center.coords.iter().zip(&p.coords).map(|(c, x)| c + t * (x - c)).collect();
                let q = Point::new(0, coords);
                self.contains(&q).then_some(q)
            }
            SpaceDescriptor::Product { left, right } => {
                let (a, b) = self.split(p).ok()?;
                let (c, e) = self.split(center).ok()?;
                let a = left.retract(&a, &c, radius)?;
                let b = right.retract(&b, &e, radius)?;
                Some(SpaceDescriptor::join(&a, &b))
            }
            _ => None,
        }
    }

    /// Draws a member point roughly within `radius` of the base point.
    /// The distribution is only meant to exercise checkers and tests.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R, radius: f64) -> Point {
        let coord = |rng: &mut R| rng.gen_range(-radius..=radius);
        match self {
            SpaceDescriptor::Euclidean { dim } => Point::new(0, (0..*dim).map(|_| coord(rng)).collect()),
            SpaceDescriptor::Integers { dim } => {
                Point::new(0, (0..*dim).map(|_| coord(rng).round()).collect())
            }
            SpaceDescriptor::HalfLine { start } => Point::at(&[start + rng.gen_range(0.0..=radius)]),
            SpaceDescriptor::Halfplane => Point::at(&[coord(rng), rng.gen_range(0.0..=radius)]),
            SpaceDescriptor::Cone(c) => {
                if c.is_full() {
                    Point::new(0, (0..c.dim).map(|_| coord(rng)).collect())
                } else {
                    let dirs = c.directions();
                    let [u, v] = dirs[rng.gen_range(0..dirs.len())];
                    let t = rng.gen_range(0.0..=radius);
                    Point::at(&[t * u, t * v])
                }
            }
            SpaceDescriptor::Chain { blocks } => {
                let chart = rng.gen_range(0..8usize);
                match blocks {
                    ChainBlocks::Rectangles => {
                        let (w, h) = chain::rect_half_extents(chart);
                        Point::new(chart, vec![rng.gen_range(-w..=w), rng.gen_range(-h..=h)])
                    }
                    _ => {
                        let l = chain::segment_length(*blocks, chart);
                        Point::new(chart, vec![rng.gen_range(0.0..=l)])
                    }
                }
            }
            SpaceDescriptor::Bouquet { max_level } => {
                let top = (*max_level as usize).min(4) + 1;
                let chart = rng.gen_range(0..=top);
                if chart == 0 {
                    Point::at(&[rng.gen_range(0.0..=radius)])
                } else {
                    let dim = 1usize << (chart - 1);
                    let scale = radius / (dim as f64).sqrt();
                    Point::new(chart, (0..dim).map(|_| rng.gen_range(-scale..=scale)).collect())
                }
            }
            SpaceDescriptor::Product { left, right } => {
                let a = left.sample_point(rng, radius);
                let b = right.sample_point(rng, radius);
                SpaceDescriptor::join(&a, &b)
            }
        }
    }

    /// All grid points of step `spacing` (anchored at each chart's origin)
    /// that are members and lie within `radius` of `center`, in chart then
    /// lexicographic order.
    pub fn lattice_region(
        &self,
        center: &Point,
        radius: f64,
        spacing: f64,
        max_points: u64,
    ) -> Result<Vec<Point>> {
        if !(radius > 0.0) {
            return Err(invalid("lattice radius must be positive"));
        }
        if !(spacing > 0.0) || spacing > radius {
            return Err(invalid("lattice spacing must satisfy 0 < spacing <= radius"));
        }
        let mut out = Vec::new();
        self.visit_lattice(center, radius, spacing, max_points, &mut |p| {
            out.push(p.clone());
            Ok(())
        })?;
        Ok(out)
    }

    /// Streaming form of [`lattice_region`](Self::lattice_region) without
    /// the `spacing <= radius` precondition. Points are visited in the same
    /// order; `max_points` bounds the number of grid cells examined.
    pub fn visit_lattice(
        &self,
        center: &Point,
        radius: f64,
        spacing: f64,
        max_points: u64,
        visit: &mut dyn FnMut(&Point) -> Result<()>,
    ) -> Result<()> {
        self.check_shape(center)?;
        if !(spacing > 0.0) || !(radius >= 0.0) {
            return Err(invalid("lattice needs spacing > 0 and radius >= 0"));
        }
        lattice::visit(self, center, radius, spacing, max_points, visit)
    }
}

fn bouquet_distance(pc: usize, p: &[f64], qc: usize, q: &[f64]) -> f64 {
    // Fixed argument order keeps the floating sums exactly symmetric.
    if pc > qc {
        return bouquet_distance(qc, q, pc, p);
    }
    // Position of the attachment point of chart c (c >= 1) on the half-line.
    let attach = |c: usize| (c - 1) as f64;
    match (pc, qc) {
        (0, 0) => (p[0] - q[0]).abs(),
        (0, c) => (p[0] - attach(c)).abs() + norm(q),
        (a, b) if a == b => euclid(p, q),
        (a, b) => norm(p) + (attach(a) - attach(b)).abs() + norm(q),
    }
}

/// Rewrites a bouquet point whose flat coordinates are all zero as the
/// half-line point at its attachment position. Other points are unchanged.
pub fn canonical_bouquet_point(p: &Point) -> Point {
    if p.chart > 0 && p.coords.iter().all(|&c| c == 0.0) {
        Point::at(&[(p.chart - 1) as f64])
    } else {
        p.clone()
    }
}
