//! Maps between spaces, evaluated exactly.

pub mod conjugated;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarse::ControlFunction;
use crate::error::{invalid, Error, Result};
use crate::spaces::{chain, ChainBlocks, Point, SpaceDescriptor};

/// The rule of a map. Nested maps carry their own spaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapKind {
    Identity,
    /// `x -> M x + offset`, matrix given row-major.
    Linear {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<Vec<f64>>,
    },
    /// `x -> factor * x` on a cone or Euclidean space.
    Homothety { factor: f64 },
    /// The block-to-block linear map of a chain space: `P_n -> P_{n+1}`,
    /// anchor to anchor, scaling each axis.
    ChainLinear,
    /// The conjugated doubling map on the half-plane.
    ConjugatedDoubling,
    /// `x -> x^exponent` on a half-line `[a, inf)` with `a >= 2`.
    Power { exponent: f64 },
    /// `x -> sum coeffs[i] x^i + reciprocal / x` on a one-dimensional space.
    Polynomial {
        coeffs: Vec<f64>,
        #[serde(default)]
        reciprocal: f64,
    },
    /// `base` applied `times` times.
    Iterate { base: Box<MapDescriptor>, times: u32 },
    /// `(p, q) -> (left(p), right(q))`.
    Product { left: Box<MapDescriptor>, right: Box<MapDescriptor> },
    /// `maps` applied in order, first to last.
    Compose { maps: Vec<MapDescriptor> },
}

/// A map from `domain` to `codomain` (which defaults to the domain).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapDescriptor {
    #[serde(flatten)]
    pub kind: MapKind,
    pub domain: SpaceDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codomain: Option<SpaceDescriptor>,
}

/// A region guaranteed to contain an image set, used to bound candidate
/// searches.
#[derive(Clone, Debug)]
pub enum Region {
    Ball { center: Point, radius: f64 },
    /// `{z : |A (z - center)| <= 1}` in a single-chart space.
    Ellipsoid { center: Vec<f64>, shape: DMatrix<f64> },
    /// Axis-aligned box in one chart.
    Box { chart: usize, lo: Vec<f64>, hi: Vec<f64> },
}

impl MapDescriptor {
    pub fn new(kind: MapKind, domain: SpaceDescriptor) -> Result<Self> {
        let m = MapDescriptor { kind, domain, codomain: None };
        m.validate()?;
        Ok(m)
    }

    pub fn between(kind: MapKind, domain: SpaceDescriptor, codomain: SpaceDescriptor) -> Result<Self> {
        let m = MapDescriptor { kind, domain, codomain: Some(codomain) };
        m.validate()?;
        Ok(m)
    }

    pub fn identity(domain: SpaceDescriptor) -> Self {
        MapDescriptor { kind: MapKind::Identity, domain, codomain: None }
    }

    /// Linear map on `R^q` given row-major.
    pub fn linear(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let q = matrix.len();
        MapDescriptor::new(MapKind::Linear { matrix, offset: None }, SpaceDescriptor::euclidean(q))
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let q = entries.len();
        let matrix = (0..q).map(|i| (0..q).map(|j| if i == j { entries[i] } else { 0.0 }).collect()).collect();
        MapDescriptor::linear(matrix)
    }

    pub fn iterate(base: &MapDescriptor, times: u32) -> Result<Self> {
        MapDescriptor::between(
            MapKind::Iterate { base: Box::new(base.clone()), times },
            base.domain.clone(),
            base.codomain().clone(),
        )
    }

    pub fn product(left: &MapDescriptor, right: &MapDescriptor) -> Result<Self> {
        MapDescriptor::between(
            MapKind::Product { left: Box::new(left.clone()), right: Box::new(right.clone()) },
            SpaceDescriptor::product(left.domain.clone(), right.domain.clone()),
            SpaceDescriptor::product(left.codomain().clone(), right.codomain().clone()),
        )
    }

    /// `maps[last] o ... o maps[0]`.
    pub fn compose(maps: Vec<MapDescriptor>) -> Result<Self> {
        let first = maps.first().ok_or_else(|| invalid("compose needs at least one map"))?;
        let domain = first.domain.clone();
        let codomain = maps.last().expect("nonempty").codomain().clone();
        MapDescriptor::between(MapKind::Compose { maps }, domain, codomain)
    }

    pub fn codomain(&self) -> &SpaceDescriptor {
        self.codomain.as_ref().unwrap_or(&self.domain)
    }

    pub fn is_self_map(&self) -> bool {
        self.codomain() == &self.domain
    }

    /// The same map with cone tolerances tied to a grid step.
    pub fn for_spacing(&self, spacing: f64) -> MapDescriptor {
        let kind = match &self.kind {
            MapKind::Iterate { base, times } => {
                MapKind::Iterate { base: Box::new(base.for_spacing(spacing)), times: *times }
            }
            MapKind::Product { left, right } => MapKind::Product {
                left: Box::new(left.for_spacing(spacing)),
                right: Box::new(right.for_spacing(spacing)),
            },
            MapKind::Compose { maps } => {
                MapKind::Compose { maps: maps.iter().map(|m| m.for_spacing(spacing)).collect() }
            }
            k => k.clone(),
        };
        MapDescriptor {
            kind,
            domain: self.domain.for_spacing(spacing),
            codomain: self.codomain.as_ref().map(|c| c.for_spacing(spacing)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if let Some(c) = &self.codomain {
            c.validate()?;
        }
        let single_dim = |s: &SpaceDescriptor| if s.single_chart() { s.chart_dim(0) } else { None };
        match &self.kind {
            MapKind::Identity => {
                if !self.is_self_map() {
                    return Err(Error::SpaceMismatch("identity needs equal domain and codomain".into()));
                }
            }
            MapKind::Linear { matrix, offset } => {
                let cols = single_dim(&self.domain).ok_or_else(|| invalid("linear maps need a single-chart domain"))?;
                let rows = single_dim(self.codomain()).ok_or_else(|| invalid("linear maps need a single-chart codomain"))?;
                if matrix.len() != rows || matrix.iter().any(|r| r.len() != cols) {
                    return Err(invalid(format!("matrix must be {rows} x {cols}")));
                }
                if matrix.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(invalid("matrix entries must be finite"));
                }
                if let Some(o) = offset {
                    if o.len() != rows {
                        return Err(invalid("offset length must match the codomain dimension"));
                    }
                }
            }
            MapKind::Homothety { factor } => {
                if !(*factor > 0.0) {
                    return Err(invalid("homothety factor must be positive"));
                }
                if !matches!(self.domain, SpaceDescriptor::Cone(_) | SpaceDescriptor::Euclidean { .. }) {
                    return Err(invalid("homothety needs a cone or Euclidean domain"));
                }
                if !self.is_self_map() {
                    return Err(Error::SpaceMismatch("homothety is a self-map".into()));
                }
            }
            MapKind::ChainLinear => {
                if !matches!(self.domain, SpaceDescriptor::Chain { .. }) || !self.is_self_map() {
                    return Err(invalid("chain-linear maps act on a chain space"));
                }
            }
            MapKind::ConjugatedDoubling => {
                if self.domain != SpaceDescriptor::Halfplane || !self.is_self_map() {
                    return Err(invalid("the conjugated doubling map acts on the half-plane"));
                }
            }
            MapKind::Power { exponent } => {
                match self.domain {
                    SpaceDescriptor::HalfLine { start } if start >= 2.0 => {}
                    _ => return Err(invalid("power maps need a half-line domain [a, inf) with a >= 2")),
                }
                if !(*exponent >= 1.0) {
                    return Err(invalid("power map exponent must be at least 1"));
                }
            }
            MapKind::Polynomial { coeffs, reciprocal } => {
                if single_dim(&self.domain) != Some(1) || single_dim(self.codomain()) != Some(1) {
                    return Err(invalid("polynomial maps act on one-dimensional spaces"));
                }
                if coeffs.is_empty() || coeffs.iter().chain([reciprocal]).any(|c| !c.is_finite()) {
                    return Err(invalid("polynomial coefficients must be finite and nonempty"));
                }
            }
            MapKind::Iterate { base, times } => {
                base.validate()?;
                if *times == 0 {
                    return Err(invalid("iterate count must be at least 1"));
                }
                if !base.is_self_map() || base.domain != self.domain || !self.is_self_map() {
                    return Err(Error::SpaceMismatch("iterates need a self-map on the same domain".into()));
                }
            }
            MapKind::Product { left, right } => {
                left.validate()?;
                right.validate()?;
                let dom = SpaceDescriptor::product(left.domain.clone(), right.domain.clone());
                let cod = SpaceDescriptor::product(left.codomain().clone(), right.codomain().clone());
                if dom != self.domain || &cod != self.codomain() {
                    return Err(Error::SpaceMismatch("product map spaces must be the products of the factors".into()));
                }
            }
            MapKind::Compose { maps } => {
                if maps.is_empty() {
                    return Err(invalid("compose needs at least one map"));
                }
                for m in maps {
                    m.validate()?;
                }
                if maps[0].domain != self.domain {
                    return Err(Error::SpaceMismatch("first composed map must start at the domain".into()));
                }
                for w in maps.windows(2) {
                    if w[0].codomain() != &w[1].domain {
                        return Err(Error::SpaceMismatch("composed maps must chain".into()));
                    }
                }
                if maps.last().expect("nonempty").codomain() != self.codomain() {
                    return Err(Error::SpaceMismatch("last composed map must end at the codomain".into()));
                }
            }
        }
        Ok(())
    }

    /// Image of a member point.
    pub fn apply(&self, p: &Point) -> Result<Point> {
        if !self.domain.contains(p) {
            return Err(Error::NotMember(p.to_string()));
        }
        self.eval(p)
    }

    /// `f^k(p)`, checking membership at every intermediate step.
    pub fn iterate_apply(&self, k: u32, p: &Point) -> Result<Point> {
        if k == 0 {
            return Err(invalid("iterate count must be at least 1"));
        }
        let mut x = p.clone();
        for _ in 0..k {
            x = self.apply(&x)?;
        }
        Ok(x)
    }

    /// Image without the domain membership check on the input.
    pub fn eval(&self, p: &Point) -> Result<Point> {
        let x = &p.coords;
        Ok(match &self.kind {
            MapKind::Identity => p.clone(),
            MapKind::Linear { matrix, offset } => {
                let mut y: Vec<f64> = matrix.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
                if let Some(o) = offset {
                    for (v, b) in y.iter_mut().zip(o) {
                        *v += b;
                    }
                }
                Point::new(0, y)
            }
            MapKind::Homothety { factor } => Point::new(0, x.iter().map(|c| c * factor).collect()),
            MapKind::ChainLinear => {
                let SpaceDescriptor::Chain { blocks } = self.domain else { unreachable!("validated") };
                let n = p.chart;
                match blocks {
                    ChainBlocks::Rectangles => {
                        let (sx, sy) = chain::rect_step_scales(n);
                        Point::new(n + 1, vec![x[0] * sx, x[1] * sy])
                    }
                    _ => {
                        let s = if chain::segment_doubles(blocks, n) { 2.0 } else { 1.0 };
                        Point::new(n + 1, vec![x[0] * s])
                    }
                }
            }
            MapKind::ConjugatedDoubling => {
                let (a, b) = conjugated::g(x[0], x[1]);
                Point::at(&[a, b])
            }
            MapKind::Power { exponent } => Point::at(&[x[0].powf(*exponent)]),
            MapKind::Polynomial { coeffs, reciprocal } => {
                let t = x[0];
                let mut v = coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
                if *reciprocal != 0.0 {
                    v += reciprocal / t;
                }
                Point::at(&[v])
            }
            MapKind::Iterate { base, times } => {
                let mut y = base.eval(p)?;
                for _ in 1..*times {
                    y = base.apply(&y)?;
                }
                y
            }
            MapKind::Product { left, right } => {
                let (a, b) = self.domain.split(p)?;
                SpaceDescriptor::join(&left.eval(&a)?, &right.eval(&b)?)
            }
            MapKind::Compose { maps } => {
                let mut y = maps[0].eval(p)?;
                for m in &maps[1..] {
                    y = m.apply(&y)?;
                }
                y
            }
        })
    }

    /// Preimage of `p` when the map is invertible there.
    pub fn inverse(&self, p: &Point) -> Option<Point> {
        let x = &p.coords;
        let q = match &self.kind {
            MapKind::Identity => p.clone(),
            MapKind::Linear { matrix, offset } => {
                let m = to_matrix(matrix);
                if !m.is_square() {
                    return None;
                }
                let mut v = DVector::from_column_slice(x);
                if let Some(o) = offset {
                    v -= DVector::from_column_slice(o);
                }
                let sol = m.lu().solve(&v)?;
                Point::new(0, sol.iter().copied().collect())
            }
            MapKind::Homothety { factor } => Point::new(0, x.iter().map(|c| c / factor).collect()),
            MapKind::ChainLinear => {
                let SpaceDescriptor::Chain { blocks } = self.domain else { return None };
                let n = p.chart.checked_sub(1)?;
                match blocks {
                    ChainBlocks::Rectangles => {
                        let (sx, sy) = chain::rect_step_scales(n);
                        Point::new(n, vec![x[0] / sx, x[1] / sy])
                    }
                    _ => {
                        let s = if chain::segment_doubles(blocks, n) { 2.0 } else { 1.0 };
                        Point::new(n, vec![x[0] / s])
                    }
                }
            }
            MapKind::ConjugatedDoubling => {
                let (a, b) = conjugated::g_inv(x[0], x[1]);
                Point::at(&[a, b])
            }
            MapKind::Power { exponent } => Point::at(&[x[0].powf(1.0 / exponent)]),
            MapKind::Polynomial { .. } => return None,
            MapKind::Iterate { base, times } => {
                let mut y = p.clone();
                for _ in 0..*times {
                    y = base.inverse(&y)?;
                }
                y
            }
            MapKind::Product { left, right } => {
                let (a, b) = self.codomain().split(p).ok()?;
                SpaceDescriptor::join(&left.inverse(&a)?, &right.inverse(&b)?)
            }
            MapKind::Compose { maps } => {
                let mut y = p.clone();
                for m in maps.iter().rev() {
                    y = m.inverse(&y)?;
                }
                y
            }
        };
        self.domain.contains(&q).then_some(q)
    }

    /// The matrix of a linear self-map of `R^q` (identity and homothety
    /// included; iterates become matrix powers).
    pub fn linear_part(&self) -> Option<DMatrix<f64>> {
        let q = if self.domain.single_chart() { self.domain.chart_dim(0)? } else { return None };
        match &self.kind {
            MapKind::Identity if self.domain.single_chart() => Some(DMatrix::identity(q, q)),
            MapKind::Linear { matrix, .. } => Some(to_matrix(matrix)),
            MapKind::Homothety { factor } => Some(DMatrix::identity(q, q) * *factor),
            MapKind::Iterate { base, times } => {
                let m = base.linear_part()?;
                Some((1..*times).fold(m.clone(), |acc, _| &m * acc))
            }
            _ => None,
        }
    }

    /// Operator norm of the linear part: the smallest Lipschitz constant.
    pub fn operator_norm(&self) -> Option<f64> {
        let m = self.linear_part()?;
        Some(m.singular_values().max())
    }

    /// Smallest singular value of the linear part: `|M v| >= lambda |v|`.
    pub fn expansion_constant(&self) -> Option<f64> {
        let m = self.linear_part()?;
        Some(m.singular_values().min())
    }

    /// A region containing `f^steps(B(center, radius))` enlarged by `slack`,
    /// when one can be computed exactly.
    pub fn image_region(&self, center: &Point, radius: f64, steps: u32, slack: f64) -> Option<Region> {
        let mut c = center.clone();
        for _ in 0..steps {
            c = self.eval(&c).ok()?;
        }
        match &self.kind {
            MapKind::Identity => Some(Region::Ball { center: c, radius: radius + slack }),
            MapKind::Homothety { factor } => {
                Some(Region::Ball { center: c, radius: radius * factor.powi(steps as i32) + slack })
            }
            MapKind::Linear { .. } => {
                let m = self.linear_part()?;
                let mk = (0..steps).fold(DMatrix::identity(m.nrows(), m.ncols()), |acc, _| &m * acc);
                let inv = mk.try_inverse()?;
                let inv_norm = inv.clone().singular_values().max();
                let shape = inv / (radius + slack * inv_norm);
                Some(Region::Ellipsoid { center: c.coords, shape })
            }
            MapKind::Iterate { base, times } => base.image_region(center, radius, steps * times, slack),
            MapKind::ConjugatedDoubling => {
                let lo = [center.coords[0] - radius, (center.coords[1] - radius).max(0.0)];
                let hi = [center.coords[0] + radius, center.coords[1] + radius];
                let (lo, hi) = self.image_box(&lo, &hi, steps)?;
                Some(Region::Box {
                    chart: 0,
                    lo: lo.iter().map(|v| v - slack).collect(),
                    hi: hi.iter().map(|v| v + slack).collect(),
                })
            }
            _ => None,
        }
    }

    /// Bounding box of the image of an axis box, for maps whose coordinate
    /// extremes are attained at corners.
    fn image_box(&self, lo: &[f64], hi: &[f64], steps: u32) -> Option<(Vec<f64>, Vec<f64>)> {
        if !matches!(self.kind, MapKind::ConjugatedDoubling) {
            return None;
        }
        let (mut lo, mut hi) = (lo.to_vec(), hi.to_vec());
        for _ in 0..steps {
            let mut nlo = [f64::INFINITY; 2];
            let mut nhi = [f64::NEG_INFINITY; 2];
            for x in [lo[0], hi[0]] {
                for y in [lo[1], hi[1]] {
                    let (a, b) = conjugated::g(x, y);
                    nlo = [nlo[0].min(a), nlo[1].min(b)];
                    nhi = [nhi[0].max(a), nhi[1].max(b)];
                }
            }
            lo = nlo.to_vec();
            hi = nhi.to_vec();
        }
        Some((lo, hi))
    }
}

pub(crate) fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

/// A declared control for a map.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlWitness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
}

/// Outcome of [`verify_control`].
#[derive(Clone, Debug, Serialize)]
pub struct ControlReport {
    pub pairs_checked: usize,
    pub violation_count: usize,
    /// The first violating pairs, in sampling order.
    pub violations: Vec<(Point, Point)>,
    /// Largest observed `d(f x, f x') / L(d(x, x'))`.
    pub max_ratio: f64,
}

/// Slack for inequality checks: `a <= b` passes when `a <= b (1 + 1e-12) + 1e-12`.
pub(crate) fn holds(a: f64, b: f64) -> bool {
    a <= b * (1.0 + 1e-12) + 1e-12
}

const MAX_REPORTED: usize = 16;

/// Samples member pairs near the base point and checks
/// `d(f x, f x') <= L(d(x, x'))`.
pub fn verify_control(
    map: &MapDescriptor,
    witness: &ControlWitness,
    region_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<ControlReport> {
    let control = match (&witness.control, witness.lipschitz) {
        (Some(c), _) => c.clone(),
        (None, Some(l)) => ControlFunction::affine(l, 0.0),
        (None, None) => return Err(invalid("witness declares no control")),
    };
    control.validate()?;
    if samples == 0 {
        return Err(invalid("samples must be at least 1"));
    }
    let pairs = sample_pairs(&map.domain, region_radius, samples, seed);
    let codomain = map.codomain();
    let results: Vec<(f64, bool)> = pairs
        .par_iter()
        .map(|(x, y)| -> Result<(f64, bool)> {
            let d = map.domain.distance(x, y)?;
            let e = codomain.distance(&map.apply(x)?, &map.apply(y)?)?;
            let bound = control.eval(d);
            let ratio = if bound > 0.0 { e / bound } else if e > 0.0 { f64::INFINITY } else { 0.0 };
            Ok((ratio, !holds(e, bound)))
        })
        .collect::<Result<_>>()?;
    let mut report = ControlReport { pairs_checked: pairs.len(), violation_count: 0, violations: Vec::new(), max_ratio: 0.0 };
    for ((ratio, bad), pair) in results.into_iter().zip(pairs) {
        report.max_ratio = report.max_ratio.max(ratio);
        if bad {
            report.violation_count += 1;
            if report.violations.len() < MAX_REPORTED {
                report.violations.push(pair);
            }
        }
    }
    Ok(report)
}

/// Seeded member pairs within `radius` of the base point.
pub(crate) fn sample_pairs(space: &SpaceDescriptor, radius: f64, samples: usize, seed: u64) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = space.base_point();
    let draw = |rng: &mut ChaCha8Rng| {
        for _ in 0..10_000 {
            let p = space.sample_point(rng, radius);
            if space.distance_unchecked(&p, &base) <= radius {
                return p;
            }
        }
        base.clone()
    };
    (0..samples).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
}

#[cfg(test)]
mod tests;
