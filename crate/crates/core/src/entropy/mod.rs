//! Separated and spanning counts, growth-rate fits, the triple-limit
//! schedule and box-counting dimension.

mod dimension;
mod fit;
mod greedy;

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::budget::Budget;
use crate::error::{invalid, Error, Result};
use crate::maps::MapDescriptor;
use crate::orbits::families::{axis_items, visit_drift, visit_orbit_family, AxisItem};
use crate::orbits::{
    enumerate, orbit_distance_unchecked, shadow_hull, visit_ball_image, FinalTermFamily, PseudoOrbit,
};
use crate::spaces::{Point, SpaceDescriptor};

pub use dimension::{bcd_estimate, BoundedSet, DimensionEstimate};
pub use fit::{fit_growth_rate, least_squares, limsup_rate, GrowthFit};
pub use greedy::{greedy_separated, greedy_spanning, Packer};

/// How a count is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    /// Greedy scans over every grid pseudoorbit.
    FullEnum,
    /// Greedy packing of realized final terms (lower bound).
    FinalTerm {
        #[serde(default)]
        family: FinalTermFamily,
    },
    /// Greedy packing of true orbits started one free step from `x0`
    /// (lower bound).
    OrbitFamily,
    /// Cover of the shadowing hull by small boxes (upper bound).
    ShadowHull {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
    /// Block coding with a Lipschitz constant (upper bound).
    Coded {
        lambda: f64,
        #[serde(default = "unit")]
        constant: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::FullEnum => "FULL_ENUM",
            Strategy::FinalTerm { .. } => "FINAL_TERM",
            Strategy::OrbitFamily => "ORBIT_FAMILY",
            Strategy::ShadowHull { .. } => "SHADOW_HULL",
            Strategy::Coded { .. } => "CODED",
        }
    }

    /// Whether the strategy yields separated (lower) counts.
    pub fn is_lower(&self) -> bool {
        matches!(self, Strategy::FullEnum | Strategy::FinalTerm { .. } | Strategy::OrbitFamily)
    }

    /// Whether the strategy yields spanning (upper) counts.
    pub fn is_upper(&self) -> bool {
        matches!(self, Strategy::FullEnum | Strategy::ShadowHull { .. } | Strategy::Coded { .. })
    }
}

/// One count at `(n, delta, R)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountRecord {
    pub n: usize,
    pub delta: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub strategy: &'static str,
    pub separated_lower: Option<f64>,
    pub spanning_upper: Option<f64>,
}

/// CSV header of count grids.
pub const CSV_HEADER: [&str; 6] = ["n", "delta", "R", "strategy", "separated_lower", "spanning_upper"];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes records as CSV with the fixed header.
pub fn write_csv<W: Write>(records: &[CountRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.delta.to_string(),
            r.r.to_string(),
            r.strategy.to_string(),
            fmt_opt(r.separated_lower),
            fmt_opt(r.spanning_upper),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn check_args(n: usize, r: f64, delta: f64, spacing: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("orbit length must be at least 1"));
    }
    if !(r > 0.0 && delta > 0.0 && spacing > 0.0) {
        return Err(invalid("R, delta and spacing must be positive"));
    }
    Ok(())
}

fn point_packer(space: &SpaceDescriptor, r: f64) -> Packer<Point, impl Fn(&Point, &Point) -> f64> {
    let d = space.clone();
    let packer = Packer::new(r, move |a: &Point, b: &Point| d.distance_unchecked(a, b));
    if space.is_coordinate_dominated() {
        packer.with_key(|p: &Point| p.coords.clone())
    } else {
        packer
    }
}

fn orbit_packer(space: &SpaceDescriptor, r: f64) -> Packer<PseudoOrbit, impl Fn(&PseudoOrbit, &PseudoOrbit) -> f64> {
    let d = space.clone();
    let packer = Packer::new(r, move |a: &PseudoOrbit, b: &PseudoOrbit| orbit_distance_unchecked(&d, &a.points, &b.points));
    // The final term's coordinates are dominated by the orbit distance.
    if space.is_coordinate_dominated() {
        packer.with_key(|o: &PseudoOrbit| o.last().coords.clone())
    } else {
        packer
    }
}

/// Greedy count over the exhaustive grid family. The separated and
/// spanning scans share one rule, so both fields carry the same count.
pub fn count_full(
    map: &MapDescriptor,
    x0: &Point,
    n: usize,
    r: f64,
    delta: f64,
    spacing: f64,
    budget: &Budget,
) -> Result<CountRecord> {
    check_args(n, r, delta, spacing)?;
    let family = enumerate(map, x0, n, delta, spacing, budget)?;
    let mut packer = orbit_packer(&map.domain, r);
    for o in family {
        packer.offer(o);
    }
    let c = packer.count() as f64;
    Ok(CountRecord { n, delta, r, strategy: "FULL_ENUM", separated_lower: Some(c), spanning_upper: Some(c) })
}

/// A lower bound for `s(f, n, R, delta, x0)`.
#[allow(clippy::too_many_arguments)]
pub fn count_separated(
    map: &MapDescriptor,
    x0: &Point,
    n: usize,
    r: f64,
    delta: f64,
    strategy: &Strategy,
    spacing: f64,
    budget: &Budget,
) -> Result<CountRecord> {
    check_args(n, r, delta, spacing)?;
    let count = match strategy {
        Strategy::FullEnum => return count_full(map, x0, n, r, delta, spacing, budget),
        Strategy::FinalTerm { family } => final_term_count(map, x0, n, r, delta, family, spacing, budget)?,
        Strategy::OrbitFamily => {
            let mut packer = orbit_packer(&map.domain, r);
            visit_orbit_family(map, x0, n, delta, spacing, budget, &mut |o| {
                packer.offer(o);
                Ok(())
            })?;
            packer.count()
        }
        other => return Err(Error::Infeasible(format!("{} does not give separated counts", other.name()))),
    };
    Ok(CountRecord {
        n,
        delta,
        r,
        strategy: strategy.name(),
        separated_lower: Some(count as f64),
        spanning_upper: None,
    })
}

#[allow(clippy::too_many_arguments)]
fn final_term_count(
    map: &MapDescriptor,
    x0: &Point,
    n: usize,
    r: f64,
    delta: f64,
    family: &FinalTermFamily,
    spacing: f64,
    budget: &Budget,
) -> Result<usize> {
    // Each offered final term stands for one realized pseudoorbit.
    let mut packer = point_packer(&map.domain, r);
    let mut offered = 0u64;
    let mut offer = |z: &Point, _: &Point| {
        offered += 1;
        budget.check_orbits(offered)?;
        packer.offer(z.clone());
        Ok(())
    };
    match family {
        FinalTermFamily::BallImage => visit_ball_image(map, x0, n, delta, spacing, budget, &mut offer)?,
        FinalTermFamily::Drift { direction } => {
            visit_drift(map, x0, n, delta, spacing, direction, budget, &mut offer)?
        }
        FinalTermFamily::AxisSpread => {
            let items = axis_items(map, x0, n, delta, spacing, budget)?;
            budget.check_orbits(items.len() as u64)?;
            return Ok(axis_greedy(&items, r).len());
        }
    }
    Ok(packer.count())
}

/// First-fit scan over axis-spread items, equal to [`greedy_separated`]
/// with [`AxisItem::distance`] but using the family's structure: all flat
/// items of one level share a radius, so levels are compared through one
/// representative and axes through the set of kept ones.
pub fn axis_greedy(items: &[AxisItem], r: f64) -> Vec<usize> {
    use std::collections::BTreeMap;
    let mut kept = Vec::new();
    let mut line: Vec<f64> = Vec::new();
    // level -> (radius, kept (axis, negative) pairs)
    let mut flats: BTreeMap<u32, (f64, Vec<(u32, bool)>)> = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        let ok = match *item {
            AxisItem::Line { s } => {
                line.iter().all(|t| (s - t).abs() >= r)
                    && flats.iter().all(|(&l, (q, _))| (s - l as f64).abs() + q >= r)
            }
            AxisItem::Flat { level, axis, negative, radius } => {
                let from_line = line.iter().all(|t| (t - level as f64).abs() + radius >= r);
                let from_flats = flats.iter().all(|(&l, (q, axes))| {
                    if l != level {
                        return radius + (level as f64 - l as f64).abs() + q >= r;
                    }
                    axes.iter().all(|&(a, neg)| {
                        let d = if a != axis {
                            radius.hypot(*q)
                        } else if neg == negative {
                            (radius - q).abs()
                        } else {
                            radius + q
                        };
                        d >= r
                    })
                });
                from_line && from_flats
            }
        };
        if ok {
            kept.push(i);
            match *item {
                AxisItem::Line { s } => line.push(s),
                AxisItem::Flat { level, axis, negative, radius } => {
                    let entry = flats.entry(level).or_insert((radius, Vec::new()));
                    debug_assert_eq!(entry.0, radius);
                    entry.1.push((axis, negative));
                }
            }
        }
    }
    kept
}

/// An upper bound for `r(f, n, R, delta, x0)`.
#[allow(clippy::too_many_arguments)]
pub fn count_spanning(
    map: &MapDescriptor,
    x0: &Point,
    n: usize,
    r: f64,
    delta: f64,
    strategy: &Strategy,
    spacing: f64,
    budget: &Budget,
) -> Result<CountRecord> {
    check_args(n, r, delta, spacing)?;
    let count = match strategy {
        Strategy::FullEnum => return count_full(map, x0, n, r, delta, spacing, budget),
        Strategy::ShadowHull { lambda } => shadow_hull_count(map, x0, n, r, delta, *lambda)?,
        Strategy::Coded { lambda, constant } => coded_count(map, n, r, delta, *lambda, *constant)?,
        other => return Err(Error::Infeasible(format!("{} does not give spanning counts", other.name()))),
    };
    Ok(CountRecord { n, delta, r, strategy: strategy.name(), separated_lower: None, spanning_upper: Some(count) })
}

/// Boxes of diameter `S = R - 2 delta / (lambda - 1)` covering the shadowing
/// hull. Pseudoorbits whose final terms share a box are within `R` of each
/// other, so one orbit per box spans.
pub fn shadow_hull_count(map: &MapDescriptor, x0: &Point, n: usize, r: f64, delta: f64, lambda: Option<f64>) -> Result<f64> {
    let hull = shadow_hull(map, x0, n, delta, lambda)?;
    let s = r - 2.0 * hull.radius;
    if !(s > 0.0) {
        return Err(Error::Infeasible(format!("R = {r} does not exceed the shadowing width {}", 2.0 * hull.radius)));
    }
    let q = hull.axes.len() as f64;
    let side = s / q.sqrt();
    if let SpaceDescriptor::Cone(cone) = &map.domain {
        if !cone.is_full() {
            let rho = hull.axes.iter().fold(0.0f64, |m, a| m.max(a.0));
            let dirs = cone.directions();
            return Ok(cone_cells_crossed(&dirs, &hull.center.coords, rho, side) as f64);
        }
    }
    Ok(hull.axes.iter().map(|(len, _)| (2.0 * len / side).ceil().max(1.0)).product())
}

/// Number of closed grid cells of side `side` met by the rays `t * u`,
/// `t >= 0`, inside the ball `B(center, rho)`.
fn cone_cells_crossed(dirs: &[[f64; 2]], center: &[f64], rho: f64, side: f64) -> usize {
    let mut cells: HashSet<(i64, i64)> = HashSet::new();
    let cc = center[0] * center[0] + center[1] * center[1];
    for u in dirs {
        let b = u[0] * center[0] + u[1] * center[1];
        let disc = b * b - cc + rho * rho;
        if disc < 0.0 {
            continue;
        }
        let (t0, t1) = ((b - disc.sqrt()).max(0.0), b + disc.sqrt());
        if t1 < t0 {
            continue;
        }
        let mut ts = vec![t0, t1];
        for &uk in &u[..2] {
            if uk == 0.0 {
                continue;
            }
            let (a, z) = (t0 * uk / side, t1 * uk / side);
            let (lo, hi) = if a <= z { (a, z) } else { (z, a) };
            for m in lo.ceil() as i64..=hi.floor() as i64 {
                ts.push(m as f64 * side / uk);
            }
        }
        ts.sort_by(f64::total_cmp);
        let cell = |t: f64| ((t * u[0] / side).floor() as i64, (t * u[1] / side).floor() as i64);
        cells.insert(cell(t0));
        for w in ts.windows(2) {
            cells.insert(cell(0.5 * (w[0] + w[1])));
        }
    }
    cells.len()
}

/// Block-coding bound `(C 2^q lambda^{mq})^{ceil(n/m)}` with
/// `S = 2 delta / (lambda - 1)` and `m` the largest integer with
/// `2 S lambda^m < R`.
pub fn coded_count(map: &MapDescriptor, n: usize, r: f64, delta: f64, lambda: f64, constant: f64) -> Result<f64> {
    if !(lambda > 1.0) || !(constant > 0.0) {
        return Err(invalid("coding needs lambda > 1 and a positive constant"));
    }
    if !map.domain.single_chart() || !matches!(map.domain, SpaceDescriptor::Euclidean { .. }) {
        return Err(Error::Infeasible("coding is defined on Euclidean spaces".into()));
    }
    if let Some(norm) = map.operator_norm() {
        if lambda < norm * (1.0 - 1e-12) {
            return Err(invalid(format!("lambda {lambda} is below the Lipschitz constant {norm}")));
        }
    }
    let q = map.domain.chart_dim(0).expect("single chart") as f64;
    let s = 2.0 * delta / (lambda - 1.0);
    if !(2.0 * s * lambda < r) {
        return Err(Error::Infeasible(format!("R = {r} must exceed 2 S lambda = {}", 2.0 * s * lambda)));
    }
    let mut m = 1usize;
    while 2.0 * s * lambda.powi(m as i32 + 1) < r {
        m += 1;
    }
    let blocks = n.div_ceil(m) as f64;
    let per_block = constant.ln() + q * 2f64.ln() + m as f64 * q * lambda.ln();
    Ok((blocks * per_block).exp())
}

/// A finite candidate family of pseudoorbits in one space.
#[derive(Clone, Debug)]
pub struct CandidateFamily {
    pub space: SpaceDescriptor,
    pub orbits: Vec<PseudoOrbit>,
}

impl CandidateFamily {
    pub fn enumerate(map: &MapDescriptor, x0: &Point, n: usize, delta: f64, spacing: f64, budget: &Budget) -> Result<Self> {
        Ok(CandidateFamily { space: map.domain.clone(), orbits: enumerate(map, x0, n, delta, spacing, budget)? })
    }

    fn distances(&self) -> Vec<Vec<f64>> {
        self.orbits
            .par_iter()
            .map(|a| self.orbits.iter().map(|b| orbit_distance_unchecked(&self.space, &a.points, &b.points)).collect())
            .collect()
    }

    pub fn separated(&self, r: f64) -> usize {
        greedy_separated(&self.orbits, r, |a, b| orbit_distance_unchecked(&self.space, &a.points, &b.points)).len()
    }

    pub fn spanning(&self, r: f64) -> usize {
        greedy_spanning(&self.orbits, r, |a, b| orbit_distance_unchecked(&self.space, &a.points, &b.points)).len()
    }
}

/// Greedy counts of a product family with its factor counts.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductCount {
    pub n: usize,
    pub delta: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub separated: usize,
    pub spanning: usize,
    pub left: (usize, usize),
    pub right: (usize, usize),
}

impl ProductCount {
    pub fn record(&self) -> CountRecord {
        CountRecord {
            n: self.n,
            delta: self.delta,
            r: self.r,
            strategy: "FULL_ENUM",
            separated_lower: Some(self.separated as f64),
            spanning_upper: Some(self.spanning as f64),
        }
    }
}

/// Runs both greedy scans on the product family `left x right` under the
/// max metric, in lexicographic pair order.
pub fn count_product(left: &CandidateFamily, right: &CandidateFamily, r: f64, budget: &Budget) -> Result<ProductCount> {
    let (Some(a), Some(b)) = (left.orbits.first(), right.orbits.first()) else {
        return Err(invalid("product of an empty family"));
    };
    if a.len() != b.len() || a.delta != b.delta {
        return Err(invalid("factor families must share n and delta"));
    }
    let size = left.orbits.len() as u64 * right.orbits.len() as u64;
    budget.check_orbits(size)?;
    let (dl, dr) = (left.distances(), right.distances());
    let pairs: Vec<(usize, usize)> =
        (0..left.orbits.len()).flat_map(|i| (0..right.orbits.len()).map(move |j| (i, j))).collect();
    let dist = |p: &(usize, usize), q: &(usize, usize)| dl[p.0][q.0].max(dr[p.1][q.1]);
    Ok(ProductCount {
        n: a.len(),
        delta: a.delta,
        r,
        separated: greedy_separated(&pairs, r, dist).len(),
        spanning: greedy_spanning(&pairs, r, dist).len(),
        left: (left.separated(r), left.spanning(r)),
        right: (right.separated(r), right.spanning(r)),
    })
}

/// Grid step of a schedule cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpacingRule {
    Fixed { value: f64 },
    /// `fraction * R`.
    PerRadius { fraction: f64 },
    /// `fraction * delta`.
    PerDelta { fraction: f64 },
}

impl SpacingRule {
    pub fn spacing(&self, delta: f64, r: f64) -> f64 {
        match *self {
            SpacingRule::Fixed { value } => value,
            SpacingRule::PerRadius { fraction } => fraction * r,
            SpacingRule::PerDelta { fraction } => fraction * delta,
        }
    }
}

/// One `delta` of a schedule with its radii, `n` window and strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCell {
    pub delta: f64,
    pub radii: Vec<f64>,
    pub window: (usize, usize),
    pub spacing: SpacingRule,
    #[serde(default)]
    pub lower: Option<Strategy>,
    #[serde(default)]
    pub upper: Option<Strategy>,
}

/// Default slope change below which `R` counts as stabilized.
pub const STABILIZATION_TOL: f64 = 0.02;

/// Ordered cells, increasing in `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub cells: Vec<ScheduleCell>,
    #[serde(default = "default_tol")]
    pub stabilization_tol: f64,
}

fn default_tol() -> f64 {
    STABILIZATION_TOL
}

impl Schedule {
    pub fn new(cells: Vec<ScheduleCell>) -> Self {
        Schedule { cells, stabilization_tol: STABILIZATION_TOL }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(invalid("schedule is empty"));
        }
        for w in self.cells.windows(2) {
            if !(w[0].delta < w[1].delta) {
                return Err(invalid("schedule deltas must be strictly increasing"));
            }
        }
        for c in &self.cells {
            if !(c.delta > 0.0) {
                return Err(invalid("deltas must be positive"));
            }
            if c.radii.is_empty() || !(c.radii[0] > 0.0) || c.radii.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(invalid("R lists must be nonempty, positive and strictly increasing"));
            }
            if c.window.0 == 0 || c.window.1 < c.window.0 + 2 {
                return Err(invalid("n windows need n_lo >= 1 and at least three lengths"));
            }
            for r in &c.radii {
                if !(c.spacing.spacing(c.delta, *r) > 0.0) {
                    return Err(invalid("spacing must be positive"));
                }
            }
            match (&c.lower, &c.upper) {
                (None, None) => return Err(invalid("a schedule cell needs a strategy")),
                (Some(s), _) if !s.is_lower() => {
                    return Err(invalid(format!("{} is not a lower-bound strategy", s.name())))
                }
                (_, Some(s)) if !s.is_upper() => {
                    return Err(invalid(format!("{} is not an upper-bound strategy", s.name())))
                }
                _ => {}
            }
        }
        if !(self.stabilization_tol > 0.0) {
            return Err(invalid("stabilization tolerance must be positive"));
        }
        Ok(())
    }
}

/// Fitted slopes at one `(delta, R)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridCell {
    pub delta: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub slope_lower: Option<f64>,
    pub slope_upper: Option<f64>,
    pub fit_window: (usize, usize),
    pub fit_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// The `R`-limit proxy for one `delta`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaSummary {
    pub delta: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub slope: f64,
    pub slope_lower: Option<f64>,
    pub slope_upper: Option<f64>,
    pub stabilized: bool,
}

/// A finite value or the infinity flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extrapolated {
    Value(f64),
    Infinity,
    /// No cell produced a slope.
    Missing,
}

impl Serialize for Extrapolated {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extrapolated::Value(v) => s.serialize_f64(*v),
            Extrapolated::Infinity => s.serialize_str("+INFINITY_FLAG"),
            Extrapolated::Missing => s.serialize_none(),
        }
    }
}

/// Result of [`estimate_entropy`].
#[derive(Clone, Debug, Serialize)]
pub struct EntropyEstimate {
    pub grid: Vec<GridCell>,
    pub per_delta: Vec<DeltaSummary>,
    pub extrapolated_value: Extrapolated,
    /// The slope at the largest `delta`, reported even when flagged.
    pub final_slope: Option<f64>,
    #[serde(skip)]
    pub records: Vec<CountRecord>,
    pub budget_exceeded: bool,
}

impl EntropyEstimate {
    pub fn slope_for(&self, delta: f64) -> Option<f64> {
        self.per_delta.iter().find(|d| d.delta == delta).map(|d| d.slope)
    }
}

type TaskOut = Result<(Option<CountRecord>, Option<CountRecord>)>;

fn run_task(map: &MapDescriptor, x0: &Point, cell: &ScheduleCell, r: f64, n: usize, budget: &Budget) -> TaskOut {
    let spacing = cell.spacing.spacing(cell.delta, r);
    let both_full = matches!(cell.lower, Some(Strategy::FullEnum)) && matches!(cell.upper, Some(Strategy::FullEnum));
    if both_full {
        let rec = count_full(map, x0, n, r, cell.delta, spacing, budget)?;
        return Ok((Some(rec), None));
    }
    let lower = match &cell.lower {
        Some(s) => Some(count_separated(map, x0, n, r, cell.delta, s, spacing, budget)?),
        None => None,
    };
    let upper = match &cell.upper {
        Some(s) => Some(count_spanning(map, x0, n, r, cell.delta, s, spacing, budget)?),
        None => None,
    };
    Ok((lower, upper))
}

/// Emulates `lim_delta lim_R limsup_n (1/n) log s` over a schedule.
///
/// Each `(delta, R, n)` count is independent and runs in parallel; results
/// are merged in schedule order. A budget error marks its `(delta, R)` cell
/// and the remaining cells are still reported.
pub fn estimate_entropy(map: &MapDescriptor, x0: &Point, schedule: &Schedule, budget: &Budget) -> Result<EntropyEstimate> {
    schedule.validate()?;
    map.validate()?;
    let mut tasks = Vec::new();
    for (ci, cell) in schedule.cells.iter().enumerate() {
        for (ri, r) in cell.radii.iter().enumerate() {
            for n in cell.window.0..=cell.window.1 {
                tasks.push((ci, ri, *r, n));
            }
        }
    }
    let outs: Vec<TaskOut> =
        tasks.par_iter().map(|&(ci, _, r, n)| run_task(map, x0, &schedule.cells[ci], r, n, budget)).collect();

    let mut records = Vec::new();
    let mut grid = Vec::new();
    let mut per_delta = Vec::new();
    let mut budget_exceeded = false;
    let mut k = 0;
    for (ci, cell) in schedule.cells.iter().enumerate() {
        let mut slopes: Vec<(f64, Option<f64>, Option<f64>)> = Vec::new();
        for r in &cell.radii {
            let mut lower_pts = Vec::new();
            let mut upper_pts = Vec::new();
            let mut error = None;
            for _ in cell.window.0..=cell.window.1 {
                let (tci, _, _, n) = tasks[k];
                debug_assert_eq!(tci, ci);
                match &outs[k] {
                    Ok((lo, up)) => {
                        if let Some(rec) = lo {
                            records.push(rec.clone());
                            lower_pts.extend(rec.separated_lower.map(|c| (n, c)));
                            if up.is_none() && cell.upper.is_some() {
                                upper_pts.extend(rec.spanning_upper.map(|c| (n, c)));
                            }
                        }
                        if let Some(rec) = up {
                            records.push(rec.clone());
                            upper_pts.extend(rec.spanning_upper.map(|c| (n, c)));
                        }
                    }
                    Err(e) if e.is_budget() => {
                        budget_exceeded = true;
                        error.get_or_insert_with(|| e.to_string());
                    }
                    Err(e) => return Err(Error::InvalidInput(format!("delta {} R {r} n {n}: {e}", cell.delta))),
                }
                k += 1;
            }
            let fl = (!lower_pts.is_empty()).then(|| limsup_rate(&lower_pts, cell.window).ok()).flatten();
            let fu = (!upper_pts.is_empty()).then(|| limsup_rate(&upper_pts, cell.window).ok()).flatten();
            let fit_window = fl.or(fu).map(|f| f.window).unwrap_or(cell.window);
            let fit_residual = fl.map(|f| f.residual).unwrap_or(0.0).max(fu.map(|f| f.residual).unwrap_or(0.0));
            grid.push(GridCell {
                delta: cell.delta,
                r: *r,
                slope_lower: fl.map(|f| f.slope),
                slope_upper: fu.map(|f| f.slope),
                fit_window,
                fit_residual,
                error,
            });
            slopes.push((*r, fl.map(|f| f.slope), fu.map(|f| f.slope)));
        }
        if let Some(s) = stabilize(&slopes, schedule.stabilization_tol) {
            per_delta.push(DeltaSummary { delta: cell.delta, ..s });
        }
    }
    let final_slope = per_delta.last().map(|d| d.slope);
    let flagged = per_delta.iter().filter(|d| d.slope >= 0.5 * d.delta * std::f64::consts::LN_2).count() >= 3;
    let extrapolated_value = match (flagged, final_slope) {
        (true, _) => Extrapolated::Infinity,
        (false, Some(v)) => Extrapolated::Value(v),
        (false, None) => Extrapolated::Missing,
    };
    Ok(EntropyEstimate { grid, per_delta, extrapolated_value, final_slope, records, budget_exceeded })
}

/// The slope at the largest `R` whose primary slope changed by less than
/// `tol` from the previous `R`; otherwise the largest `R`, unstabilized.
/// The primary slope is the lower one when present.
fn stabilize(slopes: &[(f64, Option<f64>, Option<f64>)], tol: f64) -> Option<DeltaSummary> {
    let primary: Vec<(usize, f64)> =
        slopes.iter().enumerate().filter_map(|(i, (_, lo, up))| lo.or(*up).map(|s| (i, s))).collect();
    let (&(last_i, last_s), _) = primary.split_last()?;
    let stable = primary.windows(2).rev().find(|w| (w[1].1 - w[0].1).abs() < tol).map(|w| w[1]);
    let ((i, slope), stabilized) = match stable {
        Some(p) => (p, true),
        None => ((last_i, last_s), false),
    };
    let (r, lo, up) = slopes[i];
    Some(DeltaSummary { delta: 0.0, r, slope, slope_lower: lo, slope_upper: up, stabilized })
}
