//! Realized final-term families beyond the plain image construction.
//!
//! `Drift` climbs along a fixed direction by `delta` per step and spreads
//! only at the last rung; it realizes the ladder pseudoorbits of the
//! conjugated doubling map. `AxisSpread` walks along the half-line of a
//! bouquet and then out along one coordinate axis of an attached flat.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{visit_region, PseudoOrbit};
use crate::budget::Budget;
use crate::error::{invalid, Error, Result};
use crate::maps::{MapDescriptor, MapKind};
use crate::spaces::{within, Point, SpaceDescriptor};

/// Which realized pseudoorbits supply final terms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FinalTermFamily {
    /// `(x0, y, f(y), ..., f^{n-2}(y), z)` with `y` near `f(x0)` and `z`
    /// near `f^{n-1}(y)`.
    #[default]
    BallImage,
    /// `x_{i+1} = f(x_i) + delta * direction` up to `x_{n-2}`, then
    /// `x_{n-1} = w` near `f(x_{n-2})` and `x_n = f(w)`.
    Drift { direction: Vec<f64> },
    /// Bouquet walks out along coordinate axes; identity map only.
    AxisSpread,
}

/// The ladder `x_0, ..., x_{n-2}` of the drift family.
pub fn drift_ladder(map: &MapDescriptor, x0: &Point, n: usize, delta: f64, direction: &[f64]) -> Result<Vec<Point>> {
    let norm = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
    if direction.len() != x0.coords.len() || !(norm > 0.0) {
        return Err(invalid("drift direction must be a nonzero vector of the chart dimension"));
    }
    let mut pts = vec![x0.clone()];
    for _ in 0..n.saturating_sub(2) {
        let mut next = map.eval(pts.last().expect("nonempty"))?;
        for (c, d) in next.coords.iter_mut().zip(direction) {
            *c += delta * d / norm;
        }
        if !map.domain.contains(&next) {
            return Err(Error::Infeasible(format!("drift leaves the domain at {next}")));
        }
        pts.push(next);
    }
    Ok(pts)
}

/// Streams drift final terms `z` with the last free point `w`.
#[allow(clippy::too_many_arguments)]
pub fn visit_drift(
    map: &MapDescriptor,
    x0: &Point,
    n: usize,
    delta: f64,
    spacing: f64,
    direction: &[f64],
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
    if n == 1 {
        let c = map.eval(x0)?;
        return space.visit_lattice(&c, delta, spacing, budget.points, &mut |z| visit(z, z));
    }
    let ladder = drift_ladder(&map, x0, n, delta, direction)?;
    let c = map.eval(ladder.last().expect("nonempty"))?;
    if let (Some(region), true) = (map.image_region(&c, delta, 1, 0.0), map.inverse(&c).is_some()) {
        return visit_region(space, &region, spacing, budget.points, &mut |z| {
            let Some(w) = map.inverse(z) else { return Ok(()) };
            if within(space.distance_unchecked(&w, &c), delta) {
                visit(z, &w)?;
            }
            Ok(())
        });
    }
    let mut found = Vec::new();
    let mut seen = HashSet::new();
    space.visit_lattice(&c, delta, spacing, budget.points, &mut |w| {
        let z = map.eval(w)?;
        if seen.insert((z.chart, z.coords.iter().map(|v| v.to_bits()).collect::<Vec<_>>())) {
            found.push((z, w.clone()));
        }
        Ok(())
    })?;
    found.sort_by(|a, b| a.0.lex_cmp(&b.0));
    for (z, w) in &found {
        visit(z, w)?;
    }
    Ok(())
}

/// The explicit drift pseudoorbit ending at `z` through `w`.
pub fn drift_orbit(
    map: &MapDescriptor,
    x0: &Point,
    n: usize,
    delta: f64,
    direction: &[f64],
    w: &Point,
    z: &Point,
) -> Result<PseudoOrbit> {
    if n == 1 {
        return Ok(PseudoOrbit::new(vec![x0.clone(), z.clone()], delta));
    }
    let mut pts = drift_ladder(map, x0, n, delta, direction)?;
    pts.push(w.clone());
    pts.push(z.clone());
    Ok(PseudoOrbit::new(pts, delta))
}

/// A final term of the axis-spread family, in compact form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum AxisItem {
    /// Half-line point at position `s`.
    Line { s: f64 },
    /// `sign * radius * e_axis` in the flat attached at position `level`.
    Flat { level: u32, axis: u32, negative: bool, radius: f64 },
}

impl AxisItem {
    /// Exact bouquet distance between two items.
    pub fn distance(&self, other: &AxisItem) -> f64 {
        match (*self, *other) {
            (AxisItem::Line { s }, AxisItem::Line { s: t }) => (s - t).abs(),
            (AxisItem::Line { s }, AxisItem::Flat { level, radius, .. })
            | (AxisItem::Flat { level, radius, .. }, AxisItem::Line { s }) => (s - level as f64).abs() + radius,
            (
                AxisItem::Flat { level: k, axis: i, negative: a, radius: r },
                AxisItem::Flat { level: l, axis: j, negative: b, radius: q },
            ) => {
                if k != l {
                    r + (k as f64 - l as f64).abs() + q
                } else if i != j {
                    r.hypot(q)
                } else if a == b {
                    (r - q).abs()
                } else {
                    r + q
                }
            }
        }
    }

    /// The dense bouquet point.
    pub fn to_point(&self) -> Point {
        match *self {
            AxisItem::Line { s } => Point::at(&[s]),
            AxisItem::Flat { level, axis, negative, radius } => {
                let mut coords = vec![0.0; 1usize << level];
                coords[axis as usize] = if negative { -radius } else { radius };
                Point::new(level as usize + 1, coords)
            }
        }
    }
}

fn bouquet_start(map: &MapDescriptor, x0: &Point) -> Result<(u32, f64)> {
    let SpaceDescriptor::Bouquet { max_level } = map.domain else {
        return Err(Error::Infeasible("axis spread needs a bouquet space".into()));
    };
    if !matches!(map.kind, MapKind::Identity) {
        return Err(Error::Infeasible("axis spread is realized for the identity map only".into()));
    }
    if x0.chart != 0 || !map.domain.contains(x0) {
        return Err(invalid("axis spread starts on the half-line"));
    }
    Ok((max_level, x0.coords[0]))
}

fn steps_to(from: f64, to: f64, delta: f64) -> usize {
    let d = (to - from).abs() / delta;
    // Tolerate rounding so exact multiples of delta are not overcounted.
    (d - 1e-9).ceil().max(0.0) as usize
}

/// Axis-spread final terms: half-line grid points reachable in `n` steps,
/// then for every flat reachable with `m >= 1` steps to spare, the `2 * 2^k`
/// axis points at radius `m * delta`. Ordered half-line first, then by
/// level, axis and sign.
pub fn axis_items(map: &MapDescriptor, x0: &Point, n: usize, delta: f64, spacing: f64, budget: &Budget) -> Result<Vec<AxisItem>> {
    if n == 0 || !(delta > 0.0 && spacing > 0.0) {
        return Err(invalid("axis spread needs n >= 1 and positive delta and spacing"));
    }
    let (max_level, s0) = bouquet_start(map, x0)?;
    let reach = n as f64 * delta;
    let lo = ((s0 - reach).max(0.0) / spacing).ceil() as i64;
    let hi = ((s0 + reach) / spacing).floor() as i64;
    let mut items: Vec<AxisItem> = (lo..=hi).map(|i| AxisItem::Line { s: i as f64 * spacing }).collect();
    for level in 0..=max_level {
        let a = steps_to(s0, level as f64, delta);
        if a >= n {
            continue;
        }
        let radius = (n - a) as f64 * delta;
        let dim = 1u64 << level;
        budget.check_points(items.len() as u64 + 2 * dim)?;
        for axis in 0..dim as u32 {
            for negative in [false, true] {
                items.push(AxisItem::Flat { level, axis, negative, radius });
            }
        }
    }
    Ok(items)
}

/// The explicit pseudoorbit of the identity ending at `item`: walk along the
/// half-line by `delta` per step, out along the axis, then stay.
pub fn axis_orbit(x0: &Point, n: usize, delta: f64, item: &AxisItem) -> PseudoOrbit {
    let s0 = x0.coords[0];
    let toward = |from: f64, to: f64| if (to - from).abs() <= delta { to } else { from + delta * (to - from).signum() };
    let mut pts = vec![x0.clone()];
    let mut s = s0;
    let target = match item {
        AxisItem::Line { s } => *s,
        AxisItem::Flat { level, .. } => *level as f64,
    };
    while pts.len() <= n && s != target {
        s = toward(s, target);
        pts.push(Point::at(&[s]));
    }
    if let AxisItem::Flat { level, axis, negative, radius } = *item {
        let mut t = 0.0;
        while pts.len() <= n {
            t = toward(t, radius);
            pts.push(AxisItem::Flat { level, axis, negative, radius: t }.to_point());
        }
    }
    while pts.len() <= n {
        let last = pts.last().expect("nonempty").clone();
        pts.push(last);
    }
    PseudoOrbit::new(pts, delta)
}

/// True-orbit family `(x0, y, f(y), ..., f^{n-1}(y))` for grid points `y`
/// within `delta` of `f(x0)`, in grid order.
pub fn visit_orbit_family(
    map: &MapDescriptor,
    x0: &Point,
    n: usize,
    delta: f64,
    spacing: f64,
    budget: &Budget,
    visit: &mut dyn FnMut(PseudoOrbit) -> Result<()>,
) -> Result<()> {
    if n == 0 || !(delta > 0.0 && spacing > 0.0) {
        return Err(invalid("orbit family needs n >= 1 and positive delta and spacing"));
    }
    let map = map.for_spacing(spacing);
    if !map.domain.contains(x0) {
        return Err(Error::NotMember(x0.to_string()));
    }
    let c = map.eval(x0)?;
    let mut seeds = Vec::new();
    map.domain.visit_lattice(&c, delta, spacing, budget.points, &mut |y| {
        seeds.push(y.clone());
        Ok(())
    })?;
    budget.check_orbits(seeds.len() as u64)?;
    for y in seeds {
        let mut pts = Vec::with_capacity(n + 1);
        pts.push(x0.clone());
        pts.push(y);
        while pts.len() <= n {
            let next = map.eval(pts.last().expect("nonempty"))?;
            pts.push(next);
        }
        visit(PseudoOrbit::new(pts, delta))?;
    }
    Ok(())
}
