//! Grid enumeration in balls, boxes and ellipsoids.
//!
//! All routines visit points in lexicographic coordinate order and count
//! examined grid cells against a budget.

use nalgebra::DMatrix;

use super::chain::{self, ChainBlocks};
use super::{within, Point, SpaceDescriptor, TOL};
use crate::error::{Error, Result};

type Visit<'a> = &'a mut dyn FnMut(&Point) -> Result<()>;

struct Counter {
    used: u64,
    max: u64,
}

impl Counter {
    fn tick(&mut self) -> Result<()> {
        self.used += 1;
        if self.used > self.max {
            return Err(Error::BudgetExceeded { what: "lattice points", limit: self.max });
        }
        Ok(())
    }
}

fn index_range(lo: f64, hi: f64, spacing: f64) -> (i64, i64) {
    // One extra index on each side guards against rounding; callers filter.
    ((lo / spacing).floor() as i64 - 1, (hi / spacing).ceil() as i64 + 1)
}

/// Grid points of step `spacing` in the closed Euclidean ball, in
/// lexicographic order. Returns the number of visited points.
pub fn ball_grid(
    center: &[f64],
    radius: f64,
    spacing: f64,
    max_points: u64,
    visit: &mut dyn FnMut(&[f64]) -> Result<()>,
) -> Result<u64> {
    let mut counter = Counter { used: 0, max: max_points };
    let mut buf = vec![0.0; center.len()];
    let r = radius + TOL * radius.max(1.0);
    ball_rec(0, center, r * r, radius, spacing, &mut buf, &mut counter, visit)?;
    Ok(counter.used)
}

#[allow(clippy::too_many_arguments)]
fn ball_rec(
    k: usize,
    center: &[f64],
    rem: f64,
    radius: f64,
    spacing: f64,
    buf: &mut Vec<f64>,
    counter: &mut Counter,
    visit: &mut dyn FnMut(&[f64]) -> Result<()>,
) -> Result<()> {
    if k == center.len() {
        counter.tick()?;
        let d = buf.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if within(d, radius) {
            visit(buf)?;
        }
        return Ok(());
    }
    let half = rem.max(0.0).sqrt();
    let (lo, hi) = index_range(center[k] - half, center[k] + half, spacing);
    for i in lo..=hi {
        let x = i as f64 * spacing;
        let d2 = (x - center[k]) * (x - center[k]);
        if d2 > rem {
            continue;
        }
        buf[k] = x;
        ball_rec(k + 1, center, rem - d2, radius, spacing, buf, counter, visit)?;
    }
    Ok(())
}

/// Grid points of step `spacing` in the closed box `[lo, hi]`.
pub fn box_grid(
    lo: &[f64],
    hi: &[f64],
    spacing: f64,
    max_points: u64,
    visit: &mut dyn FnMut(&[f64]) -> Result<()>,
) -> Result<u64> {
    let mut counter = Counter { used: 0, max: max_points };
    let mut buf = vec![0.0; lo.len()];
    box_rec(0, lo, hi, spacing, &mut buf, &mut counter, visit)?;
    Ok(counter.used)
}

fn box_rec(
    k: usize,
    lo: &[f64],
    hi: &[f64],
    spacing: f64,
    buf: &mut Vec<f64>,
    counter: &mut Counter,
    visit: &mut dyn FnMut(&[f64]) -> Result<()>,
) -> Result<()> {
    if k == lo.len() {
        counter.tick()?;
        return visit(buf);
    }
    let slack = TOL * lo[k].abs().max(hi[k].abs()).max(1.0);
    let (a, b) = index_range(lo[k], hi[k], spacing);
    for i in a..=b {
        let x = i as f64 * spacing;
        if x < lo[k] - slack || x > hi[k] + slack {
            continue;
        }
        buf[k] = x;
        box_rec(k + 1, lo, hi, spacing, buf, counter, visit)?;
    }
    Ok(())
}

/// Grid points `z` of step `spacing` with `|A (z - center)| <= 1`.
///
/// The first coordinate is the outermost loop, so points come out in
/// lexicographic order. For a prefix `z_0..z_k` the admissible range of
/// `z_k` comes from the Schur complement `S_{k+1} = ((Q^{-1})_{[0..k+1]})^{-1}`
/// of `Q = A^T A`, which is the minimum of the quadratic form over the
/// remaining coordinates.
pub fn ellipsoid_grid(
    center: &[f64],
    shape: &DMatrix<f64>,
    spacing: f64,
    max_points: u64,
    visit: &mut dyn FnMut(&[f64]) -> Result<()>,
) -> Result<u64> {
    let q = center.len();
    let form = shape.transpose() * shape;
    let inv = form
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("degenerate ellipsoid".into()))?;
    let mut schur = Vec::with_capacity(q);
    for k in 1..=q {
        let block = inv.view((0, 0), (k, k)).into_owned();
        let s = block
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("degenerate ellipsoid".into()))?;
        schur.push(s);
    }
    let mut counter = Counter { used: 0, max: max_points };
    let mut y = vec![0.0; q];
    let mut z = vec![0.0; q];
    let ctx = Ellipsoid { center, form: &form, schur: &schur, spacing };
    ctx.rec(0, &mut y, &mut z, &mut counter, visit)?;
    Ok(counter.used)
}

struct Ellipsoid<'a> {
    center: &'a [f64],
    form: &'a DMatrix<f64>,
    schur: &'a [DMatrix<f64>],
    spacing: f64,
}

const ELLIPSOID_SLACK: f64 = 1e-9;

impl Ellipsoid<'_> {
    fn rec(
        &self,
        k: usize,
        y: &mut Vec<f64>,
        z: &mut Vec<f64>,
        counter: &mut Counter,
        visit: &mut dyn FnMut(&[f64]) -> Result<()>,
    ) -> Result<()> {
        let q = self.center.len();
        if k == q {
            counter.tick()?;
            let mut v = 0.0;
            for i in 0..q {
                for j in 0..q {
                    v += y[i] * self.form[(i, j)] * y[j];
                }
            }
            if v <= 1.0 + ELLIPSOID_SLACK {
                visit(z)?;
            }
            return Ok(());
        }
        // a t^2 + 2 b t + c <= 1 in the offset t = y_k.
        let s = &self.schur[k];
        let a = s[(k, k)];
        let mut b = 0.0;
        let mut c = 0.0;
        for i in 0..k {
            b += s[(k, i)] * y[i];
            for j in 0..k {
                c += y[i] * s[(i, j)] * y[j];
            }
        }
        let disc = b * b - a * (c - 1.0 - ELLIPSOID_SLACK);
        if disc < 0.0 {
            return Ok(());
        }
        let root = disc.sqrt();
        let t0 = (-b - root) / a;
        let t1 = (-b + root) / a;
        let (lo, hi) = index_range(self.center[k] + t0, self.center[k] + t1, self.spacing);
        for i in lo..=hi {
            let x = i as f64 * self.spacing;
            let t = x - self.center[k];
            if a * t * t + 2.0 * b * t + c > 1.0 + ELLIPSOID_SLACK {
                continue;
            }
            z[k] = x;
            y[k] = t;
            self.rec(k + 1, y, z, counter, visit)?;
        }
        Ok(())
    }
}

pub(crate) fn visit(
    space: &SpaceDescriptor,
    center: &Point,
    radius: f64,
    spacing: f64,
    max_points: u64,
    visit: Visit<'_>,
) -> Result<()> {
    match space {
        SpaceDescriptor::Euclidean { .. }
        | SpaceDescriptor::Integers { .. }
        | SpaceDescriptor::HalfLine { .. }
        | SpaceDescriptor::Halfplane => {
            let mut p = Point::new(0, vec![0.0; center.coords.len()]);
            ball_grid(&center.coords, radius, spacing, max_points, &mut |c| {
                p.coords.copy_from_slice(c);
                if space.contains(&p) {
                    visit(&p)?;
                }
                Ok(())
            })?;
        }
        SpaceDescriptor::Cone(cone) => {
            if cone.is_full() {
                let mut p = Point::new(0, vec![0.0; cone.dim]);
                ball_grid(&center.coords, radius, spacing, max_points, &mut |c| {
                    p.coords.copy_from_slice(c);
                    visit(&p)
                })?;
                return Ok(());
            }
            let tol = cone.tolerance.unwrap_or(0.0);
            let reach = center.coords[0].hypot(center.coords[1]) + radius;
            let scan = tol + 1e-9 * reach.max(1.0) + 1e-12;
            let cells = cone.near_ray_cells(&center.coords, radius, spacing, scan);
            let mut counter = Counter { used: 0, max: max_points };
            let mut p = Point::new(0, vec![0.0, 0.0]);
            for (i, j) in cells {
                counter.tick()?;
                p.coords[0] = i as f64 * spacing;
                p.coords[1] = j as f64 * spacing;
                let d = (p.coords[0] - center.coords[0]).hypot(p.coords[1] - center.coords[1]);
                if within(d, radius) && cone.contains_with(&p.coords, tol) {
                    visit(&p)?;
                }
            }
        }
        SpaceDescriptor::Chain { blocks } => chain_visit(*blocks, space, center, radius, spacing, max_points, visit)?,
        SpaceDescriptor::Bouquet { max_level } => {
            bouquet_visit(*max_level, center, radius, spacing, max_points, visit)?
        }
        SpaceDescriptor::Product { left, right } => {
            let (a, b) = space.split(center)?;
            let l = left.lattice_region_any(&a, radius, spacing, max_points)?;
            let r = right.lattice_region_any(&b, radius, spacing, max_points)?;
            let total = (l.len() as u128) * (r.len() as u128);
            if total > max_points as u128 {
                return Err(Error::BudgetExceeded { what: "lattice points", limit: max_points });
            }
            let mut all: Vec<Point> = Vec::with_capacity(total as usize);
            for x in &l {
                for y in &r {
                    all.push(SpaceDescriptor::join(x, y));
                }
            }
            all.sort_by(|x, y| x.lex_cmp(y));
            for p in &all {
                visit(p)?;
            }
        }
    }
    Ok(())
}

impl SpaceDescriptor {
    fn lattice_region_any(&self, center: &Point, radius: f64, spacing: f64, max: u64) -> Result<Vec<Point>> {
        let mut out = Vec::new();
        self.visit_lattice(center, radius, spacing, max, &mut |p| {
            out.push(p.clone());
            Ok(())
        })?;
        Ok(out)
    }
}

fn chain_visit(
    blocks: ChainBlocks,
    space: &SpaceDescriptor,
    center: &Point,
    radius: f64,
    spacing: f64,
    max_points: u64,
    visit: Visit<'_>,
) -> Result<()> {
    let rect = blocks == ChainBlocks::Rectangles;
    let c = center.chart;
    let a = if rect {
        center.coords[0].abs().max(center.coords[1].abs())
    } else {
        center.coords[0].abs()
    };
    let mut used = 0u64;
    let mut k = 0usize;
    loop {
        let reach = if k == c { 0.0 } else { a + chain::gap(k, c) };
        if !within(reach, radius) {
            if k > c {
                break;
            }
            k += 1;
            continue;
        }
        // Box of admissible chart coordinates in block k.
        let (lo, hi): (Vec<f64>, Vec<f64>) = if rect {
            let (w, h) = chain::rect_half_extents(k);
            if k == c {
                let (x, y) = (center.coords[0], center.coords[1]);
                (vec![(x - radius).max(-w), (y - radius).max(-h)], vec![(x + radius).min(w), (y + radius).min(h)])
            } else {
                let rem = radius - reach;
                (vec![(-rem).max(-w), (-rem).max(-h)], vec![rem.min(w), rem.min(h)])
            }
        } else {
            let l = chain::segment_length(blocks, k);
            if k == c {
                let x = center.coords[0];
                (vec![(x - radius).max(0.0)], vec![(x + radius).min(l)])
            } else {
                (vec![0.0], vec![(radius - reach).min(l)])
            }
        };
        if lo.iter().zip(&hi).all(|(l, h)| l <= h) {
            let mut p = Point::new(k, vec![0.0; lo.len()]);
            let remaining = max_points.saturating_sub(used);
            used += box_grid(&lo, &hi, spacing, remaining, &mut |z| {
                p.coords.copy_from_slice(z);
                if space.contains(&p) && within(space.distance_unchecked(&p, center), radius) {
                    visit(&p)?;
                }
                Ok(())
            })?;
        }
        k += 1;
    }
    Ok(())
}

fn bouquet_visit(
    max_level: u32,
    center: &Point,
    radius: f64,
    spacing: f64,
    max_points: u64,
    visit: Visit<'_>,
) -> Result<()> {
    let space = SpaceDescriptor::Bouquet { max_level };
    let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    // Distance from the center to the half-line point at position s.
    let to_line = |s: f64| -> f64 {
        if center.chart == 0 {
            (s - center.coords[0]).abs()
        } else {
            norm(&center.coords) + (s - (center.chart - 1) as f64).abs()
        }
    };
    let mut used = 0u64;
    // Half-line.
    let (s0, r0) = if center.chart == 0 {
        (center.coords[0], radius)
    } else {
        ((center.chart - 1) as f64, radius - norm(&center.coords))
    };
    if r0 >= 0.0 {
        let mut p = Point::at(&[0.0]);
        let lo = (s0 - r0).max(0.0);
        used += box_grid(&[lo], &[s0 + r0], spacing, max_points, &mut |z| {
            p.coords[0] = z[0];
            if z[0] >= -TOL && within(to_line(z[0]), radius) {
                visit(&p)?;
            }
            Ok(())
        })?;
    }
    for k in 0..=max_level as usize {
        let chart = k + 1;
        let dim = 1usize << k;
        let (ball_center, rem) = if center.chart == chart {
            (center.coords.clone(), radius)
        } else {
            (vec![0.0; dim], radius - to_line(k as f64))
        };
        if rem < 0.0 && !within(-rem, 0.0) {
            continue;
        }
        let rem = rem.max(0.0);
        let mut p = Point::new(chart, vec![0.0; dim]);
        let remaining = max_points.saturating_sub(used);
        used += ball_grid(&ball_center, rem, spacing, remaining, &mut |z| {
            if z.iter().all(|&c| c == 0.0) {
                return Ok(());
            }
            p.coords.copy_from_slice(z);
            if within(space.distance_unchecked(&p, center), radius) {
                visit(&p)?;
            }
            Ok(())
        })?;
    }
    Ok(())
}
