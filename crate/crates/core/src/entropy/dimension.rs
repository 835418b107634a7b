//! Box-counting dimension from greedy covers.

use serde::{Deserialize, Serialize};

use super::fit::least_squares;
use super::point_packer;
use crate::budget::Budget;
use crate::error::{invalid, Result};
use crate::spaces::{box_grid, Point, SpaceDescriptor};

/// A bounded subset of a space, discretized on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundedSet {
    /// Members within `radius` of `center`.
    Ball { center: Point, radius: f64 },
    /// Members of chart 0 in the axis box `[lo, hi]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// An explicit finite set.
    Points { points: Vec<Point> },
}

/// Spanning counts per scale with the fitted dimension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub scales: Vec<(f64, usize)>,
    pub fitted_dimension: f64,
    pub fit_residual: f64,
}

fn candidates(space: &SpaceDescriptor, set: &BoundedSet, spacing: f64, budget: &Budget) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    match set {
        BoundedSet::Ball { center, radius } => {
            let space = space.for_spacing(spacing);
            space.visit_lattice(center, *radius, spacing, budget.points, &mut |p| {
                out.push(p.clone());
                Ok(())
            })?;
        }
        BoundedSet::Box { lo, hi } => {
            if lo.len() != hi.len() || space.chart_dim(0) != Some(lo.len()) || lo.iter().zip(hi).any(|(a, b)| a > b) {
                return Err(invalid("box bounds must match the chart dimension with lo <= hi"));
            }
            let space = space.for_spacing(spacing);
            let mut p = Point::new(0, vec![0.0; lo.len()]);
            box_grid(lo, hi, spacing, budget.points, &mut |z| {
                p.coords.copy_from_slice(z);
                if space.contains(&p) {
                    out.push(p.clone());
                }
                Ok(())
            })?;
        }
        BoundedSet::Points { points } => {
            for p in points {
                if !space.contains(p) {
                    return Err(crate::error::Error::NotMember(p.to_string()));
                }
            }
            out = points.clone();
        }
    }
    Ok(out)
}

/// Greedy `eps`-spanning counts of `set` at each scale, on grids of step
/// `spacing_fraction * eps`, and the least-squares slope of `log r`
/// against `-log eps`.
pub fn bcd_estimate(
    space: &SpaceDescriptor,
    set: &BoundedSet,
    epsilons: &[f64],
    spacing_fraction: f64,
    budget: &Budget,
) -> Result<DimensionEstimate> {
    if epsilons.len() < 2 {
        return Err(invalid("a dimension fit needs at least two scales"));
    }
    if epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(invalid("epsilons must be positive and strictly decreasing"));
    }
    if !(spacing_fraction > 0.0 && spacing_fraction <= 0.5) {
        return Err(invalid("spacing must be positive and at most eps / 2"));
    }
    let mut scales = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let pts = candidates(space, set, spacing_fraction * eps, budget)?;
        if pts.is_empty() {
            return Err(invalid(format!("the set has no grid points at eps = {eps}")));
        }
        let mut packer = point_packer(space, eps);
        for p in pts {
            packer.offer(p);
        }
        scales.push((eps, packer.count()));
    }
    let xs: Vec<f64> = scales.iter().map(|(e, _)| -e.ln()).collect();
    let ys: Vec<f64> = scales.iter().map(|(_, c)| (*c as f64).ln()).collect();
    let (slope, _, residual) = least_squares(&xs, &ys)?;
    Ok(DimensionEstimate { scales, fitted_dimension: slope, fit_residual: residual })
}
