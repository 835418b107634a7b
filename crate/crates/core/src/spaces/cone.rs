//! Cones `{t a : t >= 0, a in A}` over a base set `A` of the unit sphere.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// The base set `A` of a cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseSetSpec {
    /// The whole unit sphere; the cone is all of `R^q`.
    FullSphere,
    /// Finitely many directions in the plane, given as angles in radians.
    FiniteAngles { angles: Vec<f64> },
    /// Middle-thirds Cantor set on the arc of angles `[0, 1]` radian,
    /// represented by the `2^levels` left endpoints of its level intervals.
    CantorArc { levels: u32 },
}

impl BaseSetSpec {
    /// Sorted angles of a planar base set, `None` for the full sphere.
    pub fn angles(&self) -> Option<Vec<f64>> {
        match self {
            BaseSetSpec::FullSphere => None,
            BaseSetSpec::FiniteAngles { angles } => {
                let mut a = angles.clone();
                a.sort_by(f64::total_cmp);
                a.dedup();
                Some(a)
            }
            BaseSetSpec::CantorArc { levels } => Some(cantor_left_endpoints(*levels)),
        }
    }

    /// Unit vectors of a planar base set.
    pub fn directions(&self) -> Option<Vec<[f64; 2]>> {
        self.angles().map(|a| a.into_iter().map(|t| [t.cos(), t.sin()]).collect())
    }
}

/// Left endpoints of the `2^levels` intervals of the Cantor construction on `[0,1]`.
pub fn cantor_left_endpoints(levels: u32) -> Vec<f64> {
    let count = 1usize << levels;
    let scale = 3f64.powi(levels as i32);
    (0..count)
        .map(|i| {
            // Ternary digits of the endpoint are the binary digits of i doubled.
            let mut acc = 0u64;
            for bit in (0..levels).rev() {
                acc = acc * 3 + 2 * ((i >> bit) & 1) as u64;
            }
            acc as f64 / scale
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ConeSpec {
    dim: usize,
    base: BaseSetSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
}

/// A cone over a base set, with its membership tolerance.
///
/// Grid points rarely lie on the rays exactly, so membership allows a
/// chord distance `tolerance` at the point's norm. When no tolerance is
/// set, membership is exact up to rounding and lattice routines substitute
/// `spacing / 4`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "ConeSpec", into = "ConeSpec")]
pub struct ConeSpace {
    pub dim: usize,
    pub base: BaseSetSpec,
    pub tolerance: Option<f64>,
    angles: Option<Arc<Vec<f64>>>,
}

impl PartialEq for ConeSpace {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.base == other.base && self.tolerance == other.tolerance
    }
}

impl From<ConeSpec> for ConeSpace {
    fn from(s: ConeSpec) -> Self {
        ConeSpace::new(s.dim, s.base, s.tolerance)
    }
}

impl From<ConeSpace> for ConeSpec {
    fn from(c: ConeSpace) -> Self {
        ConeSpec { dim: c.dim, base: c.base, tolerance: c.tolerance }
    }
}

const EXACT: f64 = 1e-12;

impl ConeSpace {
    pub fn new(dim: usize, base: BaseSetSpec, tolerance: Option<f64>) -> Self {
        let angles = base.angles().map(Arc::new);
        ConeSpace { dim, base, tolerance, angles }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("cone dimension must be positive"));
        }
        if self.angles.is_some() && self.dim != 2 {
            return Err(invalid("finite and Cantor base sets are planar (dim 2)"));
        }
        if let Some(a) = &self.angles {
            if a.is_empty() {
                return Err(invalid("cone base set is empty"));
            }
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0) {
                return Err(invalid("cone tolerance must be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn with_tolerance(&self, tolerance: f64) -> Self {
        ConeSpace { tolerance: Some(tolerance), ..self.clone() }
    }

    pub fn is_full(&self) -> bool {
        self.angles.is_none()
    }

    /// Chord distance from `p` to the nearest ray, measured at `|p|`.
    pub fn chord_to_rays(&self, p: &[f64]) -> f64 {
        let Some(angles) = &self.angles else { return 0.0 };
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if rho == 0.0 {
            return 0.0;
        }
        let theta = p[1].atan2(p[0]);
        let i = angles.partition_point(|&a| a < theta);
        let mut best = f64::INFINITY;
        for j in [i.wrapping_sub(1), i, 0, angles.len() - 1] {
            if let Some(&a) = angles.get(j) {
                let mut d = (theta - a).abs() % std::f64::consts::TAU;
                if d > std::f64::consts::PI {
                    d = std::f64::consts::TAU - d;
                }
                best = best.min(d);
            }
        }
        2.0 * rho * (best / 2.0).sin()
    }

    pub fn contains_with(&self, p: &[f64], tolerance: f64) -> bool {
        p.len() == self.dim && p.iter().all(|c| c.is_finite()) && {
            let rho = p.iter().map(|c| c * c).sum::<f64>().sqrt();
            self.chord_to_rays(p) <= tolerance.max(EXACT * rho.max(1.0))
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.contains_with(p, self.tolerance.unwrap_or(0.0))
    }

    pub(crate) fn directions(&self) -> Vec<[f64; 2]> {
        self.angles.as_ref().map(|a| a.iter().map(|t| [t.cos(), t.sin()]).collect()).unwrap_or_default()
    }

    /// Grid cells `(i, j)` at step `spacing` within perpendicular distance
    /// `tol` of some ray; a superset of the member grid points.
    pub(crate) fn near_ray_cells(
        &self,
        center: &[f64],
        radius: f64,
        spacing: f64,
        tol: f64,
    ) -> BTreeSet<(i64, i64)> {
        let mut cells = BTreeSet::new();
        let reach = center[0].hypot(center[1]) + radius;
        for [c, s] in self.directions() {
            // Walk along the dominant axis so each step meets few rows.
            let swap = s.abs() > c.abs();
            let (ca, sa) = if swap { (s, c) } else { (c, s) };
            let t_max = reach;
            let a_end = t_max * ca;
            let (a_lo, a_hi) = if a_end >= 0.0 { (-tol, a_end + tol) } else { (a_end - tol, tol) };
            let i_lo = (a_lo / spacing).floor() as i64;
            let i_hi = (a_hi / spacing).ceil() as i64;
            for i in i_lo..=i_hi {
                let a = i as f64 * spacing;
                // |a sa - b ca| <= tol  =>  b in [(a sa - tol)/ca, (a sa + tol)/ca]
                let b0 = (a * sa - tol) / ca;
                let b1 = (a * sa + tol) / ca;
                let (b0, b1) = if b0 <= b1 { (b0, b1) } else { (b1, b0) };
                let j_lo = (b0 / spacing).floor() as i64;
                let j_hi = (b1 / spacing).ceil() as i64;
                for j in j_lo..=j_hi {
                    let cell = if swap { (j, i) } else { (i, j) };
                    cells.insert(cell);
                }
            }
        }
        cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_endpoints_count_and_range() {
        let e = cantor_left_endpoints(3);
        assert_eq!(e.len(), 8);
        assert_eq!(e[0], 0.0);
        assert!((e[1] - 2.0 / 27.0).abs() < 1e-15);
        assert!((e[7] - 26.0 / 27.0).abs() < 1e-15);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn base_points_are_unit_vectors() {
        let dirs = BaseSetSpec::CantorArc { levels: 8 }.directions().unwrap();
        assert_eq!(dirs.len(), 256);
        for d in dirs {
            assert!((d[0].hypot(d[1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ray_membership() {
        let cone = ConeSpace::new(2, BaseSetSpec::FiniteAngles { angles: vec![0.0] }, None);
        assert!(cone.contains(&[5.0, 0.0]));
        assert!(!cone.contains(&[0.0, 5.0]));
        assert!(!cone.contains(&[-5.0, 0.0]));
        assert!(cone.contains(&[0.0, 0.0]));
        let loose = cone.with_tolerance(0.5);
        assert!(loose.contains(&[5.0, 0.4]));
    }
}
