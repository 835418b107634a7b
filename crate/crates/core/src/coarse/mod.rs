//! Control functions and empirical checks of coarse-map certificates.
//!
//! Every check here is a finite-region, finite-sample test. A clean report
//! is evidence for the declared budgets on that region, never a proof.

mod control;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use control::ControlFunction;

use crate::error::{invalid, Error, Result};
use crate::maps::{holds, sample_pairs, MapDescriptor, MapKind};
use crate::spaces::Point;

/// A coarse map together with its declared budgets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseMapCert {
    pub phi: MapDescriptor,
    /// Upper control: `d(phi x, phi x') <= L(d(x, x'))`.
    pub control: ControlFunction,
    /// Lower control: `d(x, x') <= L(d(phi x, phi x'))`; defaults to `control`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_control: Option<ControlFunction>,
    /// Closeness budget `K` of a semiconjugacy `phi o f ~ g o phi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closeness: Option<f64>,
    /// Density budget `M`: every codomain point is within `M` of the image.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
}

impl CoarseMapCert {
    pub fn new(phi: MapDescriptor, control: ControlFunction) -> Self {
        CoarseMapCert { phi, control, lower_control: None, closeness: None, density: None }
    }

    pub fn with_density(mut self, m: f64) -> Self {
        self.density = Some(m);
        self
    }

    pub fn with_closeness(mut self, k: f64) -> Self {
        self.closeness = Some(k);
        self
    }

    pub fn lower(&self) -> &ControlFunction {
        self.lower_control.as_ref().unwrap_or(&self.control)
    }

    pub fn validate(&self) -> Result<()> {
        self.phi.validate()?;
        self.control.validate()?;
        if let Some(l) = &self.lower_control {
            l.validate()?;
        }
        for (name, v) in [("closeness", self.closeness), ("density", self.density)] {
            if let Some(v) = v {
                if !(v >= 0.0) {
                    return Err(invalid(format!("{name} budget must be nonnegative")));
                }
            }
        }
        Ok(())
    }
}

/// Sampled pairs violating either embedding inequality.
#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingReport {
    pub pairs_checked: usize,
    pub upper_violation_count: usize,
    pub lower_violation_count: usize,
    pub upper_violations: Vec<(Point, Point)>,
    pub lower_violations: Vec<(Point, Point)>,
}

impl EmbeddingReport {
    pub fn passed(&self) -> bool {
        self.upper_violation_count == 0 && self.lower_violation_count == 0
    }
}

const MAX_REPORTED: usize = 16;

/// Checks both coarse-embedding inequalities on seeded samples.
pub fn check_embedding(cert: &CoarseMapCert, region_radius: f64, samples: usize, seed: u64) -> Result<EmbeddingReport> {
    cert.validate()?;
    let pairs = sample_pairs(&cert.phi.domain, region_radius, samples, seed);
    embedding_on_pairs(cert, &pairs)
}

/// Checks both embedding inequalities on explicit pairs.
pub fn embedding_on_pairs(cert: &CoarseMapCert, pairs: &[(Point, Point)]) -> Result<EmbeddingReport> {
    let phi = &cert.phi;
    let lower = cert.lower();
    let flags: Vec<(bool, bool)> = pairs
        .par_iter()
        .map(|(x, y)| -> Result<(bool, bool)> {
            let d = phi.domain.distance(x, y)?;
            let e = phi.codomain().distance(&phi.apply(x)?, &phi.apply(y)?)?;
            Ok((!holds(e, cert.control.eval(d)), !holds(d, lower.eval(e))))
        })
        .collect::<Result<_>>()?;
    let mut report = EmbeddingReport {
        pairs_checked: pairs.len(),
        upper_violation_count: 0,
        lower_violation_count: 0,
        upper_violations: Vec::new(),
        lower_violations: Vec::new(),
    };
    for ((up, low), pair) in flags.into_iter().zip(pairs) {
        if up {
            report.upper_violation_count += 1;
            if report.upper_violations.len() < MAX_REPORTED {
                report.upper_violations.push(pair.clone());
            }
        }
        if low {
            report.lower_violation_count += 1;
            if report.lower_violations.len() < MAX_REPORTED {
                report.lower_violations.push(pair.clone());
            }
        }
    }
    Ok(report)
}

/// Largest distance from a codomain grid point to the image of the domain grid.
#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub max_gap: f64,
    pub witness: Option<Point>,
    pub slack: f64,
    /// `max_gap > M + slack`.
    pub flagged: bool,
}

/// Checks `M`-density of the image over a codomain ball around the
/// codomain base point.
///
/// The domain grid covers `L_lower(rho + M + d(phi x0, y0))` around the
/// domain base point `x0`: by the lower inequality every point whose image
/// can be nearest to the codomain ball lies in it.
pub fn check_density(
    cert: &CoarseMapCert,
    codomain_region_radius: f64,
    grid_spacing: f64,
    max_points: u64,
) -> Result<DensityReport> {
    cert.validate()?;
    let m = cert.density.ok_or_else(|| invalid("density check needs a declared M"))?;
    let phi = &cert.phi;
    let x0 = phi.domain.base_point();
    let y0 = phi.codomain().base_point();
    let offset = phi.codomain().distance(&phi.apply(&x0)?, &y0)?;
    let reach = codomain_region_radius + m + grid_spacing + offset;
    let domain_radius = match &cert.lower_control {
        Some(l) => l.eval(reach),
        None => reach,
    } + grid_spacing;
    let targets = phi.codomain().lattice_region(&y0, codomain_region_radius, grid_spacing, max_points)?;
    let sources = phi.domain.lattice_region(&x0, domain_radius, grid_spacing, max_points)?;
    let images: Vec<Point> = sources.iter().map(|p| phi.apply(p)).collect::<Result<_>>()?;
    if images.is_empty() {
        return Err(invalid("domain grid is empty"));
    }
    let cod = phi.codomain();
    let gaps: Vec<f64> = targets
        .par_iter()
        .map(|y| images.iter().map(|z| cod.distance_unchecked(y, z)).fold(f64::INFINITY, f64::min))
        .collect();
    let (mut max_gap, mut witness) = (0.0, None);
    for (g, y) in gaps.into_iter().zip(&targets) {
        if g > max_gap {
            max_gap = g;
            witness = Some(y.clone());
        }
    }
    Ok(DensityReport { max_gap, witness, slack: grid_spacing, flagged: max_gap > m + grid_spacing })
}

/// Supremum of `d(f1 x, f2 x)` over a grid.
#[derive(Clone, Debug, Serialize)]
pub struct DefectReport {
    pub sup_defect: f64,
    pub argmax: Option<Point>,
}

/// `sup d(f1(x), f2(x))` over the grid ball of radius `region_radius`
/// around the domain base point.
pub fn closeness_defect(
    f1: &MapDescriptor,
    f2: &MapDescriptor,
    region_radius: f64,
    grid_spacing: f64,
    max_points: u64,
) -> Result<DefectReport> {
    if f1.domain != f2.domain {
        return Err(Error::SpaceMismatch("closeness needs a shared domain".into()));
    }
    if f1.codomain() != f2.codomain() {
        return Err(Error::SpaceMismatch("closeness needs a shared codomain".into()));
    }
    let grid = f1.domain.lattice_region(&f1.domain.base_point(), region_radius, grid_spacing, max_points)?;
    let cod = f1.codomain();
    let defects: Vec<f64> = grid
        .par_iter()
        .map(|x| cod.distance(&f1.apply(x)?, &f2.apply(x)?))
        .collect::<Result<_>>()?;
    let mut report = DefectReport { sup_defect: 0.0, argmax: None };
    for (d, x) in defects.into_iter().zip(&grid) {
        if report.argmax.is_none() || d > report.sup_defect {
            report.sup_defect = d;
            report.argmax = Some(x.clone());
        }
    }
    Ok(report)
}

/// Coarse reading of a defect sequence over growing radii.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Trend {
    Bounded,
    Growing,
    Indeterminate,
}

/// Defects at increasing radii with their classification.
#[derive(Clone, Debug, Serialize)]
pub struct DefectCurve {
    pub defect_curve: Vec<(f64, f64)>,
    pub classification: Trend,
    pub witnesses: Vec<Option<Point>>,
}

/// Classifies the last two radius steps of a defect curve.
///
/// BOUNDED: relative change below 1% on each step. GROWING: the growth
/// factor per radius doubling is at least 1.2 on each step.
pub fn classify_trend(curve: &[(f64, f64)]) -> Trend {
    if curve.len() < 2 {
        return Trend::Indeterminate;
    }
    let steps: Vec<_> = curve.windows(2).rev().take(2).collect();
    let bounded = steps.iter().all(|w| {
        let (a, b) = (w[0].1, w[1].1);
        if a == b {
            true
        } else {
            a > 0.0 && ((b - a) / a).abs() < 0.01
        }
    });
    if bounded {
        return Trend::Bounded;
    }
    let growing = steps.iter().all(|w| {
        let ((r0, a), (r1, b)) = (w[0], w[1]);
        let doublings = (r1 / r0).log2();
        if !(doublings > 0.0) || b <= a {
            return false;
        }
        if a <= 0.0 {
            return true;
        }
        (b / a).powf(1.0 / doublings) >= 1.2
    });
    if growing {
        Trend::Growing
    } else {
        Trend::Indeterminate
    }
}

/// [`closeness_defect`] at each radius, with a trend classification.
pub fn defect_curve(
    f1: &MapDescriptor,
    f2: &MapDescriptor,
    radii: &[f64],
    grid_spacing: f64,
    max_points: u64,
) -> Result<DefectCurve> {
    let mut curve = Vec::new();
    let mut witnesses = Vec::new();
    for &r in radii {
        let rep = closeness_defect(f1, f2, r, grid_spacing, max_points)?;
        curve.push((r, rep.sup_defect));
        witnesses.push(rep.argmax);
    }
    Ok(DefectCurve { classification: classify_trend(&curve), defect_curve: curve, witnesses })
}

/// Composes two certificates: `outer.phi o inner.phi`.
pub fn compose_certs(outer: &CoarseMapCert, inner: &CoarseMapCert) -> Result<CoarseMapCert> {
    if inner.phi.codomain() != &outer.phi.domain {
        return Err(Error::SpaceMismatch("inner codomain must equal outer domain".into()));
    }
    let both_identity = matches!(inner.phi.kind, MapKind::Identity) && matches!(outer.phi.kind, MapKind::Identity);
    let phi = if both_identity {
        MapDescriptor::identity(inner.phi.domain.clone())
    } else {
        MapDescriptor::compose(vec![inner.phi.clone(), outer.phi.clone()])?
    };
    let control = ControlFunction::compose(&outer.control, &inner.control);
    let lower = ControlFunction::compose(inner.lower(), outer.lower());
    let lower_control = if lower == control { None } else { Some(lower) };
    let density = match (outer.density, inner.density) {
        (Some(mo), Some(mi)) => Some(outer.control.eval(mi) + mo),
        _ => None,
    };
    Ok(CoarseMapCert { phi, control, lower_control, closeness: None, density })
}

/// The four empirical defects of a coarse conjugacy `(phi, psi)` between
/// `f` on `X` and `g` on `Y`.
#[derive(Clone, Debug, Serialize)]
pub struct ConjugacyReport {
    /// `phi o f` against `g o phi` on `X`.
    pub k_phi: DefectReport,
    /// `psi o g` against `f o psi` on `Y`.
    pub k_psi: DefectReport,
    /// `psi o phi` against the identity of `X`, then `phi o psi` against the identity of `Y`.
    pub inverse_defects: (DefectReport, DefectReport),
}

impl ConjugacyReport {
    pub fn all_zero(&self) -> bool {
        [&self.k_phi, &self.k_psi, &self.inverse_defects.0, &self.inverse_defects.1]
            .iter()
            .all(|r| r.sup_defect == 0.0)
    }
}

/// The four maps pairs compared by a conjugacy check.
pub struct ConjugacyPairs {
    pub phi_f: (MapDescriptor, MapDescriptor),
    pub psi_g: (MapDescriptor, MapDescriptor),
    pub psi_phi: (MapDescriptor, MapDescriptor),
    pub phi_psi: (MapDescriptor, MapDescriptor),
}

pub fn conjugacy_pairs(
    f: &MapDescriptor,
    g: &MapDescriptor,
    phi: &CoarseMapCert,
    psi: &CoarseMapCert,
) -> Result<ConjugacyPairs> {
    let (x, y) = (&f.domain, &g.domain);
    if &phi.phi.domain != x || phi.phi.codomain() != y {
        return Err(Error::SpaceMismatch("phi must map the domain of f to the domain of g".into()));
    }
    if &psi.phi.domain != y || psi.phi.codomain() != x {
        return Err(Error::SpaceMismatch("psi must map the domain of g to the domain of f".into()));
    }
    let c = |v: Vec<&MapDescriptor>| MapDescriptor::compose(v.into_iter().cloned().collect());
    Ok(ConjugacyPairs {
        phi_f: (c(vec![f, &phi.phi])?, c(vec![&phi.phi, g])?),
        psi_g: (c(vec![g, &psi.phi])?, c(vec![&psi.phi, f])?),
        psi_phi: (c(vec![&phi.phi, &psi.phi])?, MapDescriptor::identity(x.clone())),
        phi_psi: (c(vec![&psi.phi, &phi.phi])?, MapDescriptor::identity(y.clone())),
    })
}

/// Reports the four conjugacy defects over one region.
pub fn check_conjugacy(
    f: &MapDescriptor,
    g: &MapDescriptor,
    phi: &CoarseMapCert,
    psi: &CoarseMapCert,
    region_radius: f64,
    grid_spacing: f64,
    max_points: u64,
) -> Result<ConjugacyReport> {
    let p = conjugacy_pairs(f, g, phi, psi)?;
    let run = |(a, b): &(MapDescriptor, MapDescriptor)| closeness_defect(a, b, region_radius, grid_spacing, max_points);
    Ok(ConjugacyReport {
        k_phi: run(&p.phi_f)?,
        k_psi: run(&p.psi_g)?,
        inverse_defects: (run(&p.psi_phi)?, run(&p.phi_psi)?),
    })
}
