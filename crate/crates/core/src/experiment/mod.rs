//! Versioned experiment configs, the preset catalog and the runner.

mod check;
pub mod presets;
mod real;
mod run;

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::coarse::CoarseMapCert;
use crate::entropy::{BoundedSet, Schedule, ScheduleCell, SpacingRule, Strategy, STABILIZATION_TOL};
use crate::error::{Error, Result};
use crate::maps::MapDescriptor;
use crate::spaces::{Point, SpaceDescriptor};

pub use check::{Check, CheckOutcome, Stream};
pub use presets::{preset, PresetId};
pub use real::Real;
pub use run::{run, RunOutcome, Status, TaskResult};

/// The only config schema this version reads.
pub const SCHEMA_VERSION: u32 = 1;

/// A named list of tasks with budgets, expectations and output paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    /// Human form of the expected value, shown in the summary line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budget: Budget,
    pub tasks: Vec<Task>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expect: Vec<Check>,
    #[serde(default)]
    pub output: OutputPaths,
}

/// Where the runner writes its report and count grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

/// One computation of a config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum Task {
    /// An entropy estimate over a schedule.
    Estimate { label: String, map: MapDescriptor, x0: Point, schedule: ScheduleConfig },
    /// A box-counting dimension estimate.
    Bcd {
        label: String,
        space: SpaceDescriptor,
        set: BoundedSet,
        epsilons: Vec<Real>,
        #[serde(default = "quarter")]
        spacing_fraction: Real,
    },
    /// The four conjugacy defects at each radius.
    Conjugacy {
        label: String,
        f: MapDescriptor,
        g: MapDescriptor,
        phi: CoarseMapCert,
        psi: CoarseMapCert,
        radii: Vec<Real>,
        spacing: Real,
    },
    /// `sup d(f1 x, f2 x)` over growing radii with a trend.
    DefectCurve { label: String, f1: MapDescriptor, f2: MapDescriptor, radii: Vec<Real>, spacing: Real },
    /// Sampled embedding inequalities, seeded by the config seed.
    Embedding { label: String, cert: CoarseMapCert, radius: Real, samples: usize },
    /// Greedy counts of product families against their factors.
    ProductAudit {
        label: String,
        left: Factor,
        right: Factor,
        n_max: usize,
        deltas: Vec<Real>,
        radii: Vec<Real>,
        spacing: Real,
    },
    /// Base-2 exponents of the segment lengths of the two segment chains.
    SegmentLengths { label: String, count: usize },
}

/// A map and base point entering a product audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub map: MapDescriptor,
    pub x0: Point,
}

fn quarter() -> Real {
    Real(0.25)
}

fn default_tol() -> Real {
    Real(STABILIZATION_TOL)
}

impl Task {
    pub fn label(&self) -> &str {
        match self {
            Task::Estimate { label, .. }
            | Task::Bcd { label, .. }
            | Task::Conjugacy { label, .. }
            | Task::DefectCurve { label, .. }
            | Task::Embedding { label, .. }
            | Task::ProductAudit { label, .. }
            | Task::SegmentLengths { label, .. } => label,
        }
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            Task::Estimate { .. } => TaskKind::Estimate,
            Task::Bcd { .. } => TaskKind::Bcd,
            Task::Conjugacy { .. } => TaskKind::Conjugacy,
            Task::DefectCurve { .. } => TaskKind::DefectCurve,
            Task::Embedding { .. } => TaskKind::Embedding,
            Task::ProductAudit { .. } => TaskKind::ProductAudit,
            Task::SegmentLengths { .. } => TaskKind::SegmentLengths,
        }
    }
}

/// The task variants without their payloads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Estimate,
    Bcd,
    Conjugacy,
    DefectCurve,
    Embedding,
    ProductAudit,
    SegmentLengths,
}

/// A schedule whose reals are read from decimal strings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub cells: Vec<CellConfig>,
    #[serde(default = "default_tol")]
    pub stabilization_tol: Real,
}

/// One `delta` of a [`ScheduleConfig`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub delta: Real,
    pub radii: Vec<Real>,
    pub window: (usize, usize),
    pub spacing: SpacingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Strategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Strategy>,
}

/// [`SpacingRule`] with decimal-string reals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpacingConfig {
    Fixed { value: Real },
    PerRadius { fraction: Real },
    PerDelta { fraction: Real },
}

impl From<SpacingConfig> for SpacingRule {
    fn from(s: SpacingConfig) -> Self {
        match s {
            SpacingConfig::Fixed { value } => SpacingRule::Fixed { value: value.0 },
            SpacingConfig::PerRadius { fraction } => SpacingRule::PerRadius { fraction: fraction.0 },
            SpacingConfig::PerDelta { fraction } => SpacingRule::PerDelta { fraction: fraction.0 },
        }
    }
}

impl ScheduleConfig {
    pub fn to_schedule(&self) -> Schedule {
        let cells = self
            .cells
            .iter()
            .map(|c| ScheduleCell {
                delta: c.delta.0,
                radii: reals(&c.radii),
                window: c.window,
                spacing: c.spacing.into(),
                lower: c.lower.clone(),
                upper: c.upper.clone(),
            })
            .collect();
        Schedule { cells, stabilization_tol: self.stabilization_tol.0 }
    }
}

pub(crate) fn reals(v: &[Real]) -> Vec<f64> {
    v.iter().map(|r| r.0).collect()
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

fn increasing(v: &[Real], what: &str) -> Result<()> {
    if v.is_empty() || !(v[0].0 > 0.0) || v.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(config_err(format!("{what} must be nonempty, positive and strictly increasing")));
    }
    Ok(())
}

fn positive(v: Real, what: &str) -> Result<()> {
    if !(v.0 > 0.0) {
        return Err(config_err(format!("{what} must be positive")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses and validates a config.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(config_err)?;
        config.validate()?;
        Ok(config)
    }

    /// Pretty JSON in field order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(self).expect("configs serialize");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every documented config invariant. Errors are [`Error::Config`].
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!("unsupported schema_version {}", self.schema_version)));
        }
        if self.budget.orbits == 0 || self.budget.points == 0 {
            return Err(config_err("budgets must be positive"));
        }
        if self.tasks.is_empty() {
            return Err(config_err("a config needs at least one task"));
        }
        let mut kinds = HashMap::new();
        for t in &self.tasks {
            if t.label().is_empty() || kinds.insert(t.label().to_string(), t.kind()).is_some() {
                return Err(config_err(format!("task labels must be unique and nonempty: {:?}", t.label())));
            }
            validate_task(t).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("task {}: {m}", t.label())),
                other => Error::Config(format!("task {}: {other}", t.label())),
            })?;
        }
        for c in &self.expect {
            c.validate(&kinds)?;
        }
        Ok(())
    }

    /// The task kinds present.
    pub fn kinds(&self) -> Vec<TaskKind> {
        self.tasks.iter().map(Task::kind).collect()
    }
}

fn member(space: &SpaceDescriptor, p: &Point) -> Result<()> {
    if !space.contains(p) {
        return Err(config_err(format!("{p} is not a member of the space")));
    }
    Ok(())
}

fn validate_task(t: &Task) -> Result<()> {
    match t {
        Task::Estimate { map, x0, schedule, .. } => {
            map.validate()?;
            member(&map.domain, x0)?;
            schedule.to_schedule().validate()?;
        }
        Task::Bcd { space, set, epsilons, spacing_fraction, .. } => {
            space.validate()?;
            if let BoundedSet::Ball { center, radius } = set {
                member(space, center)?;
                if !(*radius >= 0.0) {
                    return Err(config_err("ball radius must be nonnegative"));
                }
            }
            if epsilons.len() < 2 || !(epsilons[0].0 > 0.0) || epsilons.windows(2).any(|w| !(w[0] > w[1])) {
                return Err(config_err("epsilons must be positive and strictly decreasing, at least two"));
            }
            if !(spacing_fraction.0 > 0.0 && spacing_fraction.0 <= 0.5) {
                return Err(config_err("spacing_fraction must lie in (0, 1/2]"));
            }
        }
        Task::Conjugacy { f, g, phi, psi, radii, spacing, .. } => {
            f.validate()?;
            g.validate()?;
            phi.validate()?;
            psi.validate()?;
            crate::coarse::conjugacy_pairs(f, g, phi, psi)?;
            increasing(radii, "radii")?;
            positive(*spacing, "spacing")?;
        }
        Task::DefectCurve { f1, f2, radii, spacing, .. } => {
            f1.validate()?;
            f2.validate()?;
            if f1.domain != f2.domain || f1.codomain() != f2.codomain() {
                return Err(config_err("compared maps must share domain and codomain"));
            }
            increasing(radii, "radii")?;
            positive(*spacing, "spacing")?;
        }
        Task::Embedding { cert, radius, samples, .. } => {
            cert.validate()?;
            positive(*radius, "radius")?;
            if *samples == 0 {
                return Err(config_err("samples must be positive"));
            }
        }
        Task::ProductAudit { left, right, n_max, deltas, radii, spacing, .. } => {
            for side in [left, right] {
                side.map.validate()?;
                if !side.map.is_self_map() {
                    return Err(config_err("product factors must be self-maps"));
                }
                member(&side.map.domain, &side.x0)?;
            }
            if *n_max == 0 {
                return Err(config_err("n_max must be positive"));
            }
            increasing(deltas, "deltas")?;
            increasing(radii, "radii")?;
            positive(*spacing, "spacing")?;
        }
        Task::SegmentLengths { count, .. } => {
            if *count == 0 {
                return Err(config_err("count must be positive"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
