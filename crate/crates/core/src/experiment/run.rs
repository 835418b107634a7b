//! Executes a config and emits its report and count grid.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use super::check::CheckOutcome;
use super::{reals, ExperimentConfig, Task};
use crate::budget::Budget;
use crate::coarse::{check_conjugacy, check_embedding, defect_curve, ConjugacyReport, DefectCurve, EmbeddingReport};
use crate::entropy::{
    bcd_estimate, count_product, estimate_entropy, write_csv, CandidateFamily, CountRecord, DimensionEstimate,
    EntropyEstimate, Extrapolated, ProductCount,
};
use crate::error::Result;
use crate::spaces::chain::segment_exponent;
use crate::spaces::ChainBlocks;

/// Overall verdict of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Ok,
    /// Some task or cell hit its budget; the rest was still computed.
    BudgetExceeded,
    /// A task failed for a reason other than its budget.
    TaskFailed,
    /// Every task ran but an expectation failed.
    AssertionFailed,
}

/// Conjugacy defects at one radius.
#[derive(Clone, Debug, Serialize)]
pub struct RadiusReport {
    pub radius: f64,
    pub report: ConjugacyReport,
}

/// Segment exponents at one index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SegmentRow {
    pub n: usize,
    pub e_f: u64,
    pub e_g: u64,
}

/// The output of one task.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskResult {
    Estimate { label: String, estimate: EntropyEstimate },
    Bcd { label: String, estimate: DimensionEstimate },
    Conjugacy { label: String, reports: Vec<RadiusReport> },
    DefectCurve { label: String, curve: DefectCurve },
    Embedding { label: String, report: EmbeddingReport },
    ProductAudit { label: String, counts: Vec<ProductCount> },
    SegmentLengths { label: String, rows: Vec<SegmentRow> },
    Failed { label: String, error: String, budget_exceeded: bool },
}

impl TaskResult {
    pub fn label(&self) -> &str {
        match self {
            TaskResult::Estimate { label, .. }
            | TaskResult::Bcd { label, .. }
            | TaskResult::Conjugacy { label, .. }
            | TaskResult::DefectCurve { label, .. }
            | TaskResult::Embedding { label, .. }
            | TaskResult::ProductAudit { label, .. }
            | TaskResult::SegmentLengths { label, .. }
            | TaskResult::Failed { label, .. } => label,
        }
    }

    pub(crate) fn failure(&self, label: &str) -> String {
        match self {
            TaskResult::Failed { error, .. } => format!("task {label} failed: {error}"),
            _ => format!("task {label} has the wrong kind"),
        }
    }

    fn budget_exceeded(&self) -> bool {
        match self {
            TaskResult::Estimate { estimate, .. } => estimate.budget_exceeded,
            TaskResult::Failed { budget_exceeded, .. } => *budget_exceeded,
            _ => false,
        }
    }
}

/// The report of a run. Count records go to the CSV only.
#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub schema_version: u32,
    pub name: String,
    pub config_hash: String,
    pub seed: u64,
    pub budget: Budget,
    pub status: Status,
    pub summary: String,
    pub results: Vec<TaskResult>,
    pub checks: Vec<CheckOutcome>,
    #[serde(skip)]
    pub records: Vec<CountRecord>,
}

impl RunOutcome {
    /// Process exit code: 0 success, 3 budget exceeded, 4 failed assertion
    /// (only when `assertions` is set), 1 any other task failure.
    pub fn exit_code(&self, assertions: bool) -> i32 {
        match self.status {
            Status::Ok => 0,
            Status::BudgetExceeded => 3,
            Status::TaskFailed => 1,
            Status::AssertionFailed if assertions => 4,
            Status::AssertionFailed => 0,
        }
    }

    /// Writes the pretty JSON report and the CSV count grid.
    pub fn write(&self, json: &Path, csv: &Path) -> Result<()> {
        for p in [json, csv] {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
        }
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(json, text)?;
        write_csv(&self.records, BufWriter::new(fs::File::create(csv)?))
    }
}

/// Runs every task in order, then the expectations.
///
/// The config must already be valid. Task errors are recorded in the
/// report rather than returned, so partial results survive a budget hit.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome> {
    config.validate()?;
    let mut results = Vec::new();
    let mut records = Vec::new();
    for task in &config.tasks {
        let label = task.label().to_string();
        let result = match run_task(task, config, &mut records) {
            Ok(r) => r,
            Err(e) => TaskResult::Failed { label, budget_exceeded: e.is_budget(), error: e.to_string() },
        };
        results.push(result);
    }
    let checks: Vec<CheckOutcome> = config.expect.iter().map(|c| c.evaluate(&results)).collect();
    let status = if results.iter().any(TaskResult::budget_exceeded) {
        Status::BudgetExceeded
    } else if results.iter().any(|r| matches!(r, TaskResult::Failed { .. })) {
        Status::TaskFailed
    } else if checks.iter().any(|c| !c.passed) {
        Status::AssertionFailed
    } else {
        Status::Ok
    };
    let summary = summarize(config, &results, &checks, status);
    Ok(RunOutcome {
        schema_version: config.schema_version,
        name: config.name.clone(),
        config_hash: config.hash(),
        seed: config.seed,
        budget: config.budget,
        status,
        summary,
        results,
        checks,
        records,
    })
}

fn run_task(task: &Task, config: &ExperimentConfig, records: &mut Vec<CountRecord>) -> Result<TaskResult> {
    let budget = &config.budget;
    let label = task.label().to_string();
    Ok(match task {
        Task::Estimate { map, x0, schedule, .. } => {
            let estimate = estimate_entropy(map, x0, &schedule.to_schedule(), budget)?;
            records.extend(estimate.records.iter().cloned());
            TaskResult::Estimate { label, estimate }
        }
        Task::Bcd { space, set, epsilons, spacing_fraction, .. } => {
            let estimate = bcd_estimate(space, set, &reals(epsilons), spacing_fraction.0, budget)?;
            TaskResult::Bcd { label, estimate }
        }
        Task::Conjugacy { f, g, phi, psi, radii, spacing, .. } => {
            let reports = radii
                .iter()
                .map(|r| {
                    let report = check_conjugacy(f, g, phi, psi, r.0, spacing.0, budget.points)?;
                    Ok(RadiusReport { radius: r.0, report })
                })
                .collect::<Result<_>>()?;
            TaskResult::Conjugacy { label, reports }
        }
        Task::DefectCurve { f1, f2, radii, spacing, .. } => {
            let curve = defect_curve(f1, f2, &reals(radii), spacing.0, budget.points)?;
            TaskResult::DefectCurve { label, curve }
        }
        Task::Embedding { cert, radius, samples, .. } => {
            let report = check_embedding(cert, radius.0, *samples, config.seed)?;
            TaskResult::Embedding { label, report }
        }
        Task::ProductAudit { left, right, n_max, deltas, radii, spacing, .. } => {
            let mut counts = Vec::new();
            for n in 1..=*n_max {
                for delta in deltas {
                    let a = CandidateFamily::enumerate(&left.map, &left.x0, n, delta.0, spacing.0, budget)?;
                    let b = CandidateFamily::enumerate(&right.map, &right.x0, n, delta.0, spacing.0, budget)?;
                    for r in radii {
                        let c = count_product(&a, &b, r.0, budget)?;
                        records.push(c.record());
                        counts.push(c);
                    }
                }
            }
            TaskResult::ProductAudit { label, counts }
        }
        Task::SegmentLengths { count, .. } => {
            let rows = (0..*count)
                .map(|n| SegmentRow {
                    n,
                    e_f: segment_exponent(ChainBlocks::SegmentsF, n),
                    e_g: segment_exponent(ChainBlocks::SegmentsG, n),
                })
                .collect();
            TaskResult::SegmentLengths { label, rows }
        }
    })
}

fn summarize(config: &ExperimentConfig, results: &[TaskResult], checks: &[CheckOutcome], status: Status) -> String {
    let mut parts = Vec::new();
    let expected = config.expected.as_deref().map(|e| format!(" (expected {e})")).unwrap_or_default();
    let estimate = results.iter().find_map(|r| match r {
        TaskResult::Estimate { estimate, .. } => Some(estimate),
        _ => None,
    });
    let bcd = results.iter().find_map(|r| match r {
        TaskResult::Bcd { estimate, .. } => Some(estimate),
        _ => None,
    });
    if let Some(e) = estimate {
        parts.push(match e.extrapolated_value {
            Extrapolated::Value(v) => format!("h_inf ≈ {v:.4}{expected}"),
            Extrapolated::Infinity => format!("h_inf = +INFINITY_FLAG{expected}"),
            Extrapolated::Missing => format!("h_inf unavailable{expected}"),
        });
    } else if let Some(d) = bcd {
        parts.push(format!("bcd ≈ {:.4}{expected}", d.fitted_dimension));
    }
    if !checks.is_empty() {
        let passed = checks.iter().filter(|c| c.passed).count();
        parts.push(format!("checks {passed}/{} passed", checks.len()));
    }
    let status = serde_json::to_value(status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    parts.push(format!("status {status}"));
    format!("{}: {}", config.name, parts.join("; "))
}

