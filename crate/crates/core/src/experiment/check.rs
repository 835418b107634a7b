//! Expected outcomes of a config, evaluated against task results.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::run::TaskResult;
use super::{Real, TaskKind};
use crate::coarse::Trend;
use crate::entropy::{EntropyEstimate, Extrapolated};
use crate::error::{Error, Result};

/// Which slope of an estimate a check reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    /// The extrapolated value; the infinity flag reads as `+inf`.
    Extrapolated,
    /// The stabilized lower slope at the largest `delta`.
    Lower,
    /// The stabilized upper slope at the largest `delta`.
    Upper,
}

/// An assertion over one or two task results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    /// `|slope - target| <= rel_tol * target`.
    SlopeWithin { task: String, stream: Stream, target: Real, rel_tol: Real },
    SlopeAtMost { task: String, stream: Stream, max: Real },
    SlopeAtLeast { task: String, stream: Stream, min: Real },
    /// Lower slope at most the upper slope at the largest `delta`.
    LowerLeUpper { task: String },
    InfinityFlag { task: String },
    /// `slope(delta) >= factor * delta` at every `delta`.
    SlopePerDelta { task: String, factor: Real },
    /// `slope(b) / slope(a)` within `[min, max]` for each pair `(a, b)`.
    RateRatio { task: String, pairs: Vec<(Real, Real)>, min: Real, max: Real },
    /// `slope(task) < factor * slope(base) - margin` on the extrapolated values.
    RateGap { task: String, base: String, factor: Real, margin: Real },
    DimensionWithin { task: String, target: Real, abs_tol: Real },
    /// Every conjugacy defect is exactly zero.
    DefectsZero { task: String },
    TrendIs { task: String, trend: Trend },
    /// `|defect(T) / T - target| <= rel_tol * target` for every radius `T`.
    DefectRatio { task: String, target: Real, rel_tol: Real },
    DefectAtMost { task: String, max: Real },
    /// `defect(T) >= factor * T` at the given radius.
    DefectAtLeast { task: String, radius: Real, factor: Real },
    EmbeddingPassed { task: String },
    /// Both product inequalities on every audited count.
    ProductInequalities { task: String },
    /// The two segment exponents sum to the index.
    SegmentExponents { task: String },
}

/// A check with its verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub check: String,
    pub task: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::SlopeWithin { .. } => "slope_within",
            Check::SlopeAtMost { .. } => "slope_at_most",
            Check::SlopeAtLeast { .. } => "slope_at_least",
            Check::LowerLeUpper { .. } => "lower_le_upper",
            Check::InfinityFlag { .. } => "infinity_flag",
            Check::SlopePerDelta { .. } => "slope_per_delta",
            Check::RateRatio { .. } => "rate_ratio",
            Check::RateGap { .. } => "rate_gap",
            Check::DimensionWithin { .. } => "dimension_within",
            Check::DefectsZero { .. } => "defects_zero",
            Check::TrendIs { .. } => "trend_is",
            Check::DefectRatio { .. } => "defect_ratio",
            Check::DefectAtMost { .. } => "defect_at_most",
            Check::DefectAtLeast { .. } => "defect_at_least",
            Check::EmbeddingPassed { .. } => "embedding_passed",
            Check::ProductInequalities { .. } => "product_inequalities",
            Check::SegmentExponents { .. } => "segment_exponents",
        }
    }

    pub fn task(&self) -> &str {
        match self {
            Check::SlopeWithin { task, .. }
            | Check::SlopeAtMost { task, .. }
            | Check::SlopeAtLeast { task, .. }
            | Check::LowerLeUpper { task }
            | Check::InfinityFlag { task }
            | Check::SlopePerDelta { task, .. }
            | Check::RateRatio { task, .. }
            | Check::RateGap { task, .. }
            | Check::DimensionWithin { task, .. }
            | Check::DefectsZero { task }
            | Check::TrendIs { task, .. }
            | Check::DefectRatio { task, .. }
            | Check::DefectAtMost { task, .. }
            | Check::DefectAtLeast { task, .. }
            | Check::EmbeddingPassed { task }
            | Check::ProductInequalities { task }
            | Check::SegmentExponents { task } => task,
        }
    }

    fn wants(&self) -> TaskKind {
        match self {
            Check::DimensionWithin { .. } => TaskKind::Bcd,
            Check::DefectsZero { .. } => TaskKind::Conjugacy,
            Check::TrendIs { .. }
            | Check::DefectRatio { .. }
            | Check::DefectAtMost { .. }
            | Check::DefectAtLeast { .. } => TaskKind::DefectCurve,
            Check::EmbeddingPassed { .. } => TaskKind::Embedding,
            Check::ProductInequalities { .. } => TaskKind::ProductAudit,
            Check::SegmentExponents { .. } => TaskKind::SegmentLengths,
            _ => TaskKind::Estimate,
        }
    }

    pub(crate) fn validate(&self, kinds: &HashMap<String, TaskKind>) -> Result<()> {
        let mut tasks = vec![self.task()];
        if let Check::RateGap { base, .. } = self {
            tasks.push(base);
        }
        for t in tasks {
            match kinds.get(t) {
                Some(k) if *k == self.wants() => {}
                Some(_) => return Err(Error::Config(format!("check {} does not apply to task {t}", self.name()))),
                None => return Err(Error::Config(format!("check {} names unknown task {t}", self.name()))),
            }
        }
        Ok(())
    }

    /// Evaluates the check against results looked up by label.
    pub fn evaluate(&self, results: &[TaskResult]) -> CheckOutcome {
        let (passed, detail) = match self.verdict(results) {
            Ok(v) => v,
            Err(e) => (false, e),
        };
        CheckOutcome { check: self.name().into(), task: self.task().into(), passed, detail }
    }

    fn verdict(&self, results: &[TaskResult]) -> std::result::Result<(bool, String), String> {
        let find = |label: &str| {
            results.iter().find(|r| r.label() == label).ok_or_else(|| format!("no result for {label}"))
        };
        let estimate = |label: &str| match find(label)? {
            TaskResult::Estimate { estimate, .. } => Ok(estimate),
            r => Err(r.failure(label)),
        };
        Ok(match self {
            Check::SlopeWithin { task, stream, target, rel_tol } => {
                let v = read(estimate(task)?, *stream)?;
                let ok = (v - target.0).abs() <= rel_tol.0 * target.0.abs();
                (ok, format!("{v:.4} vs {} within {}", target, rel_tol))
            }
            Check::SlopeAtMost { task, stream, max } => {
                let v = read(estimate(task)?, *stream)?;
                (v <= max.0, format!("{v:.4} <= {max}"))
            }
            Check::SlopeAtLeast { task, stream, min } => {
                let v = read(estimate(task)?, *stream)?;
                (v >= min.0, format!("{v:.4} >= {min}"))
            }
            Check::LowerLeUpper { task } => {
                let e = estimate(task)?;
                let lo = read(e, Stream::Lower)?;
                let up = read(e, Stream::Upper)?;
                (lo <= up, format!("{lo:.4} <= {up:.4}"))
            }
            Check::InfinityFlag { task } => {
                let e = estimate(task)?;
                (e.extrapolated_value == Extrapolated::Infinity, format!("{:?}", e.extrapolated_value))
            }
            Check::SlopePerDelta { task, factor } => {
                let e = estimate(task)?;
                if e.per_delta.is_empty() {
                    return Err("no stabilized slopes".into());
                }
                let ok = e.per_delta.iter().all(|d| d.slope >= factor.0 * d.delta);
                let shown: Vec<String> = e.per_delta.iter().map(|d| format!("{}:{:.3}", d.delta, d.slope)).collect();
                (ok, format!("slopes {} against {factor} * delta", shown.join(" ")))
            }
            Check::RateRatio { task, pairs, min, max } => {
                let e = estimate(task)?;
                let mut ok = true;
                let mut shown = Vec::new();
                for (a, b) in pairs {
                    let sa = e.slope_for(a.0).ok_or_else(|| format!("no slope at delta {a}"))?;
                    let sb = e.slope_for(b.0).ok_or_else(|| format!("no slope at delta {b}"))?;
                    let ratio = sb / sa;
                    ok &= ratio >= min.0 && ratio <= max.0;
                    shown.push(format!("{b}/{a}:{ratio:.3}"));
                }
                (ok, format!("ratios {} in [{min}, {max}]", shown.join(" ")))
            }
            Check::RateGap { task, base, factor, margin } => {
                let v = read(estimate(task)?, Stream::Extrapolated)?;
                let b = read(estimate(base)?, Stream::Extrapolated)?;
                let bound = factor.0 * b - margin.0;
                (v < bound, format!("{v:.4} < {factor} * {b:.4} - {margin} = {bound:.4}"))
            }
            Check::DimensionWithin { task, target, abs_tol } => match find(task)? {
                TaskResult::Bcd { estimate, .. } => {
                    let v = estimate.fitted_dimension;
                    ((v - target.0).abs() <= abs_tol.0, format!("{v:.4} vs {target} within {abs_tol}"))
                }
                r => return Err(r.failure(task)),
            },
            Check::DefectsZero { task } => match find(task)? {
                TaskResult::Conjugacy { reports, .. } => {
                    let worst = reports
                        .iter()
                        .flat_map(|r| {
                            let c = &r.report;
                            [&c.k_phi, &c.k_psi, &c.inverse_defects.0, &c.inverse_defects.1].map(|d| d.sup_defect)
                        })
                        .fold(0.0, f64::max);
                    (reports.iter().all(|r| r.report.all_zero()), format!("largest defect {worst}"))
                }
                r => return Err(r.failure(task)),
            },
            Check::TrendIs { task, trend } => {
                let c = curve(find(task)?, task)?;
                (c.classification == *trend, format!("{:?}", c.classification))
            }
            Check::DefectRatio { task, target, rel_tol } => {
                let c = curve(find(task)?, task)?;
                let ratios: Vec<f64> = c.defect_curve.iter().map(|(t, d)| d / t).collect();
                let ok = ratios.iter().all(|q| (q - target.0).abs() <= rel_tol.0 * target.0);
                (ok, format!("defect/T {ratios:?} vs {target} within {rel_tol}"))
            }
            Check::DefectAtMost { task, max } => {
                let c = curve(find(task)?, task)?;
                let worst = c.defect_curve.iter().map(|p| p.1).fold(0.0, f64::max);
                (worst <= max.0, format!("{worst} <= {max}"))
            }
            Check::DefectAtLeast { task, radius, factor } => {
                let c = curve(find(task)?, task)?;
                let (_, d) = c
                    .defect_curve
                    .iter()
                    .find(|(t, _)| *t == radius.0)
                    .ok_or_else(|| format!("no defect at radius {radius}"))?;
                (*d >= factor.0 * radius.0, format!("defect({radius}) = {d} >= {factor} * {radius}"))
            }
            Check::EmbeddingPassed { task } => match find(task)? {
                TaskResult::Embedding { report, .. } => (
                    report.passed(),
                    format!("{} upper, {} lower violations", report.upper_violation_count, report.lower_violation_count),
                ),
                r => return Err(r.failure(task)),
            },
            Check::ProductInequalities { task } => match find(task)? {
                TaskResult::ProductAudit { counts, .. } => {
                    let bad = counts
                        .iter()
                        .filter(|c| c.separated < c.left.0 * c.right.0 || c.spanning > c.left.1 * c.right.1)
                        .count();
                    (bad == 0, format!("{bad} failures over {} instances", counts.len()))
                }
                r => return Err(r.failure(task)),
            },
            Check::SegmentExponents { task } => match find(task)? {
                TaskResult::SegmentLengths { rows, .. } => {
                    let bad = rows.iter().filter(|r| r.e_f + r.e_g != r.n as u64).count();
                    (bad == 0, format!("{bad} failures over {} segments", rows.len()))
                }
                r => return Err(r.failure(task)),
            },
        })
    }
}

fn curve<'a>(r: &'a TaskResult, label: &str) -> std::result::Result<&'a crate::coarse::DefectCurve, String> {
    match r {
        TaskResult::DefectCurve { curve, .. } => Ok(curve),
        r => Err(r.failure(label)),
    }
}

fn read(e: &EntropyEstimate, stream: Stream) -> std::result::Result<f64, String> {
    let last = || e.per_delta.last().ok_or_else(|| "no stabilized slopes".to_string());
    match stream {
        Stream::Extrapolated => match e.extrapolated_value {
            Extrapolated::Value(v) => Ok(v),
            Extrapolated::Infinity => Ok(f64::INFINITY),
            Extrapolated::Missing => Err("no extrapolated value".into()),
        },
        Stream::Lower => last()?.slope_lower.ok_or_else(|| "no lower slope".into()),
        Stream::Upper => last()?.slope_upper.ok_or_else(|| "no upper slope".into()),
    }
}
