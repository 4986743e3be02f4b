//! Localization metrics and batch evaluation.
//!
//! The headline score is the average distance between the eight predicted
//! key points and the annotated ones, minimized over the eight canonical
//! relabelings of a hexahedron (four rotations about the vertical times two
//! winding reflections), so an annotator's corner convention cannot move the
//! score. Success thresholds are size-relative: a fixed percentage of the
//! mean truck dimension.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Real, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("key-point set has {got} points, expected 8")]
    WrongCardinality { got: usize },
}

/// Vehicle size bucket used for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Large,
    Medium,
    Small,
}

impl SizeClass {
    /// Bucket by compartment length: ≥ 9 m large, ≥ 6.5 m medium.
    pub fn from_length(length: Real) -> Self {
        if length >= 9.0 {
            SizeClass::Large
        } else if length >= 6.5 {
            SizeClass::Medium
        } else {
            SizeClass::Small
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SizeClass::Large => "large",
            SizeClass::Medium => "medium",
            SizeClass::Small => "small",
        }
    }
}

/// Ground-truth annotation for one vehicle.
#[derive(Debug, Clone)]
pub struct Annotation {
    pub id: String,
    pub key_points: [Vec3; 8],
    /// length, width, height in meters
    pub dims: [Real; 3],
    pub size_class: SizeClass,
}

/// The eight canonical labelings: rotations of the bottom ring combined with
/// winding reflection, applied to both rings.
fn canonical_orderings() -> [[usize; 8]; 8] {
    let mut out = [[0usize; 8]; 8];
    let mut n = 0;
    for r in 0..4 {
        for reflect in [false, true] {
            for i in 0..4 {
                let j = if reflect {
                    (r + 4 - i) % 4
                } else {
                    (r + i) % 4
                };
                out[n][i] = j;
                out[n][i + 4] = j + 4;
            }
            n += 1;
        }
    }
    out
}

/// Average corner distance under the best canonical relabeling.
pub fn add_metric(predicted: &[Vec3], truth: &[Vec3]) -> Result<Real, MetricsError> {
    if predicted.len() != 8 {
        return Err(MetricsError::WrongCardinality {
            got: predicted.len(),
        });
    }
    if truth.len() != 8 {
        return Err(MetricsError::WrongCardinality { got: truth.len() });
    }
    let mut best = Real::INFINITY;
    for ordering in canonical_orderings() {
        let sum: Real = (0..8)
            .map(|i| (predicted[i] - truth[ordering[i]]).norm())
            .sum();
        best = best.min(sum / 8.0);
    }
    Ok(best)
}

/// Size-relative success threshold: `percent`% of the mean dimension.
pub fn success_threshold(dims: [Real; 3], percent: Real) -> Real {
    (dims[0] + dims[1] + dims[2]) / 3.0 * percent / 100.0
}

/// One prediction to score.
#[derive(Debug, Clone)]
pub struct VehiclePrediction {
    pub id: String,
    pub key_points: [Vec3; 8],
    pub runtime_seconds: Option<Real>,
}

/// Per-vehicle evaluation row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VehicleEval {
    pub id: String,
    pub size_class: SizeClass,
    pub add: Real,
    /// ADD over the mean dimension, percent
    pub relative_error_pct: Real,
    pub pass_5: bool,
    pub pass_7: bool,
    pub pass_10: bool,
    pub runtime_seconds: Option<Real>,
}

/// Distribution summary of relative errors within one bucket.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassStats {
    pub count: usize,
    pub mean: Real,
    pub sd: Real,
    pub min: Real,
    pub median: Real,
    pub max: Real,
    pub pass_rate_5: Real,
    pub pass_rate_7: Real,
    pub pass_rate_10: Real,
    pub mean_runtime_seconds: Option<Real>,
}

/// Batch evaluation output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_vehicle: Vec<VehicleEval>,
    pub per_class: BTreeMap<String, ClassStats>,
    pub overall: Option<ClassStats>,
    /// vehicles skipped with the reason (missing annotation, bad cardinality)
    pub errors: Vec<String>,
}

fn stats_of(rows: &[&VehicleEval]) -> Option<ClassStats> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as Real;
    let mut errs: Vec<Real> = rows.iter().map(|r| r.relative_error_pct).collect();
    errs.sort_by(Real::total_cmp);
    let mean = errs.iter().sum::<Real>() / n;
    let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<Real>() / n).sqrt();
    let median = if errs.len() % 2 == 1 {
        errs[errs.len() / 2]
    } else {
        (errs[errs.len() / 2 - 1] + errs[errs.len() / 2]) / 2.0
    };
    let rate = |f: fn(&VehicleEval) -> bool| rows.iter().filter(|r| f(r)).count() as Real / n;
    let runtimes: Vec<Real> = rows.iter().filter_map(|r| r.runtime_seconds).collect();
    Some(ClassStats {
        count: rows.len(),
        mean,
        sd,
        min: errs[0],
        median,
        max: *errs.last().unwrap(),
        pass_rate_5: rate(|r| r.pass_5),
        pass_rate_7: rate(|r| r.pass_7),
        pass_rate_10: rate(|r| r.pass_10),
        mean_runtime_seconds: if runtimes.is_empty() {
            None
        } else {
            Some(runtimes.iter().sum::<Real>() / runtimes.len() as Real)
        },
    })
}

/// Score a batch of predictions against annotations, matching by id.
/// Vehicles without an annotation produce an error entry and the batch
/// continues.
pub fn evaluate_batch(predictions: &[VehiclePrediction], annotations: &[Annotation]) -> EvalReport {
    let by_id: BTreeMap<&str, &Annotation> =
        annotations.iter().map(|a| (a.id.as_str(), a)).collect();
    let mut per_vehicle = Vec::new();
    let mut errors = Vec::new();
    for pred in predictions {
        let Some(annotation) = by_id.get(pred.id.as_str()) else {
            errors.push(format!("vehicle `{}`: no matching annotation", pred.id));
            continue;
        };
        let add = match add_metric(&pred.key_points, &annotation.key_points) {
            Ok(v) => v,
            Err(e) => {
                errors.push(format!("vehicle `{}`: {e}", pred.id));
                continue;
            }
        };
        let mean_dim = (annotation.dims[0] + annotation.dims[1] + annotation.dims[2]) / 3.0;
        per_vehicle.push(VehicleEval {
            id: pred.id.clone(),
            size_class: annotation.size_class,
            add,
            relative_error_pct: add / mean_dim * 100.0,
            pass_5: add < success_threshold(annotation.dims, 5.0),
            pass_7: add < success_threshold(annotation.dims, 7.0),
            pass_10: add < success_threshold(annotation.dims, 10.0),
            runtime_seconds: pred.runtime_seconds,
        });
    }

    let mut per_class = BTreeMap::new();
    for class in [SizeClass::Large, SizeClass::Medium, SizeClass::Small] {
        let rows: Vec<&VehicleEval> = per_vehicle
            .iter()
            .filter(|r| r.size_class == class)
            .collect();
        if let Some(stats) = stats_of(&rows) {
            per_class.insert(class.label().to_string(), stats);
        }
    }
    let overall = stats_of(&per_vehicle.iter().collect::<Vec<_>>());
    EvalReport {
        per_vehicle,
        per_class,
        overall,
        errors,
    }
}

/// Plain-text table of the per-class statistics.
pub fn render_report_table(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<8} {:>5} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
        "size", "count", "mean%", "sd%", "min%", "median%", "max%", "pass5", "pass7", "pass10"
    ));
    let mut write_row = |label: &str, s: &ClassStats| {
        out.push_str(&format!(
            "{:<8} {:>5} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8.2}\n",
            label,
            s.count,
            s.mean,
            s.sd,
            s.min,
            s.median,
            s.max,
            s.pass_rate_5,
            s.pass_rate_7,
            s.pass_rate_10
        ));
    };
    for (label, stats) in &report.per_class {
        write_row(label, stats);
    }
    if let Some(overall) = &report.overall {
        write_row("all", overall);
    }
    out
}
