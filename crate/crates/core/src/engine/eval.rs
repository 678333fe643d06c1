use serde::{Deserialize, Serialize};

use super::SliceReport;
use crate::synth::GroundTruth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSliceResult {
    pub slice: u32,
    pub factor: String,
    pub analyzed: bool,
    /// A dominating group contains the planted factor.
    pub recovered: bool,
    pub dominating: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub planted_slices: usize,
    pub recovered: usize,
    pub recall: f64,
    /// Largest false alarm rate among retained groups over all reports.
    pub max_retained_far: f64,
    pub per_slice: Vec<PlantedSliceResult>,
}

/// Scores reports against the planted dependences of a synthetic run.
pub fn evaluate(reports: &[SliceReport], truth: &GroundTruth) -> EvalSummary {
    let mut per_slice = Vec::new();
    for dep in &truth.dependences {
        let factor = dep.factor.name().to_string();
        for t in dep.from..=dep.to {
            let report = reports.iter().find(|r| r.slice == t);
            let analyzed = report.is_some_and(|r| !r.is_skipped());
            let dominating = report.map(|r| r.dominating.clone()).unwrap_or_default();
            let recovered = dominating.iter().any(|g| g.split('+').any(|f| f == factor));
            per_slice.push(PlantedSliceResult {
                slice: t,
                factor: factor.clone(),
                analyzed,
                recovered,
                dominating,
            });
        }
    }
    let recovered = per_slice.iter().filter(|p| p.recovered).count();
    let max_retained_far = reports
        .iter()
        .flat_map(|r| r.groups.iter().filter(|g| g.retained))
        .map(|g| g.far)
        .fold(0.0, f64::max);
    EvalSummary {
        planted_slices: per_slice.len(),
        recovered,
        recall: if per_slice.is_empty() {
            0.0
        } else {
            recovered as f64 / per_slice.len() as f64
        },
        max_retained_far,
        per_slice,
    }
}
