//! Per-slice orchestration: factor enrichment, the group sweep, reports.

mod analyze;
mod enrich;
mod eval;
mod output;

pub use analyze::{analyze_slice, AlarmZone, GroupEntry, SliceReport};
pub use enrich::{enrich, Enricher, PortfolioSlice};
pub use eval::{evaluate, EvalSummary, PlantedSliceResult};
pub use output::{read_reports, run_analysis, write_factors, Engine, RunSummary};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::detectors::{AnomalyKind, DetectorParams};
use crate::error::{Error, Result};
use crate::portfolio::{Descriptor, DESCRIPTOR_COUNT};
use crate::predictors::QualityFn;
use crate::scores::{DEFAULT_MIN_HISTORY, DEFAULT_WINDOW};

/// Number of explanatory factors: the descriptors and one smoothed
/// intensity per (detector, descriptor).
pub const FACTOR_COUNT: usize = DESCRIPTOR_COUNT + AnomalyKind::ALL.len() * DESCRIPTOR_COUNT;
pub const PAIR_COUNT: usize = FACTOR_COUNT * (FACTOR_COUNT - 1) / 2;
pub const GROUP_COUNT: usize = FACTOR_COUNT + PAIR_COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    Descriptor(Descriptor),
    Anomaly(AnomalyKind, Descriptor),
}

impl Factor {
    pub fn index(self) -> usize {
        match self {
            Factor::Descriptor(d) => d.index(),
            Factor::Anomaly(k, d) => DESCRIPTOR_COUNT + k.index() * DESCRIPTOR_COUNT + d.index(),
        }
    }

    pub fn from_index(i: usize) -> Option<Factor> {
        if i < DESCRIPTOR_COUNT {
            return Descriptor::from_index(i).map(Factor::Descriptor);
        }
        let j = i - DESCRIPTOR_COUNT;
        let kind = *AnomalyKind::ALL.get(j / DESCRIPTOR_COUNT)?;
        Some(Factor::Anomaly(kind, Descriptor::from_index(j % DESCRIPTOR_COUNT)?))
    }

    /// Anomaly intensities are nonnegative; their lower threshold is pinned at 0.
    pub fn is_anomaly(self) -> bool {
        matches!(self, Factor::Anomaly(..))
    }

    /// Rarity scores are missing for orders in cold start.
    pub fn is_score(self) -> bool {
        matches!(self, Factor::Descriptor(d) if d.is_score())
    }

    pub fn name(self) -> String {
        match self {
            Factor::Descriptor(d) => d.name().to_string(),
            Factor::Anomaly(k, d) => format!("{}_{}", k.name(), d.name()),
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Fixed catalogue of factors and groups. Groups are the singles in factor
/// order followed by the pairs `(i, j)`, `i < j`, in lexicographic order.
#[derive(Debug, Clone)]
pub struct FactorSet {
    factors: Vec<Factor>,
    pairs: Vec<(usize, usize)>,
}

impl Default for FactorSet {
    fn default() -> Self {
        Self::new()
    }
}

impl FactorSet {
    pub fn new() -> Self {
        let factors: Vec<Factor> = (0..FACTOR_COUNT).filter_map(Factor::from_index).collect();
        let pairs = (0..factors.len())
            .flat_map(|i| (i + 1..factors.len()).map(move |j| (i, j)))
            .collect();
        FactorSet { factors, pairs }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn group_count(&self) -> usize {
        self.factors.len() + self.pairs.len()
    }

    /// Factor indices of group `g`.
    pub fn group(&self, g: usize) -> Option<Vec<usize>> {
        if g < self.factors.len() {
            Some(vec![g])
        } else {
            self.pairs.get(g - self.factors.len()).map(|&(i, j)| vec![i, j])
        }
    }

    pub fn group_label(&self, g: usize) -> Option<String> {
        let members = self.group(g)?;
        Some(
            members
                .iter()
                .map(|&i| self.factors[i].name())
                .collect::<Vec<_>>()
                .join("+"),
        )
    }
}

/// How anomaly intensities are placed in time before smoothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    /// At the slice where the detection is confirmed. Causal.
    #[default]
    Online,
    /// At the slices covered by the anomaly itself. Needs the whole run.
    Offline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum QualityKind {
    #[default]
    Floor,
    Min,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Fraction of orders tagged bad per slice.
    pub q: f64,
    /// Floor on both conditional rates for a group to be retained.
    pub r: f64,
    /// Smoothing scale of anomaly intensities, in slices.
    pub tau: usize,
    pub detectors: DetectorParams,
    pub score_window: usize,
    pub score_min_history: usize,
    pub min_orders: usize,
    pub pairs_enabled: bool,
    pub quality: QualityKind,
    /// Weight on `P¹` for the weighted functional.
    pub weight: f64,
    /// Pair components must clear `prefilter_ratio * r` on both rates.
    pub prefilter_ratio: f64,
    pub alignment: Alignment,
    pub parallel: bool,
    pub seed: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            q: 0.03,
            r: 0.85,
            tau: 3,
            detectors: DetectorParams::default(),
            score_window: DEFAULT_WINDOW,
            score_min_history: DEFAULT_MIN_HISTORY,
            min_orders: 100,
            pairs_enabled: true,
            quality: QualityKind::Floor,
            weight: 0.5,
            prefilter_ratio: 0.8,
            alignment: Alignment::Online,
            parallel: true,
            seed: 0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.q > 0.0 && self.q < 1.0) {
            return bad(format!("q must be in (0, 1), got {}", self.q));
        }
        if !(0.70..=1.0).contains(&self.r) {
            return bad(format!("r must be in [0.70, 1.00], got {}", self.r));
        }
        if self.min_orders < 50 {
            return bad(format!("min_orders must be at least 50, got {}", self.min_orders));
        }
        if !(self.prefilter_ratio > 0.0 && self.prefilter_ratio <= 1.0) {
            return bad(format!(
                "prefilter_ratio must be in (0, 1], got {}",
                self.prefilter_ratio
            ));
        }
        if self.score_min_history == 0 || self.score_min_history > self.score_window {
            return bad(format!(
                "score_min_history must be in 1..={}, got {}",
                self.score_window, self.score_min_history
            ));
        }
        self.quality_fn().validate()?;
        self.detectors.validate()
    }

    pub fn quality_fn(&self) -> QualityFn {
        match self.quality {
            QualityKind::Floor => QualityFn::FloorPower(self.r),
            QualityKind::Min => QualityFn::MinPower,
            QualityKind::Weighted => QualityFn::Weighted(self.weight),
        }
    }

    pub fn prefilter_floor(&self) -> f64 {
        self.prefilter_ratio * self.r
    }
}
