//! Online anomaly detection on generic time series.
//!
//! A centered moving median gives the baseline `BU`, and a robust scale of
//! the first differences of `U` gives the local noise level `σ`. Three
//! detectors then run on top:
//!
//! - peaks/crenels: short runs of high outliers above the baseline,
//! - jumps: level shifts between quadratic fits of `BU` left and right of `t`,
//! - trend changes: slope changes between the same two fits, with continuity,
//!   away from any jump.
//!
//! Peak and jump intensities are in `σ` units; trend intensities are in units
//! of the slope-change threshold. The batch functions work on whole series;
//! [`SeriesPipeline`] runs the same logic one sample at a time.

mod baseline;
mod peaks;
mod pipeline;
mod regression;
mod smoothing;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use baseline::{baseline, Baseline, BaselinePoint, BaselineState};
pub use peaks::{detect_peaks_crenels, PeakDetection, PeakScanner};
pub use pipeline::{detect_series, Detection, SeriesPipeline};
pub use regression::{
    detect_jumps, detect_trend_changes, evaluate_jump, evaluate_trend, fit_quadratic, veto_trends_near_jumps, QuadFit,
};
pub use smoothing::smooth_intensity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    Peak,
    Jump,
    Trend,
}

impl AnomalyKind {
    pub const ALL: [AnomalyKind; 3] = [AnomalyKind::Peak, AnomalyKind::Jump, AnomalyKind::Trend];

    pub fn name(self) -> &'static str {
        match self {
            AnomalyKind::Peak => "peak",
            AnomalyKind::Jump => "jump",
            AnomalyKind::Trend => "trend",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::str::FromStr for AnomalyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AnomalyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown anomaly kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineParams {
    /// Half-width `w_b` of the moving median window (`2 w_b + 1` samples).
    pub median_half_width: usize,
    /// Number of recent first differences `w_σ` used for the noise scale.
    pub noise_window: usize,
    /// Lower bound on `σ`, in series units.
    pub sigma_floor: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            median_half_width: 3,
            noise_window: 60,
            sigma_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakParams {
    /// Minimum run length, in slices.
    pub min_duration: usize,
    /// Maximum spread (max - min) of the run values, in `σ` units.
    pub min_thickness: f64,
    /// Minimum height of each outlier above the baseline, in `σ` units.
    pub min_height: f64,
    /// Minimum distance in slices from the end of the previous detection.
    pub min_gap: usize,
}

impl Default for PeakParams {
    fn default() -> Self {
        PeakParams {
            min_duration: 1,
            min_thickness: 2.0,
            min_height: 4.0,
            min_gap: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpParams {
    /// Half-duration `L`: each regression sees `L + 1` points.
    pub window: usize,
    /// Minimum jump size `Δ`, in `σ` units.
    pub min_size: f64,
    /// Maximum RMS residual of either regression, in `σ` units.
    pub max_residual: f64,
}

impl Default for JumpParams {
    fn default() -> Self {
        JumpParams {
            window: 12,
            min_size: 4.0,
            max_residual: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendParams {
    pub window: usize,
    /// Minimum slope change `λ`, in `σ` units per slice.
    pub min_slope_change: f64,
    /// Continuity modulus `ε`, in `σ` units.
    pub continuity: f64,
    pub max_residual: f64,
}

impl Default for TrendParams {
    fn default() -> Self {
        TrendParams {
            window: 12,
            min_slope_change: 0.85,
            continuity: 3.0,
            max_residual: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorParams {
    pub baseline: BaselineParams,
    pub peak: PeakParams,
    pub jump: JumpParams,
    pub trend: TrendParams,
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        let b = &self.baseline;
        if b.median_half_width < 1 {
            return Err(Error::Config("baseline.median_half_width must be >= 1".into()));
        }
        if b.noise_window < 2 {
            return Err(Error::Config("baseline.noise_window must be >= 2".into()));
        }
        if !(b.sigma_floor > 0.0) {
            return Err(Error::Config("baseline.sigma_floor must be > 0".into()));
        }
        let p = &self.peak;
        if p.min_duration < 1 || p.min_gap < 1 || !(p.min_thickness > 0.0) || !(p.min_height > 0.0) {
            return Err(Error::Config("peak thresholds must be positive".into()));
        }
        if self.jump.window < 3 || self.trend.window < 3 {
            return Err(Error::Config("regression windows must be >= 3".into()));
        }
        if !(self.jump.min_size > 0.0) || !(self.jump.max_residual > 0.0) {
            return Err(Error::Config("jump thresholds must be positive".into()));
        }
        let t = &self.trend;
        if !(t.min_slope_change > 0.0) || !(t.continuity > 0.0) || !(t.max_residual > 0.0) {
            return Err(Error::Config("trend thresholds must be positive".into()));
        }
        Ok(())
    }

    /// Parses a TOML document; missing sections and keys keep their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let params: DetectorParams =
            toml::from_str(text).map_err(|e| Error::Config(format!("detector config: {e}")))?;
        params.validate()?;
        Ok(params)
    }
}
