use std::collections::VecDeque;

use super::{
    baseline, detect_jumps, detect_peaks_crenels, detect_trend_changes, evaluate_jump, evaluate_trend,
    veto_trends_near_jumps, AnomalyKind, BaselinePoint, BaselineState, DetectorParams, PeakScanner,
};

/// A confirmed anomaly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub kind: AnomalyKind,
    /// Slices covered by the anomaly itself (a single slice for jumps and
    /// trend changes, the whole run for crenels).
    pub first_slice: u32,
    pub last_slice: u32,
    /// Slice of the sample that made the detection possible.
    pub confirm_slice: u32,
    pub intensity: f64,
}

/// All three detectors on one series, fed one sample at a time.
///
/// Detections come out with a delay: `w_b` slices for the centered median,
/// plus one sample to close a peak run or `L` samples for the right-hand
/// regression window of jumps. Trend changes wait another `L` slices for
/// the jump test around them.
#[derive(Debug, Clone)]
pub struct SeriesPipeline {
    params: DetectorParams,
    baseline: BaselineState,
    peaks: PeakScanner,
    recent: VecDeque<BaselinePoint>,
    scratch: Vec<f64>,
    /// Sample indices of recent jumps.
    jumps: VecDeque<usize>,
    /// Trend candidates waiting for the jump test around them.
    pending: VecDeque<(BaselinePoint, f64)>,
}

impl SeriesPipeline {
    pub fn new(params: DetectorParams) -> Self {
        SeriesPipeline {
            baseline: BaselineState::new(params.baseline.clone()),
            peaks: PeakScanner::new(params.peak.clone()),
            recent: VecDeque::new(),
            scratch: Vec::new(),
            jumps: VecDeque::new(),
            pending: VecDeque::new(),
            params,
        }
    }

    fn span(&self) -> usize {
        2 * self.params.jump.window.max(self.params.trend.window) + 2
    }

    pub fn push(&mut self, slice: u32, u: f64) -> Vec<Detection> {
        let mut out = Vec::new();
        let Some(point) = self.baseline.push(slice, u) else {
            return out;
        };

        if let Some(d) = self.peaks.step(&point) {
            out.push(Detection {
                kind: AnomalyKind::Peak,
                first_slice: d.start_slice,
                last_slice: d.end_slice,
                confirm_slice: slice,
                intensity: d.intensity,
            });
        }

        if self.recent.len() == self.span() {
            self.recent.pop_front();
        }
        self.recent.push_back(point);

        let radius = self.params.jump.window;
        let jump_span = 2 * radius + 2;
        let mut jump_tested = None;
        if let Some((centre, sigma, window)) = trailing_window(&self.recent, &mut self.scratch, jump_span) {
            jump_tested = Some(centre.index);
            if let Some(v) = evaluate_jump(window, sigma, &self.params.jump) {
                self.jumps.push_back(centre.index);
                out.push(Detection {
                    kind: AnomalyKind::Jump,
                    first_slice: centre.slice,
                    last_slice: centre.slice,
                    confirm_slice: slice,
                    intensity: v,
                });
            }
        }
        let trend_span = 2 * self.params.trend.window + 2;
        if let Some((centre, sigma, window)) = trailing_window(&self.recent, &mut self.scratch, trend_span) {
            if let Some(v) = evaluate_trend(window, sigma, &self.params.trend) {
                self.pending.push_back((centre, v));
            }
        }

        if let Some(tested) = jump_tested {
            while let Some(&(centre, v)) = self.pending.front() {
                if centre.index + radius > tested {
                    break;
                }
                self.pending.pop_front();
                let near_jump = self.jumps.iter().any(|&j| j.abs_diff(centre.index) <= radius);
                if !near_jump {
                    out.push(Detection {
                        kind: AnomalyKind::Trend,
                        first_slice: centre.slice,
                        last_slice: centre.slice,
                        confirm_slice: slice,
                        intensity: v,
                    });
                }
            }
            while self.jumps.front().is_some_and(|&j| j + 2 * radius < tested) {
                self.jumps.pop_front();
            }
        }
        out
    }
}

/// Batch counterpart of [`SeriesPipeline`]: intensity series indexed by
/// [`AnomalyKind::index`].
pub fn detect_series(u: &[f64], params: &DetectorParams) -> [Vec<f64>; 3] {
    let base = baseline(u, &params.baseline);
    let jumps = detect_jumps(u, &base, &params.jump);
    let mut trend = detect_trend_changes(u, &base, &params.trend);
    veto_trends_near_jumps(&mut trend, &jumps, &base, params.jump.window);
    [detect_peaks_crenels(u, &base, &params.peak), jumps, trend]
}

/// The candidate point, the noise scale before the window and the `BU` values
/// of the trailing `span` points.
fn trailing_window<'a>(
    recent: &VecDeque<BaselinePoint>,
    scratch: &'a mut Vec<f64>,
    span: usize,
) -> Option<(BaselinePoint, f64, &'a [f64])> {
    if recent.len() < span {
        return None;
    }
    let first = recent.len() - span;
    let centre = recent[first + span / 2];
    scratch.clear();
    scratch.extend(recent.range(first..).map(|p| p.bu));
    Some((centre, recent[first].sigma, scratch))
}
