use super::{Baseline, JumpParams, TrendParams};

/// Least-squares quadratic `y = a + b x + c x²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFit {
    pub coeffs: [f64; 3],
    /// Root-mean-square residual.
    pub rms: f64,
    /// Largest absolute residual.
    pub max_abs: f64,
}

impl QuadFit {
    pub fn value_at(&self, x: f64) -> f64 {
        let [a, b, c] = self.coeffs;
        a + x * (b + x * c)
    }

    pub fn slope_at(&self, x: f64) -> f64 {
        self.coeffs[1] + 2.0 * self.coeffs[2] * x
    }
}

/// Ordinary least squares through at least three points with distinct `x`.
pub fn fit_quadratic(points: &[(f64, f64)]) -> QuadFit {
    assert!(points.len() >= 3, "quadratic fit needs three points");
    // normal equations on the powers 0..=4 of x
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for &(x, y) in points {
        let mut xp = 1.0;
        for (k, sk) in s.iter_mut().enumerate() {
            *sk += xp;
            if k < 3 {
                t[k] += xp * y;
            }
            xp *= x;
        }
    }
    let mut m = [
        [s[0], s[1], s[2], t[0]],
        [s[1], s[2], s[3], t[1]],
        [s[2], s[3], s[4], t[2]],
    ];
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap_or(col);
        m.swap(col, pivot);
        let pivot_row = m[col];
        for row in m.iter_mut().skip(col + 1) {
            let f = row[col] / pivot_row[col];
            for (v, p) in row.iter_mut().zip(pivot_row).skip(col) {
                *v -= f * p;
            }
        }
    }
    let mut coeffs = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| m[row][k] * coeffs[k]).sum();
        coeffs[row] = (m[row][3] - tail) / m[row][row];
    }
    let mut fit = QuadFit {
        coeffs,
        rms: 0.0,
        max_abs: 0.0,
    };
    let mut sse = 0.0;
    for &(x, y) in points {
        let r = (y - fit.value_at(x)).abs();
        sse += r * r;
        fit.max_abs = fit.max_abs.max(r);
    }
    fit.rms = (sse / points.len() as f64).sqrt();
    fit
}

/// Left and right fits around the candidate `t`. `window` holds `BU` over
/// `[t - 1 - L, t + L]`; `x` is measured from `t`.
fn fits_around(window: &[f64]) -> (QuadFit, QuadFit) {
    debug_assert!(window.len().is_multiple_of(2) && window.len() >= 8);
    let half = window.len() / 2;
    let left: Vec<(f64, f64)> = window[..half]
        .iter()
        .enumerate()
        .map(|(i, &y)| (i as f64 - half as f64, y))
        .collect();
    let right: Vec<(f64, f64)> = window[half..].iter().enumerate().map(|(i, &y)| (i as f64, y)).collect();
    (fit_quadratic(&left), fit_quadratic(&right))
}

/// Jump intensity `JS(t) / σ` when the jump test passes at the centre of
/// `window` (length `2L + 2`).
pub fn evaluate_jump(window: &[f64], sigma: f64, params: &JumpParams) -> Option<f64> {
    let (left, right) = fits_around(window);
    let limit = params.max_residual * sigma;
    if left.rms > limit || right.rms > limit {
        return None;
    }
    let size = (right.value_at(0.0) - left.value_at(0.0)).abs();
    (size > params.min_size * sigma).then(|| size / sigma)
}

/// Trend-change intensity `TCS(t) / (λ σ)` when the trend test passes.
pub fn evaluate_trend(window: &[f64], sigma: f64, params: &TrendParams) -> Option<f64> {
    let (left, right) = fits_around(window);
    let limit = params.max_residual * sigma;
    if left.rms > limit || right.rms > limit {
        return None;
    }
    let gap = (right.value_at(0.0) - left.value_at(0.0)).abs();
    if gap >= params.continuity * sigma {
        return None;
    }
    let change = (right.slope_at(0.0) - left.slope_at(0.0)).abs();
    let threshold = params.min_slope_change * sigma;
    (change > threshold).then(|| change / threshold)
}

fn scan(len: usize, base: &Baseline, half_width: usize, eval: impl Fn(&[f64], f64) -> Option<f64>) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let span = 2 * half_width + 2;
    if base.len() < span {
        return out;
    }
    for first in 0..=base.len() - span {
        let centre = first + half_width + 1;
        // noise scale from before the window, so the event cannot inflate it
        if let Some(v) = eval(&base.bu[first..first + span], base.sigma[first]) {
            out[base.start + centre] = v;
        }
    }
    out
}

/// Jump intensity series, indexed by the slice at which the level changes.
pub fn detect_jumps(u: &[f64], base: &Baseline, params: &JumpParams) -> Vec<f64> {
    scan(u.len(), base, params.window, |w, s| evaluate_jump(w, s, params))
}

/// Trend-change intensity series, indexed by the slice of the slope change.
pub fn detect_trend_changes(u: &[f64], base: &Baseline, params: &TrendParams) -> Vec<f64> {
    scan(u.len(), base, params.window, |w, s| evaluate_trend(w, s, params))
}

/// Clears trend changes with a jump at most `radius` slices away, and those
/// whose neighbourhood extends past the last slice where a jump can be tested.
///
/// A level step seen through a window that only partly covers it looks like a
/// slope change, so trend candidates around a jump are artifacts.
pub fn veto_trends_near_jumps(trend: &mut [f64], jumps: &[f64], base: &Baseline, radius: usize) {
    let last_testable = (base.len() >= 2 * radius + 2).then(|| base.start + base.len() - 1 - radius);
    for (t, v) in trend.iter_mut().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let checked = last_testable.is_some_and(|last| t + radius <= last);
        let lo = t.saturating_sub(radius);
        let hi = (t + radius).min(jumps.len() - 1);
        if !checked || jumps[lo..=hi].iter().any(|&j| j > 0.0) {
            *v = 0.0;
        }
    }
}
