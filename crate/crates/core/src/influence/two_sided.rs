use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Result};
use crate::predictors::{ConfusionCounts, QualityFn};

/// Alarm rule firing iff `z < θ⁻` or `z > θ⁺`.
///
/// The fitted normal region `[θ⁻, θ⁺]` is never empty except for the
/// always-firing rule, which is stored as `θ⁻ = θ⁺ = +∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedPredictor {
    #[serde(with = "super::threshold")]
    pub theta_minus: f64,
    #[serde(with = "super::threshold")]
    pub theta_plus: f64,
    pub power: f64,
    /// Zero when undefined.
    pub p1: f64,
    /// Zero when undefined.
    pub p0: f64,
    pub counts: ConfusionCounts,
}

impl TwoSidedPredictor {
    #[inline]
    pub fn fires(&self, z: f64) -> bool {
        z < self.theta_minus || z > self.theta_plus
    }

    pub fn far(&self) -> f64 {
        1.0 - self.p0
    }

    pub(crate) fn from_counts(theta_minus: f64, theta_plus: f64, counts: ConfusionCounts, qf: &QualityFn) -> Self {
        TwoSidedPredictor {
            theta_minus,
            theta_plus,
            power: qf.evaluate(&counts),
            p1: counts.p1().unwrap_or(0.0),
            p0: counts.p0().unwrap_or(0.0),
            counts,
        }
    }

    fn never_fires(z: &[f64], y: &[bool], qf: &QualityFn) -> Self {
        let pos = y.iter().filter(|&&b| b).count();
        let counts = ConfusionCounts::from_fired(0, 0, pos, z.len() - pos);
        TwoSidedPredictor {
            power: 0.0,
            ..Self::from_counts(f64::NEG_INFINITY, f64::INFINITY, counts, qf)
        }
    }
}

pub fn binarize_factor(pred: &TwoSidedPredictor, z: &[f64]) -> Vec<bool> {
    z.iter().map(|&v| pred.fires(v)).collect()
}

/// Preference key among equally powerful candidates: higher `p⁰`, then the
/// wider normal region (number of unbounded ends, then finite span).
#[derive(Debug, Clone, Copy)]
struct Candidate {
    power: f64,
    p0: f64,
    ends: u8,
    span: f64,
    lo: usize,
    hi: usize,
    counts: ConfusionCounts,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        if self.power != other.power {
            return self.power > other.power;
        }
        if self.p0 != other.p0 {
            return self.p0 > other.p0;
        }
        if self.ends != other.ends {
            return self.ends > other.ends;
        }
        self.span > other.span
    }
}

/// Exhaustive threshold search.
///
/// Every threshold pair drawn from the observed values and `±∞` yields a
/// normal region covering a contiguous run of the sorted distinct values (or
/// nothing), so the search enumerates those runs with prefix counts. With
/// `pin_lower`, `θ⁻ = 0` and only `θ⁺` is searched.
pub fn fit_two_sided(z: &[f64], y: &[bool], qf: &QualityFn, pin_lower: bool) -> Result<TwoSidedPredictor> {
    ensure_same_len(z.len(), y.len())?;
    let pos_total = y.iter().filter(|&&b| b).count();
    let neg_total = z.len() - pos_total;
    if z.len() < 2 || pos_total == 0 {
        return Ok(TwoSidedPredictor::never_fires(z, y, qf));
    }

    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_unstable_by(|&a, &b| z[a].total_cmp(&z[b]));
    let mut values: Vec<f64> = Vec::new();
    // prefix counts of bad / normal orders over the distinct values
    let mut pos_prefix = vec![0usize];
    let mut neg_prefix = vec![0usize];
    for &k in &order {
        if values.last() != Some(&z[k]) {
            values.push(z[k]);
            pos_prefix.push(*pos_prefix.last().unwrap());
            neg_prefix.push(*neg_prefix.last().unwrap());
        }
        let last = pos_prefix.len() - 1;
        if y[k] {
            pos_prefix[last] += 1;
        } else {
            neg_prefix[last] += 1;
        }
    }
    let m = values.len();
    if m < 2 {
        return Ok(TwoSidedPredictor::never_fires(z, y, qf));
    }

    let candidate = |lo: usize, hi: usize| -> Candidate {
        let quiet_pos = pos_prefix[hi + 1] - pos_prefix[lo];
        let quiet_neg = neg_prefix[hi + 1] - neg_prefix[lo];
        let counts = ConfusionCounts::from_fired(pos_total - quiet_pos, neg_total - quiet_neg, pos_total, neg_total);
        Candidate {
            power: qf.evaluate(&counts),
            p0: counts.p0().unwrap_or(0.0),
            ends: u8::from(lo == 0 && !pin_lower) + u8::from(hi == m - 1),
            span: values[hi] - if pin_lower { 0.0 } else { values[lo] },
            lo,
            hi,
            counts,
        }
    };
    let always = {
        let counts = ConfusionCounts::from_fired(pos_total, neg_total, pos_total, neg_total);
        Candidate {
            power: qf.evaluate(&counts),
            p0: counts.p0().unwrap_or(0.0),
            ends: 0,
            span: -1.0,
            lo: m,
            hi: m,
            counts,
        }
    };

    let lows = if pin_lower {
        let first = values.partition_point(|&v| v < 0.0);
        first..(first + 1).min(m)
    } else {
        0..m
    };
    // with θ⁻ = 0 every rule spares the values in [0, θ⁺], unless none exist
    let mut best = if lows.is_empty() || !pin_lower {
        Some(always)
    } else {
        None
    };
    for lo in lows {
        for hi in lo..m {
            let c = candidate(lo, hi);
            if best.as_ref().is_none_or(|b| c.beats(b)) {
                best = Some(c);
            }
        }
    }
    let best = best.expect("at least one candidate");

    let (theta_minus, theta_plus) = if best.lo == m {
        (f64::INFINITY, f64::INFINITY)
    } else {
        let lower = if pin_lower {
            0.0
        } else if best.lo == 0 {
            f64::NEG_INFINITY
        } else {
            values[best.lo]
        };
        let upper = if best.hi == m - 1 {
            f64::INFINITY
        } else {
            values[best.hi]
        };
        (lower, upper)
    };
    Ok(TwoSidedPredictor::from_counts(theta_minus, theta_plus, best.counts, qf))
}
