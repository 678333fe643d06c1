//! Performance binarization, confusion tables and predictive-power functionals.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Error, Result};

/// Binarized performance of one slice: `y[k]` is true ("bad") iff
/// `pe[k] < threshold`, the threshold being the nearest-rank `q`-quantile.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarizedSlice {
    pub threshold: f64,
    pub y: Vec<bool>,
    /// No order is tagged bad.
    pub degenerate: bool,
}

impl BinarizedSlice {
    pub fn bad_count(&self) -> usize {
        self.y.iter().filter(|&&b| b).count()
    }
}

/// Tags orders whose PE lies strictly below the `⌈q K⌉`-th smallest PE.
pub fn binarize(pe: &[f64], q: f64) -> Result<BinarizedSlice> {
    if pe.is_empty() {
        return Err(Error::Domain("cannot binarize an empty slice".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("quantile fraction must be in (0, 1), got {q}")));
    }
    if let Some(bad) = pe.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite performance value {bad}")));
    }
    // the small slack keeps e.g. 0.03 * 700 from rounding up to 22
    let rank = ((q * pe.len() as f64 - 1e-9).ceil() as usize).clamp(1, pe.len());
    let mut sorted = pe.to_vec();
    let (_, nth, _) = sorted.select_nth_unstable_by(rank - 1, f64::total_cmp);
    let threshold = *nth;
    let y: Vec<bool> = pe.iter().map(|&v| v < threshold).collect();
    let degenerate = !y.iter().any(|&b| b);
    Ok(BinarizedSlice {
        threshold,
        y,
        degenerate,
    })
}

/// 2×2 table of prediction (first digit) against truth (second digit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub n11: usize,
    pub n10: usize,
    pub n01: usize,
    pub n00: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    pub fn positives(&self) -> usize {
        self.n11 + self.n01
    }

    pub fn negatives(&self) -> usize {
        self.n10 + self.n00
    }

    /// `P(ŷ = 1 | y = 1)`, undefined without any bad order.
    pub fn p1(&self) -> Option<f64> {
        (self.positives() > 0).then(|| self.n11 as f64 / self.positives() as f64)
    }

    /// `P(ŷ = 0 | y = 0)`, undefined without any normal order.
    pub fn p0(&self) -> Option<f64> {
        (self.negatives() > 0).then(|| self.n00 as f64 / self.negatives() as f64)
    }

    /// Empirical `P(y = 1)`.
    pub fn mu1(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.positives() as f64 / self.total() as f64
        }
    }

    /// `P(ŷ = 1, y = 1)`.
    pub fn joint_p1(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.n11 as f64 / self.total() as f64
        }
    }

    /// `P(ŷ = 0, y = 0)`.
    pub fn joint_p0(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.n00 as f64 / self.total() as f64
        }
    }

    pub fn is_defined(&self) -> bool {
        self.positives() > 0 && self.negatives() > 0
    }

    /// Both conditional rates reach `floor`.
    pub fn clears_floor(&self, floor: f64) -> bool {
        match (self.p1(), self.p0()) {
            (Some(p1), Some(p0)) => p1.min(p0) >= floor,
            _ => false,
        }
    }

    pub(crate) fn from_fired(fired_pos: usize, fired_neg: usize, pos: usize, neg: usize) -> Self {
        ConfusionCounts {
            n11: fired_pos,
            n10: fired_neg,
            n01: pos - fired_pos,
            n00: neg - fired_neg,
        }
    }
}

pub fn confusion(yhat: &[bool], y: &[bool]) -> Result<ConfusionCounts> {
    ensure_same_len(yhat.len(), y.len())?;
    if y.is_empty() {
        return Err(Error::Domain("empty prediction".into()));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in yhat.iter().zip(y) {
        match (p, t) {
            (true, true) => c.n11 += 1,
            (true, false) => c.n10 += 1,
            (false, true) => c.n01 += 1,
            (false, false) => c.n00 += 1,
        }
    }
    Ok(c)
}

/// Predictor quality function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum QualityFn {
    /// `p¹` when `min(p¹, p⁰) ≥ r`, else 0.
    FloorPower(f64),
    /// `min(P¹, P⁰)` over joint probabilities.
    MinPower,
    /// `u P¹ + (1 - u) P⁰` over joint probabilities.
    Weighted(f64),
}

impl QualityFn {
    pub fn validate(&self) -> Result<()> {
        match *self {
            QualityFn::FloorPower(r) if !(0.70..=1.0).contains(&r) => {
                Err(Error::Config(format!("floor power r must be in [0.70, 1.00], got {r}")))
            }
            QualityFn::Weighted(u) if !(u > 0.0 && u < 1.0) => {
                Err(Error::Config(format!("weight u must be in (0, 1), got {u}")))
            }
            _ => Ok(()),
        }
    }

    /// The same functional with its floor replaced, for floor variants.
    pub fn with_floor(self, floor: f64) -> QualityFn {
        match self {
            QualityFn::FloorPower(_) => QualityFn::FloorPower(floor),
            other => other,
        }
    }

    pub fn evaluate(&self, c: &ConfusionCounts) -> f64 {
        let (Some(p1), Some(p0)) = (c.p1(), c.p0()) else {
            return 0.0;
        };
        match *self {
            QualityFn::FloorPower(r) => {
                if p1.min(p0) >= r {
                    p1
                } else {
                    0.0
                }
            }
            QualityFn::MinPower => c.joint_p1().min(c.joint_p0()),
            QualityFn::Weighted(u) => u * c.joint_p1() + (1.0 - u) * c.joint_p0(),
        }
    }
}

pub fn quality(qf: &QualityFn, c: &ConfusionCounts) -> f64 {
    qf.evaluate(c)
}

fn entropy(probabilities: &[f64]) -> f64 {
    probabilities.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum()
}

/// Mutual information ratio of a joint 2×2 distribution indexed
/// `[prediction][truth]`.
pub fn mir_from_joint(joint: [[f64; 2]; 2]) -> Result<f64> {
    let total: f64 = joint.iter().flatten().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("empty joint table".into()));
    }
    let p = joint.map(|row| row.map(|v| v / total));
    let z = [p[0][0] + p[0][1], p[1][0] + p[1][1]];
    let y = [p[0][0] + p[1][0], p[0][1] + p[1][1]];
    let h_y = entropy(&y);
    if h_y <= 0.0 {
        return Err(Error::Undefined(
            "mutual information ratio needs a non-deterministic target",
        ));
    }
    let h_z = entropy(&z);
    let h_zy = entropy(&[p[0][0], p[0][1], p[1][0], p[1][1]]);
    Ok(((h_z + h_y - h_zy) / h_y).clamp(0.0, 1.0))
}

/// MIR from the conditional rates and the base rate `μ¹ = P(y = 1)`.
pub fn mir_from_rates(p1: f64, p0: f64, mu1: f64) -> Result<f64> {
    let mu0 = 1.0 - mu1;
    mir_from_joint([[mu0 * p0, mu1 * (1.0 - p1)], [mu0 * (1.0 - p0), mu1 * p1]])
}

pub fn mir(yhat: &[bool], y: &[bool]) -> Result<f64> {
    let c = confusion(yhat, y)?;
    mir_from_joint([[c.n00 as f64, c.n01 as f64], [c.n10 as f64, c.n11 as f64]])
}
