use std::fmt;

use serde::{Deserialize, Serialize};

use super::TwoSidedPredictor;
use crate::error::{ensure_same_len, Result};
use crate::predictors::{ConfusionCounts, QualityFn};

/// Boolean combiners that agree with unanimous votes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    And,
    Or,
    First,
    Second,
}

impl Combiner {
    /// Also the tie-break order.
    pub const ALL: [Combiner; 4] = [Combiner::And, Combiner::Or, Combiner::First, Combiner::Second];

    #[inline]
    pub fn apply(self, f: bool, g: bool) -> bool {
        match self {
            Combiner::And => f && g,
            Combiner::Or => f || g,
            Combiner::First => f,
            Combiner::Second => g,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Combiner::And => "and",
            Combiner::Or => "or",
            Combiner::First => "first",
            Combiner::Second => "second",
        }
    }
}

impl fmt::Display for Combiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fusion {
    pub combiner: Combiner,
    pub power: f64,
    pub counts: ConfusionCounts,
}

/// Counts of `(f, g, y)` triples, indexed `[f][g][y]`.
pub type Tally = [[[usize; 2]; 2]; 2];

pub fn tally(f: &[bool], g: &[bool], y: &[bool]) -> Result<Tally> {
    ensure_same_len(f.len(), g.len())?;
    ensure_same_len(f.len(), y.len())?;
    let mut t = [[[0usize; 2]; 2]; 2];
    for ((&a, &b), &c) in f.iter().zip(g).zip(y) {
        t[usize::from(a)][usize::from(b)][usize::from(c)] += 1;
    }
    Ok(t)
}

/// Confusion counts of an arbitrary combiner over a tally.
pub fn combined_counts(t: &Tally, m: impl Fn(bool, bool) -> bool) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for (a, row) in t.iter().enumerate() {
        for (b, cell) in row.iter().enumerate() {
            if m(a == 1, b == 1) {
                c.n11 += cell[1];
                c.n10 += cell[0];
            } else {
                c.n01 += cell[1];
                c.n00 += cell[0];
            }
        }
    }
    c
}

pub fn fuse_tally(t: &Tally, qf: &QualityFn) -> Fusion {
    let mut best: Option<Fusion> = None;
    for combiner in Combiner::ALL {
        let counts = combined_counts(t, |a, b| combiner.apply(a, b));
        let power = qf.evaluate(&counts);
        if best.is_none_or(|b| power > b.power) {
            best = Some(Fusion {
                combiner,
                power,
                counts,
            });
        }
    }
    best.expect("four combiners")
}

pub fn fuse_pair(f: &[bool], g: &[bool], y: &[bool], qf: &QualityFn) -> Result<Fusion> {
    Ok(fuse_tally(&tally(f, g, y)?, qf))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairPredictor {
    pub f: TwoSidedPredictor,
    pub g: TwoSidedPredictor,
    pub combiner: Combiner,
    pub power: f64,
    pub p1: f64,
    pub p0: f64,
    pub counts: ConfusionCounts,
}

impl PairPredictor {
    pub fn new(f: TwoSidedPredictor, g: TwoSidedPredictor, fusion: Fusion) -> Self {
        PairPredictor {
            f,
            g,
            combiner: fusion.combiner,
            power: fusion.power,
            p1: fusion.counts.p1().unwrap_or(0.0),
            p0: fusion.counts.p0().unwrap_or(0.0),
            counts: fusion.counts,
        }
    }

    pub fn fires(&self, z1: f64, z2: f64) -> bool {
        self.combiner.apply(self.f.fires(z1), self.g.fires(z2))
    }
}
