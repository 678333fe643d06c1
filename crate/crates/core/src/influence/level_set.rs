use serde::{Deserialize, Serialize};

use crate::error::{ensure_same_len, Error, Result};
use crate::predictors::{ConfusionCounts, QualityFn};

/// Largest supported number of cells.
pub const MAX_CELLS: usize = 8;

/// Predictor firing on the cells whose estimate `v̂` reaches `c*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetPredictor {
    /// Empirical `P(Z = cell, Y = 1)` per cell.
    pub vhat: Vec<f64>,
    /// `None` when every cell has `v̂ = 0`.
    pub c_star: Option<f64>,
    pub firing: Vec<bool>,
    pub power: f64,
    pub counts: ConfusionCounts,
}

impl LevelSetPredictor {
    pub fn fires(&self, cell: u8) -> bool {
        self.firing.get(usize::from(cell)).copied().unwrap_or(false)
    }
}

/// Quantile binning into `cells` groups of roughly equal size; ties share
/// a cell.
pub fn discretize(z: &[f64], cells: usize) -> Result<Vec<u8>> {
    if cells == 0 || cells > MAX_CELLS {
        return Err(Error::Domain(format!(
            "cell count must be in 1..={MAX_CELLS}, got {cells}"
        )));
    }
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]));
    let mut out = vec![0u8; z.len()];
    let mut cell = 0usize;
    for (rank, &k) in order.iter().enumerate() {
        let target = rank * cells / z.len().max(1);
        let tied = rank > 0 && z[order[rank - 1]] == z[k];
        if !tied {
            cell = target;
        }
        out[k] = cell as u8;
    }
    Ok(out)
}

/// Joint cell of two bits, `2 f + g`.
pub fn pair_cells(f: &[bool], g: &[bool]) -> Result<Vec<u8>> {
    ensure_same_len(f.len(), g.len())?;
    Ok(f.iter().zip(g).map(|(&a, &b)| 2 * u8::from(a) + u8::from(b)).collect())
}

/// Threshold search over the upper level sets of `v̂`. Ties go to the
/// largest threshold.
pub fn fit_level_set(cells: &[u8], y: &[bool], qf: &QualityFn) -> Result<LevelSetPredictor> {
    ensure_same_len(cells.len(), y.len())?;
    if cells.is_empty() {
        return Err(Error::Domain("level-set fit on an empty slice".into()));
    }
    if let Some(&c) = cells.iter().find(|&&c| usize::from(c) >= MAX_CELLS) {
        return Err(Error::Domain(format!("cell id {c} exceeds the {MAX_CELLS}-cell limit")));
    }
    let s = usize::from(*cells.iter().max().unwrap()) + 1;
    let mut bad = vec![0usize; s];
    let mut good = vec![0usize; s];
    for (&c, &b) in cells.iter().zip(y) {
        if b {
            bad[usize::from(c)] += 1;
        } else {
            good[usize::from(c)] += 1;
        }
    }
    let k = cells.len() as f64;
    let vhat: Vec<f64> = bad.iter().map(|&n| n as f64 / k).collect();
    let pos: usize = bad.iter().sum();
    let neg: usize = good.iter().sum();

    let mut thresholds: Vec<f64> = vhat.iter().copied().filter(|&v| v > 0.0).collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();

    let mut best: Option<(f64, f64, Vec<bool>, ConfusionCounts)> = None;
    for &c in &thresholds {
        let firing: Vec<bool> = vhat.iter().map(|&v| v >= c).collect();
        let (fp, fn_) = firing
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .fold((0, 0), |(a, b), (i, _)| (a + bad[i], b + good[i]));
        let counts = ConfusionCounts::from_fired(fp, fn_, pos, neg);
        let power = qf.evaluate(&counts);
        if best.as_ref().is_none_or(|b| power > b.1) {
            best = Some((c, power, firing, counts));
        }
    }
    Ok(match best {
        Some((c, power, firing, counts)) => LevelSetPredictor {
            vhat,
            c_star: Some(c),
            firing,
            power,
            counts,
        },
        None => LevelSetPredictor {
            firing: vec![false; s],
            vhat,
            c_star: None,
            power: 0.0,
            counts: ConfusionCounts::from_fired(0, 0, pos, neg),
        },
    })
}
