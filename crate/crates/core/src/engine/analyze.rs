use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EngineConfig, FactorSet, PortfolioSlice};
use crate::error::Result;
use crate::influence::{admit, fit_two_sided, fuse_tally, GroupFit, PairPredictor, TwoSidedPredictor};
use crate::portfolio::OrderId;
use crate::predictors::binarize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub group: String,
    pub factors: Vec<String>,
    pub influence: f64,
    pub p1: f64,
    pub p0: f64,
    pub far: f64,
    pub retained: bool,
    pub fit: GroupFit,
}

/// Gate of one factor: orders outside `[θ⁻, θ⁺]` are flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmZone {
    pub slice: u32,
    pub factor: String,
    #[serde(with = "crate::influence::threshold")]
    pub theta_minus: f64,
    #[serde(with = "crate::influence::threshold")]
    pub theta_plus: f64,
    pub triggered: Vec<OrderId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub slice: u32,
    pub active_orders: usize,
    /// Why the slice was not analyzed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub threshold: Option<f64>,
    pub bad_orders: usize,
    pub pairs_evaluated: usize,
    pub max_influence: f64,
    pub retained: Vec<String>,
    pub dominating: Vec<String>,
    pub groups: Vec<GroupEntry>,
    pub alarm_zones: Vec<AlarmZone>,
}

impl SliceReport {
    fn stub(slice: &PortfolioSlice, reason: String, threshold: Option<f64>) -> Self {
        SliceReport {
            slice: slice.slice,
            active_orders: slice.active_count(),
            skipped: Some(reason),
            threshold,
            bad_orders: 0,
            pairs_evaluated: 0,
            max_influence: 0.0,
            retained: Vec::new(),
            dominating: Vec::new(),
            groups: Vec::new(),
            alarm_zones: Vec::new(),
        }
    }

    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }

    /// Influence of every group in catalogue order; `None` for skipped slices.
    pub fn influences(&self) -> Option<Vec<f64>> {
        (!self.is_skipped()).then(|| self.groups.iter().map(|g| g.influence).collect())
    }
}

/// Rows on which a factor is observed, with its values there.
struct Column {
    rows: Vec<usize>,
    values: Vec<f64>,
}

struct SingleFit {
    fit: TwoSidedPredictor,
    component: Option<TwoSidedPredictor>,
}

fn map_maybe_parallel<T, R, F>(items: &[T], parallel: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

pub fn analyze_slice(slice: &PortfolioSlice, config: &EngineConfig) -> Result<SliceReport> {
    analyze_with(slice, config, &FactorSet::new())
}

pub(crate) fn analyze_with(slice: &PortfolioSlice, config: &EngineConfig, set: &FactorSet) -> Result<SliceReport> {
    let k = slice.active_count();
    if k < config.min_orders {
        return Ok(SliceReport::stub(
            slice,
            format!("{k} active orders, fewer than the minimum {}", config.min_orders),
            None,
        ));
    }
    let bin = binarize(&slice.pe, config.q)?;
    if bin.degenerate {
        return Ok(SliceReport::stub(
            slice,
            "no order below the performance quantile".into(),
            Some(bin.threshold),
        ));
    }
    let y = &bin.y;
    let qf = config.quality_fn();
    let r_pre = config.prefilter_floor();

    let columns: Vec<Column> = set
        .factors()
        .iter()
        .map(|&f| {
            let rows: Vec<usize> = (0..k).filter(|&row| slice.available(row, f)).collect();
            let values = rows.iter().map(|&row| slice.factors[row][f.index()]).collect();
            Column { rows, values }
        })
        .collect();

    let indices: Vec<usize> = (0..set.factors().len()).collect();
    let singles: Vec<Result<SingleFit>> = map_maybe_parallel(&indices, config.parallel, |&i| {
        let f = set.factors()[i];
        let col = &columns[i];
        let ys: Vec<bool> = col.rows.iter().map(|&row| y[row]).collect();
        let fit = fit_two_sided(&col.values, &ys, &qf, f.is_anomaly())?;
        let component = if config.pairs_enabled {
            admit(fit, &col.values, &ys, &qf, f.is_anomaly(), r_pre)?
        } else {
            None
        };
        Ok(SingleFit { fit, component })
    });
    let singles: Vec<SingleFit> = singles.into_iter().collect::<Result<_>>()?;

    // firing bit per slice row for admitted components; None where unobserved
    let bits: Vec<Option<Vec<Option<bool>>>> = singles
        .iter()
        .zip(&columns)
        .map(|(s, col)| {
            s.component.map(|c| {
                let mut b = vec![None; k];
                for (&row, &v) in col.rows.iter().zip(&col.values) {
                    b[row] = Some(c.fires(v));
                }
                b
            })
        })
        .collect();

    let pair_fits: Vec<Option<PairPredictor>> = if config.pairs_enabled {
        map_maybe_parallel(set.pairs(), config.parallel, |&(i, j)| {
            let (Some(fb), Some(gb)) = (&bits[i], &bits[j]) else {
                return None;
            };
            let mut t = [[[0usize; 2]; 2]; 2];
            for row in 0..k {
                if let (Some(a), Some(b)) = (fb[row], gb[row]) {
                    t[usize::from(a)][usize::from(b)][usize::from(y[row])] += 1;
                }
            }
            let fusion = fuse_tally(&t, &qf);
            Some(PairPredictor::new(
                singles[i].component.expect("admitted"),
                singles[j].component.expect("admitted"),
                fusion,
            ))
        })
    } else {
        vec![None; set.pairs().len()]
    };

    let mut groups = Vec::with_capacity(set.group_count());
    for (i, s) in singles.iter().enumerate() {
        let c = &s.fit.counts;
        groups.push(GroupEntry {
            group: set.factors()[i].name(),
            factors: vec![set.factors()[i].name()],
            influence: s.fit.power,
            p1: s.fit.p1,
            p0: s.fit.p0,
            far: s.fit.far(),
            retained: c.clears_floor(config.r),
            fit: GroupFit::Single(s.fit),
        });
    }
    for (&(i, j), p) in set.pairs().iter().zip(&pair_fits) {
        let factors = vec![set.factors()[i].name(), set.factors()[j].name()];
        let group = factors.join("+");
        groups.push(match p {
            Some(p) => GroupEntry {
                group,
                factors,
                influence: p.power,
                p1: p.p1,
                p0: p.p0,
                far: 1.0 - p.p0,
                retained: p.counts.clears_floor(config.r),
                fit: GroupFit::Pair(*p),
            },
            None => GroupEntry {
                group,
                factors,
                influence: 0.0,
                p1: 0.0,
                p0: 0.0,
                far: 1.0,
                retained: false,
                fit: GroupFit::Skipped,
            },
        });
    }

    let retained: Vec<&GroupEntry> = groups.iter().filter(|g| g.retained).collect();
    let max_influence = retained.iter().map(|g| g.influence).fold(0.0, f64::max);
    let min_far = retained
        .iter()
        .filter(|g| g.influence == max_influence)
        .map(|g| g.far)
        .fold(f64::INFINITY, f64::min);
    let dominating: Vec<String> = retained
        .iter()
        .filter(|g| g.influence == max_influence && g.far == min_far)
        .map(|g| g.group.clone())
        .collect();

    let mut gates: Vec<(usize, TwoSidedPredictor)> = Vec::new();
    for (i, s) in singles.iter().enumerate() {
        if groups[i].retained {
            gates.push((i, s.fit));
        }
    }
    for ((&(i, j), p), g) in set.pairs().iter().zip(&pair_fits).zip(&groups[set.factors().len()..]) {
        if let (true, Some(p)) = (g.retained, p) {
            gates.push((i, p.f));
            gates.push((j, p.g));
        }
    }
    gates.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.theta_minus.total_cmp(&b.1.theta_minus))
            .then(a.1.theta_plus.total_cmp(&b.1.theta_plus))
    });
    gates.dedup_by(|a, b| a.0 == b.0 && a.1.theta_minus == b.1.theta_minus && a.1.theta_plus == b.1.theta_plus);
    let alarm_zones = gates
        .into_iter()
        .map(|(i, p)| {
            let col = &columns[i];
            AlarmZone {
                slice: slice.slice,
                factor: set.factors()[i].name(),
                theta_minus: p.theta_minus,
                theta_plus: p.theta_plus,
                triggered: col
                    .rows
                    .iter()
                    .zip(&col.values)
                    .filter(|(_, &v)| p.fires(v))
                    .map(|(&row, _)| slice.orders[row])
                    .collect(),
            }
        })
        .collect();

    Ok(SliceReport {
        slice: slice.slice,
        active_orders: k,
        skipped: None,
        threshold: Some(bin.threshold),
        bad_orders: bin.bad_count(),
        pairs_evaluated: pair_fits.iter().filter(|p| p.is_some()).count(),
        max_influence,
        retained: retained.iter().map(|g| g.group.clone()).collect(),
        dominating,
        groups,
        alarm_zones,
    })
}
