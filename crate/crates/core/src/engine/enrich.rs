use std::collections::{HashMap, VecDeque};

use super::{Alignment, EngineConfig, Factor, FACTOR_COUNT};
use crate::detectors::{AnomalyKind, Detection, SeriesPipeline};
use crate::error::Result;
use crate::portfolio::{Descriptor, OrderId, RawSlice, DESCRIPTOR_COUNT};
use crate::scores::ScoreTracker;

/// One slice with all factors attached. Rows follow `orders`.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSlice {
    pub slice: u32,
    pub orders: Vec<OrderId>,
    pub factors: Vec<[f64; FACTOR_COUNT]>,
    /// Whether the order's rarity scores are available; score factors read
    /// 0 otherwise and must be ignored.
    pub scored: Vec<bool>,
    pub pe: Vec<f64>,
}

impl PortfolioSlice {
    pub fn active_count(&self) -> usize {
        self.orders.len()
    }

    pub fn available(&self, row: usize, factor: Factor) -> bool {
        !factor.is_score() || self.scored[row]
    }

    /// Values of one factor over the whole slice.
    pub fn column(&self, factor: usize) -> Vec<f64> {
        self.factors.iter().map(|row| row[factor]).collect()
    }
}

/// Detections of one series still inside the smoothing window.
#[derive(Debug, Clone, Default)]
struct Recent {
    // (slice the intensity is attached to, intensity)
    items: VecDeque<(u32, f64)>,
}

impl Recent {
    fn push(&mut self, slice: u32, v: f64) {
        self.items.push_back((slice, v));
    }

    fn max_since(&mut self, from: u32) -> f64 {
        while self.items.front().is_some_and(|&(s, _)| s < from) {
            self.items.pop_front();
        }
        self.items.iter().map(|&(_, v)| v).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
struct OrderState {
    trackers: Vec<ScoreTracker>,
    pipelines: Vec<SeriesPipeline>,
    recent: Vec<Recent>,
}

/// Streaming enrichment with causal alignment: the smoothed intensity at
/// `t` is the largest intensity confirmed during `[t - τ, t]`.
#[derive(Debug, Clone)]
pub struct Enricher {
    config: EngineConfig,
    orders: HashMap<OrderId, OrderState>,
}

impl Enricher {
    pub fn new(config: &EngineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Enricher {
            config: config.clone(),
            orders: HashMap::new(),
        })
    }

    fn state(&mut self, order: OrderId) -> Result<&mut OrderState> {
        if !self.orders.contains_key(&order) {
            let trackers = (0..DESCRIPTOR_COUNT)
                .map(|_| ScoreTracker::new(self.config.score_window, self.config.score_min_history))
                .collect::<Result<_>>()?;
            let pipelines = (0..DESCRIPTOR_COUNT)
                .map(|_| SeriesPipeline::new(self.config.detectors.clone()))
                .collect();
            let recent = vec![Recent::default(); FACTOR_COUNT - DESCRIPTOR_COUNT];
            self.orders.insert(
                order,
                OrderState {
                    trackers,
                    pipelines,
                    recent,
                },
            );
        }
        Ok(self.orders.get_mut(&order).expect("just inserted"))
    }

    /// Descriptor values and detections of one order at one slice.
    fn observe(&mut self, slice: u32, order: OrderId, raw: &[f64; DESCRIPTOR_COUNT]) -> Result<Observed> {
        let st = self.state(order)?;
        let mut values = [0.0; DESCRIPTOR_COUNT];
        let mut scored = true;
        for d in Descriptor::ALL {
            let i = d.index();
            if d.is_score() {
                match st.trackers[i].observe(raw[i])? {
                    Some(s) => values[i] = s,
                    None => scored = false,
                }
            } else {
                values[i] = raw[i];
            }
        }
        let mut detections = Vec::new();
        for d in Descriptor::ALL {
            let i = d.index();
            // a score series starts once its history is long enough
            if d.is_score() && !scored {
                continue;
            }
            for det in st.pipelines[i].push(slice, values[i]) {
                detections.push((d, det));
            }
        }
        Ok(Observed {
            values,
            scored,
            detections,
        })
    }

    pub fn push(&mut self, raw: &RawSlice) -> Result<PortfolioSlice> {
        let tau = u32::try_from(self.config.tau).unwrap_or(u32::MAX);
        let from = raw.slice.saturating_sub(tau);
        let mut out = PortfolioSlice {
            slice: raw.slice,
            orders: Vec::with_capacity(raw.records.len()),
            factors: Vec::with_capacity(raw.records.len()),
            scored: Vec::with_capacity(raw.records.len()),
            pe: Vec::with_capacity(raw.records.len()),
        };
        for rec in &raw.records {
            let obs = self.observe(raw.slice, rec.order, &rec.values)?;
            let st = self.orders.get_mut(&rec.order).expect("observed");
            for (d, det) in &obs.detections {
                let a = anomaly_slot(det.kind, *d);
                st.recent[a].push(det.confirm_slice, det.intensity);
            }
            let mut row = [0.0; FACTOR_COUNT];
            row[..DESCRIPTOR_COUNT].copy_from_slice(&obs.values);
            for (a, recent) in st.recent.iter_mut().enumerate() {
                row[DESCRIPTOR_COUNT + a] = recent.max_since(from);
            }
            out.orders.push(rec.order);
            out.factors.push(row);
            out.scored.push(obs.scored);
            out.pe.push(rec.pe);
        }
        Ok(out)
    }
}

struct Observed {
    values: [f64; DESCRIPTOR_COUNT],
    scored: bool,
    detections: Vec<(Descriptor, Detection)>,
}

fn anomaly_slot(kind: AnomalyKind, d: Descriptor) -> usize {
    Factor::Anomaly(kind, d).index() - DESCRIPTOR_COUNT
}

/// First slice, last slice, intensity.
type Span = (u32, u32, f64);

/// Enrichment of a whole portfolio. With offline alignment, intensities are
/// placed on the slices the anomaly spans, so a detection confirmed later
/// still counts at its own slices.
pub fn enrich(slices: &[RawSlice], config: &EngineConfig) -> Result<Vec<PortfolioSlice>> {
    let mut enricher = Enricher::new(config)?;
    if config.alignment == Alignment::Online {
        return slices.iter().map(|s| enricher.push(s)).collect();
    }

    let mut out = Vec::with_capacity(slices.len());
    // per (order, anomaly slot): detections as (first, last, intensity)
    let mut spans: HashMap<(OrderId, usize), Vec<Span>> = HashMap::new();
    for raw in slices {
        let mut ps = PortfolioSlice {
            slice: raw.slice,
            orders: Vec::new(),
            factors: Vec::new(),
            scored: Vec::new(),
            pe: Vec::new(),
        };
        for rec in &raw.records {
            let obs = enricher.observe(raw.slice, rec.order, &rec.values)?;
            for (d, det) in obs.detections {
                spans.entry((rec.order, anomaly_slot(det.kind, d))).or_default().push((
                    det.first_slice,
                    det.last_slice,
                    det.intensity,
                ));
            }
            let mut row = [0.0; FACTOR_COUNT];
            row[..DESCRIPTOR_COUNT].copy_from_slice(&obs.values);
            ps.orders.push(rec.order);
            ps.factors.push(row);
            ps.scored.push(obs.scored);
            ps.pe.push(rec.pe);
        }
        out.push(ps);
    }
    let tau = u32::try_from(config.tau).unwrap_or(u32::MAX);
    for ps in &mut out {
        let from = ps.slice.saturating_sub(tau);
        for (row, order) in ps.factors.iter_mut().zip(&ps.orders) {
            for a in 0..FACTOR_COUNT - DESCRIPTOR_COUNT {
                if let Some(list) = spans.get(&(*order, a)) {
                    row[DESCRIPTOR_COUNT + a] = list
                        .iter()
                        .filter(|&&(first, last, _)| first <= ps.slice && last >= from)
                        .map(|&(_, _, v)| v)
                        .fold(0.0, f64::max);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::portfolio::RawRecord;

    fn series(values: &[f64]) -> Vec<RawSlice> {
        values
            .iter()
            .enumerate()
            .map(|(t, &v)| RawSlice {
                slice: t as u32,
                records: vec![RawRecord {
                    order: OrderId(1),
                    values: [v, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
                    pe: 0.0,
                }],
            })
            .collect()
    }

    fn jittered(n: usize) -> Vec<f64> {
        (0..n).map(|i| if i % 2 == 0 { 0.5 } else { -0.5 }).collect()
    }

    #[test]
    fn constant_descriptors_give_zero_intensities() {
        let slices = series(&[3.0; 80]);
        let out = enrich(&slices, &EngineConfig::default()).unwrap();
        assert_eq!(out[0].factors[0].len(), 28);
        assert!(out
            .iter()
            .all(|s| s.factors[0][DESCRIPTOR_COUNT..].iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn offline_jump_spans_tau_slices() {
        let mut u = jittered(60);
        for v in &mut u[20..] {
            *v += 10.0;
        }
        let config = EngineConfig {
            alignment: Alignment::Offline,
            ..EngineConfig::default()
        };
        let out = enrich(&series(&u), &config).unwrap();
        let slot = Factor::Anomaly(AnomalyKind::Jump, Descriptor::Volatility).index();
        let nonzero: Vec<u32> = out
            .iter()
            .filter(|s| s.factors[0][slot] > 0.0)
            .map(|s| s.slice)
            .collect();
        assert_eq!(nonzero, vec![20, 21, 22, 23]);
    }

    #[test]
    fn online_jump_appears_at_confirmation() {
        let mut u = jittered(60);
        for v in &mut u[30..] {
            *v += 10.0;
        }
        let config = EngineConfig::default();
        let out = enrich(&series(&u), &config).unwrap();
        let slot = Factor::Anomaly(AnomalyKind::Jump, Descriptor::Volatility).index();
        let nonzero: Vec<u32> = out
            .iter()
            .filter(|s| s.factors[0][slot] > 0.0)
            .map(|s| s.slice)
            .collect();
        let delay = (config.detectors.baseline.median_half_width + config.detectors.jump.window) as u32;
        assert_eq!(nonzero, (30 + delay..=30 + delay + 3).collect::<Vec<_>>());
    }

    #[test]
    fn scores_wait_for_history() {
        let values: Vec<f64> = (0..40).map(f64::from).collect();
        let slices: Vec<RawSlice> = values
            .iter()
            .enumerate()
            .map(|(t, &v)| RawSlice {
                slice: t as u32,
                records: vec![RawRecord {
                    order: OrderId(1),
                    values: [1.0, 1.0, 1.0, 1.0, v, v, v],
                    pe: 0.0,
                }],
            })
            .collect();
        let out = enrich(&slices, &EngineConfig::default()).unwrap();
        assert!(out[..30].iter().all(|s| !s.scored[0]));
        assert!(out[30..].iter().all(|s| s.scored[0]));
        // a rising series is always above its history
        assert_eq!(out[35].factors[0][Descriptor::VolumeScore.index()], 1.0);
    }
}
