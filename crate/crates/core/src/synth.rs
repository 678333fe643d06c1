//! Seeded synthetic portfolios with planted anomalies and planted causes of
//! bad performance.
//!
//! A spec is a plain-text file of `key = value` settings and plant lines:
//!
//! ```text
//! # 700 orders over 79 slices
//! seed = 7
//! orders = 700
//! slices = 79
//! anomaly order=3 descriptor=volatility kind=jump slice=20 magnitude=10
//! dependence factor=volatility_score from=40 to=42 level=0.9
//! ```
//!
//! Settings: `seed`, `orders`, `slices`, `ar_coefficient` (0.5),
//! `noise_scale` (0.1, relative to each order's level), `late_start_fraction`
//! (0.1), `score_window` and `score_min_history` (must match the analysis).
//!
//! `anomaly` lines take `order`, `descriptor`, `kind` (`peak`, `jump` or
//! `trend`), `slice`, `magnitude` in noise standard deviations (slope per
//! slice for trends) and an optional `duration`. For score descriptors the
//! plant goes into the raw column.
//!
//! `dependence` lines take a descriptor `factor`, the inclusive slice range
//! `from`..`to`, the `level` the factor must exceed, and an optional
//! `max_share` of active orders allowed to exceed it. Inside the range every
//! order above the level gets a performance below all other orders; surplus
//! exceeders beyond `max_share` are pulled back under the level first.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::detectors::AnomalyKind;
use crate::error::{Error, Result};
use crate::portfolio::{Descriptor, OrderId, RawRecord, RawSlice, DESCRIPTOR_COUNT};
use crate::scores::{ScoreTracker, DEFAULT_MIN_HISTORY, DEFAULT_WINDOW};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyPlant {
    pub order: OrderId,
    pub descriptor: Descriptor,
    pub kind: AnomalyKind,
    pub slice: u32,
    pub magnitude: f64,
    pub duration: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencePlant {
    pub factor: Descriptor,
    pub from: u32,
    pub to: u32,
    pub level: f64,
    pub max_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub orders: u32,
    pub slices: u32,
    pub ar_coefficient: f64,
    pub noise_scale: f64,
    pub late_start_fraction: f64,
    pub score_window: usize,
    pub score_min_history: usize,
    pub anomalies: Vec<AnomalyPlant>,
    pub dependences: Vec<DependencePlant>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 0,
            orders: 100,
            slices: 79,
            ar_coefficient: 0.5,
            noise_scale: 0.1,
            late_start_fraction: 0.1,
            score_window: DEFAULT_WINDOW,
            score_min_history: DEFAULT_MIN_HISTORY,
            anomalies: Vec::new(),
            dependences: Vec::new(),
        }
    }
}

fn default_duration(kind: AnomalyKind) -> u32 {
    match kind {
        AnomalyKind::Peak => 1,
        AnomalyKind::Jump => 0,
        AnomalyKind::Trend => 12,
    }
}

fn parse_value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::Spec(format!("line {line}: bad value `{raw}` for `{key}`")))
}

impl FromStr for SyntheticSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut spec = SyntheticSpec::default();
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut words = content.split_whitespace();
            let head = words.next().unwrap_or_default();
            if head == "anomaly" || head == "dependence" {
                let mut fields = BTreeMap::new();
                for w in words {
                    let (k, v) = w
                        .split_once('=')
                        .ok_or_else(|| Error::Spec(format!("line {line}: expected key=value, got `{w}`")))?;
                    fields.insert(k, v);
                }
                let mut take = |key: &str| {
                    fields
                        .remove(key)
                        .ok_or_else(|| Error::Spec(format!("line {line}: missing `{key}`")))
                };
                if head == "anomaly" {
                    let kind: AnomalyKind = take("kind")?
                        .parse()
                        .map_err(|e: Error| Error::Spec(format!("line {line}: {e}")))?;
                    let plant = AnomalyPlant {
                        order: OrderId(parse_value(line, "order", take("order")?)?),
                        descriptor: take("descriptor")?
                            .parse()
                            .map_err(|e: Error| Error::Spec(format!("line {line}: {e}")))?,
                        kind,
                        slice: parse_value(line, "slice", take("slice")?)?,
                        magnitude: parse_value(line, "magnitude", take("magnitude")?)?,
                        duration: match fields.remove("duration") {
                            Some(v) => parse_value(line, "duration", v)?,
                            None => default_duration(kind),
                        },
                    };
                    spec.anomalies.push(plant);
                } else {
                    let plant = DependencePlant {
                        factor: take("factor")?
                            .parse()
                            .map_err(|e: Error| Error::Spec(format!("line {line}: {e}")))?,
                        from: parse_value(line, "from", take("from")?)?,
                        to: parse_value(line, "to", take("to")?)?,
                        level: parse_value(line, "level", take("level")?)?,
                        max_share: fields
                            .remove("max_share")
                            .map(|v| parse_value(line, "max_share", v))
                            .transpose()?,
                    };
                    spec.dependences.push(plant);
                }
                if let Some(k) = fields.keys().next() {
                    return Err(Error::Spec(format!("line {line}: unknown field `{k}`")));
                }
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Spec(format!("line {line}: expected `key = value`")))?;
            match key {
                "seed" => spec.seed = parse_value(line, key, value)?,
                "orders" => spec.orders = parse_value(line, key, value)?,
                "slices" => spec.slices = parse_value(line, key, value)?,
                "ar_coefficient" => spec.ar_coefficient = parse_value(line, key, value)?,
                "noise_scale" => spec.noise_scale = parse_value(line, key, value)?,
                "late_start_fraction" => spec.late_start_fraction = parse_value(line, key, value)?,
                "score_window" => spec.score_window = parse_value(line, key, value)?,
                "score_min_history" => spec.score_min_history = parse_value(line, key, value)?,
                other => return Err(Error::Spec(format!("line {line}: unknown setting `{other}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "orders = {}", self.orders)?;
        writeln!(f, "slices = {}", self.slices)?;
        writeln!(f, "ar_coefficient = {}", self.ar_coefficient)?;
        writeln!(f, "noise_scale = {}", self.noise_scale)?;
        writeln!(f, "late_start_fraction = {}", self.late_start_fraction)?;
        writeln!(f, "score_window = {}", self.score_window)?;
        writeln!(f, "score_min_history = {}", self.score_min_history)?;
        for a in &self.anomalies {
            writeln!(
                f,
                "anomaly order={} descriptor={} kind={} slice={} magnitude={} duration={}",
                a.order,
                a.descriptor,
                a.kind.name(),
                a.slice,
                a.magnitude,
                a.duration
            )?;
        }
        for d in &self.dependences {
            write!(
                f,
                "dependence factor={} from={} to={} level={}",
                d.factor, d.from, d.to, d.level
            )?;
            if let Some(s) = d.max_share {
                write!(f, " max_share={s}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            return bad(format!("ar_coefficient must be in [0, 1), got {}", self.ar_coefficient));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return bad(format!("noise_scale must be positive, got {}", self.noise_scale));
        }
        if !(0.0..=1.0).contains(&self.late_start_fraction) {
            return bad(format!(
                "late_start_fraction must be in [0, 1], got {}",
                self.late_start_fraction
            ));
        }
        if self.score_min_history == 0 || self.score_min_history > self.score_window {
            return bad("score_min_history must be in 1..=score_window".into());
        }
        for a in &self.anomalies {
            if a.order.0 == 0 || a.order.0 > self.orders {
                return bad(format!("anomaly order {} outside 1..={}", a.order, self.orders));
            }
            if a.slice >= self.slices {
                return bad(format!("anomaly slice {} outside 0..{}", a.slice, self.slices));
            }
            if !a.magnitude.is_finite() {
                return bad("anomaly magnitude must be finite".into());
            }
            if a.kind != AnomalyKind::Jump && a.duration == 0 {
                return bad("peak and trend plants need a positive duration".into());
            }
        }
        for d in &self.dependences {
            if d.from > d.to || d.to >= self.slices {
                return bad(format!(
                    "dependence range {}..={} outside 0..{}",
                    d.from, d.to, self.slices
                ));
            }
            if !d.level.is_finite() {
                return bad("dependence level must be finite".into());
            }
            if let Some(s) = d.max_share {
                if !(s > 0.0 && s <= 1.0) {
                    return bad(format!("max_share must be in (0, 1], got {s}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSlice {
    pub slice: u32,
    pub victims: Vec<OrderId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceRecord {
    pub factor: Descriptor,
    pub from: u32,
    pub to: u32,
    pub level: f64,
    pub slices: Vec<PlantedSlice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub orders: u32,
    pub slices: u32,
    pub anomalies: Vec<AnomalyPlant>,
    pub dependences: Vec<DependenceRecord>,
}

/// Per-order level and noise standard deviation of each raw column.
fn order_profile(rng: &mut ChaCha8Rng, noise_scale: f64) -> [(f64, f64); DESCRIPTOR_COUNT] {
    let vol = rng.random_range(10.0..40.0);
    let spread = rng.random_range(2.0..15.0);
    let volume = rng.random_range(100.0..1000.0);
    let mom_spread = rng.random_range(0.5..2.0);
    let mom_bp = rng.random_range(2.0..10.0);
    [
        (vol, noise_scale * vol),
        (spread, noise_scale * spread),
        (0.0, mom_spread),
        (0.0, mom_bp),
        (volume, noise_scale * volume),
        (vol, noise_scale * vol),
        (spread, noise_scale * spread),
    ]
}

/// Offset added by an anomaly plant `k` slices after its start.
fn plant_offset(p: &AnomalyPlant, k: u32, sd: f64) -> f64 {
    let m = p.magnitude * sd;
    match p.kind {
        AnomalyKind::Peak if k < p.duration => m,
        AnomalyKind::Peak => 0.0,
        AnomalyKind::Jump => m,
        AnomalyKind::Trend => {
            // tent: up for half the duration, back down for the rest
            let half = (p.duration / 2).max(1);
            if k <= half {
                m * f64::from(k)
            } else if k <= 2 * half {
                m * f64::from(2 * half - k)
            } else {
                0.0
            }
        }
    }
}

struct OrderState {
    id: OrderId,
    start: u32,
    profile: [(f64, f64); DESCRIPTOR_COUNT],
    noise: [f64; DESCRIPTOR_COUNT],
    trackers: Vec<ScoreTracker>,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Vec<RawSlice>, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phi = spec.ar_coefficient;
    let innovation = (1.0 - phi * phi).sqrt();

    let mut orders = Vec::with_capacity(spec.orders as usize);
    for k in 1..=spec.orders {
        let profile = order_profile(&mut rng, spec.noise_scale);
        let late = spec.slices > 1 && rng.random::<f64>() < spec.late_start_fraction;
        let start = if late {
            rng.random_range(1..spec.slices.div_ceil(2).max(2))
        } else {
            0
        };
        let mut noise = [0.0; DESCRIPTOR_COUNT];
        for n in &mut noise {
            *n = StandardNormal.sample(&mut rng);
        }
        let trackers = (0..DESCRIPTOR_COUNT)
            .map(|_| ScoreTracker::new(spec.score_window, spec.score_min_history))
            .collect::<Result<_>>()?;
        orders.push(OrderState {
            id: OrderId(k),
            start,
            profile,
            noise,
            trackers,
        });
    }

    let mut records_by_slice = Vec::with_capacity(spec.slices as usize);
    let mut planted: Vec<Vec<PlantedSlice>> = vec![Vec::new(); spec.dependences.len()];
    for t in 0..spec.slices {
        let mut records = Vec::new();
        for o in orders.iter_mut().filter(|o| o.start <= t) {
            let mut values = [0.0; DESCRIPTOR_COUNT];
            for (d, v) in values.iter_mut().enumerate() {
                if t > o.start {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    o.noise[d] = phi * o.noise[d] + innovation * e;
                }
                let (level, sd) = o.profile[d];
                *v = level + sd * o.noise[d];
            }
            // the score columns share the volatility and spread paths
            values[Descriptor::VolatilityScore.index()] = values[Descriptor::Volatility.index()];
            values[Descriptor::SpreadScore.index()] = values[Descriptor::Spread.index()];
            for p in spec.anomalies.iter().filter(|p| p.order == o.id && p.slice <= t) {
                let d = p.descriptor.index();
                values[d] += plant_offset(p, t - p.slice, o.profile[d].1);
            }
            let pe: f64 = StandardNormal.sample(&mut rng);
            records.push(RawRecord {
                order: o.id,
                values,
                pe,
            });
        }

        for (di, dep) in spec.dependences.iter().enumerate() {
            if !(dep.from..=dep.to).contains(&t) {
                continue;
            }
            let d = dep.factor.index();
            let factor_of = |o: &OrderState, x: f64| -> Option<f64> {
                if dep.factor.is_score() {
                    o.trackers[d].peek(x)
                } else {
                    Some(x)
                }
            };
            let active: Vec<usize> = orders
                .iter()
                .enumerate()
                .filter(|(_, o)| o.start <= t)
                .map(|(i, _)| i)
                .collect();
            let mut exceeders: Vec<usize> = (0..records.len())
                .filter(|&r| factor_of(&orders[active[r]], records[r].values[d]).is_some_and(|v| v > dep.level))
                .collect();
            if let Some(share) = dep.max_share {
                let cap = (share * records.len() as f64).floor() as usize;
                if exceeders.len() > cap {
                    exceeders.shuffle(&mut rng);
                    let surplus = exceeders.split_off(cap);
                    for r in surplus {
                        let o = &orders[active[r]];
                        let calm: Vec<f64> = o.trackers[d]
                            .state()
                            .window()
                            .filter(|&x| factor_of(o, x).is_some_and(|v| v <= dep.level))
                            .collect();
                        if calm.is_empty() {
                            exceeders.push(r);
                        } else {
                            let x = calm[rng.random_range(0..calm.len())];
                            records[r].values[d] = x;
                            if dep.factor == Descriptor::Volatility {
                                records[r].values[Descriptor::VolatilityScore.index()] = x;
                            } else if dep.factor == Descriptor::Spread {
                                records[r].values[Descriptor::SpreadScore.index()] = x;
                            }
                        }
                    }
                    exceeders.sort_unstable();
                }
            }
            let floor = (0..records.len())
                .filter(|r| exceeders.binary_search(r).is_err())
                .map(|r| records[r].pe)
                .fold(f64::INFINITY, f64::min);
            let floor = if floor.is_finite() { floor } else { 0.0 };
            for &r in &exceeders {
                let e: f64 = StandardNormal.sample(&mut rng);
                records[r].pe = floor - 1.0 - e.abs();
            }
            planted[di].push(PlantedSlice {
                slice: t,
                victims: exceeders.iter().map(|&r| records[r].order).collect(),
            });
        }

        let active: Vec<usize> = (0..orders.len()).filter(|&i| orders[i].start <= t).collect();
        for (r, &i) in active.iter().enumerate() {
            for d in 0..DESCRIPTOR_COUNT {
                orders[i].trackers[d].observe(records[r].values[d])?;
            }
        }
        records_by_slice.push(RawSlice { slice: t, records });
    }

    let truth = GroundTruth {
        seed: spec.seed,
        orders: spec.orders,
        slices: spec.slices,
        anomalies: spec.anomalies.clone(),
        dependences: spec
            .dependences
            .iter()
            .zip(planted)
            .map(|(d, slices)| DependenceRecord {
                factor: d.factor,
                from: d.from,
                to: d.to,
                level: d.level,
                slices,
            })
            .collect(),
    };
    Ok((records_by_slice, truth))
}
