//! Influence coefficients of single factors and factor pairs.

mod fusion;
mod level_set;
mod two_sided;

pub use fusion::{combined_counts, fuse_pair, fuse_tally, tally, Combiner, Fusion, PairPredictor, Tally};
pub use level_set::{discretize, fit_level_set, pair_cells, LevelSetPredictor, MAX_CELLS};
pub use two_sided::{binarize_factor, fit_two_sided, TwoSidedPredictor};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictors::QualityFn;

/// Influence estimate of a single factor: the fitted rule and its power.
pub fn influence_single(z: &[f64], y: &[bool], qf: &QualityFn, is_anomaly: bool) -> Result<(TwoSidedPredictor, f64)> {
    let p = fit_two_sided(z, y, qf, is_anomaly)?;
    Ok((p, p.power))
}

/// Predictor used as a pair component, or `None` when the factor fails the
/// admission floor `r_pre`.
///
/// Under the floor functional a single fit without power carries no
/// information about which rule to use, so the component is refitted with
/// the relaxed floor.
pub fn fit_component(
    z: &[f64],
    y: &[bool],
    qf: &QualityFn,
    is_anomaly: bool,
    r_pre: f64,
) -> Result<Option<TwoSidedPredictor>> {
    let single = fit_two_sided(z, y, qf, is_anomaly)?;
    admit(single, z, y, qf, is_anomaly, r_pre)
}

pub(crate) fn admit(
    single: TwoSidedPredictor,
    z: &[f64],
    y: &[bool],
    qf: &QualityFn,
    is_anomaly: bool,
    r_pre: f64,
) -> Result<Option<TwoSidedPredictor>> {
    let component = match qf {
        QualityFn::FloorPower(_) if single.power <= 0.0 => fit_two_sided(z, y, &qf.with_floor(r_pre), is_anomaly)?,
        _ => single,
    };
    Ok(component.counts.clears_floor(r_pre).then_some(component))
}

/// Pair influence, `None` when a component is not admitted.
pub fn influence_pair(
    z1: (&[f64], bool),
    z2: (&[f64], bool),
    y: &[bool],
    qf: &QualityFn,
    r_pre: f64,
) -> Result<Option<(PairPredictor, f64)>> {
    let (Some(f), Some(g)) = (
        fit_component(z1.0, y, qf, z1.1, r_pre)?,
        fit_component(z2.0, y, qf, z2.1, r_pre)?,
    ) else {
        return Ok(None);
    };
    let fusion = fuse_pair(&binarize_factor(&f, z1.0), &binarize_factor(&g, z2.0), y, qf)?;
    let p = PairPredictor::new(f, g, fusion);
    Ok(Some((p, p.power)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupFit {
    Single(TwoSidedPredictor),
    Pair(PairPredictor),
    /// A pair whose components were not admitted.
    Skipped,
}

impl GroupFit {
    pub fn power(&self) -> f64 {
        match self {
            GroupFit::Single(p) => p.power,
            GroupFit::Pair(p) => p.power,
            GroupFit::Skipped => 0.0,
        }
    }
}

/// Influence of a group of one or two `(values, is_anomaly)` factors.
/// Larger groups are rejected: with a few dozen bad orders per slice the
/// estimate would not generalize.
pub fn influence_group(factors: &[(&[f64], bool)], y: &[bool], qf: &QualityFn, r_pre: f64) -> Result<GroupFit> {
    match factors {
        [] => Err(Error::Domain("empty factor group".into())),
        [(z, anomaly)] => Ok(GroupFit::Single(fit_two_sided(z, y, qf, *anomaly)?)),
        [a, b] => Ok(match influence_pair(*a, *b, y, qf, r_pre)? {
            Some((p, _)) => GroupFit::Pair(p),
            None => GroupFit::Skipped,
        }),
        more => Err(Error::GroupTooLarge(more.len())),
    }
}

/// Thresholds as JSON numbers, with `"-inf"` and `"+inf"` for the sentinels.
pub(crate) mod threshold {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("+inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    struct ThresholdVisitor;

    impl Visitor<'_> for ThresholdVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a number, \"-inf\" or \"+inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ThresholdVisitor)
    }
}
