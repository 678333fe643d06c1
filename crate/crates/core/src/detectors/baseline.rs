use std::collections::VecDeque;

use super::BaselineParams;

/// MAD-to-standard-deviation factor for Gaussian noise.
const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselinePoint {
    /// Sample index within the series.
    pub index: usize,
    pub slice: u32,
    pub u: f64,
    pub bu: f64,
    pub sigma: f64,
}

/// Streaming baseline: emits the point for sample `i - w_b` once sample `i`
/// arrives.
///
/// The noise scale is the MAD of the last `w_σ` first differences, divided by
/// √2. Residuals against the median would vanish on steep ramps, where the
/// median follows the series exactly, and swell next to steps.
#[derive(Debug, Clone)]
pub struct BaselineState {
    params: BaselineParams,
    recent: VecDeque<(u32, f64)>,
    diffs: VecDeque<f64>,
    seen: usize,
    scratch: Vec<f64>,
}

impl BaselineState {
    pub fn new(params: BaselineParams) -> Self {
        BaselineState {
            recent: VecDeque::new(),
            diffs: VecDeque::new(),
            seen: 0,
            scratch: Vec::new(),
            params,
        }
    }

    pub fn params(&self) -> &BaselineParams {
        &self.params
    }

    /// Differences needed for a noise scale: as many as the median window
    /// spans, so both come out together.
    fn min_diffs(&self) -> usize {
        self.params.noise_window.min(2 * self.params.median_half_width)
    }

    /// Samples needed before the first point comes out.
    pub fn warm_up(&self) -> usize {
        (2 * self.params.median_half_width + 1).max(self.min_diffs() + 1)
    }

    pub fn push(&mut self, slice: u32, u: f64) -> Option<BaselinePoint> {
        let width = 2 * self.params.median_half_width + 1;
        if let Some(&(_, prev)) = self.recent.back() {
            if self.diffs.len() == self.params.noise_window {
                self.diffs.pop_front();
            }
            self.diffs.push_back((u - prev) / std::f64::consts::SQRT_2);
        }
        if self.recent.len() == width {
            self.recent.pop_front();
        }
        self.recent.push_back((slice, u));
        self.seen += 1;
        if self.recent.len() < width || self.diffs.len() < self.min_diffs() {
            return None;
        }

        self.scratch.clear();
        self.scratch.extend(self.recent.iter().map(|&(_, v)| v));
        let bu = median(&mut self.scratch);
        let (center_slice, center_u) = self.recent[self.params.median_half_width];

        self.scratch.clear();
        self.scratch.extend(self.diffs.iter().copied());
        let center = median(&mut self.scratch);
        for r in self.scratch.iter_mut() {
            *r = (*r - center).abs();
        }
        let mad = median(&mut self.scratch);
        let sigma = (MAD_SCALE * mad).max(self.params.sigma_floor);

        Some(BaselinePoint {
            index: self.seen - 1 - self.params.median_half_width,
            slice: center_slice,
            u: center_u,
            bu,
            sigma,
        })
    }
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (lower, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_max + upper)
    }
}

/// Baseline and noise scale of a whole series. Entry `i` of `bu`/`sigma`
/// belongs to sample `start + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub start: usize,
    pub bu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Baseline {
    pub fn len(&self) -> usize {
        self.bu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bu.is_empty()
    }

    /// `(BU, σ)` at sample `index`, if defined there.
    pub fn at(&self, index: usize) -> Option<(f64, f64)> {
        let i = index.checked_sub(self.start)?;
        Some((*self.bu.get(i)?, self.sigma[i]))
    }
}

/// Centered moving median and robust noise scale of `u`.
pub fn baseline(u: &[f64], params: &BaselineParams) -> Baseline {
    let mut state = BaselineState::new(params.clone());
    let points: Vec<BaselinePoint> = u
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| state.push(i as u32, v))
        .collect();
    Baseline {
        start: points.first().map_or(0, |p| p.index),
        bu: points.iter().map(|p| p.bu).collect(),
        sigma: points.iter().map(|p| p.sigma).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn params(w_b: usize, w_s: usize) -> BaselineParams {
        BaselineParams {
            median_half_width: w_b,
            noise_window: w_s,
            sigma_floor: 1e-9,
        }
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn constant_series_hits_sigma_floor() {
        let u = vec![7.5; 60];
        let b = baseline(&u, &params(3, 20));
        assert!(!b.is_empty());
        assert!(b.bu.iter().all(|&v| v == 7.5));
        assert!(b.sigma.iter().all(|&s| s == 1e-9));
    }

    #[test]
    fn median_rejects_single_outlier() {
        let mut u = vec![2.0; 40];
        u[10] = 102.0;
        let b = baseline(&u, &params(2, 2));
        assert_eq!(b.at(10).unwrap().0, 2.0);
    }

    #[test]
    fn warm_up_and_alignment() {
        let u: Vec<f64> = (0..50).map(f64::from).collect();
        let b = baseline(&u, &params(3, 20));
        // first point needs the 7 samples of the median window
        assert_eq!(b.start, 3);
        assert_eq!(b.len(), 50 - 3 - 3);
        // a centered median reproduces a straight line exactly
        for i in 0..b.len() {
            assert_eq!(b.bu[i], (b.start + i) as f64);
        }
    }

    #[test]
    fn ramp_keeps_noise_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u: Vec<f64> = (0..300)
            .map(|i| {
                4.0 * f64::from(i) + {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    e
                }
            })
            .collect();
        let b = baseline(&u, &params(3, 20));
        let mean = b.sigma.iter().sum::<f64>() / b.len() as f64;
        assert!((0.8..=1.2).contains(&mean), "mean sigma {mean}");
    }

    #[test]
    fn step_barely_moves_noise_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u: Vec<f64> = (0..100)
            .map(|i| if i < 50 { 0.0 } else { 8.0 } + { let e: f64 = StandardNormal.sample(&mut rng); e })
            .collect();
        let b = baseline(&u, &params(3, 20));
        for t in 45..55 {
            assert!(b.at(t).unwrap().1 < 1.6, "sigma at {t}");
        }
    }

    #[test]
    fn white_noise_sigma_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b = baseline(&u, &params(3, 20));
        let mean = b.sigma.iter().sum::<f64>() / b.len() as f64;
        assert!((0.8..=1.2).contains(&mean), "mean sigma {mean}");
    }
}
