use super::{Baseline, BaselinePoint, PeakParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakDetection {
    pub start: usize,
    pub end: usize,
    pub start_slice: u32,
    pub end_slice: u32,
    /// Mean height of the run above the baseline, in `σ` units.
    pub intensity: f64,
}

#[derive(Debug, Clone, Copy)]
struct Run {
    start: usize,
    end: usize,
    start_slice: u32,
    end_slice: u32,
    height_sum: f64,
    sigma_sum: f64,
    lo: f64,
    hi: f64,
}

/// Sequential run detector. A run is closed, and possibly reported, by the
/// first non-outlier that follows it.
#[derive(Debug, Clone)]
pub struct PeakScanner {
    params: PeakParams,
    run: Option<Run>,
    last_end: Option<usize>,
}

impl PeakScanner {
    pub fn new(params: PeakParams) -> Self {
        PeakScanner {
            params,
            run: None,
            last_end: None,
        }
    }

    pub fn step(&mut self, p: &BaselinePoint) -> Option<PeakDetection> {
        let height = (p.u - p.bu) / p.sigma;
        if height > self.params.min_height {
            match &mut self.run {
                Some(run) if run.end + 1 == p.index => {
                    run.end = p.index;
                    run.end_slice = p.slice;
                    run.height_sum += height;
                    run.sigma_sum += p.sigma;
                    run.lo = run.lo.min(p.u);
                    run.hi = run.hi.max(p.u);
                }
                _ => {
                    self.run = Some(Run {
                        start: p.index,
                        end: p.index,
                        start_slice: p.slice,
                        end_slice: p.slice,
                        height_sum: height,
                        sigma_sum: p.sigma,
                        lo: p.u,
                        hi: p.u,
                    })
                }
            }
            None
        } else {
            let run = self.run.take()?;
            self.close(run)
        }
    }

    fn close(&mut self, run: Run) -> Option<PeakDetection> {
        let duration = run.end - run.start + 1;
        if duration < self.params.min_duration {
            return None;
        }
        let mean_sigma = run.sigma_sum / duration as f64;
        if run.hi - run.lo > self.params.min_thickness * mean_sigma {
            return None;
        }
        if let Some(last) = self.last_end {
            if run.start - last < self.params.min_gap {
                return None;
            }
        }
        self.last_end = Some(run.end);
        Some(PeakDetection {
            start: run.start,
            end: run.end,
            start_slice: run.start_slice,
            end_slice: run.end_slice,
            intensity: run.height_sum / duration as f64,
        })
    }
}

/// Peak/crenel intensity series: the run's mean height at every slice of a
/// detected run, zero elsewhere. Runs still open at the end are not reported.
pub fn detect_peaks_crenels(u: &[f64], base: &Baseline, params: &PeakParams) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    let mut scanner = PeakScanner::new(params.clone());
    for (i, (&bu, &sigma)) in base.bu.iter().zip(&base.sigma).enumerate() {
        let index = base.start + i;
        let point = BaselinePoint {
            index,
            slice: index as u32,
            u: u[index],
            bu,
            sigma,
        };
        if let Some(d) = scanner.step(&point) {
            out[d.start..=d.end].fill(d.intensity);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::{baseline, BaselineParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, 1.0).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    fn run(u: &[f64], params: &PeakParams) -> Vec<f64> {
        let base = baseline(u, &BaselineParams::default());
        detect_peaks_crenels(u, &base, params)
    }

    fn detections(a: &[f64]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < a.len() {
            if a[i] > 0.0 {
                let s = i;
                while i < a.len() && a[i] > 0.0 {
                    i += 1;
                }
                out.push((s, i - 1));
            } else {
                i += 1;
            }
        }
        out
    }

    #[test]
    fn constant_series_has_no_peaks() {
        let u = vec![3.0; 100];
        assert!(run(&u, &PeakParams::default()).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_spike_reads_back_its_height() {
        // unit-variance noise, so the intensity is close to the planted height
        let mut u = noise(120, 3);
        u[60] += 10.0;
        let base = baseline(&u, &BaselineParams::default());
        let a = detect_peaks_crenels(&u, &base, &PeakParams::default());
        assert_eq!(detections(&a), vec![(60, 60)]);
        let (bu, sigma) = base.at(60).unwrap();
        assert!((a[60] - (u[60] - bu) / sigma).abs() < 1e-12);
        assert!((a[60] - 10.0).abs() < 3.5, "intensity {}", a[60]);
    }

    #[test]
    fn exact_intensity_on_clean_series() {
        let mut u: Vec<f64> = noise(80, 4).iter().map(|v| 0.1 * v).collect();
        u[50] += 5.0;
        let base = baseline(&u, &BaselineParams::default());
        let (bu, sigma) = base.at(50).unwrap();
        let a = detect_peaks_crenels(&u, &base, &PeakParams::default());
        assert_eq!(detections(&a), vec![(50, 50)]);
        assert!((a[50] - (u[50] - bu) / sigma).abs() < 1e-12);
    }

    #[test]
    fn gap_rule_suppresses_second_spike() {
        let mut u = noise(120, 5);
        u[60] += 12.0;
        u[62] += 12.0;
        let params = PeakParams {
            min_gap: 5,
            ..PeakParams::default()
        };
        assert_eq!(detections(&run(&u, &params)), vec![(60, 60)]);
        let loose = PeakParams {
            min_gap: 1,
            ..PeakParams::default()
        };
        assert_eq!(detections(&run(&u, &loose)), vec![(60, 60), (62, 62)]);
    }

    #[test]
    fn crenel_flat_top_and_duration() {
        let mut u = noise(150, 9);
        for v in &mut u[70..73] {
            *v += 9.0;
        }
        let a = run(&u, &PeakParams::default());
        let d = detections(&a);
        assert_eq!(d, vec![(70, 72)]);
        let longer = PeakParams {
            min_duration: 4,
            ..PeakParams::default()
        };
        assert!(detections(&run(&u, &longer)).is_empty());
    }

    #[test]
    fn ragged_top_fails_thickness() {
        let mut u = noise(150, 13);
        u[70] += 8.0;
        u[71] += 20.0;
        let a = run(&u, &PeakParams::default());
        assert!(a[70..72].iter().all(|&v| v == 0.0));
    }
}
