//! Acceptance suite. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion does.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use influence_core::detectors::{baseline, detect_series, DetectorParams};
use influence_core::engine::{evaluate, run_analysis, EngineConfig, FactorSet, FACTOR_COUNT, GROUP_COUNT, PAIR_COUNT};
use influence_core::influence::{
    binarize_factor, combined_counts, fit_component, fit_level_set, fit_two_sided, fuse_tally, influence_pair,
    influence_single, tally,
};
use influence_core::portfolio::{Descriptor, DESCRIPTOR_COUNT};
use influence_core::predictors::{mir, mir_from_rates, ConfusionCounts, QualityFn};
use influence_core::scores::ScoreTracker;
use influence_core::synth::{generate_synthetic, DependencePlant, SyntheticSpec};

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(id: u32, name: &str, budget: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = body();
    let took = start.elapsed();
    let ok = out.ok && took < budget;
    let line = format!(
        "criterion {id} {name}: {} ({}; {:.2}s of {}s)\n",
        if ok { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        budget.as_secs()
    );
    // bypass the harness capture so the lines always reach the log
    std::io::stdout().write_all(line.as_bytes()).unwrap();
    ok
}

fn counts_of(fired: impl Fn(usize) -> bool, y: &[bool]) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for (k, &b) in y.iter().enumerate() {
        match (fired(k), b) {
            (true, true) => c.n11 += 1,
            (true, false) => c.n10 += 1,
            (false, true) => c.n01 += 1,
            (false, false) => c.n00 += 1,
        }
    }
    c
}

fn quality_for(i: usize) -> QualityFn {
    match i % 4 {
        0 => QualityFn::FloorPower(0.85),
        1 => QualityFn::FloorPower(0.7),
        2 => QualityFn::MinPower,
        _ => QualityFn::Weighted(0.5),
    }
}

fn factor_arithmetic() -> Outcome {
    let set = FactorSet::new();
    let n = set.factors().len();
    let anomaly = set.factors().iter().filter(|f| f.is_anomaly()).count();
    let pairs = set.pairs().len();
    let groups = set.group_count();
    let ok = DESCRIPTOR_COUNT == 7
        && anomaly == 3 * DESCRIPTOR_COUNT
        && n == 28
        && FACTOR_COUNT == 28
        && pairs == 378
        && PAIR_COUNT == 378
        && groups == 406
        && GROUP_COUNT == 406;
    Outcome {
        ok,
        detail: format!("{n} factors, {pairs} pairs, {groups} groups"),
    }
}

/// Best power over every threshold pair drawn from the observed values.
/// Unordered pairs fire everywhere; the extreme values stand in for the
/// infinite sentinels.
fn brute_force_two_sided(z: &[f64], y: &[bool], qf: &QualityFn, pinned: bool) -> f64 {
    let cands: Vec<f64> = z.to_vec();
    let lowers = if pinned { vec![0.0] } else { cands.clone() };
    let mut best = 0.0f64;
    for &lo in &lowers {
        for &hi in &cands {
            let c = counts_of(|k| z[k] < lo || z[k] > hi, y);
            best = best.max(qf.evaluate(&c));
        }
    }
    best
}

fn two_sided_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    let mut instances = 0;
    while instances < 500 {
        let k = rng.random_range(2..=100);
        let pinned = rng.random_bool(0.3);
        let coarse = rng.random_bool(0.5);
        let z: Vec<f64> = (0..k)
            .map(|_| {
                let v: f64 = if coarse {
                    f64::from(rng.random_range(0..8u8))
                } else {
                    StandardNormal.sample(&mut rng)
                };
                if pinned {
                    v.abs()
                } else {
                    v
                }
            })
            .collect();
        let rate = rng.random_range(0.03..0.4);
        let y: Vec<bool> = z
            .iter()
            .map(|&v| rng.random_bool(if v.abs() > 1.5 { 0.8 } else { rate }))
            .collect();
        let mut distinct = z.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 2 || !y.contains(&true) {
            continue;
        }
        let qf = quality_for(instances);
        let fit = fit_two_sided(&z, &y, &qf, pinned).unwrap();
        if fit.power != brute_force_two_sided(&z, &y, &qf, pinned) {
            mismatches += 1;
        }
        instances += 1;
    }
    Outcome {
        ok: mismatches == 0,
        detail: format!("{mismatches} mismatches in {instances} instances"),
    }
}

fn level_set_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for i in 0..200 {
        let k = rng.random_range(20..=150);
        let risk: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..0.6)).collect();
        let cells: Vec<u8> = (0..k).map(|_| rng.random_range(0..8u8)).collect();
        let y: Vec<bool> = cells.iter().map(|&c| rng.random_bool(risk[usize::from(c)])).collect();
        let qf = quality_for(i);
        let fit = fit_level_set(&cells, &y, &qf).unwrap();

        let s = usize::from(*cells.iter().max().unwrap()) + 1;
        let mut bad = vec![0usize; s];
        for (&c, &b) in cells.iter().zip(&y) {
            bad[usize::from(c)] += usize::from(b);
        }
        let mut best = 0.0f64;
        for mask in 1u32..(1 << s) {
            let inside = |c: usize| mask & (1 << c) != 0;
            let positive = (0..s).filter(|&c| inside(c)).all(|c| bad[c] > 0);
            let upper = (0..s)
                .filter(|&c| inside(c))
                .all(|c| (0..s).filter(|&d| !inside(d)).all(|d| bad[c] > bad[d]));
            if positive && upper {
                let counts = counts_of(|j| inside(usize::from(cells[j])), &y);
                best = best.max(qf.evaluate(&counts));
            }
        }
        if fit.power != best {
            mismatches += 1;
        }
    }
    Outcome {
        ok: mismatches == 0,
        detail: format!("{mismatches} mismatches in 200 instances"),
    }
}

fn noisy_view(y: &[bool], flip: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    y.iter()
        .map(|&b| {
            let e: f64 = StandardNormal.sample(rng);
            let shown = if rng.random_bool(flip) { !b } else { b };
            e + if shown { 3.0 } else { 0.0 }
        })
        .collect()
}

fn fusion_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut attained, mut admitted, mut dominated) = (0, 0, 0);
    for i in 0..500 {
        let k = rng.random_range(60..=300);
        let y: Vec<bool> = (0..k).map(|_| rng.random_bool(0.1)).collect();
        // components are noisy views of y, so most pairs pass admission
        let flips = (rng.random_range(0.0..0.3), rng.random_range(0.0..0.3));
        let z1 = noisy_view(&y, flips.0, &mut rng);
        let z2 = noisy_view(&y, flips.1, &mut rng);
        let qf = match i % 3 {
            0 => QualityFn::FloorPower(0.85),
            1 => QualityFn::MinPower,
            _ => QualityFn::Weighted(0.5),
        };
        let r_pre = 0.68;
        let (Some(f), Some(g)) = (
            fit_component(&z1, &y, &qf, false, r_pre).unwrap(),
            fit_component(&z2, &y, &qf, false, r_pre).unwrap(),
        ) else {
            attained += 1;
            continue;
        };
        let t = tally(&binarize_factor(&f, &z1), &binarize_factor(&g, &z2), &y).unwrap();
        let fused = fuse_tally(&t, &qf);
        let exhaustive = (0u8..16)
            .map(|table| {
                let c = combined_counts(&t, |a, b| table & (1 << (2 * u8::from(a) + u8::from(b))) != 0);
                qf.evaluate(&c)
            })
            .fold(0.0, f64::max);
        if fused.power >= exhaustive {
            attained += 1;
        }

        admitted += 1;
        let (pair, power) = influence_pair((&z1, false), (&z2, false), &y, &qf, r_pre)
            .unwrap()
            .unwrap();
        let s1 = influence_single(&z1, &y, &qf, false).unwrap().1;
        let s2 = influence_single(&z2, &y, &qf, false).unwrap().1;
        // components refitted at r_pre carry that floor's power; compare
        // under the run's functional
        let component = qf.evaluate(&pair.f.counts).max(qf.evaluate(&pair.g.counts));
        if power >= component && power >= s1.max(s2) {
            dominated += 1;
        }
    }
    let rate = attained as f64 / 500.0;
    Outcome {
        ok: rate >= 0.95 && dominated == admitted && admitted > 0,
        detail: format!(
            "4-combiner maximum attained in {:.1}%, pair ≥ components in {dominated}/{admitted} admitted",
            100.0 * rate
        ),
    }
}

fn mir_properties() -> Outcome {
    let grid: Vec<f64> = (0..=10).map(|i| 0.5 + 0.05 * f64::from(i)).collect();
    let mut violations = 0;
    for mu1 in [0.03, 0.1, 0.5] {
        for (a, &p1) in grid.iter().enumerate() {
            for (b, &p0) in grid.iter().enumerate() {
                let m = mir_from_rates(p1, p0, mu1).unwrap();
                if a + 1 < grid.len() && mir_from_rates(grid[a + 1], p0, mu1).unwrap() < m - 1e-12 {
                    violations += 1;
                }
                if b + 1 < grid.len() && mir_from_rates(p1, grid[b + 1], mu1).unwrap() < m - 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    let y: Vec<bool> = (0..200).map(|i| i % 7 == 0).collect();
    let perfect = mir(&y, &y).unwrap();
    let constant = mir(&vec![false; y.len()], &y).unwrap();
    let ok = violations == 0 && (perfect - 1.0).abs() <= 1e-12 && constant.abs() <= 1e-12;
    Outcome {
        ok,
        detail: format!("{violations} monotonicity violations, MIR(Y,Y)={perfect}, MIR(const,Y)={constant}"),
    }
}

fn rarity_uniformity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut tracker = ScoreTracker::new(2_000, 2_000).unwrap();
    let mut bins = [0usize; 10];
    let mut scored = 0;
    while scored < 10_000 {
        let x: f64 = StandardNormal.sample(&mut rng);
        if let Some(s) = tracker.observe(x).unwrap() {
            bins[((s * 10.0) as usize).min(9)] += 1;
            scored += 1;
        }
    }
    let expected = scored as f64 / 10.0;
    let se = (scored as f64 * 0.1 * 0.9).sqrt();
    let worst = bins
        .iter()
        .map(|&b| (b as f64 - expected).abs() / se)
        .fold(0.0, f64::max);
    Outcome {
        ok: worst <= 3.0,
        detail: format!("worst bin deviation {worst:.2} standard errors, bins {bins:?}"),
    }
}

fn white_noise(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn detector_recovery() -> Outcome {
    let params = DetectorParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (n, at, plants) = (200usize, 100usize, 50);
    let near = |a: &[f64]| a[at - 2..=at + 2].iter().any(|&v| v > 0.0);

    let mut hits = [0usize; 3];
    for _ in 0..plants {
        let mut u = white_noise(n, &mut rng);
        u[at] += 2.0 * params.peak.min_height;
        hits[0] += usize::from(near(&detect_series(&u, &params)[0]));

        let mut u = white_noise(n, &mut rng);
        for v in &mut u[at..] {
            *v += 2.0 * params.jump.min_size;
        }
        hits[1] += usize::from(near(&detect_series(&u, &params)[1]));

        let mut u = white_noise(n, &mut rng);
        for (i, v) in u.iter_mut().enumerate().skip(at) {
            *v += 2.0 * params.trend.min_slope_change * (i - at) as f64;
        }
        hits[2] += usize::from(near(&detect_series(&u, &params)[2]));
    }

    // false detections per slice where each detector can emit
    let mut alarms = [0usize; 3];
    let mut testable = [0usize; 3];
    let noise_len = 1_000;
    for _ in 0..50 {
        let u = white_noise(noise_len, &mut rng);
        let base = baseline(&u, &params.baseline);
        let out = detect_series(&u, &params);
        let scanned = |w: usize| base.len() + 1 - (2 * w + 2);
        testable[0] += base.len();
        testable[1] += scanned(params.jump.window);
        // trend changes also need the jump test to reach L slices past them
        testable[2] += scanned(params.trend.window) - params.jump.window;
        for (a, series) in alarms.iter_mut().zip(&out) {
            *a += series.iter().filter(|&&v| v > 0.0).count();
        }
    }
    let recall: Vec<f64> = hits.iter().map(|&h| h as f64 / plants as f64).collect();
    let far: Vec<f64> = alarms
        .iter()
        .zip(&testable)
        .map(|(&a, &t)| a as f64 / t as f64)
        .collect();
    let ok = recall.iter().all(|&r| r >= 0.9) && far.iter().all(|&f| f <= 0.02);
    Outcome {
        ok,
        detail: format!(
            "recall peak/jump/trend {:.0}%/{:.0}%/{:.0}%, false detections per slice {:.2}%/{:.2}%/{:.2}%",
            100.0 * recall[0],
            100.0 * recall[1],
            100.0 * recall[2],
            100.0 * far[0],
            100.0 * far[1],
            100.0 * far[2]
        ),
    }
}

fn desk_portfolio() -> SyntheticSpec {
    let plant = |factor, from| DependencePlant {
        factor,
        from,
        to: from + 2,
        level: 0.97,
        max_share: None,
    };
    SyntheticSpec {
        seed: 7,
        orders: 700,
        slices: 79,
        dependences: vec![
            plant(Descriptor::VolatilityScore, 40),
            plant(Descriptor::VolumeScore, 60),
        ],
        ..SyntheticSpec::default()
    }
}

fn planted_cause_recovery() -> Outcome {
    let (slices, truth) = generate_synthetic(&desk_portfolio()).unwrap();
    let config = EngineConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let (reports, _) = run_analysis(&slices, &config, dir.path(), false).unwrap();
    let eval = evaluate(&reports, &truth);
    let ok = eval.planted_slices == 6 && eval.recall >= 0.9 && eval.max_retained_far <= 1.0 - config.r + 1e-12;
    Outcome {
        ok,
        detail: format!(
            "dominating set names the planted factor in {}/{} slices, max retained FAR {:.3}",
            eval.recovered, eval.planted_slices, eval.max_retained_far
        ),
    }
}

fn output_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let spec = SyntheticSpec {
        orders: 300,
        ..desk_portfolio()
    };
    let (slices, _) = generate_synthetic(&spec).unwrap();
    let again = generate_synthetic(&spec).unwrap().0;
    let config = EngineConfig::default();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_analysis(&slices, &config, a.path(), false).unwrap();
    run_analysis(&again, &config, b.path(), false).unwrap();
    let (fa, fb) = (output_files(a.path()), output_files(b.path()));
    let differing = fa.iter().zip(&fb).filter(|(x, y)| x != y).count() + fa.len().abs_diff(fb.len());
    Outcome {
        ok: differing == 0 && !fa.is_empty(),
        detail: format!("{} files compared, {differing} differ", fa.len()),
    }
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let results = [
        check(1, "factor arithmetic", secs(1), factor_arithmetic),
        check(2, "two-sided optimality", secs(30), two_sided_oracle),
        check(3, "level-set optimality", secs(10), level_set_oracle),
        check(4, "fusion oracle", secs(30), fusion_oracle),
        check(5, "MIR properties", secs(5), mir_properties),
        check(6, "rarity-score uniformity", secs(5), rarity_uniformity),
        check(7, "detector recovery", secs(60), detector_recovery),
        check(8, "planted-cause recovery", secs(300), planted_cause_recovery),
        check(9, "determinism", secs(600), determinism),
    ];
    let failed: Vec<usize> = (1..=9).filter(|&i| !results[i - 1]).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
