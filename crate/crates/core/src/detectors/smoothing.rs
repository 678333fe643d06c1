use std::collections::VecDeque;

/// Trailing maximum over the last `tau + 1` samples.
pub fn smooth_intensity(a: &[f64], tau: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len());
    // indices with decreasing values
    let mut window: VecDeque<usize> = VecDeque::new();
    for (i, &v) in a.iter().enumerate() {
        while window.back().is_some_and(|&j| a[j] <= v) {
            window.pop_back();
        }
        window.push_back(i);
        while window.front().is_some_and(|&j| j + tau < i) {
            window.pop_front();
        }
        out.push(a[window[0]]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_examples() {
        assert_eq!(
            smooth_intensity(&[0.0, 5.0, 0.0, 0.0, 2.0], 2),
            vec![0.0, 5.0, 5.0, 5.0, 2.0]
        );
        let a = [1.0, 0.0, 3.0, 2.0];
        assert_eq!(smooth_intensity(&a, 0), a.to_vec());
        assert!(smooth_intensity(&[], 4).is_empty());
    }

    proptest! {
        #[test]
        fn matches_direct_window_max(a in proptest::collection::vec(0.0f64..10.0, 0..60), tau in 0usize..8) {
            let s = smooth_intensity(&a, tau);
            for (i, &v) in s.iter().enumerate() {
                let lo = i.saturating_sub(tau);
                let direct = a[lo..=i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(v, direct);
                prop_assert!(v >= a[i]);
            }
        }
    }
}
