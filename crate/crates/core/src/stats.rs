//! Binomial proportion intervals.

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `successes` out of `trials` at 95%.
/// The bounds are clamped so that `0 ≤ low ≤ p̂ ≤ high ≤ 1` holds exactly.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials, "need 0 ≤ successes ≤ trials, trials > 0");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = (center - half).clamp(0.0, p);
    let high = (center + half).clamp(p, 1.0);
    (low, high)
}

/// Plug-in standard error `sqrt(p(1-p)/n)`.
pub fn binomial_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    #[test]
    fn degenerate_counts() {
        let (lo, hi) = wilson_interval(0, 1);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.7 && hi < 0.85);
        let (lo, hi) = wilson_interval(1, 1);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.15 && lo < 0.3);
        let (lo, hi) = wilson_interval(8750, 10_000);
        assert!(lo < 0.875 && hi > 0.875);
        assert!((hi - lo - 2.0 * Z95 * binomial_se(0.875, 10_000)).abs() < 1e-4);
    }

    #[test]
    fn coverage_near_nominal() {
        let mut stream = RandomStream::new(17, 0, 0);
        let mut covered = 0;
        let setups = 1000;
        for _ in 0..setups {
            let p = 0.05 + 0.9 * stream.next_open01();
            let n = 200;
            let s = (0..n).filter(|_| stream.next_open01() < p).count() as u64;
            let (lo, hi) = wilson_interval(s, n);
            assert!(lo <= hi);
            covered += (lo <= p && p <= hi) as u32;
        }
        let rate = covered as f64 / setups as f64;
        assert!((0.93..=0.97).contains(&rate), "{rate}");
    }
}
