//! Asymptotic bound, sample moments, Kolmogorov–Smirnov goodness of fit,
//! histogram/ECDF extraction and Monte Carlo tail probabilities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, norm2};
use crate::par::par_map;
use crate::sampling::{EntryDistribution, SeedSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("asymptotic bound needs m > n >= 1 (got m = {m}, n = {n})")]
    RatioTooSmall { m: usize, n: usize },
    #[error("ratio m/n must exceed 1 (got {0})")]
    BadRatio(f64),
    #[error("reference value must be positive (got {0})")]
    NonPositiveReference(f64),
    #[error("need at least {needed} samples (got {got})")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample has zero standard deviation")]
    ZeroStd,
    #[error("bin count must be positive")]
    NoBins,
    #[error("vector must have unit Euclidean norm (got {0})")]
    NotUnit(f64),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
}

/// `(2 ln(m/n))^{-1/2}`.
pub fn asymptotic_bound(m: usize, n: usize) -> Result<f64, StatsError> {
    if n == 0 || m <= n {
        return Err(StatsError::RatioTooSmall { m, n });
    }
    asymptotic_bound_ratio(m as f64 / n as f64)
}

/// `(2 ln ratio)^{-1/2}` for a real aspect ratio `ratio = m/n`.
pub fn asymptotic_bound_ratio(ratio: f64) -> Result<f64, StatsError> {
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(StatsError::BadRatio(ratio));
    }
    Ok((2.0 * ratio.ln()).sqrt().recip())
}

/// `|reference - observed| / reference × 100`.
pub fn relative_gap(reference: f64, observed: f64) -> Result<f64, StatsError> {
    if !(reference > 0.0) {
        return Err(StatsError::NonPositiveReference(reference));
    }
    Ok((reference - observed).abs() / reference * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased (divisor `count - 1`).
    pub std: f64,
}

impl SampleSummary {
    pub fn standard_error(&self) -> f64 {
        self.std / (self.count as f64).sqrt()
    }
}

pub fn summarize(samples: &[f64]) -> Result<SampleSummary, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    check_finite(samples)?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(SampleSummary {
        count: samples.len(),
        mean,
        std: (ss / (n - 1.0)).sqrt(),
    })
}

fn check_finite(samples: &[f64]) -> Result<(), StatsError> {
    match samples.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(StatsError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Standard normal CDF, `Φ(t) = erfc(-t/√2) / 2`.
pub fn normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Φ(t)` without cancellation.
pub fn normal_sf(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_samples: usize,
    /// Mean and standard deviation of the fitted reference normal, if fitted.
    pub fitted_mean: Option<f64>,
    pub fitted_std: Option<f64>,
}

pub const KS_MIN_SAMPLES: usize = 8;

/// KS test against the normal law with the sample's own mean and standard
/// deviation, using the plain Kolmogorov p-value. With fitted parameters this
/// p-value is conservative (the Lilliefors effect).
pub fn ks_test(samples: &[f64]) -> Result<KsResult, StatsError> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(StatsError::TooFewSamples {
            needed: KS_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let summary = summarize(samples)?;
    if samples.iter().all(|&v| v == samples[0]) || !(summary.std > 0.0) {
        return Err(StatsError::ZeroStd);
    }
    let (mu, sigma) = (summary.mean, summary.std);
    let mut r = ks_test_against(samples, |x| normal_cdf((x - mu) / sigma))?;
    r.fitted_mean = Some(mu);
    r.fitted_std = Some(sigma);
    Ok(r)
}

/// KS test against a fully specified continuous CDF.
pub fn ks_test_against<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult, StatsError> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(StatsError::TooFewSamples {
            needed: KS_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    check_finite(samples)?;
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        d.max(above).max(below)
    });
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_p_value(statistic, sorted.len()),
        n_samples: sorted.len(),
        fitted_mean: None,
        fitted_std: None,
    })
}

/// Asymptotic p-value `2 Σ_{k≥1} (-1)^{k-1} exp(-2k² N D²)`, truncated once a
/// term drops below `1e-12` and clamped to `[0, 1]`.
pub fn kolmogorov_p_value(statistic: f64, n_samples: usize) -> f64 {
    let lambda_sq = n_samples as f64 * statistic * statistic;
    if lambda_sq <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut k = 1u64;
    loop {
        let term = (-2.0 * (k * k) as f64 * lambda_sq).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-12 || k > 1_000_000 {
            break;
        }
        k += 1;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
}

/// Sturges' rule, `⌈log₂ N⌉ + 1`.
pub fn sturges_bins(count: usize) -> usize {
    (count.max(1) as f64).log2().ceil() as usize + 1
}

/// Equal-width bins over `[min, max]`; every bin is half-open except the last.
/// A constant sample is centred in a unit-width range.
pub fn histogram(samples: &[f64], n_bins: usize) -> Result<Vec<HistogramBin>, StatsError> {
    if n_bins == 0 {
        return Err(StatsError::NoBins);
    }
    if samples.is_empty() {
        return Err(StatsError::TooFewSamples { needed: 1, got: 0 });
    }
    check_finite(samples)?;
    let (mut lo, mut hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if hi == lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &v in samples {
        let idx = (((v - lo) / width).floor() as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            bin_left: lo + i as f64 * width,
            bin_right: if i + 1 == n_bins { hi } else { lo + (i + 1) as f64 * width },
            count,
        })
        .collect())
}

/// Step points `(x, F̂(x))` at the distinct sorted sample values.
pub fn ecdf(samples: &[f64]) -> Result<Vec<(f64, f64)>, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::TooFewSamples { needed: 1, got: 0 });
    }
    check_finite(samples)?;
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (i, &x) in sorted.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => out.push((x, f)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub p_hat: f64,
    pub standard_error: f64,
    pub trials: usize,
    pub hits: usize,
}

pub const TAIL_MIN_TRIALS: usize = 1000;
/// Trials per independent substream; fixes the work split independently of
/// the worker count.
pub const TAIL_CHUNK: usize = 1 << 15;

/// Estimates `P{⟨y, ξ⟩ ≥ t}` for i.i.d. entries `ξ_i ~ dist`.
pub fn tail_probability_mc(
    y: &[f64],
    dist: EntryDistribution,
    t: f64,
    trials: usize,
    seed: SeedSpec,
    workers: usize,
) -> Result<TailEstimate, StatsError> {
    let norm = norm2(y);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(StatsError::NotUnit(norm));
    }
    if trials < TAIL_MIN_TRIALS {
        return Err(StatsError::TooFewSamples {
            needed: TAIL_MIN_TRIALS,
            got: trials,
        });
    }
    // lattice-valued sums (Rademacher with flat y) land exactly on t; count
    // those within rounding of t as reaching it
    let threshold = t - 1e-12 * (1.0 + t.abs());
    let chunks = trials.div_ceil(TAIL_CHUNK);
    let hits: usize = par_map(chunks, workers, |k| {
        let len = TAIL_CHUNK.min(trials - k * TAIL_CHUNK);
        let mut rng = seed.substream(k as u64).rng();
        let mut xi = vec![0.0; y.len()];
        (0..len)
            .filter(|_| {
                dist.fill(&mut rng, &mut xi);
                dot(y, &xi) >= threshold
            })
            .count()
    })
    .into_iter()
    .sum();
    let p_hat = hits as f64 / trials as f64;
    Ok(TailEstimate {
        p_hat,
        standard_error: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        trials,
        hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_matrix, EntryDistribution};
    use proptest::prelude::*;

    #[test]
    fn bound_values() {
        assert!((asymptotic_bound(1000, 50).unwrap() - 0.408539).abs() < 5e-7);
        assert!((asymptotic_bound(10000, 50).unwrap() - 0.307196).abs() < 5e-7);
        assert!((asymptotic_bound_ratio(0.5f64.exp()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(asymptotic_bound(50, 50), Err(StatsError::RatioTooSmall { m: 50, n: 50 }));
        assert!(asymptotic_bound_ratio(1.0).is_err());
    }

    #[test]
    fn bound_monotonicity() {
        for n in [1usize, 10, 50, 150] {
            let mut prev = f64::INFINITY;
            for m in (n + 1..n * 40 + 2).step_by(n.max(3)) {
                let v = asymptotic_bound(m, n).unwrap();
                assert!(v < prev);
                prev = v;
            }
        }
        for m in [200usize, 1000, 10_000] {
            let mut prev = 0.0;
            for n in 1..m.min(180) {
                let v = asymptotic_bound(m, n).unwrap();
                assert!(v > prev);
                prev = v;
            }
        }
    }

    #[test]
    fn gap_values() {
        assert!((relative_gap(0.40853, 0.50626).unwrap() - 23.92).abs() < 5e-3);
        assert!((relative_gap(0.30719, 0.35176).unwrap() - 14.51).abs() < 5e-3);
        assert_eq!(relative_gap(0.3, 0.3).unwrap(), 0.0);
        assert!(relative_gap(0.0, 0.3).is_err());
    }

    #[test]
    fn summary_values() {
        let s = summarize(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.std), (1.0, 0.0));
        let s = summarize(&[0.0, 2.0]).unwrap();
        assert_eq!(s.mean, 1.0);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-15);
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((s.std - 1.290994).abs() < 1e-6);
        assert!(summarize(&[1.0]).is_err());
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        // Φ(1) = (1 + erf(1/√2)) / 2, erf(1/√2) = 0.682689492137086
        assert!((normal_cdf(1.0) - 0.841344746068543).abs() < 1e-12);
        let tail = 1.0 - normal_cdf(3.0);
        let g = (-4.5f64).exp();
        assert!(tail >= (1.0 / 3.0 - 1.0 / 27.0) * g / (2.0 * std::f64::consts::PI).sqrt());
        assert!(tail <= (1.0 / 3.0) * g / (2.0 * std::f64::consts::PI).sqrt());
        assert!((normal_sf(3.0) - tail).abs() < 1e-15);
    }

    #[test]
    fn normal_tail_brackets() {
        // (1/t - 1/t³) φ(t) ≤ P{g ≥ t} ≤ φ(t)/t on a grid
        let mut t: f64 = 0.5;
        while t < 8.0 {
            let phi = (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let p = normal_sf(t);
            assert!(p >= (1.0 / t - 1.0 / t.powi(3)) * phi && p <= phi / t, "t = {t}");
            t += 0.25;
        }
    }

    #[test]
    fn kolmogorov_series_matches_reported_values() {
        let p = kolmogorov_p_value(0.0232, 1000);
        assert!((p - 0.6547).abs() < 1e-3, "{p}");
        assert!((p - 0.6453).abs() <= 0.02);
        let p = kolmogorov_p_value(0.0219, 1000);
        assert!((p - 0.7161).abs() <= 0.02, "{p}");
        assert_eq!(kolmogorov_p_value(0.0, 10), 1.0);
        assert!(kolmogorov_p_value(0.5, 1000) < 1e-12);
    }

    #[test]
    fn degenerate_ks() {
        assert_eq!(ks_test(&[0.3; 20]), Err(StatsError::ZeroStd));
        assert!(matches!(ks_test(&[1.0, 2.0]), Err(StatsError::TooFewSamples { .. })));
    }

    #[test]
    fn ks_accepts_normal_draws() {
        let mut accepted = 0;
        for s in 0..100 {
            let a = sample_matrix(EntryDistribution::Gaussian, 1000, 1, SeedSpec::new(77, s)).unwrap();
            let r = ks_test(a.as_slice()).unwrap();
            assert!((0.0..=1.0).contains(&r.statistic) && (0.0..=1.0).contains(&r.p_value));
            if r.p_value > 0.01 {
                accepted += 1;
            }
        }
        assert!(accepted >= 98, "{accepted}");
    }

    #[test]
    fn known_parameter_p_values_are_uniform() {
        let mut ps: Vec<f64> = (0..200)
            .map(|s| {
                let a = sample_matrix(EntryDistribution::Gaussian, 1000, 1, SeedSpec::new(8, s)).unwrap();
                ks_test_against(a.as_slice(), normal_cdf).unwrap().p_value
            })
            .collect();
        ps.sort_unstable_by(f64::total_cmp);
        let median = 0.5 * (ps[99] + ps[100]);
        assert!((0.3..=0.7).contains(&median), "median {median}");
    }

    #[test]
    fn histogram_and_ecdf_examples() {
        let h = histogram(&[0.0, 1.0], 2).unwrap();
        assert_eq!(
            h,
            vec![
                HistogramBin { bin_left: 0.0, bin_right: 0.5, count: 1 },
                HistogramBin { bin_left: 0.5, bin_right: 1.0, count: 1 },
            ]
        );
        assert_eq!(ecdf(&[3.0, 1.0, 2.0]).unwrap(), vec![(1.0, 1.0 / 3.0), (2.0, 2.0 / 3.0), (3.0, 1.0)]);
        assert_eq!(ecdf(&[1.0, 1.0]).unwrap(), vec![(1.0, 1.0)]);
        assert!(histogram(&[], 3).is_err());
        assert!(histogram(&[1.0], 0).is_err());
        assert_eq!(histogram(&[2.0, 2.0], 3).unwrap()[1].count, 2);
        assert_eq!(sturges_bins(1000), 11);
    }

    #[test]
    fn tail_gaussian_matches_exact() {
        let y: Vec<f64> = (0..10).map(|i| i as f64 + 1.0).collect();
        let norm = norm2(&y);
        let y: Vec<f64> = y.iter().map(|v| v / norm).collect();
        for (k, &t) in [0.0, 0.5, 1.0, 2.0].iter().enumerate() {
            let est = tail_probability_mc(&y, EntryDistribution::Gaussian, t, 200_000, SeedSpec::new(4, k as u64), 1)
                .unwrap();
            let exact = normal_sf(t);
            assert!((est.p_hat - exact).abs() <= 4.0 * est.standard_error, "t = {t}: {} vs {exact}", est.p_hat);
        }
        assert!((normal_sf(1.0) - 0.158655).abs() < 1e-6);
    }

    #[test]
    fn tail_rademacher_matches_binomial() {
        // flat y in R^400, t = 1.8: P{S ≥ 36} = P{Bin(400, 1/2) ≥ 218}
        let n = 400;
        let y = vec![1.0 / (n as f64).sqrt(); n];
        let t = 0.9 * 2.0;
        let est = tail_probability_mc(&y, EntryDistribution::Rademacher, t, 400_000, SeedSpec::new(6, 0), 1).unwrap();
        let exact = binomial_upper_tail(n as u64, 218);
        assert!((exact - 0.0399942).abs() < 1e-6);
        assert!((est.p_hat - exact).abs() <= 4.0 * est.standard_error);
    }

    /// `P{Bin(n, 1/2) ≥ k}` by summing log-space terms.
    fn binomial_upper_tail(n: u64, k: u64) -> f64 {
        let ln_fact = |x: u64| (1..=x).map(|i| (i as f64).ln()).sum::<f64>();
        (k..=n)
            .map(|j| (ln_fact(n) - ln_fact(j) - ln_fact(n - j) - n as f64 * 2f64.ln()).exp())
            .sum()
    }

    #[test]
    fn tail_worker_independence() {
        let y = vec![0.6, 0.8];
        let a = tail_probability_mc(&y, EntryDistribution::Rademacher, 0.5, 100_000, SeedSpec::new(1, 1), 1).unwrap();
        let b = tail_probability_mc(&y, EntryDistribution::Rademacher, 0.5, 100_000, SeedSpec::new(1, 1), 8).unwrap();
        assert_eq!(a, b);
        assert!(tail_probability_mc(&[1.0, 1.0], EntryDistribution::Gaussian, 0.0, 1000, SeedSpec::new(0, 0), 1).is_err());
        assert!(tail_probability_mc(&[1.0], EntryDistribution::Gaussian, 0.0, 999, SeedSpec::new(0, 0), 1).is_err());
    }

    proptest! {
        #[test]
        fn histogram_conserves_counts(samples in prop::collection::vec(-100.0f64..100.0, 1..300), bins in 1usize..40) {
            let h = histogram(&samples, bins).unwrap();
            prop_assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), samples.len());
            prop_assert_eq!(h.len(), bins);
        }

        #[test]
        fn p_value_in_unit_interval(d in 0.0f64..1.0, n in 1usize..5000) {
            let p = kolmogorov_p_value(d, n);
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}
