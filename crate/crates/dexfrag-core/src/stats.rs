//! Empirical distribution tools: ECDF, inverse-transform resampling,
//! bootstrap means, histograms and basic descriptive statistics.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("input sample set is empty")]
    EmptyInput,
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample variance is zero")]
    DegenerateVariance,
    #[error("histogram bin count must be at least 1")]
    ZeroBins,
    #[error("bootstrap design must use at least one subsample of size one")]
    EmptyBootstrapDesign,
}

/// Arithmetic mean; NaN on empty input.
pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Unbiased sample variance (n - 1 denominator); 0 for fewer than 2 samples.
pub fn sample_variance(samples: &[f64]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let m = mean(samples);
    samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (samples.len() - 1) as f64
}

pub fn sample_std(samples: &[f64]) -> f64 {
    libm::sqrt(sample_variance(samples))
}

/// Quantile of a sorted slice with linear interpolation between order
/// statistics. `q` is clamped to `[0, 1]`; the slice must be nonempty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let q = q.clamp(0.0, 1.0);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Empirical cumulative distribution of a sample, stored as the ascending
/// multiset of values.
///
/// Evaluation follows the strict-count convention: `F(x)` is the fraction of
/// observations strictly smaller than `x`. With continuous delay data ties
/// are measure-zero, so the convention choice is immaterial in practice.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_samples(samples: &[f64]) -> Result<Self, StatsError> {
        if samples.is_empty() {
            return Err(StatsError::EmptyInput);
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(StatsError::NonFiniteInput);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
        Ok(EmpiricalCdf { sorted })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    /// The sorted sample values backing the distribution.
    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().expect("nonempty by construction")
    }

    /// Fraction of observations strictly smaller than `x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|v| *v < x);
        below as f64 / self.sorted.len() as f64
    }

    /// Fraction of observations at or above `threshold`: `1 - F(threshold)`.
    pub fn tail_probability(&self, threshold: f64) -> f64 {
        1.0 - self.evaluate(threshold)
    }

    /// Draws one value from the distribution: a uniformly random element of
    /// the stored sample, i.e. resampling with replacement.
    pub fn inverse_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sorted[rng.random_range(0..self.sorted.len())]
    }

    pub fn quantile(&self, q: f64) -> f64 {
        quantile_sorted(&self.sorted, q)
    }
}

/// Bootstrap estimate of the sampling distribution of the mean.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    /// Mean of each resampled subsample.
    pub subsample_means: Vec<f64>,
    /// Average of the subsample means.
    pub grand_mean: f64,
    /// Sample standard deviation of the subsample means.
    pub std_of_means: f64,
}

/// Standard bootstrap of the mean: `n_sub` subsamples of `sub_size` drawn
/// with replacement from `samples`, means averaged.
pub fn bootstrap_mean<R: Rng + ?Sized>(
    samples: &[f64],
    n_sub: usize,
    sub_size: usize,
    rng: &mut R,
) -> Result<BootstrapResult, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if n_sub == 0 || sub_size == 0 {
        return Err(StatsError::EmptyBootstrapDesign);
    }
    let n = samples.len();
    let mut subsample_means = Vec::with_capacity(n_sub);
    for _ in 0..n_sub {
        let mut sum = 0.0;
        for _ in 0..sub_size {
            sum += samples[rng.random_range(0..n)];
        }
        subsample_means.push(sum / sub_size as f64);
    }
    Ok(BootstrapResult {
        grand_mean: mean(&subsample_means),
        std_of_means: sample_std(&subsample_means),
        subsample_means,
    })
}

/// Equal-width histogram normalized to integrate to one; returns
/// `(bin_center, density)` pairs.
pub fn histogram_density(
    samples: &[f64],
    bin_count: usize,
) -> Result<Vec<(f64, f64)>, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if bin_count == 0 {
        return Err(StatsError::ZeroBins);
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::NonFiniteInput);
    }
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    // degenerate samples get a unit-width bin around the value
    let width = if span > 0.0 {
        span / bin_count as f64
    } else {
        1.0
    };

    let mut counts = alloc::vec![0usize; bin_count];
    for &x in samples {
        let idx = if span > 0.0 {
            (((x - min) / width) as usize).min(bin_count - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    let n = samples.len() as f64;
    let origin = if span > 0.0 { min } else { min - width / 2.0 };
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let center = origin + (i as f64 + 0.5) * width;
            (center, c as f64 / (n * width))
        })
        .collect())
}

/// Freedman-Diaconis bin count, the default for delay histograms. Falls back
/// to Sturges-like counts when the IQR degenerates.
pub fn fd_bin_count(samples: &[f64]) -> usize {
    if samples.len() < 2 {
        return 1;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let span = sorted[sorted.len() - 1] - sorted[0];
    if span <= 0.0 {
        return 1;
    }
    let width = 2.0 * iqr / libm::cbrt(sorted.len() as f64);
    if width <= 0.0 {
        return 1 + (libm::log2(sorted.len() as f64) as usize);
    }
    (libm::ceil(span / width) as usize).clamp(1, 10_000)
}

/// Adjusted Fisher-Pearson standardized third moment,
/// `g1 * sqrt(n(n-1)) / (n-2)`. Needs at least three samples and nonzero
/// variance.
pub fn sample_skewness(samples: &[f64]) -> Result<f64, StatsError> {
    let n = samples.len();
    if n < 3 {
        return Err(StatsError::TooFewSamples { needed: 3, got: n });
    }
    let m = mean(samples);
    let nf = n as f64;
    let m2 = samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / nf;
    if m2 <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let m3 = samples
        .iter()
        .map(|x| (x - m) * (x - m) * (x - m))
        .sum::<f64>()
        / nf;
    let g1 = m3 / libm::pow(m2, 1.5);
    Ok(g1 * libm::sqrt(nf * (nf - 1.0)) / (nf - 2.0))
}
