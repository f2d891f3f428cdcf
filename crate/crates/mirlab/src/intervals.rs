//! Maximum-likelihood fits of Exponential or Laplace families to
//! melodic-interval distributions, with log-likelihood and
//! Kolmogorov-Smirnov goodness of fit.
//!
//! The exponential family models the magnitudes of nonzero intervals
//! (continuous support excludes exact zeros); the laplace family models
//! the signed intervals, zeros included. Because the two families model
//! different sample counts when zeros are present, model selection
//! compares mean log-likelihood per modeled sample. The exponential is
//! only a candidate on single-signed data: its support is one-sided,
//! and comparing its folded-magnitude likelihood against a two-sided
//! fit would favour it by a constant ln 2 on any symmetric sample.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resample::{percentile_ci_95, seeded_rng};

/// Minimum number of intervals for a meaningful fit.
pub const MIN_INTERVALS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family", content = "params")]
pub enum FittedFamily {
    /// rate lambda > 0, fitted on magnitudes of nonzero intervals
    Exponential { rate: f64 },
    /// location mu, scale b > 0, fitted on signed intervals
    Laplace { location: f64, scale: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalAnalysis {
    #[serde(flatten)]
    pub family: FittedFamily,
    /// Total log-likelihood of the selected family on the samples it
    /// models.
    pub log_likelihood: f64,
    /// KS distance of the selected family against its own sample.
    pub ks_distance: f64,
    /// Number of input intervals.
    pub n: usize,
}

/// Per-parameter percentile 95% CIs for the selected family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalBootstrap {
    #[serde(flatten)]
    pub point: FittedFamily,
    /// (parameter name, lo, hi) in the family's parameter order.
    pub intervals: Vec<(String, f64, f64)>,
}

/// Successive differences of a numeric-encoded sequence.
pub fn intervals_from_sequence(encoded: &[f64]) -> Result<Vec<f64>> {
    if encoded.len() < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 encoded symbols to form intervals, got {}",
            encoded.len()
        )));
    }
    Ok(encoded.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Lower-midpoint-average median of an unsorted sample.
fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn exponential_fit(magnitudes: &[f64]) -> Option<(f64, f64)> {
    if magnitudes.is_empty() {
        return None;
    }
    let mean = magnitudes.iter().sum::<f64>() / magnitudes.len() as f64;
    if mean <= 0.0 {
        return None;
    }
    let rate = 1.0 / mean;
    let ll: f64 = magnitudes.iter().map(|&x| rate.ln() - rate * x).sum();
    Some((rate, ll))
}

fn laplace_fit(values: &[f64]) -> Option<(f64, f64, f64)> {
    let location = median(values);
    let scale = values.iter().map(|x| (x - location).abs()).sum::<f64>() / values.len() as f64;
    if scale <= 0.0 {
        return None;
    }
    let ll: f64 = values
        .iter()
        .map(|&x| -(2.0 * scale).ln() - (x - location).abs() / scale)
        .sum();
    Some((location, scale, ll))
}

/// sup |empirical CDF - fitted CDF| over the sample.
fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

fn exponential_cdf(rate: f64) -> impl Fn(f64) -> f64 {
    move |x| if x <= 0.0 { 0.0 } else { 1.0 - (-rate * x).exp() }
}

fn laplace_cdf(location: f64, scale: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        if x < location {
            0.5 * ((x - location) / scale).exp()
        } else {
            1.0 - 0.5 * (-(x - location) / scale).exp()
        }
    }
}

fn fit_both(intervals: &[f64]) -> Result<(FittedFamily, f64, f64)> {
    if intervals.len() < MIN_INTERVALS {
        return Err(Error::Degenerate(format!(
            "interval fit needs at least {MIN_INTERVALS} intervals, got {}",
            intervals.len()
        )));
    }
    if intervals.iter().all(|&x| x == intervals[0]) {
        return Err(Error::Degenerate(
            "all intervals identical; distribution fit is undefined".into(),
        ));
    }
    let magnitudes: Vec<f64> = intervals
        .iter()
        .filter(|&&x| x != 0.0)
        .map(|&x| x.abs())
        .collect();
    // The exponential has one-sided support, so it is a candidate only
    // when every nonzero interval carries the same sign; mixed-sign
    // data always goes to the two-sided laplace family.
    let single_signed = intervals.iter().all(|&x| x >= 0.0)
        || intervals.iter().all(|&x| x <= 0.0);
    let exponential = if single_signed {
        exponential_fit(&magnitudes).map(|(rate, ll)| (rate, ll, ll / magnitudes.len() as f64))
    } else {
        None
    };
    let laplace = laplace_fit(intervals)
        .map(|(location, scale, ll)| (location, scale, ll, ll / intervals.len() as f64));

    match (exponential, laplace) {
        (Some((rate, ell, eper)), Some((location, scale, lll, lper))) => {
            if eper >= lper {
                let ks = ks_distance(&magnitudes, exponential_cdf(rate));
                Ok((FittedFamily::Exponential { rate }, ell, ks))
            } else {
                let ks = ks_distance(intervals, laplace_cdf(location, scale));
                Ok((FittedFamily::Laplace { location, scale }, lll, ks))
            }
        }
        (Some((rate, ell, _)), None) => {
            let ks = ks_distance(&magnitudes, exponential_cdf(rate));
            Ok((FittedFamily::Exponential { rate }, ell, ks))
        }
        (None, Some((location, scale, lll, _))) => {
            let ks = ks_distance(intervals, laplace_cdf(location, scale));
            Ok((FittedFamily::Laplace { location, scale }, lll, ks))
        }
        (None, None) => Err(Error::Degenerate(
            "neither family is fittable to these intervals".into(),
        )),
    }
}

/// Fit both families, select the one with higher mean log-likelihood
/// per modeled sample, and report its goodness of fit.
pub fn interval_analysis(intervals: &[f64]) -> Result<IntervalAnalysis> {
    if intervals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("intervals contain non-finite values".into()));
    }
    let (family, log_likelihood, ks) = fit_both(intervals)?;
    Ok(IntervalAnalysis {
        family,
        log_likelihood,
        ks_distance: ks,
        n: intervals.len(),
    })
}

/// Bootstrap percentile 95% CIs for the parameters of the family
/// selected on the full sample. Deterministic given the seed.
pub fn interval_param_bootstrap(
    intervals: &[f64],
    b: usize,
    seed: u64,
) -> Result<IntervalBootstrap> {
    if b < 100 {
        return Err(Error::Invalid(format!(
            "bootstrap replicate count must be >= 100, got {b}"
        )));
    }
    let analysis = interval_analysis(intervals)?;
    let n = intervals.len();
    let mut rng = seeded_rng(seed);
    // replicate parameter draws; columns per parameter
    let mut columns: Vec<Vec<f64>> = match analysis.family {
        FittedFamily::Exponential { .. } => vec![Vec::with_capacity(b)],
        FittedFamily::Laplace { .. } => vec![Vec::with_capacity(b), Vec::with_capacity(b)],
    };
    let mut resample = vec![0.0; n];
    for _ in 0..b {
        for slot in resample.iter_mut() {
            *slot = intervals[rng.gen_range(0..n)];
        }
        match analysis.family {
            FittedFamily::Exponential { .. } => {
                let magnitudes: Vec<f64> = resample
                    .iter()
                    .filter(|&&x| x != 0.0)
                    .map(|&x| x.abs())
                    .collect();
                if let Some((rate, _)) = exponential_fit(&magnitudes) {
                    columns[0].push(rate);
                }
            }
            FittedFamily::Laplace { .. } => {
                if let Some((location, scale, _)) = laplace_fit(&resample) {
                    columns[0].push(location);
                    columns[1].push(scale);
                }
            }
        }
    }
    let names: Vec<&str> = match analysis.family {
        FittedFamily::Exponential { .. } => vec!["rate"],
        FittedFamily::Laplace { .. } => vec!["location", "scale"],
    };
    let intervals_out = names
        .into_iter()
        .zip(columns.iter_mut())
        .map(|(name, column)| {
            let (lo, hi) = percentile_ci_95(column);
            (name.to_string(), lo, hi)
        })
        .collect();
    Ok(IntervalBootstrap {
        point: analysis.family,
        intervals: intervals_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn laplace_sample(n: usize, location: f64, scale: f64, seed: u64) -> Vec<f64> {
        let mut rng = seeded_rng(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen::<f64>() - 0.5;
                location - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            })
            .collect()
    }

    pub(crate) fn exponential_sample(n: usize, rate: f64, seed: u64) -> Vec<f64> {
        let mut rng = seeded_rng(seed);
        (0..n)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln() / rate)
            .collect()
    }

    #[test]
    fn differences_examples() {
        assert_eq!(intervals_from_sequence(&[0.0, 2.0, 1.0]).unwrap(), vec![2.0, -1.0]);
        assert_eq!(intervals_from_sequence(&[5.0, 5.0]).unwrap(), vec![0.0]);
        assert!(intervals_from_sequence(&[0.0]).is_err());
    }

    #[test]
    fn laplace_recovery() {
        let sample = laplace_sample(10_000, 0.0, 2.0, 1);
        let a = interval_analysis(&sample).unwrap();
        match a.family {
            FittedFamily::Laplace { location, scale } => {
                assert!((1.9..=2.1).contains(&scale), "scale {scale}");
                assert!((-0.1..=0.1).contains(&location), "location {location}");
            }
            other => panic!("expected laplace, got {other:?}"),
        }
        assert!(a.ks_distance < 0.05);
    }

    #[test]
    fn exponential_recovery() {
        let sample = exponential_sample(10_000, 1.5, 2);
        let a = interval_analysis(&sample).unwrap();
        match a.family {
            FittedFamily::Exponential { rate } => {
                assert!((1.45..=1.55).contains(&rate), "rate {rate}");
            }
            other => panic!("expected exponential, got {other:?}"),
        }
        assert!(a.ks_distance < 0.05);
    }

    #[test]
    fn symmetric_two_point_location() {
        let mut sample = vec![-1.0; 20];
        sample.extend(vec![1.0; 20]);
        let (location, _, _) = laplace_fit(&sample).unwrap();
        assert_eq!(location, 0.0);
    }

    #[test]
    fn mle_identities() {
        let sample = laplace_sample(500, 1.0, 3.0, 7);
        let (location, scale, _) = laplace_fit(&sample).unwrap();
        // mu is a median: half the sample on each side
        let below = sample.iter().filter(|&&x| x < location).count();
        let above = sample.iter().filter(|&&x| x > location).count();
        assert!(below.abs_diff(above) <= 1);
        let mad = sample.iter().map(|x| (x - location).abs()).sum::<f64>() / sample.len() as f64;
        assert!((scale - mad).abs() < 1e-12);

        let magnitudes: Vec<f64> = sample.iter().map(|x| x.abs()).collect();
        let (rate, _) = exponential_fit(&magnitudes).unwrap();
        let mean = magnitudes.iter().sum::<f64>() / magnitudes.len() as f64;
        assert!((rate * mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sign_symmetry() {
        let sample = laplace_sample(2000, 0.7, 1.3, 9);
        let negated: Vec<f64> = sample.iter().map(|x| -x).collect();
        let (l1, s1, _) = laplace_fit(&sample).unwrap();
        let (l2, s2, _) = laplace_fit(&negated).unwrap();
        assert!((s1 - s2).abs() < 1e-12);
        assert!((l1 + l2).abs() < 1e-9);
        let m1: Vec<f64> = sample.iter().map(|x| x.abs()).collect();
        let m2: Vec<f64> = negated.iter().map(|x| x.abs()).collect();
        assert_eq!(exponential_fit(&m1).unwrap().0, exponential_fit(&m2).unwrap().0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(interval_analysis(&[1.0; 30]).is_err());
        assert!(interval_analysis(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn bootstrap_brackets_point_and_is_deterministic() {
        let sample = laplace_sample(2000, 0.0, 2.0, 3);
        let boot = interval_param_bootstrap(&sample, 500, 4).unwrap();
        let FittedFamily::Laplace { location, scale } = boot.point else {
            panic!("expected laplace")
        };
        let (_, lo, hi) = boot.intervals[1].clone();
        assert!(lo <= scale && scale <= hi);
        let (_, llo, lhi) = boot.intervals[0].clone();
        assert!(llo <= location && location <= lhi);
        let again = interval_param_bootstrap(&sample, 500, 4).unwrap();
        assert_eq!(boot.intervals, again.intervals);
    }

    #[test]
    fn ks_small_for_self_samples() {
        let sample = exponential_sample(10_000, 0.8, 5);
        let a = interval_analysis(&sample).unwrap();
        assert!(a.ks_distance < 0.05);
    }
}
