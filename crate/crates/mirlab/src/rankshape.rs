//! Zipf rank-frequency fitting and the multi-dimensional Gini
//! coefficient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power-law fit f_r ~ 1/r^alpha of a rank-frequency profile, with the
/// goodness of fit reported as R^2 of the log-log regression.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZipfFit {
    pub alpha: f64,
    pub r_squared: f64,
    pub n_ranks: usize,
}

/// Per-dimension Gini scores of a descriptor matrix. Columns that could
/// not be scored (all-zero) carry an error message instead of a value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GiniReport {
    pub per_dimension: Vec<DimensionGini>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionGini {
    pub label: String,
    pub gini: Option<f64>,
    pub error: Option<String>,
}

/// Ordinary least squares of y against x; returns (slope, r_squared).
///
/// When y has zero variance the flat fit is perfect: slope 0, R^2 = 1.
pub(crate) fn ols_slope_r2(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if syy == 0.0 {
        return (0.0, 1.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    (slope, 1.0 - ss_res / syy)
}

/// Fit f_r ~ 1/r^alpha by OLS of log2 f against log2 r over all nonzero
/// frequencies, sorted descending and ranked from 1.
///
/// Zero frequencies are dropped before ranking (their log is undefined).
pub fn zipf_fit(freqs: &[f64]) -> Result<ZipfFit> {
    if let Some(f) = freqs.iter().find(|&&f| f < 0.0 || !f.is_finite()) {
        return Err(Error::Invalid(format!(
            "frequencies must be finite and non-negative, got {f}"
        )));
    }
    let mut positive: Vec<f64> = freqs.iter().copied().filter(|&f| f > 0.0).collect();
    if positive.len() < 3 {
        return Err(Error::Degenerate(format!(
            "zipf fit needs at least 3 positive frequencies, got {}",
            positive.len()
        )));
    }
    positive.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let log_r: Vec<f64> = (1..=positive.len()).map(|r| (r as f64).log2()).collect();
    let log_f: Vec<f64> = positive.iter().map(|f| f.log2()).collect();
    let (slope, r_squared) = ols_slope_r2(&log_r, &log_f);
    Ok(ZipfFit {
        alpha: -slope,
        r_squared,
        n_ranks: positive.len(),
    })
}

/// Gini coefficient G = sum_ij |x_i - x_j| / (2 n sum x), computed with
/// the O(n log n) sorted formulation. Scale-invariant, in [0, 1).
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::Degenerate(format!(
            "gini needs at least 2 values, got {}",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|&&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Invalid(format!(
            "gini values must be finite and non-negative, got {v}"
        )));
    }
    let total: f64 = values.iter().sum();
    if total == 0.0 {
        return Err(Error::Degenerate("gini is undefined on all-zero values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (i as f64 + 1.0) * x)
        .sum();
    Ok(2.0 * weighted / (n * total) - (n + 1.0) / n)
}

/// Apply the scalar Gini to each labeled column of a row-major matrix.
pub fn gini_multi(rows: &[Vec<f64>], labels: &[String]) -> Result<GiniReport> {
    if rows.len() < 2 {
        return Err(Error::Degenerate(format!(
            "gini matrix needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let width = labels.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::Invalid(format!(
                "row {i} has {} entries, expected {width}",
                row.len()
            )));
        }
    }
    let mut seen = std::collections::HashSet::new();
    for label in labels {
        if !seen.insert(label) {
            return Err(Error::Invalid(format!("duplicate column label {label:?}")));
        }
    }
    let per_dimension = labels
        .iter()
        .enumerate()
        .map(|(j, label)| {
            let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            match gini(&column) {
                Ok(g) => DimensionGini {
                    label: label.clone(),
                    gini: Some(g),
                    error: None,
                },
                Err(e) => DimensionGini {
                    label: label.clone(),
                    gini: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(GiniReport { per_dimension })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute-force pairwise-difference Gini used as the oracle.
    fn gini_pairwise(values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let total: f64 = values.iter().sum();
        let mut acc = 0.0;
        for &a in values {
            for &b in values {
                acc += (a - b).abs();
            }
        }
        acc / (2.0 * n * total)
    }

    #[test]
    fn zipf_perfect_law() {
        let freqs: Vec<f64> = (1..=50).map(|r| 1.0 / r as f64).collect();
        let fit = zipf_fit(&freqs).unwrap();
        assert!((fit.alpha - 1.0).abs() < 1e-9);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert_eq!(fit.n_ranks, 50);
    }

    #[test]
    fn zipf_flat_profile() {
        let fit = zipf_fit(&[2.0; 10]).unwrap();
        assert_eq!(fit.alpha, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn zipf_alpha_two() {
        let freqs: Vec<f64> = (1..=50).map(|r| 1.0 / (r * r) as f64).collect();
        let fit = zipf_fit(&freqs).unwrap();
        assert!((fit.alpha - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zipf_degenerate_inputs() {
        assert!(zipf_fit(&[1.0, 2.0]).is_err());
        assert!(zipf_fit(&[1.0, 0.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn gini_anchors() {
        assert_eq!(gini(&[5.0; 8]).unwrap(), 0.0);
        let g = gini(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((g - 0.75).abs() < 1e-15);
        let g = gini(&[1.0, 3.0]).unwrap();
        assert!((g - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gini_degenerate_inputs() {
        assert!(gini(&[1.0]).is_err());
        assert!(gini(&[0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gini_multi_composes() {
        let labels: Vec<String> = ["h", "d", "r"].iter().map(|s| s.to_string()).collect();
        let rows = vec![
            vec![1.0, 10.0, 0.0],
            vec![3.0, 30.0, 0.0],
            vec![2.0, 20.0, 0.0],
        ];
        let report = gini_multi(&rows, &labels).unwrap();
        let col0 = gini(&[1.0, 3.0, 2.0]).unwrap();
        assert_eq!(report.per_dimension[0].gini, Some(col0));
        // column scaled by 10: same gini
        assert_eq!(report.per_dimension[1].gini, Some(col0));
        // all-zero column: per-column error, others still computed
        assert!(report.per_dimension[2].gini.is_none());
        assert!(report.per_dimension[2].error.is_some());
    }

    proptest! {
        #[test]
        fn zipf_scale_free(
            freqs in proptest::collection::vec(0.01f64..100.0, 3..40),
            c in 0.001f64..1000.0,
        ) {
            let fit = zipf_fit(&freqs).unwrap();
            let scaled: Vec<f64> = freqs.iter().map(|f| f * c).collect();
            let fit2 = zipf_fit(&scaled).unwrap();
            prop_assert!((fit.alpha - fit2.alpha).abs() < 1e-8);
            prop_assert!((fit.r_squared - fit2.r_squared).abs() < 1e-8);
        }

        #[test]
        fn gini_matches_pairwise_oracle_and_scale(
            values in proptest::collection::vec(0.0f64..100.0, 2..30),
            c in 0.01f64..100.0,
        ) {
            prop_assume!(values.iter().sum::<f64>() > 0.0);
            let g = gini(&values).unwrap();
            prop_assert!((g - gini_pairwise(&values)).abs() < 1e-9);
            prop_assert!((0.0..1.0).contains(&g) || g.abs() < 1e-12);
            let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
            prop_assert!((gini(&scaled).unwrap() - g).abs() < 1e-9);
        }
    }

    #[test]
    fn gini_one_hot_approaches_one() {
        for n in 2..=100 {
            let mut v = vec![0.0; n];
            v[0] = 1.0;
            let g = gini(&v).unwrap();
            assert!((g - (1.0 - 1.0 / n as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn gini_weak_transfer_principle() {
        // moving mass from a larger value to a smaller one without
        // reversing their order must not increase G
        let mut rng_state = 123456789u64;
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (rng_state >> 33) as f64 / (1u64 << 31) as f64
        };
        for _ in 0..200 {
            let n = 5 + (next() * 10.0) as usize;
            let values: Vec<f64> = (0..n).map(|_| next() * 10.0 + 0.1).collect();
            let mut i = (next() * n as f64) as usize % n;
            let mut j = (next() * n as f64) as usize % n;
            if values[i] < values[j] {
                std::mem::swap(&mut i, &mut j);
            }
            if i == j || values[i] == values[j] {
                continue;
            }
            let delta = (values[i] - values[j]) / 2.0 * next();
            let mut transferred = values.clone();
            transferred[i] -= delta;
            transferred[j] += delta;
            let before = gini_pairwise(&values);
            let after = gini_pairwise(&transferred);
            assert!(after <= before + 1e-12);
            assert!((gini(&transferred).unwrap() - after).abs() < 1e-9);
        }
    }
}
