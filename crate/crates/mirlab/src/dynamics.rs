//! Chi-squared stationarity testing with Cramer's V, and the Higuchi
//! fractal dimension.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::distributions::{collapse_duplicates, Alphabet, SymbolSequence};
use crate::error::{Error, Result};
use crate::rankshape::ols_slope_r2;

/// Default number of contiguous segments for the stationarity test.
pub const DEFAULT_SEGMENTS: usize = 4;

/// Result of the chi-squared test of independence between segment and
/// symbol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationarityResult {
    pub chi2: f64,
    pub p_value: f64,
    pub cramers_v: f64,
    pub n_segments: usize,
    pub df: usize,
    /// Set when any expected cell count is below 5, where the
    /// chi-squared approximation is weak.
    pub low_count_warning: bool,
}

/// Higuchi slope-based dimension estimate with the goodness of fit of
/// the log-log regression.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FractalDimension {
    pub d: f64,
    pub r_squared: f64,
    pub k_max: usize,
}

/// Default Higuchi scale cap for a series of length `n`.
pub fn default_k_max(n: usize) -> usize {
    (n / 4).min(16)
}

/// Split the sequence into `n_segments` contiguous equal-length
/// segments (remainder to the last), build the segment x symbol
/// contingency table, and run the Pearson chi-squared test of
/// independence. Symbols with zero total count are dropped before the
/// test.
pub fn stationarity_test(
    seq: &SymbolSequence,
    alphabet: &Alphabet,
    n_segments: usize,
    collapse: bool,
) -> Result<StationarityResult> {
    if n_segments < 2 {
        return Err(Error::Invalid(format!(
            "stationarity test needs at least 2 segments, got {n_segments}"
        )));
    }
    let seq = if collapse {
        collapse_duplicates(seq)?
    } else {
        seq.clone()
    };
    let len = seq.len();
    if len < n_segments {
        return Err(Error::Degenerate(format!(
            "sequence of length {len} cannot fill {n_segments} non-empty segments"
        )));
    }
    let n_sym = alphabet.size();
    let seg_len = len / n_segments;
    let mut table = vec![vec![0u64; n_sym]; n_segments];
    for (i, item) in seq.items().iter().enumerate() {
        let seg = (i / seg_len).min(n_segments - 1);
        let sym = alphabet
            .index_of(item)
            .ok_or_else(|| Error::UnknownSymbol(item.clone()))?;
        table[seg][sym] += 1;
    }

    // drop symbols with zero total count
    let col_totals: Vec<u64> = (0..n_sym)
        .map(|j| table.iter().map(|row| row[j]).sum())
        .collect();
    let used: Vec<usize> = (0..n_sym).filter(|&j| col_totals[j] > 0).collect();
    if used.len() < 2 {
        return Err(Error::Degenerate(
            "fewer than 2 symbols with positive count; test is undefined".into(),
        ));
    }
    let row_totals: Vec<u64> = table.iter().map(|row| row.iter().sum()).collect();
    let total = len as f64;

    let mut chi2 = 0.0;
    let mut low_count_warning = false;
    for (seg, row) in table.iter().enumerate() {
        for &j in &used {
            let expected = row_totals[seg] as f64 * col_totals[j] as f64 / total;
            if expected < 5.0 {
                low_count_warning = true;
            }
            if expected > 0.0 {
                let diff = row[j] as f64 - expected;
                chi2 += diff * diff / expected;
            }
        }
    }

    let df = (n_segments - 1) * (used.len() - 1);
    let p_value = if chi2 == 0.0 {
        1.0
    } else {
        let dist = ChiSquared::new(df as f64)
            .map_err(|e| Error::Invalid(format!("chi-squared distribution: {e}")))?;
        dist.sf(chi2)
    };
    let denom = total * (n_segments.min(used.len()) - 1) as f64;
    let cramers_v = (chi2 / denom).sqrt().min(1.0);

    Ok(StationarityResult {
        chi2,
        p_value,
        cramers_v,
        n_segments,
        df,
        low_count_warning,
    })
}

/// Higuchi (1988) fractal dimension of a 1-D series.
///
/// For each scale k and offset m, the curve length is
/// L_m(k) = ((N-1) / (floor((N-m)/k) * k^2)) * sum |x[m+i*k] - x[m+(i-1)*k]|
/// (1-based m); L(k) is the mean over offsets, and d is the slope of
/// the OLS fit of log L(k) against log(1/k).
pub fn higuchi_fractal_dimension(series: &[f64], k_max: usize) -> Result<FractalDimension> {
    let n = series.len();
    if k_max < 2 {
        return Err(Error::Invalid(format!("k_max must be >= 2, got {k_max}")));
    }
    if n < 4 * k_max {
        return Err(Error::Degenerate(format!(
            "series of length {n} is too short for k_max {k_max} (need >= {})",
            4 * k_max
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("series contains non-finite values".into()));
    }
    if series.iter().all(|&v| v == series[0]) {
        return Err(Error::Degenerate(
            "constant series has zero curve length".into(),
        ));
    }

    let mut log_inv_k = Vec::with_capacity(k_max);
    let mut log_l = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut lengths = Vec::with_capacity(k);
        for m in 1..=k {
            let steps = (n - m) / k;
            if steps == 0 {
                continue;
            }
            let mut sum = 0.0;
            for i in 1..=steps {
                // 1-based series indexing from the formulation
                sum += (series[m + i * k - 1] - series[m + (i - 1) * k - 1]).abs();
            }
            lengths.push((n - 1) as f64 / (steps * k * k) as f64 * sum);
        }
        let l_k = lengths.iter().sum::<f64>() / lengths.len() as f64;
        if l_k <= 0.0 {
            // possible for locally constant series at some scale
            continue;
        }
        log_inv_k.push(-(k as f64).ln());
        log_l.push(l_k.ln());
    }
    if log_l.len() < 2 {
        return Err(Error::Degenerate(
            "not enough positive curve lengths for a log-log fit".into(),
        ));
    }
    let (slope, r_squared) = ols_slope_r2(&log_inv_k, &log_l);
    Ok(FractalDimension {
        d: slope,
        r_squared,
        k_max,
    })
}
