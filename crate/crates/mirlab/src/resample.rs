//! Shared statistical machinery: Spearman rank correlation, percentile
//! bootstrap, and leave-one-out jackknife over grouped units.
//!
//! All randomized routines take an explicit `u64` seed and use ChaCha8,
//! a named portable generator, so confidence intervals are
//! bit-reproducible across platforms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Linear-interpolation quantile of a sorted slice, q in [0, 1].
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Percentile 95% CI of a replicate distribution.
pub(crate) fn percentile_ci_95(replicates: &mut [f64]) -> (f64, f64) {
    replicates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (
        quantile_sorted(replicates, 0.025),
        quantile_sorted(replicates, 0.975),
    )
}

/// Average ranks (1-based) with average-rank tie handling.
pub(crate) fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // items i..=j are tied; all get the mean of their 1-based ranks
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
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
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation with a two-sided p-value from the
/// large-sample t approximation (n - 2 degrees of freedom).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!(
            "spearman inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::Degenerate(format!(
            "spearman needs at least 3 observations, got {}",
            x.len()
        )));
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(x) || constant(y) {
        return Err(Error::Degenerate(
            "spearman is undefined on a constant input".into(),
        ));
    }
    let rho = pearson(&average_ranks(x), &average_ranks(y));
    let n = x.len() as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * ((n - 2.0) / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, n - 2.0)
            .map_err(|e| Error::Invalid(format!("t distribution: {e}")))?;
        2.0 * dist.sf(t.abs())
    };
    Ok((rho, p))
}

/// Jackknife summary of a Spearman correlation between two pairwise
/// distance structures computed over the same labeled units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JackknifeReport {
    pub rho_point: f64,
    pub rho_jack: f64,
    pub se_jack: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Per-unit leave-one-out rho, so maximal-leverage units are identifiable.
    pub leave_out_values: Vec<(String, f64)>,
}

/// Leave-one-unit-out jackknife of the Spearman correlation between two
/// condensed pairwise-distance vectors.
///
/// The unit (not the pair) is the resampling entity: each unit appears
/// in many pairs, so a pair-level bootstrap would underestimate
/// uncertainty. `dist_a` and `dist_b` receive a unit subset and must
/// return condensed upper-triangle distances in the same pair order.
///
/// The CI is rho_jack +/- 1.96 * SE_jack and is intentionally not
/// clamped to [-1, 1].
pub fn jackknife_spearman<T, FA, FB>(
    units: &[(String, T)],
    dist_a: FA,
    dist_b: FB,
) -> Result<JackknifeReport>
where
    T: Clone,
    FA: Fn(&[(String, T)]) -> Result<Vec<f64>>,
    FB: Fn(&[(String, T)]) -> Result<Vec<f64>>,
{
    let n = units.len();
    if n < 4 {
        return Err(Error::Degenerate(format!(
            "jackknife needs at least 4 units, got {n}"
        )));
    }
    let (rho_point, _) = spearman(&dist_a(units)?, &dist_b(units)?)?;

    let mut leave_out_values = Vec::with_capacity(n);
    for i in 0..n {
        let subset: Vec<(String, T)> = units
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, u)| u.clone())
            .collect();
        let (rho_i, _) = spearman(&dist_a(&subset)?, &dist_b(&subset)?)?;
        leave_out_values.push((units[i].0.clone(), rho_i));
    }

    let nf = n as f64;
    let mean = leave_out_values.iter().map(|(_, r)| r).sum::<f64>() / nf;
    let ss = leave_out_values
        .iter()
        .map(|(_, r)| (r - mean) * (r - mean))
        .sum::<f64>();
    let se_jack = ((nf - 1.0) / nf * ss).sqrt();
    // mean of the leave-one-out rhos
    let rho_jack = mean;
    Ok(JackknifeReport {
        rho_point,
        rho_jack,
        se_jack,
        ci_lo: rho_jack - 1.96 * se_jack,
        ci_hi: rho_jack + 1.96 * se_jack,
        leave_out_values,
    })
}

/// Percentile bootstrap 95% CI of the mean.
pub fn bootstrap_mean_ci(values: &[f64], b: usize, seed: u64) -> Result<(f64, f64, f64)> {
    if values.len() < 3 {
        return Err(Error::Degenerate(format!(
            "bootstrap needs at least 3 values, got {}",
            values.len()
        )));
    }
    if b < 100 {
        return Err(Error::Invalid(format!(
            "bootstrap replicate count must be >= 100, got {b}"
        )));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut rng = seeded_rng(seed);
    let mut replicates = Vec::with_capacity(b);
    for _ in 0..b {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += values[rng.gen_range(0..n)];
        }
        replicates.push(sum / n as f64);
    }
    let (lo, hi) = percentile_ci_95(&mut replicates);
    Ok((mean, lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn spearman_monotone_is_one() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| v * v + 1.0).collect();
        let (rho, p) = spearman(&x, &y).unwrap();
        assert_eq!(rho, 1.0);
        assert_eq!(p, 0.0);
        let rev: Vec<f64> = x.iter().rev().cloned().collect();
        let (rho, _) = spearman(&x, &rev).unwrap();
        assert_eq!(rho, -1.0);
    }

    #[test]
    fn spearman_hand_example() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [1.0, 3.0, 2.0, 5.0, 4.0];
        let (rho, p) = spearman(&x, &y).unwrap();
        assert!((rho - 0.8).abs() < 1e-12);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn spearman_rejects_constant_input() {
        let x = [1.0, 1.0, 1.0, 1.0];
        let y = [1.0, 2.0, 3.0, 4.0];
        assert!(spearman(&x, &y).is_err());
        assert!(spearman(&y, &x).is_err());
    }

    #[test]
    fn tied_ranks_are_averaged() {
        assert_eq!(average_ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn bootstrap_constant_collapses() {
        let (mean, lo, hi) = bootstrap_mean_ci(&[3.0; 10], 200, 1).unwrap();
        assert_eq!((mean, lo, hi), (3.0, 3.0, 3.0));
    }

    #[test]
    fn bootstrap_is_deterministic_per_seed() {
        let v: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let a = bootstrap_mean_ci(&v, 500, 7).unwrap();
        let b = bootstrap_mean_ci(&v, 500, 7).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_mean_ci(&v, 500, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bootstrap_width_tracks_clt() {
        // standard-normal-ish sample via Box-Muller from a seeded stream
        let mut rng = seeded_rng(42);
        let n = 1000;
        let v: Vec<f64> = (0..n)
            .map(|_| {
                let u1: f64 = rng.gen::<f64>().max(1e-12);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let (_, lo, hi) = bootstrap_mean_ci(&v, 1000, 3).unwrap();
        let width = hi - lo;
        let analytic = 2.0 * 1.96 / (n as f64).sqrt();
        assert!(
            (width - analytic).abs() / analytic < 0.3,
            "width {width} vs analytic {analytic}"
        );
    }

    #[test]
    fn jackknife_identical_distances() {
        let units: Vec<(String, Vec<f64>)> = (0..6)
            .map(|i| (format!("u{i}"), vec![i as f64, (i * i) as f64]))
            .collect();
        let dist = |us: &[(String, Vec<f64>)]| -> Result<Vec<f64>> {
            let mut out = Vec::new();
            for i in 0..us.len() {
                for j in i + 1..us.len() {
                    out.push((us[i].1[0] - us[j].1[0]).abs() + (us[i].1[1] - us[j].1[1]).abs());
                }
            }
            Ok(out)
        };
        let report = jackknife_spearman(&units, dist, dist).unwrap();
        assert_eq!(report.rho_point, 1.0);
        assert_eq!(report.se_jack, 0.0);
        assert_eq!(report.leave_out_values.len(), units.len());
        assert!((report.ci_lo - report.ci_hi).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn spearman_is_symmetric_and_monotone_invariant(
            xy in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0), 5..25)
        ) {
            let x: Vec<f64> = xy.iter().map(|p| p.0).collect();
            let y: Vec<f64> = xy.iter().map(|p| p.1).collect();
            if let (Ok((a, _)), Ok((b, _))) = (spearman(&x, &y), spearman(&y, &x)) {
                prop_assert!((a - b).abs() < 1e-12);
                let fx: Vec<f64> = x.iter().map(|v| v.exp()).collect();
                let (c, _) = spearman(&fx, &y).unwrap();
                prop_assert!((a - c).abs() < 1e-9);
            }
        }

        #[test]
        fn bootstrap_ci_is_ordered(values in proptest::collection::vec(-50.0f64..50.0, 3..30)) {
            let (_, lo, hi) = bootstrap_mean_ci(&values, 100, 11).unwrap();
            prop_assert!(lo <= hi);
        }
    }
}
