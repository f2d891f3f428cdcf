//! Shannon entropy, Kullback-Leibler and Jensen-Shannon divergences,
//! and the pairwise divergence matrix. Log base 2 throughout, so every
//! quantity is in bits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{counts_from_sequence, Alphabet, ProbabilityVector, SymbolSequence};
use crate::error::{Error, Result};
use crate::resample::{percentile_ci_95, seeded_rng};

/// Labeled square matrix of pairwise divergences in bits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivergenceMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub symmetrized: bool,
}

impl DivergenceMatrix {
    /// Condensed upper-triangle distances in (i, j) order, i < j.
    pub fn condensed(&self) -> Vec<f64> {
        let n = self.labels.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.values[i][j]);
            }
        }
        out
    }
}

/// H(P) = -sum_i P(i) log2 P(i), with 0 * log 0 := 0.
pub fn shannon_entropy(p: &ProbabilityVector) -> f64 {
    -p.probs()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// D_KL(P || Q) = sum_i P(i) log2 [P(i) / Q(i)].
///
/// Refuses a q with zero mass where p is positive instead of returning
/// infinity; smooth q first (any alpha > 0 guarantees full support).
pub fn kl_divergence(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Invalid(format!(
            "distributions live on different alphabets: {} vs {} symbols",
            p.len(),
            q.len()
        )));
    }
    let mut d = 0.0;
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::Invalid(
                    "q has zero mass where p is positive; smooth q before computing KL".into(),
                ));
            }
            d += pi * (pi / qi).log2();
        }
    }
    Ok(d)
}

/// Jensen-Shannon divergence with mixture M = (P + Q) / 2; bounded by 1 bit.
pub fn js_divergence(p: &ProbabilityVector, q: &ProbabilityVector) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Invalid(format!(
            "distributions live on different alphabets: {} vs {} symbols",
            p.len(),
            q.len()
        )));
    }
    let m: Vec<f64> = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&a, &b)| 0.5 * (a + b))
        .collect();
    let term = |x: &ProbabilityVector| -> f64 {
        x.probs()
            .iter()
            .zip(&m)
            .filter(|(&xi, _)| xi > 0.0)
            .map(|(&xi, &mi)| xi * (xi / mi).log2())
            .sum()
    };
    Ok(0.5 * term(p) + 0.5 * term(q))
}

/// Pairwise KL matrix over labeled distributions.
///
/// With `symmetrize` set, entry (i, j) is the mean of the two directed
/// divergences, so the matrix equals its transpose exactly.
pub fn kl_pairwise_matrix(
    dists: &[(String, ProbabilityVector)],
    symmetrize: bool,
) -> Result<DivergenceMatrix> {
    if dists.len() < 2 {
        return Err(Error::Degenerate(format!(
            "pairwise matrix needs at least 2 distributions, got {}",
            dists.len()
        )));
    }
    let n = dists.len();
    let size = dists[0].1.len();
    for (label, p) in dists {
        if p.len() != size {
            return Err(Error::Invalid(format!(
                "distribution {label:?} has {} symbols, expected {size}",
                p.len()
            )));
        }
    }
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                values[i][j] = kl_divergence(&dists[i].1, &dists[j].1)?;
            }
        }
    }
    if symmetrize {
        for i in 0..n {
            for j in i + 1..n {
                let m = 0.5 * values[i][j] + 0.5 * values[j][i];
                values[i][j] = m;
                values[j][i] = m;
            }
        }
    }
    Ok(DivergenceMatrix {
        labels: dists.iter().map(|(l, _)| l.clone()).collect(),
        values,
        symmetrized: symmetrize,
    })
}

fn resampled_counts(
    seq: &SymbolSequence,
    alphabet: &Alphabet,
    rng: &mut impl Rng,
) -> Result<crate::distributions::CountVector> {
    let items = seq.items();
    let resampled = SymbolSequence::new(
        (0..items.len()).map(|_| items[rng.gen_range(0..items.len())].clone()),
    );
    counts_from_sequence(&resampled, alphabet)
}

/// Bootstrap percentile 95% CI of the smoothed KL divergence between two
/// symbol sequences. Symbols are resampled with replacement within each
/// sequence; deterministic given the seed.
pub fn divergence_bootstrap_ci(
    seq_p: &SymbolSequence,
    seq_q: &SymbolSequence,
    alphabet: &Alphabet,
    alpha: f64,
    b: usize,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    if seq_p.is_empty() || seq_q.is_empty() {
        return Err(Error::Degenerate(
            "bootstrap requires non-empty sequences".into(),
        ));
    }
    if b < 100 {
        return Err(Error::Invalid(format!(
            "bootstrap replicate count must be >= 100, got {b}"
        )));
    }
    let point = kl_divergence(
        &counts_from_sequence(seq_p, alphabet)?.smooth(alpha)?,
        &counts_from_sequence(seq_q, alphabet)?.smooth(alpha)?,
    )?;
    let mut rng = seeded_rng(seed);
    let mut replicates = Vec::with_capacity(b);
    for _ in 0..b {
        let p = resampled_counts(seq_p, alphabet, &mut rng)?.smooth(alpha)?;
        let q = resampled_counts(seq_q, alphabet, &mut rng)?.smooth(alpha)?;
        replicates.push(kl_divergence(&p, &q)?);
    }
    let (lo, hi) = percentile_ci_95(&mut replicates);
    Ok((point, lo, hi))
}
