//! Alphabets, counting, smoothing, and sequence preprocessing shared by
//! every metric.
//!
//! All counting is exact integer arithmetic; reals only enter through
//! [`CountVector::smooth`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default smoothing pseudo-count (Jeffreys-Laplace).
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Bundled 15-symbol scale-degree alphabet.
///
/// The symbol list is an implementation choice: it covers the major and
/// minor triad on every diatonic degree plus the flat submediant, which
/// is the only chromatic degree the source methodology names explicitly.
/// Any user-supplied alphabet of size >= 2 is accepted everywhere.
pub const DEFAULT_SCALE_DEGREES: [&str; 15] = [
    "I", "i", "II", "ii", "III", "iii", "IV", "iv", "V", "v", "VI", "vi", "VII", "vii", "bVI",
];

/// An ordered set of distinct symbol labels with a total index bijection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    symbols: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl<'de> Deserialize<'de> for Alphabet {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            symbols: Vec<String>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Alphabet::new(raw.symbols).map_err(serde::de::Error::custom)
    }
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.len() < 2 {
            return Err(Error::Invalid(format!(
                "alphabet must have at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate alphabet symbol {s:?}")));
            }
        }
        Ok(Self { symbols, index })
    }

    /// The bundled 15-symbol scale-degree alphabet.
    pub fn default_scale_degrees() -> Self {
        Self::new(DEFAULT_SCALE_DEGREES).expect("bundled alphabet is valid")
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }
}

/// Per-symbol occurrence counts over a fixed alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVector {
    counts: Vec<u64>,
    total: u64,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Jeffreys-Laplace smoothing: probs[i] = (counts[i] + alpha) / (total + alpha * N).
    ///
    /// The output is strictly positive for every symbol when alpha > 0.
    pub fn smooth(&self, alpha: f64) -> Result<ProbabilityVector> {
        if !(alpha > 0.0) {
            return Err(Error::Invalid(format!(
                "smoothing alpha must be > 0, got {alpha}"
            )));
        }
        let n = self.counts.len() as f64;
        let denom = self.total as f64 + alpha * n;
        let probs = self
            .counts
            .iter()
            .map(|&c| (c as f64 + alpha) / denom)
            .collect();
        ProbabilityVector::new(probs)
    }
}

/// A normalized distribution over a fixed symbol alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVector {
    probs: Vec<f64>,
}

impl ProbabilityVector {
    /// Tolerance on the sum-to-one invariant.
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::Invalid(format!(
                "probability vector needs at least 2 entries, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|&&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Invalid(format!(
                "probability entries must be finite and non-negative, got {p}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::Invalid(format!(
                "probabilities must sum to 1 within {}, got {sum}",
                Self::SUM_TOLERANCE
            )));
        }
        Ok(Self { probs })
    }

    /// Normalize arbitrary non-negative weights into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::Degenerate(
                "cannot normalize all-zero weights".into(),
            ));
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// An ordered list of symbols, each a member of an alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolSequence {
    items: Vec<String>,
}

impl SymbolSequence {
    pub fn new<S: Into<String>>(items: impl IntoIterator<Item = S>) -> Self {
        Self {
            items: items.into_iter().map(Into::into).collect(),
        }
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Replace every run of identical adjacent symbols by a single symbol.
///
/// Idempotent; order of first occurrences is preserved.
pub fn collapse_duplicates(seq: &SymbolSequence) -> Result<SymbolSequence> {
    if seq.is_empty() {
        return Err(Error::Degenerate(
            "cannot collapse duplicates of an empty sequence".into(),
        ));
    }
    let mut out: Vec<String> = Vec::with_capacity(seq.len());
    for item in seq.items() {
        if out.last().map(String::as_str) != Some(item.as_str()) {
            out.push(item.clone());
        }
    }
    Ok(SymbolSequence { items: out })
}

/// Count per-symbol occurrences of `seq` over `alphabet`.
pub fn counts_from_sequence(seq: &SymbolSequence, alphabet: &Alphabet) -> Result<CountVector> {
    if seq.is_empty() {
        return Err(Error::Degenerate("cannot count an empty sequence".into()));
    }
    let mut counts = vec![0u64; alphabet.size()];
    for item in seq.items() {
        let i = alphabet
            .index_of(item)
            .ok_or_else(|| Error::UnknownSymbol(item.clone()))?;
        counts[i] += 1;
    }
    Ok(CountVector::new(counts))
}

/// Count adjacent s -> t transitions of `seq` into an N x N matrix.
///
/// With `collapse` set, consecutive duplicates are collapsed first, so
/// the resulting matrix is hollow (zero diagonal).
pub fn bigram_counts(
    seq: &SymbolSequence,
    alphabet: &Alphabet,
    collapse: bool,
) -> Result<Vec<Vec<u64>>> {
    let seq = if collapse {
        collapse_duplicates(seq)?
    } else {
        seq.clone()
    };
    if seq.len() < 2 {
        return Err(Error::Degenerate(format!(
            "sequence too short for bigram counts: {} item(s){}",
            seq.len(),
            if collapse { " after collapsing" } else { "" }
        )));
    }
    let n = alphabet.size();
    let mut matrix = vec![vec![0u64; n]; n];
    let indices: Vec<usize> = seq
        .items()
        .iter()
        .map(|s| {
            alphabet
                .index_of(s)
                .ok_or_else(|| Error::UnknownSymbol(s.clone()))
        })
        .collect::<Result<_>>()?;
    for pair in indices.windows(2) {
        matrix[pair[0]][pair[1]] += 1;
    }
    Ok(matrix)
}
