//! Input-file loaders shared by the CLI: symbol sequences, alphabets,
//! tempo curves, bigram-count matrices, corpus manifests, reference
//! divergence matrices, and pairing files.
//!
//! Every parse failure is reported with the offending file path and the
//! byte offset of the error.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distributions::{Alphabet, SymbolSequence};
use crate::error::{Error, Result};
use crate::information::DivergenceMatrix;
use crate::rubato::TempoCurve;

fn file_error(path: &Path, message: impl Into<String>) -> Error {
    Error::InputFile {
        path: path.display().to_string(),
        message: message.into(),
    }
}

pub(crate) fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| file_error(path, e.to_string()))
}

/// Byte offset of a serde_json error position within `content`.
fn json_byte_offset(content: &str, err: &serde_json::Error) -> usize {
    let (line, column) = (err.line(), err.column());
    if line == 0 {
        return 0;
    }
    let mut offset = 0usize;
    for (i, l) in content.split('\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len() + 1;
    }
    content.len()
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, content: &str) -> Result<T> {
    serde_json::from_str(content).map_err(|e| {
        file_error(
            path,
            format!("{e} (byte offset {})", json_byte_offset(content, &e)),
        )
    })
}

/// Load a symbol sequence: a JSON array of strings, or newline-delimited
/// plain text (blank lines ignored).
pub fn load_sequence(path: &Path) -> Result<SymbolSequence> {
    let content = read(path)?;
    if content.trim_start().starts_with('[') {
        let items: Vec<String> = parse_json(path, &content)?;
        Ok(SymbolSequence::new(items))
    } else {
        Ok(SymbolSequence::new(
            content
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string),
        ))
    }
}

/// Load an alphabet: a JSON array of distinct strings.
pub fn load_alphabet(path: &Path) -> Result<Alphabet> {
    let content = read(path)?;
    let symbols: Vec<String> = parse_json(path, &content)?;
    Alphabet::new(symbols).map_err(|e| file_error(path, e.to_string()))
}

/// Load a tempo curve: JSON object {"bpm": [reals]}.
pub fn load_tempo_curve(path: &Path) -> Result<TempoCurve> {
    #[derive(Deserialize)]
    struct CurveFile {
        bpm: Vec<f64>,
    }
    let content = read(path)?;
    let parsed: CurveFile = parse_json(path, &content)?;
    TempoCurve::new(parsed.bpm).map_err(|e| file_error(path, e.to_string()))
}

/// Load a JSON array of reals (Higuchi series, interval lists).
pub fn load_reals(path: &Path) -> Result<Vec<f64>> {
    let content = read(path)?;
    parse_json(path, &content)
}

/// A bigram-count matrix bound to its alphabet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BigramMatrixFile {
    pub alphabet: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

/// Load a bigram matrix: JSON {"alphabet": [...], "counts": [[...]]}.
pub fn load_bigram_matrix(path: &Path) -> Result<(Alphabet, Vec<Vec<u64>>)> {
    let content = read(path)?;
    let parsed: BigramMatrixFile = parse_json(path, &content)?;
    let alphabet = Alphabet::new(parsed.alphabet).map_err(|e| file_error(path, e.to_string()))?;
    let n = alphabet.size();
    if parsed.counts.len() != n || parsed.counts.iter().any(|row| row.len() != n) {
        return Err(file_error(
            path,
            format!("counts matrix must be {n}x{n} to match the alphabet"),
        ));
    }
    Ok((alphabet, parsed.counts))
}

/// Load a reference divergence matrix (as emitted by the kl subcommand).
pub fn load_divergence_matrix(path: &Path) -> Result<DivergenceMatrix> {
    let content = read(path)?;
    let matrix: DivergenceMatrix = parse_json(path, &content)?;
    let n = matrix.labels.len();
    if matrix.values.len() != n || matrix.values.iter().any(|row| row.len() != n) {
        return Err(file_error(
            path,
            format!("values must form an {n}x{n} matrix matching the labels"),
        ));
    }
    Ok(matrix)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Sequence,
    TempoCurve,
    BigramMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub label: String,
    pub path: PathBuf,
    pub kind: EntryKind,
}

/// A labeled list of corpus files. Relative entry paths are resolved
/// against the manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub entries: Vec<ManifestEntry>,
}

pub fn load_manifest(path: &Path) -> Result<CorpusManifest> {
    let content = read(path)?;
    let mut manifest: CorpusManifest = parse_json(path, &content)?;
    if manifest.entries.is_empty() {
        return Err(file_error(path, "manifest has no entries"));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    for entry in &mut manifest.entries {
        if entry.label.is_empty() {
            return Err(file_error(path, "manifest entry has an empty label"));
        }
        if entry.path.is_relative() {
            entry.path = base.join(&entry.path);
        }
        if !entry.path.exists() {
            return Err(file_error(
                path,
                format!("entry file does not exist: {}", entry.path.display()),
            ));
        }
    }
    Ok(manifest)
}

/// One before/after pair of curve ids belonging to the same unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairEntry {
    pub unit: String,
    pub before: String,
    pub after: String,
}

/// Load a pairing file: JSON array of {"unit", "before", "after"} where
/// before/after name curve ids (file stems) from the manifest.
pub fn load_pairing(path: &Path) -> Result<Vec<PairEntry>> {
    let content = read(path)?;
    let pairs: Vec<PairEntry> = parse_json(path, &content)?;
    if pairs.is_empty() {
        return Err(file_error(path, "pairing file has no entries"));
    }
    Ok(pairs)
}
