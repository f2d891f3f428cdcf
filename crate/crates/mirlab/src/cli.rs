//! Command-line front-end: per-metric subcommands, the two case-study
//! pipelines, and JSON/CSV report emission.
//!
//! Every run emits a [`RunReport`] carrying the tool version, the seed,
//! and the full parameter set, so any report can be reproduced
//! byte-identically by re-running with the recorded values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::chordnet::{
    self, DEFAULT_DAMPING, DEFAULT_PRUNE_THRESHOLD, NetworkFeatureVector,
};
use crate::distributions::{
    self, Alphabet, CountVector, SymbolSequence, DEFAULT_ALPHA,
};
use crate::dynamics;
use crate::error::{Error, Result};
use crate::information;
use crate::intervals;
use crate::io::{self, EntryKind};
use crate::rankshape;
use crate::resample;
use crate::rubato::{
    self, ClassifierThresholds, LabeledCurve, DEFAULT_MIN_SAMPLES,
};

/// Seed used when --seed is not given, so casual runs are reproducible.
pub const DEFAULT_SEED: u64 = 42;

/// Bootstrap replicate count used when --replicates is not given.
pub const DEFAULT_REPLICATES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Symbolic-music corpus metrics: entropy and divergence, rank-shape
/// statistics, chord-transition networks, stationarity and fractal
/// measures, rubato classification, and interval fitting.
#[derive(Debug, Parser)]
#[command(name = "mirlab", version)]
pub struct Cli {
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// RNG seed for every resampling operation.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Smoothing pseudo-count added to every alphabet cell.
    #[arg(long, global = true, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shannon entropy (bits) of a smoothed symbol distribution.
    Entropy {
        /// Symbol sequence file (JSON array or newline text).
        #[arg(long, conflicts_with = "counts")]
        sequence: Option<PathBuf>,
        /// JSON array of per-symbol counts.
        #[arg(long)]
        counts: Option<PathBuf>,
        /// Alphabet file; defaults to the bundled scale degrees when the
        /// sequence fits, otherwise to the observed symbols.
        #[arg(long)]
        alphabet: Option<PathBuf>,
    },
    /// Kullback-Leibler divergence between smoothed distributions.
    Kl {
        /// First sequence file.
        #[arg(long, requires = "q", conflicts_with = "manifest")]
        p: Option<PathBuf>,
        /// Second sequence file.
        #[arg(long, requires = "p")]
        q: Option<PathBuf>,
        /// Corpus manifest of sequences; emits the pairwise matrix over
        /// labels (sequences aggregated per label).
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Replace each off-diagonal pair by the mean of both directions.
        #[arg(long)]
        symmetrize: bool,
        /// Percentile bootstrap CI with this many replicates (two-file
        /// mode only; symbols resampled within each sequence).
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        alphabet: Option<PathBuf>,
    },
    /// Jensen-Shannon divergence between smoothed distributions.
    Js {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        #[arg(long)]
        alphabet: Option<PathBuf>,
    },
    /// Zipf rank-frequency fit on a frequency profile.
    Zipf {
        /// JSON array of frequencies.
        #[arg(long, conflicts_with = "sequence")]
        freqs: Option<PathBuf>,
        /// Symbol sequence file; frequencies are its symbol counts.
        #[arg(long)]
        sequence: Option<PathBuf>,
        #[arg(long)]
        alphabet: Option<PathBuf>,
    },
    /// Gini coefficient of a value list or of each labeled column of a
    /// {"labels": [...], "rows": [[...]]} matrix.
    Gini {
        #[arg(long)]
        input: PathBuf,
    },
    /// Chord-transition network descriptors from a bigram-count matrix.
    Network {
        /// JSON {"alphabet": [...], "counts": [[...]]} file.
        #[arg(long)]
        bigrams: PathBuf,
        /// Edges with transition probability <= threshold are pruned.
        #[arg(long, default_value_t = DEFAULT_PRUNE_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_DAMPING)]
        damping: f64,
    },
    /// Chi-squared stationarity test over contiguous segments.
    Stationarity {
        #[arg(long)]
        sequence: PathBuf,
        #[arg(long)]
        alphabet: Option<PathBuf>,
        #[arg(long, default_value_t = dynamics::DEFAULT_SEGMENTS)]
        segments: usize,
        /// Collapse consecutive duplicate symbols first.
        #[arg(long)]
        collapse: bool,
    },
    /// Higuchi fractal dimension of a JSON array of reals.
    Higuchi {
        #[arg(long)]
        series: PathBuf,
        /// Largest subsampling scale; defaults to min(16, N/4).
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Spectral rubato classification of one tempo curve.
    Rubato {
        /// JSON {"bpm": [...]} file.
        #[arg(long)]
        curve: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_SAMPLES)]
        min_samples: usize,
        #[arg(long, default_value_t = ClassifierThresholds::default().metronomic_sigma)]
        metronomic_sigma: f64,
        #[arg(long, default_value_t = ClassifierThresholds::default().free_sigma)]
        free_sigma: f64,
        #[arg(long, default_value_t = ClassifierThresholds::default().quasi_ratio)]
        quasi_ratio: f64,
        #[arg(long, default_value_t = ClassifierThresholds::default().periodic_ratio)]
        periodic_ratio: f64,
    },
    /// Exponential/Laplace fit of an interval distribution.
    Intervals {
        /// JSON array of signed intervals.
        #[arg(long, conflicts_with = "encoded")]
        intervals: Option<PathBuf>,
        /// JSON array of numeric-encoded symbols; intervals are the
        /// successive differences.
        #[arg(long)]
        encoded: Option<PathBuf>,
        /// Bootstrap parameter CIs with this many replicates.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Corpus pipeline: per-label transition networks, feature-vector
    /// distances, gravity table, ablations, optional reference
    /// correlation with a label-level jackknife.
    CaseNetwork {
        #[arg(long)]
        manifest: PathBuf,
        /// Reference divergence matrix to correlate against.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_PRUNE_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = DEFAULT_DAMPING)]
        damping: f64,
    },
    /// Corpus pipeline: per-curve rubato classification, contingency
    /// table, per-label ratio summaries, optional paired deltas and
    /// threshold-sensitivity sweep.
    CaseRubato {
        #[arg(long)]
        manifest: PathBuf,
        /// Pairing file of {"unit", "before", "after"} curve ids.
        #[arg(long)]
        paired: Option<PathBuf>,
        /// Emit the seventeen-run threshold sweep.
        #[arg(long)]
        sensitivity: bool,
        #[arg(long, default_value_t = DEFAULT_MIN_SAMPLES)]
        min_samples: usize,
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        replicates: usize,
    },
}

/// The envelope every run emits.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool_version: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, Value>,
    pub results: Value,
}

/// Parse arguments, run, and write the report; the process exit status
/// is nonzero exactly when this returns an error.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::parse_from(args);
    let report = execute(&cli)?;
    emit(&report, cli.out.as_deref(), cli.format)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result types serialize")
}

/// Run one parsed invocation and build its report.
pub fn execute(cli: &Cli) -> Result<RunReport> {
    let mut parameters = BTreeMap::new();
    parameters.insert("alpha".into(), json!(cli.alpha));
    let results = match &cli.command {
        Command::Entropy {
            sequence,
            counts,
            alphabet,
        } => {
            let cv = match (sequence, counts) {
                (Some(seq_path), None) => {
                    parameters.insert("sequence".into(), json!(seq_path.display().to_string()));
                    let seq = io::load_sequence(seq_path)?;
                    let alphabet = resolve_alphabet(&[&seq], alphabet.as_deref())?;
                    distributions::counts_from_sequence(&seq, &alphabet)?
                }
                (None, Some(counts_path)) => {
                    parameters.insert("counts".into(), json!(counts_path.display().to_string()));
                    let raw: Vec<u64> =
                        io::parse_json(counts_path, &io::read(counts_path)?)?;
                    CountVector::new(raw)
                }
                _ => {
                    return Err(Error::Invalid(
                        "entropy needs exactly one of --sequence or --counts".into(),
                    ))
                }
            };
            let p = cv.smooth(cli.alpha)?;
            json!({
                "entropy_bits": information::shannon_entropy(&p),
                "n_symbols": p.len(),
            })
        }
        Command::Kl {
            p,
            q,
            manifest,
            symmetrize,
            replicates,
            alphabet,
        } => {
            parameters.insert("symmetrize".into(), json!(symmetrize));
            match (p, q, manifest) {
                (Some(p_path), Some(q_path), None) => {
                    let seq_p = io::load_sequence(p_path)?;
                    let seq_q = io::load_sequence(q_path)?;
                    let alphabet = resolve_alphabet(&[&seq_p, &seq_q], alphabet.as_deref())?;
                    let dp = distributions::counts_from_sequence(&seq_p, &alphabet)?
                        .smooth(cli.alpha)?;
                    let dq = distributions::counts_from_sequence(&seq_q, &alphabet)?
                        .smooth(cli.alpha)?;
                    let kl = information::kl_divergence(&dp, &dq)?;
                    let mut out = json!({ "kl_bits": kl });
                    if let Some(b) = replicates {
                        parameters.insert("replicates".into(), json!(b));
                        let (point, lo, hi) = information::divergence_bootstrap_ci(
                            &seq_p, &seq_q, &alphabet, cli.alpha, *b, cli.seed,
                        )?;
                        out["bootstrap"] = json!({ "point": point, "ci_lo": lo, "ci_hi": hi });
                    }
                    out
                }
                (None, None, Some(manifest_path)) => {
                    let groups = load_sequence_groups(manifest_path)?;
                    let seqs: Vec<&SymbolSequence> =
                        groups.iter().flat_map(|(_, s)| s.iter()).collect();
                    let alphabet = resolve_alphabet(&seqs, alphabet.as_deref())?;
                    let mut dists = Vec::new();
                    for (label, seqs) in &groups {
                        let mut counts = vec![0u64; alphabet.size()];
                        for seq in seqs {
                            let cv = distributions::counts_from_sequence(seq, &alphabet)?;
                            for (acc, c) in counts.iter_mut().zip(cv.counts()) {
                                *acc += c;
                            }
                        }
                        dists.push((label.clone(), CountVector::new(counts).smooth(cli.alpha)?));
                    }
                    to_value(&information::kl_pairwise_matrix(&dists, *symmetrize)?)
                }
                _ => {
                    return Err(Error::Invalid(
                        "kl needs either --p and --q, or --manifest".into(),
                    ))
                }
            }
        }
        Command::Js { p, q, alphabet } => {
            let seq_p = io::load_sequence(p)?;
            let seq_q = io::load_sequence(q)?;
            let alphabet = resolve_alphabet(&[&seq_p, &seq_q], alphabet.as_deref())?;
            let dp = distributions::counts_from_sequence(&seq_p, &alphabet)?.smooth(cli.alpha)?;
            let dq = distributions::counts_from_sequence(&seq_q, &alphabet)?.smooth(cli.alpha)?;
            json!({ "js_bits": information::js_divergence(&dp, &dq)? })
        }
        Command::Zipf {
            freqs,
            sequence,
            alphabet,
        } => {
            let profile: Vec<f64> = match (freqs, sequence) {
                (Some(path), None) => io::load_reals(path)?,
                (None, Some(path)) => {
                    let seq = io::load_sequence(path)?;
                    let alphabet = resolve_alphabet(&[&seq], alphabet.as_deref())?;
                    distributions::counts_from_sequence(&seq, &alphabet)?
                        .counts()
                        .iter()
                        .map(|&c| c as f64)
                        .collect()
                }
                _ => {
                    return Err(Error::Invalid(
                        "zipf needs exactly one of --freqs or --sequence".into(),
                    ))
                }
            };
            to_value(&rankshape::zipf_fit(&profile)?)
        }
        Command::Gini { input } => {
            let raw: Value = io::parse_json(input, &io::read(input)?)?;
            if raw.is_array() {
                let values: Vec<f64> = serde_json::from_value(raw)
                    .map_err(|e| Error::Invalid(format!("gini value list: {e}")))?;
                json!({ "gini": rankshape::gini(&values)? })
            } else {
                #[derive(serde::Deserialize)]
                struct MatrixFile {
                    labels: Vec<String>,
                    rows: Vec<Vec<f64>>,
                }
                let m: MatrixFile = serde_json::from_value(raw)
                    .map_err(|e| Error::Invalid(format!("gini matrix file: {e}")))?;
                to_value(&rankshape::gini_multi(&m.rows, &m.labels)?)
            }
        }
        Command::Network {
            bigrams,
            threshold,
            damping,
        } => {
            parameters.insert("threshold".into(), json!(threshold));
            parameters.insert("damping".into(), json!(damping));
            let (alphabet, counts) = io::load_bigram_matrix(bigrams)?;
            let graph = chordnet::chord_graph(&counts, &alphabet, *threshold)?;
            to_value(&chordnet::network_analysis(&graph, *damping)?)
        }
        Command::Stationarity {
            sequence,
            alphabet,
            segments,
            collapse,
        } => {
            parameters.insert("segments".into(), json!(segments));
            parameters.insert("collapse".into(), json!(collapse));
            let seq = io::load_sequence(sequence)?;
            let alphabet = resolve_alphabet(&[&seq], alphabet.as_deref())?;
            to_value(&dynamics::stationarity_test(
                &seq, &alphabet, *segments, *collapse,
            )?)
        }
        Command::Higuchi { series, k_max } => {
            let series = io::load_reals(series)?;
            let k_max = k_max.unwrap_or_else(|| dynamics::default_k_max(series.len()));
            parameters.insert("k_max".into(), json!(k_max));
            to_value(&dynamics::higuchi_fractal_dimension(&series, k_max)?)
        }
        Command::Rubato {
            curve,
            min_samples,
            metronomic_sigma,
            free_sigma,
            quasi_ratio,
            periodic_ratio,
        } => {
            let thresholds = ClassifierThresholds {
                metronomic_sigma: *metronomic_sigma,
                free_sigma: *free_sigma,
                quasi_ratio: *quasi_ratio,
                periodic_ratio: *periodic_ratio,
            };
            parameters.insert("min_samples".into(), json!(min_samples));
            parameters.insert("thresholds".into(), to_value(&thresholds));
            let curve = io::load_tempo_curve(curve)?;
            to_value(&rubato::rubato_spectral(&curve, &thresholds, *min_samples)?)
        }
        Command::Intervals {
            intervals: direct,
            encoded,
            replicates,
        } => {
            let samples: Vec<f64> = match (direct, encoded) {
                (Some(path), None) => io::load_reals(path)?,
                (None, Some(path)) => {
                    intervals::intervals_from_sequence(&io::load_reals(path)?)?
                }
                _ => {
                    return Err(Error::Invalid(
                        "intervals needs exactly one of --intervals or --encoded".into(),
                    ))
                }
            };
            let analysis = intervals::interval_analysis(&samples)?;
            let mut out = to_value(&analysis);
            if let Some(b) = replicates {
                parameters.insert("replicates".into(), json!(b));
                let boot = intervals::interval_param_bootstrap(&samples, *b, cli.seed)?;
                out["bootstrap"] = to_value(&boot);
            }
            out
        }
        Command::CaseNetwork {
            manifest,
            reference,
            threshold,
            damping,
        } => {
            parameters.insert("threshold".into(), json!(threshold));
            parameters.insert("damping".into(), json!(damping));
            run_network_case(manifest, reference.as_deref(), *threshold, *damping)?
        }
        Command::CaseRubato {
            manifest,
            paired,
            sensitivity,
            min_samples,
            replicates,
        } => {
            parameters.insert("min_samples".into(), json!(min_samples));
            parameters.insert("replicates".into(), json!(replicates));
            parameters.insert("sensitivity".into(), json!(sensitivity));
            run_rubato_case(
                manifest,
                paired.as_deref(),
                *sensitivity,
                *min_samples,
                *replicates,
                cli.seed,
            )?
        }
    };
    Ok(RunReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cli.seed,
        parameters,
        results,
    })
}

/// Pick the working alphabet: an explicit file wins; otherwise the
/// bundled scale degrees when every symbol fits, otherwise the sorted
/// distinct symbols actually observed.
fn resolve_alphabet(seqs: &[&SymbolSequence], file: Option<&Path>) -> Result<Alphabet> {
    if let Some(path) = file {
        return io::load_alphabet(path);
    }
    let default = Alphabet::default_scale_degrees();
    if seqs
        .iter()
        .all(|s| s.items().iter().all(|i| default.index_of(i).is_some()))
    {
        return Ok(default);
    }
    let mut symbols: Vec<String> = seqs
        .iter()
        .flat_map(|s| s.items().iter().cloned())
        .collect();
    symbols.sort();
    symbols.dedup();
    Alphabet::new(symbols)
}

/// Load a manifest of sequence entries grouped by label, preserving
/// first-appearance order of labels.
fn load_sequence_groups(path: &Path) -> Result<Vec<(String, Vec<SymbolSequence>)>> {
    let manifest = io::load_manifest(path)?;
    let mut groups: Vec<(String, Vec<SymbolSequence>)> = Vec::new();
    for entry in &manifest.entries {
        if entry.kind != EntryKind::Sequence {
            return Err(Error::Invalid(format!(
                "entry {:?} has kind {:?}; this pipeline takes sequences only",
                entry.label, entry.kind
            )));
        }
        let seq = io::load_sequence(&entry.path)?;
        match groups.iter_mut().find(|(l, _)| *l == entry.label) {
            Some((_, seqs)) => seqs.push(seq),
            None => groups.push((entry.label.clone(), vec![seq])),
        }
    }
    Ok(groups)
}

enum NetworkInput {
    Seq(SymbolSequence),
    Matrix(Alphabet, Vec<Vec<u64>>),
}

fn run_network_case(
    manifest_path: &Path,
    reference_path: Option<&Path>,
    threshold: f64,
    damping: f64,
) -> Result<Value> {
    let manifest = io::load_manifest(manifest_path)?;
    let mut groups: Vec<(String, Vec<NetworkInput>)> = Vec::new();
    for entry in &manifest.entries {
        let input = match entry.kind {
            EntryKind::Sequence => NetworkInput::Seq(io::load_sequence(&entry.path)?),
            EntryKind::BigramMatrix => {
                let (a, c) = io::load_bigram_matrix(&entry.path)?;
                NetworkInput::Matrix(a, c)
            }
            EntryKind::TempoCurve => {
                return Err(Error::Invalid(format!(
                    "entry {:?} is a tempo curve; the network pipeline takes sequences or bigram matrices",
                    entry.label
                )))
            }
        };
        match groups.iter_mut().find(|(l, _)| *l == entry.label) {
            Some((_, inputs)) => inputs.push(input),
            None => groups.push((entry.label.clone(), vec![input])),
        }
    }
    if groups.len() < 3 {
        return Err(Error::Degenerate(format!(
            "network pipeline needs at least 3 labels, got {}",
            groups.len()
        )));
    }

    // one shared alphabet: the first matrix's, or resolved from sequences
    let matrix_alphabet = groups.iter().flat_map(|(_, v)| v).find_map(|i| match i {
        NetworkInput::Matrix(a, _) => Some(a.clone()),
        NetworkInput::Seq(_) => None,
    });
    let alphabet = match matrix_alphabet {
        Some(a) => a,
        None => {
            let seqs: Vec<&SymbolSequence> = groups
                .iter()
                .flat_map(|(_, v)| v)
                .filter_map(|i| match i {
                    NetworkInput::Seq(s) => Some(s),
                    NetworkInput::Matrix(..) => None,
                })
                .collect();
            resolve_alphabet(&seqs, None)?
        }
    };

    let n = alphabet.size();
    let mut per_label = Vec::new();
    let mut vectors: Vec<(String, NetworkFeatureVector)> = Vec::new();
    let mut centres = Vec::new();
    for (label, inputs) in &groups {
        let mut counts = vec![vec![0u64; n]; n];
        for input in inputs {
            match input {
                NetworkInput::Seq(seq) => {
                    let m = distributions::bigram_counts(seq, &alphabet, true)?;
                    for (acc, row) in counts.iter_mut().zip(&m) {
                        for (a, b) in acc.iter_mut().zip(row) {
                            *a += b;
                        }
                    }
                }
                NetworkInput::Matrix(a, m) => {
                    if a.symbols() != alphabet.symbols() {
                        return Err(Error::Invalid(format!(
                            "bigram matrix under label {label:?} uses a different alphabet"
                        )));
                    }
                    for (acc, row) in counts.iter_mut().zip(m) {
                        for (a, b) in acc.iter_mut().zip(row) {
                            *a += b;
                        }
                    }
                }
            }
        }
        let graph = chordnet::chord_graph(&counts, &alphabet, threshold)?;
        let analysis = chordnet::network_analysis(&graph, damping)?;
        let features = chordnet::feature_vector(&analysis)?;
        centres.push(analysis.gravity_centre.clone());
        vectors.push((label.clone(), features));
        per_label.push(json!({
            "label": label,
            "analysis": to_value(&analysis),
            "features": to_value(&features),
        }));
    }

    let distances = chordnet::pairwise_network_distance(&vectors)?;
    let gravity_distances = chordnet::gravity_one_hot(&centres, &alphabet)?;
    let gravity: Vec<Value> = vectors
        .iter()
        .zip(&centres)
        .map(|((label, f), centre)| {
            json!({
                "label": label,
                "gravity_centre": centre,
                "gravity_pagerank": f.gravity_pagerank,
            })
        })
        .collect();

    // reference distances condensed in our label order, when given
    let reference = match reference_path {
        Some(path) => {
            let matrix = io::load_divergence_matrix(path)?;
            let index: Vec<usize> = vectors
                .iter()
                .map(|(label, _)| {
                    matrix
                        .labels
                        .iter()
                        .position(|l| l == label)
                        .ok_or_else(|| {
                            Error::Invalid(format!(
                                "reference matrix has no label {label:?}"
                            ))
                        })
                })
                .collect::<Result<_>>()?;
            Some((matrix, index))
        }
        None => None,
    };
    let reference_condensed = |labels: &[&String]| -> Vec<f64> {
        let (matrix, index) = reference.as_ref().expect("caller checked");
        let pos: Vec<usize> = labels
            .iter()
            .map(|l| {
                let i = vectors.iter().position(|(vl, _)| &vl == l).unwrap();
                index[i]
            })
            .collect();
        let mut out = Vec::new();
        for i in 0..pos.len() {
            for j in i + 1..pos.len() {
                out.push(matrix.values[pos[i]][pos[j]]);
            }
        }
        out
    };

    // single-feature and drop-one ablations
    let mut ablation = Vec::new();
    for c in 0..5 {
        for (prefix, mask) in [
            ("only", std::array::from_fn::<bool, 5, _>(|i| i == c)),
            ("drop", std::array::from_fn::<bool, 5, _>(|i| i != c)),
        ] {
            let name = format!("{prefix}_{}", NetworkFeatureVector::COMPONENT_NAMES[c]);
            match chordnet::pairwise_network_distance_masked(&vectors, mask) {
                Ok(m) => {
                    let mut record = json!({
                        "variant": name,
                        "condensed_distances": m.condensed(),
                    });
                    if reference.is_some() {
                        let labels: Vec<&String> = m.labels.iter().collect();
                        match resample::spearman(&m.condensed(), &reference_condensed(&labels)) {
                            Ok((rho, p_value)) => {
                                record["rho"] = json!(rho);
                                record["p_value"] = json!(p_value);
                            }
                            Err(e) => record["error"] = json!(e.to_string()),
                        }
                    }
                    ablation.push(record);
                }
                Err(e) => ablation.push(json!({ "variant": name, "error": e.to_string() })),
            }
        }
    }

    let mut results = json!({
        "per_label": per_label,
        "distance_matrix": to_value(&distances),
        "gravity": gravity,
        "gravity_distance_matrix": to_value(&gravity_distances),
        "ablation": ablation,
    });

    if reference.is_some() {
        let all_labels: Vec<&String> = vectors.iter().map(|(l, _)| l).collect();
        let ref_full = reference_condensed(&all_labels);
        let net_full = distances.condensed();
        let (rho, p_value) = resample::spearman(&net_full, &ref_full)?;
        let jackknife = resample::jackknife_spearman(
            &vectors,
            |subset| Ok(chordnet::pairwise_network_distance(subset)?.condensed()),
            |subset| {
                let labels: Vec<&String> = subset.iter().map(|(l, _)| l).collect();
                Ok(reference_condensed(&labels))
            },
        )?;
        let mut scatter = Vec::new();
        let mut k = 0;
        for i in 0..all_labels.len() {
            for j in i + 1..all_labels.len() {
                scatter.push(json!({
                    "pair": format!("{}|{}", all_labels[i], all_labels[j]),
                    "network_distance": net_full[k],
                    "reference_distance": ref_full[k],
                }));
                k += 1;
            }
        }
        results["reference_comparison"] = json!({
            "rho": rho,
            "p_value": p_value,
            "jackknife": to_value(&jackknife),
            "scatter": scatter,
        });
    }
    Ok(results)
}

fn ratio_quantiles(sorted: &[f64]) -> Value {
    json!({
        "min": sorted[0],
        "q1": resample_quantile(sorted, 0.25),
        "median": resample_quantile(sorted, 0.5),
        "q3": resample_quantile(sorted, 0.75),
        "max": sorted[sorted.len() - 1],
    })
}

fn resample_quantile(sorted: &[f64], q: f64) -> f64 {
    crate::resample::quantile_sorted(sorted, q)
}

fn run_rubato_case(
    manifest_path: &Path,
    pairing_path: Option<&Path>,
    sensitivity: bool,
    min_samples: usize,
    replicates: usize,
    seed: u64,
) -> Result<Value> {
    let manifest = io::load_manifest(manifest_path)?;
    let mut curves = Vec::new();
    for entry in &manifest.entries {
        if entry.kind != EntryKind::TempoCurve {
            return Err(Error::Invalid(format!(
                "entry {:?} has kind {:?}; the rubato pipeline takes tempo curves",
                entry.label, entry.kind
            )));
        }
        let id = entry
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| entry.path.display().to_string());
        curves.push(LabeledCurve {
            label: entry.label.clone(),
            id,
            curve: io::load_tempo_curve(&entry.path)?,
        });
    }

    let thresholds = ClassifierThresholds::default();
    let classification = rubato::classify_corpus(&curves, &thresholds, min_samples)?;

    // per-label periodicity-ratio summary over curves with a spectrum
    let mut label_summaries = Vec::new();
    for label in &classification.table.labels {
        let mut ratios: Vec<f64> = classification
            .per_curve
            .iter()
            .filter(|o| &o.label == label)
            .filter_map(|o| o.analysis.periodicity_ratio)
            .collect();
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut summary = json!({ "label": label, "n_with_spectrum": ratios.len() });
        if !ratios.is_empty() {
            summary["quantiles"] = ratio_quantiles(&ratios);
        }
        match resample::bootstrap_mean_ci(&ratios, replicates, seed) {
            Ok((mean, lo, hi)) => {
                summary["mean_ratio"] = json!(mean);
                summary["ci_lo"] = json!(lo);
                summary["ci_hi"] = json!(hi);
            }
            Err(e) => summary["note"] = json!(e.to_string()),
        }
        label_summaries.push(summary);
    }

    let mut results = json!({
        "classification": to_value(&classification),
        "label_summaries": label_summaries,
    });

    if let Some(path) = pairing_path {
        let pairing = io::load_pairing(path)?;
        let ratio_of = |id: &str| -> Result<f64> {
            let lc = curves.iter().find(|c| c.id == id).ok_or_else(|| {
                Error::Invalid(format!("pairing references missing curve id {id:?}"))
            })?;
            Ok(rubato::spectral_summary(&lc.curve).periodicity_ratio)
        };
        let mut pairs = Vec::new();
        let mut rows = Vec::new();
        for entry in &pairing {
            let before = ratio_of(&entry.before)?;
            let after = ratio_of(&entry.after)?;
            pairs.push((before, after));
            rows.push(json!({
                "unit": entry.unit,
                "before_ratio": before,
                "after_ratio": after,
                "delta": after - before,
            }));
        }
        let (mean_delta, lo, hi) = rubato::paired_delta_ci(&pairs, replicates, seed)?;
        results["paired"] = json!({
            "pairs": rows,
            "mean_delta": mean_delta,
            "ci_lo": lo,
            "ci_hi": hi,
        });
    }

    if sensitivity {
        let runs = rubato::threshold_sensitivity(&curves, &thresholds, min_samples)?;
        results["sensitivity_runs"] = to_value(&runs);
    }
    Ok(results)
}

/// Render the report: pretty JSON, or flattened key,value CSV rows
/// suitable for direct plotting.
pub fn render(report: &RunReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut rows = vec!["key,value".to_string()];
            rows.push(format!("tool_version,{}", csv_cell(&report.tool_version)));
            rows.push(format!("seed,{}", report.seed));
            for (k, v) in &report.parameters {
                flatten(&format!("parameters.{k}"), v, &mut rows);
            }
            flatten("results", &report.results, &mut rows);
            rows.push(String::new());
            rows.join("\n")
        }
    }
}

fn emit(report: &RunReport, out: Option<&Path>, format: OutputFormat) -> Result<()> {
    let rendered = render(report, format);
    match out {
        Some(path) => std::fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn csv_cell(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&format!("{prefix}.{k}"), v, rows);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, rows);
            }
        }
        Value::String(s) => rows.push(format!("{},{}", csv_cell(prefix), csv_cell(s))),
        other => rows.push(format!("{},{other}", csv_cell(prefix))),
    }
}
