//! Spectral decomposition of tempo curves, the four-category rubato
//! classifier, threshold-sensitivity sweeps, and paired-delta
//! comparisons.
//!
//! The spectrum is the plain real FFT power of the mean-centred curve:
//! no windowing, no detrending beyond mean removal, no zero-padding.
//! Periods are reported at native bin resolution (N / bin index, in
//! beats). Sigma is the population (divide-by-N) standard deviation.

use rand::Rng;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resample::{percentile_ci_95, seeded_rng};

/// Curves shorter than this are excluded from analysis.
pub const DEFAULT_MIN_SAMPLES: usize = 32;

/// Detected peaks must exceed this fraction of the maximum non-DC power.
const PEAK_FLOOR_FRACTION: f64 = 0.1;

/// Per-beat BPM series.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TempoCurve {
    bpm: Vec<f64>,
}

impl TempoCurve {
    pub fn new(bpm: Vec<f64>) -> Result<Self> {
        if bpm.is_empty() {
            return Err(Error::Degenerate("tempo curve is empty".into()));
        }
        if let Some(v) = bpm.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Invalid(format!(
                "BPM samples must be finite and positive, got {v}"
            )));
        }
        Ok(Self { bpm })
    }

    pub fn bpm(&self) -> &[f64] {
        &self.bpm
    }

    pub fn len(&self) -> usize {
        self.bpm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bpm.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.bpm.iter().sum::<f64>() / self.bpm.len() as f64
    }

    /// Population standard deviation of the curve.
    pub fn sigma(&self) -> f64 {
        let mean = self.mean();
        let var = self
            .bpm
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / self.bpm.len() as f64;
        var.sqrt()
    }
}

/// The four rubato categories of the priority decision table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RubatoCategory {
    Metronomic,
    Free,
    QuasiPeriodic,
    Periodic,
}

impl RubatoCategory {
    pub const ALL: [RubatoCategory; 4] = [
        RubatoCategory::Metronomic,
        RubatoCategory::Free,
        RubatoCategory::QuasiPeriodic,
        RubatoCategory::Periodic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RubatoCategory::Metronomic => "metronomic",
            RubatoCategory::Free => "free",
            RubatoCategory::QuasiPeriodic => "quasi_periodic",
            RubatoCategory::Periodic => "periodic",
        }
    }
}

/// One spectral peak: its period in beats and its power relative to the
/// maximum non-DC power.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DominantPeriod {
    pub period_beats: f64,
    pub power_norm: f64,
}

/// The four tunable classifier thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierThresholds {
    pub metronomic_sigma: f64,
    pub free_sigma: f64,
    pub quasi_ratio: f64,
    pub periodic_ratio: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self {
            metronomic_sigma: 0.5,
            free_sigma: 3.0,
            quasi_ratio: 0.3,
            periodic_ratio: 0.5,
        }
    }
}

impl ClassifierThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.metronomic_sigma > 0.0 && self.metronomic_sigma < self.free_sigma) {
            return Err(Error::Invalid(format!(
                "need 0 < metronomic_sigma < free_sigma, got {} and {}",
                self.metronomic_sigma, self.free_sigma
            )));
        }
        if !(self.quasi_ratio > 0.0
            && self.quasi_ratio < self.periodic_ratio
            && self.periodic_ratio < 1.0)
        {
            return Err(Error::Invalid(format!(
                "need 0 < quasi_ratio < periodic_ratio < 1, got {} and {}",
                self.quasi_ratio, self.periodic_ratio
            )));
        }
        Ok(())
    }
}

/// Full per-curve analysis record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RubatoAnalysis {
    pub category: RubatoCategory,
    pub sigma_bpm: f64,
    /// Absent when the priority-1 short-circuit fired and no spectrum
    /// was computed.
    pub periodicity_ratio: Option<f64>,
    pub dominant_periods: Vec<DominantPeriod>,
}

/// The five-priority decision table; the first condition that fires
/// determines the category.
pub fn classify(sigma_bpm: f64, periodicity_ratio: f64, t: &ClassifierThresholds) -> RubatoCategory {
    if sigma_bpm < t.metronomic_sigma {
        RubatoCategory::Metronomic
    } else if periodicity_ratio > t.periodic_ratio {
        RubatoCategory::Periodic
    } else if periodicity_ratio > t.quasi_ratio {
        RubatoCategory::QuasiPeriodic
    } else if sigma_bpm > t.free_sigma {
        RubatoCategory::Free
    } else {
        RubatoCategory::Metronomic
    }
}

/// One-sided power spectrum of the mean-centred curve, DC excluded.
/// Entry i holds the power of bin i + 1; bin k has period n/k beats.
/// Normalized so the total power over all bins divided by n equals the
/// population variance.
pub fn power_spectrum(curve: &TempoCurve) -> Vec<f64> {
    let n = curve.len();
    let mean = curve.mean();
    let mut buf: Vec<Complex<f64>> = curve
        .bpm()
        .iter()
        .map(|&v| Complex::new(v - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    (1..=half)
        .map(|k| {
            let mag2 = buf[k].norm_sqr();
            // Nyquist bin of an even-length series has no mirror
            if n % 2 == 0 && k == half {
                mag2 / n as f64
            } else {
                2.0 * mag2 / n as f64
            }
        })
        .collect()
}

/// Strict local maxima of the one-sided spectrum above the 10% floor,
/// returned as (bin index, power) with bin indices starting at 1.
fn detect_peaks(power: &[f64]) -> Vec<(usize, f64)> {
    let max_power = power.iter().cloned().fold(0.0, f64::max);
    if max_power <= 0.0 {
        return Vec::new();
    }
    let floor = PEAK_FLOOR_FRACTION * max_power;
    let last = power.len() - 1;
    power
        .iter()
        .enumerate()
        .filter(|&(i, &p)| {
            if p <= floor {
                return false;
            }
            let above_prev = i == 0 || p > power[i - 1];
            let above_next = i == last || p > power[i + 1];
            above_prev && above_next
        })
        .map(|(i, &p)| (i + 1, p))
        .collect()
}

/// Internal spectral summary, computed unconditionally (no priority-1
/// short-circuit) so sensitivity sweeps can reuse one pass per curve.
#[derive(Debug, Clone)]
pub(crate) struct SpectralSummary {
    pub sigma_bpm: f64,
    pub periodicity_ratio: f64,
    pub dominant_periods: Vec<DominantPeriod>,
}

pub(crate) fn spectral_summary(curve: &TempoCurve) -> SpectralSummary {
    let sigma_bpm = curve.sigma();
    let power = power_spectrum(curve);
    let total: f64 = power.iter().sum();
    let peaks = detect_peaks(&power);
    let periodicity_ratio = if total > 0.0 {
        peaks.iter().map(|&(_, p)| p).sum::<f64>() / total
    } else {
        0.0
    };
    let max_power = power.iter().cloned().fold(0.0, f64::max);
    let mut ranked = peaks;
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let n = curve.len() as f64;
    let dominant_periods = ranked
        .into_iter()
        .take(3)
        .map(|(bin, p)| DominantPeriod {
            period_beats: n / bin as f64,
            power_norm: p / max_power,
        })
        .collect();
    SpectralSummary {
        sigma_bpm,
        periodicity_ratio,
        dominant_periods,
    }
}

/// Analyze one tempo curve: sigma, spectrum, peaks, and category.
///
/// Curves with sigma below the metronomic threshold short-circuit to
/// `metronomic` with no spectrum computed.
pub fn rubato_spectral(
    curve: &TempoCurve,
    thresholds: &ClassifierThresholds,
    min_samples: usize,
) -> Result<RubatoAnalysis> {
    thresholds.validate()?;
    if curve.len() < min_samples {
        return Err(Error::Degenerate(format!(
            "curve has {} samples, below the exclusion threshold {min_samples}",
            curve.len()
        )));
    }
    let sigma_bpm = curve.sigma();
    if sigma_bpm < thresholds.metronomic_sigma {
        return Ok(RubatoAnalysis {
            category: RubatoCategory::Metronomic,
            sigma_bpm,
            periodicity_ratio: None,
            dominant_periods: Vec::new(),
        });
    }
    let summary = spectral_summary(curve);
    Ok(RubatoAnalysis {
        category: classify(summary.sigma_bpm, summary.periodicity_ratio, thresholds),
        sigma_bpm: summary.sigma_bpm,
        periodicity_ratio: Some(summary.periodicity_ratio),
        dominant_periods: summary.dominant_periods,
    })
}

/// A tempo curve with its group label and a per-curve identifier.
#[derive(Debug, Clone)]
pub struct LabeledCurve {
    pub label: String,
    pub id: String,
    pub curve: TempoCurve,
}

/// label x category contingency table; column order matches
/// [`RubatoCategory::ALL`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub labels: Vec<String>,
    pub categories: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    fn build(rows: &[(String, Vec<RubatoCategory>)]) -> Self {
        let labels: Vec<String> = rows.iter().map(|(l, _)| l.clone()).collect();
        let counts = rows
            .iter()
            .map(|(_, cats)| {
                RubatoCategory::ALL
                    .iter()
                    .map(|c| cats.iter().filter(|&x| x == c).count() as u64)
                    .collect()
            })
            .collect();
        Self {
            labels,
            categories: RubatoCategory::ALL.iter().map(|c| c.name().to_string()).collect(),
            counts,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveOutcome {
    pub id: String,
    pub label: String,
    pub analysis: RubatoAnalysis,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExcludedCurve {
    pub id: String,
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusClassification {
    pub table: ContingencyTable,
    pub per_curve: Vec<CurveOutcome>,
    pub excluded: Vec<ExcludedCurve>,
}

/// Classify a labeled corpus; curves below `min_samples` land in the
/// exclusion list instead of the table.
pub fn classify_corpus(
    curves: &[LabeledCurve],
    thresholds: &ClassifierThresholds,
    min_samples: usize,
) -> Result<CorpusClassification> {
    thresholds.validate()?;
    let mut per_curve = Vec::new();
    let mut excluded = Vec::new();
    for lc in curves {
        if lc.curve.len() < min_samples {
            excluded.push(ExcludedCurve {
                id: lc.id.clone(),
                label: lc.label.clone(),
                reason: format!(
                    "{} samples, below the exclusion threshold {min_samples}",
                    lc.curve.len()
                ),
            });
            continue;
        }
        let analysis = rubato_spectral(&lc.curve, thresholds, min_samples)?;
        per_curve.push(CurveOutcome {
            id: lc.id.clone(),
            label: lc.label.clone(),
            analysis,
        });
    }
    if per_curve.is_empty() {
        return Err(Error::Degenerate("no analyzable curves in the corpus".into()));
    }
    let mut rows: Vec<(String, Vec<RubatoCategory>)> = Vec::new();
    for outcome in &per_curve {
        match rows.iter_mut().find(|(l, _)| *l == outcome.label) {
            Some((_, cats)) => cats.push(outcome.analysis.category),
            None => rows.push((outcome.label.clone(), vec![outcome.analysis.category])),
        }
    }
    Ok(CorpusClassification {
        table: ContingencyTable::build(&rows),
        per_curve,
        excluded,
    })
}

/// One perturbation run of the sensitivity sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityRun {
    pub run_label: String,
    pub thresholds: ClassifierThresholds,
    pub table: ContingencyTable,
    pub per_curve: Vec<SensitivityOutcome>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityOutcome {
    pub id: String,
    pub label: String,
    pub sigma_bpm: f64,
    pub periodicity_ratio: f64,
    pub category: RubatoCategory,
}

/// Perturbation multipliers applied to each threshold, one axis at a time.
pub const SENSITIVITY_MULTIPLIERS: [f64; 4] = [0.8, 0.9, 1.1, 1.2];

/// The seventeen-run sweep: baseline plus 4 thresholds x 4 multipliers.
///
/// Per-curve sigma and periodicity ratio are computed once and reused in
/// every run: the ratio is defined before classification and is
/// invariant under threshold choice. Because of that reuse the ratio is
/// computed even for curves a given run classifies as metronomic.
pub fn threshold_sensitivity(
    curves: &[LabeledCurve],
    base: &ClassifierThresholds,
    min_samples: usize,
) -> Result<Vec<SensitivityRun>> {
    base.validate()?;
    let mut cached: Vec<(String, String, SpectralSummary)> = Vec::new();
    for lc in curves {
        if lc.curve.len() < min_samples {
            continue;
        }
        cached.push((lc.id.clone(), lc.label.clone(), spectral_summary(&lc.curve)));
    }
    if cached.is_empty() {
        return Err(Error::Degenerate("no analyzable curves in the corpus".into()));
    }

    let mut variants: Vec<(String, ClassifierThresholds)> =
        vec![("baseline".to_string(), *base)];
    let axes: [(&str, fn(&mut ClassifierThresholds) -> &mut f64); 4] = [
        ("metronomic_sigma", |t| &mut t.metronomic_sigma),
        ("free_sigma", |t| &mut t.free_sigma),
        ("quasi_ratio", |t| &mut t.quasi_ratio),
        ("periodic_ratio", |t| &mut t.periodic_ratio),
    ];
    for (name, accessor) in axes {
        for mult in SENSITIVITY_MULTIPLIERS {
            let mut t = *base;
            *accessor(&mut t) *= mult;
            variants.push((format!("{name}_x{mult:.1}"), t));
        }
    }

    let runs = variants
        .into_iter()
        .map(|(run_label, thresholds)| {
            let per_curve: Vec<SensitivityOutcome> = cached
                .iter()
                .map(|(id, label, s)| SensitivityOutcome {
                    id: id.clone(),
                    label: label.clone(),
                    sigma_bpm: s.sigma_bpm,
                    periodicity_ratio: s.periodicity_ratio,
                    category: classify(s.sigma_bpm, s.periodicity_ratio, &thresholds),
                })
                .collect();
            let mut rows: Vec<(String, Vec<RubatoCategory>)> = Vec::new();
            for o in &per_curve {
                match rows.iter_mut().find(|(l, _)| *l == o.label) {
                    Some((_, cats)) => cats.push(o.category),
                    None => rows.push((o.label.clone(), vec![o.category])),
                }
            }
            SensitivityRun {
                run_label,
                thresholds,
                table: ContingencyTable::build(&rows),
                per_curve,
            }
        })
        .collect();
    Ok(runs)
}

/// Percentile bootstrap 95% CI of the mean paired delta (after - before),
/// resampling pairs with replacement. Deterministic given the seed.
pub fn paired_delta_ci(
    pairs: &[(f64, f64)],
    b: usize,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    if pairs.len() < 3 {
        return Err(Error::Degenerate(format!(
            "paired delta needs at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    if b < 100 {
        return Err(Error::Invalid(format!(
            "bootstrap replicate count must be >= 100, got {b}"
        )));
    }
    let deltas: Vec<f64> = pairs.iter().map(|&(before, after)| after - before).collect();
    let n = deltas.len();
    let mean = deltas.iter().sum::<f64>() / n as f64;
    let mut rng = seeded_rng(seed);
    let mut replicates = Vec::with_capacity(b);
    for _ in 0..b {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += deltas[rng.gen_range(0..n)];
        }
        replicates.push(sum / n as f64);
    }
    let (lo, hi) = percentile_ci_95(&mut replicates);
    Ok((mean, lo, hi))
}
