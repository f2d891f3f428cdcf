//! Acceptance gate: analytic anchors, decision-table semantics, and
//! independent oracles for every metric, each printed as a single
//! pass/fail line.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mirlab::chordnet;
use mirlab::distributions::{Alphabet, CountVector, ProbabilityVector, SymbolSequence};
use mirlab::dynamics;
use mirlab::information;
use mirlab::intervals::{self, FittedFamily};
use mirlab::rankshape;
use mirlab::resample;
use mirlab::rubato::{self, ClassifierThresholds, LabeledCurve, RubatoCategory, TempoCurve};

fn check(name: &str, f: impl FnOnce() + UnwindSafe) {
    match catch_unwind(f) {
        Ok(()) => println!("{name}: pass"),
        Err(e) => {
            println!("{name}: fail");
            resume_unwind(e);
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn criterion_01_uniform_entropy_is_log2_n() {
    check("01 uniform entropy log2(N)", || {
        for n in 2..=64usize {
            let p = ProbabilityVector::new(vec![1.0 / n as f64; n]).unwrap();
            let h = information::shannon_entropy(&p);
            assert!(
                (h - (n as f64).log2()).abs() < 1e-12,
                "N={n}: H={h}"
            );
        }
    });
}

#[test]
fn criterion_02_kl_self_divergence_is_zero() {
    check("02 KL(P,P) = 0", || {
        let mut r = rng(2);
        for _ in 0..1000 {
            let n = r.gen_range(2..20);
            let counts: Vec<u64> = (0..n).map(|_| r.gen_range(0..200)).collect();
            let p = CountVector::new(counts).smooth(0.5).unwrap();
            assert_eq!(information::kl_divergence(&p, &p).unwrap(), 0.0);
        }
    });
}

#[test]
fn criterion_03_zipf_recovers_unit_exponent() {
    check("03 zipf alpha = 1, R^2 = 1", || {
        let freqs: Vec<f64> = (1..=50).map(|r| 1.0 / r as f64).collect();
        let fit = rankshape::zipf_fit(&freqs).unwrap();
        assert!((fit.alpha - 1.0).abs() < 1e-9, "alpha {}", fit.alpha);
        assert!(fit.r_squared > 1.0 - 1e-12, "r2 {}", fit.r_squared);
    });
}

#[test]
fn criterion_04_gini_uniform_and_one_hot() {
    check("04 gini anchors", || {
        for n in 2..=100usize {
            let g = rankshape::gini(&vec![3.0; n]).unwrap();
            assert_eq!(g, 0.0, "uniform N={n}");
            let mut one_hot = vec![0.0; n];
            one_hot[0] = 1.0;
            let g = rankshape::gini(&one_hot).unwrap();
            assert!(
                (g - (1.0 - 1.0 / n as f64)).abs() < 1e-12,
                "one-hot N={n}: {g}"
            );
        }
    });
}

/// Dense PageRank oracle: solve (I - d W^T) pi = (1-d)/N 1 by Gaussian
/// elimination, with dangling rows replaced by uniform rows.
fn pagerank_dense(n: usize, edges: &[(usize, usize, f64)], damping: f64) -> Vec<f64> {
    let mut w = vec![vec![0.0; n]; n];
    let mut out_strength = vec![0.0; n];
    for &(s, t, wt) in edges {
        w[s][t] += wt;
        out_strength[s] += wt;
    }
    for i in 0..n {
        if out_strength[i] > 0.0 {
            for j in 0..n {
                w[i][j] /= out_strength[i];
            }
        } else {
            for j in 0..n {
                w[i][j] = 1.0 / n as f64;
            }
        }
    }
    // A = I - d W^T, b = (1-d)/N
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = if i == j { 1.0 } else { 0.0 } - damping * w[j][i];
        }
        a[i][n] = (1.0 - damping) / n as f64;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..=n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut pi = vec![0.0; n];
    for row in (0..n).rev() {
        let mut v = a[row][n];
        for k in row + 1..n {
            v -= a[row][k] * pi[k];
        }
        pi[row] = v / a[row][row];
    }
    pi
}

#[test]
fn criterion_05_density_identity_and_pagerank_oracle() {
    check("05 density 120/210 and PageRank oracle", || {
        // 15 symbols, 8 uniform targets per row: 120 surviving edges
        let alphabet = Alphabet::default_scale_degrees();
        let n = alphabet.size();
        let mut counts = vec![vec![0u64; n]; n];
        for (i, row) in counts.iter_mut().enumerate() {
            let mut placed = 0;
            for j in 0..n {
                if j != i && placed < 8 {
                    row[j] = 5;
                    placed += 1;
                }
            }
        }
        let graph = chordnet::chord_graph(&counts, &alphabet, 0.01).unwrap();
        let analysis = chordnet::network_analysis(&graph, 0.85).unwrap();
        assert_eq!(analysis.edge_count, 120);
        assert!((analysis.density - 120.0 / 210.0).abs() < 1e-12);

        let mut r = rng(5);
        for _ in 0..200 {
            let nodes = r.gen_range(2..=5);
            let mut edges = Vec::new();
            for s in 0..nodes {
                for t in 0..nodes {
                    if s != t && r.gen_bool(0.5) {
                        edges.push((s, t, r.gen_range(0.05..1.0)));
                    }
                }
            }
            let fast = chordnet::pagerank(nodes, &edges, 0.85);
            let dense = pagerank_dense(nodes, &edges, 0.85);
            for (a, b) in fast.iter().zip(&dense) {
                assert!((a - b).abs() < 1e-8, "{fast:?} vs {dense:?}");
            }
        }
    });
}

fn er_edges(n: usize, p: f64, r: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if s != t && r.gen_bool(p) {
                edges.push((s, t, 1.0));
            }
        }
    }
    edges
}

#[test]
fn criterion_06_random_graph_clustering_and_modularity() {
    check("06 ER clustering ~ p, modularity ~ 0", || {
        let mut means = Vec::new();
        for seed in 0..20 {
            let mut r = rng(600 + seed);
            let edges = er_edges(200, 0.3, &mut r);
            let pairs: Vec<(usize, usize)> = edges.iter().map(|&(s, t, _)| (s, t)).collect();
            let local = chordnet::directed_clustering(200, &pairs);
            means.push(local.iter().sum::<f64>() / 200.0);
        }
        let mean = means.iter().sum::<f64>() / means.len() as f64;
        assert!((mean - 0.3).abs() < 0.05, "mean clustering {mean}");

        for seed in 0..20 {
            let mut r = rng(700 + seed);
            let edges = er_edges(400, 0.3, &mut r);
            let projection = chordnet::undirected_projection(&edges);
            let (_, _, q) = chordnet::greedy_modularity(400, &projection);
            assert!(q < 0.15, "seed {seed}: Q = {q}");
        }
    });
}

#[test]
fn criterion_07_stationarity_anchors() {
    check("07 stationarity block anchors", || {
        let alphabet = Alphabet::new(["a", "b", "c", "d"]).unwrap();
        // two disjoint-support halves
        let mut items = vec!["a"; 100];
        items.extend(vec!["b"; 100]);
        let seq = SymbolSequence::new(items);
        let s = dynamics::stationarity_test(&seq, &alphabet, 2, false).unwrap();
        assert!(s.p_value < 0.001, "p {}", s.p_value);
        assert!((s.cramers_v - 1.0).abs() < 1e-12, "V {}", s.cramers_v);

        // four identical blocks
        let block = ["a", "b", "c", "d", "a", "b"];
        let items: Vec<&str> = block.iter().cycle().take(240).cloned().collect();
        let seq = SymbolSequence::new(items);
        let s = dynamics::stationarity_test(&seq, &alphabet, 4, false).unwrap();
        assert_eq!(s.chi2, 0.0);
        assert_eq!(s.p_value, 1.0);
        assert_eq!(s.cramers_v, 0.0);
    });
}

#[test]
fn criterion_08_higuchi_anchors() {
    check("08 Higuchi noise ~ 2, ramp ~ 1", || {
        let mut dims = Vec::new();
        for seed in 0..10 {
            let mut r = rng(800 + seed);
            let series: Vec<f64> = (0..4096).map(|_| r.gen::<f64>() - 0.5).collect();
            let fit = dynamics::higuchi_fractal_dimension(&series, 16).unwrap();
            assert!(fit.r_squared > 0.99, "noise r2 {}", fit.r_squared);
            dims.push(fit.d);
        }
        let mean = dims.iter().sum::<f64>() / dims.len() as f64;
        assert!((mean - 2.0).abs() < 0.1, "noise mean D {mean}");

        let ramp: Vec<f64> = (0..4096).map(|i| 0.25 * i as f64).collect();
        let fit = dynamics::higuchi_fractal_dimension(&ramp, 16).unwrap();
        assert!((fit.d - 1.0).abs() < 0.05, "ramp D {}", fit.d);
        assert!(fit.r_squared > 0.99, "ramp r2 {}", fit.r_squared);
    });
}

#[test]
fn criterion_09_sinusoid_dominant_period() {
    check("09 sinusoid period recovery", || {
        for period in [8usize, 16, 20, 32, 64] {
            let n = period * 16.max(64 / period);
            let curve = TempoCurve::new(
                (0..n)
                    .map(|t| {
                        120.0
                            + 10.0
                                * (std::f64::consts::TAU * t as f64 / period as f64).sin()
                    })
                    .collect(),
            )
            .unwrap();
            let a =
                rubato::rubato_spectral(&curve, &ClassifierThresholds::default(), 32).unwrap();
            assert_eq!(a.category, RubatoCategory::Periodic, "P={period}");
            assert_eq!(
                a.dominant_periods[0].period_beats, period as f64,
                "P={period}"
            );
        }
    });
}

#[test]
fn criterion_10_decision_table_conformance() {
    check("10 classifier decision table", || {
        let t = ClassifierThresholds::default();
        let reference = |sigma: f64, ratio: f64| -> RubatoCategory {
            if sigma < 0.5 {
                RubatoCategory::Metronomic
            } else if ratio > 0.5 {
                RubatoCategory::Periodic
            } else if ratio > 0.3 {
                RubatoCategory::QuasiPeriodic
            } else if sigma > 3.0 {
                RubatoCategory::Free
            } else {
                RubatoCategory::Metronomic
            }
        };
        for si in 0..=1000 {
            for ri in 0..=100 {
                let sigma = si as f64 * 0.01;
                let ratio = ri as f64 * 0.01;
                assert_eq!(
                    rubato::classify(sigma, ratio, &t),
                    reference(sigma, ratio),
                    "sigma {sigma} ratio {ratio}"
                );
            }
        }
        assert_eq!(rubato::classify(5.0, 0.6, &t), RubatoCategory::Periodic);
    });
}

#[test]
fn criterion_11_sensitivity_sweep_shape() {
    check("11 sensitivity sweep: 17 runs, stable ratios", || {
        let mut r = rng(11);
        let curves: Vec<LabeledCurve> = (0..100)
            .map(|i| {
                let period = r.gen_range(6..30) as f64;
                let amp = r.gen_range(0.2..8.0);
                let noise = r.gen_range(0.0..2.0);
                let curve = TempoCurve::new(
                    (0..128)
                        .map(|t| {
                            110.0
                                + amp * (std::f64::consts::TAU * t as f64 / period).sin()
                                + noise * (r.gen::<f64>() - 0.5)
                        })
                        .collect(),
                )
                .unwrap();
                LabeledCurve {
                    label: format!("g{}", i % 4),
                    id: format!("c{i}"),
                    curve,
                }
            })
            .collect();
        let runs =
            rubato::threshold_sensitivity(&curves, &ClassifierThresholds::default(), 32).unwrap();
        assert_eq!(runs.len(), 17);
        let baseline: Vec<(String, u64)> = runs[0]
            .per_curve
            .iter()
            .map(|o| (o.id.clone(), o.periodicity_ratio.to_bits()))
            .collect();
        for run in &runs[1..] {
            let this: Vec<(String, u64)> = run
                .per_curve
                .iter()
                .map(|o| (o.id.clone(), o.periodicity_ratio.to_bits()))
                .collect();
            assert_eq!(baseline, this, "run {}", run.run_label);
        }
    });
}

fn laplace_sample(n: usize, location: f64, scale: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = r.gen::<f64>() - 0.5;
            location - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
        })
        .collect()
}

fn exponential_sample(n: usize, rate: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| -(1.0 - r.gen::<f64>()).ln() / rate).collect()
}

#[test]
fn criterion_12_interval_fit_recovery() {
    check("12 interval-fit recovery and CI coverage", || {
        let mut r = rng(12);
        let sample = laplace_sample(10_000, 0.0, 2.0, &mut r);
        let a = intervals::interval_analysis(&sample).unwrap();
        match a.family {
            FittedFamily::Laplace { scale, .. } => {
                assert!((1.9..=2.1).contains(&scale), "b {scale}")
            }
            other => panic!("expected laplace, got {other:?}"),
        }
        let sample = exponential_sample(10_000, 1.5, &mut r);
        let a = intervals::interval_analysis(&sample).unwrap();
        match a.family {
            FittedFamily::Exponential { rate } => {
                assert!((1.45..=1.55).contains(&rate), "lambda {rate}")
            }
            other => panic!("expected exponential, got {other:?}"),
        }

        let mut laplace_hits = 0;
        let mut exponential_hits = 0;
        for trial in 0..100u64 {
            let mut r = rng(1200 + trial);
            let sample = laplace_sample(400, 0.0, 2.0, &mut r);
            let boot = intervals::interval_param_bootstrap(&sample, 1000, trial).unwrap();
            let (_, lo, hi) = &boot.intervals[1];
            if *lo <= 2.0 && 2.0 <= *hi {
                laplace_hits += 1;
            }
            let sample = exponential_sample(400, 1.5, &mut r);
            let boot = intervals::interval_param_bootstrap(&sample, 1000, trial).unwrap();
            let (_, lo, hi) = &boot.intervals[0];
            if *lo <= 1.5 && 1.5 <= *hi {
                exponential_hits += 1;
            }
        }
        assert!(laplace_hits >= 90, "laplace coverage {laplace_hits}/100");
        assert!(
            exponential_hits >= 90,
            "exponential coverage {exponential_hits}/100"
        );
    });
}

#[test]
fn criterion_13_spearman_and_jackknife_leverage() {
    check("13 spearman hand value, jackknife leverage", || {
        let (rho, _) = resample::spearman(
            &[1.0, 2.0, 3.0, 4.0, 5.0],
            &[1.0, 3.0, 2.0, 5.0, 4.0],
        )
        .unwrap();
        assert_eq!(rho, 0.8);

        // 14 units; pairs touching the planted unit have reversed
        // distances, so leaving it out snaps rho to exactly 1
        let planted = "u00".to_string();
        let units: Vec<(String, f64)> =
            (0..14).map(|i| (format!("u{i:02}"), i as f64)).collect();
        let dist = |subset: &[(String, f64)]| -> Vec<f64> {
            let mut out = Vec::new();
            for i in 0..subset.len() {
                for j in i + 1..subset.len() {
                    out.push((subset[i].1 - subset[j].1).abs());
                }
            }
            out
        };
        let planted_ref = planted.clone();
        let report = resample::jackknife_spearman(
            &units,
            |s| Ok(dist(s)),
            move |s| {
                let mut out = Vec::new();
                for i in 0..s.len() {
                    for j in i + 1..s.len() {
                        let d = (s[i].1 - s[j].1).abs();
                        if s[i].0 == planted_ref || s[j].0 == planted_ref {
                            out.push(20.0 - d);
                        } else {
                            out.push(d);
                        }
                    }
                }
                Ok(out)
            },
        )
        .unwrap();
        let (max_unit, _) = report
            .leave_out_values
            .iter()
            .max_by(|a, b| {
                (a.1 - report.rho_point)
                    .abs()
                    .partial_cmp(&(b.1 - report.rho_point).abs())
                    .unwrap()
            })
            .unwrap();
        assert_eq!(max_unit, &planted);
        let planted_rho = report
            .leave_out_values
            .iter()
            .find(|(u, _)| u == &planted)
            .unwrap()
            .1;
        assert_eq!(planted_rho, 1.0);
    });
}

#[test]
fn criterion_14_report_reproducibility() {
    check("14 byte-identical reports", || {
        use mirlab::cli::{execute, render, Cli, OutputFormat};
        use clap::Parser;

        let dir = tempfile::tempdir().unwrap();
        let mut r = rng(14);
        let mut entries = Vec::new();
        for i in 0..6 {
            let bpm: Vec<f64> = (0..96)
                .map(|t| {
                    115.0
                        + 4.0 * (std::f64::consts::TAU * t as f64 / 12.0).sin()
                        + r.gen::<f64>()
                })
                .collect();
            let path = dir.path().join(format!("c{i}.json"));
            std::fs::write(&path, serde_json::to_string(&BTreeMap::from([("bpm", bpm)])).unwrap())
                .unwrap();
            entries.push(serde_json::json!({
                "label": format!("perf{}", i % 2),
                "path": format!("c{i}.json"),
                "kind": "tempo_curve",
            }));
        }
        let manifest = dir.path().join("manifest.json");
        std::fs::write(
            &manifest,
            serde_json::to_string(&serde_json::json!({ "entries": entries })).unwrap(),
        )
        .unwrap();

        let args = [
            "mirlab",
            "case-rubato",
            "--manifest",
            manifest.to_str().unwrap(),
            "--sensitivity",
            "--seed",
            "7",
        ];
        let first = render(&execute(&Cli::parse_from(args)).unwrap(), OutputFormat::Json);
        let second = render(&execute(&Cli::parse_from(args)).unwrap(), OutputFormat::Json);
        assert!(!first.is_empty());
        assert_eq!(first.as_bytes(), second.as_bytes());
    });
}
