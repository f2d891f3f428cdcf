//! Chord-transition graph construction and the network descriptor
//! suite: weighted PageRank, directed local clustering, greedy
//! modularity communities, hop metrics on the largest strongly
//! connected component, and the derived five-feature vectors.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::distributions::Alphabet;
use crate::error::{Error, Result};

/// Conventional PageRank damping; the methodology specifies weighted
/// PageRank but no damping factor.
pub const DEFAULT_DAMPING: f64 = 0.85;

/// Edges with row-normalized probability <= this are pruned as noise.
pub const DEFAULT_PRUNE_THRESHOLD: f64 = 0.01;

const PAGERANK_TOL: f64 = 1e-10;

/// Directed weighted graph over a symbol alphabet. Weights are
/// row-normalized transition probabilities surviving the prune
/// threshold, so each weight is in (0, 1] and there are no self-loops.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChordGraph {
    pub alphabet: Alphabet,
    /// (source index, target index, probability weight)
    pub edges: Vec<(usize, usize, f64)>,
}

/// Full descriptor record for one chord graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkAnalysis {
    pub pagerank: Vec<f64>,
    pub in_degree: Vec<usize>,
    pub out_degree: Vec<usize>,
    /// Weighted in-degree per node.
    pub in_strength: Vec<f64>,
    pub local_clustering: Vec<f64>,
    pub edge_count: usize,
    pub density: f64,
    pub mean_clustering: f64,
    pub community_count: usize,
    /// Hop diameter of the largest strongly connected component; absent
    /// when that component has fewer than 2 nodes.
    pub diameter: Option<usize>,
    pub avg_path: Option<f64>,
    pub small_world: bool,
    pub gravity_centre: String,
    pub gravity_pagerank: f64,
}

/// The five graph descriptors used for composer-level comparison, in
/// fixed order: density, mean clustering, community count, average
/// shortest path, PageRank of the gravity centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkFeatureVector {
    pub density: f64,
    pub mean_clustering: f64,
    pub community_count: f64,
    pub avg_path: f64,
    pub gravity_pagerank: f64,
}

impl NetworkFeatureVector {
    pub const COMPONENT_NAMES: [&'static str; 5] = [
        "density",
        "mean_clustering",
        "community_count",
        "avg_path",
        "gravity_pagerank",
    ];

    pub fn components(&self) -> [f64; 5] {
        [
            self.density,
            self.mean_clustering,
            self.community_count,
            self.avg_path,
            self.gravity_pagerank,
        ]
    }
}

/// Symmetric pairwise distance matrix over labeled items.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    /// Feature components dropped because they were constant across all
    /// inputs (standardization would divide by zero).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_components: Vec<String>,
}

impl DistanceMatrix {
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

/// Build the pruned transition graph from a hollow bigram-count matrix.
///
/// Each row with a positive sum is normalized to probabilities; an edge
/// is retained iff its probability is strictly greater than `threshold`.
pub fn chord_graph(
    bigrams: &[Vec<u64>],
    alphabet: &Alphabet,
    threshold: f64,
) -> Result<ChordGraph> {
    let n = alphabet.size();
    if bigrams.len() != n || bigrams.iter().any(|row| row.len() != n) {
        return Err(Error::Invalid(format!(
            "bigram matrix must be {n}x{n} to match the alphabet"
        )));
    }
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::Invalid(format!(
            "prune threshold must be in [0, 1), got {threshold}"
        )));
    }
    for (i, row) in bigrams.iter().enumerate() {
        if row[i] != 0 {
            return Err(Error::Invalid(format!(
                "bigram matrix must be hollow; diagonal entry {i} is {}",
                row[i]
            )));
        }
    }
    let mut edges = Vec::new();
    let mut any_row = false;
    for (s, row) in bigrams.iter().enumerate() {
        let total: u64 = row.iter().sum();
        if total == 0 {
            continue;
        }
        any_row = true;
        for (t, &c) in row.iter().enumerate() {
            if c > 0 {
                let p = c as f64 / total as f64;
                if p > threshold {
                    edges.push((s, t, p));
                }
            }
        }
    }
    if !any_row {
        return Err(Error::Degenerate(
            "bigram matrix is all-zero; no transitions to build a graph from".into(),
        ));
    }
    Ok(ChordGraph {
        alphabet: alphabet.clone(),
        edges,
    })
}

/// Weighted PageRank by power iteration with uniform teleport.
/// Dangling nodes (zero out-strength) redistribute uniformly.
pub fn pagerank(n: usize, edges: &[(usize, usize, f64)], damping: f64) -> Vec<f64> {
    let mut out_strength = vec![0.0; n];
    for &(s, _, w) in edges {
        out_strength[s] += w;
    }
    let mut rank = vec![1.0 / n as f64; n];
    for _ in 0..10_000 {
        let dangling: f64 = (0..n)
            .filter(|&u| out_strength[u] == 0.0)
            .map(|u| rank[u])
            .sum();
        let base = (1.0 - damping) / n as f64 + damping * dangling / n as f64;
        let mut next = vec![base; n];
        for &(s, t, w) in edges {
            next[t] += damping * rank[s] * w / out_strength[s];
        }
        let diff: f64 = rank
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .sum();
        rank = next;
        if diff < PAGERANK_TOL {
            break;
        }
    }
    rank
}

/// Directed local clustering per node: directed triangles through the
/// node, counting all orientations, over deg_tot*(deg_tot-1) - 2*deg_bidir,
/// computed on the unweighted edge set. Nodes with no triangle capacity
/// score 0.
pub fn directed_clustering(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let mut adj = vec![vec![false; n]; n];
    for &(s, t) in edges {
        if s != t {
            adj[s][t] = true;
        }
    }
    // symmetrized adjacency with entries 0, 1, or 2
    let sym: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (adj[i][j] as u8 + adj[j][i] as u8) as f64)
                .collect()
        })
        .collect();
    (0..n)
        .map(|i| {
            let mut d_tot = 0usize;
            let mut d_bidir = 0usize;
            for j in 0..n {
                d_tot += adj[i][j] as usize + adj[j][i] as usize;
                if adj[i][j] && adj[j][i] {
                    d_bidir += 1;
                }
            }
            let capacity = d_tot * d_tot.saturating_sub(1) - 2 * d_bidir;
            if capacity == 0 {
                return 0.0;
            }
            // triangles = 1/2 * (S^3)_ii where S = A + A^T
            let mut cubed = 0.0;
            for j in 0..n {
                if sym[i][j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    cubed += sym[i][j] * sym[j][k] * sym[k][i];
                }
            }
            (cubed / 2.0) / capacity as f64
        })
        .collect()
}

/// Project a directed weighted edge list onto undirected edges with
/// weights summed across the two directions.
pub fn undirected_projection(edges: &[(usize, usize, f64)]) -> Vec<(usize, usize, f64)> {
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &(s, t, w) in edges {
        if s == t {
            continue;
        }
        let key = (s.min(t), s.max(t));
        *acc.entry(key).or_insert(0.0) += w;
    }
    acc.into_iter().map(|((a, b), w)| (a, b, w)).collect()
}

/// Weighted modularity of a community assignment on an undirected graph.
pub fn modularity(n: usize, und_edges: &[(usize, usize, f64)], assignment: &[usize]) -> f64 {
    let m: f64 = und_edges.iter().map(|&(_, _, w)| w).sum();
    if m == 0.0 {
        return 0.0;
    }
    let two_m = 2.0 * m;
    let mut degree = vec![0.0; n];
    let mut intra = 0.0;
    for &(a, b, w) in und_edges {
        degree[a] += w;
        degree[b] += w;
        if assignment[a] == assignment[b] {
            intra += 2.0 * w;
        }
    }
    let mut comm_degree: BTreeMap<usize, f64> = BTreeMap::new();
    for i in 0..n {
        *comm_degree.entry(assignment[i]).or_insert(0.0) += degree[i];
    }
    intra / two_m
        - comm_degree
            .values()
            .map(|&k| (k / two_m) * (k / two_m))
            .sum::<f64>()
}

/// Clauset-Newman-Moore greedy modularity agglomeration on a weighted
/// undirected graph. Ties in modularity gain are broken by the smallest
/// community index pair, so results are deterministic.
///
/// Returns (per-node community assignment with compact ids, community
/// count, final modularity).
pub fn greedy_modularity(
    n: usize,
    und_edges: &[(usize, usize, f64)],
) -> (Vec<usize>, usize, f64) {
    let two_m: f64 = 2.0 * und_edges.iter().map(|&(_, _, w)| w).sum::<f64>();
    if two_m == 0.0 {
        return ((0..n).collect(), n, 0.0);
    }
    // community adjacency: e[i][j] = inter-community weight / 2m
    let mut e: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    let mut a = vec![0.0; n];
    for &(u, v, w) in und_edges {
        let frac = w / two_m;
        *e.entry(u).or_default().entry(v).or_insert(0.0) += frac;
        *e.entry(v).or_default().entry(u).or_insert(0.0) += frac;
        a[u] += frac;
        a[v] += frac;
    }
    let mut active: BTreeSet<usize> = (0..n).collect();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (&i, nbrs) in &e {
            for (&j, &eij) in nbrs {
                if j <= i {
                    continue;
                }
                let gain = 2.0 * (eij - a[i] * a[j]);
                let better = match best {
                    None => true,
                    Some((g, bi, bj)) => {
                        gain > g + 1e-15 || ((gain - g).abs() <= 1e-15 && (i, j) < (bi, bj))
                    }
                };
                if better {
                    best = Some((gain, i, j));
                }
            }
        }
        match best {
            Some((gain, i, j)) if gain > 1e-12 => {
                // merge community j into i
                let j_nbrs = e.remove(&j).unwrap_or_default();
                for (k, w) in j_nbrs {
                    if k == i {
                        continue;
                    }
                    if let Some(knbrs) = e.get_mut(&k) {
                        knbrs.remove(&j);
                    }
                    *e.entry(i).or_default().entry(k).or_insert(0.0) += w;
                    *e.entry(k).or_default().entry(i).or_insert(0.0) += w;
                }
                if let Some(inbrs) = e.get_mut(&i) {
                    inbrs.remove(&j);
                }
                a[i] += a[j];
                let moved = std::mem::take(&mut members[j]);
                members[i].extend(moved);
                active.remove(&j);
            }
            _ => break,
        }
    }

    let mut assignment = vec![0usize; n];
    for (compact, &root) in active.iter().enumerate() {
        for &node in &members[root] {
            assignment[node] = compact;
        }
    }
    let q = modularity(n, und_edges, &assignment);
    (assignment, active.len(), q)
}

/// Tarjan strongly connected components; returns the node set of the
/// largest SCC (ties broken by smallest contained node index).
fn largest_scc(n: usize, edges: &[(usize, usize, f64)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(s, t, _) in edges {
        adj[s].push(t);
    }
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0usize;
    let mut components: Vec<Vec<usize>> = Vec::new();

    // iterative Tarjan
    for start in 0..n {
        if index[start] != usize::MAX {
            continue;
        }
        let mut call_stack: Vec<(usize, usize)> = vec![(start, 0)];
        while let Some(&mut (v, ref mut child)) = call_stack.last_mut() {
            if *child == 0 {
                index[v] = counter;
                low[v] = counter;
                counter += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *child < adj[v].len() {
                let w = adj[v][*child];
                *child += 1;
                if index[w] == usize::MAX {
                    call_stack.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    components.push(comp);
                }
                call_stack.pop();
                if let Some(&mut (parent, _)) = call_stack.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
    }
    components
        .into_iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .unwrap_or_default()
}

/// Unweighted hop diameter and mean shortest path on the subgraph
/// induced by `nodes`; None when fewer than 2 nodes.
fn hop_metrics(
    nodes: &[usize],
    n: usize,
    edges: &[(usize, usize, f64)],
) -> Option<(usize, f64)> {
    if nodes.len() < 2 {
        return None;
    }
    let in_set: Vec<bool> = {
        let mut v = vec![false; n];
        for &x in nodes {
            v[x] = true;
        }
        v
    };
    let mut adj = vec![Vec::new(); n];
    for &(s, t, _) in edges {
        if in_set[s] && in_set[t] {
            adj[s].push(t);
        }
    }
    let mut diameter = 0usize;
    let mut total = 0usize;
    let mut pairs = 0usize;
    for &src in nodes {
        let mut dist = vec![usize::MAX; n];
        dist[src] = 0;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for &dst in nodes {
            if dst != src {
                // within an SCC every pair is reachable
                debug_assert!(dist[dst] != usize::MAX);
                diameter = diameter.max(dist[dst]);
                total += dist[dst];
                pairs += 1;
            }
        }
    }
    Some((diameter, total as f64 / pairs as f64))
}

/// Compute the full descriptor suite for a chord graph.
pub fn network_analysis(g: &ChordGraph, damping: f64) -> Result<NetworkAnalysis> {
    if g.edges.is_empty() {
        return Err(Error::Degenerate("graph has no edges".into()));
    }
    let n = g.alphabet.size();
    let pr = pagerank(n, &g.edges, damping);

    let mut in_degree = vec![0usize; n];
    let mut out_degree = vec![0usize; n];
    let mut in_strength = vec![0.0; n];
    for &(s, t, w) in &g.edges {
        out_degree[s] += 1;
        in_degree[t] += 1;
        in_strength[t] += w;
    }

    let unweighted: Vec<(usize, usize)> = g.edges.iter().map(|&(s, t, _)| (s, t)).collect();
    let local_clustering = directed_clustering(n, &unweighted);
    let mean_clustering = local_clustering.iter().sum::<f64>() / n as f64;

    let edge_count = g.edges.len();
    let density = edge_count as f64 / (n * (n - 1)) as f64;

    let projection = undirected_projection(&g.edges);
    let (_, community_count, _) = greedy_modularity(n, &projection);

    let scc = largest_scc(n, &g.edges);
    let (diameter, avg_path) = match hop_metrics(&scc, n, &g.edges) {
        Some((d, p)) => (Some(d), Some(p)),
        None => (None, None),
    };

    let small_world = mean_clustering > 0.3
        && avg_path.map(|p| p > 0.0 && p < 3.0).unwrap_or(false);

    // argmax of pagerank, ties broken by alphabet order
    let gravity_idx = (0..n)
        .max_by(|&a, &b| pr[a].partial_cmp(&pr[b]).unwrap().then(b.cmp(&a)))
        .unwrap();

    Ok(NetworkAnalysis {
        gravity_centre: g.alphabet.symbol(gravity_idx).to_string(),
        gravity_pagerank: pr[gravity_idx],
        pagerank: pr,
        in_degree,
        out_degree,
        in_strength,
        local_clustering,
        edge_count,
        density,
        mean_clustering,
        community_count,
        diameter,
        avg_path,
        small_world,
    })
}

/// Extract the five comparison features from a complete analysis.
pub fn feature_vector(na: &NetworkAnalysis) -> Result<NetworkFeatureVector> {
    let avg_path = na.avg_path.ok_or_else(|| {
        Error::Degenerate(
            "feature vector requires path metrics; largest SCC has fewer than 2 nodes".into(),
        )
    })?;
    Ok(NetworkFeatureVector {
        density: na.density,
        mean_clustering: na.mean_clustering,
        community_count: na.community_count as f64,
        avg_path,
        gravity_pagerank: na.gravity_pagerank,
    })
}

/// Euclidean distances on column-standardized feature vectors.
///
/// Components constant across all inputs are dropped (their
/// standardization would divide by zero) and reported by name.
pub fn pairwise_network_distance(
    vectors: &[(String, NetworkFeatureVector)],
) -> Result<DistanceMatrix> {
    pairwise_network_distance_masked(vectors, [true; 5])
}

/// [`pairwise_network_distance`] restricted to the components enabled in
/// `mask` (indexed as [`NetworkFeatureVector::COMPONENT_NAMES`]), for
/// single-feature and drop-one ablations.
pub fn pairwise_network_distance_masked(
    vectors: &[(String, NetworkFeatureVector)],
    mask: [bool; 5],
) -> Result<DistanceMatrix> {
    if !mask.iter().any(|&m| m) {
        return Err(Error::Invalid(
            "feature mask must enable at least one component".into(),
        ));
    }
    if vectors.len() < 3 {
        return Err(Error::Degenerate(format!(
            "pairwise distance needs at least 3 vectors, got {}",
            vectors.len()
        )));
    }
    let n = vectors.len();
    let raw: Vec<[f64; 5]> = vectors.iter().map(|(_, v)| v.components()).collect();
    let mut standardized: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut dropped_components = Vec::new();
    for c in 0..5 {
        if !mask[c] {
            continue;
        }
        if raw.iter().all(|r| r[c] == raw[0][c]) {
            dropped_components.push(NetworkFeatureVector::COMPONENT_NAMES[c].to_string());
            continue;
        }
        let mean = raw.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        let var = raw.iter().map(|r| (r[c] - mean) * (r[c] - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        for (i, row) in standardized.iter_mut().enumerate() {
            row.push((raw[i][c] - mean) / std);
        }
    }
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = standardized[i]
                .iter()
                .zip(&standardized[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    Ok(DistanceMatrix {
        labels: vectors.iter().map(|(l, _)| l.clone()).collect(),
        values,
        dropped_components,
    })
}

/// Pairwise Euclidean distances between one-hot encodings of gravity
/// centres: 0 for equal centres, sqrt(2) for different ones.
pub fn gravity_one_hot(centres: &[String], alphabet: &Alphabet) -> Result<DistanceMatrix> {
    if centres.len() < 2 {
        return Err(Error::Degenerate(format!(
            "one-hot distances need at least 2 centres, got {}",
            centres.len()
        )));
    }
    for c in centres {
        if alphabet.index_of(c).is_none() {
            return Err(Error::UnknownSymbol(c.clone()));
        }
    }
    let n = centres.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = if centres[i] == centres[j] {
                0.0
            } else {
                std::f64::consts::SQRT_2
            };
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    Ok(DistanceMatrix {
        labels: centres.to_vec(),
        values,
        dropped_components: Vec::new(),
    })
}
