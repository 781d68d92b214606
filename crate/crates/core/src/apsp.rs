//! All-pairs distance estimation over the neighbor graph.
//!
//! Two variants fill the matrix: classic additive shortest paths (Dijkstra
//! per source), and a refined variant that composes hops with a geometric
//! rule instead of addition. The refined rule places the relay node at the
//! midpoint of the feasible angular interval, which shortens multi-hop
//! estimates that additive composition overshoots.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::topology::NetworkGraph;

/// Symmetric matrix of estimated pairwise distances, zero diagonal.
///
/// Direct-neighbor entries always equal the measured edge distance; all
/// other entries come from shortest-path composition.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Wraps a row-major `n*n` buffer, checking the matrix invariants.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "distance matrix buffer has {} entries, expected {}",
                data.len(),
                n * n
            )));
        }
        let m = DistanceMatrix { n, data };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            if self.get(i, i) != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "distance matrix diagonal entry ({i}, {i}) is {}, expected 0",
                    self.get(i, i)
                )));
            }
            for j in (i + 1)..self.n {
                let d = self.get(i, j);
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "distance matrix entry ({i}, {j}) is {d}"
                    )));
                }
                if d.to_bits() != self.get(j, i).to_bits() {
                    return Err(Error::InvalidParameter(format!(
                        "distance matrix asymmetric at ({i}, {j}): {d} vs {}",
                        self.get(j, i)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Writes the dimension on its own line, then `n` rows of `n` floats.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let n: usize = loop {
            match lines.next() {
                Some(line) => {
                    let line = line?;
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    break line
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad dimension line `{line}`")))?;
                }
                None => return Err(Error::Parse("empty distance matrix file".into())),
            }
        };
        let mut data = Vec::with_capacity(n * n);
        for row in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing matrix row {row}")))??;
            let mut count = 0;
            for field in line.trim().split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {row}: bad value `{field}`")))?;
                data.push(v);
                count += 1;
            }
            if count != n {
                return Err(Error::Parse(format!(
                    "row {row}: expected {n} values, got {count}"
                )));
            }
        }
        DistanceMatrix::new(n, data)
    }

    pub fn read_csv_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// How multi-hop estimates are composed in the refined variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefineMode {
    /// Apply the geometric composition at every relaxation step.
    #[default]
    AllHops,
    /// Apply it only when joining two direct edges; add beyond two hops.
    TwoHopOnly,
}

impl RefineMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RefineMode::AllHops => "all-hops",
            RefineMode::TwoHopOnly => "two-hop-only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "all-hops" => Ok(RefineMode::AllHops),
            "two-hop-only" => Ok(RefineMode::TwoHopOnly),
            other => Err(Error::Parse(format!("unknown refine mode `{other}`"))),
        }
    }
}

/// Geometric composition of two hop distances within radio range `r`.
///
/// Returns `a` with `a^2 = d1^2 + d2^2 + 2*d1*d2*sin(theta/2)` where
/// `theta = arccos(clamp((d1^2 + d2^2 - r^2) / (2*d1*d2), -1, 1))`. The
/// clamp covers accumulated `d1` beyond `r`; at the upper clamp the rule
/// degrades to the right-angle midpoint `a^2 = d1^2 + d2^2`, at the lower
/// clamp it is exactly additive.
pub fn refine_compose(d1: f64, d2: f64, radio_range: f64) -> Result<f64> {
    for (name, v) in [("d1", d1), ("d2", d2), ("radio_range", radio_range)] {
        if v <= 0.0 || !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "refine_compose needs positive finite {name}, got {v}"
            )));
        }
    }
    Ok(refine_unchecked(d1, d2, radio_range))
}

/// Hot-loop core of [`refine_compose`]; callers guarantee positive inputs.
///
/// The result is trimmed into `[sqrt(d1^2 + d2^2), d1 + d2]`, the analytic
/// range of the formula, so rounding can never leak outside the bracket.
/// Symmetric in `(d1, d2)` bit-for-bit: every subexpression is commutative.
fn refine_unchecked(d1: f64, d2: f64, r: f64) -> f64 {
    let base = d1 * d1 + d2 * d2;
    let cross = 2.0 * (d1 * d2);
    let cos_theta = ((base - r * r) / cross).clamp(-1.0, 1.0);
    let a_sq = base + cross * (0.5 * cos_theta.acos()).sin();
    let hi = d1 + d2;
    let lo = base.sqrt().min(hi);
    a_sq.sqrt().clamp(lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    // BinaryHeap is a max-heap; reverse so the smallest (dist, node) pops
    // first, with the node index making pop order fully deterministic.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Per-source Dijkstra with a pluggable composition rule. `compose` maps
/// (settled distance, settled hop count, edge length) to the candidate.
fn dijkstra<F>(graph: &NetworkGraph, src: usize, compose: F) -> Vec<f64>
where
    F: Fn(f64, u32, f64) -> f64,
{
    let n = graph.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut hops = vec![0u32; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: src,
    });
    while let Some(HeapEntry { dist: d, node: u }) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        for &(v, w) in graph.neighbors(u) {
            if settled[v] {
                continue;
            }
            let cand = compose(d, hops[u], w);
            if cand < dist[v] {
                dist[v] = cand;
                hops[v] = hops[u] + 1;
                heap.push(HeapEntry {
                    dist: cand,
                    node: v,
                });
            }
        }
    }
    dist
}

/// Runs `dijkstra` from every source in parallel, then symmetrizes by
/// averaging the two directions, pins direct-neighbor entries to their
/// measured distances, and zeroes the diagonal.
fn apsp_with<F>(graph: &NetworkGraph, compose: F) -> Result<DistanceMatrix>
where
    F: Fn(f64, u32, f64) -> f64 + Sync,
{
    let n = graph.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|src| dijkstra(graph, src, &compose))
        .collect();
    for (i, row) in rows.iter().enumerate() {
        if let Some(j) = row.iter().position(|d| !d.is_finite()) {
            return Err(Error::Disconnected { from: i, to: j });
        }
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = 0.5 * (rows[i][j] + rows[j][i]);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    for (i, j, measured) in graph.edges() {
        data[i * n + j] = measured;
        data[j * n + i] = measured;
    }
    DistanceMatrix::new(n, data)
}

/// Shortest-path distance matrix under additive composition.
pub fn apsp_classic(graph: &NetworkGraph) -> Result<DistanceMatrix> {
    apsp_with(graph, |d, _hops, w| d + w)
}

/// Refined distance matrix: relaxation composes with [`refine_compose`]
/// instead of addition. `radio_range` must match the graph's radio range.
pub fn apsp_refined(graph: &NetworkGraph, radio_range: f64) -> Result<DistanceMatrix> {
    apsp_refined_with_mode(graph, radio_range, RefineMode::AllHops)
}

/// [`apsp_refined`] with an explicit multi-hop composition mode.
pub fn apsp_refined_with_mode(
    graph: &NetworkGraph,
    radio_range: f64,
    mode: RefineMode,
) -> Result<DistanceMatrix> {
    if radio_range <= 0.0 || !radio_range.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "radio_range must be positive, got {radio_range}"
        )));
    }
    let rel = (radio_range - graph.radio_range()).abs() / graph.radio_range();
    if rel > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "radio_range {radio_range} does not match the graph's {}",
            graph.radio_range()
        )));
    }
    let r = radio_range;
    match mode {
        RefineMode::AllHops => apsp_with(graph, move |d, _hops, w| {
            if d == 0.0 {
                w
            } else {
                refine_unchecked(d, w, r)
            }
        }),
        RefineMode::TwoHopOnly => apsp_with(graph, move |d, hops, w| match hops {
            0 => w,
            1 => refine_unchecked(d, w, r),
            _ => d + w,
        }),
    }
}
