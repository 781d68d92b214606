//! Monte-Carlo localization study: paired per-trial pipeline runs and the
//! full topology x anchors x radio-range x range-error sweep.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::align::{apply_transform, fit_transform, localization_error};
use crate::apsp::{apsp_classic, apsp_refined_with_mode, DistanceMatrix, RefineMode};
use crate::error::{Error, Result};
use crate::mds::classical_mds;
use crate::seed::derive_seed;
use crate::topology::{
    build_graph, generate_positions, select_anchors, NetworkGraph, NodePositions, TopologyKind,
    TopologySpec,
};

/// Retry budget when a sampled deployment comes out disconnected.
const CONNECTIVITY_RETRIES: u64 = 1000;

// Tags keeping the derived seed streams of a trial disjoint.
const SEED_POSITIONS: u64 = 1;
const SEED_GRAPH: u64 = 2;
const SEED_ANCHORS: u64 = 3;

/// Which localization pipeline(s) to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    MdsMap,
    Imds,
    #[default]
    Both,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::MdsMap => "mdsmap",
            Algorithm::Imds => "imds",
            Algorithm::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mdsmap" => Ok(Algorithm::MdsMap),
            "imds" => Ok(Algorithm::Imds),
            "both" => Ok(Algorithm::Both),
            other => Err(Error::Parse(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Everything one trial depends on. The seed determines all random draws.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub topology: TopologySpec,
    pub anchor_count: usize,
    pub radio_range: f64,
    pub range_error_fraction: f64,
    pub refine_mode: RefineMode,
    pub seed: u64,
}

/// Paired outcome of one trial: both pipelines ran on the same network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub connectivity: f64,
    pub error_mdsmap: f64,
    pub error_imds: f64,
    pub seed: u64,
}

/// A connected sampled network with anchors selected.
pub struct SampledNetwork {
    pub truth: NodePositions,
    pub graph: NetworkGraph,
}

/// Draws a deployment and its measurement graph, re-sampling with fresh
/// derived seeds until the graph is connected (bounded retries).
pub fn sample_connected_network(config: &TrialConfig) -> Result<SampledNetwork> {
    config.topology.validate()?;
    for attempt in 0..CONNECTIVITY_RETRIES {
        let positions = generate_positions(
            &config.topology,
            derive_seed(config.seed, &[SEED_POSITIONS, attempt]),
        )?;
        let graph = build_graph(
            &positions,
            config.radio_range,
            config.range_error_fraction,
            derive_seed(config.seed, &[SEED_GRAPH, attempt]),
        )?;
        if graph.is_connected() {
            let truth = select_anchors(
                &positions,
                config.anchor_count,
                derive_seed(config.seed, &[SEED_ANCHORS]),
            )?;
            return Ok(SampledNetwork { truth, graph });
        }
    }
    Err(Error::ConnectivityRetriesExhausted {
        attempts: CONNECTIVITY_RETRIES as usize,
    })
}

/// One full pipeline pass on a prepared distance matrix: embed, align on
/// the anchors of `truth`, and return world-frame estimates carrying the
/// same anchor set.
pub fn localize_network(matrix: &DistanceMatrix, truth: &NodePositions) -> Result<NodePositions> {
    let map = classical_mds(matrix, 2)?;
    let anchor_ids: Vec<usize> = truth.anchor_ids().iter().copied().collect();
    let relative: Vec<[f64; 2]> = anchor_ids.iter().map(|&id| map.coords()[id]).collect();
    let transform = fit_transform(&relative, &truth.anchor_coords())?;
    let estimated = apply_transform(&map, &transform)?;
    NodePositions::with_anchors(estimated.coords().to_vec(), truth.anchor_ids().clone())
}

/// Runs both pipelines (classic and refined composition) on one sampled
/// network and reports the paired errors.
pub fn run_trial(config: &TrialConfig) -> Result<TrialResult> {
    let SampledNetwork { truth, graph } = sample_connected_network(config)?;
    let connectivity = graph.average_connectivity();

    let classic = apsp_classic(&graph)?;
    let est_classic = localize_network(&classic, &truth)?;
    let error_mdsmap = localization_error(&est_classic, &truth, config.radio_range)?.error_percent;

    let refined = apsp_refined_with_mode(&graph, config.radio_range, config.refine_mode)?;
    let est_refined = localize_network(&refined, &truth)?;
    let error_imds = localization_error(&est_refined, &truth, config.radio_range)?.error_percent;

    Ok(TrialResult {
        connectivity,
        error_mdsmap,
        error_imds,
        seed: config.seed,
    })
}

/// The swept parameter grid. Every combination of the four axes is a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub topologies: Vec<TopologySpec>,
    pub anchor_counts: Vec<usize>,
    pub radio_ranges: Vec<f64>,
    pub range_error_fractions: Vec<f64>,
    pub refine_mode: RefineMode,
}

impl SweepSpec {
    /// The study defaults: three 100-node deployments on a 10x10 field,
    /// anchors {3, 4, 6, 10}, five radio ranges, range errors 0..25%.
    pub fn study_default() -> Self {
        let spacing = 10.0 / 9.0;
        SweepSpec {
            topologies: vec![
                TopologySpec::random(100, 10.0),
                TopologySpec::grid(100, spacing, 0.05),
                TopologySpec::hex_grid(100, spacing, 0.05),
            ],
            anchor_counts: vec![3, 4, 6, 10],
            radio_ranges: vec![1.5, 1.75, 2.0, 2.25, 2.5],
            range_error_fractions: vec![0.0, 0.05, 0.10, 0.15, 0.20, 0.25],
            refine_mode: RefineMode::AllHops,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.topologies.len()
            * self.anchor_counts.len()
            * self.radio_ranges.len()
            * self.range_error_fractions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell_count() == 0 {
            return Err(Error::InvalidParameter(
                "sweep has an empty axis; every axis needs at least one value".into(),
            ));
        }
        let kinds: BTreeSet<TopologyKind> = self.topologies.iter().map(|t| t.kind).collect();
        if kinds.len() != self.topologies.len() {
            return Err(Error::InvalidParameter(
                "sweep topologies must have distinct kinds (cell keys would collide)".into(),
            ));
        }
        for t in &self.topologies {
            t.validate()?;
        }
        for &a in &self.anchor_counts {
            if a < 3 {
                return Err(Error::TooFewAnchors { got: a });
            }
        }
        for &r in &self.radio_ranges {
            if r <= 0.0 || !r.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "radio range must be positive, got {r}"
                )));
            }
        }
        for &e in &self.range_error_fractions {
            if !(0.0..=0.5).contains(&e) {
                return Err(Error::InvalidParameter(format!(
                    "range error fraction must lie in [0, 0.5], got {e}"
                )));
            }
        }
        Ok(())
    }
}

/// Identity of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellKey {
    pub topology: TopologyKind,
    pub anchors: usize,
    pub radio_range: f64,
    pub range_error_fraction: f64,
}

impl Eq for CellKey {}

impl Ord for CellKey {
    // lexicographic: topology name, anchors, R, range error
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.topology
            .as_str()
            .cmp(other.topology.as_str())
            .then_with(|| self.anchors.cmp(&other.anchors))
            .then_with(|| self.radio_range.total_cmp(&other.radio_range))
            .then_with(|| {
                self.range_error_fraction
                    .total_cmp(&other.range_error_fraction)
            })
    }
}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl std::fmt::Display for CellKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} anchors={} R={} e={}",
            self.topology, self.anchors, self.radio_range, self.range_error_fraction
        )
    }
}

/// Per-cell aggregates over the trial repetitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub connectivity_mean: f64,
    pub connectivity_std: f64,
    pub err_mdsmap_mean: f64,
    pub err_mdsmap_std: f64,
    pub err_imds_mean: f64,
    pub err_imds_std: f64,
    pub trials: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

impl CellStats {
    pub fn from_trials(results: &[TrialResult]) -> Self {
        let conn: Vec<f64> = results.iter().map(|r| r.connectivity).collect();
        let mds: Vec<f64> = results.iter().map(|r| r.error_mdsmap).collect();
        let imds: Vec<f64> = results.iter().map(|r| r.error_imds).collect();
        let (connectivity_mean, connectivity_std) = mean_std(&conn);
        let (err_mdsmap_mean, err_mdsmap_std) = mean_std(&mds);
        let (err_imds_mean, err_imds_std) = mean_std(&imds);
        CellStats {
            connectivity_mean,
            connectivity_std,
            err_mdsmap_mean,
            err_mdsmap_std,
            err_imds_mean,
            err_imds_std,
            trials: results.len(),
        }
    }
}

/// Sweep outcome: aggregated cells in lexicographic key order, plus any
/// cells whose trials failed (reported, not fatal).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteResult {
    pub cells: Vec<(CellKey, CellStats)>,
    pub failures: Vec<(CellKey, String)>,
}

impl SuiteResult {
    pub fn get(&self, key: &CellKey) -> Option<&CellStats> {
        self.cells
            .binary_search_by(|(k, _)| k.cmp(key))
            .ok()
            .map(|idx| &self.cells[idx].1)
    }
}

fn kind_code(kind: TopologyKind) -> u64 {
    match kind {
        TopologyKind::Random => 0,
        TopologyKind::Grid => 1,
        TopologyKind::HexGrid => 2,
    }
}

/// Seed for one trial of one cell, independent of execution order.
pub fn trial_seed(base_seed: u64, key: &CellKey, trial: usize) -> u64 {
    derive_seed(
        base_seed,
        &[
            kind_code(key.topology),
            key.anchors as u64,
            key.radio_range.to_bits(),
            key.range_error_fraction.to_bits(),
            trial as u64,
        ],
    )
}

/// Runs the full sweep: `trials` repetitions per cell, cells in parallel.
/// Deterministic for a given `(sweep, trials, base_seed)`.
pub fn run_suite(sweep: &SweepSpec, trials: usize, base_seed: u64) -> Result<SuiteResult> {
    run_suite_with_progress(sweep, trials, base_seed, |_, _, _| {})
}

/// [`run_suite`] with a per-cell completion callback `(done, total, key)`.
/// The callback may fire from worker threads in any order.
pub fn run_suite_with_progress<F>(
    sweep: &SweepSpec,
    trials: usize,
    base_seed: u64,
    progress: F,
) -> Result<SuiteResult>
where
    F: Fn(usize, usize, &CellKey) + Sync,
{
    sweep.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut jobs: Vec<(CellKey, &TopologySpec)> = Vec::with_capacity(sweep.cell_count());
    for topology in &sweep.topologies {
        for &anchors in &sweep.anchor_counts {
            for &radio_range in &sweep.radio_ranges {
                for &range_error_fraction in &sweep.range_error_fractions {
                    jobs.push((
                        CellKey {
                            topology: topology.kind,
                            anchors,
                            radio_range,
                            range_error_fraction,
                        },
                        topology,
                    ));
                }
            }
        }
    }
    let total = jobs.len();
    let done = std::sync::atomic::AtomicUsize::new(0);

    let outcomes: Vec<(CellKey, std::result::Result<CellStats, String>)> = jobs
        .par_iter()
        .map(|(key, topology)| {
            let mut results = Vec::with_capacity(trials);
            let mut failure = None;
            for trial in 0..trials {
                let config = TrialConfig {
                    topology: (*topology).clone(),
                    anchor_count: key.anchors,
                    radio_range: key.radio_range,
                    range_error_fraction: key.range_error_fraction,
                    refine_mode: sweep.refine_mode,
                    seed: trial_seed(base_seed, key, trial),
                };
                match run_trial(&config) {
                    Ok(r) => results.push(r),
                    Err(e) => {
                        failure = Some(format!("trial {trial}: {e}"));
                        break;
                    }
                }
            }
            let outcome = match failure {
                None => Ok(CellStats::from_trials(&results)),
                Some(msg) => Err(msg),
            };
            let finished = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            progress(finished, total, key);
            (*key, outcome)
        })
        .collect();

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for (key, outcome) in outcomes {
        match outcome {
            Ok(stats) => cells.push((key, stats)),
            Err(msg) => failures.push((key, msg)),
        }
    }
    cells.sort_by_key(|c| c.0);
    failures.sort_by_key(|f| f.0);
    Ok(SuiteResult { cells, failures })
}

const RESULTS_HEADER: &str = "topology,anchors,R,range_error,connectivity_mean,err_mdsmap_mean,err_mdsmap_std,err_imds_mean,err_imds_std,trials";

/// Writes one row per cell in deterministic (lexicographic key) order.
pub fn write_results_csv<W: Write>(result: &SuiteResult, mut w: W) -> Result<()> {
    writeln!(w, "{RESULTS_HEADER}")?;
    for (key, s) in &result.cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            key.topology,
            key.anchors,
            key.radio_range,
            key.range_error_fraction,
            s.connectivity_mean,
            s.err_mdsmap_mean,
            s.err_mdsmap_std,
            s.err_imds_mean,
            s.err_imds_std,
            s.trials
        )?;
    }
    Ok(())
}

/// Writes the per-cell CSV to `path`.
pub fn export_results<P: AsRef<Path>>(result: &SuiteResult, path: P) -> Result<()> {
    write_results_csv(result, std::fs::File::create(path)?)
}

/// Reads a CSV produced by [`export_results`]. The per-cell connectivity
/// standard deviation is not serialized and reads back as 0.
pub fn read_results_csv<R: std::io::Read>(r: R) -> Result<SuiteResult> {
    let reader = BufReader::new(r);
    let mut cells = Vec::new();
    let mut saw_header = false;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != RESULTS_HEADER {
                return Err(Error::Parse(format!("unexpected results header `{line}`")));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::Parse(format!(
                "results line {}: expected 10 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse_f = |s: &str, name: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("line {}: bad {name} `{s}`", lineno + 1)))
        };
        let key = CellKey {
            topology: TopologyKind::parse(fields[0])?,
            anchors: fields[1].parse().map_err(|_| {
                Error::Parse(format!("line {}: bad anchors `{}`", lineno + 1, fields[1]))
            })?,
            radio_range: parse_f(fields[2], "R")?,
            range_error_fraction: parse_f(fields[3], "range_error")?,
        };
        let stats = CellStats {
            connectivity_mean: parse_f(fields[4], "connectivity_mean")?,
            connectivity_std: 0.0,
            err_mdsmap_mean: parse_f(fields[5], "err_mdsmap_mean")?,
            err_mdsmap_std: parse_f(fields[6], "err_mdsmap_std")?,
            err_imds_mean: parse_f(fields[7], "err_imds_mean")?,
            err_imds_std: parse_f(fields[8], "err_imds_std")?,
            trials: fields[9].parse().map_err(|_| {
                Error::Parse(format!("line {}: bad trials `{}`", lineno + 1, fields[9]))
            })?,
        };
        cells.push((key, stats));
    }
    if !saw_header {
        return Err(Error::Parse("results file has no header".into()));
    }
    cells.sort_by_key(|c| c.0);
    Ok(SuiteResult {
        cells,
        failures: Vec::new(),
    })
}

pub fn read_results_csv_file<P: AsRef<Path>>(path: P) -> Result<SuiteResult> {
    read_results_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn complete_graph_config(seed: u64) -> TrialConfig {
        TrialConfig {
            topology: TopologySpec::random(100, 10.0),
            anchor_count: 10,
            radio_range: 20.0,
            range_error_fraction: 0.0,
            refine_mode: RefineMode::AllHops,
            seed,
        }
    }

    #[test]
    fn complete_graph_recovers_positions() {
        for seed in 0..3u64 {
            let r = run_trial(&complete_graph_config(seed)).unwrap();
            assert!(r.error_mdsmap < 0.1, "seed {seed}: {}", r.error_mdsmap);
            assert!(r.error_imds < 0.1, "seed {seed}: {}", r.error_imds);
            // no multi-hop composition can occur, so the pipelines agree
            assert_eq!(r.error_mdsmap, r.error_imds);
            assert_eq!(r.connectivity, 99.0);
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let config = TrialConfig {
            topology: TopologySpec::random(36, 6.0),
            anchor_count: 4,
            radio_range: 2.0,
            range_error_fraction: 0.1,
            refine_mode: RefineMode::AllHops,
            seed: 1234,
        };
        let a = run_trial(&config).unwrap();
        let b = run_trial(&config).unwrap();
        assert_eq!(a, b);
        let c = run_trial(&TrialConfig {
            seed: 1235,
            ..config
        })
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn default_sweep_matches_study_grid() {
        let sweep = SweepSpec::study_default();
        sweep.validate().unwrap();
        assert_eq!(sweep.cell_count(), 360);
        assert_eq!(sweep.topologies.len(), 3);
        assert_eq!(sweep.anchor_counts, vec![3, 4, 6, 10]);
        assert_eq!(sweep.radio_ranges.len(), 5);
        assert_eq!(sweep.range_error_fractions.len(), 6);
    }

    #[test]
    fn sweep_validation_rejects_bad_axes() {
        let mut sweep = SweepSpec::study_default();
        sweep.anchor_counts.clear();
        assert!(sweep.validate().is_err());

        let mut sweep = SweepSpec::study_default();
        sweep.topologies.push(TopologySpec::random(64, 8.0));
        assert!(
            sweep.validate().is_err(),
            "duplicate kinds must be rejected"
        );

        let mut sweep = SweepSpec::study_default();
        sweep.anchor_counts = vec![2];
        assert!(sweep.validate().is_err());
    }

    fn tiny_sweep() -> SweepSpec {
        SweepSpec {
            topologies: vec![TopologySpec::random(16, 4.0)],
            anchor_counts: vec![4],
            radio_ranges: vec![2.0, 2.5],
            range_error_fractions: vec![0.0, 0.1],
            refine_mode: RefineMode::AllHops,
        }
    }

    #[test]
    fn single_cell_suite_equals_its_trial() {
        let sweep = SweepSpec {
            topologies: vec![TopologySpec::random(16, 4.0)],
            anchor_counts: vec![4],
            radio_ranges: vec![2.5],
            range_error_fractions: vec![0.0],
            refine_mode: RefineMode::AllHops,
        };
        let suite = run_suite(&sweep, 1, 99).unwrap();
        assert_eq!(suite.cells.len(), 1);
        assert!(suite.failures.is_empty());
        let (key, stats) = &suite.cells[0];
        let trial = run_trial(&TrialConfig {
            topology: sweep.topologies[0].clone(),
            anchor_count: 4,
            radio_range: 2.5,
            range_error_fraction: 0.0,
            refine_mode: RefineMode::AllHops,
            seed: trial_seed(99, key, 0),
        })
        .unwrap();
        assert_eq!(stats.trials, 1);
        assert_eq!(stats.connectivity_mean, trial.connectivity);
        assert_eq!(stats.err_mdsmap_mean, trial.error_mdsmap);
        assert_eq!(stats.err_imds_mean, trial.error_imds);
        assert_eq!(stats.err_imds_std, 0.0);
    }

    #[test]
    fn suite_is_deterministic_and_sorted() {
        let sweep = tiny_sweep();
        let a = run_suite(&sweep, 2, 7).unwrap();
        let b = run_suite(&sweep, 2, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 4);
        for w in a.cells.windows(2) {
            assert!(w[0].0 < w[1].0, "cells must be sorted by key");
        }
        let c = run_suite(&sweep, 2, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn equal_trials_have_zero_stddev() {
        let t = TrialResult {
            connectivity: 9.0,
            error_mdsmap: 4.0,
            error_imds: 3.0,
            seed: 1,
        };
        let stats = CellStats::from_trials(&[t, t]);
        assert_eq!(stats.err_mdsmap_std, 0.0);
        assert_eq!(stats.err_imds_std, 0.0);
        assert_eq!(stats.connectivity_std, 0.0);
        assert_eq!(stats.err_mdsmap_mean, 4.0);
        assert_eq!(stats.trials, 2);
    }

    #[test]
    fn stats_mean_lies_within_member_range() {
        let mk = |e: f64| TrialResult {
            connectivity: e + 1.0,
            error_mdsmap: e,
            error_imds: e / 2.0,
            seed: 0,
        };
        let trials: Vec<TrialResult> = [1.0, 2.0, 5.0].iter().map(|&e| mk(e)).collect();
        let stats = CellStats::from_trials(&trials);
        assert!(stats.err_mdsmap_mean >= 1.0 && stats.err_mdsmap_mean <= 5.0);
        assert_abs_diff_eq!(stats.err_mdsmap_mean, 8.0 / 3.0, epsilon = 1e-12);
        let mean = 8.0 / 3.0f64;
        let var = ((1.0 - mean).powi(2) + (2.0 - mean).powi(2) + (5.0 - mean).powi(2)) / 2.0;
        assert_abs_diff_eq!(stats.err_mdsmap_std, var.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn connectivity_grows_with_radio_range_on_a_fixed_grid() {
        // zero-noise grid: positions are identical across seeds, so the
        // connectivity means are deterministic per R
        let sweep = SweepSpec {
            topologies: vec![TopologySpec::grid(49, 1.0, 0.0)],
            anchor_counts: vec![4],
            radio_ranges: vec![1.5, 2.0, 2.5, 3.0],
            range_error_fractions: vec![0.0],
            refine_mode: RefineMode::AllHops,
        };
        let suite = run_suite(&sweep, 1, 5).unwrap();
        assert!(suite.failures.is_empty());
        let conns: Vec<f64> = suite
            .cells
            .iter()
            .map(|(_, s)| s.connectivity_mean)
            .collect();
        for w in conns.windows(2) {
            assert!(w[0] < w[1], "connectivity must grow with R: {conns:?}");
        }
    }

    #[test]
    fn results_csv_round_trip() {
        let suite = run_suite(&tiny_sweep(), 2, 3).unwrap();
        let mut buf = Vec::new();
        write_results_csv(&suite, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("topology,anchors,R,range_error,"));
        assert_eq!(text.lines().count(), 1 + suite.cells.len());

        let back = read_results_csv(buf.as_slice()).unwrap();
        let mut again = Vec::new();
        write_results_csv(&back, &mut again).unwrap();
        // everything serialized survives the round trip exactly
        assert_eq!(buf, again);
        for ((k1, s1), (k2, s2)) in suite.cells.iter().zip(&back.cells) {
            assert_eq!(k1, k2);
            assert_eq!(s1.err_mdsmap_mean, s2.err_mdsmap_mean);
            assert_eq!(s1.err_imds_mean, s2.err_imds_mean);
            assert_eq!(s1.connectivity_mean, s2.connectivity_mean);
            assert_eq!(s1.trials, s2.trials);
        }
    }

    #[test]
    fn empty_suite_exports_header_only() {
        let mut buf = Vec::new();
        write_results_csv(&SuiteResult::default(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("topology,anchors,R,range_error,"));
    }

    #[test]
    fn progress_callback_counts_cells() {
        let sweep = tiny_sweep();
        let count = std::sync::atomic::AtomicUsize::new(0);
        let suite = run_suite_with_progress(&sweep, 1, 11, |done, total, _key| {
            assert!(done >= 1 && done <= total);
            assert_eq!(total, 4);
            count.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        })
        .unwrap();
        assert_eq!(count.load(std::sync::atomic::Ordering::Relaxed), 4);
        assert_eq!(suite.cells.len(), 4);
    }

    #[test]
    fn suite_reports_impossible_cells_as_failures() {
        // nodes too sparse to ever connect: 16 nodes, R tiny
        let sweep = SweepSpec {
            topologies: vec![TopologySpec::random(16, 10.0)],
            anchor_counts: vec![4],
            radio_ranges: vec![0.05],
            range_error_fractions: vec![0.0],
            refine_mode: RefineMode::AllHops,
        };
        let suite = run_suite(&sweep, 1, 1).unwrap();
        assert_eq!(suite.cells.len(), 0);
        assert_eq!(suite.failures.len(), 1);
        assert!(suite.failures[0].1.contains("connected"));
    }
}
