//! Node deployments and the radio-range neighbor graph.
//!
//! Deployments cover the three studied layouts: uniform random placement in
//! a square field, a square grid, and a hexagonal grid, the grids optionally
//! perturbed by Gaussian placement error. The neighbor graph connects every
//! pair of nodes whose true distance is within the radio range `R`; each
//! edge carries a measured distance with bounded multiplicative range error.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative floor for measured edge distances, as a fraction of `R`.
const MEASURED_FLOOR_OF_R: f64 = 1e-9;

/// Deployment layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Random,
    Grid,
    HexGrid,
}

impl TopologyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TopologyKind::Random => "random",
            TopologyKind::Grid => "grid",
            TopologyKind::HexGrid => "hex_grid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(TopologyKind::Random),
            "grid" => Ok(TopologyKind::Grid),
            "hex_grid" => Ok(TopologyKind::HexGrid),
            other => Err(Error::Parse(format!("unknown topology kind `{other}`"))),
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of a node deployment. Lengths are in units of `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    /// Node count; must be a perfect square for the grid kinds.
    pub n: usize,
    /// Side of the square field for random placement.
    pub area_side: f64,
    /// Lattice spacing for the grid kinds.
    pub grid_spacing: f64,
    /// Std-dev of the Gaussian placement error, as a fraction of the spacing.
    pub placement_noise_fraction: f64,
}

impl TopologySpec {
    /// Uniform random placement of `n` nodes in an `area_side x area_side` field.
    pub fn random(n: usize, area_side: f64) -> Self {
        TopologySpec {
            kind: TopologyKind::Random,
            n,
            area_side,
            grid_spacing: 0.0,
            placement_noise_fraction: 0.0,
        }
    }

    /// Square grid with the given spacing and placement noise.
    pub fn grid(n: usize, grid_spacing: f64, placement_noise_fraction: f64) -> Self {
        TopologySpec {
            kind: TopologyKind::Grid,
            n,
            area_side: 0.0,
            grid_spacing,
            placement_noise_fraction,
        }
    }

    /// Hexagonal grid: odd rows shifted by half a spacing, row pitch `s*sqrt(3)/2`.
    pub fn hex_grid(n: usize, grid_spacing: f64, placement_noise_fraction: f64) -> Self {
        TopologySpec {
            kind: TopologyKind::HexGrid,
            n,
            area_side: 0.0,
            grid_spacing,
            placement_noise_fraction,
        }
    }

    /// Side length of the square lattice, or an error when `n` is not a
    /// perfect square.
    fn lattice_side(&self) -> Result<usize> {
        let side = (self.n as f64).sqrt().round() as usize;
        if side * side != self.n {
            return Err(Error::InvalidParameter(format!(
                "{} topology needs a perfect-square node count, got {}",
                self.kind, self.n
            )));
        }
        Ok(side)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidParameter(format!(
                "need at least 4 nodes, got {}",
                self.n
            )));
        }
        if self.placement_noise_fraction < 0.0 || !self.placement_noise_fraction.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "placement_noise_fraction must be finite and >= 0, got {}",
                self.placement_noise_fraction
            )));
        }
        match self.kind {
            TopologyKind::Random => {
                if self.area_side <= 0.0 || !self.area_side.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "area_side must be positive, got {}",
                        self.area_side
                    )));
                }
            }
            TopologyKind::Grid | TopologyKind::HexGrid => {
                self.lattice_side()?;
                if self.grid_spacing <= 0.0 || !self.grid_spacing.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "grid_spacing must be positive, got {}",
                        self.grid_spacing
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Ground-truth or estimated 2-D coordinates, with anchor flags.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePositions {
    coords: Vec<[f64; 2]>,
    anchor_ids: BTreeSet<usize>,
}

impl NodePositions {
    pub fn new(coords: Vec<[f64; 2]>) -> Result<Self> {
        Self::with_anchors(coords, BTreeSet::new())
    }

    pub fn with_anchors(coords: Vec<[f64; 2]>, anchor_ids: BTreeSet<usize>) -> Result<Self> {
        if coords.len() < 4 {
            return Err(Error::InvalidParameter(format!(
                "need at least 4 nodes, got {}",
                coords.len()
            )));
        }
        if let Some(p) = coords
            .iter()
            .find(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "non-finite coordinate ({}, {})",
                p[0], p[1]
            )));
        }
        if let Some(&id) = anchor_ids.iter().find(|&&id| id >= coords.len()) {
            return Err(Error::InvalidParameter(format!(
                "anchor id {id} out of range for {} nodes",
                coords.len()
            )));
        }
        Ok(NodePositions { coords, anchor_ids })
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn anchor_ids(&self) -> &BTreeSet<usize> {
        &self.anchor_ids
    }

    pub fn anchor_count(&self) -> usize {
        self.anchor_ids.len()
    }

    pub fn is_anchor(&self, id: usize) -> bool {
        self.anchor_ids.contains(&id)
    }

    /// Anchor coordinates in ascending anchor-id order.
    pub fn anchor_coords(&self) -> Vec<[f64; 2]> {
        self.anchor_ids.iter().map(|&id| self.coords[id]).collect()
    }

    /// Writes `id,x,y,is_anchor` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "id,x,y,is_anchor")?;
        for (id, p) in self.coords.iter().enumerate() {
            writeln!(w, "{id},{},{},{}", p[0], p[1], u8::from(self.is_anchor(id)))?;
        }
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut rows: Vec<(usize, [f64; 2], bool)> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || lineno == 0 && line.starts_with("id,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!(
                    "positions line {}: expected 4 fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let id: usize = parse_field(fields[0], lineno, "id")?;
            let x: f64 = parse_field(fields[1], lineno, "x")?;
            let y: f64 = parse_field(fields[2], lineno, "y")?;
            let anchor_flag: u8 = parse_field(fields[3], lineno, "is_anchor")?;
            rows.push((id, [x, y], anchor_flag != 0));
        }
        rows.sort_by_key(|r| r.0);
        let mut coords = Vec::with_capacity(rows.len());
        let mut anchors = BTreeSet::new();
        for (expect, (id, p, is_anchor)) in rows.into_iter().enumerate() {
            if id != expect {
                return Err(Error::Parse(format!(
                    "positions file: ids must be 0..n-1 without gaps (missing {expect})"
                )));
            }
            if is_anchor {
                anchors.insert(id);
            }
            coords.push(p);
        }
        NodePositions::with_anchors(coords, anchors)
    }

    pub fn read_csv_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, lineno: usize, name: &str) -> Result<T> {
    s.trim().parse().map_err(|_| {
        Error::Parse(format!(
            "line {}: bad value `{}` for field {}",
            lineno + 1,
            s,
            name
        ))
    })
}

/// Radio-range neighbor graph with measured per-edge distances.
///
/// An edge exists exactly when the true distance between two nodes is at
/// most `R`; its measured distance is the true distance with multiplicative
/// range error applied. Edges are undirected and carry one noise draw per
/// unordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    n: usize,
    radio_range: f64,
    /// Adjacency lists sorted by neighbor index; both directions present.
    adj: Vec<Vec<(usize, f64)>>,
    edge_count: usize,
}

impl NetworkGraph {
    /// Builds a graph from an unordered edge list.
    pub fn from_edges<I>(n: usize, radio_range: f64, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if radio_range <= 0.0 || !radio_range.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "radio_range must be positive, got {radio_range}"
            )));
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut edge_count = 0;
        for (i, j, d) in edges {
            if i == j {
                return Err(Error::InvalidParameter(format!("self loop at node {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) must have a positive finite distance, got {d}"
                )));
            }
            if adj[i].iter().any(|&(k, _)| k == j) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge ({i}, {j})"
                )));
            }
            adj[i].push((j, d));
            adj[j].push((i, d));
            edge_count += 1;
        }
        for list in &mut adj {
            list.sort_by_key(|&(k, _)| k);
        }
        Ok(NetworkGraph {
            n,
            radio_range,
            adj,
            edge_count,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    /// Measured distance of the direct edge `(i, j)`, if the nodes are neighbors.
    pub fn measured(&self, i: usize, j: usize) -> Option<f64> {
        self.adj[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .ok()
            .map(|idx| self.adj[i][idx].1)
    }

    /// Edges as `(i, j, measured)` with `i < j`, ordered lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |&&(j, _)| j > i)
                .map(move |&(j, d)| (i, j, d))
        })
    }

    /// Average number of neighbors, `2|E| / n`.
    pub fn average_connectivity(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        2.0 * self.edge_count as f64 / self.n as f64
    }

    /// True when every node is reachable from node 0 (breadth-first search).
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// Writes an edge-list CSV. The graph parameters travel as `#` comment
    /// lines so the file round-trips without extra flags.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# n = {}", self.n)?;
        writeln!(w, "# radio_range = {}", self.radio_range)?;
        writeln!(w, "i,j,distance")?;
        for (i, j, d) in self.edges() {
            writeln!(w, "{i},{j},{d}")?;
        }
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads an edge-list CSV written by [`write_csv`](Self::write_csv).
    /// `radio_range_override` supplies `R` when the file has no metadata line.
    pub fn read_csv<R: std::io::Read>(r: R, radio_range_override: Option<f64>) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut n: Option<usize> = None;
        let mut radio_range = radio_range_override;
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        let mut max_node = 0usize;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((key, value)) = rest.split_once('=') {
                    match key.trim() {
                        "n" => n = Some(parse_field(value, lineno, "n")?),
                        "radio_range" if radio_range.is_none() => {
                            radio_range = Some(parse_field(value, lineno, "radio_range")?);
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.starts_with("i,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "edges line {}: expected 3 fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let i: usize = parse_field(fields[0], lineno, "i")?;
            let j: usize = parse_field(fields[1], lineno, "j")?;
            let d: f64 = parse_field(fields[2], lineno, "distance")?;
            max_node = max_node.max(i).max(j);
            edges.push((i, j, d));
        }
        let radio_range = radio_range.ok_or_else(|| {
            Error::Parse("edge file has no radio_range metadata and none was supplied".into())
        })?;
        let n = n.unwrap_or(max_node + 1);
        NetworkGraph::from_edges(n, radio_range, edges)
    }

    pub fn read_csv_file<P: AsRef<Path>>(
        path: P,
        radio_range_override: Option<f64>,
    ) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, radio_range_override)
    }
}

/// Average number of neighbors, `2|E| / n`.
pub fn average_connectivity(graph: &NetworkGraph) -> f64 {
    graph.average_connectivity()
}

/// True when the graph has a single connected component.
pub fn is_connected(graph: &NetworkGraph) -> bool {
    graph.is_connected()
}

/// Generates a node deployment. Deterministic for a given seed.
pub fn generate_positions(spec: &TopologySpec, seed: u64) -> Result<NodePositions> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = match spec.kind {
        TopologyKind::Random => (0..spec.n)
            .map(|_| {
                let x = rng.random_range(0.0..spec.area_side);
                let y = rng.random_range(0.0..spec.area_side);
                [x, y]
            })
            .collect(),
        TopologyKind::Grid => {
            let side = spec.lattice_side()?;
            let s = spec.grid_spacing;
            lattice(
                side,
                &mut rng,
                spec.placement_noise_fraction * s,
                |row, col| [col as f64 * s, row as f64 * s],
            )
        }
        TopologyKind::HexGrid => {
            let side = spec.lattice_side()?;
            let s = spec.grid_spacing;
            let pitch = s * 3.0f64.sqrt() / 2.0;
            lattice(
                side,
                &mut rng,
                spec.placement_noise_fraction * s,
                |row, col| {
                    let offset = if row % 2 == 1 { s / 2.0 } else { 0.0 };
                    [col as f64 * s + offset, row as f64 * pitch]
                },
            )
        }
    };
    NodePositions::new(coords)
}

fn lattice<F>(side: usize, rng: &mut ChaCha8Rng, sigma: f64, point: F) -> Vec<[f64; 2]>
where
    F: Fn(usize, usize) -> [f64; 2],
{
    let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("sigma validated"));
    let mut coords = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            let mut p = point(row, col);
            if let Some(n) = &noise {
                p[0] += n.sample(rng);
                p[1] += n.sample(rng);
            }
            coords.push(p);
        }
    }
    coords
}

/// Marks `count` randomly chosen distinct nodes as anchors.
pub fn select_anchors(positions: &NodePositions, count: usize, seed: u64) -> Result<NodePositions> {
    if count < 3 {
        return Err(Error::TooFewAnchors { got: count });
    }
    if count > positions.n() {
        return Err(Error::InvalidParameter(format!(
            "anchor count {count} exceeds node count {}",
            positions.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchor_ids: BTreeSet<usize> = sample(&mut rng, positions.n(), count).into_iter().collect();
    NodePositions::with_anchors(positions.coords.clone(), anchor_ids)
}

/// Builds the radio-range neighbor graph with multiplicative range error.
///
/// An edge exists for every pair whose true distance is at most `R`; the
/// measured distance is `true * (1 + u)` with `u` uniform on
/// `[-range_error_fraction, +range_error_fraction]`, one draw per unordered
/// pair, clamped to a positive floor of `1e-9 * R`.
pub fn build_graph(
    positions: &NodePositions,
    radio_range: f64,
    range_error_fraction: f64,
    seed: u64,
) -> Result<NetworkGraph> {
    if radio_range <= 0.0 || !radio_range.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "radio_range must be positive, got {radio_range}"
        )));
    }
    if !(0.0..=0.5).contains(&range_error_fraction) {
        return Err(Error::InvalidParameter(format!(
            "range_error_fraction must lie in [0, 0.5], got {range_error_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = MEASURED_FLOOR_OF_R * radio_range;
    let coords = positions.coords();
    let n = positions.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            let true_dist = (dx * dx + dy * dy).sqrt();
            if true_dist <= radio_range {
                let measured = if range_error_fraction > 0.0 {
                    let u = rng.random_range(-range_error_fraction..=range_error_fraction);
                    true_dist * (1.0 + u)
                } else {
                    true_dist
                };
                edges.push((i, j, measured.max(floor)));
            }
        }
    }
    NetworkGraph::from_edges(n, radio_range, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn square_positions() -> NodePositions {
        NodePositions::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap()
    }

    #[test]
    fn random_points_stay_in_field() {
        let spec = TopologySpec::random(100, 10.0);
        let pos = generate_positions(&spec, 7).unwrap();
        assert_eq!(pos.n(), 100);
        for p in pos.coords() {
            assert!((0.0..=10.0).contains(&p[0]) && (0.0..=10.0).contains(&p[1]));
        }
    }

    #[test]
    fn zero_noise_grid_is_lattice_exact() {
        let spec = TopologySpec::grid(4, 1.0, 0.0);
        let pos = generate_positions(&spec, 0).unwrap();
        let mut got: Vec<[f64; 2]> = pos.coords().to_vec();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]);
    }

    #[test]
    fn hex_grid_offsets_odd_rows() {
        let spec = TopologySpec::hex_grid(4, 1.0, 0.0);
        let pos = generate_positions(&spec, 0).unwrap();
        let pitch = 3.0f64.sqrt() / 2.0;
        assert_eq!(pos.coords()[0], [0.0, 0.0]);
        assert_eq!(pos.coords()[1], [1.0, 0.0]);
        assert_abs_diff_eq!(pos.coords()[2][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pos.coords()[2][1], pitch, epsilon = 1e-15);
        assert_abs_diff_eq!(pos.coords()[3][0], 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pitch, 0.8660254, epsilon = 1e-7);
    }

    #[test]
    fn grid_rejects_non_square_counts() {
        let spec = TopologySpec::grid(10, 1.0, 0.0);
        assert!(matches!(
            generate_positions(&spec, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let spec = TopologySpec::random(50, 10.0);
        let a = generate_positions(&spec, 42).unwrap();
        let b = generate_positions(&spec, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_positions(&spec, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noisy_grid_is_seed_deterministic() {
        let spec = TopologySpec::grid(100, 10.0 / 9.0, 0.05);
        assert_eq!(
            generate_positions(&spec, 5).unwrap(),
            generate_positions(&spec, 5).unwrap()
        );
    }

    #[test]
    fn select_anchors_all_nodes() {
        let pos = square_positions();
        let with = select_anchors(&pos, 4, 1).unwrap();
        assert_eq!(with.anchor_count(), 4);
        assert_eq!(
            with.anchor_ids().iter().copied().collect::<Vec<_>>(),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn select_anchors_deterministic_distinct() {
        let spec = TopologySpec::random(100, 10.0);
        let pos = generate_positions(&spec, 1).unwrap();
        let a = select_anchors(&pos, 10, 9).unwrap();
        let b = select_anchors(&pos, 10, 9).unwrap();
        assert_eq!(a.anchor_ids(), b.anchor_ids());
        assert_eq!(a.anchor_count(), 10);
        let three = select_anchors(&pos, 3, 2).unwrap();
        assert_eq!(
            three.anchor_ids(),
            select_anchors(&pos, 3, 2).unwrap().anchor_ids()
        );
    }

    #[test]
    fn select_anchors_rejects_bad_counts() {
        let pos = square_positions();
        assert!(matches!(
            select_anchors(&pos, 2, 0),
            Err(Error::TooFewAnchors { got: 2 })
        ));
        assert!(select_anchors(&pos, 5, 0).is_err());
    }

    #[test]
    fn zero_error_measures_true_distance() {
        let pos = square_positions();
        let g = build_graph(&pos, 1.5, 0.0, 3).unwrap();
        assert_eq!(g.measured(0, 1), Some(1.0));
        assert_eq!(g.measured(0, 3), Some(2.0f64.sqrt()));
    }

    #[test]
    fn range_cutoff_excludes_far_pairs() {
        let r = 1.0;
        let pos =
            NodePositions::new(vec![[0.0, 0.0], [1.01, 0.0], [5.0, 5.0], [5.0, 6.0]]).unwrap();
        let g = build_graph(&pos, r, 0.0, 0).unwrap();
        assert_eq!(g.measured(0, 1), None);
        assert_eq!(g.measured(2, 3), Some(1.0));
    }

    #[test]
    fn collinear_chain_connects_adjacent_only() {
        let r = 1.0;
        let pos = NodePositions::new(vec![[0.0, 0.0], [0.9, 0.0], [1.8, 0.0], [2.7, 0.0]]).unwrap();
        let g = build_graph(&pos, r, 0.0, 0).unwrap();
        let edges: Vec<(usize, usize)> = g.edges().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(edges, vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn measured_error_is_bounded() {
        let spec = TopologySpec::random(60, 10.0);
        let pos = generate_positions(&spec, 11).unwrap();
        let e = 0.3;
        let g = build_graph(&pos, 2.0, e, 12).unwrap();
        let coords = pos.coords();
        for (i, j, m) in g.edges() {
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            let t = (dx * dx + dy * dy).sqrt();
            assert!(
                m >= t * (1.0 - e) * (1.0 - 1e-12),
                "low bound broken: {m} vs {t}"
            );
            assert!(
                m <= t * (1.0 + e) * (1.0 + 1e-12),
                "high bound broken: {m} vs {t}"
            );
        }
    }

    #[test]
    fn graph_is_seed_deterministic() {
        let pos = generate_positions(&TopologySpec::random(50, 10.0), 4).unwrap();
        let a = build_graph(&pos, 2.0, 0.1, 77).unwrap();
        let b = build_graph(&pos, 2.0, 0.1, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn edge_set_is_permutation_equivariant() {
        let pos = generate_positions(&TopologySpec::random(30, 10.0), 21).unwrap();
        // relabel i -> n-1-i
        let n = pos.n();
        let relabeled: Vec<[f64; 2]> = (0..n).map(|i| pos.coords()[n - 1 - i]).collect();
        let relabeled = NodePositions::new(relabeled).unwrap();
        let g = build_graph(&pos, 2.0, 0.0, 0).unwrap();
        let h = build_graph(&relabeled, 2.0, 0.0, 0).unwrap();
        let mut mapped: Vec<(usize, usize)> = g
            .edges()
            .map(|(i, j, _)| {
                let (a, b) = (n - 1 - i, n - 1 - j);
                (a.min(b), a.max(b))
            })
            .collect();
        mapped.sort_unstable();
        let relabeled_edges: Vec<(usize, usize)> = h.edges().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(mapped, relabeled_edges);
    }

    #[test]
    fn connectivity_values() {
        // complete graph on 5 nodes
        let mut edges = Vec::new();
        for i in 0..5 {
            for j in (i + 1)..5 {
                edges.push((i, j, 1.0));
            }
        }
        let complete = NetworkGraph::from_edges(5, 1.0, edges).unwrap();
        assert_eq!(complete.average_connectivity(), 4.0);

        let path = NetworkGraph::from_edges(3, 1.0, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_abs_diff_eq!(path.average_connectivity(), 4.0 / 3.0, epsilon = 1e-15);

        let empty = NetworkGraph::from_edges(4, 1.0, Vec::new()).unwrap();
        assert_eq!(empty.average_connectivity(), 0.0);
    }

    #[test]
    fn connectedness() {
        let path = NetworkGraph::from_edges(3, 1.0, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert!(path.is_connected());
        let disjoint = NetworkGraph::from_edges(4, 1.0, vec![(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(!disjoint.is_connected());
        let single = NetworkGraph::from_edges(1, 1.0, Vec::new()).unwrap();
        assert!(single.is_connected());
    }

    #[test]
    fn positions_csv_round_trip() {
        let pos = select_anchors(&square_positions(), 3, 5).unwrap();
        let mut buf = Vec::new();
        pos.write_csv(&mut buf).unwrap();
        let back = NodePositions::read_csv(buf.as_slice()).unwrap();
        assert_eq!(pos, back);
    }

    #[test]
    fn edges_csv_round_trip_keeps_radio_range() {
        let pos = generate_positions(&TopologySpec::random(20, 10.0), 3).unwrap();
        let g = build_graph(&pos, 3.0, 0.05, 8).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = NetworkGraph::read_csv(buf.as_slice(), None).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn graph_rejects_bad_edges() {
        assert!(NetworkGraph::from_edges(3, 1.0, vec![(0, 0, 1.0)]).is_err());
        assert!(NetworkGraph::from_edges(3, 1.0, vec![(0, 5, 1.0)]).is_err());
        assert!(NetworkGraph::from_edges(3, 1.0, vec![(0, 1, 0.0)]).is_err());
        assert!(NetworkGraph::from_edges(3, 1.0, vec![(0, 1, 1.0), (1, 0, 1.0)]).is_err());
        assert!(NetworkGraph::from_edges(3, 0.0, Vec::<(usize, usize, f64)>::new()).is_err());
    }
}
