//! TOML configuration files for single-network runs and parameter sweeps.
//!
//! Every key is optional; missing values fall back to the study defaults,
//! so an empty file (or no file at all) describes the default experiment.

use std::path::Path;

use serde::Deserialize;

use crate::apsp::RefineMode;
use crate::error::{Error, Result};
use crate::experiment::{Algorithm, SweepSpec};
use crate::topology::{TopologyKind, TopologySpec};

/// Grid spacing that makes a 10x10 lattice span the same extent as the
/// 10-unit random field.
pub const DEFAULT_GRID_SPACING: f64 = 10.0 / 9.0;
pub const DEFAULT_PLACEMENT_NOISE: f64 = 0.05;

fn default_topology(
    kind: TopologyKind,
    n: usize,
    area_side: f64,
    grid_spacing: f64,
    placement_noise_fraction: f64,
) -> TopologySpec {
    match kind {
        TopologyKind::Random => TopologySpec::random(n, area_side),
        TopologyKind::Grid => TopologySpec::grid(n, grid_spacing, placement_noise_fraction),
        TopologyKind::HexGrid => TopologySpec::hex_grid(n, grid_spacing, placement_noise_fraction),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologySection {
    kind: Option<String>,
    n: Option<usize>,
    area_side: Option<f64>,
    grid_spacing: Option<f64>,
    placement_noise_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphSection {
    radio_range: Option<f64>,
    range_error_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocalizeSection {
    anchors: Option<usize>,
    algorithm: Option<String>,
    refine: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimConfigFile {
    seed: Option<u64>,
    topology: Option<TopologySection>,
    graph: Option<GraphSection>,
    localize: Option<LocalizeSection>,
}

/// Fully resolved single-network configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub topology: TopologySpec,
    pub radio_range: f64,
    pub range_error_fraction: f64,
    pub anchors: usize,
    pub algorithm: Algorithm,
    pub refine_mode: RefineMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            topology: TopologySpec::random(100, 10.0),
            radio_range: 2.0,
            range_error_fraction: 0.0,
            anchors: 10,
            algorithm: Algorithm::Both,
            refine_mode: RefineMode::AllHops,
        }
    }
}

impl SimConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let file: SimConfigFile =
            toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        let defaults = SimConfig::default();
        let t = file.topology.unwrap_or_default();
        let kind = match t.kind {
            Some(k) => TopologyKind::parse(&k)?,
            None => defaults.topology.kind,
        };
        let topology = default_topology(
            kind,
            t.n.unwrap_or(100),
            t.area_side.unwrap_or(10.0),
            t.grid_spacing.unwrap_or(DEFAULT_GRID_SPACING),
            t.placement_noise_fraction
                .unwrap_or(DEFAULT_PLACEMENT_NOISE),
        );
        let g = file.graph.unwrap_or_default();
        let l = file.localize.unwrap_or_default();
        let config = SimConfig {
            seed: file.seed.unwrap_or(defaults.seed),
            topology,
            radio_range: g.radio_range.unwrap_or(defaults.radio_range),
            range_error_fraction: g
                .range_error_fraction
                .unwrap_or(defaults.range_error_fraction),
            anchors: l.anchors.unwrap_or(defaults.anchors),
            algorithm: match l.algorithm {
                Some(a) => Algorithm::parse(&a)?,
                None => defaults.algorithm,
            },
            refine_mode: match l.refine {
                Some(m) => RefineMode::parse(&m)?,
                None => defaults.refine_mode,
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        if self.radio_range <= 0.0 || !self.radio_range.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "radio_range must be positive, got {}",
                self.radio_range
            )));
        }
        if !(0.0..=0.5).contains(&self.range_error_fraction) {
            return Err(Error::InvalidParameter(format!(
                "range_error_fraction must lie in [0, 0.5], got {}",
                self.range_error_fraction
            )));
        }
        if self.anchors < 3 {
            return Err(Error::TooFewAnchors { got: self.anchors });
        }
        if self.anchors > self.topology.n {
            return Err(Error::InvalidParameter(format!(
                "anchors {} exceeds node count {}",
                self.anchors, self.topology.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepTopologySection {
    kinds: Option<Vec<String>>,
    n: Option<usize>,
    area_side: Option<f64>,
    grid_spacing: Option<f64>,
    placement_noise_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnchorsSection {
    counts: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RadioRangeSection {
    values: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RangeErrorSection {
    fractions: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RefineSection {
    mode: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfigFile {
    trials: Option<usize>,
    seed: Option<u64>,
    topology: Option<SweepTopologySection>,
    anchors: Option<AnchorsSection>,
    radio_range: Option<RadioRangeSection>,
    range_error: Option<RangeErrorSection>,
    refine: Option<RefineSection>,
}

/// Fully resolved sweep configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub trials: usize,
    pub seed: u64,
    pub sweep: SweepSpec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            trials: 30,
            seed: 1,
            sweep: SweepSpec::study_default(),
        }
    }
}

impl SweepConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let file: SweepConfigFile =
            toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        let defaults = SweepConfig::default();
        let t = file.topology.unwrap_or_default();
        let kinds: Vec<TopologyKind> = match t.kinds {
            Some(names) => names
                .iter()
                .map(|k| TopologyKind::parse(k))
                .collect::<Result<_>>()?,
            None => vec![
                TopologyKind::Random,
                TopologyKind::Grid,
                TopologyKind::HexGrid,
            ],
        };
        let n = t.n.unwrap_or(100);
        let area_side = t.area_side.unwrap_or(10.0);
        let grid_spacing = t.grid_spacing.unwrap_or(DEFAULT_GRID_SPACING);
        let noise = t
            .placement_noise_fraction
            .unwrap_or(DEFAULT_PLACEMENT_NOISE);
        let topologies = kinds
            .into_iter()
            .map(|kind| default_topology(kind, n, area_side, grid_spacing, noise))
            .collect();
        let sweep = SweepSpec {
            topologies,
            anchor_counts: file
                .anchors
                .unwrap_or_default()
                .counts
                .unwrap_or_else(|| defaults.sweep.anchor_counts.clone()),
            radio_ranges: file
                .radio_range
                .unwrap_or_default()
                .values
                .unwrap_or_else(|| defaults.sweep.radio_ranges.clone()),
            range_error_fractions: file
                .range_error
                .unwrap_or_default()
                .fractions
                .unwrap_or_else(|| defaults.sweep.range_error_fractions.clone()),
            refine_mode: match file.refine.unwrap_or_default().mode {
                Some(m) => RefineMode::parse(&m)?,
                None => defaults.sweep.refine_mode,
            },
        };
        let config = SweepConfig {
            trials: file.trials.unwrap_or(defaults.trials),
            seed: file.seed.unwrap_or(defaults.seed),
            sweep,
        };
        if config.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        config.sweep.validate()?;
        Ok(config)
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }
}
