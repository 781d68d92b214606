//! Node localization for 2-D wireless sensor networks.
//!
//! The pipeline estimates every node's position from hop-based distance
//! measurements: build the radio-range neighbor graph, fill a full distance
//! matrix by shortest-path composition, embed it with classical
//! multidimensional scaling, and align the embedding onto a handful of
//! anchor nodes with known positions. Two distance-composition rules are
//! provided: plain additive shortest paths, and a refined geometric rule
//! that accounts for the bend between consecutive hops.
//!
//! The [`experiment`] module wraps the pipeline in a seeded Monte-Carlo
//! harness sweeping topology, anchor count, radio range, and range error,
//! with CSV and SVG outputs.

pub mod align;
pub mod apsp;
pub mod config;
pub mod error;
pub mod experiment;
pub mod mds;
pub mod plot;
pub mod seed;
pub mod topology;

pub use align::{apply_transform, fit_transform, localization_error, ErrorReport, Transform2D};
pub use apsp::{
    apsp_classic, apsp_refined, apsp_refined_with_mode, refine_compose, DistanceMatrix, RefineMode,
};
pub use config::{SimConfig, SweepConfig};
pub use error::{Error, Result};
pub use experiment::{
    export_results, localize_network, read_results_csv, read_results_csv_file, run_suite,
    run_suite_with_progress, run_trial, sample_connected_network, trial_seed, write_results_csv,
    Algorithm, CellKey, CellStats, SampledNetwork, SuiteResult, SweepSpec, TrialConfig,
    TrialResult,
};
pub use mds::{
    classical_mds, double_center, symmetric_eigen, symmetric_eigen_top_k, RelativeMap, SquareMatrix,
};
pub use plot::{emit_plot, emit_plot_with, render_figure, FigureKind, FigureParams};
pub use seed::derive_seed;
pub use topology::{
    average_connectivity, build_graph, generate_positions, is_connected, select_anchors,
    NetworkGraph, NodePositions, TopologyKind, TopologySpec,
};
