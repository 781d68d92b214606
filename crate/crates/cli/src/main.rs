//! Batch front end for the localization library: generate networks, run
//! the localization pipeline on one network, execute the full parameter
//! sweep, and render figures from sweep results.
//!
//! Exit codes: 0 on success, 1 for usage or configuration problems, 2 for
//! runtime failures (disconnected inputs, I/O, failed sweep cells).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use mdsloc::seed::derive_seed;
use mdsloc::{
    apsp_classic, apsp_refined_with_mode, build_graph, classical_mds, emit_plot_with,
    export_results, fit_transform, generate_positions, localization_error, localize_network,
    read_results_csv_file, run_suite_with_progress, select_anchors, Algorithm, DistanceMatrix,
    FigureKind, FigureParams, NetworkGraph, NodePositions, SimConfig, SuiteResult, SweepConfig,
    TopologyKind,
};

// Tags for the seed streams of a single-network run.
const SEED_POSITIONS: u64 = 1;
const SEED_GRAPH: u64 = 2;
const SEED_ANCHORS: u64 = 3;

#[derive(Parser)]
#[command(
    name = "mdsloc",
    version,
    about = "Sensor-network localization simulator (MDS-MAP and IMDS pipelines)"
)]
struct Cli {
    /// Worker thread cap (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a deployment and its measurement graph; write CSV files
    Generate(GenerateArgs),
    /// Run the localization pipeline(s) on one network
    Localize(LocalizeArgs),
    /// Run the Monte-Carlo parameter sweep and write per-cell results
    Experiment(ExperimentArgs),
    /// Render an SVG figure from sweep results
    Plot(PlotArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Network config file (TOML); defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct LocalizeArgs {
    /// Network config file (TOML); the network is generated in-process
    #[arg(long)]
    config: Option<PathBuf>,
    /// True positions CSV (id,x,y,is_anchor); replaces --config input
    #[arg(long, requires = "edges")]
    positions: Option<PathBuf>,
    /// Anchor-only positions CSV; estimates are produced without an
    /// error report
    #[arg(long, requires = "edges", conflicts_with = "positions")]
    anchors: Option<PathBuf>,
    /// Edge-list CSV (i,j,distance) matching --positions or --anchors
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Radio range override when the edge file lacks metadata
    #[arg(long)]
    radio_range: Option<f64>,
    /// Which pipeline(s) to run: mdsmap, imds, or both
    #[arg(long)]
    algorithm: Option<String>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the estimated distance matrices
    #[arg(long)]
    dump_distances: bool,
    /// Also write the embedding eigenvalue spectra
    #[arg(long)]
    dump_spectrum: bool,
    /// Also write per-node error tables
    #[arg(long)]
    per_node: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Sweep config file (TOML); the full study grid when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the config base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the per-cell trial count
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct PlotArgs {
    /// Results CSV produced by `experiment`
    #[arg(long)]
    results: PathBuf,
    /// Figure kind: error-vs-connectivity, error-vs-anchors,
    /// or error-vs-range-error
    #[arg(long)]
    figure: String,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Cell filter: topology kind (random, grid, hex_grid)
    #[arg(long)]
    topology: Option<String>,
    /// Cell filter: anchor count
    #[arg(long)]
    anchors: Option<usize>,
    /// Cell filter: radio range
    #[arg(long)]
    radio_range: Option<f64>,
    /// Cell filter: range-error fraction
    #[arg(long)]
    range_error: Option<f64>,
    /// Series source for per-anchor figures: mdsmap or imds
    #[arg(long)]
    algorithm: Option<String>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(1);
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            std::process::exit(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: could not configure thread pool: {e}");
            std::process::exit(2);
        }
    }
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Localize(args) => cmd_localize(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Plot(args) => cmd_plot(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

/// Usage and configuration mistakes exit 1; everything else is a runtime
/// failure and exits 2.
fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<mdsloc::Error>() {
        Some(
            mdsloc::Error::InvalidParameter(_)
            | mdsloc::Error::Parse(_)
            | mdsloc::Error::TooFewAnchors { .. },
        ) => 1,
        _ => 2,
    }
}

fn load_sim_config(path: Option<&Path>, seed: Option<u64>) -> anyhow::Result<SimConfig> {
    let mut config = match path {
        Some(p) => SimConfig::from_file(p).with_context(|| format!("loading {}", p.display()))?,
        None => SimConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

struct Network {
    truth: Option<NodePositions>,
    anchors: Vec<(usize, [f64; 2])>,
    graph: NetworkGraph,
    radio_range: f64,
}

fn network_from_config(config: &SimConfig) -> anyhow::Result<Network> {
    let positions = generate_positions(
        &config.topology,
        derive_seed(config.seed, &[SEED_POSITIONS, 0]),
    )?;
    let truth = select_anchors(
        &positions,
        config.anchors,
        derive_seed(config.seed, &[SEED_ANCHORS]),
    )?;
    let graph = build_graph(
        &truth,
        config.radio_range,
        config.range_error_fraction,
        derive_seed(config.seed, &[SEED_GRAPH, 0]),
    )?;
    let anchors = truth
        .anchor_ids()
        .iter()
        .map(|&id| (id, truth.coords()[id]))
        .collect();
    Ok(Network {
        truth: Some(truth),
        anchors,
        graph,
        radio_range: config.radio_range,
    })
}

fn cmd_generate(args: GenerateArgs) -> anyhow::Result<()> {
    let config = load_sim_config(args.config.as_deref(), args.seed)?;
    let network = network_from_config(&config)?;
    std::fs::create_dir_all(&args.out)?;
    let truth = network
        .truth
        .as_ref()
        .expect("generated networks carry truth");
    let positions_path = args.out.join("positions.csv");
    let edges_path = args.out.join("edges.csv");
    truth.write_csv_file(&positions_path)?;
    network.graph.write_csv_file(&edges_path)?;
    println!(
        "wrote {} and {}",
        positions_path.display(),
        edges_path.display()
    );
    println!(
        "nodes: {}  anchors: {}  edges: {}",
        truth.n(),
        truth.anchor_count(),
        network.graph.edge_count()
    );
    println!(
        "average connectivity: {:.3}  connected: {}",
        network.graph.average_connectivity(),
        network.graph.is_connected()
    );
    Ok(())
}

fn load_network(args: &LocalizeArgs, config: &SimConfig) -> anyhow::Result<Network> {
    if let Some(edges_path) = &args.edges {
        let graph = NetworkGraph::read_csv_file(edges_path, args.radio_range)
            .with_context(|| format!("loading {}", edges_path.display()))?;
        let radio_range = graph.radio_range();
        if let Some(pos_path) = &args.positions {
            let truth = NodePositions::read_csv_file(pos_path)
                .with_context(|| format!("loading {}", pos_path.display()))?;
            if truth.n() != graph.n() {
                bail!(mdsloc::Error::Mismatch(format!(
                    "positions file has {} nodes, edge file has {}",
                    truth.n(),
                    graph.n()
                )));
            }
            let anchors = truth
                .anchor_ids()
                .iter()
                .map(|&id| (id, truth.coords()[id]))
                .collect();
            Ok(Network {
                truth: Some(truth),
                anchors,
                graph,
                radio_range,
            })
        } else if let Some(anchor_path) = &args.anchors {
            let anchors = read_anchor_file(anchor_path, graph.n())?;
            Ok(Network {
                truth: None,
                anchors,
                graph,
                radio_range,
            })
        } else {
            bail!(mdsloc::Error::InvalidParameter(
                "--edges needs --positions or --anchors".into()
            ));
        }
    } else {
        network_from_config(config)
    }
}

/// Anchor-only input: positions-CSV rows for the anchor nodes alone.
fn read_anchor_file(path: &Path, n: usize) -> anyhow::Result<Vec<(usize, [f64; 2])>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("loading {}", path.display()))?;
    let mut anchors = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("id,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            bail!(mdsloc::Error::Parse(format!(
                "anchor file line {}: expected id,x,y[,is_anchor]",
                lineno + 1
            )));
        }
        let id: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| mdsloc::Error::Parse(format!("bad anchor id `{}`", fields[0])))?;
        let x: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| mdsloc::Error::Parse(format!("bad anchor x `{}`", fields[1])))?;
        let y: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| mdsloc::Error::Parse(format!("bad anchor y `{}`", fields[2])))?;
        if id >= n {
            bail!(mdsloc::Error::Mismatch(format!(
                "anchor id {id} out of range for {n} nodes"
            )));
        }
        anchors.push((id, [x, y]));
    }
    anchors.sort_by_key(|a| a.0);
    if anchors.len() < 3 {
        bail!(mdsloc::Error::TooFewAnchors { got: anchors.len() });
    }
    Ok(anchors)
}

struct PipelineOutput {
    name: &'static str,
    error_percent: Option<f64>,
    report_row: String,
}

fn run_pipeline(
    name: &'static str,
    matrix: &DistanceMatrix,
    network: &Network,
    args: &LocalizeArgs,
) -> anyhow::Result<PipelineOutput> {
    let estimated = match &network.truth {
        Some(truth) => localize_network(matrix, truth)?,
        None => {
            let map = classical_mds(matrix, 2)?;
            let relative: Vec<[f64; 2]> = network
                .anchors
                .iter()
                .map(|&(id, _)| map.coords()[id])
                .collect();
            let world: Vec<[f64; 2]> = network.anchors.iter().map(|&(_, p)| p).collect();
            let transform = fit_transform(&relative, &world)?;
            let coords: Vec<[f64; 2]> = map.coords().iter().map(|&p| transform.apply(p)).collect();
            NodePositions::with_anchors(
                coords,
                network.anchors.iter().map(|&(id, _)| id).collect(),
            )?
        }
    };
    let est_path = args.out.join(format!("estimated_{name}.csv"));
    estimated.write_csv_file(&est_path)?;

    if args.dump_distances {
        matrix.write_csv_file(args.out.join(format!("distances_{name}.csv")))?;
    }
    if args.dump_spectrum {
        let map = classical_mds(matrix, 2)?;
        map.write_spectrum_csv_file(args.out.join(format!("spectrum_{name}.csv")))?;
    }

    match &network.truth {
        Some(truth) => {
            let report = localization_error(&estimated, truth, network.radio_range)?;
            if args.per_node {
                report.write_per_node_csv_file(args.out.join(format!("per_node_{name}.csv")))?;
            }
            Ok(PipelineOutput {
                name,
                error_percent: Some(report.error_percent),
                report_row: format!(
                    "{name},{},{},{},{}",
                    report.n, report.anchor_count, report.radio_range, report.error_percent
                ),
            })
        }
        None => Ok(PipelineOutput {
            name,
            error_percent: None,
            report_row: format!(
                "{name},{},{},{},unavailable",
                network.graph.n(),
                network.anchors.len(),
                network.radio_range
            ),
        }),
    }
}

fn cmd_localize(args: LocalizeArgs) -> anyhow::Result<()> {
    let config = load_sim_config(args.config.as_deref(), args.seed)?;
    let algorithm = match &args.algorithm {
        Some(a) => Algorithm::parse(a)?,
        None => config.algorithm,
    };
    let network = load_network(&args, &config)?;
    std::fs::create_dir_all(&args.out)?;

    let mut outputs = Vec::new();
    if matches!(algorithm, Algorithm::MdsMap | Algorithm::Both) {
        let matrix = apsp_classic(&network.graph)?;
        outputs.push(run_pipeline("mdsmap", &matrix, &network, &args)?);
    }
    if matches!(algorithm, Algorithm::Imds | Algorithm::Both) {
        let matrix =
            apsp_refined_with_mode(&network.graph, network.radio_range, config.refine_mode)?;
        outputs.push(run_pipeline("imds", &matrix, &network, &args)?);
    }

    let report_path = args.out.join("error_report.csv");
    let mut report = String::from("algorithm,n,anchors,R,error_percent\n");
    for o in &outputs {
        report.push_str(&o.report_row);
        report.push('\n');
    }
    std::fs::write(&report_path, report)?;

    for o in &outputs {
        match o.error_percent {
            Some(e) => println!("{}: error {:.4}% of R", o.name, e),
            None => println!(
                "{}: estimates written (no ground truth, error unavailable)",
                o.name
            ),
        }
    }
    println!("wrote {}", report_path.display());
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> anyhow::Result<()> {
    let mut config = match &args.config {
        Some(p) => SweepConfig::from_file(p).with_context(|| format!("loading {}", p.display()))?,
        None => SweepConfig::default(),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(t) = args.trials {
        if t == 0 {
            bail!(mdsloc::Error::InvalidParameter(
                "trials must be at least 1".into()
            ));
        }
        config.trials = t;
    }
    std::fs::create_dir_all(&args.out)?;

    let suite = run_suite_with_progress(
        &config.sweep,
        config.trials,
        config.seed,
        |done, total, key| {
            println!("[{done}/{total}] {key}");
        },
    )?;

    let results_path = args.out.join("results.csv");
    export_results(&suite, &results_path)?;
    println!("wrote {}", results_path.display());

    print_summary(&suite);

    if !suite.failures.is_empty() {
        for (key, msg) in &suite.failures {
            eprintln!("cell failed: {key}: {msg}");
        }
        return Err(anyhow!("{} of {} cells failed", suite.failures.len(), {
            suite.cells.len() + suite.failures.len()
        }));
    }
    Ok(())
}

fn print_summary(suite: &SuiteResult) {
    println!();
    println!("topology   cells  mean err mdsmap  mean err imds");
    for kind in [
        TopologyKind::Grid,
        TopologyKind::HexGrid,
        TopologyKind::Random,
    ] {
        let rows: Vec<_> = suite
            .cells
            .iter()
            .filter(|(k, _)| k.topology == kind)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let n = rows.len() as f64;
        let mds: f64 = rows.iter().map(|(_, s)| s.err_mdsmap_mean).sum::<f64>() / n;
        let imds: f64 = rows.iter().map(|(_, s)| s.err_imds_mean).sum::<f64>() / n;
        println!(
            "{:<10} {:>5} {:>15.3}% {:>13.3}%",
            kind.as_str(),
            rows.len(),
            mds,
            imds
        );
    }
}

fn cmd_plot(args: PlotArgs) -> anyhow::Result<()> {
    let kind = FigureKind::parse(&args.figure)?;
    let suite = read_results_csv_file(&args.results)
        .with_context(|| format!("loading {}", args.results.display()))?;
    let params = FigureParams {
        topology: match &args.topology {
            Some(t) => Some(TopologyKind::parse(t)?),
            None => None,
        },
        anchors: args.anchors,
        radio_range: args.radio_range,
        range_error_fraction: args.range_error,
        algorithm: match &args.algorithm {
            Some(a) => Some(Algorithm::parse(a)?),
            None => None,
        },
    };
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join(format!("{}.svg", kind.as_str()));
    emit_plot_with(&suite, kind, &params, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
