//! Command implementations.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dynhom::analysis::{
    correlate_series, evaluate_timesteps, validate_theory, EvalConfig, Measure, TimestepRecord,
    ValidationReport,
};
use dynhom::epidemics::{
    calibrate_si, gen_preferential, gen_regular, gen_sbm, simulate_si_ensemble, PlantedConfig,
    SIConfig,
};
use dynhom::graph::{window_discretize, Event, EventStream, TemporalGraph};
use dynhom::homophily::{compatibility_matrix, homophily_series, CompatibilityMatrix};
use dynhom::io::{
    load_graph_dir, parse_event_stream, parse_labels, write_graph_dir, GraphDir, NodeNames,
};
use dynhom::propagation::{gcn_layer, Representations};
use dynhom::seeds;
use dynhom::theory::{bound_grid_with, Denominator, TheoryParams};

use crate::output::{atomic_write, opt_field, write_json, BoxError, SCHEMA_VERSION};
use crate::{Cli, Command, Structure};

pub fn run(cli: Cli) -> Result<(), BoxError> {
    let seed = cli.seed;
    let out = cli.out;
    let config = cli.config;
    match cli.command {
        Command::Ingest(args) => ingest(seed, require_out(out)?, args),
        Command::Simulate(args) => simulate(seed, require_out(out)?, config, args),
        Command::Measure(args) => measure(require_out(out)?, args),
        Command::Propagate(args) => propagate(require_out(out)?, args),
        Command::BoundGrid(args) => grid(require_out(out)?, args),
        Command::Validate(args) => validate(seed, require_out(out)?, config, args),
        Command::Correlate(args) => correlate(require_out(out)?, args),
    }
}

fn require_out(out: Option<PathBuf>) -> Result<PathBuf, BoxError> {
    out.ok_or_else(|| "--out is required".into())
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct IngestManifest<'a> {
    schema_version: u32,
    command: &'static str,
    edges: String,
    labels: Option<String>,
    window: f64,
    origin: &'a str,
    origin_value: f64,
    events: usize,
    horizon: usize,
    nodes: usize,
}

fn ingest(_seed: u64, out: PathBuf, args: crate::IngestArgs) -> Result<(), BoxError> {
    let window = args
        .window
        .or_else(|| args.preset.map(crate::Preset::window))
        .ok_or("either --window or --preset is required")?;

    let mut names = NodeNames::new();
    let stream = parse_event_stream(
        BufReader::new(fs::File::open(&args.edges)?),
        &args.edges.display().to_string(),
        &mut names,
    )?;
    let labels = match &args.labels {
        Some(path) => Some(parse_labels(
            BufReader::new(fs::File::open(path)?),
            &path.display().to_string(),
            &mut names,
        )?),
        None => None,
    };

    let origin_value = match args.origin.as_str() {
        "zero" => 0.0,
        "min" => stream
            .events()
            .iter()
            .map(|e| e.time)
            .fold(f64::INFINITY, f64::min),
        other => other
            .parse::<f64>()
            .map_err(|_| format!("--origin must be `min`, `zero`, or a number, got `{other}`"))?,
    };
    let origin_value = if origin_value.is_finite() {
        origin_value
    } else {
        0.0
    };
    let shifted = EventStream::new(
        stream
            .events()
            .iter()
            .map(|e| Event {
                time: e.time - origin_value,
                ..*e
            })
            .collect(),
    )?;

    let graph = window_discretize(&shifted, window, labels.as_ref())?;
    write_graph_dir(&out, &graph, Some(&names))?;
    write_json(
        &out.join("manifest.json"),
        &IngestManifest {
            schema_version: SCHEMA_VERSION,
            command: "ingest",
            edges: args.edges.display().to_string(),
            labels: args.labels.as_ref().map(|p| p.display().to_string()),
            window,
            origin: &args.origin,
            origin_value,
            events: shifted.events().len(),
            horizon: graph.horizon(),
            nodes: names.len(),
        },
    )
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn default_theta() -> (f64, f64) {
    (4.0, 2.0)
}

fn default_p_init() -> f64 {
    0.01
}

/// SI parameters file (`--config`); the seed always comes from `--seed`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SiFile {
    #[serde(default = "default_theta")]
    theta_inf: (f64, f64),
    #[serde(default = "default_theta")]
    theta_sus: (f64, f64),
    #[serde(default = "default_p_init")]
    p_init: f64,
}

impl Default for SiFile {
    fn default() -> Self {
        SiFile {
            theta_inf: default_theta(),
            theta_sus: default_theta(),
            p_init: default_p_init(),
        }
    }
}

#[derive(Serialize)]
struct StructureManifest {
    kind: String,
    nodes: usize,
    degree: Option<usize>,
    edges_per_node: Option<usize>,
    communities: Option<usize>,
    p_in: Option<f64>,
    p_out: Option<f64>,
    seed: u64,
    edges: usize,
}

#[derive(Serialize)]
struct SimulateManifest {
    schema_version: u32,
    command: &'static str,
    master_seed: u64,
    timesteps: usize,
    replicates: usize,
    calibrated: bool,
    si: SIConfig,
    structure: StructureManifest,
}

#[derive(Serialize)]
struct ReplicateManifest {
    schema_version: u32,
    replicate: usize,
    seed: u64,
    horizon: usize,
}

fn simulate(
    seed: u64,
    out: PathBuf,
    config: Option<PathBuf>,
    args: crate::SimulateArgs,
) -> Result<(), BoxError> {
    let file: SiFile = match config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => SiFile::default(),
    };

    let structure_seed = seeds::derive(seed, "structure", 0);
    let (structure, kind, communities) = match args.structure {
        Structure::Regular => (
            gen_regular(args.nodes, args.degree, structure_seed)?,
            "regular",
            None,
        ),
        Structure::Powerlaw => (
            gen_preferential(args.nodes, args.edges_per_node, structure_seed)?,
            "powerlaw",
            None,
        ),
        Structure::Block => {
            let (s, comm) = gen_sbm(
                args.nodes,
                args.communities,
                args.p_in,
                args.p_out,
                structure_seed,
            )?;
            (s, "block", Some(comm))
        }
    };
    let edge_count = structure.edge_count();
    let structures = vec![structure; args.timesteps + 1];

    let mut si = SIConfig {
        theta_inf: file.theta_inf,
        theta_sus: file.theta_sus,
        p_init: file.p_init,
        seed,
    };
    if args.calibrate {
        si = calibrate_si(&structures, &si, 20, 0.99)?;
    }

    let runs = simulate_si_ensemble(&structures, &si, args.replicates)?;
    for (i, graph) in runs.iter().enumerate() {
        let dir = out.join(format!("rep_{i:03}"));
        write_replicate_atomic(&out, &dir, i, graph, &si)?;
    }
    if let Some(comm) = communities {
        let mut text = String::from("node,community\n");
        for (node, c) in comm.iter().enumerate() {
            text.push_str(&format!("{node},{c}\n"));
        }
        atomic_write(&out.join("communities.csv"), &text)?;
    }
    write_json(
        &out.join("manifest.json"),
        &SimulateManifest {
            schema_version: SCHEMA_VERSION,
            command: "simulate",
            master_seed: seed,
            timesteps: args.timesteps,
            replicates: args.replicates,
            calibrated: args.calibrate,
            si,
            structure: StructureManifest {
                kind: kind.to_string(),
                nodes: args.nodes,
                degree: matches!(args.structure, Structure::Regular).then_some(args.degree),
                edges_per_node: matches!(args.structure, Structure::Powerlaw)
                    .then_some(args.edges_per_node),
                communities: matches!(args.structure, Structure::Block).then_some(args.communities),
                p_in: matches!(args.structure, Structure::Block).then_some(args.p_in),
                p_out: matches!(args.structure, Structure::Block).then_some(args.p_out),
                seed: structure_seed,
                edges: edge_count,
            },
        },
    )
}

fn write_replicate_atomic(
    out: &Path,
    dir: &Path,
    index: usize,
    graph: &TemporalGraph,
    si: &SIConfig,
) -> Result<(), BoxError> {
    fs::create_dir_all(out)?;
    let tmp = out.join(format!(".rep_{index:03}.tmp"));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    write_graph_dir(&tmp, graph, None)?;
    write_json(
        &tmp.join("manifest.json"),
        &ReplicateManifest {
            schema_version: SCHEMA_VERSION,
            replicate: index,
            seed: seeds::derive(si.seed, "si-replicate", index as u64),
            horizon: graph.horizon(),
        },
    )?;
    if dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    fs::rename(&tmp, dir)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// measure
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct MeasureManifest {
    schema_version: u32,
    command: &'static str,
    graph: String,
    layers: Vec<usize>,
    mode: dynhom::analysis::MaskMode,
    theory: Option<(f64, f64)>,
    denominator: Denominator,
    horizon: usize,
    rows: usize,
}

#[derive(Serialize)]
struct CompatDoc {
    schema_version: u32,
    graph: String,
    timesteps: Vec<CompatEntry>,
}

#[derive(Serialize)]
struct CompatEntry {
    t: usize,
    #[serde(flatten)]
    matrix: CompatibilityMatrix,
}

fn measure(out: PathBuf, args: crate::MeasureArgs) -> Result<(), BoxError> {
    let GraphDir { graph, .. } = load_graph_dir(&args.graph)?;
    let theory = match (args.mu, args.sigma2) {
        (Some(mu), Some(sigma2)) => Some((mu, sigma2)),
        (None, None) => None,
        _ => return Err("--mu and --sigma2 must be given together".into()),
    };

    let rows;
    if args.layers.is_empty() {
        let series = homophily_series(&graph)?;
        rows = series.len();
        let mut csv = String::from("t,h_static,h_dynamic,h_plus,h_minus\n");
        for lv in &series {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                lv.t,
                lv.h_static,
                opt_field(lv.h_dynamic),
                opt_field(lv.h_plus()),
                opt_field(lv.h_minus()),
            ));
        }
        atomic_write(&out, &csv)?;
    } else {
        let cfg = EvalConfig {
            layers: args.layers.clone(),
            mode: args.mode.into(),
            theory,
            denominator: args.denominator.into(),
        };
        let records = evaluate_timesteps(&graph, &cfg)?;
        rows = records.len() * cfg.layers.len();
        atomic_write(&out, &records_csv(&records))?;
    }
    if rows == 0 {
        eprintln!("warning: horizon < 2, no dynamic timesteps to measure");
    }

    if let Some(compat_path) = &args.compat_out {
        let mut timesteps = Vec::new();
        for t in 0..graph.horizon().saturating_sub(1) {
            timesteps.push(CompatEntry {
                t,
                matrix: compatibility_matrix(&graph, t)?,
            });
        }
        write_json(
            compat_path,
            &CompatDoc {
                schema_version: SCHEMA_VERSION,
                graph: args.graph.display().to_string(),
                timesteps,
            },
        )?;
    }

    write_json(
        &out.with_extension("meta.json"),
        &MeasureManifest {
            schema_version: SCHEMA_VERSION,
            command: "measure",
            graph: args.graph.display().to_string(),
            layers: args.layers,
            mode: args.mode.into(),
            theory,
            denominator: args.denominator.into(),
            horizon: graph.horizon(),
            rows,
        },
    )
}

const RECORDS_HEADER: &str = "t,h_static,h_dynamic,h_plus,h_minus,layer,auroc,bound,n_plus,n_minus";

fn records_csv(records: &[TimestepRecord]) -> String {
    let mut csv = String::from(RECORDS_HEADER);
    csv.push('\n');
    for r in records {
        for (layer, auroc) in &r.auroc_per_layer {
            let bound = r.bound_per_layer.get(layer).copied().flatten();
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.t,
                r.h_static,
                opt_field(r.h_dynamic),
                opt_field(r.h_plus),
                opt_field(r.h_minus),
                layer,
                opt_field(*auroc),
                opt_field(bound),
                r.n_plus,
                r.n_minus,
            ));
        }
    }
    csv
}

// ---------------------------------------------------------------------------
// propagate
// ---------------------------------------------------------------------------

fn propagate(out: PathBuf, args: crate::PropagateArgs) -> Result<(), BoxError> {
    let GraphDir { graph, names } = load_graph_dir(&args.graph)?;
    let snapshot = graph.snapshot(args.timestep)?;
    let mut reps = Representations::from_features(snapshot)?;
    let mut csv = String::from("node,layer,dim,value\n");
    for layer in 0..=args.layers {
        if layer > 0 {
            reps = gcn_layer(snapshot, &reps)?;
        }
        for (node, values) in reps.iter() {
            let label = names
                .name(node)
                .map(str::to_string)
                .unwrap_or_else(|| node.to_string());
            for (dim, value) in values.iter().enumerate() {
                csv.push_str(&format!("{label},{layer},{dim},{value}\n"));
            }
        }
    }
    atomic_write(&out, &csv)
}

// ---------------------------------------------------------------------------
// bound-grid
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct GridManifest {
    schema_version: u32,
    command: &'static str,
    resolution: usize,
    layers: Vec<usize>,
    mu: f64,
    sigma2: f64,
    denominator: Denominator,
}

fn grid(out: PathBuf, args: crate::BoundGridArgs) -> Result<(), BoxError> {
    let denom: Denominator = args.denominator.into();
    let mut csv = String::from("h_plus,h_minus,layers,bound\n");
    for &layers in &args.layers {
        let params = TheoryParams::new(args.mu, args.sigma2, layers)?;
        for point in bound_grid_with(&params, args.resolution, denom)? {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                point.h_plus, point.h_minus, layers, point.bound
            ));
        }
    }
    atomic_write(&out, &csv)?;
    write_json(
        &out.with_extension("meta.json"),
        &GridManifest {
            schema_version: SCHEMA_VERSION,
            command: "bound-grid",
            resolution: args.resolution,
            layers: args.layers,
            mu: args.mu,
            sigma2: args.sigma2,
            denominator: denom,
        },
    )
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

/// Planted-model file (`--config`); a missing seed falls back to `--seed`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantedFile {
    n_per_class: usize,
    neighbor_count: usize,
    h_plus: f64,
    h_minus: f64,
    #[serde(default = "default_mu")]
    mu: f64,
    #[serde(default = "default_sigma2")]
    sigma2: f64,
    seed: Option<u64>,
}

fn default_mu() -> f64 {
    1.0
}

fn default_sigma2() -> f64 {
    1.0
}

#[derive(Serialize)]
struct ValidateDoc {
    schema_version: u32,
    command: &'static str,
    report: ValidationReport,
}

fn validate(
    seed: u64,
    out: PathBuf,
    config: Option<PathBuf>,
    args: crate::ValidateArgs,
) -> Result<(), BoxError> {
    let path = config.ok_or("--config with a planted-model JSON file is required")?;
    let file: PlantedFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    let cfg = PlantedConfig {
        n_per_class: file.n_per_class,
        neighbor_count: file.neighbor_count,
        h_plus: file.h_plus,
        h_minus: file.h_minus,
        mu: file.mu,
        sigma2: file.sigma2,
        seed: file.seed.unwrap_or(seed),
    };
    let report = validate_theory(&cfg, &args.layers, args.replicates)?;
    write_json(
        &out,
        &ValidateDoc {
            schema_version: SCHEMA_VERSION,
            command: "validate",
            report,
        },
    )
}

// ---------------------------------------------------------------------------
// correlate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CorrelateDoc {
    schema_version: u32,
    command: &'static str,
    records: String,
    layer: usize,
    timesteps: usize,
    spearman_h_dynamic: Option<f64>,
    spearman_h_static: Option<f64>,
}

fn correlate(out: PathBuf, args: crate::CorrelateArgs) -> Result<(), BoxError> {
    let records = read_records(&args.records)?;
    let dynamic = correlate_series(&records, Measure::HDynamic, args.layer);
    let fixed = correlate_series(&records, Measure::HStatic, args.layer);
    if dynamic.is_none() && fixed.is_none() {
        eprintln!("warning: correlations undefined (too few defined pairs or constant series)");
    }
    write_json(
        &out,
        &CorrelateDoc {
            schema_version: SCHEMA_VERSION,
            command: "correlate",
            records: args.records.display().to_string(),
            layer: args.layer,
            timesteps: records.len(),
            spearman_h_dynamic: dynamic,
            spearman_h_static: fixed,
        },
    )
}

/// Parse a records CSV produced by `measure --layers`.
fn read_records(path: &Path) -> Result<Vec<TimestepRecord>, BoxError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == RECORDS_HEADER => {}
        _ => return Err(format!("{}: expected header `{RECORDS_HEADER}`", path.display()).into()),
    }
    let mut by_t: std::collections::BTreeMap<usize, TimestepRecord> =
        std::collections::BTreeMap::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(format!(
                "{}:{}: expected 10 fields, got {}",
                path.display(),
                idx + 1,
                fields.len()
            )
            .into());
        }
        let parse_req = |s: &str| -> Result<f64, BoxError> {
            s.parse::<f64>()
                .map_err(|_| format!("{}:{}: bad number `{s}`", path.display(), idx + 1).into())
        };
        let parse_opt = |s: &str| -> Result<Option<f64>, BoxError> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_req(s).map(Some)
            }
        };
        let t: usize = fields[0].parse()?;
        let layer: usize = fields[5].parse()?;
        let entry = by_t.entry(t).or_insert_with(|| TimestepRecord {
            t,
            h_static: 0.0,
            h_dynamic: None,
            h_plus: None,
            h_minus: None,
            auroc_per_layer: Default::default(),
            bound_per_layer: Default::default(),
            n_plus: 0,
            n_minus: 0,
        });
        entry.h_static = parse_req(fields[1])?;
        entry.h_dynamic = parse_opt(fields[2])?;
        entry.h_plus = parse_opt(fields[3])?;
        entry.h_minus = parse_opt(fields[4])?;
        entry.auroc_per_layer.insert(layer, parse_opt(fields[6])?);
        entry.bound_per_layer.insert(layer, parse_opt(fields[7])?);
        entry.n_plus = fields[8].parse()?;
        entry.n_minus = fields[9].parse()?;
    }
    Ok(by_t.into_values().collect())
}
