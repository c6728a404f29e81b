use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lnpath_core::engine::fixture::verify_counterexample;
use lnpath_core::engine::{find_route, RouteRequest};
use lnpath_core::graph::snapshot::snapshot_bytes;
use lnpath_core::graph::{generate_synthetic, load_snapshot, SnapshotFormat, SynthParams};
use lnpath_core::manifest::{sha256_hex, RunManifest};
use lnpath_core::metrics::{
    aggregate_metrics, clients_in, connectivity_cross_table, default_bins, emit, success_rates_by_bin, AmountBin,
    TableFormat, DEFAULT_MIN_COMMON_SUCCESSES,
};
use lnpath_core::prob::ScaleSpec;
use lnpath_core::sim::{
    read_records, run_experiment_with, run_scale_ablation, BalanceModel, BalanceScope, ClassPair, ExperimentConfig,
    GraphSource, SimError,
};
use lnpath_core::weights::{ClientParams, ClientVariant};
use lnpath_core::{ChannelGraph, ConnectivityClass, GraphError, NodeId};

/// Lightning Network pathfinding laboratory.
#[derive(Parser)]
#[command(name = "lnpath", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic channel graph snapshot.
    GenGraph(GenGraphArgs),
    /// Print node, channel and connectivity statistics of a snapshot.
    Inspect(InspectArgs),
    /// Find one route as a given client would.
    Route(RouteArgs),
    /// Run a payment simulation and stream records as JSON lines.
    Simulate(SimulateArgs),
    /// Sweep the LND bimodal broadening scale.
    Ablate(AblateArgs),
    /// Aggregate simulation records into a table.
    Report(ReportArgs),
    /// Check the suboptimality counterexample against the exhaustive oracle.
    VerifyCounterexample(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl From<OnOff> for bool {
    fn from(v: OnOff) -> bool {
        matches!(v, OnOff::On)
    }
}

#[derive(Args)]
struct GenGraphArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    seed: u64,
    /// Output snapshot path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// json or csv; defaults to the output extension.
    #[arg(long)]
    format: Option<SnapshotFormat>,
    /// TOML file with generator parameters.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Override the chain tip height used for channel ages.
    #[arg(long)]
    tip_height: Option<u32>,
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long)]
    client: ClientVariant,
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: String,
    #[arg(long)]
    amt_msat: u64,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "on")]
    constraints: OnOff,
    /// Paths considered by Eclair's k-shortest search.
    #[arg(long)]
    k: Option<usize>,
    /// Client parameter file (TOML or JSON).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Pick Eclair's path at random among the k survivors using this seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (TOML or JSON). Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Snapshot file replacing the config's graph source.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    n_transactions: Option<u64>,
    /// Comma separated client names.
    #[arg(long, value_delimiter = ',')]
    clients: Option<Vec<ClientVariant>>,
    /// `uniform` or `bimodal:<s as fraction of capacity>`.
    #[arg(long)]
    balances: Option<String>,
    #[arg(long, value_enum)]
    balance_scope: Option<ScopeArg>,
    /// Endpoint classes as `<sender>,<receiver>`, e.g. `Poor,Well`.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long, value_enum)]
    constraints: Option<OnOff>,
    #[arg(long, value_enum)]
    mutation: Option<OnOff>,
    #[arg(long, value_enum)]
    scorer_feedback: Option<OnOff>,
    /// Worker threads; 0 picks the number of CPUs.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    PerTransaction,
    PerRun,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Output JSON-lines path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Comma separated scales, e.g. `0.1cap,300000sat`.
    #[arg(long, value_delimiter = ',', required = true)]
    scales: Vec<ScaleSpec>,
    #[arg(long, default_value = "csv")]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableKind {
    Success,
    Metrics,
    Cross,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON-lines records from `simulate`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    table: TableKind,
    /// Amount bin for the cross table, e.g. `10^4-10^5`.
    #[arg(long)]
    bin: Option<AmountBin>,
    #[arg(long, default_value = "csv")]
    format: TableFormat,
    /// Minimum successful clients for the metrics cohort.
    #[arg(long, default_value_t = DEFAULT_MIN_COMMON_SUCCESSES)]
    min_common: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

enum Failure {
    Config(String),
    Data(String),
    Mismatch,
    /// Stdout was closed early, as with `| head`.
    Closed,
}

fn stdout_err(e: io::Error) -> Failure {
    if e.kind() == io::ErrorKind::BrokenPipe {
        Failure::Closed
    } else {
        Failure::Data(e.to_string())
    }
}

fn print_stdout(s: &str) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    out.write_all(s.as_bytes()).and_then(|_| out.flush()).map_err(stdout_err)
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(m) => Failure::Config(m),
            SimError::Tx { tx, source } => match Failure::from(*source) {
                Failure::Config(m) => Failure::Config(format!("transaction {tx}: {m}")),
                Failure::Data(m) => Failure::Data(format!("transaction {tx}: {m}")),
                other => other,
            },
            SimError::Io(e) => stdout_err(e),
            other => Failure::Data(other.to_string()),
        }
    }
}

impl From<GraphError> for Failure {
    fn from(e: GraphError) -> Self {
        Failure::Data(e.to_string())
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenGraph(a) => gen_graph(a),
        Command::Inspect(a) => inspect(a),
        Command::Route(a) => route(a),
        Command::Simulate(a) => simulate(a),
        Command::Ablate(a) => ablate(a),
        Command::Report(a) => report(a),
        Command::VerifyCounterexample(a) => verify(a),
    };
    match result {
        Ok(()) | Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("lnpath: configuration error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Data(m)) => {
            eprintln!("lnpath: data error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Mismatch) => ExitCode::from(1),
    }
}

/// Writes `bytes` to `out` (or stdout) and a manifest next to it.
fn write_output(out: Option<&Path>, bytes: &[u8], manifest: &RunManifest) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, bytes).map_err(io_err(path))?;
            let mpath = manifest_path(path);
            fs::write(&mpath, manifest.to_json()).map_err(io_err(&mpath))
        }
        None => io::stdout().lock().write_all(bytes).map_err(stdout_err),
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn load_graph(path: &Path, tip_height: Option<u32>) -> Result<ChannelGraph, Failure> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    load_snapshot(io::BufReader::new(file), SnapshotFormat::from_path(path), tip_height)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_config_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let parsed = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(&text).map_err(|e| e.to_string()),
        _ => toml::from_str(&text).map_err(|e| e.to_string()),
    };
    parsed.map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn gen_graph(a: GenGraphArgs) -> Result<(), Failure> {
    let params: SynthParams = match &a.params {
        Some(p) => read_config_file(p)?,
        None => SynthParams::default(),
    };
    let graph = generate_synthetic(a.nodes, &params, a.seed).map_err(|e| Failure::Config(e.to_string()))?;
    let format = a.format.or(a.out.as_deref().map(SnapshotFormat::from_path)).unwrap_or(SnapshotFormat::Json);
    let bytes = snapshot_bytes(&graph, format)?;
    let config = serde_json::json!({ "nodes": a.nodes, "seed": a.seed, "params": params }).to_string();
    let manifest = RunManifest::new("gen-graph", &config, Some(&graph), Some(a.seed));
    write_output(a.out.as_deref(), &bytes, &manifest)
}

#[derive(Serialize)]
struct GraphSummary {
    nodes: usize,
    channels: usize,
    policies: usize,
    tip_height: u32,
    total_capacity_sat: u64,
    classes: Vec<(ConnectivityClass, usize)>,
    graph_sha256: String,
}

fn inspect(a: InspectArgs) -> Result<(), Failure> {
    let g = load_graph(&a.graph, a.tip_height)?;
    let classes = g.classify_all();
    let summary = GraphSummary {
        nodes: g.node_count(),
        channels: g.channel_count(),
        policies: g.policy_count(),
        tip_height: g.tip_height(),
        total_capacity_sat: g.channels().iter().map(|c| c.capacity_msat / 1000).sum(),
        classes: ConnectivityClass::ALL.iter().map(|&c| (c, classes.iter().filter(|&&x| x == c).count())).collect(),
        graph_sha256: lnpath_core::manifest::graph_sha256(&g),
    };
    print_stdout(&(serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n"))
}

fn route(a: RouteArgs) -> Result<(), Failure> {
    let mut params: ClientParams = match &a.params {
        Some(p) => read_config_file(p)?,
        None => ClientParams::default(),
    };
    if let Some(k) = a.k {
        params.limits.eclair_k = k;
    }
    params.validate().map_err(Failure::Config)?;
    let g = load_graph(&a.graph, None)?;
    let node = |id: &str| g.lookup(&NodeId::new(id)).map_err(|e| Failure::Data(e.to_string()));
    let req = RouteRequest {
        client: a.client,
        sender: node(&a.from)?,
        receiver: node(&a.to)?,
        amt_msat: a.amt_msat,
        constraints: a.constraints.into(),
        eclair_random_select: a.seed,
    };
    let out = find_route(&g, &params, None, &req).map_err(|e| Failure::Data(e.to_string()))?;
    let json = match &out.route {
        Some(r) => serde_json::to_value(r.to_json(&g)).expect("route serializes"),
        None => serde_json::json!({ "route": null, "exclusions": out.exclusions }),
    };
    print_stdout(&(serde_json::to_string_pretty(&json).expect("json") + "\n"))
}

fn parse_balances(s: &str) -> Result<BalanceModel, Failure> {
    match s.split_once(':') {
        None if s == "uniform" => Ok(BalanceModel::Uniform),
        Some(("bimodal", f)) => f
            .parse()
            .map(|s_fraction| BalanceModel::Bimodal { s_fraction })
            .map_err(|_| Failure::Config(format!("bad bimodal fraction `{f}`"))),
        _ => Err(Failure::Config(format!("balances must be `uniform` or `bimodal:<fraction>`, got `{s}`"))),
    }
}

fn parse_filter(s: &str) -> Result<ClassPair, Failure> {
    let bad = || Failure::Config(format!("filter must look like `Poor,Well`, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok(ClassPair { sender: a.trim().parse().map_err(|_| bad())?, receiver: b.trim().parse().map_err(|_| bad())? })
}

/// Loads the config, applies flag overrides and loads the graph.
fn prepare(a: &ExperimentArgs) -> Result<(ExperimentConfig, ChannelGraph), Failure> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = Some(s);
    }
    if let Some(p) = &a.graph {
        cfg.graph = GraphSource::Snapshot { path: p.clone(), format: None, tip_height: None };
    } else if let (Some(cpath), GraphSource::Snapshot { path, .. }) = (&a.config, &mut cfg.graph) {
        if path.is_relative() {
            *path = cpath.parent().unwrap_or(Path::new(".")).join(&*path);
        }
    }
    if let Some(n) = a.n_transactions {
        cfg.n_transactions = n;
    }
    if let Some(c) = &a.clients {
        cfg.clients = c.clone();
    }
    if let Some(b) = &a.balances {
        cfg.balances = parse_balances(b)?;
    }
    if let Some(s) = a.balance_scope {
        cfg.balance_scope = match s {
            ScopeArg::PerTransaction => BalanceScope::PerTransaction,
            ScopeArg::PerRun => BalanceScope::PerRun,
        };
    }
    if let Some(f) = &a.filter {
        cfg.endpoint_filter = Some(parse_filter(f)?);
    }
    if let Some(v) = a.constraints {
        cfg.constraints = v.into();
    }
    if let Some(v) = a.mutation {
        cfg.mutation = v.into();
    }
    if let Some(v) = a.scorer_feedback {
        cfg.scorer_feedback = v.into();
    }
    cfg.validate()?;
    let graph = cfg.graph.load(None).map_err(|e| Failure::Data(e.to_string()))?;
    Ok((cfg, graph))
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let (cfg, graph) = prepare(&a.exp)?;
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(fs::File::create(p).map_err(io_err(p))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    run_experiment_with(&graph, &cfg, a.exp.threads, |r| {
        writeln!(w, "{}", r.to_json_line())?;
        Ok(())
    })?;
    w.flush().map_err(stdout_err)?;
    if let Some(p) = &a.out {
        let manifest = RunManifest::new("simulate", &cfg.canonical_json(), Some(&graph), cfg.seed);
        let mpath = manifest_path(p);
        fs::write(&mpath, manifest.to_json()).map_err(io_err(&mpath))?;
    }
    Ok(())
}

fn ablate(a: AblateArgs) -> Result<(), Failure> {
    let (cfg, graph) = prepare(&a.exp)?;
    let table = run_scale_ablation(&graph, &cfg, &a.scales, &default_bins(), a.exp.threads)?;
    let scales: Vec<String> = a.scales.iter().map(|s| s.to_string()).collect();
    let config = format!("{}\nscales={}", cfg.canonical_json(), scales.join(","));
    let manifest = RunManifest::new("ablate", &config, Some(&graph), cfg.seed);
    write_output(a.out.as_deref(), emit(&table, a.format).as_bytes(), &manifest)
}

fn report(a: ReportArgs) -> Result<(), Failure> {
    let bytes = fs::read(&a.input).map_err(io_err(&a.input))?;
    let records = read_records(bytes.as_slice()).map_err(|e| Failure::Data(format!("{}: {e}", a.input.display())))?;
    if records.is_empty() {
        return Err(Failure::Data(format!("{}: no records", a.input.display())));
    }
    let clients = clients_in(&records);
    let bins = default_bins();
    let table = match a.table {
        TableKind::Success => success_rates_by_bin(&records, &bins, &clients),
        TableKind::Metrics => aggregate_metrics(&records, &clients, a.min_common, &bins),
        TableKind::Cross => {
            let bin = a.bin.ok_or_else(|| Failure::Config("--table cross needs --bin".into()))?;
            connectivity_cross_table(&records, bin, &clients)
        }
    };
    let config = format!(
        "records_sha256={} table={} bin={} min_common={}",
        sha256_hex(&bytes),
        table.title,
        a.bin.map(|b| b.label()).unwrap_or_default(),
        a.min_common
    );
    let manifest = RunManifest::new("report", &config, None, None);
    write_output(a.out.as_deref(), emit(&table, a.format).as_bytes(), &manifest)
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let r = verify_counterexample().map_err(|e| Failure::Data(e.to_string()))?;
    if a.json {
        print_stdout(&(serde_json::to_string_pretty(&r).expect("report serializes") + "\n"))?;
    } else {
        let trace: Vec<String> = r.trace.iter().map(|(n, k)| format!("({n},{k})")).collect();
        print_stdout(&format!(
            "engine: {}; optimal: {}\nqueue pops: {}\nsimple paths: {}\n",
            r.engine,
            r.optimal,
            trace.join(" "),
            r.simple_paths
        ))?;
    }
    if r.matches_expected() {
        Ok(())
    } else {
        eprintln!("expected engine s,h,i,r cost 14 and optimal s,h,j,r cost 11");
        Err(Failure::Mismatch)
    }
}
