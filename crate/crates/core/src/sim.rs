//! Payment simulation: transaction sampling, execution against hidden
//! balances and experiment orchestration.

use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{find_route, EngineError, RouteRequest, RouteResult};
use crate::graph::{
    generate_synthetic, load_snapshot, sample_balances_bimodal, sample_balances_uniform, BalanceView, ChannelGraph,
    ConnectivityClass, GraphError, NodeId, NodeIdx, SnapshotFormat, SynthParams,
};
use crate::metrics::{success_rates_by_bin, AmountBin, MetricsTable};
use crate::prob::ScaleSpec;
use crate::rng::{substream, Label};
use crate::weights::{ClientParams, ClientVariant, ScorerState};

/// Records are computed in chunks of this many transactions so output can
/// be streamed while keeping tx-index order.
const CHUNK: u64 = 256;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("no eligible sender/receiver pair")]
    NoEligiblePair,
    #[error("no pair with positive sendable amount after {0} draws")]
    ResampleExhausted(u32),
    #[error("malformed route: {0}")]
    MalformedRoute(String),
    #[error("transaction {tx}: {source}")]
    Tx { tx: u64, source: Box<SimError> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    fn at(self, tx: u64) -> SimError {
        SimError::Tx { tx, source: Box::new(self) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSource {
    /// Snapshot file; relative paths resolve against the config file.
    Snapshot {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<SnapshotFormat>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tip_height: Option<u32>,
    },
    Synthetic {
        nodes: usize,
        seed: u64,
        #[serde(default)]
        params: SynthParams,
    },
}

impl GraphSource {
    pub fn load(&self, base_dir: Option<&Path>) -> Result<ChannelGraph, GraphError> {
        match self {
            GraphSource::Snapshot { path, format, tip_height } => {
                let full = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let format = format.unwrap_or_else(|| SnapshotFormat::from_path(&full));
                let file = std::fs::File::open(&full)?;
                load_snapshot(std::io::BufReader::new(file), format, *tip_height)
            }
            GraphSource::Synthetic { nodes, seed, params } => generate_synthetic(*nodes, params, *seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BalanceModel {
    Uniform,
    /// Broadening scale `s = s_fraction * cap`.
    Bimodal { s_fraction: f64 },
}

impl BalanceModel {
    pub fn sample(&self, graph: &ChannelGraph, seed: u64) -> BalanceView {
        match *self {
            BalanceModel::Uniform => sample_balances_uniform(graph, seed),
            BalanceModel::Bimodal { s_fraction } => sample_balances_bimodal(graph, s_fraction, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceScope {
    /// A fresh draw for every transaction.
    #[default]
    PerTransaction,
    /// One draw shared by the whole run.
    PerRun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmountPolicy {
    /// Uniform integer in `[1, min(max outgoing of sender, max incoming of
    /// receiver)]`, optionally capped.
    UniformLiquidity {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_msat: Option<u64>,
    },
    /// Always this amount; pairs that cannot carry it are redrawn.
    Fixed { msat: u64 },
}

impl Default for AmountPolicy {
    fn default() -> Self {
        AmountPolicy::UniformLiquidity { max_msat: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassPair {
    pub sender: ConnectivityClass,
    pub receiver: ConnectivityClass,
}

fn default_graph() -> GraphSource {
    GraphSource::Synthetic { nodes: 500, seed: 7, params: SynthParams::default() }
}

fn default_balances() -> BalanceModel {
    BalanceModel::Uniform
}

fn default_clients() -> Vec<ClientVariant> {
    ClientVariant::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub balances: BalanceModel,
    pub balance_scope: BalanceScope,
    pub n_transactions: u64,
    pub clients: Vec<ClientVariant>,
    /// Required before running; may come from the command line instead.
    pub seed: Option<u64>,
    pub endpoint_filter: Option<ClassPair>,
    pub amount: AmountPolicy,
    /// Endpoint draws per transaction before giving up.
    pub max_resample: u32,
    pub constraints: bool,
    /// Successful payments move liquidity. Requires `balance_scope = per_run`
    /// and runs sequentially.
    pub mutation: bool,
    /// Update per-client scorer state from outcomes. Runs sequentially.
    pub scorer_feedback: bool,
    /// Simulated seconds between consecutive transactions for the scorer clock.
    pub feedback_interval_secs: u64,
    /// Eclair picks uniformly among its surviving paths instead of the cheapest.
    pub eclair_random_select: bool,
    pub params: ClientParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: default_graph(),
            balances: default_balances(),
            balance_scope: BalanceScope::PerTransaction,
            n_transactions: 1000,
            clients: default_clients(),
            seed: None,
            endpoint_filter: None,
            amount: AmountPolicy::default(),
            max_resample: 1000,
            constraints: true,
            mutation: false,
            scorer_feedback: false,
            feedback_interval_secs: 60,
            eclair_random_select: false,
            params: ClientParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, SimError> {
        toml::from_str(s).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Self, SimError> {
        serde_json::from_str(s).map_err(|e| SimError::Config(e.to_string()))
    }

    /// Parses by extension: `.json` as JSON, everything else as TOML.
    pub fn from_file(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    /// Canonical JSON, used for hashing into run manifests.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn seed(&self) -> Result<u64, SimError> {
        self.seed.ok_or_else(|| SimError::Config("a seed is required".into()))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.into()));
        self.seed()?;
        if self.n_transactions == 0 {
            return bad("n_transactions must be at least 1");
        }
        if self.clients.is_empty() {
            return bad("at least one client is required");
        }
        if self.max_resample == 0 {
            return bad("max_resample must be at least 1");
        }
        if let BalanceModel::Bimodal { s_fraction } = self.balances {
            if !(s_fraction > 0.0 && s_fraction <= 1.0) {
                return bad("bimodal s_fraction must lie in (0, 1]");
            }
        }
        if let AmountPolicy::Fixed { msat: 0 } = self.amount {
            return bad("fixed amount must be positive");
        }
        if self.mutation && self.balance_scope != BalanceScope::PerRun {
            return bad("mutation requires balance_scope = \"per_run\"");
        }
        self.params.validate().map_err(SimError::Config)
    }

    fn sequential(&self) -> bool {
        self.mutation || self.scorer_feedback
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Success,
    NoPath,
    /// Index in payment order of the first hop that lacked liquidity.
    InsufficientBalance { hop: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientResult {
    pub client: ClientVariant,
    #[serde(flatten)]
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fee_msat: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timelock: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

impl ClientResult {
    fn from_route(client: ClientVariant, outcome: Outcome, route: Option<&RouteResult>) -> Self {
        let route = route.filter(|_| outcome == Outcome::Success);
        ClientResult {
            client,
            outcome,
            fee_msat: route.map(|r| r.total_fee_msat),
            path_len: route.map(|r| r.len()),
            timelock: route.map(|r| r.total_timelock),
            cost: route.map(|r| r.engine_cost),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.outcome == Outcome::Success
    }
}

/// One simulated transaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub tx: u64,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub sender_class: ConnectivityClass,
    pub receiver_class: ConnectivityClass,
    pub amt_msat: u64,
    pub results: Vec<ClientResult>,
}

impl SimRecord {
    pub fn result(&self, client: ClientVariant) -> Option<&ClientResult> {
        self.results.iter().find(|r| r.client == client)
    }

    pub fn successes(&self) -> usize {
        self.results.iter().filter(|r| r.succeeded()).count()
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Reads a JSON-lines record stream, skipping blank lines.
pub fn read_records(reader: impl std::io::BufRead) -> Result<Vec<SimRecord>, String> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}

/// Draws `(sender, receiver, amt_msat)`.
pub fn sample_transaction(
    graph: &ChannelGraph,
    balances: &BalanceView,
    rng: &mut impl Rng,
    filter: Option<ClassPair>,
    classes: &[ConnectivityClass],
    amount: AmountPolicy,
    max_resample: u32,
) -> Result<(NodeIdx, NodeIdx, u64), SimError> {
    let pick = |want: Option<ConnectivityClass>| -> Vec<NodeIdx> {
        graph.nodes().filter(|n| want.map_or(true, |c| classes[n.index()] == c)).collect()
    };
    let senders = pick(filter.map(|f| f.sender));
    let receivers = pick(filter.map(|f| f.receiver));
    if senders.is_empty() || receivers.is_empty() || (senders.len() == 1 && receivers == senders) {
        return Err(SimError::NoEligiblePair);
    }
    for _ in 0..max_resample {
        let s = senders[rng.gen_range(0..senders.len())];
        let r = receivers[rng.gen_range(0..receivers.len())];
        if s == r {
            continue;
        }
        let bound = balances.max_outgoing(graph, s).min(balances.max_incoming(graph, r));
        match amount {
            AmountPolicy::UniformLiquidity { max_msat } => {
                let bound = max_msat.map_or(bound, |m| bound.min(m));
                if bound >= 1 {
                    return Ok((s, r, rng.gen_range(1..=bound)));
                }
            }
            AmountPolicy::Fixed { msat } => {
                if bound >= msat {
                    return Ok((s, r, msat));
                }
            }
        }
    }
    Err(SimError::ResampleExhausted(max_resample))
}

fn check_route(graph: &ChannelGraph, route: &RouteResult) -> Result<(), SimError> {
    if route.hops.is_empty() || route.per_hop_amt.len() != route.hops.len() {
        return Err(SimError::MalformedRoute("hop and amount lists disagree".into()));
    }
    for w in route.hops.windows(2) {
        if graph.policy(w[0]).target != graph.policy(w[1]).source {
            return Err(SimError::MalformedRoute(format!(
                "{} does not continue {}",
                graph.describe(w[1]),
                graph.describe(w[0])
            )));
        }
    }
    Ok(())
}

/// Walks the route from the sender and reports the first hop whose
/// forwarding side holds less than the amount it must carry.
pub fn execute_payment(graph: &ChannelGraph, balances: &BalanceView, route: &RouteResult) -> Result<Outcome, SimError> {
    check_route(graph, route)?;
    for (i, (&p, &amt)) in route.hops.iter().zip(&route.per_hop_amt).enumerate() {
        if balances.get(p) < amt {
            return Ok(Outcome::InsufficientBalance { hop: i });
        }
    }
    Ok(Outcome::Success)
}

/// Moves every hop's amount across its channel. Call only after
/// [`execute_payment`] returned success on the same view.
pub fn apply_payment(graph: &ChannelGraph, balances: &mut BalanceView, route: &RouteResult) {
    for (&p, &amt) in route.hops.iter().zip(&route.per_hop_amt) {
        let moved = balances.shift(graph, p, amt);
        debug_assert!(moved, "payment applied without a successful execution");
    }
}

fn derived_seed(seed: u64, tag: &str, tx: Option<u64>) -> u64 {
    let mut labels = vec![Label::Str(tag)];
    if let Some(tx) = tx {
        labels.push(tx.into());
    }
    substream(seed, &labels).gen()
}

/// Mutable state carried between transactions in sequential runs; one
/// entry per configured client.
struct RunState {
    views: Vec<BalanceView>,
    scorers: Vec<ScorerState>,
}

struct Context<'a> {
    graph: &'a ChannelGraph,
    config: &'a ExperimentConfig,
    seed: u64,
    classes: Vec<ConnectivityClass>,
    run_view: Option<BalanceView>,
}

impl<'a> Context<'a> {
    fn new(graph: &'a ChannelGraph, config: &'a ExperimentConfig) -> Result<Self, SimError> {
        config.validate()?;
        let seed = config.seed()?;
        let run_view = (config.balance_scope == BalanceScope::PerRun)
            .then(|| config.balances.sample(graph, derived_seed(seed, "balances/run", None)));
        Ok(Context { graph, config, seed, classes: graph.classify_all(), run_view })
    }

    fn view_for(&self, tx: u64) -> std::borrow::Cow<'_, BalanceView> {
        match &self.run_view {
            Some(v) => std::borrow::Cow::Borrowed(v),
            None => std::borrow::Cow::Owned(self.config.balances.sample(self.graph, derived_seed(self.seed, "balances/tx", Some(tx)))),
        }
    }

    fn run_tx(&self, tx: u64, mut state: Option<&mut RunState>) -> Result<SimRecord, SimError> {
        let cfg = self.config;
        let g = self.graph;
        let base = self.view_for(tx);
        let mut rng = substream(self.seed, &["tx".into(), tx.into()]);
        let (s, r, amt) =
            sample_transaction(g, &base, &mut rng, cfg.endpoint_filter, &self.classes, cfg.amount, cfg.max_resample)?;
        let eclair_seed = cfg.eclair_random_select.then(|| derived_seed(self.seed, "eclair", Some(tx)));
        let mut results = Vec::with_capacity(cfg.clients.len());
        for (ci, &client) in cfg.clients.iter().enumerate() {
            let req = RouteRequest {
                client,
                sender: s,
                receiver: r,
                amt_msat: amt,
                constraints: cfg.constraints,
                eclair_random_select: eclair_seed,
            };
            let scorer = match (&mut state, cfg.scorer_feedback) {
                (Some(st), true) => {
                    st.scorers[ci].now = Duration::from_secs(tx * cfg.feedback_interval_secs);
                    Some(&st.scorers[ci])
                }
                _ => None,
            };
            let out = find_route(g, &cfg.params, scorer, &req)?;
            let Some(route) = out.route else {
                results.push(ClientResult::from_route(client, Outcome::NoPath, None));
                continue;
            };
            let outcome = match (&mut state, cfg.mutation) {
                (Some(st), true) => {
                    let o = execute_payment(g, &st.views[ci], &route)?;
                    if o == Outcome::Success {
                        apply_payment(g, &mut st.views[ci], &route);
                    }
                    o
                }
                _ => execute_payment(g, &base, &route)?,
            };
            if let (Some(st), true) = (&mut state, cfg.scorer_feedback) {
                feed_scorer(g, &mut st.scorers[ci], &route, outcome);
            }
            results.push(ClientResult::from_route(client, outcome, Some(&route)));
        }
        Ok(SimRecord {
            tx,
            sender: g.node_id(s).clone(),
            receiver: g.node_id(r).clone(),
            sender_class: self.classes[s.index()],
            receiver_class: self.classes[r.index()],
            amt_msat: amt,
            results,
        })
    }
}

fn feed_scorer(graph: &ChannelGraph, scorer: &mut ScorerState, route: &RouteResult, outcome: Outcome) {
    let failed_at = match outcome {
        Outcome::InsufficientBalance { hop } => hop,
        _ => route.hops.len(),
    };
    for (i, (&p, &amt)) in route.hops.iter().zip(&route.per_hop_amt).enumerate().take(failed_at + 1) {
        let cap = graph.policy(p).capacity_msat;
        if i < failed_at {
            scorer.record_success(p, cap, amt);
        } else {
            scorer.record_failure(p, cap, amt);
        }
    }
}

/// Runs the experiment and hands records to `sink` in tx-index order.
/// `threads = 0` uses rayon's default; sequential configurations ignore it.
pub fn run_experiment_with(
    graph: &ChannelGraph,
    config: &ExperimentConfig,
    threads: usize,
    mut sink: impl FnMut(&SimRecord) -> Result<(), SimError>,
) -> Result<(), SimError> {
    let ctx = Context::new(graph, config)?;
    let n = config.n_transactions;
    if config.sequential() {
        let start = ctx.run_view.clone().unwrap_or_else(|| BalanceView::full(graph));
        let mut state = RunState {
            views: vec![start; config.clients.len()],
            scorers: vec![ScorerState::default(); config.clients.len()],
        };
        for tx in 0..n {
            let rec = ctx.run_tx(tx, Some(&mut state)).map_err(|e| e.at(tx))?;
            sink(&rec)?;
        }
        return Ok(());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| SimError::Config(format!("thread pool: {e}")))?;
    let mut lo = 0;
    while lo < n {
        let hi = (lo + CHUNK).min(n);
        let chunk = pool.install(|| -> Result<Vec<SimRecord>, SimError> {
            (lo..hi).into_par_iter().map(|tx| ctx.run_tx(tx, None).map_err(|e| e.at(tx))).collect()
        })?;
        for rec in &chunk {
            sink(rec)?;
        }
        lo = hi;
    }
    Ok(())
}

pub fn run_experiment(graph: &ChannelGraph, config: &ExperimentConfig, threads: usize) -> Result<Vec<SimRecord>, SimError> {
    let mut out = Vec::with_capacity(config.n_transactions as usize);
    run_experiment_with(graph, config, threads, |r| {
        out.push(r.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Recomputes a single record from the seed and its index. Only defined
/// for runs without mutation or scorer feedback.
pub fn replay_transaction(graph: &ChannelGraph, config: &ExperimentConfig, tx: u64) -> Result<SimRecord, SimError> {
    if config.sequential() {
        return Err(SimError::Config("replay needs mutation and scorer feedback off".into()));
    }
    Context::new(graph, config)?.run_tx(tx, None).map_err(|e| e.at(tx))
}

/// Success rate of LND-bm per amount bin for each broadening scale.
/// Rows follow `scales`, columns follow `bins`.
pub fn run_scale_ablation(
    graph: &ChannelGraph,
    config: &ExperimentConfig,
    scales: &[ScaleSpec],
    bins: &[AmountBin],
    threads: usize,
) -> Result<MetricsTable, SimError> {
    if !matches!(config.balances, BalanceModel::Bimodal { .. }) {
        return Err(SimError::Config("the scale ablation needs bimodal balances".into()));
    }
    if scales.is_empty() {
        return Err(SimError::Config("at least one scale is required".into()));
    }
    let mut rows = Vec::with_capacity(scales.len());
    for &scale in scales {
        let mut cfg = config.clone();
        cfg.clients = vec![ClientVariant::LndBimodal];
        cfg.params.lnd.bimodal_scale = scale;
        let records = run_experiment(graph, &cfg, threads)?;
        let by_bin = success_rates_by_bin(&records, bins, &cfg.clients);
        rows.push((scale.to_string(), by_bin.column(0)));
    }
    let mut table = MetricsTable::transposed(
        "LND-bm success rate (%) by broadening scale",
        "scale",
        bins.iter().map(|b| b.label()).collect(),
        rows,
    );
    table.metadata.insert("balances".into(), serde_json::to_string(&config.balances).expect("balance model serializes"));
    Ok(table)
}
