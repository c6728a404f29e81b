//! Six-node counterexample on which the additive+multiplicative Dijkstra
//! returns a path of cost 14 while the optimum costs 11.
//!
//! The walkthrough expands from `s` towards `r`. Engines here expand from
//! the receiver along incoming policies, so `s` plays the receiver and
//! every drawn edge `x - y` (with `x` closer to `s`) is stored as the
//! policy `y -> x`.

use rand::Rng;
use serde::Serialize;

use super::{brute_force_top_k, mod_dijkstra_traced, EngineError, DEFAULT_BUDGET, DEFAULT_MAX_LEN};
use crate::rng::substream;
use crate::graph::{ChannelGraph, ChannelId, GraphBuilder, NodeId, NodeIdx, PolicyIdx, PolicyRecord, ShortChannelId};
use crate::weights::{EdgeCost, TableWeight};

/// `(from s side, to r side, additive, multiplicative)`.
pub const EDGES: [(&str, &str, f64, f64); 7] = [
    ("s", "h", 4.0, 1.0),
    ("h", "i", 2.0, 2.0),
    ("i", "r", 4.0, 2.0),
    ("s", "k", 1.0, 2.0),
    ("k", "j", 1.0, 2.0),
    ("j", "r", 0.0, 5.0),
    ("h", "j", 2.0, 1.0),
];

pub const C_ATTEMPT: f64 = 1.0;
pub const AMOUNT_MSAT: u64 = 1000;

pub struct Fixture {
    pub graph: ChannelGraph,
    pub weight: TableWeight,
    pub origin: NodeIdx,
    pub target: NodeIdx,
}

pub fn counterexample() -> Fixture {
    let mut b = GraphBuilder::new();
    for (i, (near, far, _, _)) in EDGES.iter().enumerate() {
        b.policy(PolicyRecord {
            channel_id: ChannelId(format!("{near}{far}")),
            short_channel_id: ShortChannelId::new(1, i as u32, 0),
            source: (*far).into(),
            target: (*near).into(),
            capacity_msat: 1_000_000,
            base_fee_msat: 0,
            fee_rate_ppm: 0,
            cltv_delta: 0,
            htlc_min_msat: 0,
            htlc_max_msat: 1_000_000,
        });
    }
    let graph = b.build().expect("fixture is valid");
    let mut costs = vec![EdgeCost::additive(0.0); graph.policy_count()];
    for (near, far, a, m) in EDGES {
        let p = policy_between(&graph, far, near);
        costs[p.index()] = EdgeCost { additive: a, multiplicative: m };
    }
    let origin = graph.lookup(&"s".into()).expect("s");
    let target = graph.lookup(&"r".into()).expect("r");
    Fixture { graph, weight: TableWeight { costs }, origin, target }
}

fn policy_between(g: &ChannelGraph, src: &str, dst: &str) -> PolicyIdx {
    let (s, t) = (g.lookup(&src.into()).expect("node"), g.lookup(&dst.into()).expect("node"));
    g.find_policy(s, t, &ChannelId(format!("{dst}{src}"))).expect("edge")
}

/// Random directed instance with integer additive weights in
/// `[min_weight, max_weight]`, unit multiplicative weights and random
/// timelocks in `[0, 144]`. Node names are `v0..v9`; origin and target are
/// distinct. At most 10 nodes.
pub fn random_instance(seed: u64, max_nodes: usize, max_edges: usize, min_weight: u32, max_weight: u32) -> Fixture {
    assert!(max_nodes <= 10, "node names must sort like their indices");
    let mut rng = substream(seed, &["random-instance".into()]);
    let n = rng.gen_range(2..=max_nodes.max(2));
    let m = rng.gen_range(1..=max_edges.max(1));
    let mut b = GraphBuilder::new();
    for v in 0..n {
        b.node(NodeId(format!("v{v}")));
    }
    let mut weights = Vec::with_capacity(m);
    for i in 0..m {
        let s = rng.gen_range(0..n);
        let mut t = rng.gen_range(0..n - 1);
        if t >= s {
            t += 1;
        }
        let id = format!("e{i:02}");
        weights.push((s, t, id.clone(), rng.gen_range(min_weight..=max_weight)));
        b.policy(PolicyRecord {
            channel_id: ChannelId(id),
            short_channel_id: ShortChannelId::new(1, i as u32, 0),
            source: format!("v{s}").as_str().into(),
            target: format!("v{t}").as_str().into(),
            capacity_msat: 1_000_000,
            base_fee_msat: 0,
            fee_rate_ppm: 0,
            cltv_delta: rng.gen_range(0..=144),
            htlc_min_msat: 0,
            htlc_max_msat: 1_000_000,
        });
    }
    let graph = b.build().expect("random instance is valid");
    let mut costs = vec![EdgeCost::additive(0.0); graph.policy_count()];
    for (s, t, id, w) in weights {
        let node = |v: usize| graph.lookup(&format!("v{v}").as_str().into()).expect("node");
        let p = graph.find_policy(node(s), node(t), &ChannelId(id)).expect("edge");
        costs[p.index()] = EdgeCost::additive(w as f64);
    }
    let origin = rng.gen_range(0..n);
    let mut target = rng.gen_range(0..n - 1);
    if target >= origin {
        target += 1;
    }
    Fixture { graph, weight: TableWeight { costs }, origin: NodeIdx(origin as u32), target: NodeIdx(target as u32) }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathReport {
    /// Node names from `s` to `r`.
    pub nodes: Vec<String>,
    pub cost: f64,
}

impl std::fmt::Display for PathReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} cost {}", self.nodes.join(","), self.cost)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub engine: PathReport,
    pub optimal: PathReport,
    /// `(node, key)` in the order nodes leave the queue.
    pub trace: Vec<(String, f64)>,
    pub simple_paths: usize,
}

impl CounterexampleReport {
    pub fn matches_expected(&self) -> bool {
        self.engine.nodes == ["s", "h", "i", "r"]
            && self.engine.cost == 14.0
            && self.optimal.nodes == ["s", "h", "j", "r"]
            && self.optimal.cost == 11.0
            && self.simple_paths == 3
            && self.trace.iter().take(3).map(|(n, k)| (n.as_str(), *k)).eq([("k", 3.0), ("h", 5.0), ("j", 6.0)])
    }
}

fn names(g: &ChannelGraph, hops: &[PolicyIdx]) -> Vec<String> {
    // Payment order runs r -> s; report s first.
    let mut nodes: Vec<String> = hops.iter().rev().map(|&p| g.node_id(g.policy(p).target).to_string()).collect();
    if let Some(&first) = hops.first() {
        nodes.push(g.node_id(g.policy(first).source).to_string());
    }
    nodes
}

/// Runs the engine and the exhaustive oracle on the fixture.
pub fn verify_counterexample() -> Result<CounterexampleReport, EngineError> {
    let fx = counterexample();
    let g = &fx.graph;
    let mut trace = Vec::new();
    let out = mod_dijkstra_traced(g, fx.origin, fx.target, AMOUNT_MSAT, &fx.weight, C_ATTEMPT, &[], Some(&mut trace))?;
    let route = out.route.expect("fixture is connected");
    let engine = PathReport { nodes: names(g, &route.hops), cost: route.engine_cost };

    let whole_path = |hops: &[PolicyIdx]| {
        let a: f64 = hops.iter().map(|p| fx.weight.costs[p.index()].additive).sum();
        let m: f64 = hops.iter().map(|p| fx.weight.costs[p.index()].multiplicative).product();
        Some(a + C_ATTEMPT * m)
    };
    let all = brute_force_top_k(g, fx.origin, fx.target, DEFAULT_MAX_LEN, DEFAULT_BUDGET, usize::MAX, whole_path)?;
    let (cost, hops) = all.first().expect("at least one path").clone();
    Ok(CounterexampleReport {
        engine,
        optimal: PathReport { nodes: names(g, &hops), cost },
        trace: trace.into_iter().map(|(n, k)| (g.node_id(n).to_string(), k)).collect(),
        simple_paths: all.len(),
    })
}
