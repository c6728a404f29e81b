//! Route search engines.
//!
//! All engines search backwards from the receiver, so the amount that
//! crosses each edge (payment plus downstream fees) is known when the edge
//! is weighed. Labels are settled once; a relaxation is accepted when it
//! strictly lowers the node's key and keeps every side constraint within
//! its bound. Equal keys are resolved towards the smaller next-hop policy,
//! which makes results independent of insertion order and, for strictly
//! positive weights, lexicographically smallest among equal-cost paths.

mod brute;
mod dispatch;
pub mod fixture;
mod yen;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::graph::{ChannelGraph, GraphError, NodeIdx, PolicyIdx};
use crate::weights::{check_eligible, propagate_amount, EdgeWeight, Unusable};

pub use brute::{brute_force_route, brute_force_top_k, DEFAULT_BUDGET, DEFAULT_MAX_LEN};
pub use dispatch::{find_route, limits_for, RouteRequest};
pub use yen::yen_k_shortest;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("sender and receiver are the same node")]
    SameEndpoints,
    #[error("amount must be positive")]
    ZeroAmount,
    #[error("negative or undefined cost {cost} on {edge}")]
    NegativeCost { edge: String, cost: f64 },
    #[error("multiplicative weight {value} < 1 on {edge}")]
    MultiplicativeBelowOne { edge: String, value: f64 },
    #[error("enumeration budget of {0} steps exceeded")]
    BudgetExceeded(u64),
    #[error("k must be at least 1")]
    InvalidK,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    TimelockSum,
    NegLogProbSum,
    FeeSum,
    PathLength,
}

impl ConstraintKind {
    fn slot(self) -> usize {
        self as usize
    }
}

/// A bound on a per-edge quantity summed along the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideConstraint {
    pub kind: ConstraintKind,
    pub bound: f64,
}

impl SideConstraint {
    pub fn new(kind: ConstraintKind, bound: f64) -> Self {
        SideConstraint { kind, bound }
    }

    pub fn holds(&self, acc: &Accumulators) -> bool {
        acc.0[self.kind.slot()] <= self.bound
    }
}

/// Running sums of timelock, -ln P, fee and hop count.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulators(pub [f64; 4]);

impl Accumulators {
    pub fn get(&self, kind: ConstraintKind) -> f64 {
        self.0[kind.slot()]
    }
}

/// How labels are ranked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostMode {
    /// Sum of additive weights.
    Additive,
    /// Sum of additive weights plus `c_attempt` times the product of
    /// multiplicative weights.
    AdditiveMultiplicative { c_attempt: f64 },
}

/// Diagnostic tallies of edges the search could not use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ExclusionCounters {
    pub prefilter_below_htlc_min: u64,
    pub prefilter_above_htlc_max: u64,
    pub prefilter_above_capacity: u64,
    pub below_htlc_min: u64,
    pub above_htlc_max: u64,
    pub above_capacity: u64,
    pub zero_probability: u64,
    pub constraint_rejected: u64,
    pub post_validation_rejected: u64,
}

impl ExclusionCounters {
    pub fn prefiltered(&self) -> u64 {
        self.prefilter_below_htlc_min + self.prefilter_above_htlc_max + self.prefilter_above_capacity
    }

    fn count(&mut self, why: Unusable, prefilter: bool) {
        let slot = match (why, prefilter) {
            (Unusable::BelowHtlcMin, true) => &mut self.prefilter_below_htlc_min,
            (Unusable::AboveHtlcMax, true) => &mut self.prefilter_above_htlc_max,
            (Unusable::AboveCapacity, true) => &mut self.prefilter_above_capacity,
            (Unusable::BelowHtlcMin, false) => &mut self.below_htlc_min,
            (Unusable::AboveHtlcMax, false) => &mut self.above_htlc_max,
            (Unusable::AboveCapacity, false) => &mut self.above_capacity,
            (Unusable::ZeroProbability, _) => &mut self.zero_probability,
        };
        *slot += 1;
    }

    pub fn merge(&mut self, o: &ExclusionCounters) {
        self.prefilter_below_htlc_min += o.prefilter_below_htlc_min;
        self.prefilter_above_htlc_max += o.prefilter_above_htlc_max;
        self.prefilter_above_capacity += o.prefilter_above_capacity;
        self.below_htlc_min += o.below_htlc_min;
        self.above_htlc_max += o.above_htlc_max;
        self.above_capacity += o.above_capacity;
        self.zero_probability += o.zero_probability;
        self.constraint_rejected += o.constraint_rejected;
        self.post_validation_rejected += o.post_validation_rejected;
    }
}

/// A found route, sender to receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteResult {
    pub hops: Vec<PolicyIdx>,
    /// Amount crossing each hop.
    pub per_hop_amt: Vec<u64>,
    pub total_fee_msat: u64,
    pub total_timelock: u64,
    pub path_prob: f64,
    pub engine_cost: f64,
    pub accumulators: Accumulators,
    pub exclusions: ExclusionCounters,
}

impl RouteResult {
    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    /// Nodes visited, sender first.
    pub fn nodes(&self, graph: &ChannelGraph) -> Vec<NodeIdx> {
        let mut out: Vec<NodeIdx> = self.hops.iter().map(|&p| graph.policy(p).source).collect();
        if let Some(&last) = self.hops.last() {
            out.push(graph.policy(last).target);
        }
        out
    }

    pub fn satisfies(&self, constraints: &[SideConstraint]) -> bool {
        constraints.iter().all(|c| c.holds(&self.accumulators))
    }

    /// Walks the route forward subtracting each forwarding fee and checks
    /// that exactly `amt_msat` arrives and the totals add up.
    pub fn replay_forward(&self, graph: &ChannelGraph, amt_msat: u64) -> Result<(), String> {
        if self.hops.is_empty() || self.per_hop_amt.len() != self.hops.len() {
            return Err("route has no hops or mismatched amounts".into());
        }
        for w in self.hops.windows(2) {
            if graph.policy(w[0]).target != graph.policy(w[1]).source {
                return Err("hops are not connected".into());
            }
        }
        let mut carried = self.per_hop_amt[0];
        for i in 1..self.hops.len() {
            let fee = crate::weights::channel_fee(graph.policy(self.hops[i]), self.per_hop_amt[i]);
            carried = carried
                .checked_sub(fee)
                .ok_or_else(|| format!("hop {i}: fee {fee} exceeds carried amount"))?;
            if carried != self.per_hop_amt[i] {
                return Err(format!("hop {i}: carried {carried} but route says {}", self.per_hop_amt[i]));
            }
        }
        if carried != amt_msat {
            return Err(format!("receiver gets {carried}, expected {amt_msat}"));
        }
        if self.per_hop_amt[0] - amt_msat != self.total_fee_msat {
            return Err("total fee does not match amounts".into());
        }
        let tl: u64 = self.hops.iter().map(|&p| graph.policy(p).cltv_delta as u64).sum();
        if tl != self.total_timelock {
            return Err(format!("timelock {} != hop sum {tl}", self.total_timelock));
        }
        Ok(())
    }

    pub fn to_json(&self, graph: &ChannelGraph) -> RouteJson {
        let hops = self
            .hops
            .iter()
            .zip(&self.per_hop_amt)
            .map(|(&p, &amt)| {
                let pol = graph.policy(p);
                HopJson {
                    source: graph.node_id(pol.source).to_string(),
                    target: graph.node_id(pol.target).to_string(),
                    channel_id: pol.channel_id.0.clone(),
                    short_channel_id: pol.short_channel_id.0,
                    amt_msat: amt,
                    cltv_delta: pol.cltv_delta,
                }
            })
            .collect();
        RouteJson {
            hops,
            total_fee_msat: self.total_fee_msat,
            total_timelock: self.total_timelock,
            path_prob: self.path_prob,
            engine_cost: self.engine_cost,
            exclusions: self.exclusions,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HopJson {
    pub source: String,
    pub target: String,
    pub channel_id: String,
    pub short_channel_id: u64,
    pub amt_msat: u64,
    pub cltv_delta: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteJson {
    pub hops: Vec<HopJson>,
    pub total_fee_msat: u64,
    pub total_timelock: u64,
    pub path_prob: f64,
    pub engine_cost: f64,
    pub exclusions: ExclusionCounters,
}

/// Outcome of a single route query.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub route: Option<RouteResult>,
    pub exclusions: ExclusionCounters,
}

/// Search label of a node: what is known about the best path from it to
/// the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Label {
    /// Amount this node must forward onwards (on `next`), or receive if it
    /// is the receiver.
    pub amt: u64,
    pub cost_a: f64,
    pub cost_m: f64,
    pub acc: Accumulators,
    pub ln_prob: f64,
    pub next: Option<PolicyIdx>,
}

impl Label {
    pub fn origin(amt: u64, mode: CostMode) -> Self {
        let cost_m = match mode {
            CostMode::Additive => 0.0,
            CostMode::AdditiveMultiplicative { c_attempt } => c_attempt,
        };
        Label { amt, cost_a: 0.0, cost_m, acc: Accumulators::default(), ln_prob: 0.0, next: None }
    }

    pub fn key(&self, mode: CostMode) -> f64 {
        match mode {
            CostMode::Additive => self.cost_a,
            CostMode::AdditiveMultiplicative { .. } => self.cost_a + self.cost_m,
        }
    }
}

pub(crate) enum Step {
    Ok(Label, u64),
    Unusable(Unusable),
}

/// Extends the label of `policy.target` across `policy` to its source.
/// Returns the new label and the amount the source must hold.
pub(crate) fn extend<W: EdgeWeight + ?Sized>(
    graph: &ChannelGraph,
    weight: &W,
    downstream: &Label,
    idx: PolicyIdx,
    is_first_hop: bool,
    mode: CostMode,
) -> Result<Step, EngineError> {
    let policy = graph.policy(idx);
    let eval = match weight.eval(graph, idx, downstream.amt, is_first_hop) {
        Ok(e) => e,
        Err(why) => return Ok(Step::Unusable(why)),
    };
    let a = eval.cost.additive;
    if !(a >= 0.0) {
        return Err(EngineError::NegativeCost { edge: graph.describe(idx), cost: a });
    }
    let m = eval.cost.multiplicative;
    if let CostMode::AdditiveMultiplicative { .. } = mode {
        if !(m >= 1.0) {
            return Err(EngineError::MultiplicativeBelowOne { edge: graph.describe(idx), value: m });
        }
    }
    let mut acc = downstream.acc;
    acc.0[ConstraintKind::TimelockSum.slot()] += policy.cltv_delta as f64;
    acc.0[ConstraintKind::NegLogProbSum.slot()] += -eval.prob.ln();
    acc.0[ConstraintKind::FeeSum.slot()] += eval.fee_msat as f64;
    acc.0[ConstraintKind::PathLength.slot()] += 1.0;
    let label = Label {
        amt: propagate_amount(policy, downstream.amt, is_first_hop),
        cost_a: downstream.cost_a + a,
        cost_m: match mode {
            CostMode::Additive => 0.0,
            CostMode::AdditiveMultiplicative { .. } => downstream.cost_m * m,
        },
        acc,
        ln_prob: downstream.ln_prob + eval.prob.ln(),
        next: Some(idx),
    };
    Ok(Step::Ok(label, downstream.amt))
}

/// Re-evaluates a sender-to-receiver path in search order and builds the
/// [`RouteResult`]. `None` if some hop is unusable.
pub fn evaluate_path<W: EdgeWeight + ?Sized>(
    graph: &ChannelGraph,
    weight: &W,
    hops: &[PolicyIdx],
    amt_msat: u64,
    mode: CostMode,
) -> Result<Option<RouteResult>, EngineError> {
    let mut label = Label::origin(amt_msat, mode);
    let mut per_hop_amt = vec![0; hops.len()];
    for (i, &p) in hops.iter().enumerate().rev() {
        match extend(graph, weight, &label, p, i == 0, mode)? {
            Step::Ok(next, crossing) => {
                per_hop_amt[i] = crossing;
                label = next;
            }
            Step::Unusable(_) => return Ok(None),
        }
    }
    Ok(Some(finish(graph, hops.to_vec(), per_hop_amt, &label, mode, amt_msat)))
}

fn finish(
    graph: &ChannelGraph,
    hops: Vec<PolicyIdx>,
    per_hop_amt: Vec<u64>,
    sender_label: &Label,
    mode: CostMode,
    amt_msat: u64,
) -> RouteResult {
    RouteResult {
        total_fee_msat: per_hop_amt.first().map_or(0, |&a| a - amt_msat),
        total_timelock: hops.iter().map(|&p| graph.policy(p).cltv_delta as u64).sum(),
        path_prob: sender_label.ln_prob.exp(),
        engine_cost: sender_label.key(mode),
        accumulators: sender_label.acc,
        hops,
        per_hop_amt,
        exclusions: ExclusionCounters::default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QueueItem {
    key: f64,
    node: NodeIdx,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap on (key, node).
        other.key.total_cmp(&self.key).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Policies failing the HTLC/capacity check at the payment amount.
pub(crate) fn prefilter(graph: &ChannelGraph, amt_msat: u64, counters: &mut ExclusionCounters) -> Vec<bool> {
    graph
        .policies()
        .iter()
        .map(|p| match check_eligible(p, amt_msat) {
            Ok(()) => false,
            Err(why) => {
                counters.count(why, true);
                true
            }
        })
        .collect()
}

pub(crate) struct Search<'a, W: ?Sized> {
    pub graph: &'a ChannelGraph,
    pub weight: &'a W,
    pub sender: NodeIdx,
    pub mode: CostMode,
    pub constraints: &'a [SideConstraint],
    pub excluded: &'a [bool],
    pub banned_nodes: Option<&'a [bool]>,
    pub banned_edges: Option<&'a HashSet<PolicyIdx>>,
}

pub(crate) struct Found {
    /// Search-order tail: policies from the start node's side up to the
    /// sender, in payment order (sender first).
    pub hops: Vec<PolicyIdx>,
    pub per_hop_amt: Vec<u64>,
    pub sender_label: Label,
}

impl<W: EdgeWeight + ?Sized> Search<'_, W> {
    /// Runs from `start` with `start_label` until the sender is settled.
    pub fn run(
        &self,
        start: NodeIdx,
        start_label: Label,
        counters: &mut ExclusionCounters,
        mut trace: Option<&mut Vec<(NodeIdx, f64)>>,
    ) -> Result<Option<Found>, EngineError> {
        let g = self.graph;
        let n = g.node_count();
        let mut labels: Vec<Option<Label>> = vec![None; n];
        let mut crossing: Vec<u64> = vec![0; n];
        let mut settled = vec![false; n];
        let mut heap = BinaryHeap::new();
        labels[start.index()] = Some(start_label);
        heap.push(QueueItem { key: start_label.key(self.mode), node: start });

        while let Some(QueueItem { key, node: v }) = heap.pop() {
            if settled[v.index()] {
                continue;
            }
            let lv = labels[v.index()].expect("queued node has a label");
            if lv.key(self.mode).total_cmp(&key) != Ordering::Equal {
                continue;
            }
            settled[v.index()] = true;
            if v != start {
                if let Some(t) = trace.as_deref_mut() {
                    t.push((v, key));
                }
            }
            if v == self.sender {
                return Ok(Some(self.unwind(start, &labels, &crossing)));
            }
            for &p in g.incoming(v) {
                let u = g.policy(p).source;
                if settled[u.index()]
                    || self.excluded[p.index()]
                    || self.banned_nodes.is_some_and(|b| b[u.index()])
                    || self.banned_edges.is_some_and(|b| b.contains(&p))
                {
                    continue;
                }
                let (cand, cross) = match extend(g, self.weight, &lv, p, u == self.sender, self.mode)? {
                    Step::Ok(l, c) => (l, c),
                    Step::Unusable(why) => {
                        counters.count(why, false);
                        continue;
                    }
                };
                let new_key = cand.key(self.mode);
                let better = match &labels[u.index()] {
                    None => true,
                    Some(cur) => match new_key.total_cmp(&cur.key(self.mode)) {
                        Ordering::Less => true,
                        Ordering::Equal => cand.next < cur.next,
                        Ordering::Greater => false,
                    },
                };
                if !better {
                    continue;
                }
                if !self.constraints.iter().all(|c| c.holds(&cand.acc)) {
                    counters.constraint_rejected += 1;
                    continue;
                }
                labels[u.index()] = Some(cand);
                crossing[u.index()] = cross;
                heap.push(QueueItem { key: new_key, node: u });
            }
        }
        Ok(None)
    }

    fn unwind(&self, start: NodeIdx, labels: &[Option<Label>], crossing: &[u64]) -> Found {
        let g = self.graph;
        let sender_label = labels[self.sender.index()].expect("sender settled");
        let mut hops = Vec::new();
        let mut per_hop_amt = Vec::new();
        let mut at = self.sender;
        while at != start {
            let l = labels[at.index()].expect("path node has a label");
            let p = l.next.expect("non-start node has a next hop");
            hops.push(p);
            per_hop_amt.push(crossing[at.index()]);
            at = g.policy(p).target;
        }
        Found { hops, per_hop_amt, sender_label }
    }
}

fn check_endpoints(receiver: NodeIdx, sender: NodeIdx, amt_msat: u64) -> Result<(), EngineError> {
    if receiver == sender {
        return Err(EngineError::SameEndpoints);
    }
    if amt_msat == 0 {
        return Err(EngineError::ZeroAmount);
    }
    Ok(())
}

fn single_search<W: EdgeWeight + ?Sized>(
    graph: &ChannelGraph,
    receiver: NodeIdx,
    sender: NodeIdx,
    amt_msat: u64,
    weight: &W,
    mode: CostMode,
    constraints: &[SideConstraint],
    trace: Option<&mut Vec<(NodeIdx, f64)>>,
) -> Result<SearchOutcome, EngineError> {
    check_endpoints(receiver, sender, amt_msat)?;
    let mut exclusions = ExclusionCounters::default();
    let excluded = prefilter(graph, amt_msat, &mut exclusions);
    let search = Search {
        graph,
        weight,
        sender,
        mode,
        constraints,
        excluded: &excluded,
        banned_nodes: None,
        banned_edges: None,
    };
    let found = search.run(receiver, Label::origin(amt_msat, mode), &mut exclusions, trace)?;
    let route = found.map(|f| {
        let mut r = finish(graph, f.hops, f.per_hop_amt, &f.sender_label, mode, amt_msat);
        r.exclusions = exclusions;
        r
    });
    Ok(SearchOutcome { route, exclusions })
}

/// Dijkstra on additive costs, with constraints checked on every
/// relaxation.
pub fn dijkstra_constrained<W: EdgeWeight + ?Sized>(
    graph: &ChannelGraph,
    receiver: NodeIdx,
    sender: NodeIdx,
    amt_msat: u64,
    weight: &W,
    constraints: &[SideConstraint],
) -> Result<SearchOutcome, EngineError> {
    single_search(graph, receiver, sender, amt_msat, weight, CostMode::Additive, constraints, None)
}

/// Dijkstra keyed on additive cost plus `c_attempt` times the product of
/// multiplicative weights. Not guaranteed optimal.
pub fn mod_dijkstra<W: EdgeWeight + ?Sized>(
    graph: &ChannelGraph,
    receiver: NodeIdx,
    sender: NodeIdx,
    amt_msat: u64,
    weight: &W,
    c_attempt: f64,
    constraints: &[SideConstraint],
) -> Result<SearchOutcome, EngineError> {
    mod_dijkstra_traced(graph, receiver, sender, amt_msat, weight, c_attempt, constraints, None)
}

/// [`mod_dijkstra`] that also records each `(node, key)` as it leaves the
/// queue.
#[allow(clippy::too_many_arguments)]
pub fn mod_dijkstra_traced<W: EdgeWeight + ?Sized>(
    graph: &ChannelGraph,
    receiver: NodeIdx,
    sender: NodeIdx,
    amt_msat: u64,
    weight: &W,
    c_attempt: f64,
    constraints: &[SideConstraint],
    trace: Option<&mut Vec<(NodeIdx, f64)>>,
) -> Result<SearchOutcome, EngineError> {
    if !(c_attempt >= 0.0) {
        return Err(EngineError::NegativeCost { edge: "attempt cost".into(), cost: c_attempt });
    }
    let mode = CostMode::AdditiveMultiplicative { c_attempt };
    single_search(graph, receiver, sender, amt_msat, weight, mode, constraints, trace)
}
