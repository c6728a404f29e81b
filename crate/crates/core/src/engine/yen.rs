//! Yen's k shortest loopless paths.
//!
//! Paths are grown from the receiver, so a root path is a receiver-side
//! suffix of the payment path and fully determines the amounts and costs
//! at the spur node. The spur search continues from that label.

use std::collections::HashSet;

use super::{
    check_endpoints, evaluate_path, extend, prefilter, CostMode, EngineError, ExclusionCounters, Label,
    RouteResult, Search, SideConstraint, Step,
};
use crate::graph::{ChannelGraph, NodeIdx, PolicyIdx};
use crate::weights::EdgeWeight;

struct Candidate {
    cost: f64,
    /// Payment order.
    hops: Vec<PolicyIdx>,
}

/// Up to `k` cheapest loopless paths by additive cost, ordered by
/// `(cost, hop sequence)`, then filtered by `constraints_post`.
#[allow(clippy::too_many_arguments)]
pub fn yen_k_shortest<W: EdgeWeight + ?Sized>(
    graph: &ChannelGraph,
    receiver: NodeIdx,
    sender: NodeIdx,
    amt_msat: u64,
    weight: &W,
    k: usize,
    constraints_post: &[SideConstraint],
) -> Result<(Vec<RouteResult>, ExclusionCounters), EngineError> {
    check_endpoints(receiver, sender, amt_msat)?;
    if k == 0 {
        return Err(EngineError::InvalidK);
    }
    let mode = CostMode::Additive;
    let mut counters = ExclusionCounters::default();
    let excluded = prefilter(graph, amt_msat, &mut counters);
    let mut banned_nodes = vec![false; graph.node_count()];
    let mut banned_edges: HashSet<PolicyIdx> = HashSet::new();

    let mut accepted: Vec<Candidate> = Vec::new();
    {
        let search = Search {
            graph,
            weight,
            sender,
            mode,
            constraints: &[],
            excluded: &excluded,
            banned_nodes: None,
            banned_edges: None,
        };
        match search.run(receiver, Label::origin(amt_msat, mode), &mut counters, None)? {
            Some(f) => accepted.push(Candidate { cost: f.sender_label.key(mode), hops: f.hops }),
            None => return Ok((Vec::new(), counters)),
        }
    }
    let mut pool: Vec<Candidate> = Vec::new();

    while accepted.len() < k {
        let prev: Vec<PolicyIdx> = accepted.last().expect("non-empty").hops.iter().rev().copied().collect();
        // `prev` is in search order: prev[0] enters the receiver.
        let mut root_label = Label::origin(amt_msat, mode);
        let mut spur = receiver;
        for i in 0..prev.len() {
            let root = &prev[..i];
            banned_edges.clear();
            for a in &accepted {
                let a_search: Vec<PolicyIdx> = a.hops.iter().rev().copied().collect();
                if a_search.len() > i && a_search[..i] == *root {
                    banned_edges.insert(a_search[i]);
                }
            }
            banned_nodes.iter_mut().for_each(|b| *b = false);
            let mut at = receiver;
            for &p in root {
                banned_nodes[at.index()] = true;
                at = graph.policy(p).source;
            }
            let search = Search {
                graph,
                weight,
                sender,
                mode,
                constraints: &[],
                excluded: &excluded,
                banned_nodes: Some(&banned_nodes),
                banned_edges: Some(&banned_edges),
            };
            if let Some(f) = search.run(spur, root_label, &mut counters, None)? {
                let mut hops = f.hops;
                hops.extend(root.iter().rev());
                let seen = accepted.iter().chain(pool.iter()).any(|c| c.hops == hops);
                if !seen {
                    pool.push(Candidate { cost: f.sender_label.key(mode), hops });
                }
            }
            // Advance the root by one edge.
            let p = prev[i];
            let next_node = graph.policy(p).source;
            match extend(graph, weight, &root_label, p, next_node == sender, mode)? {
                Step::Ok(l, _) => root_label = l,
                Step::Unusable(_) => break,
            }
            spur = next_node;
        }
        if pool.is_empty() {
            break;
        }
        let best = (0..pool.len())
            .min_by(|&a, &b| {
                pool[a].cost.total_cmp(&pool[b].cost).then_with(|| pool[a].hops.cmp(&pool[b].hops))
            })
            .expect("non-empty pool");
        accepted.push(pool.swap_remove(best));
    }

    let mut out = Vec::with_capacity(accepted.len());
    for c in accepted {
        let Some(r) = evaluate_path(graph, weight, &c.hops, amt_msat, mode)? else {
            continue;
        };
        if !r.satisfies(constraints_post) {
            counters.post_validation_rejected += 1;
            continue;
        }
        out.push(r);
    }
    for r in &mut out {
        r.exclusions = counters;
    }
    Ok((out, counters))
}
