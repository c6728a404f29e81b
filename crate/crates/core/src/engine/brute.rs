//! Exhaustive simple-path enumeration, used as a test oracle.

use std::cmp::Ordering;

use super::{check_endpoints, evaluate_path, CostMode, EngineError, RouteResult, SideConstraint};
use crate::graph::{ChannelGraph, NodeIdx, PolicyIdx};
use crate::weights::EdgeWeight;

pub const DEFAULT_MAX_LEN: usize = 8;
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// All simple sender-to-receiver paths of at most `max_len` hops, scored
/// by `path_cost` (given hops in payment order; `None` drops the path),
/// sorted by `(cost, hop sequence)` and truncated to `k`.
pub fn brute_force_top_k(
    graph: &ChannelGraph,
    receiver: NodeIdx,
    sender: NodeIdx,
    max_len: usize,
    budget: u64,
    k: usize,
    mut path_cost: impl FnMut(&[PolicyIdx]) -> Option<f64>,
) -> Result<Vec<(f64, Vec<PolicyIdx>)>, EngineError> {
    let mut found: Vec<(f64, Vec<PolicyIdx>)> = Vec::new();
    let mut on_path = vec![false; graph.node_count()];
    // Search order: receiver outwards along incoming policies.
    let mut stack: Vec<PolicyIdx> = Vec::new();
    let mut steps = 0u64;

    fn dfs(
        graph: &ChannelGraph,
        at: NodeIdx,
        sender: NodeIdx,
        max_len: usize,
        budget: u64,
        steps: &mut u64,
        on_path: &mut [bool],
        stack: &mut Vec<PolicyIdx>,
        visit: &mut dyn FnMut(&[PolicyIdx]),
    ) -> Result<(), EngineError> {
        if at == sender {
            visit(stack);
            return Ok(());
        }
        if stack.len() == max_len {
            return Ok(());
        }
        on_path[at.index()] = true;
        for &p in graph.incoming(at) {
            *steps += 1;
            if *steps > budget {
                return Err(EngineError::BudgetExceeded(budget));
            }
            let u = graph.policy(p).source;
            if on_path[u.index()] {
                continue;
            }
            stack.push(p);
            dfs(graph, u, sender, max_len, budget, steps, on_path, stack, visit)?;
            stack.pop();
        }
        on_path[at.index()] = false;
        Ok(())
    }

    let mut visit = |search_order: &[PolicyIdx]| {
        let hops: Vec<PolicyIdx> = search_order.iter().rev().copied().collect();
        if let Some(c) = path_cost(&hops) {
            found.push((c, hops));
        }
    };
    if receiver != sender {
        dfs(graph, receiver, sender, max_len, budget, &mut steps, &mut on_path, &mut stack, &mut visit)?;
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    found.truncate(k);
    Ok(found)
}

/// Exact optimum over all simple paths satisfying `constraints`.
#[allow(clippy::too_many_arguments)]
pub fn brute_force_route<W: EdgeWeight + ?Sized>(
    graph: &ChannelGraph,
    receiver: NodeIdx,
    sender: NodeIdx,
    amt_msat: u64,
    weight: &W,
    mode: CostMode,
    constraints: &[SideConstraint],
    max_len: usize,
) -> Result<Option<RouteResult>, EngineError> {
    check_endpoints(receiver, sender, amt_msat)?;
    let mut err = None;
    let mut best: Option<RouteResult> = None;
    brute_force_top_k(graph, receiver, sender, max_len, DEFAULT_BUDGET, 0, |hops| {
        match evaluate_path(graph, weight, hops, amt_msat, mode) {
            Ok(Some(r)) if r.satisfies(constraints) => {
                let better = match &best {
                    None => true,
                    Some(b) => match r.engine_cost.total_cmp(&b.engine_cost) {
                        Ordering::Less => true,
                        Ordering::Equal => r.hops < b.hops,
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some(r);
                }
            }
            Ok(_) => {}
            Err(e) => err = Some(e),
        }
        None
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(best),
    }
}
