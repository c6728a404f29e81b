use rand::Rng;

use super::{
    dijkstra_constrained, mod_dijkstra, yen_k_shortest, ConstraintKind, EngineError, SearchOutcome, SideConstraint,
};
use crate::graph::{ChannelGraph, NodeIdx};
use crate::rng::substream;
use crate::weights::{ClientParams, ClientVariant, RouteLimits, ScorerState, Weigher};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteRequest {
    pub client: ClientVariant,
    pub sender: NodeIdx,
    pub receiver: NodeIdx,
    pub amt_msat: u64,
    /// Enables the client's side constraints (in-search or post-validated).
    pub constraints: bool,
    /// Pick uniformly among surviving Eclair paths with this seed instead
    /// of taking the cheapest.
    pub eclair_random_select: Option<u64>,
}

fn fee_limit(amt: u64, ppm: u64, flat: u64) -> f64 {
    (amt as u128 * ppm as u128 / 1_000_000) as f64 + flat as f64
}

/// Side constraints a client applies to a payment of `amt_msat`.
pub fn limits_for(client: ClientVariant, limits: &RouteLimits, amt_msat: u64) -> Vec<SideConstraint> {
    use ConstraintKind::*;
    let c = SideConstraint::new;
    match client {
        v if v.is_lnd() => vec![
            c(TimelockSum, limits.lnd_max_cltv as f64),
            c(NegLogProbSum, -limits.lnd_min_path_prob.ln()),
            c(FeeSum, fee_limit(amt_msat, limits.lnd_fee_limit_ppm, 0)),
        ],
        ClientVariant::Cln => vec![c(PathLength, limits.cln_max_hops as f64)],
        v if v.is_ldk() => vec![
            c(TimelockSum, limits.ldk_max_cltv as f64),
            c(NegLogProbSum, -limits.ldk_min_path_prob.ln()),
            c(FeeSum, fee_limit(amt_msat, limits.ldk_fee_limit_ppm, limits.ldk_fee_limit_base_msat)),
            c(PathLength, limits.ldk_max_hops as f64),
        ],
        _ => vec![
            c(TimelockSum, limits.eclair_max_cltv as f64),
            c(PathLength, limits.eclair_max_hops as f64),
            c(
                FeeSum,
                fee_limit(amt_msat, limits.eclair_fee_limit_ppm, 0).max(limits.eclair_fee_limit_flat_msat as f64),
            ),
        ],
    }
}

/// Routes one payment the way `req.client` would.
pub fn find_route(
    graph: &ChannelGraph,
    params: &ClientParams,
    scorer: Option<&ScorerState>,
    req: &RouteRequest,
) -> Result<SearchOutcome, EngineError> {
    let weigher = Weigher::new(req.client, params, graph).with_scorer(scorer);
    let limits = if req.constraints {
        limits_for(req.client, &params.limits, req.amt_msat)
    } else {
        Vec::new()
    };
    let (s, r, amt) = (req.sender, req.receiver, req.amt_msat);
    match req.client {
        v if v.is_lnd() => mod_dijkstra(graph, r, s, amt, &weigher, weigher.attempt_cost(amt), &limits),
        ClientVariant::Cln => {
            let mut out = dijkstra_constrained(graph, r, s, amt, &weigher, &[])?;
            if let Some(route) = &out.route {
                if !route.satisfies(&limits) {
                    out.exclusions.post_validation_rejected += 1;
                    out.route = None;
                }
            }
            Ok(out)
        }
        v if v.is_ldk() => dijkstra_constrained(graph, r, s, amt, &weigher, &limits),
        _ => {
            let (mut paths, exclusions) = yen_k_shortest(graph, r, s, amt, &weigher, params.limits.eclair_k, &limits)?;
            let route = match (req.eclair_random_select, paths.len()) {
                (_, 0) => None,
                (Some(seed), n) => {
                    let mut rng = substream(seed, &["eclair-select".into(), amt.into(), (s.index() as u64).into(), (r.index() as u64).into()]);
                    Some(paths.swap_remove(rng.gen_range(0..n)))
                }
                (None, _) => Some(paths.swap_remove(0)),
            };
            Ok(SearchOutcome { route, exclusions })
        }
    }
}
