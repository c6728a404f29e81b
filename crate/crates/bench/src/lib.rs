//! Benchmark fixtures shared by the criterion benches.
use lnpath_core::engine::RouteRequest;
use lnpath_core::graph::{generate_synthetic, SynthParams};
use lnpath_core::rng::substream;
use lnpath_core::weights::ClientVariant;
use lnpath_core::ChannelGraph;
use rand::Rng;

pub fn graph(nodes: usize) -> ChannelGraph {
    generate_synthetic(nodes, &SynthParams::default(), 7).expect("synthetic graph")
}

/// `n` distinct sender/receiver pairs with amounts in `[1e3, 1e8]` msat.
pub fn requests(g: &ChannelGraph, client: ClientVariant, n: usize) -> Vec<RouteRequest> {
    let nodes: Vec<_> = g.nodes().collect();
    let mut rng = substream(1, &["bench".into()]);
    (0..n)
        .map(|_| {
            let sender = nodes[rng.gen_range(0..nodes.len())];
            let mut receiver = sender;
            while receiver == sender {
                receiver = nodes[rng.gen_range(0..nodes.len())];
            }
            let amt_msat = 10u64.pow(rng.gen_range(3..=8));
            RouteRequest { client, sender, receiver, amt_msat, constraints: true, eclair_random_select: None }
        })
        .collect()
}
