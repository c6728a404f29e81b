use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ChannelGraph, GraphError, NodeIdx, MSAT_PER_SAT};

const WELL_MIN_CAPACITY_MSAT: u64 = 1_000_000 * MSAT_PER_SAT;
const FAIR_MIN_CAPACITY_MSAT: u64 = 10_000 * MSAT_PER_SAT;
const MIN_CHANNELS_EXCLUSIVE: usize = 5;

/// Node connectivity class by channel count and total channel capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConnectivityClass {
    Well,
    Fair,
    Poor,
}

impl ConnectivityClass {
    pub const ALL: [ConnectivityClass; 3] =
        [ConnectivityClass::Well, ConnectivityClass::Fair, ConnectivityClass::Poor];

    pub fn from_stats(stats: NodeStats) -> Self {
        if stats.channel_count <= MIN_CHANNELS_EXCLUSIVE {
            ConnectivityClass::Poor
        } else if stats.total_capacity_msat >= WELL_MIN_CAPACITY_MSAT {
            ConnectivityClass::Well
        } else if stats.total_capacity_msat >= FAIR_MIN_CAPACITY_MSAT {
            ConnectivityClass::Fair
        } else {
            // More than five channels but under 10^4 sats in total.
            ConnectivityClass::Poor
        }
    }
}

impl fmt::Display for ConnectivityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConnectivityClass::Well => "Well",
            ConnectivityClass::Fair => "Fair",
            ConnectivityClass::Poor => "Poor",
        })
    }
}

impl FromStr for ConnectivityClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "well" => Ok(ConnectivityClass::Well),
            "fair" => Ok(ConnectivityClass::Fair),
            "poor" => Ok(ConnectivityClass::Poor),
            other => Err(format!("unknown connectivity class `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NodeStats {
    /// Distinct channel ids the node participates in.
    pub channel_count: usize,
    /// Sum of capacities over those channels, each counted once.
    pub total_capacity_msat: u64,
}

impl NodeStats {
    pub fn of(graph: &ChannelGraph, node: NodeIdx) -> Self {
        let mut chans: Vec<usize> = graph
            .outgoing(node)
            .chain(graph.incoming(node).iter().copied())
            .map(|p| graph.channel_index_of(p))
            .collect();
        chans.sort_unstable();
        chans.dedup();
        NodeStats {
            channel_count: chans.len(),
            total_capacity_msat: chans.iter().map(|&c| graph.channels()[c].capacity_msat).sum(),
        }
    }
}

pub fn classify_connectivity(graph: &ChannelGraph, node: &super::NodeId) -> Result<ConnectivityClass, GraphError> {
    let idx = graph.lookup(node)?;
    Ok(ConnectivityClass::from_stats(NodeStats::of(graph, idx)))
}

impl ChannelGraph {
    /// Connectivity class of every node, indexed by [`NodeIdx`].
    pub fn classify_all(&self) -> Vec<ConnectivityClass> {
        self.nodes()
            .map(|n| ConnectivityClass::from_stats(NodeStats::of(self, n)))
            .collect()
    }
}
