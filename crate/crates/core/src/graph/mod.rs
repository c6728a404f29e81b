//! Channel graph model.
//!
//! A [`ChannelGraph`] is an immutable directed multigraph. Every payment
//! channel contributes one [`ChannelPolicy`] per direction; both directions
//! share the channel id, short channel id, capacity and funding height.
//! Nodes are stored sorted by [`NodeId`], so the dense [`NodeIdx`] order is
//! the same as the identifier order and can be used for tie-breaking.
//! Policies are stored sorted by `(source, target, channel_id)`.

mod balance;
mod connectivity;
pub mod snapshot;
pub mod synth;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use balance::{sample_balances_bimodal, sample_balances_uniform, BalanceView};
pub use connectivity::{classify_connectivity, ConnectivityClass, NodeStats};
pub use snapshot::{load_snapshot, write_snapshot, SnapshotFormat};
pub use synth::{generate_synthetic, SynthParams};

/// Millisatoshis per satoshi.
pub const MSAT_PER_SAT: u64 = 1000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("malformed record at {location}: field `{field}`: {message}")]
    Malformed {
        location: String,
        field: String,
        message: String,
    },
    #[error("duplicate direction {source_node} -> {target} for channel {channel_id}")]
    DuplicateDirection {
        channel_id: String,
        source_node: String,
        target: String,
    },
    #[error("channel {channel_id}: {reason}")]
    InvalidPolicy { channel_id: String, reason: String },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("infeasible generator parameters: {0}")]
    InfeasibleParams(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Public identifier of a node (a pubkey in real snapshots).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

/// Dense index of a node inside one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIdx(pub u32);

impl NodeIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense index of a directed policy inside one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolicyIdx(pub u32);

impl PolicyIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChannelId(pub String);

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Packed channel locator: funding block height in bits 40..64, transaction
/// index in bits 16..40, output index in bits 0..16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShortChannelId(pub u64);

impl ShortChannelId {
    pub fn new(block_height: u32, tx_index: u32, output_index: u16) -> Self {
        debug_assert!(block_height < (1 << 24) && tx_index < (1 << 24));
        ShortChannelId(
            ((block_height as u64) << 40) | ((tx_index as u64 & 0xff_ffff) << 16) | output_index as u64,
        )
    }

    pub fn block_height(self) -> u32 {
        (self.0 >> 40) as u32
    }

    pub fn tx_index(self) -> u32 {
        ((self.0 >> 16) & 0xff_ffff) as u32
    }

    pub fn output_index(self) -> u16 {
        (self.0 & 0xffff) as u16
    }
}

impl fmt::Display for ShortChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.block_height(), self.tx_index(), self.output_index())
    }
}

/// One direction of a payment channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelPolicy {
    pub channel_id: ChannelId,
    pub short_channel_id: ShortChannelId,
    pub source: NodeIdx,
    pub target: NodeIdx,
    pub capacity_msat: u64,
    pub base_fee_msat: u64,
    pub fee_rate_ppm: u64,
    pub cltv_delta: u32,
    pub htlc_min_msat: u64,
    pub htlc_max_msat: u64,
    pub funding_height: u32,
}

/// A policy as supplied to the [`GraphBuilder`], with endpoints given by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyRecord {
    pub channel_id: ChannelId,
    pub short_channel_id: ShortChannelId,
    pub source: NodeId,
    pub target: NodeId,
    pub capacity_msat: u64,
    pub base_fee_msat: u64,
    pub fee_rate_ppm: u64,
    pub cltv_delta: u32,
    pub htlc_min_msat: u64,
    pub htlc_max_msat: u64,
}

impl PolicyRecord {
    fn validate(&self) -> Result<(), GraphError> {
        let fail = |reason: String| GraphError::InvalidPolicy {
            channel_id: self.channel_id.0.clone(),
            reason,
        };
        if self.capacity_msat == 0 {
            return Err(fail("capacity must be positive".into()));
        }
        if self.htlc_min_msat > self.htlc_max_msat {
            return Err(fail(format!(
                "htlc_min_msat {} exceeds htlc_max_msat {} ({} -> {})",
                self.htlc_min_msat, self.htlc_max_msat, self.source, self.target
            )));
        }
        if self.htlc_max_msat > self.capacity_msat {
            return Err(fail(format!(
                "htlc_max_msat {} exceeds capacity {} ({} -> {})",
                self.htlc_max_msat, self.capacity_msat, self.source, self.target
            )));
        }
        if self.source == self.target {
            return Err(fail(format!("self loop on {}", self.source)));
        }
        Ok(())
    }
}

/// A channel and the indices of its one or two directed policies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Channel {
    pub id: ChannelId,
    pub short_channel_id: ShortChannelId,
    pub capacity_msat: u64,
    /// Sorted by `(source, target)`; the first entry is the direction whose
    /// balance is drawn during sampling.
    pub directions: Vec<PolicyIdx>,
}

/// Collects nodes and policies and validates them into a [`ChannelGraph`].
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    nodes: Vec<NodeId>,
    records: Vec<PolicyRecord>,
    tip_height: Option<u32>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a node that may have no channels.
    pub fn node(&mut self, id: impl Into<NodeId>) -> &mut Self {
        self.nodes.push(id.into());
        self
    }

    pub fn policy(&mut self, record: PolicyRecord) -> &mut Self {
        self.records.push(record);
        self
    }

    pub fn tip_height(&mut self, height: u32) -> &mut Self {
        self.tip_height = Some(height);
        self
    }

    pub fn build(&self) -> Result<ChannelGraph, GraphError> {
        let mut nodes: Vec<NodeId> = self.nodes.clone();
        for r in &self.records {
            r.validate()?;
            nodes.push(r.source.clone());
            nodes.push(r.target.clone());
        }
        nodes.sort();
        nodes.dedup();
        let node_index: HashMap<NodeId, NodeIdx> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), NodeIdx(i as u32)))
            .collect();

        let mut policies: Vec<ChannelPolicy> = self
            .records
            .iter()
            .map(|r| ChannelPolicy {
                channel_id: r.channel_id.clone(),
                short_channel_id: r.short_channel_id,
                source: node_index[&r.source],
                target: node_index[&r.target],
                capacity_msat: r.capacity_msat,
                base_fee_msat: r.base_fee_msat,
                fee_rate_ppm: r.fee_rate_ppm,
                cltv_delta: r.cltv_delta,
                htlc_min_msat: r.htlc_min_msat,
                htlc_max_msat: r.htlc_max_msat,
                funding_height: r.short_channel_id.block_height(),
            })
            .collect();
        policies.sort_by(|a, b| {
            (a.source, a.target, &a.channel_id).cmp(&(b.source, b.target, &b.channel_id))
        });

        // Group by channel id; enforce direction uniqueness and shared fields.
        let mut by_channel: BTreeMap<&ChannelId, Vec<PolicyIdx>> = BTreeMap::new();
        for (i, p) in policies.iter().enumerate() {
            by_channel.entry(&p.channel_id).or_default().push(PolicyIdx(i as u32));
        }
        let mut channels = Vec::with_capacity(by_channel.len());
        let mut reverse = vec![None; policies.len()];
        for (id, dirs) in &by_channel {
            let first = &policies[dirs[0].index()];
            let endpoints = |p: &ChannelPolicy| {
                let (a, b) = (p.source.min(p.target), p.source.max(p.target));
                (a, b)
            };
            for w in dirs.windows(2) {
                let (a, b) = (&policies[w[0].index()], &policies[w[1].index()]);
                if a.source == b.source && a.target == b.target {
                    return Err(GraphError::DuplicateDirection {
                        channel_id: id.0.clone(),
                        source_node: nodes[a.source.index()].0.clone(),
                        target: nodes[a.target.index()].0.clone(),
                    });
                }
            }
            if dirs.len() > 2 {
                return Err(GraphError::InvalidPolicy {
                    channel_id: id.0.clone(),
                    reason: format!("{} directions listed, expected at most 2", dirs.len()),
                });
            }
            for d in &dirs[1..] {
                let p = &policies[d.index()];
                if endpoints(p) != endpoints(first) {
                    return Err(GraphError::InvalidPolicy {
                        channel_id: id.0.clone(),
                        reason: "directions connect different node pairs".into(),
                    });
                }
                if p.short_channel_id != first.short_channel_id
                    || p.capacity_msat != first.capacity_msat
                {
                    return Err(GraphError::InvalidPolicy {
                        channel_id: id.0.clone(),
                        reason: "directions disagree on short channel id or capacity".into(),
                    });
                }
            }
            if dirs.len() == 2 {
                reverse[dirs[0].index()] = Some(dirs[1]);
                reverse[dirs[1].index()] = Some(dirs[0]);
            }
            channels.push(Channel {
                id: (*id).clone(),
                short_channel_id: first.short_channel_id,
                capacity_msat: first.capacity_msat,
                directions: dirs.clone(),
            });
        }

        let n = nodes.len();
        let mut out_offsets = vec![0u32; n + 1];
        for p in &policies {
            out_offsets[p.source.index() + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
        }
        // Incoming adjacency, ordered by (source, channel_id) within a target.
        let mut incoming: Vec<Vec<PolicyIdx>> = vec![Vec::new(); n];
        for (i, p) in policies.iter().enumerate() {
            incoming[p.target.index()].push(PolicyIdx(i as u32));
        }
        let mut in_offsets = Vec::with_capacity(n + 1);
        in_offsets.push(0u32);
        let mut in_list = Vec::with_capacity(policies.len());
        for list in incoming {
            in_list.extend(list);
            in_offsets.push(in_list.len() as u32);
        }
        let mut channel_of = vec![0u32; policies.len()];
        for (ci, c) in channels.iter().enumerate() {
            for d in &c.directions {
                channel_of[d.index()] = ci as u32;
            }
        }

        let tip_height = self
            .tip_height
            .unwrap_or_else(|| policies.iter().map(|p| p.funding_height).max().unwrap_or(0));

        Ok(ChannelGraph {
            nodes,
            node_index,
            policies,
            out_offsets,
            in_offsets,
            in_list,
            reverse,
            channels,
            channel_of,
            tip_height,
        })
    }
}

/// Immutable channel graph. Cheap to share across threads by reference.
#[derive(Debug, Clone)]
pub struct ChannelGraph {
    nodes: Vec<NodeId>,
    node_index: HashMap<NodeId, NodeIdx>,
    policies: Vec<ChannelPolicy>,
    out_offsets: Vec<u32>,
    in_offsets: Vec<u32>,
    in_list: Vec<PolicyIdx>,
    reverse: Vec<Option<PolicyIdx>>,
    channels: Vec<Channel>,
    channel_of: Vec<u32>,
    tip_height: u32,
}

impl ChannelGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn policy_count(&self) -> usize {
        self.policies.len()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn tip_height(&self) -> u32 {
        self.tip_height
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = NodeIdx> + '_ {
        (0..self.nodes.len() as u32).map(NodeIdx)
    }

    pub fn node_id(&self, idx: NodeIdx) -> &NodeId {
        &self.nodes[idx.index()]
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn lookup(&self, id: &NodeId) -> Result<NodeIdx, GraphError> {
        self.node_index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(id.0.clone()))
    }

    pub fn policy(&self, idx: PolicyIdx) -> &ChannelPolicy {
        &self.policies[idx.index()]
    }

    pub fn policies(&self) -> &[ChannelPolicy] {
        &self.policies
    }

    pub fn policy_indices(&self) -> impl ExactSizeIterator<Item = PolicyIdx> {
        (0..self.policies.len() as u32).map(PolicyIdx)
    }

    /// Policies leaving `node`, in `(target, channel_id)` order.
    pub fn outgoing(&self, node: NodeIdx) -> impl ExactSizeIterator<Item = PolicyIdx> {
        let (lo, hi) = (self.out_offsets[node.index()], self.out_offsets[node.index() + 1]);
        (lo..hi).map(PolicyIdx)
    }

    /// Policies entering `node`, in `(source, channel_id)` order.
    pub fn incoming(&self, node: NodeIdx) -> &[PolicyIdx] {
        let (lo, hi) = (self.in_offsets[node.index()], self.in_offsets[node.index() + 1]);
        &self.in_list[lo as usize..hi as usize]
    }

    /// The opposite direction of the same channel, if present.
    pub fn reverse(&self, idx: PolicyIdx) -> Option<PolicyIdx> {
        self.reverse[idx.index()]
    }

    pub fn find_policy(&self, source: NodeIdx, target: NodeIdx, channel: &ChannelId) -> Option<PolicyIdx> {
        let lo = self.out_offsets[source.index()] as usize;
        let hi = self.out_offsets[source.index() + 1] as usize;
        self.policies[lo..hi]
            .binary_search_by(|p| (p.target, &p.channel_id).cmp(&(target, channel)))
            .ok()
            .map(|i| PolicyIdx((lo + i) as u32))
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel_of(&self, idx: PolicyIdx) -> &Channel {
        &self.channels[self.channel_of[idx.index()] as usize]
    }

    /// Index of the channel owning `idx` in [`ChannelGraph::channels`].
    pub fn channel_index_of(&self, idx: PolicyIdx) -> usize {
        self.channel_of[idx.index()] as usize
    }

    /// Smallest funding height in the graph, or the tip for an empty graph.
    pub fn min_funding_height(&self) -> u32 {
        self.policies
            .iter()
            .map(|p| p.funding_height)
            .min()
            .unwrap_or(self.tip_height)
    }

    /// Human readable `source->target` for a policy.
    pub fn describe(&self, idx: PolicyIdx) -> String {
        let p = self.policy(idx);
        format!("{}->{}", self.node_id(p.source), self.node_id(p.target))
    }

    /// Policy records with node ids resolved, in storage order.
    pub fn records(&self) -> impl Iterator<Item = PolicyRecord> + '_ {
        self.policies.iter().map(|p| PolicyRecord {
            channel_id: p.channel_id.clone(),
            short_channel_id: p.short_channel_id,
            source: self.node_id(p.source).clone(),
            target: self.node_id(p.target).clone(),
            capacity_msat: p.capacity_msat,
            base_fee_msat: p.base_fee_msat,
            fee_rate_ppm: p.fee_rate_ppm,
            cltv_delta: p.cltv_delta,
            htlc_min_msat: p.htlc_min_msat,
            htlc_max_msat: p.htlc_max_msat,
        })
    }
}

impl PartialEq for ChannelGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.policies == other.policies
            && self.tip_height == other.tip_height
    }
}
