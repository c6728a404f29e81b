//! Lightning Network pathfinding lab: channel graph model, success
//! probability estimators, client edge weights, route search engines,
//! payment simulation and metrics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod engine;
pub mod graph;
pub mod manifest;
pub mod metrics;
pub mod prob;
pub mod rng;
pub mod sim;
pub mod weights;

pub use graph::{
    ChannelGraph, ChannelId, ChannelPolicy, ConnectivityClass, GraphBuilder, GraphError, NodeId,
    NodeIdx, PolicyIdx, PolicyRecord, ShortChannelId, MSAT_PER_SAT,
};
