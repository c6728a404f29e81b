use rand::Rng;

use super::{ChannelGraph, PolicyIdx};
use crate::rng::{substream, Label};

/// Hidden per-direction liquidity. Indexed by [`PolicyIdx`]; for every
/// two-directional channel the two entries sum to the capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceView {
    balance_msat: Vec<u64>,
}

impl BalanceView {
    /// Every direction holds its full capacity. Useful for tests; violates
    /// conservation for two-directional channels.
    pub fn full(graph: &ChannelGraph) -> Self {
        BalanceView {
            balance_msat: graph.policies().iter().map(|p| p.capacity_msat).collect(),
        }
    }

    /// Builds a view by drawing the first direction of every channel with
    /// `draw(channel_index, capacity)`; the opposite direction gets the rest.
    pub fn from_draws(graph: &ChannelGraph, mut draw: impl FnMut(usize, u64) -> u64) -> Self {
        let mut balance_msat = vec![0; graph.policy_count()];
        for (ci, ch) in graph.channels().iter().enumerate() {
            let first = draw(ci, ch.capacity_msat).min(ch.capacity_msat);
            balance_msat[ch.directions[0].index()] = first;
            if let Some(second) = ch.directions.get(1) {
                balance_msat[second.index()] = ch.capacity_msat - first;
            }
        }
        BalanceView { balance_msat }
    }

    pub fn get(&self, idx: PolicyIdx) -> u64 {
        self.balance_msat[idx.index()]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.balance_msat
    }

    /// Moves `amt_msat` from the `idx` side of its channel to the opposite
    /// side. Returns false (and changes nothing) if the side holds less.
    pub fn shift(&mut self, graph: &ChannelGraph, idx: PolicyIdx, amt_msat: u64) -> bool {
        let have = self.balance_msat[idx.index()];
        if have < amt_msat {
            return false;
        }
        self.balance_msat[idx.index()] = have - amt_msat;
        if let Some(rev) = graph.reverse(idx) {
            self.balance_msat[rev.index()] += amt_msat;
        }
        true
    }

    /// Largest balance among the policies leaving `node`.
    pub fn max_outgoing(&self, graph: &ChannelGraph, node: super::NodeIdx) -> u64 {
        graph.outgoing(node).map(|p| self.get(p)).max().unwrap_or(0)
    }

    /// Largest balance among the policies entering `node`, i.e. the remote
    /// side of each of the node's channels.
    pub fn max_incoming(&self, graph: &ChannelGraph, node: super::NodeIdx) -> u64 {
        graph.incoming(node).iter().map(|&p| self.get(p)).max().unwrap_or(0)
    }
}

fn channel_rng(seed: u64, tag: &str, graph: &ChannelGraph, ci: usize) -> crate::rng::StreamRng {
    substream(seed, &[Label::Str(tag), Label::Str(&graph.channels()[ci].id.0)])
}

/// Draws one side of every channel uniformly from `[0, capacity]`.
pub fn sample_balances_uniform(graph: &ChannelGraph, seed: u64) -> BalanceView {
    BalanceView::from_draws(graph, |ci, cap| {
        channel_rng(seed, "balance/uniform", graph, ci).gen_range(0..=cap)
    })
}

/// Draws one side of every channel from the density proportional to
/// `exp(-x/s) + exp((x-cap)/s)` on `[0, cap]` with `s = s_fraction * cap`.
///
/// Panics if `s_fraction` is not in `(0, 1]`.
pub fn sample_balances_bimodal(graph: &ChannelGraph, s_fraction: f64, seed: u64) -> BalanceView {
    assert!(
        s_fraction > 0.0 && s_fraction <= 1.0,
        "s_fraction must lie in (0, 1], got {s_fraction}"
    );
    BalanceView::from_draws(graph, |ci, cap| {
        let u: f64 = channel_rng(seed, "balance/bimodal", graph, ci).gen();
        let x = bimodal_inverse_cdf(u, cap as f64, s_fraction * cap as f64);
        (x.round() as u64).min(cap)
    })
}

/// Inverse CDF of the normalized density `exp(-x/s) + exp((x-c)/s)` on
/// `[0, c]`.
///
/// With `a = exp(-x/s)` and `q = exp(-c/s)` the CDF is
/// `(1 - a + q/a - q) / (2 (1 - q))`, a quadratic in `a`. The density is
/// symmetric about `c/2`, so the upper half is solved by reflection, which
/// keeps the quadratic root free of cancellation.
pub fn bimodal_inverse_cdf(u: f64, c: f64, s: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    if u > 0.5 {
        return c - bimodal_inverse_cdf(1.0 - u, c, s);
    }
    let q = (-c / s).exp();
    let one_minus_q = -(-c / s).exp_m1();
    let t = 2.0 * u * one_minus_q;
    // a^2 - b a - q = 0 with b = 1 - q - t >= 0 on the lower half.
    let b = one_minus_q - t;
    let a = 0.5 * (b + (b * b + 4.0 * q).sqrt());
    if a <= 0.0 {
        return c / 2.0;
    }
    (-s * a.ln()).clamp(0.0, c)
}
