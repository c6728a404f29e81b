//! Synthetic channel graphs.
//!
//! Nodes join one at a time and open channels to earlier nodes picked with
//! probability proportional to their current total capacity (plus a floor),
//! which yields the heavy-tailed channel-count and capacity distribution of
//! the public network. A small share of nodes are "fair hubs" that open six
//! or more small channels and are never picked as attachment targets, so
//! that every connectivity class is present in graphs of 50 nodes or more.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    ChannelGraph, ChannelId, GraphBuilder, GraphError, NodeId, PolicyRecord, ShortChannelId,
    MSAT_PER_SAT,
};
use crate::rng::{substream, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    /// Average number of channels per node (twice the channels opened per
    /// joining node).
    pub mean_degree: f64,
    /// Channel capacities are log-uniform between these sat amounts.
    pub capacity_sat_range: (u64, u64),
    /// Attachment weight added to every node's capacity, in sats.
    pub attachment_floor_sat: u64,
    /// Share of nodes that become fair hubs (only applied when n >= 50).
    pub fair_hub_fraction: f64,
    /// Capacity range of fair-hub channels, in sats.
    pub fair_hub_capacity_sat_range: (u64, u64),
    /// Probability of a zero base fee; otherwise 1000 msat with
    /// `standard_base_fee_share`, else uniform up to `max_base_fee_msat`.
    pub zero_base_fee_share: f64,
    pub standard_base_fee_share: f64,
    pub max_base_fee_msat: u64,
    /// Probability of a zero proportional fee; otherwise log-uniform in
    /// `[1, max_fee_rate_ppm]`.
    pub zero_fee_rate_share: f64,
    pub max_fee_rate_ppm: u64,
    pub cltv_deltas: Vec<u32>,
    /// Funding heights are spread over this block range, older for nodes
    /// that joined earlier.
    pub funding_height_range: (u32, u32),
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            mean_degree: 6.0,
            capacity_sat_range: (20_000, 50_000_000),
            attachment_floor_sat: 200_000,
            fair_hub_fraction: 0.02,
            fair_hub_capacity_sat_range: (20_000, 120_000),
            zero_base_fee_share: 0.25,
            standard_base_fee_share: 0.55,
            max_base_fee_msat: 5_000,
            zero_fee_rate_share: 0.1,
            max_fee_rate_ppm: 2_000,
            cltv_deltas: vec![18, 34, 40, 40, 40, 80, 144, 144],
            funding_height_range: (500_000, 800_000),
        }
    }
}

impl SynthParams {
    fn validate(&self, n_nodes: usize) -> Result<(), GraphError> {
        let bad = |m: String| Err(GraphError::InfeasibleParams(m));
        if n_nodes < 2 {
            return bad(format!("need at least 2 nodes, got {n_nodes}"));
        }
        if !(self.mean_degree >= 1.0) || self.mean_degree >= n_nodes as f64 {
            return bad(format!(
                "mean degree {} must lie in [1, n_nodes = {n_nodes})",
                self.mean_degree
            ));
        }
        let (lo, hi) = self.capacity_sat_range;
        let (flo, fhi) = self.fair_hub_capacity_sat_range;
        if lo == 0 || lo > hi || flo == 0 || flo > fhi {
            return bad("capacity ranges must be non-empty and positive".into());
        }
        if !(0.0..=1.0).contains(&self.fair_hub_fraction)
            || !(0.0..=1.0).contains(&self.zero_base_fee_share)
            || !(0.0..=1.0).contains(&self.zero_fee_rate_share)
            || self.zero_base_fee_share + self.standard_base_fee_share > 1.0
        {
            return bad("shares must be probabilities".into());
        }
        if self.cltv_deltas.is_empty() {
            return bad("cltv_deltas is empty".into());
        }
        if self.funding_height_range.0 > self.funding_height_range.1
            || self.funding_height_range.1 >= 1 << 24
        {
            return bad("invalid funding height range".into());
        }
        Ok(())
    }
}

fn log_uniform(rng: &mut StreamRng, lo: u64, hi: u64) -> u64 {
    if lo == hi {
        return lo;
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    (rng.gen_range(a..b).exp().round() as u64).clamp(lo, hi)
}

struct PolicyDraw<'a> {
    params: &'a SynthParams,
}

impl PolicyDraw<'_> {
    fn base_fee(&self, rng: &mut StreamRng) -> u64 {
        let u: f64 = rng.gen();
        if u < self.params.zero_base_fee_share {
            0
        } else if u < self.params.zero_base_fee_share + self.params.standard_base_fee_share {
            1000
        } else {
            rng.gen_range(0..=self.params.max_base_fee_msat)
        }
    }

    fn fee_rate(&self, rng: &mut StreamRng) -> u64 {
        if rng.gen_bool(self.params.zero_fee_rate_share) {
            0
        } else {
            log_uniform(rng, 1, self.params.max_fee_rate_ppm.max(1))
        }
    }

    fn htlc_limits(&self, rng: &mut StreamRng, cap_msat: u64) -> (u64, u64) {
        let max = match rng.gen_range(0..10) {
            0..=4 => cap_msat,
            5..=6 => cap_msat / 100 * 99,
            _ => rng.gen_range(cap_msat / 10..=cap_msat),
        };
        let min = match rng.gen_range(0..10) {
            0..=5 => 1000,
            6..=8 => 1,
            _ => log_uniform(rng, 1_000, 1_000_000),
        };
        (min.min(max), max)
    }
}

/// Generates a connected synthetic graph; deterministic in `(params, seed)`.
pub fn generate_synthetic(n_nodes: usize, params: &SynthParams, seed: u64) -> Result<ChannelGraph, GraphError> {
    params.validate(n_nodes)?;
    let mut rng = substream(seed, &["synth".into()]);
    let width = (n_nodes - 1).to_string().len().max(3);
    let ids: Vec<NodeId> = (0..n_nodes).map(|i| NodeId(format!("n{i:0width$}"))).collect();

    let mut fair_hub = vec![false; n_nodes];
    if n_nodes >= 50 {
        let count = ((n_nodes as f64 * params.fair_hub_fraction).round() as usize).max(1);
        let mut candidates: Vec<usize> = (10..n_nodes).collect();
        candidates.shuffle(&mut rng);
        for &i in candidates.iter().take(count) {
            fair_hub[i] = true;
        }
    }

    let opened_mean = params.mean_degree / 2.0;
    let mut strength_sat = vec![0u64; n_nodes];
    let mut builder = GraphBuilder::new();
    let draw = PolicyDraw { params };
    let (h_lo, h_hi) = params.funding_height_range;
    let mut chan_no: u32 = 0;

    for i in 1..n_nodes {
        let want = if fair_hub[i] {
            rng.gen_range(6..=8)
        } else {
            // 1 + geometric, mean `opened_mean`.
            let p = 1.0 / opened_mean.max(1.0);
            let mut k = 1;
            while k < n_nodes && !rng.gen_bool(p) {
                k += 1;
            }
            k
        };
        let eligible: Vec<usize> = (0..i).filter(|&j| !fair_hub[j]).collect();
        let k = want.min(eligible.len()).max(1);
        let mut pool: Vec<(usize, f64)> = eligible
            .iter()
            .map(|&j| (j, (strength_sat[j] + params.attachment_floor_sat) as f64))
            .collect();
        if pool.is_empty() {
            pool.push((0, 1.0));
        }
        let mut picked = Vec::with_capacity(k);
        for _ in 0..k.min(pool.len()) {
            let total: f64 = pool.iter().map(|(_, w)| w).sum();
            let mut x = rng.gen_range(0.0..total);
            let mut at = pool.len() - 1;
            for (pos, (_, w)) in pool.iter().enumerate() {
                if x < *w {
                    at = pos;
                    break;
                }
                x -= w;
            }
            picked.push(pool.swap_remove(at).0);
        }
        picked.sort_unstable();

        for j in picked {
            let cap_sat = if fair_hub[i] {
                let (lo, hi) = params.fair_hub_capacity_sat_range;
                log_uniform(&mut rng, lo, hi)
            } else {
                let (lo, hi) = params.capacity_sat_range;
                log_uniform(&mut rng, lo, hi)
            };
            strength_sat[i] += cap_sat;
            strength_sat[j] += cap_sat;
            let cap_msat = cap_sat * MSAT_PER_SAT;
            let age_frac = i as f64 / n_nodes as f64;
            let span = (h_hi - h_lo) as f64;
            let height = (h_lo as f64 + span * 0.93 * age_frac + rng.gen_range(0.0..=span * 0.07)) as u32;
            let scid = ShortChannelId::new(height.min(h_hi), chan_no, rng.gen_range(0..4));
            let mut h = Sha256::new();
            h.update(seed.to_le_bytes());
            h.update(chan_no.to_le_bytes());
            let digest = h.finalize();
            let channel_id = ChannelId(digest.iter().map(|b| format!("{b:02x}")).collect());
            chan_no += 1;
            for (src, dst) in [(i, j), (j, i)] {
                let (htlc_min_msat, htlc_max_msat) = draw.htlc_limits(&mut rng, cap_msat);
                builder.policy(PolicyRecord {
                    channel_id: channel_id.clone(),
                    short_channel_id: scid,
                    source: ids[src].clone(),
                    target: ids[dst].clone(),
                    capacity_msat: cap_msat,
                    base_fee_msat: draw.base_fee(&mut rng),
                    fee_rate_ppm: draw.fee_rate(&mut rng),
                    cltv_delta: *params.cltv_deltas.choose(&mut rng).expect("non-empty"),
                    htlc_min_msat,
                    htlc_max_msat,
                });
            }
        }
    }
    builder.build()
}
