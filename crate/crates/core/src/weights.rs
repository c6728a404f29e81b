//! Client edge-cost functions.
//!
//! Every client variant turns a channel policy and the amount crossing it
//! into an [`EdgeCost`]. Only the LND variants carry a multiplicative part
//! (`1 / P_e`); the path-level attempt cost that multiplies it is supplied
//! to the engine separately by [`Weigher::attempt_cost`].

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::graph::{ChannelGraph, ChannelPolicy, PolicyIdx, MSAT_PER_SAT};
use crate::prob::{
    p_bounded, p_eclair, p_ldk_bimodal, p_lnd_apriori, p_lnd_bimodal, p_uniform_capacity,
    AprioriParams, BimodalScorerState, LiquidityBounds, ScaleSpec,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCost {
    pub additive: f64,
    pub multiplicative: f64,
}

impl EdgeCost {
    pub fn additive(v: f64) -> Self {
        EdgeCost { additive: v, multiplicative: 1.0 }
    }
}

/// Result of weighing one edge at one amount.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeEval {
    pub cost: EdgeCost,
    /// Success probability under the client's own model.
    pub prob: f64,
    /// Fee charged for forwarding over this edge (0 on the sender's hop).
    pub fee_msat: u64,
}

/// Why an edge cannot carry an amount.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unusable {
    BelowHtlcMin,
    AboveHtlcMax,
    AboveCapacity,
    ZeroProbability,
}

pub fn check_eligible(policy: &ChannelPolicy, amt_msat: u64) -> Result<(), Unusable> {
    if amt_msat > policy.capacity_msat {
        Err(Unusable::AboveCapacity)
    } else if amt_msat > policy.htlc_max_msat {
        Err(Unusable::AboveHtlcMax)
    } else if amt_msat < policy.htlc_min_msat {
        Err(Unusable::BelowHtlcMin)
    } else {
        Ok(())
    }
}

/// Fee charged by the policy's source for forwarding `amt_msat`.
pub fn channel_fee(policy: &ChannelPolicy, amt_msat: u64) -> u64 {
    let prop = (amt_msat as u128 * policy.fee_rate_ppm as u128 / 1_000_000) as u64;
    policy.base_fee_msat + prop
}

/// Amount the policy's source must receive so that `downstream_amt`
/// crosses the edge. The sender pays itself no fee.
pub fn propagate_amount(policy: &ChannelPolicy, downstream_amt: u64, is_first_hop: bool) -> u64 {
    if is_first_hop {
        downstream_amt
    } else {
        downstream_amt + channel_fee(policy, downstream_amt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClientVariant {
    #[serde(rename = "LND-ap")]
    LndApriori,
    #[serde(rename = "LND-bm")]
    LndBimodal,
    #[serde(rename = "LND-un")]
    LndUniform,
    #[serde(rename = "CLN")]
    Cln,
    #[serde(rename = "LDK-un")]
    LdkUniform,
    #[serde(rename = "LDK-bm")]
    LdkBimodal,
    #[serde(rename = "Eclair1")]
    Eclair1,
    #[serde(rename = "Eclair2")]
    Eclair2,
    #[serde(rename = "Eclair3")]
    Eclair3,
}

impl ClientVariant {
    /// Report column order.
    pub const ALL: [ClientVariant; 9] = [
        ClientVariant::LndApriori,
        ClientVariant::LndBimodal,
        ClientVariant::LndUniform,
        ClientVariant::Cln,
        ClientVariant::LdkUniform,
        ClientVariant::LdkBimodal,
        ClientVariant::Eclair1,
        ClientVariant::Eclair2,
        ClientVariant::Eclair3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClientVariant::LndApriori => "LND-ap",
            ClientVariant::LndBimodal => "LND-bm",
            ClientVariant::LndUniform => "LND-un",
            ClientVariant::Cln => "CLN",
            ClientVariant::LdkUniform => "LDK-un",
            ClientVariant::LdkBimodal => "LDK-bm",
            ClientVariant::Eclair1 => "Eclair1",
            ClientVariant::Eclair2 => "Eclair2",
            ClientVariant::Eclair3 => "Eclair3",
        }
    }

    pub fn is_lnd(self) -> bool {
        matches!(self, ClientVariant::LndApriori | ClientVariant::LndBimodal | ClientVariant::LndUniform)
    }

    pub fn is_ldk(self) -> bool {
        matches!(self, ClientVariant::LdkUniform | ClientVariant::LdkBimodal)
    }

    pub fn is_eclair(self) -> bool {
        matches!(self, ClientVariant::Eclair1 | ClientVariant::Eclair2 | ClientVariant::Eclair3)
    }
}

impl fmt::Display for ClientVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClientVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        ClientVariant::ALL
            .into_iter()
            .find(|c| c.name().to_ascii_lowercase() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = ClientVariant::ALL.iter().map(|c| c.name()).collect();
                format!("unknown client `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LndParams {
    pub riskfactor: f64,
    pub timepref: f64,
    pub base_attempt_cost_msat: u64,
    /// Per million of the payment amount.
    pub attempt_cost_rate: u64,
    pub apriori: AprioriParams,
    pub bimodal_scale: ScaleSpec,
}

impl Default for LndParams {
    fn default() -> Self {
        LndParams {
            riskfactor: 15e-9,
            timepref: 0.0,
            base_attempt_cost_msat: 100,
            attempt_cost_rate: 1000,
            apriori: AprioriParams::default(),
            bimodal_scale: ScaleSpec::AbsoluteMsat(300_000 * MSAT_PER_SAT),
        }
    }
}

impl LndParams {
    /// Path-level penalty seeded into the multiplicative accumulator.
    pub fn attempt_penalty(&self, payment_amt_msat: u64) -> f64 {
        let attempt = self.base_attempt_cost_msat
            + (payment_amt_msat as u128 * self.attempt_cost_rate as u128 / 1_000_000) as u64;
        attempt as f64 * (1.0 / (0.5 - 0.9 * self.timepref / 2.0)) - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LndProbModel {
    Apriori,
    Bimodal,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClnParams {
    pub riskfactor: f64,
    pub blocks_per_year: f64,
}

impl Default for ClnParams {
    fn default() -> Self {
        ClnParams { riskfactor: 10.0, blocks_per_year: 52_596.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdkParams {
    pub penalty_base_msat: f64,
    pub base_multiplier_msat: f64,
    pub anti_probing_penalty_msat: f64,
    pub liquidity_multiplier_msat: f64,
    pub liquidity_amt_multiplier_msat: f64,
    pub historic_multiplier_msat: f64,
    pub historic_amt_multiplier_msat: f64,
}

impl Default for LdkParams {
    fn default() -> Self {
        LdkParams {
            penalty_base_msat: 500.0,
            base_multiplier_msat: 8192.0,
            anti_probing_penalty_msat: 250.0,
            liquidity_multiplier_msat: 30_000.0,
            liquidity_amt_multiplier_msat: 192.0,
            historic_multiplier_msat: 10_000.0,
            historic_amt_multiplier_msat: 64.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LdkProbModel {
    UniformBounds,
    BimodalQuadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EclairVariant {
    Ratios,
    ConstantsPlain,
    ConstantsLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EclairParams {
    pub age_factor: f64,
    pub base_factor: f64,
    pub cap_factor: f64,
    pub cltv_factor: f64,
    pub locked_funds_risk: f64,
    pub base_failure_cost_msat: u64,
    /// Per million of the amount.
    pub failure_cost_rate: u64,
    pub base_hop_cost_msat: u64,
    pub hop_cost_rate: u64,
    pub cltv_range: (f64, f64),
    pub cap_range_sat: (f64, f64),
    /// Funding-height range; `None` means `[oldest funding height, tip]`.
    pub age_range: Option<(f64, f64)>,
}

impl Default for EclairParams {
    fn default() -> Self {
        EclairParams {
            age_factor: 0.35,
            base_factor: 0.0,
            cap_factor: 0.5,
            cltv_factor: 0.15,
            locked_funds_risk: 1e-8,
            base_failure_cost_msat: 2000,
            failure_cost_rate: 500,
            base_hop_cost_msat: 0,
            hop_cost_rate: 0,
            cltv_range: (9.0, 2016.0),
            cap_range_sat: (1.0, 1e8),
            age_range: None,
        }
    }
}

/// `0.00001 + 0.99998 * (clamp(v, D) - min D) / (max D - min D)`.
pub fn normalize(v: f64, range: (f64, f64)) -> f64 {
    let (lo, hi) = range;
    0.00001 + 0.99998 * (v.clamp(lo, hi) - lo) / (hi - lo)
}

/// Resolved normalization ranges for the ratios variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormRanges {
    pub cltv: (f64, f64),
    pub cap_msat: (f64, f64),
    pub age: (f64, f64),
}

impl NormRanges {
    pub fn resolve(params: &EclairParams, graph: &ChannelGraph) -> Self {
        let age = params.age_range.unwrap_or_else(|| {
            let lo = graph.min_funding_height() as f64;
            let hi = (graph.tip_height() as f64).max(lo + 1.0);
            (lo, hi)
        });
        let m = MSAT_PER_SAT as f64;
        NormRanges {
            cltv: params.cltv_range,
            cap_msat: (params.cap_range_sat.0 * m, params.cap_range_sat.1 * m),
            age,
        }
    }
}

/// Limits used when side constraints are enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouteLimits {
    pub lnd_max_cltv: u32,
    pub lnd_min_path_prob: f64,
    pub lnd_fee_limit_ppm: u64,
    pub cln_max_hops: u32,
    pub ldk_max_cltv: u32,
    pub ldk_min_path_prob: f64,
    pub ldk_fee_limit_ppm: u64,
    pub ldk_fee_limit_base_msat: u64,
    pub ldk_max_hops: u32,
    pub eclair_max_cltv: u32,
    pub eclair_max_hops: u32,
    pub eclair_fee_limit_ppm: u64,
    pub eclair_fee_limit_flat_msat: u64,
    pub eclair_k: usize,
}

impl Default for RouteLimits {
    fn default() -> Self {
        RouteLimits {
            lnd_max_cltv: 2016,
            lnd_min_path_prob: 0.01,
            lnd_fee_limit_ppm: 50_000,
            cln_max_hops: 10,
            ldk_max_cltv: 1008,
            ldk_min_path_prob: 0.01,
            ldk_fee_limit_ppm: 10_000,
            ldk_fee_limit_base_msat: 50 * MSAT_PER_SAT,
            ldk_max_hops: 19,
            eclair_max_cltv: 2016,
            eclair_max_hops: 20,
            eclair_fee_limit_ppm: 30_000,
            eclair_fee_limit_flat_msat: 21 * MSAT_PER_SAT,
            eclair_k: 3,
        }
    }
}

/// Configuration for all client variants; every field has a default.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientParams {
    pub lnd: LndParams,
    pub cln: ClnParams,
    pub ldk: LdkParams,
    pub eclair: EclairParams,
    pub limits: RouteLimits,
}

impl ClientParams {
    pub fn validate(&self) -> Result<(), String> {
        let l = &self.lnd;
        if !(l.riskfactor >= 0.0) || !(-1.0..=1.0).contains(&l.timepref) {
            return Err("lnd: riskfactor must be >= 0 and timepref in [-1, 1]".into());
        }
        l.apriori.validate().map_err(|e| format!("lnd.apriori: {e}"))?;
        if !(self.cln.riskfactor >= 0.0) || !(self.cln.blocks_per_year > 0.0) {
            return Err("cln: riskfactor must be >= 0".into());
        }
        let k = &self.ldk;
        if [
            k.penalty_base_msat,
            k.base_multiplier_msat,
            k.anti_probing_penalty_msat,
            k.liquidity_multiplier_msat,
            k.liquidity_amt_multiplier_msat,
            k.historic_multiplier_msat,
            k.historic_amt_multiplier_msat,
        ]
        .iter()
        .any(|v| !(*v >= 0.0))
        {
            return Err("ldk: multipliers must be >= 0".into());
        }
        let e = &self.eclair;
        if [e.age_factor, e.base_factor, e.cap_factor, e.cltv_factor, e.locked_funds_risk]
            .iter()
            .any(|v| !(*v >= 0.0))
        {
            return Err("eclair: ratios must be >= 0".into());
        }
        let ranges = [Some(e.cltv_range), Some(e.cap_range_sat), e.age_range];
        if ranges.iter().flatten().any(|(lo, hi)| !(lo < hi)) {
            return Err("eclair: each normalization range needs min < max".into());
        }
        if self.limits.eclair_k == 0 {
            return Err("limits.eclair_k must be >= 1".into());
        }
        Ok(())
    }
}

/// Per-channel-direction knowledge learned from earlier attempts. Empty by
/// default, in which case every estimator falls back to its prior.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScorerState {
    pub now: Duration,
    pub lnd_last_failure: HashMap<PolicyIdx, Duration>,
    /// `(success amount, failure amount)`.
    pub lnd_bimodal: HashMap<PolicyIdx, (u64, u64)>,
    pub ldk_bounds: HashMap<PolicyIdx, LiquidityBounds>,
    pub ldk_historic: HashMap<PolicyIdx, LiquidityBounds>,
}

impl ScorerState {
    pub fn is_empty(&self) -> bool {
        self.lnd_last_failure.is_empty()
            && self.lnd_bimodal.is_empty()
            && self.ldk_bounds.is_empty()
            && self.ldk_historic.is_empty()
    }

    /// Records that `amt_msat` was forwarded over `idx`.
    pub fn record_success(&mut self, idx: PolicyIdx, cap_msat: u64, amt_msat: u64) {
        let e = self.lnd_bimodal.entry(idx).or_insert((0, cap_msat));
        e.0 = e.0.max(amt_msat).min(e.1);
        for map in [&mut self.ldk_bounds, &mut self.ldk_historic] {
            let b = map.entry(idx).or_insert(LiquidityBounds::full(cap_msat));
            b.lb_msat = b.lb_msat.max(amt_msat).min(b.ub_msat);
        }
    }

    /// Records that `idx` could not forward `amt_msat`.
    pub fn record_failure(&mut self, idx: PolicyIdx, cap_msat: u64, amt_msat: u64) {
        self.lnd_last_failure.insert(idx, self.now);
        let e = self.lnd_bimodal.entry(idx).or_insert((0, cap_msat));
        e.1 = e.1.min(amt_msat).max(e.0);
        for map in [&mut self.ldk_bounds, &mut self.ldk_historic] {
            let b = map.entry(idx).or_insert(LiquidityBounds::full(cap_msat));
            b.ub_msat = b.ub_msat.min(amt_msat.saturating_sub(1)).max(b.lb_msat);
        }
    }
}

fn lnd_prob(
    policy: &ChannelPolicy,
    idx: PolicyIdx,
    amt: u64,
    params: &LndParams,
    model: LndProbModel,
    scorer: Option<&ScorerState>,
) -> f64 {
    let cap = policy.capacity_msat;
    match model {
        LndProbModel::Uniform => p_uniform_capacity(amt.min(cap), cap).unwrap_or(0.0),
        LndProbModel::Apriori => {
            let since = scorer
                .and_then(|s| s.lnd_last_failure.get(&idx).map(|&t| s.now.saturating_sub(t)));
            p_lnd_apriori(amt.min(cap), cap, since, &params.apriori).unwrap_or(0.0)
        }
        LndProbModel::Bimodal => {
            let (sa, fa) = scorer
                .and_then(|s| s.lnd_bimodal.get(&idx).copied())
                .unwrap_or((0, cap));
            if amt <= sa {
                return 1.0;
            }
            if amt >= fa {
                return 0.0;
            }
            let state = BimodalScorerState {
                s_msat: params.bimodal_scale.resolve(cap),
                success_amt_msat: sa,
                fail_amt_msat: Some(fa),
            };
            p_lnd_bimodal(amt, cap, &state).unwrap_or(0.0)
        }
    }
}

/// `(fee + amt·Δ·riskfactor, 1/P)` at `amt`, given the probability.
pub fn cost_lnd(policy: &ChannelPolicy, amt_msat: u64, fee_msat: u64, prob: f64, params: &LndParams) -> Option<EdgeCost> {
    if !(prob > 0.0) {
        return None;
    }
    Some(EdgeCost {
        additive: fee_msat as f64 + amt_msat as f64 * policy.cltv_delta as f64 * params.riskfactor,
        multiplicative: 1.0 / prob,
    })
}

pub fn cln_capacity_bias(amt_msat: u64, cap_msat: u64) -> f64 {
    // -ln((cap + 1 - amt) / (cap + 1)) = -ln(1 - amt / (cap + 1))
    -(-(amt_msat as f64) / (cap_msat as f64 + 1.0)).ln_1p()
}

pub fn cost_cln(policy: &ChannelPolicy, amt_msat: u64, fee_msat: u64, params: &ClnParams) -> Option<EdgeCost> {
    if amt_msat > policy.capacity_msat {
        return None;
    }
    let risk = amt_msat as f64 * policy.cltv_delta as f64 * params.riskfactor / (params.blocks_per_year * 100.0);
    let bias = cln_capacity_bias(amt_msat, policy.capacity_msat);
    Some(EdgeCost::additive((fee_msat as f64 + risk + 1.0) * (bias + 1.0)))
}

fn ldk_prob(amt: u64, cap: u64, bounds: LiquidityBounds, model: LdkProbModel) -> f64 {
    if amt <= bounds.lb_msat {
        return 1.0;
    }
    if amt > bounds.ub_msat || bounds.lb_msat >= bounds.ub_msat {
        return 0.0;
    }
    match model {
        LdkProbModel::UniformBounds => p_bounded(amt, bounds).unwrap_or(0.0),
        LdkProbModel::BimodalQuadratic => p_ldk_bimodal(amt, cap, bounds).unwrap_or(0.0),
    }
}

/// Base, anti-probing, liquidity and historic penalties.
pub fn ldk_penalty(policy: &ChannelPolicy, amt_msat: u64, prob: f64, hist_prob: f64, params: &LdkParams) -> f64 {
    let amt = amt_msat as f64;
    let base = params.penalty_base_msat + params.base_multiplier_msat * amt / (1u64 << 30) as f64;
    let anti = if 2 * policy.htlc_max_msat as u128 >= policy.capacity_msat as u128 {
        params.anti_probing_penalty_msat
    } else {
        0.0
    };
    let liq = -prob.log10() * (params.liquidity_multiplier_msat + params.liquidity_amt_multiplier_msat * amt / (1u64 << 20) as f64);
    let hist = -hist_prob.log10() * (params.historic_multiplier_msat + params.historic_amt_multiplier_msat * amt / (1u64 << 20) as f64);
    // -log10(1) is -0.0; keep the sum nonnegative.
    base + anti + liq.max(0.0) + hist.max(0.0)
}

pub fn ldk_path_htlc_min(policy: &ChannelPolicy) -> f64 {
    policy.htlc_min_msat as f64 * (1.0 + policy.fee_rate_ppm as f64 / 1e6) + policy.base_fee_msat as f64
}

pub fn cost_ldk(
    policy: &ChannelPolicy,
    amt_msat: u64,
    fee_msat: u64,
    prob: f64,
    hist_prob: f64,
    params: &LdkParams,
) -> Option<EdgeCost> {
    if !(prob > 0.0) || !(hist_prob > 0.0) {
        return None;
    }
    let lead = (fee_msat as f64).max(ldk_path_htlc_min(policy));
    Some(EdgeCost::additive(lead + ldk_penalty(policy, amt_msat, prob, hist_prob, params)))
}

pub fn eclair_hop_cost(amt_msat: u64, params: &EclairParams) -> u64 {
    params.base_hop_cost_msat + (amt_msat as u128 * params.hop_cost_rate as u128 / 1_000_000) as u64
}

pub fn eclair_failure_cost(amt_msat: u64, params: &EclairParams) -> u64 {
    params.base_failure_cost_msat + (amt_msat as u128 * params.failure_cost_rate as u128 / 1_000_000) as u64
}

pub fn eclair_risk_cost(policy: &ChannelPolicy, amt_msat: u64, params: &EclairParams) -> f64 {
    amt_msat as f64 * policy.cltv_delta as f64 * params.locked_funds_risk
}

pub fn eclair_factor(policy: &ChannelPolicy, params: &EclairParams, ranges: &NormRanges) -> f64 {
    let n_cltv = normalize(policy.cltv_delta as f64, ranges.cltv);
    let n_age = normalize(policy.funding_height as f64, ranges.age);
    let n_cap = normalize(policy.capacity_msat as f64, ranges.cap_msat);
    params.base_factor + n_cltv * params.cltv_factor + n_age * params.age_factor + (1.0 - n_cap) * params.cap_factor
}

pub fn cost_eclair(
    policy: &ChannelPolicy,
    amt_msat: u64,
    fee_msat: u64,
    variant: EclairVariant,
    params: &EclairParams,
    ranges: &NormRanges,
) -> Option<EdgeCost> {
    let fee_hop = (fee_msat + eclair_hop_cost(amt_msat, params)) as f64;
    let additive = match variant {
        EclairVariant::Ratios => fee_hop * eclair_factor(policy, params, ranges),
        EclairVariant::ConstantsPlain | EclairVariant::ConstantsLog => {
            let p = p_eclair(amt_msat, policy.capacity_msat).ok()?;
            if !(p > 0.0) {
                return None;
            }
            let risk = eclair_risk_cost(policy, amt_msat, params);
            let failure = eclair_failure_cost(amt_msat, params) as f64;
            if variant == EclairVariant::ConstantsPlain {
                fee_hop + risk + failure / p
            } else {
                fee_hop + risk - failure * p.ln()
            }
        }
    };
    Some(EdgeCost::additive(additive.max(0.0)))
}

/// Edge weighing interface used by the engines.
pub trait EdgeWeight {
    /// Weighs `idx` when `amt_msat` crosses it.
    fn eval(&self, graph: &ChannelGraph, idx: PolicyIdx, amt_msat: u64, is_first_hop: bool) -> Result<EdgeEval, Unusable>;
}

/// Fixed per-policy costs, for fixtures and tests. Fees are zero and
/// probabilities one.
#[derive(Debug, Clone)]
pub struct TableWeight {
    pub costs: Vec<EdgeCost>,
}

impl EdgeWeight for TableWeight {
    fn eval(&self, _: &ChannelGraph, idx: PolicyIdx, _: u64, _: bool) -> Result<EdgeEval, Unusable> {
        Ok(EdgeEval { cost: self.costs[idx.index()], prob: 1.0, fee_msat: 0 })
    }
}

/// The weight function of one client variant.
#[derive(Debug, Clone)]
pub struct Weigher<'a> {
    pub variant: ClientVariant,
    pub params: &'a ClientParams,
    pub scorer: Option<&'a ScorerState>,
    pub ranges: NormRanges,
}

impl<'a> Weigher<'a> {
    pub fn new(variant: ClientVariant, params: &'a ClientParams, graph: &ChannelGraph) -> Self {
        Weigher { variant, params, scorer: None, ranges: NormRanges::resolve(&params.eclair, graph) }
    }

    pub fn with_scorer(mut self, scorer: Option<&'a ScorerState>) -> Self {
        self.scorer = scorer.filter(|s| !s.is_empty());
        self
    }

    /// Attempt penalty that seeds the multiplicative part (LND only).
    pub fn attempt_cost(&self, payment_amt_msat: u64) -> f64 {
        if self.variant.is_lnd() {
            self.params.lnd.attempt_penalty(payment_amt_msat)
        } else {
            0.0
        }
    }

    /// Success probability of `idx` at `amt` under this client's model.
    pub fn prob(&self, policy: &ChannelPolicy, idx: PolicyIdx, amt: u64) -> f64 {
        let cap = policy.capacity_msat;
        match self.variant {
            ClientVariant::LndApriori => lnd_prob(policy, idx, amt, &self.params.lnd, LndProbModel::Apriori, self.scorer),
            ClientVariant::LndBimodal => lnd_prob(policy, idx, amt, &self.params.lnd, LndProbModel::Bimodal, self.scorer),
            ClientVariant::LndUniform => lnd_prob(policy, idx, amt, &self.params.lnd, LndProbModel::Uniform, self.scorer),
            ClientVariant::LdkUniform | ClientVariant::LdkBimodal => {
                ldk_prob(amt, cap, self.ldk_bounds(idx, cap).0, self.ldk_model())
            }
            ClientVariant::Cln | ClientVariant::Eclair1 | ClientVariant::Eclair2 | ClientVariant::Eclair3 => {
                p_uniform_capacity(amt.min(cap), cap).unwrap_or(0.0)
            }
        }
    }

    fn ldk_model(&self) -> LdkProbModel {
        if self.variant == ClientVariant::LdkBimodal {
            LdkProbModel::BimodalQuadratic
        } else {
            LdkProbModel::UniformBounds
        }
    }

    fn ldk_bounds(&self, idx: PolicyIdx, cap: u64) -> (LiquidityBounds, LiquidityBounds) {
        let full = LiquidityBounds::full(cap);
        match self.scorer {
            None => (full, full),
            Some(s) => (
                s.ldk_bounds.get(&idx).copied().unwrap_or(full),
                s.ldk_historic.get(&idx).copied().unwrap_or(full),
            ),
        }
    }
}

impl EdgeWeight for Weigher<'_> {
    fn eval(&self, graph: &ChannelGraph, idx: PolicyIdx, amt: u64, is_first_hop: bool) -> Result<EdgeEval, Unusable> {
        let policy = graph.policy(idx);
        check_eligible(policy, amt)?;
        let fee = if is_first_hop { 0 } else { channel_fee(policy, amt) };
        let p = &self.params;
        let prob = self.prob(policy, idx, amt);
        let cost = match self.variant {
            ClientVariant::LndApriori | ClientVariant::LndBimodal | ClientVariant::LndUniform => {
                cost_lnd(policy, amt, fee, prob, &p.lnd)
            }
            ClientVariant::Cln => cost_cln(policy, amt, fee, &p.cln),
            ClientVariant::LdkUniform | ClientVariant::LdkBimodal => {
                let (_, hist) = self.ldk_bounds(idx, policy.capacity_msat);
                let hist_prob = ldk_prob(amt, policy.capacity_msat, hist, self.ldk_model());
                cost_ldk(policy, amt, fee, prob, hist_prob, &p.ldk)
            }
            ClientVariant::Eclair1 => cost_eclair(policy, amt, fee, EclairVariant::Ratios, &p.eclair, &self.ranges),
            ClientVariant::Eclair2 => cost_eclair(policy, amt, fee, EclairVariant::ConstantsPlain, &p.eclair, &self.ranges),
            ClientVariant::Eclair3 => cost_eclair(policy, amt, fee, EclairVariant::ConstantsLog, &p.eclair, &self.ranges),
        };
        let cost = cost.ok_or(Unusable::ZeroProbability)?;
        Ok(EdgeEval { cost, prob, fee_msat: fee })
    }
}
