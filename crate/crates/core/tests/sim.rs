use lnpath_core::engine::RouteResult;
use lnpath_core::graph::{generate_synthetic, BalanceView, GraphBuilder, PolicyRecord, ShortChannelId, SynthParams};
use lnpath_core::metrics::default_bins;
use lnpath_core::rng::substream;
use lnpath_core::sim::{
    apply_payment, execute_payment, read_records, replay_transaction, run_experiment, run_scale_ablation,
    sample_transaction, AmountPolicy, BalanceModel, BalanceScope, ClassPair, ExperimentConfig, GraphSource, Outcome,
};
use lnpath_core::prob::ScaleSpec;
use lnpath_core::weights::ClientVariant;
use lnpath_core::{ChannelGraph, ChannelId, ConnectivityClass, PolicyIdx};
use proptest::prelude::*;
use rand::Rng;

fn two_nodes(cap: u64) -> ChannelGraph {
    let mut b = GraphBuilder::new();
    for (s, t) in [("a", "b"), ("b", "a")] {
        b.policy(PolicyRecord {
            channel_id: ChannelId("ab".into()),
            short_channel_id: ShortChannelId::new(600_000, 1, 0),
            source: s.into(),
            target: t.into(),
            capacity_msat: cap,
            base_fee_msat: 0,
            fee_rate_ppm: 0,
            cltv_delta: 40,
            htlc_min_msat: 1,
            htlc_max_msat: cap,
        });
    }
    b.build().unwrap()
}

fn synthetic() -> ChannelGraph {
    generate_synthetic(120, &SynthParams::default(), 11).unwrap()
}

fn config(n: u64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        graph: GraphSource::Synthetic { nodes: 120, seed: 11, params: SynthParams::default() },
        n_transactions: n,
        seed: Some(seed),
        ..ExperimentConfig::default()
    }
}

#[test]
fn trivial_graph_single_record_is_deterministic() {
    let g = two_nodes(1_000_000);
    let cfg = ExperimentConfig { n_transactions: 1, clients: vec![ClientVariant::Cln], ..config(1, 3) };
    let a = run_experiment(&g, &cfg, 1).unwrap();
    let b = run_experiment(&g, &cfg, 4).unwrap();
    assert_eq!(a.len(), 1);
    assert_eq!(a, b);
    let r = &a[0];
    assert_eq!(r.results.len(), 1);
    // A direct channel carries any amount up to the sender's balance.
    assert_eq!(r.results[0].outcome, Outcome::Success);
    assert_eq!(r.results[0].fee_msat, Some(0));
    assert_eq!(r.results[0].path_len, Some(1));
}

#[test]
fn amounts_are_uniform_on_a_fixed_pair() {
    // One channel of 10000 msat split 5000/5000, so every draw has
    // bound 5000 whichever way it goes.
    let g = two_nodes(10_000);
    let v = BalanceView::from_draws(&g, |_, _| 5000);
    let classes = g.classify_all();
    let mut rng = substream(9, &["chi2".into()]);
    const BUCKETS: usize = 20;
    const DRAWS: usize = 100_000;
    let mut counts = [0u64; BUCKETS];
    for _ in 0..DRAWS {
        let (_, _, amt) = sample_transaction(&g, &v, &mut rng, None, &classes, AmountPolicy::default(), 1000).unwrap();
        assert!((1..=5000).contains(&amt));
        counts[((amt - 1) / 250) as usize] += 1;
    }
    let expected = DRAWS as f64 / BUCKETS as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // Upper 1% point of chi-square with 19 degrees of freedom.
    assert!(chi2 < 36.191, "chi2 = {chi2}");
}

#[test]
fn class_filter_is_honoured() {
    let g = synthetic();
    let classes = g.classify_all();
    let v = BalanceModel::Uniform.sample(&g, 5);
    let f = ClassPair { sender: ConnectivityClass::Poor, receiver: ConnectivityClass::Well };
    let mut rng = substream(2, &[]);
    for _ in 0..500 {
        let (s, r, _) = sample_transaction(&g, &v, &mut rng, Some(f), &classes, AmountPolicy::default(), 1000).unwrap();
        assert_eq!(classes[s.index()], ConnectivityClass::Poor);
        assert_eq!(classes[r.index()], ConnectivityClass::Well);
    }
    let cfg = ExperimentConfig { endpoint_filter: Some(f), ..config(30, 8) };
    for rec in run_experiment(&g, &cfg, 1).unwrap() {
        assert_eq!((rec.sender_class, rec.receiver_class), (ConnectivityClass::Poor, ConnectivityClass::Well));
    }
}

#[test]
fn records_are_total_and_replayable() {
    let g = synthetic();
    let cfg = config(60, 21);
    let recs = run_experiment(&g, &cfg, 2).unwrap();
    assert_eq!(recs.len(), 60);
    for (i, rec) in recs.iter().enumerate() {
        assert_eq!(rec.tx, i as u64);
        let clients: Vec<ClientVariant> = rec.results.iter().map(|r| r.client).collect();
        assert_eq!(clients, cfg.clients);
        for r in &rec.results {
            let present = [r.fee_msat.is_some(), r.path_len.is_some(), r.timelock.is_some(), r.cost.is_some()];
            assert!(present.iter().all(|&p| p == r.succeeded()), "{r:?}");
        }
    }
    for tx in [0, 17, 59] {
        assert_eq!(replay_transaction(&g, &cfg, tx).unwrap(), recs[tx as usize]);
    }
}

#[test]
fn json_lines_round_trip_is_byte_identical() {
    let g = synthetic();
    let recs = run_experiment(&g, &config(40, 5), 1).unwrap();
    let text: String = recs.iter().map(|r| r.to_json_line() + "\n").collect();
    let back = read_records(text.as_bytes()).unwrap();
    assert_eq!(back, recs);
    let again: String = back.iter().map(|r| r.to_json_line() + "\n").collect();
    assert_eq!(again, text);
}

#[test]
fn thread_count_does_not_change_output() {
    let g = synthetic();
    let cfg = ExperimentConfig { n_transactions: 300, ..config(300, 77) };
    assert_eq!(run_experiment(&g, &cfg, 1).unwrap(), run_experiment(&g, &cfg, 8).unwrap());
}

#[test]
fn sequential_modes_are_deterministic() {
    let g = synthetic();
    let cfg = ExperimentConfig {
        balance_scope: BalanceScope::PerRun,
        mutation: true,
        scorer_feedback: true,
        ..config(80, 4)
    };
    let a = run_experiment(&g, &cfg, 1).unwrap();
    assert_eq!(a, run_experiment(&g, &cfg, 8).unwrap());
    assert!(replay_transaction(&g, &cfg, 0).is_err());
}

#[test]
fn fixed_amount_policy() {
    let g = synthetic();
    let cfg = ExperimentConfig { amount: AmountPolicy::Fixed { msat: 12_345 }, ..config(20, 3) };
    assert!(run_experiment(&g, &cfg, 1).unwrap().iter().all(|r| r.amt_msat == 12_345));
}

#[test]
fn ablation_shape() {
    let g = synthetic();
    let cfg = ExperimentConfig { balances: BalanceModel::Bimodal { s_fraction: 0.1 }, ..config(40, 6) };
    let scales = [ScaleSpec::CapFraction(0.1), ScaleSpec::AbsoluteMsat(300_000_000)];
    let t = run_scale_ablation(&g, &cfg, &scales, &default_bins(), 1).unwrap();
    assert_eq!(t.rows.len(), 2);
    assert!(t.rows.iter().all(|r| r.cells.len() == default_bins().len()));
    let one = run_scale_ablation(&g, &cfg, &scales[..1], &default_bins()[3..4], 1).unwrap();
    assert_eq!((one.rows.len(), one.columns.len()), (1, 1));
    assert!(run_scale_ablation(&g, &config(5, 1), &scales, &default_bins(), 1).is_err());
}

fn random_walk(g: &ChannelGraph, seed: u64, len: usize) -> Vec<PolicyIdx> {
    let mut rng = substream(seed, &["walk".into()]);
    let nodes: Vec<_> = g.nodes().collect();
    let mut at = nodes[rng.gen_range(0..nodes.len())];
    let mut hops = Vec::new();
    for _ in 0..len {
        let out: Vec<PolicyIdx> = g.outgoing(at).collect();
        if out.is_empty() {
            break;
        }
        let p = out[rng.gen_range(0..out.len())];
        if hops.iter().any(|&h| g.channel_of(h) == g.channel_of(p)) {
            break;
        }
        hops.push(p);
        at = g.policy(p).target;
    }
    hops
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutation_conserves_channel_totals(seed in 0u64..10_000, amt in 1u64..2_000_000_000) {
        let g = generate_synthetic(60, &SynthParams::default(), 1).unwrap();
        let mut v = BalanceModel::Uniform.sample(&g, seed);
        let before: Vec<u64> = g.channels().iter().map(|c| c.directions.iter().map(|&p| v.get(p)).sum()).collect();
        for k in 0..5 {
            let hops = random_walk(&g, seed * 8 + k, 4);
            if hops.is_empty() {
                continue;
            }
            let n = hops.len();
            let route = RouteResult {
                per_hop_amt: vec![amt; n],
                hops,
                total_fee_msat: 0,
                total_timelock: 0,
                path_prob: 1.0,
                engine_cost: 0.0,
                accumulators: Default::default(),
                exclusions: Default::default(),
            };
            if execute_payment(&g, &v, &route).unwrap() == Outcome::Success {
                apply_payment(&g, &mut v, &route);
            }
        }
        let after: Vec<u64> = g.channels().iter().map(|c| c.directions.iter().map(|&p| v.get(p)).sum()).collect();
        prop_assert_eq!(before, after);
    }
}
