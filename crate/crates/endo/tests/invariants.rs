//! Cross-module behavioral invariants on hand-built fixtures.

use std::collections::BTreeSet;

use endo::{
    evaluate, evaluate_incremental, Intuition, Network, NodeId, PropositionNode, RelaxationConfig,
    WinnerMetric,
};

fn id(s: &str) -> NodeId {
    s.parse().unwrap()
}

/// Winner (b = 0.9) and runner-up (b = 0.5) competing for `t` at the given
/// inhibition level.
fn cluster_fixture(inhibition: f64) -> Network {
    let mut b = Network::builder();
    b.add_intuition_node("a", 0.9, 1.0).unwrap();
    b.add_intuition_node("b", 0.5, 1.0).unwrap();
    b.add_plain_node("t").unwrap();
    b.add_edge("a", "t", 0.6).unwrap();
    b.add_edge("b", "t", 0.6).unwrap();
    b.add_cluster("t", ["a", "b"], inhibition, WinnerMetric::Belief)
        .unwrap();
    b.build().unwrap()
}

#[test]
fn target_belief_is_continuous_in_inhibition() {
    let mut previous: Option<f64> = None;
    let steps = 1000;
    for i in 0..=steps {
        let lambda = i as f64 / steps as f64;
        let net = cluster_fixture(lambda);
        let report = evaluate(&net, &RelaxationConfig::default()).unwrap();
        let belief = report.state().rationale(&id("t")).unwrap().belief();
        if let Some(prev) = previous {
            assert!(
                (belief - prev).abs() <= 5e-3,
                "jump at lambda = {lambda}: {prev} -> {belief}"
            );
        }
        previous = Some(belief);
    }
}

#[test]
fn zero_inhibition_equals_cluster_free_evaluation() {
    let clustered = cluster_fixture(0.0);
    let mut b = Network::builder();
    b.add_intuition_node("a", 0.9, 1.0).unwrap();
    b.add_intuition_node("b", 0.5, 1.0).unwrap();
    b.add_plain_node("t").unwrap();
    b.add_edge("a", "t", 0.6).unwrap();
    b.add_edge("b", "t", 0.6).unwrap();
    let free = b.build().unwrap();
    let rc = evaluate(&clustered, &RelaxationConfig::default()).unwrap();
    let rf = evaluate(&free, &RelaxationConfig::default()).unwrap();
    let ct = rc.state().rationale(&id("t")).unwrap();
    let ft = rf.state().rationale(&id("t")).unwrap();
    assert!((ct.belief() - ft.belief()).abs() <= 1e-12);
    assert!((ct.certainty() - ft.certainty()).abs() <= 1e-12);
}

/// Two endorsers of `t` with the given certainties.
fn two_endorser_net(c_a: f64, c_b: f64) -> Network {
    let mut b = Network::builder();
    b.add_intuition_node("a", 0.8, c_a).unwrap();
    b.add_intuition_node("b", -0.4, c_b).unwrap();
    b.add_plain_node("t").unwrap();
    b.add_edge("a", "t", 0.5).unwrap();
    b.add_edge("b", "t", 0.5).unwrap();
    b.build().unwrap()
}

#[test]
fn common_certainty_scaling_changes_nothing() {
    let base = evaluate(&two_endorser_net(0.9, 0.45), &RelaxationConfig::default()).unwrap();
    let t0 = base.state().rationale(&id("t")).unwrap();
    for k in [1.0, 0.5, 0.25, 0.9, 0.3, 0.0625] {
        let scaled = evaluate(
            &two_endorser_net(0.9 * k, 0.45 * k),
            &RelaxationConfig::default(),
        )
        .unwrap();
        let t = scaled.state().rationale(&id("t")).unwrap();
        assert!((t.belief() - t0.belief()).abs() <= 1e-12, "k = {k}");
        assert!((t.certainty() - t0.certainty()).abs() <= 1e-12, "k = {k}");
    }
}

#[test]
fn shrinking_one_certainty_moves_belief_toward_the_rest() {
    // with b's certainty gone, t's belief is a's alone: 0.8
    let alone = evaluate(&two_endorser_net(0.9, 0.0), &RelaxationConfig::default()).unwrap();
    let target = alone.state().rationale(&id("t")).unwrap().belief();
    let mut last_distance = f64::INFINITY;
    let mut c_b = 0.45;
    while c_b > 1e-6 {
        let report = evaluate(&two_endorser_net(0.9, c_b), &RelaxationConfig::default()).unwrap();
        let belief = report.state().rationale(&id("t")).unwrap().belief();
        let distance = (belief - target).abs();
        assert!(
            distance <= last_distance + 1e-12,
            "distance grew at c_b = {c_b}"
        );
        last_distance = distance;
        c_b /= 2.0;
    }
}

/// Source feeding a buffer node (own intuition, threshold 0.5) feeding a
/// two-node cycle.
fn gate_fixture(source_belief: f64) -> Network {
    let mut b = Network::builder();
    b.add_intuition_node("s", source_belief, 1.0).unwrap();
    b.add_node(
        PropositionNode::new("m")
            .unwrap()
            .with_intuition(Intuition::new(0.55, 1.0).unwrap())
            .with_threshold(0.5)
            .unwrap(),
    )
    .unwrap();
    b.add_intuition_node("x", 0.2, 0.6).unwrap();
    b.add_plain_node("y").unwrap();
    b.add_edge("s", "m", 1.0).unwrap();
    b.add_edge("m", "x", 0.8).unwrap();
    b.add_edge("x", "y", 1.0).unwrap();
    b.add_edge("y", "x", 0.9).unwrap();
    b.build().unwrap()
}

#[test]
fn small_divergence_gates_the_cycle() {
    let net = gate_fixture(0.5);
    let full = evaluate(&net, &RelaxationConfig::default()).unwrap();
    // nudge the source: m recomputes to 0.7, diverging 0.15 < 0.5 from its
    // intuition, so the cycle keeps its previous values
    let nudged = net
        .with_intuition("s", Some(Intuition::new(0.7, 1.0).unwrap()))
        .unwrap();
    let changed: BTreeSet<NodeId> = [id("s")].into();
    let report =
        evaluate_incremental(&nudged, full.state(), &changed, &RelaxationConfig::default())
            .unwrap();
    assert_eq!(report.gated(), &[vec![id("x"), id("y")]]);
    assert_eq!(report.recomputed(), &[id("s"), id("m")]);
    for n in ["x", "y"] {
        assert_eq!(
            report.state().rationale(&id(n)),
            full.state().rationale(&id(n)),
            "gated node {n} must keep its value"
        );
    }
    assert_eq!(report.state().rationale(&id("m")).unwrap().belief(), 0.7);
}

#[test]
fn large_divergence_reopens_the_cycle() {
    let net = gate_fixture(0.5);
    let full = evaluate(&net, &RelaxationConfig::default()).unwrap();
    let flipped = net
        .with_intuition("s", Some(Intuition::new(-0.9, 1.0).unwrap()))
        .unwrap();
    let changed: BTreeSet<NodeId> = [id("s")].into();
    let report =
        evaluate_incremental(&flipped, full.state(), &changed, &RelaxationConfig::default())
            .unwrap();
    assert!(report.gated().is_empty());
    assert_eq!(
        report.recomputed(),
        &[id("s"), id("m"), id("x"), id("y")]
    );
    // and the re-relaxed values match a full evaluation bit for bit
    let fresh = evaluate(&flipped, &RelaxationConfig::default()).unwrap();
    for n in ["s", "m", "x", "y"] {
        assert_eq!(report.state().rationale(&id(n)), fresh.state().rationale(&id(n)));
    }
}

#[test]
fn gating_disabled_recomputes_cycles_bit_exactly() {
    let net = gate_fixture(0.5);
    let full = evaluate(&net, &RelaxationConfig::default()).unwrap();
    let nudged = net
        .with_intuition("s", Some(Intuition::new(0.7, 1.0).unwrap()))
        .unwrap();
    let changed: BTreeSet<NodeId> = [id("s")].into();
    let config = RelaxationConfig::default().with_gating(false);
    let report = evaluate_incremental(&nudged, full.state(), &changed, &config).unwrap();
    assert!(report.gated().is_empty());
    let fresh = evaluate(&nudged, &config).unwrap();
    for nid in nudged.node_ids() {
        assert_eq!(report.state().rationale(nid), fresh.state().rationale(nid));
    }
}

#[test]
fn change_inside_a_cycle_always_recomputes() {
    let net = gate_fixture(0.5);
    let full = evaluate(&net, &RelaxationConfig::default()).unwrap();
    let changed_net = net
        .with_intuition("x", Some(Intuition::new(-0.8, 1.0).unwrap()))
        .unwrap();
    let changed: BTreeSet<NodeId> = [id("x")].into();
    let report = evaluate_incremental(
        &changed_net,
        full.state(),
        &changed,
        &RelaxationConfig::default(),
    )
    .unwrap();
    assert!(report.gated().is_empty());
    assert!(report.recomputed().contains(&id("x")));
    let fresh = evaluate(&changed_net, &RelaxationConfig::default()).unwrap();
    for n in ["x", "y"] {
        assert_eq!(report.state().rationale(&id(n)), fresh.state().rationale(&id(n)));
    }
}
