//! Temporary: find the smallest diverging acyclic fixture and dump it.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use endo::{
    evaluate, netfmt, Intuition, Network, NodeId, PropositionNode, RelaxationConfig, SupportEdge,
    WinnerMetric,
};

fn nonzero_strength(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.gen_range(-1.0..=1.0);
        if v != 0.0 {
            return v;
        }
    }
}

fn random_network(rng: &mut ChaCha8Rng) -> Network {
    let n = rng.gen_range(1..=12);
    let names: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
    let mut b = Network::builder();
    for name in &names {
        let node = PropositionNode::new(name)
            .unwrap()
            .with_intuition(
                Intuition::new(rng.gen_range(-1.0..=1.0), rng.gen_range(0.0..=1.0)).unwrap(),
            )
            .with_threshold(rng.gen_range(0.0..=2.0))
            .unwrap();
        b.add_node(node).unwrap();
    }
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    if n >= 2 {
        let wanted = rng.gen_range(0..=30_usize.min(n * (n - 1)));
        for _ in 0..wanted * 2 {
            if edges.len() >= wanted {
                break;
            }
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i == j || i >= j || edges.contains(&(i, j)) {
                continue;
            }
            b.add_edge(&names[i], &names[j], nonzero_strength(rng)).unwrap();
            edges.insert((i, j));
        }
    }
    let edge_list: Vec<(usize, usize)> = edges.iter().copied().collect();
    if n >= 3 && !edge_list.is_empty() {
        let mut used: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
        for _ in 0..rng.gen_range(0..=8) {
            let &(src, dst) = &edge_list[rng.gen_range(0..edge_list.len())];
            let endorser = rng.gen_range(0..n);
            if endorser == src || endorser == dst || endorser >= dst || !used.insert((src, dst, endorser))
            {
                continue;
            }
            b.add_meta(&names[endorser], &names[src], &names[dst], nonzero_strength(rng))
                .unwrap();
        }
    }
    for _ in 0..rng.gen_range(0..=2_usize) {
        let dst = rng.gen_range(0..n);
        let sources: Vec<usize> = edge_list
            .iter()
            .filter(|(_, j)| *j == dst)
            .map(|(i, _)| *i)
            .collect();
        if sources.len() < 2 {
            continue;
        }
        let take = rng.gen_range(2..=sources.len());
        let members: Vec<&str> = sources[..take].iter().map(|&i| names[i].as_str()).collect();
        b.add_cluster(&names[dst], members, rng.gen_range(0.0..=1.0), WinnerMetric::Belief)
            .unwrap();
    }
    b.build().unwrap()
}

type Values = BTreeMap<NodeId, (f64, f64)>;

fn meta_adjusted(edge: &SupportEdge, values: &Values) -> f64 {
    if edge.meta().is_empty() {
        return edge.base_strength();
    }
    let cstar = edge
        .meta()
        .iter()
        .map(|m| values[m.endorser()].1)
        .fold(0.0_f64, f64::max);
    let mut adjustment = 0.0;
    if cstar > 0.0 {
        for m in edge.meta() {
            let (belief, certainty) = values[m.endorser()];
            adjustment += belief * (certainty / cstar) * m.strength();
        }
    }
    (edge.base_strength() + adjustment).clamp(-1.0, 1.0)
}

fn combine(views: &[(f64, f64, f64)]) -> Option<(f64, f64)> {
    let active: Vec<&(f64, f64, f64)> = views.iter().filter(|(_, c, _)| *c > 0.0).collect();
    if active.is_empty() {
        return None;
    }
    let cstar = active.iter().map(|(_, c, _)| *c).fold(0.0_f64, f64::max);
    let denom: f64 = active.iter().map(|(_, _, s)| s.abs()).sum();
    if denom == 0.0 {
        return None;
    }
    let mut belief = 0.0;
    for (b, c, s) in &active {
        belief += (c / cstar) * (s / denom) * b;
    }
    let mut disagreement = 0.0;
    for (b, c, s) in &active {
        let directed = if *s > 0.0 { *b } else if *s < 0.0 { -*b } else { 0.0 };
        disagreement += (directed - belief).abs() * (s / denom).abs() * (c / cstar);
    }
    Some((belief, (1.0 - disagreement).clamp(0.0, 1.0)))
}

fn inputs(target: &NodeId, network: &Network, values: &Values) -> Vec<(f64, f64, f64)> {
    let mut supports: BTreeMap<NodeId, f64> = network
        .incoming(target)
        .map(|edge| (edge.src().clone(), meta_adjusted(edge, values)))
        .collect();
    for cluster in network.clusters_targeting(target) {
        let mut winner: Option<(&NodeId, f64, f64)> = None;
        for member in cluster.members() {
            let (b, c) = values[member];
            let better = match winner {
                None => true,
                Some((_, wb, wc)) => b > wb || (b == wb && c > wc),
            };
            if better {
                winner = Some((member, b, c));
            }
        }
        let (winner, wb, _) = winner.expect("cluster has members");
        let factor = 1.0 - cluster.inhibition() * wb.max(0.0);
        if factor < 1.0 {
            for member in cluster.members() {
                if member != winner {
                    if let Some(s) = supports.get_mut(member) {
                        *s *= factor;
                    }
                }
            }
        }
    }
    supports
        .iter()
        .map(|(src, s)| {
            let (b, c) = values[src];
            (b, c, *s)
        })
        .collect()
}

fn global_relax(network: &Network, alpha: f64, sweeps: usize) -> Values {
    let mut values: Values = network
        .node_ids()
        .map(|id| (id.clone(), (0.0, 0.0)))
        .collect();
    for _ in 0..sweeps {
        let mut next = values.clone();
        for node in network.nodes() {
            let views = inputs(node.id(), network, &values);
            let current = values[node.id()];
            let target = match combine(&views) {
                Some(v) => v,
                None => match node.intuition() {
                    Some(i) => (i.belief(), i.certainty()),
                    None => current,
                },
            };
            next.insert(
                node.id().clone(),
                (
                    current.0 + alpha * (target.0 - current.0),
                    current.1 + alpha * (target.1 - current.1),
                ),
            );
        }
        values = next;
    }
    values
}

#[test]
fn find_divergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x8AC);
    for round in 0..500 {
        let net = random_network(&mut rng);
        let report = evaluate(&net, &RelaxationConfig::default()).unwrap();
        let relaxed = global_relax(&net, 1.0, net.node_count() + 3);
        let mut bad = None;
        for nid in net.node_ids() {
            let fast = report.state().rationale(nid).unwrap();
            let slow = relaxed[nid];
            if (fast.belief() - slow.0).abs() > 1e-6 || (fast.certainty() - slow.1).abs() > 1e-6 {
                bad = Some(nid.clone());
            }
        }
        if let Some(nid) = bad {
            println!("=== round {round}, node {nid} ===");
            println!("{}", netfmt::serialize(&net));
            println!("cycles per library: {:?}", report.cycles());
            for (id, r) in report.state().rationales() {
                println!(
                    "lib  {id}: b={} c={}  | oracle: b={} c={}",
                    r.belief(),
                    r.certainty(),
                    relaxed[id].0,
                    relaxed[id].1
                );
            }
            println!("--- lib effective supports ---");
            for ((s, d), v) in report.state().effective_supports() {
                println!("{s} -> {d}: {v}");
            }
            println!("--- oracle inputs for {nid} at fixed point ---");
            for (b, c, s) in inputs(&nid, &net, &relaxed) {
                println!("b={b} c={c} s={s}");
            }
            // run more sweeps to check oracle convergence
            let more = global_relax(&net, 1.0, net.node_count() + 30);
            println!(
                "oracle extra sweeps for {nid}: b={} c={}",
                more[&nid].0, more[&nid].1
            );
            return;
        }
    }
    println!("no divergence found");
}
