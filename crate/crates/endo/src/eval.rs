//! Single-node belief/certainty combination.
//!
//! A node's belief is the certainty-and-importance weighted sum of its
//! endorsers' beliefs; its certainty measures how much those endorsers agree
//! with the result. Supports are dynamic: meta endorsements shift an edge's
//! effective strength, and exclusion clusters scale losing edges down before
//! the weighting happens.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::EvalError;
use crate::exclusion;
use crate::model::{Network, NodeId, PropositionNode, Rationale, SupportEdge};

/// Where a node's value in an [`EvaluationState`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueSource {
    /// Computed from active endorsements.
    Endorsements,
    /// No usable endorsement evidence; the node's intuition was echoed.
    Intuition,
    /// Cycle member that never accumulated usable evidence; holds (0, 0).
    Unresolved,
}

/// Per-pass computed values: node rationales plus per-edge effective supports.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationState {
    rationale: BTreeMap<NodeId, Rationale>,
    source: BTreeMap<NodeId, ValueSource>,
    effective: BTreeMap<(NodeId, NodeId), f64>,
    inhibited: BTreeSet<(NodeId, NodeId)>,
    winners: BTreeMap<NodeId, Vec<NodeId>>,
    ordering: Vec<NodeId>,
}

impl EvaluationState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rationale(&self, id: &NodeId) -> Option<Rationale> {
        self.rationale.get(id).copied()
    }

    pub fn rationales(&self) -> impl Iterator<Item = (&NodeId, &Rationale)> {
        self.rationale.iter()
    }

    pub fn source(&self, id: &NodeId) -> Option<ValueSource> {
        self.source.get(id).copied()
    }

    /// Effective support of the edge `src -> dst` as of the pass that
    /// evaluated `dst`.
    pub fn effective_support(&self, src: &NodeId, dst: &NodeId) -> Option<f64> {
        self.effective.get(&(src.clone(), dst.clone())).copied()
    }

    pub fn effective_supports(&self) -> impl Iterator<Item = (&(NodeId, NodeId), f64)> {
        self.effective.iter().map(|(k, v)| (k, *v))
    }

    /// True if the edge lost a winner-take-all competition and was scaled down.
    pub fn is_inhibited(&self, src: &NodeId, dst: &NodeId) -> bool {
        self.inhibited.contains(&(src.clone(), dst.clone()))
    }

    /// Winners of the clusters targeting `target`, in cluster order.
    pub fn winners(&self, target: &NodeId) -> &[NodeId] {
        self.winners.get(target).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Nodes computed into this state by the most recent pass, in evaluation
    /// order. An incremental pass resets this to just the recomputed nodes.
    pub fn ordering(&self) -> &[NodeId] {
        &self.ordering
    }

    /// Belief and certainty available for `id`: its computed rationale if
    /// present, otherwise its intuition.
    pub fn value_of(&self, id: &NodeId, network: &Network) -> Option<(f64, f64)> {
        if let Some(r) = self.rationale.get(id) {
            return Some((r.belief(), r.certainty()));
        }
        network
            .node(id.as_str())
            .and_then(|n| n.intuition())
            .map(|i| (i.belief(), i.certainty()))
    }

    pub(crate) fn set_rationale(&mut self, id: NodeId, rationale: Rationale, source: ValueSource) {
        self.rationale.insert(id.clone(), rationale);
        self.source.insert(id, source);
    }

    pub(crate) fn set_effective(&mut self, src: NodeId, dst: NodeId, value: f64) {
        self.effective.insert((src, dst), value);
    }

    pub(crate) fn mark_inhibited(&mut self, src: NodeId, dst: NodeId) {
        self.inhibited.insert((src, dst));
    }

    pub(crate) fn clear_inhibited_into(&mut self, dst: &NodeId) {
        self.inhibited.retain(|(_, d)| d != dst);
    }

    pub(crate) fn set_winners(&mut self, target: NodeId, winners: Vec<NodeId>) {
        if winners.is_empty() {
            self.winners.remove(&target);
        } else {
            self.winners.insert(target, winners);
        }
    }

    pub(crate) fn clear_ordering(&mut self) {
        self.ordering.clear();
    }

    pub(crate) fn push_order(&mut self, id: NodeId) {
        self.ordering.push(id);
    }
}

/// One endorser of the node under evaluation: its current belief and
/// certainty plus the effective support of its edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EndorserView {
    pub endorser: NodeId,
    pub belief: f64,
    pub certainty: f64,
    pub support: f64,
}

impl EndorserView {
    pub fn new(endorser: NodeId, belief: f64, certainty: f64, support: f64) -> Self {
        EndorserView {
            endorser,
            belief,
            certainty,
            support,
        }
    }

    /// Belief adjusted for the direction of the support: an inhibitory
    /// endorser that drives the target negative agrees with that outcome.
    pub fn directed_belief(&self) -> f64 {
        if self.support > 0.0 {
            self.belief
        } else if self.support < 0.0 {
            -self.belief
        } else {
            0.0
        }
    }
}

/// Directed evidential force `belief * support` an endorser exerts.
pub fn endorsement_strength(belief: f64, support: f64) -> f64 {
    belief * support
}

/// Certainties normalized by their maximum. All zero when the maximum is zero.
pub fn relative_certainty(certainties: &[f64]) -> Vec<f64> {
    let cstar = certainties.iter().copied().fold(0.0_f64, f64::max);
    if cstar == 0.0 {
        return vec![0.0; certainties.len()];
    }
    certainties.iter().map(|c| c / cstar).collect()
}

fn is_active(view: &EndorserView) -> bool {
    view.certainty > 0.0
}

/// Signed share of each endorsement in the total absolute support.
///
/// Computed over the active endorsers only (certainty zero carries no
/// weight); inactive endorsers are absent from the result. If every active
/// support is zero, all shares are zero.
pub fn relative_importance(endorsers: &[EndorserView]) -> BTreeMap<NodeId, f64> {
    let active: Vec<&EndorserView> = endorsers.iter().filter(|v| is_active(v)).collect();
    let denom: f64 = active.iter().map(|v| v.support.abs()).sum();
    active
        .iter()
        .map(|v| {
            let share = if denom == 0.0 { 0.0 } else { v.support / denom };
            (v.endorser.clone(), share)
        })
        .collect()
}

struct Weighted {
    belief: f64,
    denom: f64,
    cstar: f64,
}

/// Weighted belief over the active endorser set, or `None` when there is no
/// usable evidence (no active endorser, or every active support is zero).
///
/// The sum of `rc_k * r_k * b_k` is evaluated as a single quotient
/// `sum(rc_k * s_k * b_k) / sum(|s_k|)` so the result is bounded by 1 in
/// every rounding direction; no clamping is applied or needed.
fn weighted_belief(endorsers: &[EndorserView]) -> Option<Weighted> {
    let cstar = endorsers
        .iter()
        .filter(|v| is_active(v))
        .map(|v| v.certainty)
        .fold(0.0_f64, f64::max);
    if cstar == 0.0 {
        return None;
    }
    let mut num = 0.0_f64;
    let mut denom = 0.0_f64;
    for view in endorsers.iter().filter(|v| is_active(v)) {
        let rc = view.certainty / cstar;
        num += rc * view.support * view.belief;
        denom += view.support.abs();
    }
    if denom == 0.0 {
        return None;
    }
    let belief = num / denom;
    debug_assert!(belief.abs() <= 1.0, "weighted belief escaped [-1, 1]");
    Some(Weighted {
        belief,
        denom,
        cstar,
    })
}

/// Belief of `node` from its endorsers; falls back to the node's intuition
/// when no usable evidence exists and errors if there is none.
pub fn compute_belief(node: &PropositionNode, endorsers: &[EndorserView]) -> Result<f64, EvalError> {
    match weighted_belief(endorsers) {
        Some(w) => Ok(w.belief),
        None => node
            .intuition()
            .map(|i| i.belief())
            .ok_or_else(|| EvalError::Undefined(node.id().to_string())),
    }
}

fn agreement_certainty(belief: f64, denom: f64, cstar: f64, endorsers: &[EndorserView]) -> f64 {
    let mut disagreement = 0.0_f64;
    for view in endorsers.iter().filter(|v| is_active(v)) {
        let rc = view.certainty / cstar;
        let share = (view.support / denom).abs();
        disagreement += (view.directed_belief() - belief).abs() * share * rc;
    }
    (1.0 - disagreement).clamp(0.0, 1.0)
}

/// Certainty of `node` given its freshly computed `belief`: one minus the
/// weighted disagreement of the endorsers with that belief, clamped to
/// [0, 1]. Falls back to the intuition's certainty when no usable evidence
/// exists.
pub fn compute_certainty(
    node: &PropositionNode,
    belief: f64,
    endorsers: &[EndorserView],
) -> Result<f64, EvalError> {
    match weighted_belief(endorsers) {
        Some(w) => Ok(agreement_certainty(belief, w.denom, w.cstar, endorsers)),
        None => node
            .intuition()
            .map(|i| i.certainty())
            .ok_or_else(|| EvalError::Undefined(node.id().to_string())),
    }
}

/// Effective support of `edge` under the meta endorsements attached to it:
/// `clamp(base + sum(b_k * rc_k * t_k), -1, 1)` where `rc` is relative
/// certainty among the edge's meta endorsers. Without meta endorsements the
/// base strength is returned unchanged.
pub fn effective_support(
    edge: &SupportEdge,
    network: &Network,
    state: &EvaluationState,
) -> Result<f64, EvalError> {
    if edge.meta().is_empty() {
        return Ok(edge.base_strength());
    }
    let mut values = Vec::with_capacity(edge.meta().len());
    for meta in edge.meta() {
        let (belief, certainty) = state
            .value_of(meta.endorser(), network)
            .ok_or_else(|| EvalError::MissingValue(meta.endorser().to_string()))?;
        values.push((belief, certainty, meta.strength()));
    }
    let cstar = values.iter().map(|v| v.1).fold(0.0_f64, f64::max);
    let mut adjustment = 0.0_f64;
    if cstar > 0.0 {
        for (belief, certainty, strength) in &values {
            adjustment += belief * (certainty / cstar) * strength;
        }
    }
    Ok((edge.base_strength() + adjustment).clamp(-1.0, 1.0))
}

/// Result of resolving a node against a state, before anything is written.
pub(crate) struct ResolvedNode {
    pub outcome: NodeOutcome,
    /// Effective support per incoming edge, in source-id order.
    pub supports: Vec<(NodeId, f64)>,
    /// Sources of edges scaled down by an exclusion cluster.
    pub inhibited: Vec<NodeId>,
    /// Winner per cluster targeting this node, in cluster order.
    pub winners: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum NodeOutcome {
    Computed(Rationale),
    FromIntuition(Rationale),
    /// No usable evidence and no intuition.
    NoEvidence,
}

/// Resolve effective supports (meta endorsements, then exclusion clusters),
/// build the endorser views and combine them. Pure with respect to `state`.
pub(crate) fn resolve_node(
    target: &NodeId,
    network: &Network,
    state: &EvaluationState,
) -> Result<ResolvedNode, EvalError> {
    let node = network
        .node(target.as_str())
        .ok_or_else(|| EvalError::UnknownNode(target.to_string()))?;

    let mut supports: BTreeMap<NodeId, f64> = BTreeMap::new();
    for edge in network.incoming(target) {
        supports.insert(edge.src().clone(), effective_support(edge, network, state)?);
    }

    let mut inhibited = Vec::new();
    let mut winners = Vec::new();
    for cluster in network.clusters_targeting(target) {
        let winner = exclusion::select_winner_among(cluster, network, state, &supports)?;
        exclusion::scale_losers(cluster, network, state, &winner, &mut supports, &mut inhibited)?;
        winners.push(winner);
    }

    let mut views = Vec::with_capacity(supports.len());
    for (src, support) in &supports {
        let (belief, certainty) = state
            .value_of(src, network)
            .ok_or_else(|| EvalError::MissingValue(src.to_string()))?;
        views.push(EndorserView::new(src.clone(), belief, certainty, *support));
    }

    let outcome = match weighted_belief(&views) {
        Some(w) => {
            let certainty = agreement_certainty(w.belief, w.denom, w.cstar, &views);
            NodeOutcome::Computed(
                Rationale::new(w.belief, certainty).expect("combination is bounded"),
            )
        }
        None => match node.intuition() {
            Some(i) => NodeOutcome::FromIntuition(i.as_rationale()),
            None => NodeOutcome::NoEvidence,
        },
    };

    Ok(ResolvedNode {
        outcome,
        supports: supports.into_iter().collect(),
        inhibited,
        winners,
    })
}

pub(crate) fn commit_supports(target: &NodeId, resolved: &ResolvedNode, state: &mut EvaluationState) {
    state.clear_inhibited_into(target);
    for (src, support) in &resolved.supports {
        state.set_effective(src.clone(), target.clone(), *support);
    }
    for src in &resolved.inhibited {
        state.mark_inhibited(src.clone(), target.clone());
    }
    state.set_winners(target.clone(), resolved.winners.clone());
}

/// Evaluate one node against `state` and record the result (rationale,
/// effective supports, cluster outcomes) in it.
///
/// Endorser and meta-endorser values are taken from the state, falling back
/// to intuitions for nodes not yet computed. Errors with [`EvalError::Undefined`]
/// when the node has no usable evidence and no intuition.
pub fn evaluate_node(
    target: &NodeId,
    network: &Network,
    state: &mut EvaluationState,
) -> Result<Rationale, EvalError> {
    let resolved = resolve_node(target, network, state)?;
    commit_supports(target, &resolved, state);
    match resolved.outcome {
        NodeOutcome::Computed(r) => {
            state.set_rationale(target.clone(), r, ValueSource::Endorsements);
            Ok(r)
        }
        NodeOutcome::FromIntuition(r) => {
            state.set_rationale(target.clone(), r, ValueSource::Intuition);
            Ok(r)
        }
        NodeOutcome::NoEvidence => Err(EvalError::Undefined(target.to_string())),
    }
}
