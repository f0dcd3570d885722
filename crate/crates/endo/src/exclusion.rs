//! Winner-take-all competition among mutually exclusive endorsers.
//!
//! A cluster declares the endorsers of one target mutually exclusive. The
//! member with the highest standing wins and the losers' effective supports
//! are scaled by `1 - inhibition * max(winner_belief, 0)`. With inhibition 0
//! the members behave as independent evidence; with inhibition 1 and a fully
//! believed winner the losers are silenced outright.

use std::collections::BTreeMap;

use crate::error::EvalError;
use crate::eval::EvaluationState;
use crate::model::{ExclusionCluster, Network, NodeId, WinnerMetric};

fn member_value(
    member: &NodeId,
    network: &Network,
    state: &EvaluationState,
) -> Result<(f64, f64), EvalError> {
    state
        .value_of(member, network)
        .ok_or_else(|| EvalError::MissingValue(member.to_string()))
}

/// Pick the cluster's winner given the members' current values and the
/// effective supports of their edges.
///
/// Under [`WinnerMetric::Belief`] the highest belief wins; under
/// [`WinnerMetric::Combined`] the highest `belief * relative_certainty *
/// |support|` wins. Ties break toward higher certainty, then the smallest id,
/// so the choice never depends on enumeration order.
pub(crate) fn select_winner_among(
    cluster: &ExclusionCluster,
    network: &Network,
    state: &EvaluationState,
    supports: &BTreeMap<NodeId, f64>,
) -> Result<NodeId, EvalError> {
    let mut members = Vec::new();
    for member in cluster.members() {
        let (belief, certainty) = member_value(member, network, state)?;
        let support = supports.get(member).copied().unwrap_or_else(|| {
            network
                .edge(member.as_str(), cluster.target().as_str())
                .map(|e| e.base_strength())
                .unwrap_or(0.0)
        });
        members.push((member.clone(), belief, certainty, support));
    }
    let cstar = members.iter().map(|m| m.2).fold(0.0_f64, f64::max);
    let key = |belief: f64, certainty: f64, support: f64| -> f64 {
        match cluster.metric() {
            WinnerMetric::Belief => belief,
            WinnerMetric::Combined => {
                let rc = if cstar == 0.0 { 0.0 } else { certainty / cstar };
                belief * rc * support.abs()
            }
        }
    };
    // members iterate in id order, so strict improvement leaves the
    // smallest id standing on a full tie
    let mut best: Option<(NodeId, f64, f64)> = None;
    for (id, belief, certainty, support) in members {
        let k = key(belief, certainty, support);
        let better = match &best {
            None => true,
            Some((_, bk, bc)) => k > *bk || (k == *bk && certainty > *bc),
        };
        if better {
            best = Some((id, k, certainty));
        }
    }
    Ok(best.expect("cluster has at least two members").0)
}

/// Scale every losing member's support by `1 - inhibition * max(b*, 0)`.
/// A disbelieved winner supplies no grounds to exclude the alternatives,
/// so nothing changes when its belief is non-positive.
pub(crate) fn scale_losers(
    cluster: &ExclusionCluster,
    network: &Network,
    state: &EvaluationState,
    winner: &NodeId,
    supports: &mut BTreeMap<NodeId, f64>,
    inhibited: &mut Vec<NodeId>,
) -> Result<(), EvalError> {
    let (winner_belief, _) = member_value(winner, network, state)?;
    let factor = 1.0 - cluster.inhibition() * winner_belief.max(0.0);
    if factor >= 1.0 {
        return Ok(());
    }
    for member in cluster.members() {
        if member == winner {
            continue;
        }
        if let Some(s) = supports.get_mut(member) {
            *s *= factor;
            inhibited.push(member.clone());
        }
    }
    Ok(())
}

/// Winner of `cluster` given the values in `state`. Supports come from the
/// state when the target has been resolved, otherwise from base strengths.
pub fn select_winner(
    cluster: &ExclusionCluster,
    network: &Network,
    state: &EvaluationState,
) -> Result<NodeId, EvalError> {
    let supports = current_supports(cluster, network, state);
    select_winner_among(cluster, network, state, &supports)
}

/// Run the competition and write the scaled supports (and inhibition marks)
/// back into `state`. Returns the winner.
pub fn apply_exclusion(
    cluster: &ExclusionCluster,
    network: &Network,
    state: &mut EvaluationState,
) -> Result<NodeId, EvalError> {
    let mut supports = current_supports(cluster, network, state);
    let winner = select_winner_among(cluster, network, state, &supports)?;
    let mut inhibited = Vec::new();
    scale_losers(cluster, network, state, &winner, &mut supports, &mut inhibited)?;
    for (member, support) in supports {
        state.set_effective(member, cluster.target().clone(), support);
    }
    for member in inhibited {
        state.mark_inhibited(member, cluster.target().clone());
    }
    Ok(winner)
}

fn current_supports(
    cluster: &ExclusionCluster,
    network: &Network,
    state: &EvaluationState,
) -> BTreeMap<NodeId, f64> {
    let mut supports = BTreeMap::new();
    for member in cluster.members() {
        let current = state
            .effective_support(member, cluster.target())
            .or_else(|| {
                network
                    .edge(member.as_str(), cluster.target().as_str())
                    .map(|e| e.base_strength())
            });
        if let Some(s) = current {
            supports.insert(member.clone(), s);
        }
    }
    supports
}
