//! Contradiction detection over a completed evaluation.
//!
//! Two kinds are reported: evidential (compelling endorsement strength both
//! for and against one node) and intuitive (a node's computed belief drifted
//! away from its intuition by more than its threshold). Detection is
//! read-only; nothing is repaired.

use crate::eval::{endorsement_strength, EvaluationState};
use crate::model::{Network, NodeId};

/// Default strength at which evidence counts as compelling.
pub const DEFAULT_TAU: f64 = 0.5;

/// A node with compelling evidence both ways.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalEntry {
    pub node: NodeId,
    /// Endorsers whose directed strength reaches `tau`.
    pub pro: Vec<NodeId>,
    /// Endorsers whose directed strength reaches `-tau`.
    pub con: Vec<NodeId>,
    pub max_pro: f64,
    pub min_con: f64,
}

/// A node whose computed belief left the corridor around its intuition.
#[derive(Debug, Clone, PartialEq)]
pub struct IntuitiveEntry {
    pub node: NodeId,
    pub intuition_belief: f64,
    pub rational_belief: f64,
    pub threshold: f64,
}

/// Both contradiction classes found in one state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContradictionReport {
    pub rational: Vec<RationalEntry>,
    pub intuitive: Vec<IntuitiveEntry>,
}

impl ContradictionReport {
    pub fn is_clean(&self) -> bool {
        self.rational.is_empty() && self.intuitive.is_empty()
    }
}

/// Flag every node that receives endorsement strength `>= tau` from one
/// endorser and `<= -tau` from another, using effective supports and the
/// endorser values of `state`. Endorsers with zero certainty carry no
/// evidence and are skipped.
pub fn find_rational(state: &EvaluationState, network: &Network, tau: f64) -> Vec<RationalEntry> {
    let tau = tau.clamp(f64::MIN_POSITIVE, 1.0);
    let mut entries = Vec::new();
    for (node, _) in state.rationales() {
        let mut pro = Vec::new();
        let mut con = Vec::new();
        let mut max_pro = f64::NEG_INFINITY;
        let mut min_con = f64::INFINITY;
        for edge in network.incoming(node) {
            let Some(support) = state.effective_support(edge.src(), node) else {
                continue;
            };
            let Some((belief, certainty)) = state.value_of(edge.src(), network) else {
                continue;
            };
            if certainty == 0.0 {
                continue;
            }
            let strength = endorsement_strength(belief, support);
            if strength >= tau {
                pro.push(edge.src().clone());
                max_pro = max_pro.max(strength);
            } else if strength <= -tau {
                con.push(edge.src().clone());
                min_con = min_con.min(strength);
            }
        }
        if !pro.is_empty() && !con.is_empty() {
            entries.push(RationalEntry {
                node: node.clone(),
                pro,
                con,
                max_pro,
                min_con,
            });
        }
    }
    entries
}

/// Flag every node holding both an intuition and a computed rationale whose
/// beliefs differ by strictly more than the node's threshold.
pub fn find_intuitive(state: &EvaluationState, network: &Network) -> Vec<IntuitiveEntry> {
    let mut entries = Vec::new();
    for (node, rationale) in state.rationales() {
        let Some(prop) = network.node(node.as_str()) else {
            continue;
        };
        let Some(intuition) = prop.intuition() else {
            continue;
        };
        let divergence = (intuition.belief() - rationale.belief()).abs();
        if divergence > prop.threshold() {
            entries.push(IntuitiveEntry {
                node: node.clone(),
                intuition_belief: intuition.belief(),
                rational_belief: rationale.belief(),
                threshold: prop.threshold(),
            });
        }
    }
    entries
}

/// Run both detectors.
pub fn detect(state: &EvaluationState, network: &Network, tau: f64) -> ContradictionReport {
    ContradictionReport {
        rational: find_rational(state, network, tau),
        intuitive: find_intuitive(state, network),
    }
}
