//! Per-node endorsement breakdowns: which endorsers carried a value, with
//! what weights, and what happened to their supports along the way.
//!
//! Explanations are derived from the final state, not recorded during
//! relaxation; a converged fixed point is self-consistent under one more
//! sweep, so the breakdown is faithful for cyclic nodes too.

use std::collections::BTreeSet;

use crate::contradiction::{self, IntuitiveEntry, RationalEntry, DEFAULT_TAU};
use crate::error::EvalError;
use crate::eval::{self, EvaluationState, ValueSource};
use crate::model::{Network, NodeId, Rationale};

/// Markers attached to an explanation entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Annotation {
    /// Largest absolute contribution among the active endorsers; the value
    /// is anchored to this one.
    Anchor,
    /// Certainty zero: carries no weight at all.
    Ignored,
    /// Lost a winner-take-all competition and was scaled down.
    InhibitedByCluster,
    /// Meta endorsements moved this edge's effective support off its base.
    MetaModified,
}

impl Annotation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Annotation::Anchor => "ANCHOR",
            Annotation::Ignored => "IGNORED",
            Annotation::InhibitedByCluster => "INHIBITED_BY_CLUSTER",
            Annotation::MetaModified => "META_MODIFIED",
        }
    }
}

/// One endorser's share of a node's value.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationEntry {
    pub endorser: NodeId,
    pub belief: f64,
    pub certainty: f64,
    pub base_strength: f64,
    pub effective_support: f64,
    pub relative_importance: f64,
    pub relative_certainty: f64,
    /// The summand this endorser contributed to the node's belief.
    pub contribution: f64,
    pub annotations: BTreeSet<Annotation>,
}

impl ExplanationEntry {
    pub fn is(&self, annotation: Annotation) -> bool {
        self.annotations.contains(&annotation)
    }
}

/// Why a node holds its value: the weighted endorsements for and against,
/// plus any contradiction flags standing on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub node: NodeId,
    pub rationale: Rationale,
    pub source: ValueSource,
    /// Entries sorted by descending absolute contribution.
    pub entries: Vec<ExplanationEntry>,
    pub rational_conflict: Option<RationalEntry>,
    pub intuitive_conflict: Option<IntuitiveEntry>,
}

/// Break down `node`'s value in `state`: one entry per incoming edge with
/// the weights actually used, annotated with what affected each support.
pub fn explain(
    node: &NodeId,
    state: &EvaluationState,
    network: &Network,
) -> Result<Explanation, EvalError> {
    network
        .node(node.as_str())
        .ok_or_else(|| EvalError::UnknownNode(node.to_string()))?;
    let rationale = state
        .rationale(node)
        .ok_or_else(|| EvalError::MissingValue(node.to_string()))?;
    let source = state.source(node).unwrap_or(ValueSource::Endorsements);

    let mut raw = Vec::new();
    for edge in network.incoming(node) {
        let support = state
            .effective_support(edge.src(), node)
            .ok_or_else(|| EvalError::MissingValue(edge.src().to_string()))?;
        let (belief, certainty) = state
            .value_of(edge.src(), network)
            .ok_or_else(|| EvalError::MissingValue(edge.src().to_string()))?;
        // what the metas alone did to this edge, before any cluster scaling
        let meta_adjusted = eval::effective_support(edge, network, state)?;
        raw.push((edge, belief, certainty, support, meta_adjusted));
    }

    let cstar = raw
        .iter()
        .filter(|(_, _, c, _, _)| *c > 0.0)
        .map(|(_, _, c, _, _)| *c)
        .fold(0.0_f64, f64::max);
    let denom: f64 = raw
        .iter()
        .filter(|(_, _, c, _, _)| *c > 0.0)
        .map(|(_, _, _, s, _)| s.abs())
        .sum();

    let mut entries = Vec::with_capacity(raw.len());
    for (edge, belief, certainty, support, meta_adjusted) in raw {
        let rc = if cstar > 0.0 { certainty / cstar } else { 0.0 };
        let importance = if certainty > 0.0 && denom > 0.0 {
            support / denom
        } else {
            0.0
        };
        let contribution = rc * importance * belief;
        let mut annotations = BTreeSet::new();
        if certainty == 0.0 {
            annotations.insert(Annotation::Ignored);
        }
        if state.is_inhibited(edge.src(), node) {
            annotations.insert(Annotation::InhibitedByCluster);
        }
        if !edge.meta().is_empty() && meta_adjusted != edge.base_strength() {
            annotations.insert(Annotation::MetaModified);
        }
        entries.push(ExplanationEntry {
            endorser: edge.src().clone(),
            belief,
            certainty,
            base_strength: edge.base_strength(),
            effective_support: support,
            relative_importance: importance,
            relative_certainty: rc,
            contribution,
            annotations,
        });
    }

    // anchor only when the value actually came from endorsements
    if source == ValueSource::Endorsements {
        let anchor = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.certainty > 0.0)
            .max_by(|(_, a), (_, b)| {
                a.contribution
                    .abs()
                    .partial_cmp(&b.contribution.abs())
                    .expect("contributions are finite")
                    .then_with(|| b.endorser.cmp(&a.endorser))
            })
            .map(|(i, _)| i);
        if let Some(i) = anchor {
            entries[i].annotations.insert(Annotation::Anchor);
        }
    }

    entries.sort_by(|a, b| {
        b.contribution
            .abs()
            .partial_cmp(&a.contribution.abs())
            .expect("contributions are finite")
            .then_with(|| a.endorser.cmp(&b.endorser))
    });

    let rational_conflict = contradiction::find_rational(state, network, DEFAULT_TAU)
        .into_iter()
        .find(|e| &e.node == node);
    let intuitive_conflict = contradiction::find_intuitive(state, network)
        .into_iter()
        .find(|e| &e.node == node);

    Ok(Explanation {
        node: node.clone(),
        rationale,
        source,
        entries,
        rational_conflict,
        intuitive_conflict,
    })
}
