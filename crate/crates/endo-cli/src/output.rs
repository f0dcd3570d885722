//! Rendering of evaluation results: a fixed-precision text form for humans
//! and an exact, versioned JSON form for tooling.

use serde::Serialize;

use endo::contradiction::{ContradictionReport, IntuitiveEntry, RationalEntry};
use endo::explanation::{Annotation, Explanation};
use endo::netfmt::Diagnostic;
use endo::{EvaluationReport, EvaluationState, Network, NodeId, Rationale, ValueSource};

/// Schema version of every machine-format document.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Machine,
}

pub fn source_str(source: ValueSource) -> &'static str {
    match source {
        ValueSource::Endorsements => "endorsements",
        ValueSource::Intuition => "intuition",
        ValueSource::Unresolved => "unresolved",
    }
}

fn node_names(ids: &[NodeId]) -> Vec<String> {
    ids.iter().map(|n| n.to_string()).collect()
}

// ---------------------------------------------------------------------------
// machine documents
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct NodeValueDoc {
    id: String,
    belief: f64,
    certainty: f64,
    source: &'static str,
}

#[derive(Serialize)]
struct SupportDoc {
    src: String,
    dst: String,
    base: f64,
    effective: f64,
    inhibited: bool,
}

#[derive(Serialize)]
struct EvalDoc {
    format_version: u32,
    command: &'static str,
    converged: bool,
    iterations: u32,
    nodes: Vec<NodeValueDoc>,
    supports: Vec<SupportDoc>,
    cycles: Vec<Vec<String>>,
    gated: Vec<Vec<String>>,
}

#[derive(Serialize)]
struct RationalDoc {
    node: String,
    pro: Vec<String>,
    con: Vec<String>,
    max_pro: f64,
    min_con: f64,
}

#[derive(Serialize)]
struct IntuitiveDoc {
    node: String,
    intuition_belief: f64,
    rational_belief: f64,
    threshold: f64,
}

#[derive(Serialize)]
struct CheckDoc {
    format_version: u32,
    command: &'static str,
    tau: f64,
    clean: bool,
    converged: bool,
    rational: Vec<RationalDoc>,
    intuitive: Vec<IntuitiveDoc>,
}

#[derive(Serialize)]
struct EntryDoc {
    endorser: String,
    belief: f64,
    certainty: f64,
    base_strength: f64,
    effective_support: f64,
    relative_importance: f64,
    relative_certainty: f64,
    contribution: f64,
    annotations: Vec<&'static str>,
}

#[derive(Serialize)]
struct ExplainDoc {
    format_version: u32,
    command: &'static str,
    node: String,
    belief: f64,
    certainty: f64,
    source: &'static str,
    entries: Vec<EntryDoc>,
    rational_conflict: Option<RationalDoc>,
    intuitive_conflict: Option<IntuitiveDoc>,
}

#[derive(Serialize)]
struct AssignmentDoc {
    node: String,
    belief: f64,
    certainty: f64,
}

#[derive(Serialize)]
struct ChangeDoc {
    node: String,
    before: ValuePairDoc,
    after: ValuePairDoc,
}

#[derive(Serialize)]
struct ValuePairDoc {
    belief: f64,
    certainty: f64,
}

#[derive(Serialize)]
struct WhatifDoc {
    format_version: u32,
    command: &'static str,
    converged: bool,
    assignments: Vec<AssignmentDoc>,
    changes: Vec<ChangeDoc>,
    recomputed: Vec<String>,
    gated: Vec<Vec<String>>,
    new_rational: Vec<RationalDoc>,
    new_intuitive: Vec<IntuitiveDoc>,
}

#[derive(Serialize)]
struct DiagnosticDoc {
    line: usize,
    column: usize,
    message: String,
}

#[derive(Serialize)]
struct ErrorDoc {
    format_version: u32,
    command: &'static str,
    error: String,
    diagnostics: Vec<DiagnosticDoc>,
}

fn rational_doc(entry: &RationalEntry) -> RationalDoc {
    RationalDoc {
        node: entry.node.to_string(),
        pro: node_names(&entry.pro),
        con: node_names(&entry.con),
        max_pro: entry.max_pro,
        min_con: entry.min_con,
    }
}

fn intuitive_doc(entry: &IntuitiveEntry) -> IntuitiveDoc {
    IntuitiveDoc {
        node: entry.node.to_string(),
        intuition_belief: entry.intuition_belief,
        rational_belief: entry.rational_belief,
        threshold: entry.threshold,
    }
}

fn to_json<T: Serialize>(doc: &T) -> String {
    serde_json::to_string_pretty(doc).expect("documents serialize")
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn support_docs(network: &Network, state: &EvaluationState) -> Vec<SupportDoc> {
    network
        .edges()
        .filter_map(|edge| {
            let effective = state.effective_support(edge.src(), edge.dst())?;
            Some(SupportDoc {
                src: edge.src().to_string(),
                dst: edge.dst().to_string(),
                base: edge.base_strength(),
                effective,
                inhibited: state.is_inhibited(edge.src(), edge.dst()),
            })
        })
        .collect()
}

pub fn render_eval(network: &Network, report: &EvaluationReport, format: Format) -> String {
    match format {
        Format::Machine => {
            let state = report.state();
            let doc = EvalDoc {
                format_version: FORMAT_VERSION,
                command: "eval",
                converged: report.converged(),
                iterations: report.iterations(),
                nodes: state
                    .rationales()
                    .map(|(id, r)| NodeValueDoc {
                        id: id.to_string(),
                        belief: r.belief(),
                        certainty: r.certainty(),
                        source: source_str(state.source(id).unwrap_or(ValueSource::Endorsements)),
                    })
                    .collect(),
                supports: support_docs(network, state),
                cycles: report.cycles().iter().map(|c| node_names(c)).collect(),
                gated: report.gated().iter().map(|c| node_names(c)).collect(),
            };
            to_json(&doc)
        }
        Format::Text => {
            let state = report.state();
            let width = state
                .rationales()
                .map(|(id, _)| id.as_str().len())
                .max()
                .unwrap_or(4)
                .max(4);
            let mut out = String::new();
            out.push_str(&format!(
                "{:width$}  {:>8}  {:>9}  source\n",
                "node", "belief", "certainty"
            ));
            for (id, r) in state.rationales() {
                out.push_str(&format!(
                    "{:width$}  {:>8.4}  {:>9.4}  {}\n",
                    id.as_str(),
                    r.belief(),
                    r.certainty(),
                    source_str(state.source(id).unwrap_or(ValueSource::Endorsements)),
                ));
            }
            let supports = support_docs(network, state);
            if !supports.is_empty() {
                out.push_str("supports:\n");
                for s in supports {
                    out.push_str(&format!(
                        "  {} -> {}  base {:.4}  effective {:.4}{}\n",
                        s.src,
                        s.dst,
                        s.base,
                        s.effective,
                        if s.inhibited { "  (inhibited)" } else { "" }
                    ));
                }
            }
            for cycle in report.cycles() {
                out.push_str(&format!("cycle: {}\n", node_names(cycle).join(", ")));
            }
            for gated in report.gated() {
                out.push_str(&format!(
                    "gated (retained previous value, gate not exceeded): {}\n",
                    node_names(gated).join(", ")
                ));
            }
            out.push_str(&format!(
                "converged: {} ({} iterations)\n",
                if report.converged() { "yes" } else { "no" },
                report.iterations()
            ));
            out
        }
    }
}

// ---------------------------------------------------------------------------
// explain
// ---------------------------------------------------------------------------

pub fn render_explain(explanation: &Explanation, format: Format) -> String {
    match format {
        Format::Machine => {
            let doc = ExplainDoc {
                format_version: FORMAT_VERSION,
                command: "explain",
                node: explanation.node.to_string(),
                belief: explanation.rationale.belief(),
                certainty: explanation.rationale.certainty(),
                source: source_str(explanation.source),
                entries: explanation
                    .entries
                    .iter()
                    .map(|e| EntryDoc {
                        endorser: e.endorser.to_string(),
                        belief: e.belief,
                        certainty: e.certainty,
                        base_strength: e.base_strength,
                        effective_support: e.effective_support,
                        relative_importance: e.relative_importance,
                        relative_certainty: e.relative_certainty,
                        contribution: e.contribution,
                        annotations: e.annotations.iter().map(Annotation::as_str).collect(),
                    })
                    .collect(),
                rational_conflict: explanation.rational_conflict.as_ref().map(rational_doc),
                intuitive_conflict: explanation.intuitive_conflict.as_ref().map(intuitive_doc),
            };
            to_json(&doc)
        }
        Format::Text => {
            let mut out = format!(
                "{}: belief {:.4}, certainty {:.4} (from {})\n",
                explanation.node,
                explanation.rationale.belief(),
                explanation.rationale.certainty(),
                source_str(explanation.source)
            );
            if explanation.entries.is_empty() {
                out.push_str("no endorsements; value from intuition\n");
            }
            for e in &explanation.entries {
                let annotations = if e.annotations.is_empty() {
                    String::new()
                } else {
                    format!(
                        "  [{}]",
                        e.annotations
                            .iter()
                            .map(Annotation::as_str)
                            .collect::<Vec<_>>()
                            .join(", ")
                    )
                };
                out.push_str(&format!(
                    "  {}  contribution {:+.4}{}\n    belief {:.4}, certainty {:.4}, support {:.4} (base {:.4}), importance {:+.4}, rel. certainty {:.4}\n",
                    e.endorser,
                    e.contribution,
                    annotations,
                    e.belief,
                    e.certainty,
                    e.effective_support,
                    e.base_strength,
                    e.relative_importance,
                    e.relative_certainty,
                ));
            }
            if let Some(r) = &explanation.rational_conflict {
                out.push_str(&format!(
                    "rational contradiction: pro [{}] max {:+.4}, con [{}] min {:+.4}\n",
                    node_names(&r.pro).join(", "),
                    r.max_pro,
                    node_names(&r.con).join(", "),
                    r.min_con
                ));
            }
            if let Some(i) = &explanation.intuitive_conflict {
                out.push_str(&format!(
                    "intuitive contradiction: intuition {:.4} vs computed {:.4} (threshold {:.4})\n",
                    i.intuition_belief, i.rational_belief, i.threshold
                ));
            }
            out
        }
    }
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

pub fn render_check(
    report: &ContradictionReport,
    tau: f64,
    converged: bool,
    format: Format,
) -> String {
    match format {
        Format::Machine => {
            let doc = CheckDoc {
                format_version: FORMAT_VERSION,
                command: "check",
                tau,
                clean: report.is_clean(),
                converged,
                rational: report.rational.iter().map(rational_doc).collect(),
                intuitive: report.intuitive.iter().map(intuitive_doc).collect(),
            };
            to_json(&doc)
        }
        Format::Text => {
            let mut out = String::new();
            if !report.rational.is_empty() {
                out.push_str("rational contradictions:\n");
                for r in &report.rational {
                    out.push_str(&format!(
                        "  {}: pro [{}] max {:+.4}, con [{}] min {:+.4}\n",
                        r.node,
                        node_names(&r.pro).join(", "),
                        r.max_pro,
                        node_names(&r.con).join(", "),
                        r.min_con
                    ));
                }
            }
            if !report.intuitive.is_empty() {
                out.push_str("intuitive contradictions:\n");
                for i in &report.intuitive {
                    out.push_str(&format!(
                        "  {}: intuition {:.4} vs computed {:.4} (threshold {:.4})\n",
                        i.node, i.intuition_belief, i.rational_belief, i.threshold
                    ));
                }
            }
            if report.is_clean() {
                out.push_str(&format!("clean (tau {tau})\n"));
            } else {
                out.push_str(&format!(
                    "contradictions found (tau {tau}): {} rational, {} intuitive\n",
                    report.rational.len(),
                    report.intuitive.len()
                ));
            }
            out
        }
    }
}

// ---------------------------------------------------------------------------
// whatif
// ---------------------------------------------------------------------------

pub struct WhatifOutcome<'a> {
    pub assignments: &'a [(NodeId, f64, f64)],
    pub changes: Vec<(NodeId, Rationale, Rationale)>,
    pub report: &'a EvaluationReport,
    pub new_rational: Vec<RationalEntry>,
    pub new_intuitive: Vec<IntuitiveEntry>,
}

pub fn render_whatif(outcome: &WhatifOutcome, format: Format) -> String {
    match format {
        Format::Machine => {
            let doc = WhatifDoc {
                format_version: FORMAT_VERSION,
                command: "whatif",
                converged: outcome.report.converged(),
                assignments: outcome
                    .assignments
                    .iter()
                    .map(|(id, b, c)| AssignmentDoc {
                        node: id.to_string(),
                        belief: *b,
                        certainty: *c,
                    })
                    .collect(),
                changes: outcome
                    .changes
                    .iter()
                    .map(|(id, before, after)| ChangeDoc {
                        node: id.to_string(),
                        before: ValuePairDoc {
                            belief: before.belief(),
                            certainty: before.certainty(),
                        },
                        after: ValuePairDoc {
                            belief: after.belief(),
                            certainty: after.certainty(),
                        },
                    })
                    .collect(),
                recomputed: node_names(outcome.report.recomputed()),
                gated: outcome.report.gated().iter().map(|c| node_names(c)).collect(),
                new_rational: outcome.new_rational.iter().map(rational_doc).collect(),
                new_intuitive: outcome.new_intuitive.iter().map(intuitive_doc).collect(),
            };
            to_json(&doc)
        }
        Format::Text => {
            let mut out = String::new();
            if outcome.changes.is_empty() {
                out.push_str("no changes\n");
            } else {
                for (id, before, after) in &outcome.changes {
                    out.push_str(&format!(
                        "{}: {:.4}, {:.4} -> {:.4}, {:.4}\n",
                        id,
                        before.belief(),
                        before.certainty(),
                        after.belief(),
                        after.certainty()
                    ));
                }
            }
            for gated in outcome.report.gated() {
                out.push_str(&format!(
                    "gated (retained previous value, gate not exceeded): {}\n",
                    node_names(gated).join(", ")
                ));
            }
            for r in &outcome.new_rational {
                out.push_str(&format!("new rational contradiction: {}\n", r.node));
            }
            for i in &outcome.new_intuitive {
                out.push_str(&format!("new intuitive contradiction: {}\n", i.node));
            }
            if !outcome.report.converged() {
                out.push_str("warning: relaxation did not converge\n");
            }
            out
        }
    }
}

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

pub fn render_diagnostics(
    command: &'static str,
    diagnostics: &[Diagnostic],
    format: Format,
) -> Option<String> {
    match format {
        Format::Machine => {
            let doc = ErrorDoc {
                format_version: FORMAT_VERSION,
                command,
                error: "parse".to_string(),
                diagnostics: diagnostics
                    .iter()
                    .map(|d| DiagnosticDoc {
                        line: d.span.line,
                        column: d.span.column,
                        message: d.message.clone(),
                    })
                    .collect(),
            };
            Some(to_json(&doc))
        }
        Format::Text => None,
    }
}

pub fn render_error(command: &'static str, message: &str, format: Format) -> Option<String> {
    match format {
        Format::Machine => {
            let doc = ErrorDoc {
                format_version: FORMAT_VERSION,
                command,
                error: message.to_string(),
                diagnostics: Vec::new(),
            };
            Some(to_json(&doc))
        }
        Format::Text => None,
    }
}
