//! Network data model: proposition nodes, support edges, meta endorsements and
//! exclusion clusters, plus the builder and structural validation.
//!
//! A network is immutable once built. Builder operations reject anything that
//! would break a local invariant (ranges, dangling references, duplicates,
//! self endorsement); [`NetworkBuilder::build`] additionally runs the global
//! checks in [`Network::validate`] and refuses to produce an invalid value.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::ModelError;

/// Identifier of a proposition node.
///
/// Non-empty ASCII, starting with a letter or underscore, continuing with
/// letters, digits, `_` or `-`, not ending in `-`. The restriction keeps
/// canonical sorting and the on-disk format unambiguous.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        let id = id.into();
        let mut chars = id.chars();
        let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
        let tail_ok = chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if head_ok && tail_ok && !id.ends_with('-') {
            Ok(NodeId(id))
        } else {
            Err(ModelError::InvalidId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

fn check_range(what: &'static str, value: f64, min: f64, max: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value >= min && value <= max {
        Ok(value)
    } else {
        Err(ModelError::OutOfRange {
            what,
            min,
            max,
            value,
        })
    }
}

/// A computed (belief, certainty) pair.
///
/// Belief lives in [-1, 1]: -1 is false, +1 is true. Certainty lives in
/// [0, 1] and measures how reliable the evidence behind the belief is;
/// it is independent of the belief's sign or magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rationale {
    belief: f64,
    certainty: f64,
}

impl Rationale {
    pub fn new(belief: f64, certainty: f64) -> Result<Self, ModelError> {
        Ok(Rationale {
            belief: check_range("belief", belief, -1.0, 1.0)?,
            certainty: check_range("certainty", certainty, 0.0, 1.0)?,
        })
    }

    pub fn belief(&self) -> f64 {
        self.belief
    }

    pub fn certainty(&self) -> f64 {
        self.certainty
    }
}

/// An externally supplied (belief, certainty) pair.
///
/// Unlike a [`Rationale`] it is never recomputed; it seeds nodes without
/// endorsements and serves as the reference point for divergence checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intuition {
    belief: f64,
    certainty: f64,
}

impl Intuition {
    pub fn new(belief: f64, certainty: f64) -> Result<Self, ModelError> {
        Ok(Intuition {
            belief: check_range("belief", belief, -1.0, 1.0)?,
            certainty: check_range("certainty", certainty, 0.0, 1.0)?,
        })
    }

    pub fn belief(&self) -> f64 {
        self.belief
    }

    pub fn certainty(&self) -> f64 {
        self.certainty
    }

    pub fn as_rationale(&self) -> Rationale {
        Rationale {
            belief: self.belief,
            certainty: self.certainty,
        }
    }
}

/// Default divergence threshold for nodes that do not set one.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// A proposition in the network.
#[derive(Debug, Clone, PartialEq)]
pub struct PropositionNode {
    id: NodeId,
    intuition: Option<Intuition>,
    threshold: f64,
    label: Option<String>,
}

impl PropositionNode {
    pub fn new(id: impl Into<String>) -> Result<Self, ModelError> {
        Ok(PropositionNode {
            id: NodeId::new(id)?,
            intuition: None,
            threshold: DEFAULT_THRESHOLD,
            label: None,
        })
    }

    pub fn with_intuition(mut self, intuition: Intuition) -> Self {
        self.intuition = Some(intuition);
        self
    }

    /// Divergence threshold in [0, 2]: how far the computed belief may drift
    /// from the intuitive one before the node counts as contradicted.
    pub fn with_threshold(mut self, threshold: f64) -> Result<Self, ModelError> {
        self.threshold = check_range("threshold", threshold, 0.0, 2.0)?;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn id(&self) -> &NodeId {
        &self.id
    }

    pub fn intuition(&self) -> Option<&Intuition> {
        self.intuition.as_ref()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }
}

/// An endorsement of a support edge's strength by a third node.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaEndorsement {
    endorser: NodeId,
    strength: f64,
}

impl MetaEndorsement {
    pub fn endorser(&self) -> &NodeId {
        &self.endorser
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }
}

/// A directed endorsement `src -> dst` with a base strength and any
/// meta endorsements attached to it.
///
/// Negative strength is inhibitory, positive is excitatory; zero is
/// rejected because it expresses no endorsement at all.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportEdge {
    src: NodeId,
    dst: NodeId,
    base_strength: f64,
    meta: Vec<MetaEndorsement>,
}

impl SupportEdge {
    pub fn src(&self) -> &NodeId {
        &self.src
    }

    pub fn dst(&self) -> &NodeId {
        &self.dst
    }

    pub fn base_strength(&self) -> f64 {
        self.base_strength
    }

    /// Meta endorsements, sorted by endorser id.
    pub fn meta(&self) -> &[MetaEndorsement] {
        &self.meta
    }
}

/// How an exclusion cluster picks its winner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WinnerMetric {
    /// Highest belief wins.
    #[default]
    Belief,
    /// Highest belief x relative certainty x |support| wins.
    Combined,
}

/// A set of endorsers of one target declared mutually exclusive.
///
/// After the winner is picked, every other member's effective support is
/// scaled by `1 - inhibition * max(winner_belief, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionCluster {
    target: NodeId,
    members: BTreeSet<NodeId>,
    inhibition: f64,
    metric: WinnerMetric,
}

impl ExclusionCluster {
    pub fn target(&self) -> &NodeId {
        &self.target
    }

    pub fn members(&self) -> impl Iterator<Item = &NodeId> {
        self.members.iter()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.members.contains(id)
    }

    pub fn inhibition(&self) -> f64 {
        self.inhibition
    }

    pub fn metric(&self) -> WinnerMetric {
        self.metric
    }
}

/// One structural defect found by [`Network::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A node with no incoming support edge must carry an intuition,
    /// otherwise its belief is undefined.
    SourceLacksIntuition { node: NodeId },
    ZeroStrength { src: NodeId, dst: NodeId },
    OutOfRange { subject: String, value: f64 },
    SelfEndorsement { node: NodeId },
    DanglingReference { subject: String, missing: NodeId },
    MetaEndorserIsEndpoint { edge: (NodeId, NodeId), endorser: NodeId },
    ClusterTooSmall { target: NodeId },
    MemberNotEndorser { target: NodeId, member: NodeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SourceLacksIntuition { node } => {
                write!(f, "source node `{node}` lacks intuition")
            }
            Violation::ZeroStrength { src, dst } => {
                write!(f, "zero support strength on {src} -> {dst}")
            }
            Violation::OutOfRange { subject, value } => {
                write!(f, "{subject} out of range: {value}")
            }
            Violation::SelfEndorsement { node } => write!(f, "self endorsement on `{node}`"),
            Violation::DanglingReference { subject, missing } => {
                write!(f, "{subject} references unknown node `{missing}`")
            }
            Violation::MetaEndorserIsEndpoint { edge, endorser } => write!(
                f,
                "meta endorser `{endorser}` is an endpoint of {} -> {}",
                edge.0, edge.1
            ),
            Violation::ClusterTooSmall { target } => {
                write!(f, "exclusion cluster for `{target}` has fewer than two members")
            }
            Violation::MemberNotEndorser { target, member } => {
                write!(f, "cluster member `{member}` has no support edge to `{target}`")
            }
        }
    }
}

/// Every invariant violation found in a network. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// An immutable network of propositions and endorsements.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Network {
    nodes: BTreeMap<NodeId, PropositionNode>,
    edges: BTreeMap<(NodeId, NodeId), SupportEdge>,
    clusters: Vec<ExclusionCluster>,
    // src ids of the edges into each node, sorted; rebuilt on construction
    incoming: BTreeMap<NodeId, Vec<NodeId>>,
}

impl Network {
    pub fn builder() -> NetworkBuilder {
        NetworkBuilder::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&PropositionNode> {
        self.nodes.get(id)
    }

    /// Nodes in id order.
    pub fn nodes(&self) -> impl Iterator<Item = &PropositionNode> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn edge(&self, src: &str, dst: &str) -> Option<&SupportEdge> {
        // keys are (NodeId, NodeId); resolve through the id set to avoid allocating
        let src = self.nodes.get_key_value(src)?.0.clone();
        let dst = self.nodes.get_key_value(dst)?.0.clone();
        self.edges.get(&(src, dst))
    }

    /// Edges in (src, dst) order.
    pub fn edges(&self) -> impl Iterator<Item = &SupportEdge> {
        self.edges.values()
    }

    /// Edges into `dst`, sorted by source id.
    pub fn incoming<'a>(&'a self, dst: &'a NodeId) -> impl Iterator<Item = &'a SupportEdge> + 'a {
        self.incoming
            .get(dst)
            .into_iter()
            .flatten()
            .filter_map(move |src| self.edges.get(&(src.clone(), dst.clone())))
    }

    pub fn has_incoming(&self, dst: &NodeId) -> bool {
        self.incoming.get(dst).is_some_and(|v| !v.is_empty())
    }

    /// Clusters sorted by target id (declaration order within one target).
    pub fn clusters(&self) -> &[ExclusionCluster] {
        &self.clusters
    }

    pub fn clusters_targeting<'a>(
        &'a self,
        target: &'a NodeId,
    ) -> impl Iterator<Item = &'a ExclusionCluster> {
        self.clusters.iter().filter(move |c| c.target() == target)
    }

    /// Re-check every structural invariant. Networks obtained from
    /// [`NetworkBuilder::build`] or the parser always validate empty.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for node in self.nodes.values() {
            if node.intuition().is_none() && !self.has_incoming(node.id()) {
                violations.push(Violation::SourceLacksIntuition {
                    node: node.id().clone(),
                });
            }
            if !(0.0..=2.0).contains(&node.threshold()) {
                violations.push(Violation::OutOfRange {
                    subject: format!("threshold of `{}`", node.id()),
                    value: node.threshold(),
                });
            }
        }
        for edge in self.edges.values() {
            if edge.base_strength() == 0.0 {
                violations.push(Violation::ZeroStrength {
                    src: edge.src().clone(),
                    dst: edge.dst().clone(),
                });
            } else if edge.base_strength().abs() > 1.0 || !edge.base_strength().is_finite() {
                violations.push(Violation::OutOfRange {
                    subject: format!("support strength of {} -> {}", edge.src(), edge.dst()),
                    value: edge.base_strength(),
                });
            }
            if edge.src() == edge.dst() {
                violations.push(Violation::SelfEndorsement {
                    node: edge.src().clone(),
                });
            }
            for endpoint in [edge.src(), edge.dst()] {
                if !self.nodes.contains_key(endpoint.as_str()) {
                    violations.push(Violation::DanglingReference {
                        subject: format!("edge {} -> {}", edge.src(), edge.dst()),
                        missing: endpoint.clone(),
                    });
                }
            }
            for meta in edge.meta() {
                if !self.nodes.contains_key(meta.endorser().as_str()) {
                    violations.push(Violation::DanglingReference {
                        subject: format!("meta endorsement on {} -> {}", edge.src(), edge.dst()),
                        missing: meta.endorser().clone(),
                    });
                }
                if meta.endorser() == edge.src() || meta.endorser() == edge.dst() {
                    violations.push(Violation::MetaEndorserIsEndpoint {
                        edge: (edge.src().clone(), edge.dst().clone()),
                        endorser: meta.endorser().clone(),
                    });
                }
                if meta.strength() == 0.0 || meta.strength().abs() > 1.0 {
                    violations.push(Violation::OutOfRange {
                        subject: format!(
                            "meta strength of `{}` on {} -> {}",
                            meta.endorser(),
                            edge.src(),
                            edge.dst()
                        ),
                        value: meta.strength(),
                    });
                }
            }
        }
        for cluster in &self.clusters {
            if cluster.members.len() < 2 {
                violations.push(Violation::ClusterTooSmall {
                    target: cluster.target().clone(),
                });
            }
            if !self.nodes.contains_key(cluster.target().as_str()) {
                violations.push(Violation::DanglingReference {
                    subject: "exclusion cluster".to_string(),
                    missing: cluster.target().clone(),
                });
            }
            for member in cluster.members() {
                if !self.nodes.contains_key(member.as_str()) {
                    violations.push(Violation::DanglingReference {
                        subject: format!("exclusion cluster for `{}`", cluster.target()),
                        missing: member.clone(),
                    });
                } else if self.edge(member.as_str(), cluster.target().as_str()).is_none() {
                    violations.push(Violation::MemberNotEndorser {
                        target: cluster.target().clone(),
                        member: member.clone(),
                    });
                }
            }
            if !(0.0..=1.0).contains(&cluster.inhibition()) {
                violations.push(Violation::OutOfRange {
                    subject: format!("inhibition of cluster for `{}`", cluster.target()),
                    value: cluster.inhibition(),
                });
            }
        }
        ValidationReport { violations }
    }

    /// Copy of this network with `id`'s intuition replaced (or cleared).
    ///
    /// Supports transient what-if overrides without touching the original.
    pub fn with_intuition(
        &self,
        id: &str,
        intuition: Option<Intuition>,
    ) -> Result<Network, ModelError> {
        let mut out = self.clone();
        let node = out
            .nodes
            .get_mut(id)
            .ok_or_else(|| ModelError::UnknownNode(id.to_string()))?;
        node.intuition = intuition;
        Ok(out)
    }
}

/// Incremental constructor for [`Network`].
///
/// Nodes must be added before anything that references them; `build`
/// runs the global validation and fails rather than hand out an
/// invalid network.
#[derive(Debug, Default, Clone)]
pub struct NetworkBuilder {
    nodes: BTreeMap<NodeId, PropositionNode>,
    edges: BTreeMap<(NodeId, NodeId), SupportEdge>,
    clusters: Vec<ExclusionCluster>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: PropositionNode) -> Result<&mut Self, ModelError> {
        if self.nodes.contains_key(node.id().as_str()) {
            return Err(ModelError::DuplicateNode(node.id().to_string()));
        }
        self.nodes.insert(node.id().clone(), node);
        Ok(self)
    }

    /// Shorthand for a node carrying an intuition.
    pub fn add_intuition_node(
        &mut self,
        id: &str,
        belief: f64,
        certainty: f64,
    ) -> Result<&mut Self, ModelError> {
        let node = PropositionNode::new(id)?.with_intuition(Intuition::new(belief, certainty)?);
        self.add_node(node)
    }

    /// Shorthand for a plain node (rationale computed from endorsements).
    pub fn add_plain_node(&mut self, id: &str) -> Result<&mut Self, ModelError> {
        self.add_node(PropositionNode::new(id)?)
    }

    fn resolve(&self, id: &str) -> Result<NodeId, ModelError> {
        self.nodes
            .get_key_value(id)
            .map(|(k, _)| k.clone())
            .ok_or_else(|| ModelError::UnknownNode(id.to_string()))
    }

    pub fn add_edge(&mut self, src: &str, dst: &str, strength: f64) -> Result<&mut Self, ModelError> {
        let src = self.resolve(src)?;
        let dst = self.resolve(dst)?;
        if src == dst {
            return Err(ModelError::SelfEndorsement(src.to_string()));
        }
        if strength == 0.0 || !strength.is_finite() || strength.abs() > 1.0 {
            return Err(ModelError::ZeroStrength { value: strength });
        }
        let key = (src.clone(), dst.clone());
        if self.edges.contains_key(&key) {
            return Err(ModelError::DuplicateEdge {
                src: src.to_string(),
                dst: dst.to_string(),
            });
        }
        self.edges.insert(
            key,
            SupportEdge {
                src,
                dst,
                base_strength: strength,
                meta: Vec::new(),
            },
        );
        Ok(self)
    }

    /// Attach a meta endorsement to the edge `src -> dst`. At most one per
    /// (edge, endorser) pair so the weighting among an edge's meta endorsers
    /// stays well-defined.
    pub fn add_meta(
        &mut self,
        endorser: &str,
        src: &str,
        dst: &str,
        strength: f64,
    ) -> Result<&mut Self, ModelError> {
        let endorser = self.resolve(endorser)?;
        let src = self.resolve(src)?;
        let dst = self.resolve(dst)?;
        if strength == 0.0 || !strength.is_finite() || strength.abs() > 1.0 {
            return Err(ModelError::ZeroStrength { value: strength });
        }
        if endorser == src || endorser == dst {
            return Err(ModelError::MetaEndorserIsEndpoint {
                endorser: endorser.to_string(),
                src: src.to_string(),
                dst: dst.to_string(),
            });
        }
        let edge = self
            .edges
            .get_mut(&(src.clone(), dst.clone()))
            .ok_or_else(|| ModelError::UnknownEdge {
                src: src.to_string(),
                dst: dst.to_string(),
            })?;
        if edge.meta.iter().any(|m| m.endorser == endorser) {
            return Err(ModelError::DuplicateMeta {
                endorser: endorser.to_string(),
                src: src.to_string(),
                dst: dst.to_string(),
            });
        }
        edge.meta.push(MetaEndorsement { endorser, strength });
        edge.meta.sort_by(|a, b| a.endorser.cmp(&b.endorser));
        Ok(self)
    }

    pub fn add_cluster<'a, I>(
        &mut self,
        target: &str,
        members: I,
        inhibition: f64,
        metric: WinnerMetric,
    ) -> Result<&mut Self, ModelError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let target = self.resolve(target)?;
        check_range("inhibition", inhibition, 0.0, 1.0)?;
        let mut resolved = BTreeSet::new();
        for member in members {
            let member = self.resolve(member)?;
            if !self.edges.contains_key(&(member.clone(), target.clone())) {
                return Err(ModelError::MemberNotEndorser {
                    member: member.to_string(),
                    target: target.to_string(),
                });
            }
            resolved.insert(member);
        }
        if resolved.len() < 2 {
            return Err(ModelError::ClusterTooSmall {
                target: target.to_string(),
            });
        }
        self.clusters.push(ExclusionCluster {
            target,
            members: resolved,
            inhibition,
            metric,
        });
        Ok(self)
    }

    /// Finish construction. Returns the violations instead of a network if
    /// any global invariant is broken (e.g. a source node without intuition).
    pub fn build(mut self) -> Result<Network, ValidationReport> {
        self.clusters
            .sort_by(|a, b| a.target.cmp(&b.target).then(a.members.cmp(&b.members)));
        let mut incoming: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (src, dst) in self.edges.keys() {
            incoming.entry(dst.clone()).or_default().push(src.clone());
        }
        for sources in incoming.values_mut() {
            sources.sort();
        }
        let network = Network {
            nodes: self.nodes,
            edges: self.edges,
            clusters: self.clusters,
            incoming,
        };
        let report = network.validate();
        if report.is_empty() {
            Ok(network)
        } else {
            Err(report)
        }
    }
}
