//! Whole-network evaluation: topological processing of the dependency
//! structure, damped fixed-point relaxation on cycles, and incremental
//! re-evaluation with divergence-gated cycle recomputation.
//!
//! Beliefs stay bounded at every iterate because each sweep combines bounded
//! endorsements and the damping step is a convex combination; no decay factor
//! is involved, so a belief survives any number of hops unattenuated.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{EvalError, ModelError};
use crate::eval::{self, EvaluationState, NodeOutcome, ValueSource};
use crate::model::{Network, NodeId, Rationale};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many members a cycle sweep is not worth fanning out.
#[cfg(feature = "parallel")]
const PAR_SWEEP_MIN: usize = 64;

/// Parameters of the damped relaxation used on cyclic regions.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationConfig {
    alpha: f64,
    epsilon: f64,
    max_iters: u32,
    gating: bool,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        RelaxationConfig {
            alpha: 0.5,
            epsilon: 1e-6,
            max_iters: 1000,
            gating: true,
        }
    }
}

impl RelaxationConfig {
    /// `alpha` is the damping weight in (0, 1] applied to each sweep's
    /// result, `epsilon` the convergence tolerance on the largest value
    /// change, `max_iters` the sweep budget per cyclic component.
    pub fn new(alpha: f64, epsilon: f64, max_iters: u32) -> Result<Self, ModelError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ModelError::OutOfRange {
                what: "alpha",
                min: 0.0,
                max: 1.0,
                value: alpha,
            });
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(ModelError::OutOfRange {
                what: "epsilon",
                min: 0.0,
                max: f64::INFINITY,
                value: epsilon,
            });
        }
        if max_iters == 0 {
            return Err(ModelError::OutOfRange {
                what: "max_iters",
                min: 1.0,
                max: f64::INFINITY,
                value: 0.0,
            });
        }
        Ok(RelaxationConfig {
            alpha,
            epsilon,
            max_iters,
            gating: true,
        })
    }

    /// Disable or re-enable divergence gating for incremental passes.
    /// With gating off every reachable cyclic component is recomputed.
    pub fn with_gating(mut self, enabled: bool) -> Self {
        self.gating = enabled;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn max_iters(&self) -> u32 {
        self.max_iters
    }

    pub fn gating(&self) -> bool {
        self.gating
    }
}

/// Value-flow graph of a network plus its strongly connected components.
///
/// Node `j` depends on node `i` when `i` endorses `j`, `i` meta-endorses an
/// edge into `j`, or `i` competes in a cluster targeting `j`.
#[derive(Debug, Clone)]
pub struct DependencyGraph {
    ids: Vec<NodeId>,
    index: BTreeMap<NodeId, usize>,
    /// i -> nodes whose value depends on i
    successors: Vec<Vec<usize>>,
    /// j -> nodes j's value depends on
    predecessors: Vec<Vec<usize>>,
    /// components in evaluation order (dependencies first), members sorted
    components: Vec<Vec<usize>>,
}

/// Build the dependency graph of `network`.
pub fn dependency_graph(network: &Network) -> DependencyGraph {
    let ids: Vec<NodeId> = network.node_ids().cloned().collect();
    let index: BTreeMap<NodeId, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i))
        .collect();
    let n = ids.len();
    let mut pred_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for edge in network.edges() {
        let dst = index[edge.dst()];
        pred_sets[dst].insert(index[edge.src()]);
        for meta in edge.meta() {
            pred_sets[dst].insert(index[meta.endorser()]);
        }
    }
    for cluster in network.clusters() {
        let target = index[cluster.target()];
        for member in cluster.members() {
            pred_sets[target].insert(index[member]);
        }
    }
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut predecessors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, preds) in pred_sets.into_iter().enumerate() {
        for i in preds {
            successors[i].push(j);
            predecessors[j].push(i);
        }
    }
    let components = tarjan_components(&successors);
    DependencyGraph {
        ids,
        index,
        successors,
        predecessors,
        components,
    }
}

impl DependencyGraph {
    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    /// Strongly connected components in evaluation order: every component
    /// appears after all components it depends on. Members are sorted by id.
    pub fn components(&self) -> Vec<Vec<&NodeId>> {
        self.components
            .iter()
            .map(|c| c.iter().map(|&i| &self.ids[i]).collect())
            .collect()
    }

    /// Nodes whose value `id` feeds, directly.
    pub fn dependents(&self, id: &NodeId) -> Vec<&NodeId> {
        match self.index.get(id) {
            Some(&i) => self.successors[i].iter().map(|&j| &self.ids[j]).collect(),
            None => Vec::new(),
        }
    }

    /// Nodes `id` directly depends on.
    pub fn dependencies(&self, id: &NodeId) -> Vec<&NodeId> {
        match self.index.get(id) {
            Some(&i) => self.predecessors[i].iter().map(|&j| &self.ids[j]).collect(),
            None => Vec::new(),
        }
    }

    /// All nodes reachable from `roots` along dependency edges, roots included.
    pub fn affected_by<'a>(&self, roots: impl IntoIterator<Item = &'a NodeId>) -> BTreeSet<NodeId> {
        let root_indices: Vec<usize> = roots
            .into_iter()
            .filter_map(|id| self.index.get(id).copied())
            .collect();
        self.forward_closure(&root_indices)
            .into_iter()
            .map(|i| self.ids[i].clone())
            .collect()
    }

    fn forward_closure(&self, roots: &[usize]) -> BTreeSet<usize> {
        self.closure(roots, &self.successors)
    }

    fn backward_closure(&self, roots: &[usize]) -> BTreeSet<usize> {
        self.closure(roots, &self.predecessors)
    }

    fn closure(&self, roots: &[usize], adjacency: &[Vec<usize>]) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = roots.iter().copied().collect();
        let mut queue: VecDeque<usize> = roots.iter().copied().collect();
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[v] {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen
    }
}

/// Iterative Tarjan over the successor lists. Components come out in reverse
/// topological order, so the result is flipped to put dependencies first.
fn tarjan_components(successors: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = successors.len();
    const UNVISITED: usize = usize::MAX;
    let mut indices = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut components: Vec<Vec<usize>> = Vec::new();
    // (node, position in its successor list)
    let mut work: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if indices[root] != UNVISITED {
            continue;
        }
        work.push((root, 0));
        while let Some(&mut (v, ref mut pos)) = work.last_mut() {
            if *pos == 0 {
                indices[v] = next_index;
                lowlink[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = successors[v].get(*pos) {
                *pos += 1;
                if indices[w] == UNVISITED {
                    work.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(indices[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
                if lowlink[v] == indices[v] {
                    let mut component = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    component.sort_unstable();
                    components.push(component);
                }
            }
        }
    }
    components.reverse();
    components
}

/// Outcome of a full or incremental evaluation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    state: EvaluationState,
    converged: bool,
    iterations: u32,
    cycles: Vec<Vec<NodeId>>,
    gated: Vec<Vec<NodeId>>,
}

impl EvaluationReport {
    pub fn state(&self) -> &EvaluationState {
        &self.state
    }

    pub fn into_state(self) -> EvaluationState {
        self.state
    }

    /// True when every relaxed cyclic component reached the tolerance
    /// within the sweep budget.
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Total relaxation sweeps, including each component's final commit sweep.
    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    /// Cyclic components touched by this pass, in evaluation order.
    pub fn cycles(&self) -> &[Vec<NodeId>] {
        &self.cycles
    }

    /// Cyclic components skipped because no entry node's intuitive-rational
    /// divergence exceeded its threshold; they keep their previous values.
    pub fn gated(&self) -> &[Vec<NodeId>] {
        &self.gated
    }

    /// Nodes (re)computed by this pass, in evaluation order.
    pub fn recomputed(&self) -> &[NodeId] {
        self.state.ordering()
    }
}

/// Evaluate the whole network.
///
/// Components are processed dependencies-first. A single node is evaluated
/// directly; a cyclic component starts from the members' intuitions (or
/// (0, 0)) and iterates damped synchronous sweeps until the largest value
/// change is at most `epsilon`. Non-convergence is a reported outcome, not
/// an error.
pub fn evaluate(network: &Network, config: &RelaxationConfig) -> Result<EvaluationReport, EvalError> {
    let graph = dependency_graph(network);
    let mut state = EvaluationState::new();
    run_pass(network, config, &graph, &mut state, None, &BTreeSet::new(), false)
}

/// Evaluate a batch of independent networks with one configuration.
///
/// With the `parallel` feature the batch is fanned out across threads;
/// results are identical to the sequential fallback either way.
pub fn evaluate_many(
    networks: &[Network],
    config: &RelaxationConfig,
) -> Vec<Result<EvaluationReport, EvalError>> {
    #[cfg(feature = "parallel")]
    {
        networks.par_iter().map(|n| evaluate(n, config)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        networks.iter().map(|n| evaluate(n, config)).collect()
    }
}

/// Re-evaluate only what a change can influence.
///
/// `previous` must cover every node of `network`; `changed` names the nodes
/// whose intuition or incoming edges were updated. Nodes outside the forward
/// closure of `changed` keep their previous values. A cyclic component inside
/// the closure is re-relaxed only when some node on a path from the change
/// into it diverges from its own intuition by more than its threshold (or
/// when the change sits inside the component); otherwise it is gated.
pub fn evaluate_incremental(
    network: &Network,
    previous: &EvaluationState,
    changed: &BTreeSet<NodeId>,
    config: &RelaxationConfig,
) -> Result<EvaluationReport, EvalError> {
    let missing: Vec<String> = network
        .node_ids()
        .filter(|id| previous.rationale(id).is_none())
        .map(|id| id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::StaleState(missing));
    }
    for id in changed {
        if network.node(id.as_str()).is_none() {
            return Err(EvalError::UnknownNode(id.to_string()));
        }
    }
    let graph = dependency_graph(network);
    let changed_indices: Vec<usize> = changed.iter().map(|id| graph.index[id]).collect();
    let affected = graph.forward_closure(&changed_indices);
    let changed_set: BTreeSet<usize> = changed_indices.into_iter().collect();
    let mut state = previous.clone();
    run_pass(
        network,
        config,
        &graph,
        &mut state,
        Some(&affected),
        &changed_set,
        config.gating,
    )
}

#[allow(clippy::too_many_arguments)]
fn run_pass(
    network: &Network,
    config: &RelaxationConfig,
    graph: &DependencyGraph,
    state: &mut EvaluationState,
    affected: Option<&BTreeSet<usize>>,
    changed: &BTreeSet<usize>,
    gate_check: bool,
) -> Result<EvaluationReport, EvalError> {
    state.clear_ordering();
    let mut converged = true;
    let mut iterations = 0u32;
    let mut cycles: Vec<Vec<NodeId>> = Vec::new();
    let mut gated: Vec<Vec<NodeId>> = Vec::new();

    for component in &graph.components {
        if let Some(scope) = affected {
            if !component.iter().any(|i| scope.contains(i)) {
                continue;
            }
        }
        if component.len() == 1 {
            let id = &graph.ids[component[0]];
            eval::evaluate_node(id, network, state)?;
            state.push_order(id.clone());
            continue;
        }

        let member_ids: Vec<NodeId> = component.iter().map(|&i| graph.ids[i].clone()).collect();
        cycles.push(member_ids.clone());

        let contains_change = component.iter().any(|i| changed.contains(i));
        if gate_check && !contains_change && !gate_open(network, graph, state, component, affected)
        {
            gated.push(member_ids);
            continue;
        }

        let (scc_converged, sweeps) = relax_component(network, config, &member_ids, state)?;
        converged &= scc_converged;
        iterations += sweeps;
        for id in &member_ids {
            state.push_order(id.clone());
        }
    }

    Ok(EvaluationReport {
        state: state.clone(),
        converged,
        iterations,
        cycles,
        gated,
    })
}

/// True when some node on a path from the change into `component` holds an
/// intuition that diverges from its current rationale by more than its
/// threshold.
fn gate_open(
    network: &Network,
    graph: &DependencyGraph,
    state: &EvaluationState,
    component: &[usize],
    affected: Option<&BTreeSet<usize>>,
) -> bool {
    let members: BTreeSet<usize> = component.iter().copied().collect();
    let ancestors = graph.backward_closure(component);
    for i in ancestors {
        if members.contains(&i) {
            continue;
        }
        if let Some(scope) = affected {
            if !scope.contains(&i) {
                continue;
            }
        }
        let id = &graph.ids[i];
        let node = network.node(id.as_str()).expect("graph node exists");
        let (Some(intuition), Some(rationale)) = (node.intuition(), state.rationale(id)) else {
            continue;
        };
        if (intuition.belief() - rationale.belief()).abs() > node.threshold() {
            return true;
        }
    }
    false
}

struct SweepValue {
    rationale: Rationale,
    source: ValueSource,
}

fn sweep_once(
    network: &Network,
    members: &[NodeId],
    state: &EvaluationState,
) -> Result<Vec<eval::ResolvedNode>, EvalError> {
    #[cfg(feature = "parallel")]
    {
        if members.len() >= PAR_SWEEP_MIN {
            return members
                .par_iter()
                .map(|id| eval::resolve_node(id, network, state))
                .collect();
        }
    }
    members
        .iter()
        .map(|id| eval::resolve_node(id, network, state))
        .collect()
}

fn sweep_value(id: &NodeId, outcome: NodeOutcome, state: &EvaluationState) -> SweepValue {
    match outcome {
        NodeOutcome::Computed(r) => SweepValue {
            rationale: r,
            source: ValueSource::Endorsements,
        },
        NodeOutcome::FromIntuition(r) => SweepValue {
            rationale: r,
            source: ValueSource::Intuition,
        },
        // no usable evidence yet: hold the current iterate
        NodeOutcome::NoEvidence => SweepValue {
            rationale: state.rationale(id).expect("member initialized"),
            source: ValueSource::Unresolved,
        },
    }
}

/// Damped synchronous relaxation of one cyclic component. Ends with an
/// undamped commit sweep so the recorded values, supports and cluster
/// outcomes are mutually consistent.
fn relax_component(
    network: &Network,
    config: &RelaxationConfig,
    members: &[NodeId],
    state: &mut EvaluationState,
) -> Result<(bool, u32), EvalError> {
    for id in members {
        let node = network.node(id.as_str()).expect("member exists");
        let init = node
            .intuition()
            .map(|i| i.as_rationale())
            .unwrap_or_else(|| Rationale::new(0.0, 0.0).expect("zero is in range"));
        state.set_rationale(id.clone(), init, ValueSource::Unresolved);
    }

    let alpha = config.alpha();
    let mut sweeps = 0u32;
    let mut converged = false;
    while sweeps < config.max_iters() {
        let resolved = sweep_once(network, members, state)?;
        sweeps += 1;
        let mut residual = 0.0_f64;
        for (id, r) in members.iter().zip(resolved) {
            let current = state.rationale(id).expect("member initialized");
            let target = sweep_value(id, r.outcome, state);
            let db = alpha * (target.rationale.belief() - current.belief());
            let dc = alpha * (target.rationale.certainty() - current.certainty());
            residual = residual.max(db.abs()).max(dc.abs());
            let belief = current.belief() + db;
            let certainty = current.certainty() + dc;
            debug_assert!(belief.abs() <= 1.0 + 1e-12 && (-1e-12..=1.0 + 1e-12).contains(&certainty));
            // the convex combination is bounded; clamping only absorbs
            // the last rounding error of the update arithmetic
            let damped = Rationale::new(belief.clamp(-1.0, 1.0), certainty.clamp(0.0, 1.0))
                .expect("damped value is in range");
            state.set_rationale(id.clone(), damped, target.source);
        }
        if residual <= config.epsilon() {
            converged = true;
            break;
        }
    }

    // final undamped sweep: record f(x) itself along with its supports
    let resolved = sweep_once(network, members, state)?;
    sweeps += 1;
    let values: Vec<SweepValue> = members
        .iter()
        .zip(&resolved)
        .map(|(id, r)| sweep_value(id, r.outcome, state))
        .collect();
    for ((id, r), v) in members.iter().zip(&resolved).zip(values) {
        eval::commit_supports(id, r, state);
        state.set_rationale(id.clone(), v.rationale, v.source);
    }

    Ok((converged, sweeps))
}
