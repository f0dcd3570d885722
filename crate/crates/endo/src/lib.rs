//! Endorsement networks: reasoning with graded belief and certainty.
//!
//! Propositions carry a belief in [-1, 1] and a certainty in [0, 1].
//! Endorsements (weighted directed edges) carry value between propositions;
//! supports are themselves first-class and can be endorsed by other nodes,
//! so evidential strength is context dependent. Evaluation combines each
//! node's endorsements by relative certainty and relative importance,
//! resolves winner-take-all competitions among mutually exclusive
//! endorsers, relaxes cycles to a damped fixed point, flags contradictions,
//! and can explain every value as weighted reasons for and against.
//!
//! ```
//! use endo::{Network, RelaxationConfig, evaluate};
//!
//! let mut b = Network::builder();
//! b.add_intuition_node("well_in_math", 0.6, 1.0).unwrap();
//! b.add_plain_node("good_math_student").unwrap();
//! b.add_plain_node("math_major").unwrap();
//! b.add_edge("well_in_math", "good_math_student", 1.0).unwrap();
//! b.add_edge("good_math_student", "math_major", 1.0).unwrap();
//! let net = b.build().unwrap();
//!
//! let report = evaluate(&net, &RelaxationConfig::default()).unwrap();
//! let major = report.state().rationale(&"math_major".parse().unwrap()).unwrap();
//! // belief survives the chain unattenuated: no decay with path length
//! assert_eq!(major.belief(), 0.6);
//! assert_eq!(major.certainty(), 1.0);
//! ```

pub mod contradiction;
mod error;
mod eval;
mod exclusion;
pub mod explanation;
mod model;
pub mod netfmt;
mod propagation;

pub use error::{EvalError, ModelError};
pub use eval::{
    compute_belief, compute_certainty, effective_support, endorsement_strength, evaluate_node,
    relative_certainty, relative_importance, EndorserView, EvaluationState, ValueSource,
};
pub use exclusion::{apply_exclusion, select_winner};
pub use model::{
    ExclusionCluster, Intuition, MetaEndorsement, Network, NetworkBuilder, NodeId,
    PropositionNode, Rationale, SupportEdge, ValidationReport, Violation, WinnerMetric,
    DEFAULT_THRESHOLD,
};
pub use propagation::{
    dependency_graph, evaluate, evaluate_incremental, evaluate_many, DependencyGraph,
    EvaluationReport, RelaxationConfig,
};

impl std::str::FromStr for NodeId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeId::new(s)
    }
}
