//! doxa builds Bayesian networks on the fly from schema-based causal
//! knowledge, routed through explicit argument frames, and keeps score of how
//! well the current network explains the evidence it is fed.
//!
//! The pipeline runs in five stages: a [`schema_kb::KnowledgeBase`] is loaded
//! from text and activated by grounds or claims; activations are exported as
//! [`argument::ArgumentFrame`]s; frames compile into a [`network::BayesNet`];
//! [`inference`] answers queries against the net while [`monitor`] watches a
//! surprise index over the asserted evidence; when the index trips,
//! [`revision`] searches the frames for the weak argument and proposes a
//! repaired model.

pub mod argument;
pub mod error;
pub mod inference;
pub mod monitor;
pub mod network;
pub mod revision;
pub mod schema_kb;
pub mod symbol;

pub use argument::{
    construct_argument, frames_from_activation, frames_to_text, merge_diagnostic_frames,
    parse_frames_text, ArgumentFrame, DiagnosticStrength, Direction, Qualifier,
};
pub use error::{Error, ErrorKind, Result};
pub use inference::{
    enumerate_oracle, evidence_probability, evidence_to_text, joint_probability,
    parse_evidence_text, posterior, Evidence, Factor, ENUMERATION_CAP,
};
pub use monitor::{
    model_likelihood_ratio, surprise_increments, surprise_index, ConflictReport, IncrementReport,
    DEFAULT_CONFLICT_THRESHOLD,
};
pub use network::{
    check_causal_order, compile, parse_net_text, reverse_arc, to_dot, to_net_text, BayesNet, Node,
};
pub use revision::{
    evaluate_revision, propose_revisions, revise_once, suspect_arguments, CandidateKind,
    RevisionCandidate, RevisionConfig, RevisionDecision, RevisionOutcome, SuspicionScore,
    DEFAULT_ACCEPTANCE_RATIO, DEFAULT_MAX_CANDIDATES,
};
pub use schema_kb::{
    activate_backward, activate_forward, expand_exceptions, load_kb, parse_kb, CausalLink,
    ExceptionTier, KnowledgeBase, Proposition, Schema, SchemaActivation,
};
pub use symbol::{ArgumentId, PropId, SchemaId, SchemaSetId};
