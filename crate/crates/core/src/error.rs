//! One error enum for the whole engine.
//!
//! Variants are grouped into coarse [`ErrorKind`] categories so front ends
//! can map failures to distinct exit codes without matching every variant.

use crate::symbol::{ArgumentId, PropId, SchemaId, SchemaSetId};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure category; each maps to its own CLI exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Compile,
    Inference,
    Revision,
}

#[derive(Debug, Error)]
pub enum Error {
    // ---- text formats -------------------------------------------------
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("unknown proposition `{0}`")]
    UnknownProposition(PropId),

    #[error("unknown schema `{0}`")]
    UnknownSchema(SchemaId),

    #[error("unknown schema set `{0}`")]
    UnknownSchemaSet(SchemaSetId),

    #[error("probability {value} out of range for {context}")]
    ProbabilityRange { value: f64, context: String },

    #[error(
        "link {cause} -> {effect} does not ascend causal tiers (tier {cause_tier} -> {effect_tier})"
    )]
    TierViolation {
        cause: PropId,
        effect: PropId,
        cause_tier: u32,
        effect_tier: u32,
    },

    // ---- argument construction ----------------------------------------
    #[error("activation of schema `{0}` matched no links")]
    EmptyActivation(SchemaId),

    #[error("activation of schema `{schema}` spans multiple claims: {first} and {second}")]
    MultipleClaims {
        schema: SchemaId,
        first: PropId,
        second: PropId,
    },

    #[error("frame `{frame}` mixes grounds below and above the claim tier")]
    MixedDirection { frame: ArgumentId },

    #[error("likelihood ratio {lr} with baseline {baseline} implies probability {product} > 1")]
    InfeasibleLikelihoodRatio { lr: f64, baseline: f64, product: f64 },

    #[error("cannot merge qualifiers for `{claim}`: {reason}")]
    NotMergeable { claim: PropId, reason: String },

    #[error(
        "arguments `{first}` and `{second}` assign contradictory strengths to `{claim}`"
    )]
    ConflictingStrengths {
        claim: PropId,
        first: ArgumentId,
        second: ArgumentId,
    },

    #[error("schema `{0}` has no backing schema set")]
    NoBacking(SchemaId),

    // ---- network construction -----------------------------------------
    #[error("no argument frames to compile")]
    NoFrames,

    #[error("parentless node `{0}` has no prior assignment in the knowledge base")]
    MissingPrior(PropId),

    #[error("network contains a directed cycle: {}", cycle_display(.0))]
    Cycle(Vec<PropId>),

    #[error("no arc {from} -> {to} to reverse")]
    NoSuchArc { from: PropId, to: PropId },

    #[error("reversing {from} -> {to} would create a cycle")]
    ReversalCycle { from: PropId, to: PropId },

    #[error("node `{node}` expects {expected} table entries, found {found}")]
    TableArity {
        node: PropId,
        expected: usize,
        found: usize,
    },

    // ---- inference ------------------------------------------------------
    #[error("evidence names node `{0}` which is not in the network")]
    EvidenceNodeUnknown(PropId),

    #[error("assignment omits node `{0}`")]
    IncompleteAssignment(PropId),

    #[error("evidence has probability zero under the model")]
    ImpossibleEvidence,

    #[error("{context} is capped at {cap} nodes, got {size}")]
    SizeCap {
        context: String,
        cap: usize,
        size: usize,
    },

    #[error("evidence is empty")]
    EmptyEvidence,

    #[error("expected evidence probability is zero; the model is degenerate on the observed set")]
    DegenerateModel,

    // ---- revision -------------------------------------------------------
    #[error("unknown argument `{0}`")]
    UnknownArgument(ArgumentId),

    #[error("models share no observed evidence nodes; likelihood ratio is undefined")]
    IncomparableModels,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Parse { .. } => ErrorKind::Parse,
            UnknownProposition(_) | UnknownSchema(_) | UnknownSchemaSet(_)
            | ProbabilityRange { .. } | TierViolation { .. } => ErrorKind::Parse,
            EmptyActivation(_) | MultipleClaims { .. } | MixedDirection { .. }
            | InfeasibleLikelihoodRatio { .. } | NotMergeable { .. }
            | ConflictingStrengths { .. } | NoBacking(_) | NoFrames | MissingPrior(_)
            | Cycle(_) | NoSuchArc { .. } | ReversalCycle { .. } | TableArity { .. } => {
                ErrorKind::Compile
            }
            EvidenceNodeUnknown(_) | IncompleteAssignment(_) | ImpossibleEvidence
            | SizeCap { .. } | EmptyEvidence | DegenerateModel => ErrorKind::Inference,
            UnknownArgument(_) | IncomparableModels => ErrorKind::Revision,
        }
    }

    pub(crate) fn parse(file: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.to_string(),
            line,
            message: message.into(),
        }
    }
}

fn cycle_display(cycle: &[PropId]) -> String {
    cycle
        .iter()
        .map(PropId::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}
