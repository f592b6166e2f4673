//! Model revision: find the arguments responsible for a conflict, generate
//! alternative models from their slots, and adopt or retain by likelihood
//! ratio.
//!
//! Suspicion has three signals, ranked lexicographically. A falsified
//! precondition invalidates the warrant outright. A rebuttal that has
//! become probable under the evidence points at its argument. Failing
//! those, sensitivity asks how much the surprise index could improve if one
//! qualifier scalar were changed, searched over a fixed grid.
//!
//! Candidates come from the frame slots themselves: rebuttals promote into
//! explicit network nodes, the warrant's implicit exceptions (and, through
//! the backing, background exceptions) promote the same way, and the
//! qualifier can be adjusted to its sensitivity-optimal value. Every
//! candidate is compile-checked before it is offered, and adoption demands
//! a likelihood ratio above the acceptance bar, so a revision never trades
//! away more explanatory power than it buys.

use crate::argument::{
    emission_qualifier, ArgumentFrame, Direction, DiagnosticStrength, Qualifier,
};
use crate::error::{Error, Result};
use crate::inference::{posterior, Evidence};
use crate::monitor::{surprise_index, ConflictReport};
use crate::network::{compile, BayesNet};
use crate::schema_kb::{expand_exceptions, CausalLink, ExceptionTier, KnowledgeBase};
use crate::symbol::{ArgumentId, PropId};

/// One-at-a-time perturbation grid for qualifier scalars.
pub const SENSITIVITY_GRID: [f64; 21] = [
    0.01, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70,
    0.75, 0.80, 0.85, 0.90, 0.95, 0.99,
];

/// A candidate must beat the current model by this factor to be adopted.
pub const DEFAULT_ACCEPTANCE_RATIO: f64 = 10.0;

/// Cap on candidates generated per revision pass.
pub const DEFAULT_MAX_CANDIDATES: usize = 8;

/// Posterior above which a rebuttal counts as "has become probable".
pub const REBUTTAL_PROBABLE: f64 = 0.5;

/// Which scalar inside a frame's qualifier a perturbation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarSlot {
    /// Full-table entry at this row index.
    TableEntry(usize),
    /// Noisy-or link probability for the ground at this position.
    Link(usize),
    /// Noisy-or leak.
    Leak,
    /// Shared emission strength of a diagnostic frame.
    DiagnosticStrength,
    /// Shared emission baseline of a diagnostic frame.
    DiagnosticBaseline,
}

/// The best single-scalar change found for a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub slot: ScalarSlot,
    pub value: f64,
    /// Surprise index the perturbed model achieves on the same evidence.
    pub lr_star: f64,
}

/// Per-argument conflict responsibility.
#[derive(Debug, Clone, PartialEq)]
pub struct SuspicionScore {
    pub argument: ArgumentId,
    /// Best achievable LR* improvement over the current model, ≥ 0.
    pub sensitivity: f64,
    /// Highest posterior among the frame's rebuttals, 0 if it has none.
    pub rebuttal_posterior: f64,
    /// True when evidence falsifies a precondition of the warrant schema.
    pub warrant_invalid: bool,
    pub best_perturbation: Option<Perturbation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateKind {
    PromoteRebuttal,
    PromoteImplicitException,
    AdjustQualifier,
}

impl CandidateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CandidateKind::PromoteRebuttal => "promote_rebuttal",
            CandidateKind::PromoteImplicitException => "promote_implicit_exception",
            CandidateKind::AdjustQualifier => "adjust_qualifier",
        }
    }
}

/// An alternative model, already compiled.
#[derive(Debug, Clone, PartialEq)]
pub struct RevisionCandidate {
    pub kind: CandidateKind,
    pub target: ArgumentId,
    pub frames: Vec<ArgumentFrame>,
    pub description: String,
    pub net: BayesNet,
}

/// Verdict on one candidate, carrying the likelihood ratio either way.
#[derive(Debug, Clone, PartialEq)]
pub enum RevisionDecision {
    Retain { ratio: f64 },
    Adopt { ratio: f64 },
}

impl RevisionDecision {
    pub fn ratio(&self) -> f64 {
        match self {
            RevisionDecision::Retain { ratio } | RevisionDecision::Adopt { ratio } => *ratio,
        }
    }

    pub fn adopted(&self) -> bool {
        matches!(self, RevisionDecision::Adopt { .. })
    }
}

/// Tunables for one revision pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevisionConfig {
    pub threshold: f64,
    pub acceptance_ratio: f64,
    pub max_candidates: usize,
}

impl Default for RevisionConfig {
    fn default() -> Self {
        RevisionConfig {
            threshold: crate::monitor::DEFAULT_CONFLICT_THRESHOLD,
            acceptance_ratio: DEFAULT_ACCEPTANCE_RATIO,
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }
}

/// Everything one monitor -> suspect -> propose -> evaluate pass produced.
#[derive(Debug, Clone)]
pub struct RevisionOutcome {
    pub report: ConflictReport,
    pub suspects: Vec<SuspicionScore>,
    /// Candidates in proposal order with their likelihood ratios.
    pub evaluations: Vec<(RevisionCandidate, f64)>,
    /// Index into `evaluations` of the adopted candidate, if any.
    pub adopted: Option<usize>,
    pub frames: Vec<ArgumentFrame>,
    pub net: BayesNet,
}

fn perturbable_slots(frame: &ArgumentFrame) -> Vec<ScalarSlot> {
    match frame.direction {
        Direction::Diagnostic => vec![ScalarSlot::DiagnosticStrength, ScalarSlot::DiagnosticBaseline],
        Direction::Causal => match &frame.qualifier {
            Qualifier::FullTable { entries } => {
                (0..entries.len()).map(ScalarSlot::TableEntry).collect()
            }
            Qualifier::NoisyOr { links, .. } => (0..links.len())
                .map(ScalarSlot::Link)
                .chain(std::iter::once(ScalarSlot::Leak))
                .collect(),
        },
    }
}

/// Rebuilds the frame with one scalar changed.
fn perturb(frame: &ArgumentFrame, slot: ScalarSlot, value: f64) -> ArgumentFrame {
    let mut out = frame.clone();
    match (slot, &mut out.qualifier) {
        (ScalarSlot::TableEntry(i), Qualifier::FullTable { entries }) => entries[i] = value,
        (ScalarSlot::Link(i), Qualifier::NoisyOr { links, .. }) => links[i] = value,
        (ScalarSlot::Leak, Qualifier::NoisyOr { leak, .. }) => *leak = value,
        (ScalarSlot::DiagnosticStrength, _) => {
            let (_, b) = frame.emission().expect("diagnostic frame");
            out.qualifier = emission_qualifier(value, b, frame.grounds.len());
            out.diagnostic = Some(DiagnosticStrength {
                lr: value / b,
                baseline: b,
            });
        }
        (ScalarSlot::DiagnosticBaseline, _) => {
            let (s, _) = frame.emission().expect("diagnostic frame");
            out.qualifier = emission_qualifier(s, value, frame.grounds.len());
            out.diagnostic = Some(DiagnosticStrength {
                lr: s / value,
                baseline: value,
            });
        }
        _ => unreachable!("slot enumerated from this frame's qualifier"),
    }
    out
}

fn describe_slot(frame: &ArgumentFrame, slot: ScalarSlot) -> String {
    match slot {
        ScalarSlot::TableEntry(i) => format!("table row {i}"),
        ScalarSlot::Link(i) => format!("link strength for `{}`", frame.grounds[i]),
        ScalarSlot::Leak => "leak".to_string(),
        ScalarSlot::DiagnosticStrength => "diagnostic strength".to_string(),
        ScalarSlot::DiagnosticBaseline => "diagnostic baseline".to_string(),
    }
}

/// Swaps `replacement` in for the frame with the same id.
fn with_replacement(frames: &[ArgumentFrame], replacement: ArgumentFrame) -> Vec<ArgumentFrame> {
    frames
        .iter()
        .map(|f| {
            if f.id == replacement.id {
                replacement.clone()
            } else {
                f.clone()
            }
        })
        .collect()
}

/// Scores every frame and ranks them most-suspect first: invalidated
/// warrants, then probable rebuttals, then sensitivity, ties by id.
pub fn suspect_arguments(
    net: &BayesNet,
    frames: &[ArgumentFrame],
    kb: &KnowledgeBase,
    evidence: &Evidence,
) -> Result<Vec<SuspicionScore>> {
    let current = surprise_index(net, evidence, crate::monitor::DEFAULT_CONFLICT_THRESHOLD)?;
    let mut scores = Vec::new();
    for frame in frames {
        let mut best: Option<Perturbation> = None;
        for slot in perturbable_slots(frame) {
            for &value in SENSITIVITY_GRID.iter() {
                let candidate_frames = with_replacement(frames, perturb(frame, slot, value));
                let net = match compile(&candidate_frames, kb) {
                    Ok(net) => net,
                    Err(e) => {
                        log::warn!("perturbation of `{}` fails to compile: {e}", frame.id);
                        continue;
                    }
                };
                let report = surprise_index(&net, evidence, current.threshold)?;
                if best
                    .as_ref()
                    .map(|b| report.lr_star > b.lr_star)
                    .unwrap_or(true)
                {
                    best = Some(Perturbation {
                        slot,
                        value,
                        lr_star: report.lr_star,
                    });
                }
            }
        }
        let sensitivity = best
            .as_ref()
            .map(|b| (b.lr_star - current.lr_star).max(0.0))
            .unwrap_or(0.0);

        let mut rebuttal_posterior = 0.0f64;
        for rebuttal in &frame.rebuttals {
            let p = if net.contains(rebuttal) {
                posterior(net, rebuttal, evidence)?
            } else {
                match extension_net_with(frames, kb, frame, rebuttal) {
                    Ok(extended) => posterior(&extended, rebuttal, evidence)?,
                    Err(e) => {
                        log::warn!("cannot extend the net with `{rebuttal}`: {e}");
                        0.0
                    }
                }
            };
            rebuttal_posterior = rebuttal_posterior.max(p);
        }

        let schema = kb.schema(&frame.warrant)?;
        let warrant_invalid = schema
            .preconditions
            .iter()
            .any(|p| evidence.get(p) == Some(false));

        scores.push(SuspicionScore {
            argument: frame.id.clone(),
            sensitivity,
            rebuttal_posterior,
            warrant_invalid,
            best_perturbation: best,
        });
    }
    scores.sort_by(|a, b| {
        b.warrant_invalid
            .cmp(&a.warrant_invalid)
            .then(b.rebuttal_posterior.total_cmp(&a.rebuttal_posterior))
            .then(b.sensitivity.total_cmp(&a.sensitivity))
            .then(a.argument.cmp(&b.argument))
    });
    Ok(scores)
}

/// Builds the one-step extension net used to query a rebuttal that is not a
/// node yet: the promotion frames compiled fresh.
fn extension_net_with(
    frames: &[ArgumentFrame],
    kb: &KnowledgeBase,
    frame: &ArgumentFrame,
    rebuttal: &PropId,
) -> Result<BayesNet> {
    let schema = kb.schema(&frame.warrant)?;
    let descriptor = schema
        .implicit_exceptions
        .iter()
        .find(|e| &e.proposition == rebuttal)
        .ok_or_else(|| Error::UnknownProposition(rebuttal.clone()))?;
    let frames = promote_links(frames, frame, &descriptor.links)?;
    compile(&frames, kb)
}

/// Adds exception links into the frame set: a link whose effect matches a
/// causal frame of the same warrant extends that frame's noisy-or; anything
/// else becomes a new single-ground causal frame.
fn promote_links(
    frames: &[ArgumentFrame],
    suspect: &ArgumentFrame,
    links: &[CausalLink],
) -> Result<Vec<ArgumentFrame>> {
    let mut out = frames.to_vec();
    for link in links {
        let slot = out.iter_mut().find(|f| {
            f.direction == Direction::Causal
                && f.claim == link.effect
                && f.warrant == suspect.warrant
        });
        match slot {
            Some(frame) => {
                if frame.grounds.contains(&link.cause) {
                    continue;
                }
                let (mut causes, mut strengths, old_leak) = match &frame.qualifier {
                    Qualifier::NoisyOr { links, leak } => {
                        (frame.grounds.clone(), links.clone(), *leak)
                    }
                    Qualifier::FullTable { entries } if entries.len() == 2 => (
                        frame.grounds.clone(),
                        vec![entries[1]],
                        entries[0],
                    ),
                    Qualifier::FullTable { .. } => {
                        return Err(Error::NotMergeable {
                            claim: frame.claim.clone(),
                            reason: "cannot extend a joint table with a new cause".into(),
                        })
                    }
                };
                let at = causes
                    .binary_search(&link.cause)
                    .expect_err("cause is new");
                causes.insert(at, link.cause.clone());
                strengths.insert(at, link.strength_given_cause);
                let leak = old_leak.max(link.strength_given_not_cause);
                frame.grounds = causes;
                frame.qualifier = Qualifier::NoisyOr {
                    links: strengths,
                    leak,
                };
                frame.rebuttals.retain(|r| r != &link.cause);
            }
            None => out.push(ArgumentFrame {
                id: ArgumentFrame::frame_id(&suspect.warrant, &link.effect, Direction::Causal),
                grounds: vec![link.cause.clone()],
                claim: link.effect.clone(),
                qualifier: Qualifier::FullTable {
                    entries: vec![link.strength_given_not_cause, link.strength_given_cause],
                },
                warrant: suspect.warrant.clone(),
                backing: suspect.backing.clone(),
                rebuttals: Vec::new(),
                direction: Direction::Causal,
                diagnostic: None,
            }),
        }
    }
    // The promoted proposition stops being a rebuttal wherever it appeared.
    let promoted: Vec<PropId> = links.iter().map(|l| l.cause.clone()).collect();
    for frame in &mut out {
        frame.rebuttals.retain(|r| !promoted.contains(r));
    }
    Ok(out)
}

/// Generates up to `max_candidates` compile-checked revision candidates in
/// rank order: rebuttal promotions, implicit-exception promotions (backing
/// expansions included), then the qualifier adjustment.
pub fn propose_revisions(
    kb: &KnowledgeBase,
    suspects: &[SuspicionScore],
    frames: &[ArgumentFrame],
    max_candidates: usize,
) -> Result<Vec<RevisionCandidate>> {
    let mut out: Vec<RevisionCandidate> = Vec::new();
    for suspect in suspects {
        if out.len() >= max_candidates {
            break;
        }
        let frame = frames
            .iter()
            .find(|f| f.id == suspect.argument)
            .ok_or_else(|| Error::UnknownArgument(suspect.argument.clone()))?;
        let schema = kb.schema(&frame.warrant)?;

        let push = |kind: CandidateKind,
                        new_frames: Vec<ArgumentFrame>,
                        description: String,
                        out: &mut Vec<RevisionCandidate>| {
            if out.len() >= max_candidates {
                return;
            }
            if new_frames == frames {
                return;
            }
            if out.iter().any(|c| c.frames == new_frames) {
                return;
            }
            match compile(&new_frames, kb) {
                Ok(net) => out.push(RevisionCandidate {
                    kind,
                    target: frame.id.clone(),
                    frames: new_frames,
                    description,
                    net,
                }),
                Err(e) => log::warn!("dropping {} candidate: {e}", kind.as_str()),
            }
        };

        // Rebuttals first: they were exported precisely to drive revision.
        for rebuttal in &frame.rebuttals {
            if let Some(descriptor) = schema
                .implicit_exceptions
                .iter()
                .find(|e| &e.proposition == rebuttal)
            {
                match promote_links(frames, frame, &descriptor.links) {
                    Ok(new_frames) => push(
                        CandidateKind::PromoteRebuttal,
                        new_frames,
                        format!("promote rebuttal `{rebuttal}` to an explicit cause"),
                        &mut out,
                    ),
                    Err(e) => log::warn!("dropping promote_rebuttal candidate: {e}"),
                }
            }
        }

        // Then every implicit exception the warrant schema carries.
        for descriptor in expand_exceptions(kb, &frame.warrant, ExceptionTier::Implicit)? {
            match promote_links(frames, frame, &descriptor.links) {
                Ok(new_frames) => push(
                    CandidateKind::PromoteImplicitException,
                    new_frames,
                    format!(
                        "promote implicit exception `{}` from warrant `{}`",
                        descriptor.proposition, frame.warrant
                    ),
                    &mut out,
                ),
                Err(e) => log::warn!("dropping promote_implicit_exception candidate: {e}"),
            }
        }

        // Background exceptions live one level deeper, behind the backing.
        if frame.backing.is_some() {
            for descriptor in expand_exceptions(kb, &frame.warrant, ExceptionTier::Background)? {
                match promote_links(frames, frame, &descriptor.links) {
                    Ok(new_frames) => push(
                        CandidateKind::PromoteImplicitException,
                        new_frames,
                        format!(
                            "promote background exception `{}` via backing of `{}`",
                            descriptor.proposition, frame.warrant
                        ),
                        &mut out,
                    ),
                    Err(e) => log::warn!("dropping background promotion candidate: {e}"),
                }
            }
        }

        // Last resort: move the qualifier to its sensitivity optimum.
        if let Some(p) = &suspect.best_perturbation {
            if suspect.sensitivity > 0.0 {
                let new_frames = with_replacement(frames, perturb(frame, p.slot, p.value));
                push(
                    CandidateKind::AdjustQualifier,
                    new_frames,
                    format!(
                        "set {} of `{}` to {}",
                        describe_slot(frame, p.slot),
                        frame.id,
                        p.value
                    ),
                    &mut out,
                );
            }
        }
    }
    Ok(out)
}

/// Compares the candidate against the current model on the evidence nodes
/// both nets share; adopt iff the ratio clears `acceptance_ratio`.
pub fn evaluate_revision(
    current: &BayesNet,
    candidate: &RevisionCandidate,
    evidence: &Evidence,
    acceptance_ratio: f64,
) -> Result<RevisionDecision> {
    let common = Evidence::from_pairs(
        evidence
            .in_order()
            .iter()
            .filter(|(id, _)| current.contains(id) && candidate.net.contains(id))
            .cloned(),
    );
    if common.is_empty() {
        return Err(Error::IncomparableModels);
    }
    let ratio = crate::monitor::model_likelihood_ratio(&candidate.net, current, &common)?;
    if ratio > acceptance_ratio {
        Ok(RevisionDecision::Adopt { ratio })
    } else {
        Ok(RevisionDecision::Retain { ratio })
    }
}

/// One full revision pass. Without a triggered conflict (and without
/// `force`) it returns immediately; otherwise it ranks suspects, proposes
/// candidates, evaluates each, and adopts the first candidate in proposal
/// order whose ratio clears the bar. At most one adoption per pass.
pub fn revise_once(
    kb: &KnowledgeBase,
    frames: &[ArgumentFrame],
    net: &BayesNet,
    evidence: &Evidence,
    config: RevisionConfig,
    force: bool,
) -> Result<RevisionOutcome> {
    let report = surprise_index(net, evidence, config.threshold)?;
    let mut outcome = RevisionOutcome {
        report,
        suspects: Vec::new(),
        evaluations: Vec::new(),
        adopted: None,
        frames: frames.to_vec(),
        net: net.clone(),
    };
    if !outcome.report.triggered && !force {
        return Ok(outcome);
    }
    outcome.suspects = suspect_arguments(net, frames, kb, evidence)?;
    let candidates = propose_revisions(kb, &outcome.suspects, frames, config.max_candidates)?;
    // Proposal order encodes the preference among revision kinds, so the
    // first candidate clearing the bar wins even if a later one scores a
    // higher ratio: exposing a hidden cause beats inflating a qualifier.
    for candidate in candidates {
        let decision = evaluate_revision(net, &candidate, evidence, config.acceptance_ratio)?;
        let ratio = decision.ratio();
        if decision.adopted() && outcome.adopted.is_none() {
            outcome.adopted = Some(outcome.evaluations.len());
        }
        outcome.evaluations.push((candidate, ratio));
    }
    if let Some(index) = outcome.adopted {
        outcome.frames = outcome.evaluations[index].0.frames.clone();
        outcome.net = outcome.evaluations[index].0.net.clone();
    }
    Ok(outcome)
}
