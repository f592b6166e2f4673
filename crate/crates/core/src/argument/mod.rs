//! Six-slot argument frames and the strength arithmetic behind them.
//!
//! A frame records grounds, claim, qualifier, warrant, backing, and
//! rebuttals. The qualifier carries the numbers the network needs: either a
//! full conditional table over the grounds or a noisy-or parameterization.
//! Frames are directed. A causal frame argues from causes to an effect and
//! its qualifier is the effect's conditional distribution. A diagnostic
//! frame argues from observed effects back to a cause; its qualifier stores
//! the per-effect emission probabilities, and the network builder re-orients
//! them so topology never depends on the direction of argument.

use crate::error::{Error, Result};
use crate::schema_kb::{CausalLink, JointTable, KnowledgeBase, SchemaActivation};
use crate::symbol::{ArgumentId, PropId, SchemaId, SchemaSetId};
use std::cmp::Ordering;
use std::collections::BTreeMap;

mod format;

pub use format::{frames_to_text, parse_frames_text};

/// Two diagnostic strengths closer than this count as the same number.
pub const STRENGTH_MERGE_TOLERANCE: f64 = 1e-12;

/// Leak values further apart than this trigger a reconciliation warning.
pub const LEAK_AGREEMENT_TOLERANCE: f64 = 1e-6;

/// Which way a frame argues relative to the causal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Grounds are causes of the claim.
    Causal,
    /// Grounds are observed effects of the claim.
    Diagnostic,
}

/// Conditional probability content of a frame.
///
/// Table entries are indexed by the grounds read as bits: first ground is
/// the most significant bit, true = 1, so `entries[0]` is the all-false row
/// and each entry is P(claim true | that assignment). For diagnostic frames
/// the interpretation flips to per-ground emissions: ground i is true with
/// probability `links[i]` given the claim and `leak` given its negation.
#[derive(Debug, Clone, PartialEq)]
pub enum Qualifier {
    FullTable { entries: Vec<f64> },
    NoisyOr { links: Vec<f64>, leak: f64 },
}

impl Qualifier {
    /// Number of conditioning propositions this qualifier spans.
    pub fn arity(&self) -> usize {
        match self {
            Qualifier::FullTable { entries } => {
                debug_assert!(entries.len().is_power_of_two());
                entries.len().trailing_zeros() as usize
            }
            Qualifier::NoisyOr { links, .. } => links.len(),
        }
    }

    /// Expands to the full 2^m table of P(true | parent assignment).
    pub fn expand(&self) -> Vec<f64> {
        match self {
            Qualifier::FullTable { entries } => entries.clone(),
            Qualifier::NoisyOr { links, leak } => {
                let m = links.len();
                (0..1usize << m)
                    .map(|idx| {
                        let mut miss = 1.0 - leak;
                        for (i, p) in links.iter().enumerate() {
                            if idx >> (m - 1 - i) & 1 == 1 {
                                miss *= 1.0 - p;
                            }
                        }
                        1.0 - miss
                    })
                    .collect()
            }
        }
    }

    /// Checks entry counts and probability ranges against `m` grounds.
    pub fn validate(&self, m: usize, claim: &PropId) -> Result<()> {
        let check = |value: f64, what: &str| -> Result<()> {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(Error::ProbabilityRange {
                    value,
                    context: format!("{what} of qualifier for `{claim}`"),
                });
            }
            Ok(())
        };
        match self {
            Qualifier::FullTable { entries } => {
                if entries.len() != 1 << m {
                    return Err(Error::TableArity {
                        node: claim.clone(),
                        expected: 1 << m,
                        found: entries.len(),
                    });
                }
                for &e in entries {
                    check(e, "entry")?;
                }
            }
            Qualifier::NoisyOr { links, leak } => {
                if links.len() != m {
                    return Err(Error::TableArity {
                        node: claim.clone(),
                        expected: m,
                        found: links.len(),
                    });
                }
                for &p in links {
                    check(p, "link probability")?;
                }
                check(*leak, "leak")?;
            }
        }
        Ok(())
    }
}

/// The (likelihood ratio, baseline) pair behind a diagnostic frame.
///
/// `lr` = P(effect | claim) / P(effect | not claim) and `baseline` is the
/// denominator, so the emission pair is always recoverable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticStrength {
    pub lr: f64,
    pub baseline: f64,
}

/// A six-slot argument frame: grounds, claim, qualifier, warrant, backing,
/// rebuttals; plus the direction it was argued in.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgumentFrame {
    pub id: ArgumentId,
    /// Sorted lexicographically; the qualifier is indexed in this order.
    pub grounds: Vec<PropId>,
    pub claim: PropId,
    pub qualifier: Qualifier,
    pub warrant: SchemaId,
    pub backing: Option<SchemaSetId>,
    /// Exportable exception propositions that can defeat the argument.
    pub rebuttals: Vec<PropId>,
    pub direction: Direction,
    /// Present exactly on diagnostic frames.
    pub diagnostic: Option<DiagnosticStrength>,
}

impl ArgumentFrame {
    /// Canonical id for the frame a warrant exports toward a claim.
    pub fn frame_id(warrant: &SchemaId, claim: &PropId, direction: Direction) -> ArgumentId {
        match direction {
            Direction::Causal => ArgumentId::new(format!("{warrant}:{claim}")),
            Direction::Diagnostic => ArgumentId::new(format!("{warrant}:{claim}:dx")),
        }
    }

    /// Emission pair (strength, baseline) of a diagnostic frame.
    pub fn emission(&self) -> Option<(f64, f64)> {
        match (&self.direction, &self.qualifier) {
            (Direction::Diagnostic, Qualifier::FullTable { entries }) if entries.len() == 2 => {
                Some((entries[1], entries[0]))
            }
            (Direction::Diagnostic, Qualifier::NoisyOr { links, leak }) => {
                links.first().map(|&s| (s, *leak))
            }
            _ => None,
        }
    }

    /// Checks the slot invariants against the knowledge base tiers.
    pub fn validate(&self, kb: &KnowledgeBase) -> Result<()> {
        if self.grounds.is_empty() {
            return Err(Error::EmptyActivation(self.warrant.clone()));
        }
        let mut sorted = self.grounds.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != self.grounds {
            return Err(Error::NotMergeable {
                claim: self.claim.clone(),
                reason: "grounds must be distinct and sorted".into(),
            });
        }
        self.qualifier.validate(self.grounds.len(), &self.claim)?;
        let claim_tier = kb.tier(&self.claim)?;
        let mut below = false;
        let mut above = false;
        for g in &self.grounds {
            match kb.tier(g)?.cmp(&claim_tier) {
                Ordering::Less => below = true,
                Ordering::Greater => above = true,
                Ordering::Equal => {
                    let (cause, effect, ct, et) = match self.direction {
                        Direction::Causal => (g.clone(), self.claim.clone(), kb.tier(g)?, claim_tier),
                        Direction::Diagnostic => (self.claim.clone(), g.clone(), claim_tier, kb.tier(g)?),
                    };
                    return Err(Error::TierViolation {
                        cause,
                        effect,
                        cause_tier: ct,
                        effect_tier: et,
                    });
                }
            }
        }
        if below && above {
            return Err(Error::MixedDirection {
                frame: self.id.clone(),
            });
        }
        let ok = match self.direction {
            Direction::Causal => below && !above,
            Direction::Diagnostic => above && !below,
        };
        if !ok {
            return Err(Error::MixedDirection {
                frame: self.id.clone(),
            });
        }
        for r in &self.rebuttals {
            kb.proposition(r)?;
            if r == &self.claim || self.grounds.contains(r) {
                return Err(Error::NotMergeable {
                    claim: self.claim.clone(),
                    reason: format!("rebuttal `{r}` overlaps grounds or claim"),
                });
            }
        }
        if self.direction == Direction::Diagnostic && self.diagnostic.is_none() {
            return Err(Error::NotMergeable {
                claim: self.claim.clone(),
                reason: "diagnostic frame is missing its strength pair".into(),
            });
        }
        Ok(())
    }
}

/// Builds one causal qualifier from links sharing an effect. One link copies
/// its pair into a two-entry table; several links become a noisy-or whose
/// leak is the largest strength-given-not-cause (never understates the leak).
/// Links must already be ordered by cause id.
pub fn qualifier_from_causal_strength(links: &[CausalLink]) -> Result<Qualifier> {
    match links {
        [] => Err(Error::NotMergeable {
            claim: PropId::new("?"),
            reason: "no links to build a qualifier from".into(),
        }),
        [only] => Ok(Qualifier::FullTable {
            entries: vec![only.strength_given_not_cause, only.strength_given_cause],
        }),
        many => {
            let effect = &many[0].effect;
            for l in many {
                if &l.effect != effect {
                    return Err(Error::NotMergeable {
                        claim: effect.clone(),
                        reason: format!("link for `{}` mixed in", l.effect),
                    });
                }
            }
            let leak = many
                .iter()
                .map(|l| l.strength_given_not_cause)
                .fold(0.0_f64, f64::max);
            let spread = many
                .iter()
                .map(|l| l.strength_given_not_cause)
                .fold(1.0_f64, f64::min);
            if leak - spread > LEAK_AGREEMENT_TOLERANCE {
                log::warn!(
                    "links into `{effect}` disagree on the leak ({spread} vs {leak}); using {leak}"
                );
            }
            Ok(Qualifier::NoisyOr {
                links: many.iter().map(|l| l.strength_given_cause).collect(),
                leak,
            })
        }
    }
}

/// Converts a likelihood ratio plus baseline back into the emission pair
/// (P(effect|cause), P(effect|not cause)). Inverse of forming the ratio.
pub fn qualifier_from_likelihood_ratio(lr: f64, baseline: f64) -> Result<(f64, f64)> {
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::ProbabilityRange {
            value: lr,
            context: "likelihood ratio (must be positive and finite)".into(),
        });
    }
    if !(baseline > 0.0 && baseline <= 1.0) {
        return Err(Error::ProbabilityRange {
            value: baseline,
            context: "likelihood-ratio baseline (must be in (0, 1])".into(),
        });
    }
    let product = lr * baseline;
    if product > 1.0 + 1e-9 {
        return Err(Error::InfeasibleLikelihoodRatio {
            lr,
            baseline,
            product,
        });
    }
    Ok((product.min(1.0), baseline))
}

fn exportable_rebuttals(kb: &KnowledgeBase, warrant: &SchemaId) -> Result<Vec<PropId>> {
    let schema = kb.schema(warrant)?;
    let mut out: Vec<PropId> = schema
        .implicit_exceptions
        .iter()
        .filter(|e| e.exportable)
        .map(|e| e.proposition.clone())
        .collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Builds the single frame for an activation that names exactly one claim.
///
/// Causal activations take the shared effect as the claim. Diagnostic
/// activations take the shared cause; their effects become the grounds and
/// the qualifier stores emissions. Activations spanning several claims must
/// be split first (see [`frames_from_activation`]).
pub fn construct_argument(
    activation: &SchemaActivation,
    kb: &KnowledgeBase,
) -> Result<ArgumentFrame> {
    let schema = kb.schema(&activation.schema)?;
    if activation.matched_links.is_empty() && activation.matched_tables.is_empty() {
        return Err(Error::EmptyActivation(activation.schema.clone()));
    }
    let rebuttals = exportable_rebuttals(kb, &activation.schema)?;
    let backing = schema.backing.clone();

    let frame = match activation.direction {
        Direction::Causal => {
            let claim = single_claim(
                &activation.schema,
                activation
                    .matched_links
                    .iter()
                    .map(|l| &l.effect)
                    .chain(activation.matched_tables.iter().map(|t| &t.effect)),
            )?;
            let (grounds, qualifier) = causal_content(
                &claim,
                &activation.matched_links,
                &activation.matched_tables,
            )?;
            ArgumentFrame {
                id: ArgumentFrame::frame_id(&activation.schema, &claim, Direction::Causal),
                grounds,
                claim,
                qualifier,
                warrant: activation.schema.clone(),
                backing,
                rebuttals,
                direction: Direction::Causal,
                diagnostic: None,
            }
        }
        Direction::Diagnostic => {
            if !activation.matched_tables.is_empty() {
                // A joint table has no per-cause decomposition, so it cannot
                // sit behind a single-claim diagnostic frame.
                return Err(Error::NotMergeable {
                    claim: activation.matched_tables[0].effect.clone(),
                    reason: "joint tables argue causally; split the activation first".into(),
                });
            }
            let claim = single_claim(
                &activation.schema,
                activation.matched_links.iter().map(|l| &l.cause),
            )?;
            let mut links = activation.matched_links.clone();
            links.sort_by(|a, b| a.effect.cmp(&b.effect));
            let (s, b) = (links[0].strength_given_cause, links[0].strength_given_not_cause);
            let id = ArgumentFrame::frame_id(&activation.schema, &claim, Direction::Diagnostic);
            for l in &links[1..] {
                if (l.strength_given_cause - s).abs() > STRENGTH_MERGE_TOLERANCE
                    || (l.strength_given_not_cause - b).abs() > STRENGTH_MERGE_TOLERANCE
                {
                    return Err(Error::ConflictingStrengths {
                        claim: claim.clone(),
                        first: id.clone(),
                        second: id,
                    });
                }
            }
            let grounds: Vec<PropId> = links.iter().map(|l| l.effect.clone()).collect();
            let qualifier = emission_qualifier(s, b, grounds.len());
            let lr = if b > 0.0 { s / b } else { f64::INFINITY };
            ArgumentFrame {
                id,
                grounds,
                claim,
                qualifier,
                warrant: activation.schema.clone(),
                backing,
                rebuttals,
                direction: Direction::Diagnostic,
                diagnostic: Some(DiagnosticStrength { lr, baseline: b }),
            }
        }
    };
    frame.validate(kb)?;
    Ok(frame)
}

fn single_claim<'a>(
    schema: &SchemaId,
    mut candidates: impl Iterator<Item = &'a PropId>,
) -> Result<PropId> {
    let first = candidates
        .next()
        .ok_or_else(|| Error::EmptyActivation(schema.clone()))?;
    for c in candidates {
        if c != first {
            let (a, b) = if first < c { (first, c) } else { (c, first) };
            return Err(Error::MultipleClaims {
                schema: schema.clone(),
                first: a.clone(),
                second: b.clone(),
            });
        }
    }
    Ok(first.clone())
}

/// Grounds plus qualifier for a causal claim: either one full table or a set
/// of links merged into a noisy-or, never both.
fn causal_content(
    claim: &PropId,
    links: &[CausalLink],
    tables: &[JointTable],
) -> Result<(Vec<PropId>, Qualifier)> {
    match (links.is_empty(), tables.len()) {
        (false, 0) => {
            let mut links = links.to_vec();
            links.sort_by(|a, b| a.cause.cmp(&b.cause));
            let grounds: Vec<PropId> = links.iter().map(|l| l.cause.clone()).collect();
            Ok((grounds, qualifier_from_causal_strength(&links)?))
        }
        (true, 1) => Ok((
            tables[0].causes.clone(),
            Qualifier::FullTable {
                entries: tables[0].entries.clone(),
            },
        )),
        (true, _) => Err(Error::NotMergeable {
            claim: claim.clone(),
            reason: "several joint tables share the claim".into(),
        }),
        (false, _) => Err(Error::NotMergeable {
            claim: claim.clone(),
            reason: "claim is quantified by both links and a joint table".into(),
        }),
    }
}

/// Emission qualifier for a diagnostic frame over `m` grounds that share one
/// (strength, baseline) pair.
pub(crate) fn emission_qualifier(s: f64, b: f64, m: usize) -> Qualifier {
    if m == 1 {
        Qualifier::FullTable {
            entries: vec![b, s],
        }
    } else {
        Qualifier::NoisyOr {
            links: vec![s; m],
            leak: b,
        }
    }
}

/// Splits an activation into single-claim pieces and builds one frame per
/// claim: causal activations split by effect, diagnostic ones by cause.
/// Joint tables reached backward re-orient into causal frames because a
/// table only quantifies its effect. Output is sorted by frame id.
pub fn frames_from_activation(
    activation: &SchemaActivation,
    kb: &KnowledgeBase,
) -> Result<Vec<ArgumentFrame>> {
    if activation.matched_links.is_empty() && activation.matched_tables.is_empty() {
        return Err(Error::EmptyActivation(activation.schema.clone()));
    }
    let mut frames = Vec::new();
    match activation.direction {
        Direction::Causal => {
            let mut by_effect: BTreeMap<PropId, (Vec<CausalLink>, Vec<JointTable>)> =
                BTreeMap::new();
            for l in &activation.matched_links {
                by_effect.entry(l.effect.clone()).or_default().0.push(l.clone());
            }
            for t in &activation.matched_tables {
                by_effect.entry(t.effect.clone()).or_default().1.push(t.clone());
            }
            for (effect, (links, tables)) in by_effect {
                let triggers: Vec<PropId> = activation
                    .triggers
                    .iter()
                    .filter(|g| {
                        links.iter().any(|l| &&l.cause == g)
                            || tables.iter().any(|t| t.causes.contains(g))
                    })
                    .cloned()
                    .collect();
                let sub = SchemaActivation {
                    schema: activation.schema.clone(),
                    direction: Direction::Causal,
                    matched_links: links,
                    matched_tables: tables,
                    triggers,
                };
                let _ = effect;
                frames.push(construct_argument(&sub, kb)?);
            }
        }
        Direction::Diagnostic => {
            let mut by_cause: BTreeMap<PropId, Vec<CausalLink>> = BTreeMap::new();
            for l in &activation.matched_links {
                by_cause.entry(l.cause.clone()).or_default().push(l.clone());
            }
            for (_, links) in by_cause {
                let sub = SchemaActivation {
                    schema: activation.schema.clone(),
                    direction: Direction::Diagnostic,
                    matched_links: links,
                    matched_tables: Vec::new(),
                    triggers: activation.triggers.clone(),
                };
                frames.push(construct_argument(&sub, kb)?);
            }
            for t in &activation.matched_tables {
                let sub = SchemaActivation {
                    schema: activation.schema.clone(),
                    direction: Direction::Causal,
                    matched_links: Vec::new(),
                    matched_tables: vec![t.clone()],
                    triggers: activation.triggers.clone(),
                };
                frames.push(construct_argument(&sub, kb)?);
            }
        }
    }
    frames.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(frames)
}

/// Merges diagnostic frames that share a warrant and claim into one
/// multi-ground frame. Ten separate "this toss came up heads" arguments for
/// one bias hypothesis collapse into a single frame whose grounds list all
/// ten tosses. Strength pairs must agree to within
/// [`STRENGTH_MERGE_TOLERANCE`]; causal frames pass through untouched.
/// Output is sorted by frame id.
pub fn merge_diagnostic_frames(frames: Vec<ArgumentFrame>) -> Result<Vec<ArgumentFrame>> {
    let mut out: Vec<ArgumentFrame> = Vec::new();
    let mut groups: BTreeMap<ArgumentId, ArgumentFrame> = BTreeMap::new();
    for frame in frames {
        if frame.direction != Direction::Diagnostic {
            out.push(frame);
            continue;
        }
        let (s, b) = frame.emission().ok_or_else(|| Error::NotMergeable {
            claim: frame.claim.clone(),
            reason: "diagnostic frame has no emission pair".into(),
        })?;
        match groups.get_mut(&frame.id) {
            None => {
                groups.insert(frame.id.clone(), frame);
            }
            Some(existing) => {
                let (es, eb) = existing.emission().expect("grouped frame has emission");
                if (es - s).abs() > STRENGTH_MERGE_TOLERANCE
                    || (eb - b).abs() > STRENGTH_MERGE_TOLERANCE
                {
                    return Err(Error::ConflictingStrengths {
                        claim: frame.claim.clone(),
                        first: existing.id.clone(),
                        second: frame.id.clone(),
                    });
                }
                let mut grounds = existing.grounds.clone();
                grounds.extend(frame.grounds.iter().cloned());
                grounds.sort();
                grounds.dedup();
                existing.qualifier = emission_qualifier(es, eb, grounds.len());
                existing.grounds = grounds;
            }
        }
    }
    out.extend(groups.into_values());
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}
