//! Schema knowledge base: the declarative causal knowledge the engine draws
//! on when it assembles a model.
//!
//! A knowledge base holds propositions (each pinned to a causal tier),
//! schemata made of causal links and joint tables, implicit exceptions kept
//! enumerable next to the links they guard, optional backing schema sets, and
//! prior assignments for root causes. Activation is a pure lookup: matching
//! by cause gives forward (causal) activations, matching by effect gives
//! backward (diagnostic) ones. Nothing here mutates the base.

mod parse;

pub use parse::{load_kb, parse_kb};

use crate::argument::Direction;
use crate::error::{Error, Result};
use crate::symbol::{PropId, SchemaId, SchemaSetId};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Priors assigned to one proposition by different schemata must agree within
/// this tolerance, otherwise the base is rejected as inconsistent.
pub const PRIOR_AGREEMENT_TOLERANCE: f64 = 1e-12;

/// How many layers of backing schema sets a background expansion follows.
pub const DEFAULT_BACKING_DEPTH: usize = 1;

/// A named binary proposition with its global causal tier.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposition {
    pub id: PropId,
    pub label: String,
    /// Causal links must ascend tiers strictly, which rules cycles out at
    /// load time rather than at compile time.
    pub causal_tier: u32,
}

/// Directed causal influence with both conditional strengths.
///
/// `strength_given_cause` is P(effect | cause present, others absent) less
/// leak interaction; `strength_given_not_cause` is the baseline
/// P(effect | cause absent) and doubles as the leak when links merge.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalLink {
    pub cause: PropId,
    pub effect: PropId,
    pub strength_given_cause: f64,
    pub strength_given_not_cause: f64,
}

/// A full joint table over a fixed cause set, for effects whose interaction
/// cannot be factored into independent link strengths.
///
/// `entries[i]` is P(effect | causes) where `i` reads the causes as bits,
/// first cause most significant, true = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub causes: Vec<PropId>,
    pub effect: PropId,
    pub entries: Vec<f64>,
}

/// An enumerable exception a schema knows about but does not model by
/// default. `exportable` exceptions ride along on exported frames as
/// rebuttals; the rest stay behind until a revision pass promotes them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionDescriptor {
    pub proposition: PropId,
    pub links: Vec<CausalLink>,
    pub exportable: bool,
}

/// A causal schema: the unit of activation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schema {
    pub id: SchemaId,
    pub links: Vec<CausalLink>,
    pub tables: Vec<JointTable>,
    pub implicit_exceptions: Vec<ExceptionDescriptor>,
    /// Propositions that must hold for the schema's warrant to apply;
    /// evidence against one marks exported arguments warrant-invalid.
    pub preconditions: Vec<PropId>,
    pub backing: Option<SchemaSetId>,
    pub prior_assignments: BTreeMap<PropId, f64>,
}

impl Schema {
    /// Propositions this schema's links and tables mention.
    pub fn model_propositions(&self) -> BTreeSet<PropId> {
        let mut out = BTreeSet::new();
        for link in &self.links {
            out.insert(link.cause.clone());
            out.insert(link.effect.clone());
        }
        for table in &self.tables {
            out.extend(table.causes.iter().cloned());
            out.insert(table.effect.clone());
        }
        out
    }
}

/// Index from proposition to the schemata mentioning it as cause or effect.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KbIndex {
    pub by_cause: BTreeMap<PropId, BTreeSet<SchemaId>>,
    pub by_effect: BTreeMap<PropId, BTreeSet<SchemaId>>,
}

/// The loaded knowledge base. Construct with [`KnowledgeBase::new`] so the
/// consistency checks always run.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    propositions: BTreeMap<PropId, Proposition>,
    schemata: BTreeMap<SchemaId, Schema>,
    schema_sets: BTreeMap<SchemaSetId, Vec<SchemaId>>,
    priors: BTreeMap<PropId, f64>,
    index: KbIndex,
}

/// Which layer of exceptions an expansion asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExceptionTier {
    /// The exceptions enumerated on the schema itself.
    Implicit,
    /// Propositions contributed by the backing schema set.
    Background,
}

/// One schema matched during activation, with the links and tables that
/// fired and the propositions that triggered the match.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaActivation {
    pub schema: SchemaId,
    pub direction: Direction,
    pub matched_links: Vec<CausalLink>,
    pub matched_tables: Vec<JointTable>,
    pub triggers: Vec<PropId>,
}

impl KnowledgeBase {
    /// Validates and indexes the parts of a knowledge base.
    pub fn new(
        propositions: Vec<Proposition>,
        schemata: Vec<Schema>,
        schema_sets: BTreeMap<SchemaSetId, Vec<SchemaId>>,
    ) -> Result<Self> {
        let mut prop_map = BTreeMap::new();
        for p in propositions {
            if prop_map.insert(p.id.clone(), p.clone()).is_some() {
                return Err(Error::Parse {
                    file: String::new(),
                    line: 0,
                    message: format!("duplicate proposition `{}`", p.id),
                });
            }
        }
        let mut schema_map = BTreeMap::new();
        for s in schemata {
            if schema_map.insert(s.id.clone(), s.clone()).is_some() {
                return Err(Error::Parse {
                    file: String::new(),
                    line: 0,
                    message: format!("duplicate schema `{}`", s.id),
                });
            }
        }
        let mut kb = KnowledgeBase {
            propositions: prop_map,
            schemata: schema_map,
            schema_sets,
            priors: BTreeMap::new(),
            index: KbIndex::default(),
        };
        kb.validate()?;
        kb.priors = kb.collect_priors()?;
        kb.index = kb.build_index();
        Ok(kb)
    }

    pub fn propositions(&self) -> impl Iterator<Item = &Proposition> {
        self.propositions.values()
    }

    pub fn schemata(&self) -> impl Iterator<Item = &Schema> {
        self.schemata.values()
    }

    pub fn schema_sets(&self) -> &BTreeMap<SchemaSetId, Vec<SchemaId>> {
        &self.schema_sets
    }

    pub fn proposition(&self, id: &PropId) -> Result<&Proposition> {
        self.propositions
            .get(id)
            .ok_or_else(|| Error::UnknownProposition(id.clone()))
    }

    pub fn schema(&self, id: &SchemaId) -> Result<&Schema> {
        self.schemata
            .get(id)
            .ok_or_else(|| Error::UnknownSchema(id.clone()))
    }

    pub fn tier(&self, id: &PropId) -> Result<u32> {
        Ok(self.proposition(id)?.causal_tier)
    }

    /// Merged prior for a proposition, if any schema assigns one.
    pub fn prior_of(&self, id: &PropId) -> Option<f64> {
        self.priors.get(id).copied()
    }

    pub fn index(&self) -> &KbIndex {
        &self.index
    }

    /// Recomputes the cause/effect index from the schemata. The stored index
    /// is always equal to this; the operation exists so that can be audited.
    pub fn build_index(&self) -> KbIndex {
        let mut index = KbIndex::default();
        for (sid, schema) in &self.schemata {
            for link in &schema.links {
                index
                    .by_cause
                    .entry(link.cause.clone())
                    .or_default()
                    .insert(sid.clone());
                index
                    .by_effect
                    .entry(link.effect.clone())
                    .or_default()
                    .insert(sid.clone());
            }
            for table in &schema.tables {
                for cause in &table.causes {
                    index
                        .by_cause
                        .entry(cause.clone())
                        .or_default()
                        .insert(sid.clone());
                }
                index
                    .by_effect
                    .entry(table.effect.clone())
                    .or_default()
                    .insert(sid.clone());
            }
        }
        index
    }

    fn check_probability(&self, value: f64, context: String) -> Result<()> {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(Error::ProbabilityRange { value, context });
        }
        Ok(())
    }

    fn check_link(&self, schema: &SchemaId, link: &CausalLink) -> Result<()> {
        let cause_tier = self.tier(&link.cause)?;
        let effect_tier = self.tier(&link.effect)?;
        if cause_tier >= effect_tier {
            return Err(Error::TierViolation {
                cause: link.cause.clone(),
                effect: link.effect.clone(),
                cause_tier,
                effect_tier,
            });
        }
        self.check_probability(
            link.strength_given_cause,
            format!("link {} -> {} in schema `{schema}`", link.cause, link.effect),
        )?;
        self.check_probability(
            link.strength_given_not_cause,
            format!("link {} -> {} in schema `{schema}`", link.cause, link.effect),
        )
    }

    fn validate(&self) -> Result<()> {
        for schema in self.schemata.values() {
            let model_props = schema.model_propositions();
            let mut seen_pairs = BTreeSet::new();
            for link in &schema.links {
                self.check_link(&schema.id, link)?;
                if !seen_pairs.insert((link.cause.clone(), link.effect.clone())) {
                    return Err(Error::Parse {
                        file: String::new(),
                        line: 0,
                        message: format!(
                            "schema `{}` repeats link {} -> {}",
                            schema.id, link.cause, link.effect
                        ),
                    });
                }
            }
            for table in &schema.tables {
                let expected = 1usize << table.causes.len();
                if table.entries.len() != expected {
                    return Err(Error::TableArity {
                        node: table.effect.clone(),
                        expected,
                        found: table.entries.len(),
                    });
                }
                let mut sorted = table.causes.clone();
                sorted.sort();
                sorted.dedup();
                if sorted != table.causes {
                    return Err(Error::Parse {
                        file: String::new(),
                        line: 0,
                        message: format!(
                            "table for `{}` in schema `{}` must list distinct causes in sorted order",
                            table.effect, schema.id
                        ),
                    });
                }
                let effect_tier = self.tier(&table.effect)?;
                for cause in &table.causes {
                    let cause_tier = self.tier(cause)?;
                    if cause_tier >= effect_tier {
                        return Err(Error::TierViolation {
                            cause: cause.clone(),
                            effect: table.effect.clone(),
                            cause_tier,
                            effect_tier,
                        });
                    }
                }
                for (i, entry) in table.entries.iter().enumerate() {
                    self.check_probability(
                        *entry,
                        format!(
                            "table entry {i} for `{}` in schema `{}`",
                            table.effect, schema.id
                        ),
                    )?;
                }
            }
            for exc in &schema.implicit_exceptions {
                self.proposition(&exc.proposition)?;
                if model_props.contains(&exc.proposition) {
                    return Err(Error::Parse {
                        file: String::new(),
                        line: 0,
                        message: format!(
                            "implicit exception `{}` already appears in the links of schema `{}`",
                            exc.proposition, schema.id
                        ),
                    });
                }
                for link in &exc.links {
                    self.check_link(&schema.id, link)?;
                }
            }
            for pre in &schema.preconditions {
                self.proposition(pre)?;
            }
            for (prop, prior) in &schema.prior_assignments {
                self.proposition(prop)?;
                self.check_probability(
                    *prior,
                    format!("prior for `{prop}` in schema `{}`", schema.id),
                )?;
            }
            if let Some(backing) = &schema.backing {
                if !self.schema_sets.contains_key(backing) {
                    return Err(Error::UnknownSchemaSet(backing.clone()));
                }
            }
        }
        for (set_id, members) in &self.schema_sets {
            for member in members {
                if !self.schemata.contains_key(member) {
                    return Err(Error::Parse {
                        file: String::new(),
                        line: 0,
                        message: format!(
                            "schema set `{set_id}` lists unknown schema `{member}`"
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    fn collect_priors(&self) -> Result<BTreeMap<PropId, f64>> {
        let mut priors: BTreeMap<PropId, f64> = BTreeMap::new();
        for schema in self.schemata.values() {
            for (prop, value) in &schema.prior_assignments {
                match priors.get(prop) {
                    Some(existing) if (existing - value).abs() > PRIOR_AGREEMENT_TOLERANCE => {
                        return Err(Error::Parse {
                            file: String::new(),
                            line: 0,
                            message: format!(
                                "conflicting priors for `{prop}`: {existing} vs {value}"
                            ),
                        });
                    }
                    Some(_) => {}
                    None => {
                        priors.insert(prop.clone(), *value);
                    }
                }
            }
        }
        Ok(priors)
    }
}

/// Forward (causal) activation: every schema with a link or table whose cause
/// lies in `grounds` fires once, carrying exactly the matched pieces.
pub fn activate_forward(
    kb: &KnowledgeBase,
    grounds: &BTreeSet<PropId>,
) -> Result<Vec<SchemaActivation>> {
    for g in grounds {
        kb.proposition(g)?;
    }
    let mut out = Vec::new();
    for schema in kb.schemata() {
        let matched_links: Vec<CausalLink> = schema
            .links
            .iter()
            .filter(|l| grounds.contains(&l.cause))
            .cloned()
            .collect();
        let matched_tables: Vec<JointTable> = schema
            .tables
            .iter()
            .filter(|t| t.causes.iter().any(|c| grounds.contains(c)))
            .cloned()
            .collect();
        if matched_links.is_empty() && matched_tables.is_empty() {
            continue;
        }
        let mut triggers: Vec<PropId> = grounds
            .iter()
            .filter(|g| {
                matched_links.iter().any(|l| &&l.cause == g)
                    || matched_tables.iter().any(|t| t.causes.contains(g))
            })
            .cloned()
            .collect();
        triggers.sort();
        out.push(SchemaActivation {
            schema: schema.id.clone(),
            direction: Direction::Causal,
            matched_links,
            matched_tables,
            triggers,
        });
    }
    Ok(out)
}

/// Backward (diagnostic) activation: every schema with a link or table whose
/// effect is `claim` fires once.
pub fn activate_backward(kb: &KnowledgeBase, claim: &PropId) -> Result<Vec<SchemaActivation>> {
    kb.proposition(claim)?;
    let mut out = Vec::new();
    for schema in kb.schemata() {
        let matched_links: Vec<CausalLink> = schema
            .links
            .iter()
            .filter(|l| &l.effect == claim)
            .cloned()
            .collect();
        let matched_tables: Vec<JointTable> = schema
            .tables
            .iter()
            .filter(|t| &t.effect == claim)
            .cloned()
            .collect();
        if matched_links.is_empty() && matched_tables.is_empty() {
            continue;
        }
        out.push(SchemaActivation {
            schema: schema.id.clone(),
            direction: Direction::Diagnostic,
            matched_links,
            matched_tables,
            triggers: vec![claim.clone()],
        });
    }
    Ok(out)
}

/// Enumerates the requested exception layer for one schema.
///
/// Implicit exceptions are returned verbatim. Background expansion activates
/// the backing schema set (following nested backings up to
/// [`DEFAULT_BACKING_DEPTH`]) and reports every linked proposition the
/// caller's own links do not already mention, with the link fragments that
/// would attach it.
pub fn expand_exceptions(
    kb: &KnowledgeBase,
    schema_id: &SchemaId,
    tier: ExceptionTier,
) -> Result<Vec<ExceptionDescriptor>> {
    expand_exceptions_with_depth(kb, schema_id, tier, DEFAULT_BACKING_DEPTH)
}

/// [`expand_exceptions`] with an explicit recursion depth for backing sets.
pub fn expand_exceptions_with_depth(
    kb: &KnowledgeBase,
    schema_id: &SchemaId,
    tier: ExceptionTier,
    depth: usize,
) -> Result<Vec<ExceptionDescriptor>> {
    let schema = kb.schema(schema_id)?;
    match tier {
        ExceptionTier::Implicit => Ok(schema.implicit_exceptions.clone()),
        ExceptionTier::Background => {
            let backing = schema
                .backing
                .clone()
                .ok_or_else(|| Error::NoBacking(schema_id.clone()))?;
            let caller_props = schema.model_propositions();
            let mut fragments: BTreeMap<PropId, Vec<CausalLink>> = BTreeMap::new();
            collect_backing_links(kb, &backing, depth, &caller_props, &mut fragments)?;
            Ok(fragments
                .into_iter()
                .map(|(proposition, mut links)| {
                    links.sort_by(|a, b| {
                        (&a.cause, &a.effect).cmp(&(&b.cause, &b.effect))
                    });
                    links.dedup();
                    ExceptionDescriptor {
                        proposition,
                        links,
                        exportable: false,
                    }
                })
                .collect())
        }
    }
}

fn collect_backing_links(
    kb: &KnowledgeBase,
    set_id: &SchemaSetId,
    depth: usize,
    caller_props: &BTreeSet<PropId>,
    fragments: &mut BTreeMap<PropId, Vec<CausalLink>>,
) -> Result<()> {
    if depth == 0 {
        return Ok(());
    }
    let members = kb
        .schema_sets
        .get(set_id)
        .ok_or_else(|| Error::UnknownSchemaSet(set_id.clone()))?;
    for member in members {
        let schema = kb.schema(member)?;
        for link in &schema.links {
            for prop in [&link.cause, &link.effect] {
                if !caller_props.contains(prop) {
                    fragments
                        .entry(prop.clone())
                        .or_default()
                        .push(link.clone());
                }
            }
        }
        if let Some(nested) = &schema.backing {
            collect_backing_links(kb, nested, depth - 1, caller_props, fragments)?;
        }
    }
    Ok(())
}

impl fmt::Display for KnowledgeBase {
    /// Canonical textual form: sorted sections that [`parse_kb`] reads back
    /// into an equal base.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[propositions]")?;
        for p in self.propositions.values() {
            if p.label == p.id.as_str() {
                writeln!(f, "{} {}", p.id, p.causal_tier)?;
            } else {
                writeln!(f, "{} {} {}", p.id, p.causal_tier, p.label)?;
            }
        }
        for schema in self.schemata.values() {
            writeln!(f)?;
            writeln!(f, "[schema {}]", schema.id)?;
            for link in &schema.links {
                writeln!(
                    f,
                    "link {} -> {} : {} {}",
                    link.cause, link.effect, link.strength_given_cause, link.strength_given_not_cause
                )?;
            }
            for table in &schema.tables {
                let causes: Vec<&str> = table.causes.iter().map(PropId::as_str).collect();
                let entries: Vec<String> = table.entries.iter().map(f64::to_string).collect();
                writeln!(
                    f,
                    "table {} | {} : {}",
                    table.effect,
                    causes.join(" "),
                    entries.join(" ")
                )?;
            }
            for (prop, prior) in &schema.prior_assignments {
                writeln!(f, "prior {prop} : {prior}")?;
            }
            for exc in &schema.implicit_exceptions {
                for link in &exc.links {
                    writeln!(
                        f,
                        "implicit_exception {}{} : link {} -> {} : {} {}",
                        exc.proposition,
                        if exc.exportable { " exportable" } else { "" },
                        link.cause,
                        link.effect,
                        link.strength_given_cause,
                        link.strength_given_not_cause
                    )?;
                }
            }
            for pre in &schema.preconditions {
                writeln!(f, "precondition {pre}")?;
            }
            if let Some(backing) = &schema.backing {
                writeln!(f, "backing {backing}")?;
            }
        }
        for (set_id, members) in &self.schema_sets {
            writeln!(f)?;
            writeln!(f, "[schema-set {set_id}]")?;
            for member in members {
                writeln!(f, "member {member}")?;
            }
        }
        Ok(())
    }
}
