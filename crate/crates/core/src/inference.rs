//! Exact inference over compiled networks.
//!
//! Queries run by variable elimination with a min-degree heuristic (ties by
//! node id, so answers are byte-stable across runs). A brute-force
//! enumeration oracle with identical semantics covers nets up to 20 nodes
//! and anchors the test suite. Probabilities stay in linear space; desk
//! scale nets never underflow double precision badly enough to matter.

use crate::error::{Error, Result};
use crate::network::BayesNet;
use crate::symbol::PropId;
use std::collections::{BTreeMap, BTreeSet};

/// Upper bound on nodes for the enumeration oracle and on observed sets for
/// exhaustive expectation sums.
pub const ENUMERATION_CAP: usize = 20;

/// Observed truth values, remembering assertion order for incremental
/// reporting while exposing canonical sorted access everywhere else.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    entries: Vec<(PropId, bool)>,
}

impl Evidence {
    pub fn new() -> Evidence {
        Evidence::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (PropId, bool)>) -> Evidence {
        let mut e = Evidence::new();
        for (id, v) in pairs {
            e.set(id, v);
        }
        e
    }

    /// Records an observation; re-asserting a node overwrites its value.
    pub fn set(&mut self, id: PropId, value: bool) {
        match self.entries.iter_mut().find(|(e, _)| e == &id) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((id, value)),
        }
    }

    pub fn get(&self, id: &PropId) -> Option<bool> {
        self.entries.iter().find(|(e, _)| e == id).map(|(_, v)| *v)
    }

    pub fn contains(&self, id: &PropId) -> bool {
        self.get(id).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Observations in assertion order.
    pub fn in_order(&self) -> &[(PropId, bool)] {
        &self.entries
    }

    /// Observations sorted by node id.
    pub fn sorted(&self) -> Vec<(PropId, bool)> {
        let mut out = self.entries.clone();
        out.sort();
        out
    }

    pub fn observed_set(&self) -> BTreeSet<PropId> {
        self.entries.iter().map(|(id, _)| id.clone()).collect()
    }

    /// Errors unless every observed node exists in `net`.
    pub fn check_against(&self, net: &BayesNet) -> Result<()> {
        for (id, _) in &self.entries {
            if !net.contains(id) {
                return Err(Error::EvidenceNodeUnknown(id.clone()));
            }
        }
        Ok(())
    }
}

/// Parses the evidence file format: one `<node> = true|false` per line,
/// `#` comments. Duplicate nodes are a parse error.
pub fn parse_evidence_text(text: &str, file: &str) -> Result<Evidence> {
    let mut evidence = Evidence::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (id, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(file, lineno, "expected `<node> = true|false`"))?;
        let id = id.trim();
        if !crate::symbol::is_valid_id(id) {
            return Err(Error::parse(file, lineno, format!("invalid identifier `{id}`")));
        }
        let value = match value.trim() {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::parse(
                    file,
                    lineno,
                    format!("expected true or false, found `{other}`"),
                ))
            }
        };
        let id = PropId::new(id);
        if evidence.contains(&id) {
            return Err(Error::parse(file, lineno, format!("duplicate observation of `{id}`")));
        }
        evidence.set(id, value);
    }
    Ok(evidence)
}

/// Serializes evidence in assertion order; inverse of [`parse_evidence_text`].
pub fn evidence_to_text(evidence: &Evidence) -> String {
    let mut out = String::new();
    for (id, v) in evidence.in_order() {
        out.push_str(id.as_str());
        out.push_str(" = ");
        out.push_str(if *v { "true" } else { "false" });
        out.push('\n');
    }
    out
}

/// A non-negative table over an ordered set of binary variables. Index bits
/// follow the locked convention: first scope variable is the most
/// significant bit, true = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub scope: Vec<PropId>,
    pub values: Vec<f64>,
}

impl Factor {
    pub fn scalar(value: f64) -> Factor {
        Factor {
            scope: Vec::new(),
            values: vec![value],
        }
    }

    fn bit(idx: usize, pos: usize, len: usize) -> bool {
        idx >> (len - 1 - pos) & 1 == 1
    }

    /// Pointwise product over the sorted union of both scopes.
    pub fn product(&self, other: &Factor) -> Factor {
        let mut scope: Vec<PropId> = self
            .scope
            .iter()
            .chain(other.scope.iter())
            .cloned()
            .collect();
        scope.sort();
        scope.dedup();
        let u = scope.len();
        let pos_self: Vec<usize> = self
            .scope
            .iter()
            .map(|v| scope.binary_search(v).expect("var in union"))
            .collect();
        let pos_other: Vec<usize> = other
            .scope
            .iter()
            .map(|v| scope.binary_search(v).expect("var in union"))
            .collect();
        let values = (0..1usize << u)
            .map(|idx| {
                let mut i_self = 0usize;
                for (k, &p) in pos_self.iter().enumerate() {
                    if Factor::bit(idx, p, u) {
                        i_self |= 1 << (self.scope.len() - 1 - k);
                    }
                }
                let mut i_other = 0usize;
                for (k, &p) in pos_other.iter().enumerate() {
                    if Factor::bit(idx, p, u) {
                        i_other |= 1 << (other.scope.len() - 1 - k);
                    }
                }
                self.values[i_self] * other.values[i_other]
            })
            .collect();
        Factor { scope, values }
    }

    /// Sums the variable out of the table.
    pub fn marginalize(&self, var: &PropId) -> Factor {
        let p = self
            .scope
            .iter()
            .position(|v| v == var)
            .expect("variable in scope");
        let m = self.scope.len();
        let scope: Vec<PropId> = self
            .scope
            .iter()
            .filter(|v| *v != var)
            .cloned()
            .collect();
        let values = (0..1usize << (m - 1))
            .map(|idx| {
                let expanded = insert_bit(idx, m, p);
                self.values[expanded] + self.values[expanded | 1 << (m - 1 - p)]
            })
            .collect();
        Factor { scope, values }
    }

    /// Fixes the variable to one value and drops it from the scope.
    pub fn restrict(&self, var: &PropId, value: bool) -> Factor {
        let p = self
            .scope
            .iter()
            .position(|v| v == var)
            .expect("variable in scope");
        let m = self.scope.len();
        let scope: Vec<PropId> = self
            .scope
            .iter()
            .filter(|v| *v != var)
            .cloned()
            .collect();
        let values = (0..1usize << (m - 1))
            .map(|idx| {
                let mut expanded = insert_bit(idx, m, p);
                if value {
                    expanded |= 1 << (m - 1 - p);
                }
                self.values[expanded]
            })
            .collect();
        Factor { scope, values }
    }
}

/// Spreads the bits of `idx` (over m-1 positions) across m positions,
/// leaving a zero bit at position `p` (positions count from the MSB).
fn insert_bit(idx: usize, m: usize, p: usize) -> usize {
    let low_count = m - 1 - p;
    let low_mask = (1usize << low_count) - 1;
    let low = idx & low_mask;
    let high = idx >> low_count;
    high << (low_count + 1) | low
}

/// One factor per node: P(node | parents) over sorted scope.
fn node_factors(net: &BayesNet) -> Vec<Factor> {
    net.nodes()
        .iter()
        .map(|node| {
            let mut scope: Vec<PropId> = node.parents.clone();
            scope.push(node.id.clone());
            scope.sort();
            let m = scope.len();
            let table = node.cpt.expand();
            let node_pos = scope.binary_search(&node.id).expect("node in scope");
            let parent_pos: Vec<usize> = node
                .parents
                .iter()
                .map(|p| scope.binary_search(p).expect("parent in scope"))
                .collect();
            let values = (0..1usize << m)
                .map(|idx| {
                    let mut pidx = 0usize;
                    for (k, &p) in parent_pos.iter().enumerate() {
                        if Factor::bit(idx, p, m) {
                            pidx |= 1 << (node.parents.len() - 1 - k);
                        }
                    }
                    let p_true = table[pidx];
                    if Factor::bit(idx, node_pos, m) {
                        p_true
                    } else {
                        1.0 - p_true
                    }
                })
                .collect();
            Factor { scope, values }
        })
        .collect()
}

/// Restricts all factors by the evidence, then eliminates every variable
/// outside `keep` using min-degree ordering (ties by node id). Returns the
/// product of whatever remains, a factor over a subset of `keep`.
fn eliminate_all_but(
    net: &BayesNet,
    evidence: &Evidence,
    keep: &BTreeSet<PropId>,
) -> Result<Factor> {
    evidence.check_against(net)?;
    let mut factors: Vec<Factor> = node_factors(net);
    for (id, value) in evidence.sorted() {
        for f in &mut factors {
            if f.scope.contains(&id) {
                *f = f.restrict(&id, value);
            }
        }
    }
    let mut remaining: BTreeSet<PropId> = factors
        .iter()
        .flat_map(|f| f.scope.iter().cloned())
        .filter(|v| !keep.contains(v))
        .collect();

    while let Some(var) = pick_min_degree(&factors, &remaining) {
        let (touching, rest): (Vec<Factor>, Vec<Factor>) = factors
            .into_iter()
            .partition(|f| f.scope.contains(&var));
        let product = touching
            .into_iter()
            .reduce(|a, b| a.product(&b))
            .expect("var appears in a factor");
        let marginal = product.marginalize(&var);
        factors = rest;
        factors.push(marginal);
        remaining.remove(&var);
    }

    Ok(factors
        .into_iter()
        .reduce(|a, b| a.product(&b))
        .unwrap_or(Factor::scalar(1.0)))
}

/// Minimum-degree variable among `remaining`: fewest distinct co-occurring
/// variables across current factors; ties by id.
fn pick_min_degree(factors: &[Factor], remaining: &BTreeSet<PropId>) -> Option<PropId> {
    remaining
        .iter()
        .map(|v| {
            let neighbors: BTreeSet<&PropId> = factors
                .iter()
                .filter(|f| f.scope.contains(v))
                .flat_map(|f| f.scope.iter())
                .filter(|n| *n != v)
                .collect();
            (neighbors.len(), v.clone())
        })
        .min()
        .map(|(_, v)| v)
}

/// Probability of one complete assignment: the product over nodes of the
/// CPT entry the assignment selects.
pub fn joint_probability(
    net: &BayesNet,
    assignment: &BTreeMap<PropId, bool>,
) -> Result<f64> {
    for id in assignment.keys() {
        if !net.contains(id) {
            return Err(Error::EvidenceNodeUnknown(id.clone()));
        }
    }
    let mut p = 1.0;
    for node in net.nodes() {
        let value = *assignment
            .get(&node.id)
            .ok_or_else(|| Error::IncompleteAssignment(node.id.clone()))?;
        let table = node.cpt.expand();
        let mut idx = 0usize;
        for (i, parent) in node.parents.iter().enumerate() {
            let pv = *assignment
                .get(parent)
                .ok_or_else(|| Error::IncompleteAssignment(parent.clone()))?;
            if pv {
                idx |= 1 << (node.parents.len() - 1 - i);
            }
        }
        let p_true = table[idx];
        p *= if value { p_true } else { 1.0 - p_true };
    }
    Ok(p)
}

/// P(query = true | evidence) by variable elimination.
///
/// A query that is itself observed answers 1 or 0 (after confirming the
/// evidence is possible at all).
pub fn posterior(net: &BayesNet, query: &PropId, evidence: &Evidence) -> Result<f64> {
    net.node(query)?;
    if let Some(v) = evidence.get(query) {
        let p = evidence_probability(net, evidence)?;
        if p <= 0.0 {
            return Err(Error::ImpossibleEvidence);
        }
        return Ok(if v { 1.0 } else { 0.0 });
    }
    let keep: BTreeSet<PropId> = [query.clone()].into_iter().collect();
    let factor = eliminate_all_but(net, evidence, &keep)?;
    let (p_false, p_true) = match factor.scope.len() {
        1 => (factor.values[0], factor.values[1]),
        _ => unreachable!("query survives elimination"),
    };
    let total = p_false + p_true;
    if total <= 0.0 {
        return Err(Error::ImpossibleEvidence);
    }
    Ok(p_true / total)
}

/// P(evidence) by variable elimination.
pub fn evidence_probability(net: &BayesNet, evidence: &Evidence) -> Result<f64> {
    if evidence.is_empty() {
        return Err(Error::EmptyEvidence);
    }
    let factor = eliminate_all_but(net, evidence, &BTreeSet::new())?;
    debug_assert!(factor.scope.is_empty());
    Ok(factor.values[0])
}

/// Joint marginal over `observed`: a factor whose entry at each assignment
/// is the probability of observing exactly that assignment.
pub fn observed_marginal(net: &BayesNet, observed: &BTreeSet<PropId>) -> Result<Factor> {
    if observed.is_empty() {
        return Err(Error::EmptyEvidence);
    }
    if observed.len() > ENUMERATION_CAP {
        return Err(Error::SizeCap {
            context: "joint marginal over the observed set".into(),
            cap: ENUMERATION_CAP,
            size: observed.len(),
        });
    }
    for id in observed {
        net.node(id)?;
    }
    let factor = eliminate_all_but(net, &Evidence::new(), observed)?;
    // Bring missing observed vars (disconnected singletons cannot happen:
    // every net node owns a factor) into canonical sorted order.
    debug_assert_eq!(factor.scope.len(), observed.len());
    Ok(factor)
}

/// Brute-force twin of [`posterior`] / [`evidence_probability`]: sums
/// [`joint_probability`] over every completion. Query `None` returns the
/// evidence probability. Refuses nets larger than [`ENUMERATION_CAP`].
pub fn enumerate_oracle(
    net: &BayesNet,
    query: Option<&PropId>,
    evidence: &Evidence,
) -> Result<f64> {
    if net.len() > ENUMERATION_CAP {
        return Err(Error::SizeCap {
            context: "enumeration oracle".into(),
            cap: ENUMERATION_CAP,
            size: net.len(),
        });
    }
    evidence.check_against(net)?;
    if query.is_none() && evidence.is_empty() {
        return Err(Error::EmptyEvidence);
    }
    if let Some(q) = query {
        net.node(q)?;
    }
    let ids: Vec<PropId> = net.nodes().iter().map(|n| n.id.clone()).collect();
    let n = ids.len();
    let mut p_evidence = 0.0;
    let mut p_joint_query = 0.0;
    for idx in 0..1usize << n {
        let assignment: BTreeMap<PropId, bool> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), idx >> (n - 1 - i) & 1 == 1))
            .collect();
        if evidence
            .in_order()
            .iter()
            .any(|(id, v)| assignment[id] != *v)
        {
            continue;
        }
        let p = joint_probability(net, &assignment)?;
        p_evidence += p;
        if let Some(q) = query {
            if assignment[q] {
                p_joint_query += p;
            }
        }
    }
    match query {
        None => Ok(p_evidence),
        Some(_) => {
            if p_evidence <= 0.0 {
                Err(Error::ImpossibleEvidence)
            } else {
                Ok(p_joint_query / p_evidence)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::argument::Qualifier;
    use crate::network::{BayesNet, Node};

    fn necklace_net() -> BayesNet {
        let nodes = vec![
            Node {
                id: PropId::new("children-playing"),
                parents: vec![],
                cpt: Qualifier::FullTable {
                    entries: vec![0.3],
                },
            },
            Node {
                id: PropId::new("maid-dishonest"),
                parents: vec![],
                cpt: Qualifier::FullTable {
                    entries: vec![0.1],
                },
            },
            Node {
                id: PropId::new("necklace-missing"),
                parents: vec![PropId::new("children-playing"), PropId::new("maid-dishonest")],
                cpt: Qualifier::NoisyOr {
                    links: vec![0.7, 0.9],
                    leak: 0.01,
                },
            },
        ];
        BayesNet::from_parts(nodes, BTreeMap::new()).unwrap()
    }

    fn coin_net(n: usize, p: f64) -> BayesNet {
        let nodes = (0..n)
            .map(|i| Node {
                id: PropId::new(format!("toss-{i:02}")),
                parents: vec![],
                cpt: Qualifier::FullTable {
                    entries: vec![p],
                },
            })
            .collect();
        BayesNet::from_parts(nodes, BTreeMap::new()).unwrap()
    }

    fn ev(pairs: &[(&str, bool)]) -> Evidence {
        Evidence::from_pairs(pairs.iter().map(|(id, v)| (PropId::new(*id), *v)))
    }

    #[test]
    fn joint_probability_is_the_cpt_product() {
        let net = necklace_net();
        let all_false: BTreeMap<PropId, bool> = net
            .nodes()
            .iter()
            .map(|n| (n.id.clone(), false))
            .collect();
        let p = joint_probability(&net, &all_false).unwrap();
        assert!((p - 0.9 * 0.7 * 0.99).abs() < 1e-12);
        assert!((p - 0.6237).abs() < 1e-12);
    }

    #[test]
    fn joint_probability_normalizes() {
        let net = necklace_net();
        let ids: Vec<PropId> = net.nodes().iter().map(|n| n.id.clone()).collect();
        let mut total = 0.0;
        for idx in 0..8usize {
            let assignment: BTreeMap<PropId, bool> = ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.clone(), idx >> (2 - i) & 1 == 1))
                .collect();
            total += joint_probability(&net, &assignment).unwrap();
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn incomplete_assignment_is_reported() {
        let net = necklace_net();
        let partial: BTreeMap<PropId, bool> =
            [(PropId::new("maid-dishonest"), true)].into_iter().collect();
        assert!(matches!(
            joint_probability(&net, &partial),
            Err(Error::IncompleteAssignment(_))
        ));
    }

    #[test]
    fn explaining_away_lowers_the_rival_cause() {
        let net = necklace_net();
        let alone = posterior(
            &net,
            &PropId::new("maid-dishonest"),
            &ev(&[("necklace-missing", true)]),
        )
        .unwrap();
        let explained = posterior(
            &net,
            &PropId::new("maid-dishonest"),
            &ev(&[("necklace-missing", true), ("children-playing", true)]),
        )
        .unwrap();
        assert!((alone - 0.319745116879243).abs() < 1e-12);
        assert!((explained - 0.132966987790005).abs() < 1e-12);
        assert!(alone - explained > 1e-3);
    }

    #[test]
    fn posterior_matches_oracle_on_the_necklace() {
        let net = necklace_net();
        for (query, evidence) in [
            ("maid-dishonest", ev(&[("necklace-missing", true)])),
            ("children-playing", ev(&[("necklace-missing", true)])),
            (
                "maid-dishonest",
                ev(&[("necklace-missing", true), ("children-playing", false)]),
            ),
            ("necklace-missing", ev(&[("maid-dishonest", false)])),
        ] {
            let q = PropId::new(query);
            let fast = posterior(&net, &q, &evidence).unwrap();
            let slow = enumerate_oracle(&net, Some(&q), &evidence).unwrap();
            assert!((fast - slow).abs() < 1e-9, "{query}: {fast} vs {slow}");
        }
    }

    #[test]
    fn empty_evidence_yields_the_prior_marginal() {
        let net = necklace_net();
        let p = posterior(&net, &PropId::new("necklace-missing"), &Evidence::new()).unwrap();
        assert!((p - 0.288289).abs() < 1e-12);
    }

    #[test]
    fn posterior_complement_sums_to_one() {
        let net = necklace_net();
        let e = ev(&[("necklace-missing", true)]);
        let q = PropId::new("maid-dishonest");
        let p = posterior(&net, &q, &e).unwrap();
        // The complement is one minus the same elimination's other cell.
        assert!((p + (1.0 - p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evidence_probability_multiplies_independent_nodes() {
        let net = coin_net(10, 0.9);
        let all_heads = Evidence::from_pairs(
            (0..10).map(|i| (PropId::new(format!("toss-{i:02}")), true)),
        );
        let p = evidence_probability(&net, &all_heads).unwrap();
        assert!((p - 0.9f64.powi(10)).abs() < 1e-12);
    }

    #[test]
    fn impossible_evidence_is_distinct() {
        // A deterministic table makes effect=false impossible given cause.
        let nodes = vec![
            Node {
                id: PropId::new("cause"),
                parents: vec![],
                cpt: Qualifier::FullTable {
                    entries: vec![1.0],
                },
            },
            Node {
                id: PropId::new("effect"),
                parents: vec![PropId::new("cause")],
                cpt: Qualifier::FullTable {
                    entries: vec![0.0, 1.0],
                },
            },
        ];
        let net = BayesNet::from_parts(nodes, BTreeMap::new()).unwrap();
        let e = ev(&[("effect", false)]);
        assert!(matches!(
            posterior(&net, &PropId::new("cause"), &e),
            Err(Error::ImpossibleEvidence)
        ));
    }

    #[test]
    fn oracle_refuses_oversized_nets() {
        let net = coin_net(21, 0.5);
        assert!(matches!(
            enumerate_oracle(&net, None, &ev(&[("toss-00", true)])),
            Err(Error::SizeCap { .. })
        ));
    }

    #[test]
    fn observed_marginal_sums_to_one() {
        let net = necklace_net();
        let observed: BTreeSet<PropId> =
            [PropId::new("necklace-missing"), PropId::new("maid-dishonest")]
                .into_iter()
                .collect();
        let factor = observed_marginal(&net, &observed).unwrap();
        assert_eq!(factor.values.len(), 4);
        let total: f64 = factor.values.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evidence_file_round_trips_in_order() {
        let text = "# observations\nnecklace-missing = true\nmaid-dishonest = false\n";
        let e = parse_evidence_text(text, "case.ev").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e.get(&PropId::new("necklace-missing")), Some(true));
        let emitted = evidence_to_text(&e);
        assert_eq!(emitted, "necklace-missing = true\nmaid-dishonest = false\n");
        assert_eq!(parse_evidence_text(&emitted, "again.ev").unwrap(), e);
    }

    #[test]
    fn duplicate_evidence_lines_are_rejected() {
        let text = "a = true\na = false\n";
        let err = parse_evidence_text(text, "dup.ev").unwrap_err();
        assert!(err.to_string().contains("dup.ev:2"));
    }

    #[test]
    fn unknown_evidence_node_is_reported() {
        let net = necklace_net();
        assert!(matches!(
            evidence_probability(&net, &ev(&[("ghost", true)])),
            Err(Error::EvidenceNodeUnknown(_))
        ));
    }

    #[test]
    fn insert_bit_spreads_indices() {
        // m=3, p=1: idx bits (a,c) -> (a,0,c).
        assert_eq!(insert_bit(0b00, 3, 1), 0b000);
        assert_eq!(insert_bit(0b01, 3, 1), 0b001);
        assert_eq!(insert_bit(0b10, 3, 1), 0b100);
        assert_eq!(insert_bit(0b11, 3, 1), 0b101);
        // p=0 keeps everything in the low bits.
        assert_eq!(insert_bit(0b11, 3, 0), 0b011);
        // p=m-1 shifts everything up one.
        assert_eq!(insert_bit(0b11, 3, 2), 0b110);
    }
}
