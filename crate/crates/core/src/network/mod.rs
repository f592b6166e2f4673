//! Compiles argument frames into a causally ordered Bayesian network.
//!
//! Node identity is proposition identity: every frame that mentions a
//! proposition contributes to the same node. Frames are oriented along the
//! causal tiers no matter which direction they were argued in, co-claim
//! contributions merge by noisy-or where that is well defined, and
//! parentless nodes draw their priors from the knowledge base.

mod format;

pub use format::{parse_net_text, to_dot, to_net_text};

use crate::argument::{ArgumentFrame, Direction, Qualifier, LEAK_AGREEMENT_TOLERANCE, STRENGTH_MERGE_TOLERANCE};
use crate::error::{Error, Result};
use crate::schema_kb::KnowledgeBase;
use crate::symbol::{ArgumentId, PropId};
use std::collections::{BTreeMap, BTreeSet};

/// One binary variable: its sorted parent list and conditional content.
/// The CPT is indexed by the parents read as bits, first parent most
/// significant, true = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: PropId,
    pub parents: Vec<PropId>,
    pub cpt: Qualifier,
}

/// A directed acyclic network of binary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    nodes: Vec<Node>,
    index: BTreeMap<PropId, usize>,
    provenance: BTreeMap<PropId, Vec<ArgumentId>>,
}

impl BayesNet {
    /// Low-level constructor; checks local shape (parents exist, sorted,
    /// distinct; CPT arity and ranges) but not acyclicity, so tests can
    /// build deliberately cyclic graphs for [`check_causal_order`].
    pub fn from_parts(
        mut nodes: Vec<Node>,
        provenance: BTreeMap<PropId, Vec<ArgumentId>>,
    ) -> Result<BayesNet> {
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let ids: BTreeSet<PropId> = nodes.iter().map(|n| n.id.clone()).collect();
        if ids.len() != nodes.len() {
            let dup = nodes
                .windows(2)
                .find(|w| w[0].id == w[1].id)
                .expect("duplicate exists")[0]
                .id
                .clone();
            return Err(Error::NotMergeable {
                claim: dup,
                reason: "two node records share one proposition".into(),
            });
        }
        for node in &nodes {
            let mut sorted = node.parents.clone();
            sorted.sort();
            sorted.dedup();
            if sorted != node.parents {
                return Err(Error::NotMergeable {
                    claim: node.id.clone(),
                    reason: "parent list must be distinct and sorted".into(),
                });
            }
            for p in &node.parents {
                if !ids.contains(p) {
                    return Err(Error::UnknownProposition(p.clone()));
                }
            }
            if node.parents.contains(&node.id) {
                return Err(Error::Cycle(vec![node.id.clone(), node.id.clone()]));
            }
            node.cpt.validate(node.parents.len(), &node.id)?;
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        Ok(BayesNet {
            nodes,
            index,
            provenance,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, id: &PropId) -> bool {
        self.index.contains_key(id)
    }

    pub fn node(&self, id: &PropId) -> Result<&Node> {
        self.index
            .get(id)
            .map(|&i| &self.nodes[i])
            .ok_or_else(|| Error::EvidenceNodeUnknown(id.clone()))
    }

    /// Arguments that contributed each node, keyed by proposition.
    pub fn provenance(&self) -> &BTreeMap<PropId, Vec<ArgumentId>> {
        &self.provenance
    }

    /// All arcs as (parent, child) pairs, sorted.
    pub fn arcs(&self) -> Vec<(PropId, PropId)> {
        let mut out: Vec<(PropId, PropId)> = self
            .nodes
            .iter()
            .flat_map(|n| n.parents.iter().map(|p| (p.clone(), n.id.clone())))
            .collect();
        out.sort();
        out
    }

    /// Total count of stored conditional probabilities, 2^m per family.
    pub fn table_entry_count(&self) -> usize {
        self.nodes.iter().map(|n| 1usize << n.parents.len()).sum()
    }
}

/// One causally oriented CPT contribution to a single child node.
struct Contribution {
    argument: ArgumentId,
    parents: Vec<PropId>,
    qualifier: Qualifier,
}

/// Compiles frames into a network. Diagnostic frames are re-oriented so
/// each arc runs cause to effect; co-claim contributions merge by noisy-or;
/// parentless propositions take their priors from `kb`.
pub fn compile(frames: &[ArgumentFrame], kb: &KnowledgeBase) -> Result<BayesNet> {
    if frames.is_empty() {
        return Err(Error::NoFrames);
    }
    let mut families: BTreeMap<PropId, Vec<Contribution>> = BTreeMap::new();
    let mut provenance: BTreeMap<PropId, BTreeSet<ArgumentId>> = BTreeMap::new();
    let mut mentioned: BTreeSet<PropId> = BTreeSet::new();

    for frame in frames {
        frame.validate(kb)?;
        mentioned.insert(frame.claim.clone());
        mentioned.extend(frame.grounds.iter().cloned());
        for prop in std::iter::once(&frame.claim).chain(frame.grounds.iter()) {
            provenance
                .entry(prop.clone())
                .or_default()
                .insert(frame.id.clone());
        }
        match frame.direction {
            Direction::Causal => {
                families.entry(frame.claim.clone()).or_default().push(Contribution {
                    argument: frame.id.clone(),
                    parents: frame.grounds.clone(),
                    qualifier: frame.qualifier.clone(),
                });
            }
            Direction::Diagnostic => {
                // Each observed effect gets its own emission family with the
                // claim as sole parent; topology matches the causal reading.
                let pairs: Vec<(f64, f64)> = match &frame.qualifier {
                    Qualifier::FullTable { entries } => vec![(entries[1], entries[0])],
                    Qualifier::NoisyOr { links, leak } => {
                        links.iter().map(|&s| (s, *leak)).collect()
                    }
                };
                for (ground, (s, b)) in frame.grounds.iter().zip(pairs) {
                    families.entry(ground.clone()).or_default().push(Contribution {
                        argument: frame.id.clone(),
                        parents: vec![frame.claim.clone()],
                        qualifier: Qualifier::FullTable {
                            entries: vec![b, s],
                        },
                    });
                }
            }
        }
    }

    let mut nodes = Vec::new();
    for (child, contributions) in &families {
        let (parents, cpt) = merge_contributions(child, contributions)?;
        for p in &parents {
            let (pt, ct) = (kb.tier(p)?, kb.tier(child)?);
            if pt >= ct {
                return Err(Error::TierViolation {
                    cause: p.clone(),
                    effect: child.clone(),
                    cause_tier: pt,
                    effect_tier: ct,
                });
            }
        }
        nodes.push(Node {
            id: child.clone(),
            parents,
            cpt,
        });
    }
    for prop in &mentioned {
        if !families.contains_key(prop) {
            let prior = kb
                .prior_of(prop)
                .ok_or_else(|| Error::MissingPrior(prop.clone()))?;
            nodes.push(Node {
                id: prop.clone(),
                parents: Vec::new(),
                cpt: Qualifier::FullTable {
                    entries: vec![prior],
                },
            });
        }
    }

    let provenance = provenance
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().collect()))
        .collect();
    let net = BayesNet::from_parts(nodes, provenance)?;
    check_causal_order(&net)?;
    Ok(net)
}

/// Merges co-claim contributions into one family. Identical contributions
/// deduplicate; otherwise everything must be noisy-or convertible and the
/// factors combine over the union of parents.
fn merge_contributions(
    child: &PropId,
    contributions: &[Contribution],
) -> Result<(Vec<PropId>, Qualifier)> {
    assert!(!contributions.is_empty());
    if contributions.len() == 1 {
        let c = &contributions[0];
        return Ok((c.parents.clone(), c.qualifier.clone()));
    }
    let first = &contributions[0];
    if contributions[1..]
        .iter()
        .all(|c| c.parents == first.parents && c.qualifier == first.qualifier)
    {
        return Ok((first.parents.clone(), first.qualifier.clone()));
    }

    // Heterogeneous: noisy-or merge or nothing.
    let mut links: BTreeMap<PropId, (f64, ArgumentId)> = BTreeMap::new();
    let mut leaks: Vec<f64> = Vec::new();
    for c in contributions {
        let per_parent: Vec<(PropId, f64)> = match &c.qualifier {
            Qualifier::NoisyOr {
                links: strengths,
                leak,
            } => {
                leaks.push(*leak);
                c.parents.iter().cloned().zip(strengths.iter().copied()).collect()
            }
            Qualifier::FullTable { entries } if entries.len() == 2 => {
                leaks.push(entries[0]);
                vec![(c.parents[0].clone(), entries[1])]
            }
            Qualifier::FullTable { .. } => {
                let other = contributions
                    .iter()
                    .find(|o| o.argument != c.argument)
                    .unwrap_or(c);
                return Err(Error::ConflictingStrengths {
                    claim: child.clone(),
                    first: other.argument.clone(),
                    second: c.argument.clone(),
                });
            }
        };
        for (parent, strength) in per_parent {
            match links.get(&parent) {
                None => {
                    links.insert(parent, (strength, c.argument.clone()));
                }
                Some((existing, owner)) => {
                    if (existing - strength).abs() > STRENGTH_MERGE_TOLERANCE {
                        return Err(Error::ConflictingStrengths {
                            claim: child.clone(),
                            first: owner.clone(),
                            second: c.argument.clone(),
                        });
                    }
                }
            }
        }
    }
    let leak = leaks.iter().copied().fold(0.0_f64, f64::max);
    let low = leaks.iter().copied().fold(1.0_f64, f64::min);
    if leak - low > LEAK_AGREEMENT_TOLERANCE {
        log::warn!("arguments for `{child}` disagree on the leak ({low} vs {leak}); using {leak}");
    }
    let parents: Vec<PropId> = links.keys().cloned().collect();
    let strengths: Vec<f64> = links.values().map(|(s, _)| *s).collect();
    Ok((
        parents,
        Qualifier::NoisyOr {
            links: strengths,
            leak,
        },
    ))
}

/// Merges frames that argue for one claim into a single noisy-or qualifier
/// over the union of their grounds. Frames must be causally oriented and
/// noisy-or convertible (noisy-or or single-ground tables).
pub fn merge_arguments_noisy_or(frames: &[&ArgumentFrame]) -> Result<Qualifier> {
    let first = frames.first().ok_or(Error::NoFrames)?;
    for f in frames {
        if f.claim != first.claim {
            return Err(Error::NotMergeable {
                claim: first.claim.clone(),
                reason: format!("frame `{}` argues for `{}` instead", f.id, f.claim),
            });
        }
        if f.direction != Direction::Causal {
            return Err(Error::NotMergeable {
                claim: first.claim.clone(),
                reason: format!("frame `{}` is not causally oriented", f.id),
            });
        }
    }
    let contributions: Vec<Contribution> = frames
        .iter()
        .map(|f| Contribution {
            argument: f.id.clone(),
            parents: f.grounds.clone(),
            qualifier: f.qualifier.clone(),
        })
        .collect();
    let (_, qualifier) = merge_contributions(&first.claim, &contributions)?;
    Ok(qualifier)
}

/// Verifies the graph is acyclic; the error carries one concrete cycle as a
/// path whose first node is repeated at the end.
pub fn check_causal_order(net: &BayesNet) -> Result<()> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = net.nodes().len();
    let mut marks = vec![Mark::New; n];
    // Child lists per node index, following arcs parent -> child.
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ci, node) in net.nodes().iter().enumerate() {
        for p in &node.parents {
            let pi = net.index[&p.clone()];
            children[pi].push(ci);
        }
    }
    for list in &mut children {
        list.sort_unstable();
    }

    fn visit(
        i: usize,
        net: &BayesNet,
        children: &[Vec<usize>],
        marks: &mut [Mark],
        stack: &mut Vec<usize>,
    ) -> Result<()> {
        marks[i] = Mark::Active;
        stack.push(i);
        for &c in &children[i] {
            match marks[c] {
                Mark::Done => {}
                Mark::New => visit(c, net, children, marks, stack)?,
                Mark::Active => {
                    let start = stack.iter().position(|&s| s == c).expect("on stack");
                    let mut cycle: Vec<PropId> = stack[start..]
                        .iter()
                        .map(|&s| net.nodes()[s].id.clone())
                        .collect();
                    cycle.push(net.nodes()[c].id.clone());
                    return Err(Error::Cycle(cycle));
                }
            }
        }
        stack.pop();
        marks[i] = Mark::Done;
        Ok(())
    }

    let mut stack = Vec::new();
    for i in 0..n {
        if marks[i] == Mark::New {
            visit(i, net, &children, &mut marks, &mut stack)?;
        }
    }
    Ok(())
}

fn table_lookup(expanded: &[f64], parents: &[PropId], assign: &BTreeMap<PropId, bool>) -> f64 {
    let m = parents.len();
    let mut idx = 0usize;
    for (i, p) in parents.iter().enumerate() {
        if assign[p] {
            idx |= 1 << (m - 1 - i);
        }
    }
    expanded[idx]
}

/// Reverses the arc `from -> to` by Bayes rule, preserving the joint
/// distribution exactly. Both endpoints inherit each other's former
/// parents, so reversal generally adds arcs.
pub fn reverse_arc(net: &BayesNet, from: &PropId, to: &PropId) -> Result<BayesNet> {
    let x = net.node(from)?.clone();
    let y = net.node(to)?.clone();
    if !y.parents.contains(from) {
        return Err(Error::NoSuchArc {
            from: from.clone(),
            to: to.clone(),
        });
    }
    // Any other directed path from -> to makes the reversed arc close a cycle.
    if path_exists_avoiding_direct(net, from, to) {
        return Err(Error::ReversalCycle {
            from: from.clone(),
            to: to.clone(),
        });
    }

    let a: Vec<PropId> = x.parents.clone();
    let b: Vec<PropId> = y.parents.iter().filter(|p| *p != from).cloned().collect();
    let mut w: Vec<PropId> = a.iter().chain(b.iter()).cloned().collect();
    w.sort();
    w.dedup();

    let x_table = x.cpt.expand();
    let y_table = y.cpt.expand();

    // New Y family: parents w, P(y|w) = sum_x P(x|a) P(y|x,b).
    let mut y_entries = vec![0.0; 1 << w.len()];
    // New X family: parents sorted(w + y), P(x|y,w) by Bayes rule.
    let mut x_parents: Vec<PropId> = w.iter().cloned().chain(std::iter::once(to.clone())).collect();
    x_parents.sort();
    let mut x_entries = vec![0.0; 1 << x_parents.len()];

    for idx in 0..1usize << w.len() {
        let mut assign: BTreeMap<PropId, bool> = BTreeMap::new();
        for (i, p) in w.iter().enumerate() {
            assign.insert(p.clone(), idx >> (w.len() - 1 - i) & 1 == 1);
        }
        let px1 = table_lookup(&x_table, &a, &assign);
        let mut joint_y1 = 0.0;
        let mut per_x = [0.0f64; 2]; // joint P(x, y=1 | w) for x = false, true
        for (xi, px) in [(0usize, 1.0 - px1), (1usize, px1)] {
            assign.insert(from.clone(), xi == 1);
            let py1 = table_lookup(&y_table, &y.parents, &assign);
            per_x[xi] = px * py1;
            joint_y1 += px * py1;
        }
        assign.remove(from);
        y_entries[idx] = joint_y1;

        for yv in [false, true] {
            assign.insert(to.clone(), yv);
            let denom = if yv { joint_y1 } else { 1.0 - joint_y1 };
            let numer = if yv {
                per_x[1]
            } else {
                px1 - per_x[1]
            };
            // An impossible y leaves x unconstrained; keep the old
            // conditional so the (zero-mass) row stays a distribution.
            let value = if denom <= 0.0 { px1 } else { numer / denom };
            let mut xidx = 0usize;
            for (i, p) in x_parents.iter().enumerate() {
                if assign[p] {
                    xidx |= 1 << (x_parents.len() - 1 - i);
                }
            }
            x_entries[xidx] = value.clamp(0.0, 1.0);
        }
        assign.remove(to);
    }

    let mut nodes: Vec<Node> = net.nodes().to_vec();
    for node in &mut nodes {
        if &node.id == from {
            node.parents = x_parents.clone();
            node.cpt = Qualifier::FullTable {
                entries: x_entries.clone(),
            };
        } else if &node.id == to {
            node.parents = w.clone();
            node.cpt = Qualifier::FullTable {
                entries: y_entries.clone(),
            };
        }
    }
    BayesNet::from_parts(nodes, net.provenance().clone())
}

fn path_exists_avoiding_direct(net: &BayesNet, from: &PropId, to: &PropId) -> bool {
    // DFS over parent -> child arcs, skipping the direct from -> to arc.
    let mut seen: BTreeSet<PropId> = BTreeSet::new();
    let mut stack = vec![from.clone()];
    while let Some(cur) = stack.pop() {
        for node in net.nodes() {
            if node.parents.contains(&cur) {
                if &cur == from && &node.id == to {
                    continue;
                }
                if &node.id == to {
                    return true;
                }
                if seen.insert(node.id.clone()) {
                    stack.push(node.id.clone());
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::argument::{frames_from_activation, merge_diagnostic_frames};
    use crate::schema_kb::{activate_backward, activate_forward, parse_kb};
    use std::collections::BTreeSet as Set;

    const NECKLACE: &str = "\
[propositions]
children-playing 0
maid-dishonest 0
necklace-missing 1

[schema theft]
link maid-dishonest -> necklace-missing : 0.9 0.01
link children-playing -> necklace-missing : 0.7 0.01
prior maid-dishonest : 0.1
prior children-playing : 0.3
";

    fn necklace_net() -> BayesNet {
        let kb = parse_kb(NECKLACE, "necklace.kb").unwrap();
        let grounds: Set<PropId> = ["maid-dishonest", "children-playing"]
            .iter()
            .map(|s| PropId::new(*s))
            .collect();
        let acts = activate_forward(&kb, &grounds).unwrap();
        let mut frames = Vec::new();
        for a in &acts {
            frames.extend(frames_from_activation(a, &kb).unwrap());
        }
        compile(&frames, &kb).unwrap()
    }

    fn chain_net(p_a: f64, p_b_given: [f64; 2]) -> BayesNet {
        let nodes = vec![
            Node {
                id: PropId::new("a"),
                parents: vec![],
                cpt: Qualifier::FullTable {
                    entries: vec![p_a],
                },
            },
            Node {
                id: PropId::new("b"),
                parents: vec![PropId::new("a")],
                cpt: Qualifier::FullTable {
                    entries: vec![p_b_given[0], p_b_given[1]],
                },
            },
        ];
        BayesNet::from_parts(nodes, BTreeMap::new()).unwrap()
    }

    #[test]
    fn necklace_compiles_to_v_structure() {
        let net = necklace_net();
        assert_eq!(net.len(), 3);
        let missing = net.node(&PropId::new("necklace-missing")).unwrap();
        assert_eq!(
            missing.parents,
            vec![PropId::new("children-playing"), PropId::new("maid-dishonest")]
        );
        assert_eq!(
            net.arcs(),
            vec![
                (PropId::new("children-playing"), PropId::new("necklace-missing")),
                (PropId::new("maid-dishonest"), PropId::new("necklace-missing")),
            ]
        );
        let maid = net.node(&PropId::new("maid-dishonest")).unwrap();
        assert_eq!(
            maid.cpt,
            Qualifier::FullTable {
                entries: vec![0.1]
            }
        );
        // 1 + 1 + 4 stored probabilities for the three families.
        assert_eq!(net.table_entry_count(), 6);
    }

    #[test]
    fn compile_is_order_insensitive() {
        let kb = parse_kb(NECKLACE, "necklace.kb").unwrap();
        let grounds: Set<PropId> = ["maid-dishonest", "children-playing"]
            .iter()
            .map(|s| PropId::new(*s))
            .collect();
        let acts = activate_forward(&kb, &grounds).unwrap();
        let mut frames = Vec::new();
        for a in &acts {
            frames.extend(frames_from_activation(a, &kb).unwrap());
        }
        let forward = compile(&frames, &kb).unwrap();
        frames.reverse();
        let reversed = compile(&frames, &kb).unwrap();
        assert_eq!(forward, reversed);
    }

    #[test]
    fn diagnostic_frames_compile_to_the_same_topology() {
        let kb = parse_kb(NECKLACE, "necklace.kb").unwrap();
        let acts = activate_backward(&kb, &PropId::new("necklace-missing")).unwrap();
        let mut frames = Vec::new();
        for a in &acts {
            frames.extend(frames_from_activation(a, &kb).unwrap());
        }
        let frames = merge_diagnostic_frames(frames).unwrap();
        let net = compile(&frames, &kb).unwrap();
        assert_eq!(net.arcs(), necklace_net().arcs());
        // Emission families merge back into one noisy-or over both causes.
        let missing = net.node(&PropId::new("necklace-missing")).unwrap();
        assert_eq!(
            missing.cpt,
            Qualifier::NoisyOr {
                links: vec![0.7, 0.9],
                leak: 0.01
            }
        );
    }

    #[test]
    fn missing_prior_is_reported() {
        let text = "\
[propositions]
a 0
b 1

[schema s]
link a -> b : 0.5 0.1
";
        let kb = parse_kb(text, "noprior.kb").unwrap();
        let acts = activate_forward(&kb, &[PropId::new("a")].into_iter().collect()).unwrap();
        let frames = frames_from_activation(&acts[0], &kb).unwrap();
        assert!(matches!(
            compile(&frames, &kb),
            Err(Error::MissingPrior(p)) if p == PropId::new("a")
        ));
    }

    #[test]
    fn hand_built_cycle_is_caught_with_its_path() {
        let nodes = vec![
            Node {
                id: PropId::new("a"),
                parents: vec![PropId::new("b")],
                cpt: Qualifier::FullTable {
                    entries: vec![0.2, 0.8],
                },
            },
            Node {
                id: PropId::new("b"),
                parents: vec![PropId::new("a")],
                cpt: Qualifier::FullTable {
                    entries: vec![0.3, 0.7],
                },
            },
        ];
        let net = BayesNet::from_parts(nodes, BTreeMap::new()).unwrap();
        match check_causal_order(&net) {
            Err(Error::Cycle(path)) => {
                assert_eq!(path.first(), path.last());
                assert_eq!(path.len(), 3);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn acyclic_fixture_passes_order_check() {
        // A 12-node layered DAG: node i takes parents from lower layers.
        let mut nodes = Vec::new();
        for i in 0..12usize {
            let id = PropId::new(format!("n{i:02}"));
            let parents: Vec<PropId> = (0..i)
                .filter(|j| (i + j) % 3 == 0)
                .map(|j| PropId::new(format!("n{j:02}")))
                .collect();
            let m = parents.len();
            nodes.push(Node {
                id,
                parents,
                cpt: Qualifier::FullTable {
                    entries: vec![0.5; 1 << m],
                },
            });
        }
        let net = BayesNet::from_parts(nodes, BTreeMap::new()).unwrap();
        check_causal_order(&net).unwrap();
    }

    #[test]
    fn arc_reversal_matches_bayes_rule() {
        let net = chain_net(0.3, [0.2, 0.8]);
        let rev = reverse_arc(&net, &PropId::new("a"), &PropId::new("b")).unwrap();
        let b = rev.node(&PropId::new("b")).unwrap();
        assert!(b.parents.is_empty());
        let pb = b.cpt.expand()[0];
        assert!((pb - 0.38).abs() < 1e-12);
        let a = rev.node(&PropId::new("a")).unwrap();
        assert_eq!(a.parents, vec![PropId::new("b")]);
        let table = a.cpt.expand();
        assert!((table[1] - 0.24 / 0.38).abs() < 1e-12);
        assert!((table[0] - 0.06 / 0.62).abs() < 1e-12);
    }

    #[test]
    fn double_reversal_restores_the_joint() {
        let net = chain_net(0.3, [0.2, 0.8]);
        let there = reverse_arc(&net, &PropId::new("a"), &PropId::new("b")).unwrap();
        let back = reverse_arc(&there, &PropId::new("b"), &PropId::new("a")).unwrap();
        let joint = |net: &BayesNet, av: bool, bv: bool| -> f64 {
            let a = net.node(&PropId::new("a")).unwrap();
            let b = net.node(&PropId::new("b")).unwrap();
            let assign: BTreeMap<PropId, bool> =
                [(PropId::new("a"), av), (PropId::new("b"), bv)].into_iter().collect();
            let pa = table_lookup(&a.cpt.expand(), &a.parents, &assign);
            let pb = table_lookup(&b.cpt.expand(), &b.parents, &assign);
            let pa = if av { pa } else { 1.0 - pa };
            let pb = if bv { pb } else { 1.0 - pb };
            pa * pb
        };
        for av in [false, true] {
            for bv in [false, true] {
                assert!((joint(&net, av, bv) - joint(&back, av, bv)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reversal_requires_the_arc() {
        let net = chain_net(0.3, [0.2, 0.8]);
        assert!(matches!(
            reverse_arc(&net, &PropId::new("b"), &PropId::new("a")),
            Err(Error::NoSuchArc { .. })
        ));
    }

    #[test]
    fn reversal_refuses_to_close_a_cycle() {
        // a -> b -> c plus a -> c; reversing a -> c leaves the long path.
        let nodes = vec![
            Node {
                id: PropId::new("a"),
                parents: vec![],
                cpt: Qualifier::FullTable {
                    entries: vec![0.5],
                },
            },
            Node {
                id: PropId::new("b"),
                parents: vec![PropId::new("a")],
                cpt: Qualifier::FullTable {
                    entries: vec![0.2, 0.8],
                },
            },
            Node {
                id: PropId::new("c"),
                parents: vec![PropId::new("a"), PropId::new("b")],
                cpt: Qualifier::FullTable {
                    entries: vec![0.1, 0.2, 0.3, 0.4],
                },
            },
        ];
        let net = BayesNet::from_parts(nodes, BTreeMap::new()).unwrap();
        assert!(matches!(
            reverse_arc(&net, &PropId::new("a"), &PropId::new("c")),
            Err(Error::ReversalCycle { .. })
        ));
    }

    #[test]
    fn reversal_on_a_vee_adds_arcs() {
        // x -> y with x also feeding z keeps z's arc and links the pair both
        // ways through inherited parents.
        let nodes = vec![
            Node {
                id: PropId::new("u"),
                parents: vec![],
                cpt: Qualifier::FullTable {
                    entries: vec![0.4],
                },
            },
            Node {
                id: PropId::new("x"),
                parents: vec![PropId::new("u")],
                cpt: Qualifier::FullTable {
                    entries: vec![0.3, 0.9],
                },
            },
            Node {
                id: PropId::new("y"),
                parents: vec![PropId::new("x")],
                cpt: Qualifier::FullTable {
                    entries: vec![0.2, 0.7],
                },
            },
        ];
        let net = BayesNet::from_parts(nodes, BTreeMap::new()).unwrap();
        let before = net.arcs().len();
        let rev = reverse_arc(&net, &PropId::new("x"), &PropId::new("y")).unwrap();
        // y inherits u; x keeps u and gains y: strictly more arcs.
        assert!(rev.arcs().len() > before);
        let y = rev.node(&PropId::new("y")).unwrap();
        assert_eq!(y.parents, vec![PropId::new("u")]);
        let x = rev.node(&PropId::new("x")).unwrap();
        assert_eq!(x.parents, vec![PropId::new("u"), PropId::new("y")]);
    }

    #[test]
    fn contradictory_full_tables_name_both_arguments() {
        let text = "\
[propositions]
a 0
b 0
c 1

[schema s1]
table c | a b : 0.1 0.2 0.3 0.4
prior a : 0.5
prior b : 0.5

[schema s2]
table c | a b : 0.1 0.2 0.3 0.5
";
        let kb = parse_kb(text, "twotables.kb").unwrap();
        let grounds: Set<PropId> =
            [PropId::new("a"), PropId::new("b")].into_iter().collect();
        let acts = activate_forward(&kb, &grounds).unwrap();
        let mut frames = Vec::new();
        for a in &acts {
            frames.extend(frames_from_activation(a, &kb).unwrap());
        }
        match compile(&frames, &kb) {
            Err(Error::ConflictingStrengths { claim, first, second }) => {
                assert_eq!(claim, PropId::new("c"));
                assert_ne!(first, second);
            }
            other => panic!("expected conflict, got {other:?}"),
        }
    }
}
