//! Randomized cross-checks of the inference stack against the enumeration
//! oracle and closed forms.

use doxa_core::inference::{enumerate_oracle, evidence_probability, posterior, Evidence};
use doxa_core::monitor::surprise_index;
use doxa_core::network::{reverse_arc, BayesNet, Node};
use doxa_core::{Error, PropId, Qualifier};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn node_id(k: usize) -> PropId {
    PropId::new(format!("n{k:02}"))
}

/// Deterministic net from per-node parent masks and table entries. Node `i`
/// may only take parents among `0..i`, capped at three, so the index order
/// is a causal order by construction.
fn build_net(masks: &[u64], tables: &[Vec<f64>]) -> BayesNet {
    let mut nodes = Vec::new();
    for (i, mask) in masks.iter().enumerate() {
        let avail = if i == 0 { 0 } else { mask & ((1u64 << i) - 1) };
        let parents: Vec<usize> = (0..i).filter(|b| avail >> b & 1 == 1).take(3).collect();
        let entries = tables[i][..1 << parents.len()].to_vec();
        nodes.push(Node {
            id: node_id(i),
            parents: parents.into_iter().map(node_id).collect(),
            cpt: Qualifier::FullTable { entries },
        });
    }
    BayesNet::from_parts(nodes, BTreeMap::new()).unwrap()
}

fn arb_parts(max_nodes: usize) -> impl Strategy<Value = (Vec<u64>, Vec<Vec<f64>>)> {
    (2..=max_nodes).prop_flat_map(|n| {
        (
            prop::collection::vec(any::<u64>(), n),
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 8), n),
        )
    })
}

fn evidence_from(mask: u64, values: u64, n: usize) -> Evidence {
    let mut e = Evidence::new();
    for i in 0..n {
        if mask >> i & 1 == 1 {
            e.set(node_id(i), values >> i & 1 == 1);
        }
    }
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn elimination_matches_enumeration((masks, tables) in arb_parts(12),
                                       obs_mask in any::<u64>(),
                                       obs_values in any::<u64>()) {
        let net = build_net(&masks, &tables);
        let n = net.len();
        let mut evidence = evidence_from(obs_mask, obs_values, n);
        let query = (0..n)
            .map(node_id)
            .find(|id| !evidence.contains(id))
            .unwrap_or_else(|| {
                let id = node_id(0);
                evidence = Evidence::from_pairs(
                    evidence.in_order().iter().filter(|(e, _)| e != &id).cloned(),
                );
                id
            });
        let ve = posterior(&net, &query, &evidence);
        let oracle = enumerate_oracle(&net, Some(&query), &evidence);
        match (ve, oracle) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-9, "ve {a} oracle {b}"),
            (Err(Error::ImpossibleEvidence), Err(Error::ImpossibleEvidence)) => {}
            (ve, oracle) => prop_assert!(false, "divergent outcomes: {ve:?} vs {oracle:?}"),
        }
    }

    #[test]
    fn evidence_probability_matches_enumeration((masks, tables) in arb_parts(12),
                                                obs_mask in 1u64..,
                                                obs_values in any::<u64>()) {
        let net = build_net(&masks, &tables);
        let n = net.len();
        let mut evidence = evidence_from(obs_mask, obs_values, n);
        if evidence.is_empty() {
            evidence.set(node_id(0), obs_values & 1 == 1);
        }
        let ve = evidence_probability(&net, &evidence).unwrap();
        let oracle = enumerate_oracle(&net, None, &evidence).unwrap();
        prop_assert!((ve - oracle).abs() < 1e-9, "ve {ve} oracle {oracle}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // The surprise index is calibrated: its mean over data drawn from the
    // model itself is one. P(d) comes from the enumeration oracle while
    // LR*(d) runs the production path, so agreement is not circular.
    #[test]
    fn surprise_index_mean_is_one((masks, tables) in arb_parts(10), obs_mask in any::<u64>()) {
        let net = build_net(&masks, &tables);
        let n = net.len();
        let mut observed: Vec<usize> = (0..n).filter(|i| obs_mask >> i & 1 == 1).collect();
        observed.truncate(6);
        if observed.is_empty() {
            observed.push(0);
        }
        let mut mean = 0.0;
        for bits in 0u64..1 << observed.len() {
            let mut evidence = Evidence::new();
            for (j, &i) in observed.iter().enumerate() {
                evidence.set(node_id(i), bits >> j & 1 == 1);
            }
            let p = enumerate_oracle(&net, None, &evidence).unwrap();
            if p == 0.0 {
                continue;
            }
            let report = surprise_index(&net, &evidence, 0.1).unwrap();
            mean += p * report.lr_star;
        }
        prop_assert!((mean - 1.0).abs() < 1e-9, "mean {mean}");
    }

    #[test]
    fn arc_reversal_preserves_the_joint((masks, tables) in arb_parts(8),
                                        pick in any::<prop::sample::Index>()) {
        let net = build_net(&masks, &tables);
        let arcs = net.arcs();
        prop_assume!(!arcs.is_empty());
        let (from, to) = arcs[pick.index(arcs.len())].clone();
        let reversed = match reverse_arc(&net, &from, &to) {
            Ok(r) => r,
            // Reversal refusing to close a cycle is a legal outcome here.
            Err(Error::ReversalCycle { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("unexpected error: {e}"))),
        };
        let n = net.len();
        for bits in 0u64..1 << n {
            let assignment: BTreeMap<PropId, bool> =
                (0..n).map(|i| (node_id(i), bits >> i & 1 == 1)).collect();
            let before = doxa_core::inference::joint_probability(&net, &assignment).unwrap();
            let after = doxa_core::inference::joint_probability(&reversed, &assignment).unwrap();
            prop_assert!((before - after).abs() < 1e-12, "joint drift at {bits:b}: {before} vs {after}");
        }
    }
}

proptest! {
    // A noisy-or family and its pre-expanded table are the same
    // distribution, so every posterior must agree through the full
    // elimination path.
    #[test]
    fn noisy_or_family_is_equivalent_to_its_table(links in prop::collection::vec(0.01f64..=0.99, 1..=5),
                                                  leak in 0.0f64..=0.5,
                                                  priors in prop::collection::vec(0.05f64..=0.95, 5),
                                                  claim_value in any::<bool>()) {
        let m = links.len();
        let claim = PropId::new("zz-claim");
        let family = |cpt: Qualifier| -> BayesNet {
            let mut nodes: Vec<Node> = (0..m)
                .map(|i| Node {
                    id: node_id(i),
                    parents: vec![],
                    cpt: Qualifier::FullTable { entries: vec![priors[i]] },
                })
                .collect();
            nodes.push(Node {
                id: claim.clone(),
                parents: (0..m).map(node_id).collect(),
                cpt,
            });
            BayesNet::from_parts(nodes, BTreeMap::new()).unwrap()
        };
        let compact = family(Qualifier::NoisyOr { links: links.clone(), leak });
        let tabular = family(Qualifier::FullTable {
            entries: Qualifier::NoisyOr { links, leak }.expand(),
        });
        let evidence = Evidence::from_pairs([(claim.clone(), claim_value)]);
        for i in 0..m {
            let a = posterior(&compact, &node_id(i), &evidence).unwrap();
            let b = posterior(&tabular, &node_id(i), &evidence).unwrap();
            prop_assert!((a - b).abs() < 1e-12, "cause {i}: {a} vs {b}");
        }
        let pa = evidence_probability(&compact, &evidence).unwrap();
        let pb = evidence_probability(&tabular, &evidence).unwrap();
        prop_assert!((pa - pb).abs() < 1e-12, "evidence: {pa} vs {pb}");
    }
}
