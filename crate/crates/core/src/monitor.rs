//! Adequacy monitoring: the surprise index and inter-model comparison.
//!
//! The surprise index LR* divides the probability of the observed data by
//! the prior expectation of that probability over every possible
//! realization of the same observations, E[P] = sum over realizations d of
//! P(d) squared. Dividing by the expectation calibrates the index: its mean
//! under the model is exactly 1, so a most-likely-but-individually-rare
//! outcome (ten fair-ish coin tosses, say) does not read as conflict, while
//! data the model finds genuinely surprising pushes LR* toward 0.

use crate::error::{Error, Result};
use crate::inference::{evidence_probability, observed_marginal, Evidence, Factor};
use crate::network::BayesNet;
use crate::symbol::PropId;
use std::collections::BTreeSet;

/// Conflict fires when LR* drops below this unless the caller overrides it.
pub const DEFAULT_CONFLICT_THRESHOLD: f64 = 0.1;

/// Outcome of one adequacy check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictReport {
    pub evidence_probability: f64,
    pub expected_evidence_probability: f64,
    pub lr_star: f64,
    pub triggered: bool,
    pub threshold: f64,
}

/// Surprise of one observation relative to what came before it.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementReport {
    pub node: PropId,
    pub value: bool,
    /// P(node = value | all earlier observations).
    pub conditional: f64,
    pub lr_star: f64,
}

fn lookup(factor: &Factor, evidence: &Evidence) -> f64 {
    let m = factor.scope.len();
    let mut idx = 0usize;
    for (i, var) in factor.scope.iter().enumerate() {
        if evidence.get(var).expect("factor scope is observed") {
            idx |= 1 << (m - 1 - i);
        }
    }
    factor.values[idx]
}

/// E[P(data)] over all realizations of the observed nodes.
pub fn expected_evidence_probability(
    net: &BayesNet,
    observed: &BTreeSet<PropId>,
) -> Result<f64> {
    let marginal = observed_marginal(net, observed)?;
    Ok(marginal.values.iter().map(|v| v * v).sum())
}

/// Computes LR* for the evidence and compares it against `threshold`.
///
/// One elimination pass produces the joint marginal over the observed set;
/// the realized probability is a lookup and the expectation is the sum of
/// squared entries of the same marginal.
pub fn surprise_index(
    net: &BayesNet,
    evidence: &Evidence,
    threshold: f64,
) -> Result<ConflictReport> {
    if evidence.is_empty() {
        return Err(Error::EmptyEvidence);
    }
    let marginal = observed_marginal(net, &evidence.observed_set())?;
    let p = lookup(&marginal, evidence);
    let expected: f64 = marginal.values.iter().map(|v| v * v).sum();
    if expected <= 0.0 {
        return Err(Error::DegenerateModel);
    }
    let lr_star = p / expected;
    Ok(ConflictReport {
        evidence_probability: p,
        expected_evidence_probability: expected,
        lr_star,
        triggered: lr_star < threshold,
        threshold,
    })
}

/// Per-observation surprise in assertion order: observation i is scored
/// against the model conditioned on observations 1..i-1. The product of the
/// conditionals equals the full-set evidence probability, but the index
/// itself is a diagnostic view, not a replacement for [`surprise_index`].
pub fn surprise_increments(net: &BayesNet, evidence: &Evidence) -> Result<Vec<IncrementReport>> {
    if evidence.is_empty() {
        return Err(Error::EmptyEvidence);
    }
    evidence.check_against(net)?;
    let mut prefix = Evidence::new();
    let mut out = Vec::new();
    for (node, value) in evidence.in_order() {
        let p_true = crate::inference::posterior(net, node, &prefix)?;
        let conditional = if *value { p_true } else { 1.0 - p_true };
        let expected = p_true * p_true + (1.0 - p_true) * (1.0 - p_true);
        if expected <= 0.0 {
            return Err(Error::DegenerateModel);
        }
        out.push(IncrementReport {
            node: node.clone(),
            value: *value,
            conditional,
            lr_star: conditional / expected,
        });
        prefix.set(node.clone(), *value);
    }
    Ok(out)
}

/// P(data | net1) / P(data | net2). A zero denominator with a positive
/// numerator signals infinity; evidence impossible under both models has no
/// defined ratio.
pub fn model_likelihood_ratio(
    net1: &BayesNet,
    net2: &BayesNet,
    evidence: &Evidence,
) -> Result<f64> {
    let p1 = evidence_probability(net1, evidence)?;
    let p2 = evidence_probability(net2, evidence)?;
    if p2 <= 0.0 {
        if p1 > 0.0 {
            return Ok(f64::INFINITY);
        }
        return Err(Error::ImpossibleEvidence);
    }
    Ok(p1 / p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::argument::Qualifier;
    use crate::network::Node;
    use std::collections::BTreeMap;

    fn iid_net(n: usize, p: f64) -> BayesNet {
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

    fn all_valued(n: usize, value: bool) -> Evidence {
        Evidence::from_pairs((0..n).map(|i| (PropId::new(format!("toss-{i:02}")), value)))
    }

    #[test]
    fn expectation_factorizes_over_independent_nodes() {
        let net = iid_net(10, 0.9);
        let observed = all_valued(10, true).observed_set();
        let expected = expected_evidence_probability(&net, &observed).unwrap();
        let factorized = (0.9f64 * 0.9 + 0.1 * 0.1).powi(10);
        assert!((expected - factorized).abs() < 1e-12);
        assert!((expected - 0.13744803133596051).abs() < 1e-12);
    }

    #[test]
    fn likely_data_is_not_surprising() {
        let net = iid_net(10, 0.9);
        let report = surprise_index(&net, &all_valued(10, true), DEFAULT_CONFLICT_THRESHOLD).unwrap();
        assert!((report.evidence_probability - 0.9f64.powi(10)).abs() < 1e-12);
        assert!((report.lr_star - 2.536801994986271).abs() < 1e-9);
        assert!(!report.triggered);
    }

    #[test]
    fn unlikely_data_triggers() {
        let net = iid_net(10, 0.9);
        let report = surprise_index(&net, &all_valued(10, false), DEFAULT_CONFLICT_THRESHOLD).unwrap();
        assert!(report.lr_star < 1e-9);
        assert!((report.lr_star - 7.275477067807014e-10).abs() < 1e-19);
        assert!(report.triggered);
    }

    #[test]
    fn symmetric_single_node_is_neutral() {
        let net = iid_net(1, 0.5);
        for value in [true, false] {
            let report = surprise_index(&net, &all_valued(1, value), 0.1).unwrap();
            assert!((report.lr_star - 1.0).abs() < 1e-12);
            assert!(!report.triggered);
        }
    }

    #[test]
    fn deterministic_node_is_never_surprised_by_its_value() {
        let net = iid_net(1, 1.0);
        let report = surprise_index(&net, &all_valued(1, true), 0.1).unwrap();
        assert!((report.lr_star - 1.0).abs() < 1e-12);
    }

    #[test]
    fn surprise_is_calibrated_to_mean_one() {
        let net = iid_net(3, 0.7);
        let observed = all_valued(3, true).observed_set();
        let marginal = observed_marginal(&net, &observed).unwrap();
        let expected: f64 = marginal.values.iter().map(|v| v * v).sum();
        let mean: f64 = marginal.values.iter().map(|p| p * (p / expected)).sum();
        assert!((mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn increments_multiply_back_to_the_evidence_probability() {
        let net = iid_net(4, 0.8);
        let evidence = all_valued(4, true);
        let increments = surprise_increments(&net, &evidence).unwrap();
        let product: f64 = increments.iter().map(|i| i.conditional).product();
        let direct = evidence_probability(&net, &evidence).unwrap();
        assert!((product - direct).abs() < 1e-12);
        assert_eq!(increments.len(), 4);
    }

    #[test]
    fn model_ratio_matches_the_closed_form() {
        let biased = iid_net(10, 0.9);
        let fair = iid_net(10, 0.1);
        let heads = all_valued(10, true);
        let ratio = model_likelihood_ratio(&biased, &fair, &heads).unwrap();
        let expect = 9.0f64.powi(10);
        assert!((ratio / expect - 1.0).abs() < 1e-9);
        let inverse = model_likelihood_ratio(&fair, &biased, &heads).unwrap();
        assert!((ratio * inverse - 1.0).abs() < 1e-9);
        let identity = model_likelihood_ratio(&biased, &biased, &heads).unwrap();
        assert!((identity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_denominator_signals_infinity() {
        let possible = iid_net(1, 0.5);
        let impossible = iid_net(1, 0.0);
        let e = all_valued(1, true);
        let ratio = model_likelihood_ratio(&possible, &impossible, &e).unwrap();
        assert!(ratio.is_infinite());
        assert!(matches!(
            model_likelihood_ratio(&impossible, &impossible, &e),
            Err(Error::ImpossibleEvidence)
        ));
    }

    #[test]
    fn oversized_observed_set_is_refused() {
        let net = iid_net(21, 0.5);
        let evidence = all_valued(21, true);
        assert!(matches!(
            surprise_index(&net, &evidence, 0.1),
            Err(Error::SizeCap { .. })
        ));
    }
}
