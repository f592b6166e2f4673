//! Textual encodings of a compiled network.
//!
//! The `.net` format is self contained and round-trippable:
//!
//! ```text
//! node <id> : prior <p>
//! node <id> | <parents...> : table <2^m entries>
//! node <id> | <parents...> : noisy-or <links...> @ <leak>
//! provenance <id> : <argument ids...>
//! ```
//!
//! Table entries follow the locked bit order (first parent is the most
//! significant bit, true = 1, row 0 all false). Floats print in Rust's
//! shortest round-trip form so emitted files re-parse to identical nets.

use super::{check_causal_order, BayesNet, Node};
use crate::argument::Qualifier;
use crate::error::{Error, Result};
use crate::symbol::{is_valid_id, ArgumentId, PropId};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Serializes a network to the `.net` text form.
pub fn to_net_text(net: &BayesNet) -> String {
    let mut out = String::new();
    for node in net.nodes() {
        match (&node.parents.is_empty(), &node.cpt) {
            (true, Qualifier::FullTable { entries }) => {
                let _ = writeln!(out, "node {} : prior {}", node.id, entries[0]);
            }
            (false, Qualifier::FullTable { entries }) => {
                let _ = writeln!(
                    out,
                    "node {} | {} : table {}",
                    node.id,
                    join_ids(&node.parents),
                    join_floats(entries)
                );
            }
            (_, Qualifier::NoisyOr { links, leak }) => {
                let _ = writeln!(
                    out,
                    "node {} | {} : noisy-or {} @ {}",
                    node.id,
                    join_ids(&node.parents),
                    join_floats(links),
                    leak
                );
            }
        }
    }
    for (id, args) in net.provenance() {
        if args.is_empty() {
            continue;
        }
        let list: Vec<&str> = args.iter().map(|a| a.as_str()).collect();
        let _ = writeln!(out, "provenance {} : {}", id, list.join(" "));
    }
    out
}

fn join_ids(ids: &[PropId]) -> String {
    ids.iter()
        .map(|p| p.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses the `.net` text form back into a network and checks it is a DAG.
pub fn parse_net_text(text: &str, file: &str) -> Result<BayesNet> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut provenance: BTreeMap<PropId, Vec<ArgumentId>> = BTreeMap::new();
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
        if let Some(rest) = line.strip_prefix("node ") {
            nodes.push(parse_node_line(rest, file, lineno)?);
        } else if let Some(rest) = line.strip_prefix("provenance ") {
            let (id, args) = rest.split_once(':').ok_or_else(|| {
                Error::parse(file, lineno, "provenance needs `<id> : <arguments>`")
            })?;
            let id = id.trim();
            if !is_valid_id(id) {
                return Err(Error::parse(file, lineno, format!("invalid identifier `{id}`")));
            }
            let args: Vec<ArgumentId> = args
                .split_whitespace()
                .map(ArgumentId::new)
                .collect();
            provenance.insert(PropId::new(id), args);
        } else {
            return Err(Error::parse(
                file,
                lineno,
                "expected a `node` or `provenance` line",
            ));
        }
    }
    let net = BayesNet::from_parts(nodes, provenance)?;
    check_causal_order(&net)?;
    Ok(net)
}

fn parse_node_line(rest: &str, file: &str, lineno: usize) -> Result<Node> {
    let (head, body) = rest
        .split_once(':')
        .ok_or_else(|| Error::parse(file, lineno, "node needs `: <cpt>`"))?;
    let (id, parents) = match head.split_once('|') {
        Some((id, parents)) => {
            let parents: Vec<PropId> = parents
                .split_whitespace()
                .map(|p| {
                    if is_valid_id(p) {
                        Ok(PropId::new(p))
                    } else {
                        Err(Error::parse(file, lineno, format!("invalid identifier `{p}`")))
                    }
                })
                .collect::<Result<_>>()?;
            if parents.is_empty() {
                return Err(Error::parse(file, lineno, "`|` requires at least one parent"));
            }
            (id.trim(), parents)
        }
        None => (head.trim(), Vec::new()),
    };
    let id = id.trim();
    if !is_valid_id(id) {
        return Err(Error::parse(file, lineno, format!("invalid identifier `{id}`")));
    }
    let body = body.trim();
    let parse_floats = |s: &str| -> Result<Vec<f64>> {
        s.split_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::parse(file, lineno, format!("expected number, found `{v}`")))
            })
            .collect()
    };
    let cpt = if let Some(v) = body.strip_prefix("prior ") {
        if !parents.is_empty() {
            return Err(Error::parse(file, lineno, "a node with parents cannot take a prior"));
        }
        Qualifier::FullTable {
            entries: parse_floats(v)?,
        }
    } else if let Some(v) = body.strip_prefix("table ") {
        Qualifier::FullTable {
            entries: parse_floats(v)?,
        }
    } else if let Some(v) = body.strip_prefix("noisy-or ") {
        let (links, leak) = v
            .split_once('@')
            .ok_or_else(|| Error::parse(file, lineno, "noisy-or needs `@ <leak>`"))?;
        let leak: f64 = leak.trim().parse().map_err(|_| {
            Error::parse(file, lineno, format!("expected leak, found `{}`", leak.trim()))
        })?;
        Qualifier::NoisyOr {
            links: parse_floats(links)?,
            leak,
        }
    } else {
        return Err(Error::parse(
            file,
            lineno,
            "cpt must be `prior`, `table`, or `noisy-or`",
        ));
    };
    Ok(Node {
        id: PropId::new(id),
        parents,
        cpt,
    })
}

/// Renders the network topology as a DOT digraph, nodes and arcs sorted.
pub fn to_dot(net: &BayesNet) -> String {
    let mut out = String::from("digraph model {\n    rankdir=TB;\n    node [shape=box, style=rounded];\n");
    for node in net.nodes() {
        let kind = match (&node.parents.is_empty(), &node.cpt) {
            (true, _) => "prior",
            (_, Qualifier::FullTable { .. }) => "table",
            (_, Qualifier::NoisyOr { .. }) => "noisy-or",
        };
        let _ = writeln!(out, "    \"{}\" [label=\"{}\\n{}\"];", node.id, node.id, kind);
    }
    for (from, to) in net.arcs() {
        let _ = writeln!(out, "    \"{from}\" -> \"{to}\";");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn sample_net() -> BayesNet {
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
        let provenance: BTreeMap<PropId, Vec<ArgumentId>> = [(
            PropId::new("necklace-missing"),
            vec![ArgumentId::new("theft:necklace-missing")],
        )]
        .into_iter()
        .collect();
        BayesNet::from_parts(nodes, provenance).unwrap()
    }

    #[test]
    fn net_text_round_trips() {
        let net = sample_net();
        let text = to_net_text(&net);
        let back = parse_net_text(&text, "sample.net").unwrap();
        assert_eq!(net, back);
        // Emitting again is byte identical.
        assert_eq!(text, to_net_text(&back));
    }

    #[test]
    fn net_text_is_the_locked_shape() {
        let text = to_net_text(&sample_net());
        let expect = "\
node children-playing : prior 0.3
node maid-dishonest : prior 0.1
node necklace-missing | children-playing maid-dishonest : noisy-or 0.7 0.9 @ 0.01
provenance necklace-missing : theft:necklace-missing
";
        assert_eq!(text, expect);
    }

    #[test]
    fn dot_export_lists_nodes_then_arcs() {
        let dot = to_dot(&sample_net());
        let expect = "\
digraph model {
    rankdir=TB;
    node [shape=box, style=rounded];
    \"children-playing\" [label=\"children-playing\\nprior\"];
    \"maid-dishonest\" [label=\"maid-dishonest\\nprior\"];
    \"necklace-missing\" [label=\"necklace-missing\\nnoisy-or\"];
    \"children-playing\" -> \"necklace-missing\";
    \"maid-dishonest\" -> \"necklace-missing\";
}
";
        assert_eq!(dot, expect);
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = parse_net_text("node a : prior 0.5\nnode b : banana\n", "bad.net").unwrap_err();
        assert!(err.to_string().starts_with("bad.net:2:"));
    }

    #[test]
    fn cyclic_net_text_is_rejected() {
        let text = "\
node a | b : table 0.1 0.2
node b | a : table 0.3 0.4
";
        assert!(matches!(
            parse_net_text(text, "cycle.net"),
            Err(Error::Cycle(_))
        ));
    }
}
