//! Parser for the knowledge-base text format.
//!
//! The format is line oriented and indentation free. `#` starts a comment,
//! blank lines are ignored, and every other line belongs to the most recent
//! section header:
//!
//! ```text
//! [propositions]
//! <id> <tier> <label...>                    # label optional, defaults to id
//!
//! [schema <id>]
//! link <cause> -> <effect> : <p_given_cause> <p_given_not_cause>
//! table <effect> | <cause> <cause>... : <entry>*2^n
//! prior <id> : <p>
//! implicit_exception <id> [exportable] : link <cause> -> <effect> : <p> <p>
//! precondition <id>
//! backing <schema-set-id>
//!
//! [schema-set <id>]
//! member <schema-id>
//! ```
//!
//! Table entries are indexed by reading the causes as bits, first cause most
//! significant, true = 1; causes must be listed in sorted order so the
//! entry order is never ambiguous. All probabilities must lie in [0, 1] and
//! every referenced proposition must be declared with a tier.

use super::{
    CausalLink, ExceptionDescriptor, JointTable, KnowledgeBase, Proposition, Schema,
};
use crate::error::{Error, Result};
use crate::symbol::{is_valid_id, PropId, SchemaId, SchemaSetId};
use std::collections::BTreeMap;
use std::path::Path;

/// Reads and parses a knowledge base file.
pub fn load_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase> {
    let path = path.as_ref();
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::parse(&label, 0, format!("cannot read file: {e}")))?;
    parse_kb(&text, &label)
}

enum Section {
    None,
    Propositions,
    Schema(SchemaId),
    SchemaSet(SchemaSetId),
}

/// Parses knowledge-base text; `file` labels parse errors.
pub fn parse_kb(text: &str, file: &str) -> Result<KnowledgeBase> {
    let mut propositions: Vec<Proposition> = Vec::new();
    let mut schemata: BTreeMap<SchemaId, Schema> = BTreeMap::new();
    let mut schema_order: Vec<SchemaId> = Vec::new();
    let mut schema_sets: BTreeMap<SchemaSetId, Vec<SchemaId>> = BTreeMap::new();
    let mut section = Section::None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(file, lineno, "unterminated section header"))?
                .trim();
            section = parse_header(header, file, lineno, &mut schemata, &mut schema_order, &mut schema_sets)?;
            continue;
        }
        match &section {
            Section::None => {
                return Err(Error::parse(
                    file,
                    lineno,
                    "content before the first section header",
                ));
            }
            Section::Propositions => {
                propositions.push(parse_proposition(line, file, lineno)?);
            }
            Section::Schema(id) => {
                let schema = schemata.get_mut(id).expect("section points at schema");
                parse_schema_line(schema, line, file, lineno)?;
            }
            Section::SchemaSet(id) => {
                let members = schema_sets.get_mut(id).expect("section points at set");
                let rest = line
                    .strip_prefix("member")
                    .ok_or_else(|| Error::parse(file, lineno, "expected `member <schema-id>`"))?;
                members.push(SchemaId::new(parse_id(rest.trim(), file, lineno)?));
            }
        }
    }

    let ordered: Vec<Schema> = schema_order
        .into_iter()
        .map(|id| schemata.remove(&id).expect("ordered schema exists"))
        .collect();
    KnowledgeBase::new(propositions, ordered, schema_sets).map_err(|e| match e {
        // Structural validation has no line to point at; keep the file name.
        Error::Parse { line, message, .. } if line == 0 => Error::Parse {
            file: file.to_string(),
            line: 0,
            message,
        },
        other => other,
    })
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_header(
    header: &str,
    file: &str,
    lineno: usize,
    schemata: &mut BTreeMap<SchemaId, Schema>,
    schema_order: &mut Vec<SchemaId>,
    schema_sets: &mut BTreeMap<SchemaSetId, Vec<SchemaId>>,
) -> Result<Section> {
    if header == "propositions" {
        return Ok(Section::Propositions);
    }
    if let Some(rest) = header.strip_prefix("schema-set ") {
        let id = SchemaSetId::new(parse_id(rest.trim(), file, lineno)?);
        if schema_sets.insert(id.clone(), Vec::new()).is_some() {
            return Err(Error::parse(file, lineno, format!("duplicate schema set `{id}`")));
        }
        return Ok(Section::SchemaSet(id));
    }
    if let Some(rest) = header.strip_prefix("schema ") {
        let id = SchemaId::new(parse_id(rest.trim(), file, lineno)?);
        if schemata.contains_key(&id) {
            return Err(Error::parse(file, lineno, format!("duplicate schema `{id}`")));
        }
        schemata.insert(
            id.clone(),
            Schema {
                id: id.clone(),
                ..Default::default()
            },
        );
        schema_order.push(id.clone());
        return Ok(Section::Schema(id));
    }
    Err(Error::parse(file, lineno, format!("unknown section `[{header}]`")))
}

fn parse_id<'a>(s: &'a str, file: &str, lineno: usize) -> Result<&'a str> {
    if is_valid_id(s) {
        Ok(s)
    } else {
        Err(Error::parse(file, lineno, format!("invalid identifier `{s}`")))
    }
}

fn parse_prob(s: &str, file: &str, lineno: usize) -> Result<f64> {
    let value: f64 = s
        .parse()
        .map_err(|_| Error::parse(file, lineno, format!("expected probability, found `{s}`")))?;
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::parse(
            file,
            lineno,
            format!("probability {value} outside [0, 1]"),
        ));
    }
    Ok(value)
}

fn parse_proposition(line: &str, file: &str, lineno: usize) -> Result<Proposition> {
    let mut parts = line.splitn(3, char::is_whitespace);
    let id = parse_id(parts.next().unwrap(), file, lineno)?;
    let tier_str = parts
        .next()
        .ok_or_else(|| Error::parse(file, lineno, "proposition line needs `<id> <tier> [label]`"))?;
    let causal_tier: u32 = tier_str.parse().map_err(|_| {
        Error::parse(
            file,
            lineno,
            format!("causal tier must be a non-negative integer, found `{tier_str}`"),
        )
    })?;
    let label = parts
        .next()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| id.to_string());
    Ok(Proposition {
        id: PropId::new(id),
        label,
        causal_tier,
    })
}

/// Parses `<cause> -> <effect> : <p> <p>` after the `link` keyword.
fn parse_link_body(body: &str, file: &str, lineno: usize) -> Result<CausalLink> {
    let (ends, probs) = split_once_on(body, ':', file, lineno, "link needs `: <p> <p>`")?;
    let (cause, effect) =
        split_once_str(&ends, "->", file, lineno, "link needs `<cause> -> <effect>`")?;
    let mut values = probs.split_whitespace();
    let s = values
        .next()
        .ok_or_else(|| Error::parse(file, lineno, "link is missing strength given cause"))?;
    let b = values
        .next()
        .ok_or_else(|| Error::parse(file, lineno, "link is missing strength given not-cause"))?;
    if values.next().is_some() {
        return Err(Error::parse(file, lineno, "link takes exactly two strengths"));
    }
    Ok(CausalLink {
        cause: PropId::new(parse_id(cause.trim(), file, lineno)?),
        effect: PropId::new(parse_id(effect.trim(), file, lineno)?),
        strength_given_cause: parse_prob(s, file, lineno)?,
        strength_given_not_cause: parse_prob(b, file, lineno)?,
    })
}

fn parse_schema_line(schema: &mut Schema, line: &str, file: &str, lineno: usize) -> Result<()> {
    let (keyword, rest) = match line.find(char::is_whitespace) {
        Some(i) => (&line[..i], line[i..].trim()),
        None => (line, ""),
    };
    match keyword {
        "link" => {
            schema.links.push(parse_link_body(rest, file, lineno)?);
        }
        "table" => {
            let (head, entries) =
                split_once_on(rest, ':', file, lineno, "table needs `: <entries>`")?;
            let (effect, causes) = split_once_on(
                &head,
                '|',
                file,
                lineno,
                "table needs `<effect> | <causes>`",
            )?;
            let causes: Vec<PropId> = causes
                .split_whitespace()
                .map(|c| parse_id(c, file, lineno).map(PropId::new))
                .collect::<Result<_>>()?;
            if causes.is_empty() {
                return Err(Error::parse(file, lineno, "table needs at least one cause"));
            }
            let entries: Vec<f64> = entries
                .split_whitespace()
                .map(|v| parse_prob(v, file, lineno))
                .collect::<Result<_>>()?;
            let expected = 1usize << causes.len();
            if entries.len() != expected {
                return Err(Error::parse(
                    file,
                    lineno,
                    format!("table over {} causes needs {expected} entries, found {}", causes.len(), entries.len()),
                ));
            }
            schema.tables.push(JointTable {
                causes,
                effect: PropId::new(parse_id(effect.trim(), file, lineno)?),
                entries,
            });
        }
        "prior" => {
            let (id, value) = split_once_on(rest, ':', file, lineno, "prior needs `: <p>`")?;
            let prop = PropId::new(parse_id(id.trim(), file, lineno)?);
            let prior = parse_prob(value.trim(), file, lineno)?;
            if schema.prior_assignments.insert(prop.clone(), prior).is_some() {
                return Err(Error::parse(file, lineno, format!("duplicate prior for `{prop}`")));
            }
        }
        "implicit_exception" => {
            let (head, link_part) = split_once_on(
                rest,
                ':',
                file,
                lineno,
                "implicit_exception needs `: link ...`",
            )?;
            let mut head_parts = head.split_whitespace();
            let prop = PropId::new(parse_id(
                head_parts
                    .next()
                    .ok_or_else(|| Error::parse(file, lineno, "implicit_exception needs an id"))?,
                file,
                lineno,
            )?);
            let exportable = match head_parts.next() {
                None => false,
                Some("exportable") => true,
                Some(other) => {
                    return Err(Error::parse(
                        file,
                        lineno,
                        format!("unexpected token `{other}` in implicit_exception"),
                    ))
                }
            };
            let body = link_part.trim().strip_prefix("link").ok_or_else(|| {
                Error::parse(file, lineno, "implicit_exception fragment must be a link")
            })?;
            let link = parse_link_body(body, file, lineno)?;
            match schema
                .implicit_exceptions
                .iter_mut()
                .find(|e| e.proposition == prop)
            {
                Some(existing) => {
                    if existing.exportable != exportable {
                        return Err(Error::parse(
                            file,
                            lineno,
                            format!("exception `{prop}` declared both exportable and not"),
                        ));
                    }
                    existing.links.push(link);
                }
                None => schema.implicit_exceptions.push(ExceptionDescriptor {
                    proposition: prop,
                    links: vec![link],
                    exportable,
                }),
            }
        }
        "precondition" => {
            schema
                .preconditions
                .push(PropId::new(parse_id(rest, file, lineno)?));
        }
        "backing" => {
            if schema.backing.is_some() {
                return Err(Error::parse(file, lineno, "schema already has a backing"));
            }
            schema.backing = Some(SchemaSetId::new(parse_id(rest, file, lineno)?));
        }
        other => {
            return Err(Error::parse(
                file,
                lineno,
                format!("unknown schema line `{other}`"),
            ));
        }
    }
    Ok(())
}

fn split_once_on(
    s: &str,
    sep: char,
    file: &str,
    lineno: usize,
    expect: &str,
) -> Result<(String, String)> {
    s.split_once(sep)
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .ok_or_else(|| Error::parse(file, lineno, expect))
}

fn split_once_str(
    s: &str,
    sep: &str,
    file: &str,
    lineno: usize,
    expect: &str,
) -> Result<(String, String)> {
    s.split_once(sep)
        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
        .ok_or_else(|| Error::parse(file, lineno, expect))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    const NECKLACE: &str = "\
# a small two-cause example
[propositions]
maid-dishonest 0 The maid is dishonest
children-playing 0 The children were playing in the room
necklace-missing 1 The gold necklace is missing

[schema theft]
link maid-dishonest -> necklace-missing : 0.9 0.01
link children-playing -> necklace-missing : 0.7 0.01
prior maid-dishonest : 0.1
prior children-playing : 0.3
";

    #[test]
    fn parses_propositions_schemata_and_links() {
        let kb = parse_kb(NECKLACE, "necklace.kb").unwrap();
        assert_eq!(kb.propositions().count(), 3);
        assert_eq!(kb.schemata().count(), 1);
        let schema = kb.schema(&SchemaId::new("theft")).unwrap();
        assert_eq!(schema.links.len(), 2);
        assert_eq!(kb.prior_of(&PropId::new("maid-dishonest")), Some(0.1));
        assert_eq!(
            kb.proposition(&PropId::new("maid-dishonest")).unwrap().label,
            "The maid is dishonest"
        );
    }

    #[test]
    fn empty_document_gives_empty_base() {
        let kb = parse_kb("", "empty.kb").unwrap();
        assert_eq!(kb.propositions().count(), 0);
        assert_eq!(kb.schemata().count(), 0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "[propositions]\na 0\nb zero\n";
        let err = parse_kb(text, "bad.kb").unwrap_err();
        match err {
            Error::Parse { file, line, .. } => {
                assert_eq!(file, "bad.kb");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn dangling_reference_is_rejected() {
        let text = "\
[propositions]
a 0

[schema s]
link a -> ghost : 0.5 0.1
";
        assert!(matches!(
            parse_kb(text, "dangling.kb"),
            Err(Error::UnknownProposition(_))
        ));
    }

    #[test]
    fn out_of_range_strength_is_rejected() {
        let text = "\
[propositions]
a 0
b 1

[schema s]
link a -> b : 1.5 0.1
";
        let err = parse_kb(text, "range.kb").unwrap_err();
        assert!(err.to_string().contains("1.5"));
    }

    #[test]
    fn equal_tier_link_is_rejected_at_load() {
        let text = "\
[propositions]
a 1
b 1

[schema s]
link a -> b : 0.5 0.1
";
        assert!(matches!(
            parse_kb(text, "tier.kb"),
            Err(Error::TierViolation { .. })
        ));
    }

    #[test]
    fn exception_and_backing_lines_parse() {
        let text = "\
[propositions]
maid-dishonest 0
necklace-misplaced 0
outsider-access 0
necklace-missing 1

[schema theft]
link maid-dishonest -> necklace-missing : 0.9 0.01
implicit_exception necklace-misplaced exportable : link necklace-misplaced -> necklace-missing : 0.8 0.01
precondition maid-dishonest
backing mechanism

[schema access]
link outsider-access -> necklace-missing : 0.6 0.01

[schema-set mechanism]
member access
";
        let kb = parse_kb(text, "full.kb").unwrap();
        let schema = kb.schema(&SchemaId::new("theft")).unwrap();
        assert_eq!(schema.implicit_exceptions.len(), 1);
        assert!(schema.implicit_exceptions[0].exportable);
        assert_eq!(schema.preconditions.len(), 1);
        assert_eq!(
            schema.backing.as_ref().map(|b| b.as_str()),
            Some("mechanism")
        );
        assert_eq!(kb.schema_sets().len(), 1);
    }

    #[test]
    fn table_entry_count_must_match() {
        let text = "\
[propositions]
a 0
b 0
c 1

[schema s]
table c | a b : 0.1 0.2 0.3
";
        let err = parse_kb(text, "table.kb").unwrap_err();
        assert!(err.to_string().contains("needs 4 entries"));
    }

    #[test]
    fn table_causes_must_be_sorted() {
        let text = "\
[propositions]
a 0
b 0
c 1

[schema s]
table c | b a : 0.1 0.2 0.3 0.4
";
        let err = parse_kb(text, "table.kb").unwrap_err();
        assert!(err.to_string().contains("sorted order"));
    }

    #[test]
    fn display_round_trips() {
        let kb = parse_kb(NECKLACE, "necklace.kb").unwrap();
        let redisplayed = parse_kb(&kb.to_string(), "canonical.kb").unwrap();
        assert_eq!(kb, redisplayed);
    }
}
