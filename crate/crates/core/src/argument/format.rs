//! Textual encoding of a frame set, one section per frame:
//!
//! ```text
//! [frame <id>]
//! direction causal|diagnostic
//! claim <prop>
//! grounds <prop...>
//! qualifier table <entries...>  |  qualifier noisy-or <links...> @ <leak>
//! warrant <schema>
//! backing <schema-set>          (optional)
//! rebuttal <prop>               (repeatable)
//! ```
//!
//! The id in the header is redundant with (warrant, claim, direction) and is
//! checked against them, so a hand-edited file cannot smuggle in a frame
//! whose id lies about its slots. Diagnostic strength is not stored either;
//! it is recomputed from the qualifier's emission pair.

use super::{ArgumentFrame, DiagnosticStrength, Direction, Qualifier};
use crate::error::{Error, Result};
use crate::symbol::{is_valid_id, PropId, SchemaId, SchemaSetId};
use std::fmt::Write as _;

/// Serializes frames in order to the `[frame]` text form.
pub fn frames_to_text(frames: &[ArgumentFrame]) -> String {
    let mut out = String::new();
    for (i, frame) in frames.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "[frame {}]", frame.id);
        let direction = match frame.direction {
            Direction::Causal => "causal",
            Direction::Diagnostic => "diagnostic",
        };
        let _ = writeln!(out, "direction {direction}");
        let _ = writeln!(out, "claim {}", frame.claim);
        let grounds: Vec<&str> = frame.grounds.iter().map(|g| g.as_str()).collect();
        let _ = writeln!(out, "grounds {}", grounds.join(" "));
        match &frame.qualifier {
            Qualifier::FullTable { entries } => {
                let _ = writeln!(out, "qualifier table {}", join_floats(entries));
            }
            Qualifier::NoisyOr { links, leak } => {
                let _ = writeln!(out, "qualifier noisy-or {} @ {}", join_floats(links), leak);
            }
        }
        let _ = writeln!(out, "warrant {}", frame.warrant);
        if let Some(backing) = &frame.backing {
            let _ = writeln!(out, "backing {backing}");
        }
        for rebuttal in &frame.rebuttals {
            let _ = writeln!(out, "rebuttal {rebuttal}");
        }
    }
    out
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Default)]
struct Partial {
    header: String,
    header_line: usize,
    direction: Option<Direction>,
    claim: Option<PropId>,
    grounds: Option<Vec<PropId>>,
    qualifier: Option<Qualifier>,
    warrant: Option<SchemaId>,
    backing: Option<SchemaSetId>,
    rebuttals: Vec<PropId>,
}

impl Partial {
    fn finish(self, file: &str) -> Result<ArgumentFrame> {
        let line = self.header_line;
        let missing = |what: &str| {
            Error::parse(
                file,
                line,
                format!("frame `{}` is missing its {what} line", self.header),
            )
        };
        let direction = self.direction.ok_or_else(|| missing("direction"))?;
        let claim = self.claim.clone().ok_or_else(|| missing("claim"))?;
        let grounds = self.grounds.clone().ok_or_else(|| missing("grounds"))?;
        let qualifier = self.qualifier.clone().ok_or_else(|| missing("qualifier"))?;
        let warrant = self.warrant.clone().ok_or_else(|| missing("warrant"))?;
        let id = ArgumentFrame::frame_id(&warrant, &claim, direction);
        if id.as_str() != self.header {
            return Err(Error::parse(
                file,
                line,
                format!(
                    "frame header `{}` does not match its slots (expected `{id}`)",
                    self.header
                ),
            ));
        }
        if grounds.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::parse(
                file,
                line,
                format!("grounds of `{id}` must be distinct and sorted"),
            ));
        }
        qualifier.validate(grounds.len(), &claim)?;
        let frame = ArgumentFrame {
            id,
            grounds,
            claim,
            qualifier,
            warrant,
            backing: self.backing,
            rebuttals: self.rebuttals,
            direction,
            diagnostic: None,
        };
        let diagnostic = match direction {
            Direction::Causal => None,
            Direction::Diagnostic => {
                let (s, b) = frame.emission().ok_or_else(|| {
                    Error::parse(file, line, format!("`{}` has no emission pair", frame.id))
                })?;
                Some(DiagnosticStrength {
                    lr: if b > 0.0 { s / b } else { f64::INFINITY },
                    baseline: b,
                })
            }
        };
        Ok(ArgumentFrame { diagnostic, ..frame })
    }
}

/// Parses the `[frame]` text form. Inverse of [`frames_to_text`]; local
/// structure is checked here, tier legality only at compile time.
pub fn parse_frames_text(text: &str, file: &str) -> Result<Vec<ArgumentFrame>> {
    let mut frames: Vec<ArgumentFrame> = Vec::new();
    let mut current: Option<Partial> = None;
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
        if let Some(header) = line.strip_prefix("[frame ").and_then(|r| r.strip_suffix(']')) {
            if let Some(done) = current.take() {
                frames.push(done.finish(file)?);
            }
            current = Some(Partial {
                header: header.trim().to_string(),
                header_line: lineno,
                ..Partial::default()
            });
            continue;
        }
        let partial = current
            .as_mut()
            .ok_or_else(|| Error::parse(file, lineno, "expected a `[frame <id>]` header"))?;
        let (key, rest) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::parse(file, lineno, format!("`{line}` has no value")))?;
        let rest = rest.trim();
        let set_once = |slot_is_empty: bool| -> Result<()> {
            if !slot_is_empty {
                return Err(Error::parse(file, lineno, format!("duplicate `{key}` line")));
            }
            Ok(())
        };
        match key {
            "direction" => {
                set_once(partial.direction.is_none())?;
                partial.direction = Some(match rest {
                    "causal" => Direction::Causal,
                    "diagnostic" => Direction::Diagnostic,
                    other => {
                        return Err(Error::parse(
                            file,
                            lineno,
                            format!("direction must be causal or diagnostic, found `{other}`"),
                        ))
                    }
                });
            }
            "claim" => {
                set_once(partial.claim.is_none())?;
                partial.claim = Some(parse_id(rest, file, lineno)?);
            }
            "grounds" => {
                set_once(partial.grounds.is_none())?;
                let grounds: Vec<PropId> = rest
                    .split_whitespace()
                    .map(|g| parse_id(g, file, lineno))
                    .collect::<Result<_>>()?;
                if grounds.is_empty() {
                    return Err(Error::parse(file, lineno, "grounds cannot be empty"));
                }
                partial.grounds = Some(grounds);
            }
            "qualifier" => {
                set_once(partial.qualifier.is_none())?;
                partial.qualifier = Some(parse_qualifier(rest, file, lineno)?);
            }
            "warrant" => {
                set_once(partial.warrant.is_none())?;
                if !is_valid_id(rest) {
                    return Err(Error::parse(file, lineno, format!("invalid identifier `{rest}`")));
                }
                partial.warrant = Some(SchemaId::new(rest));
            }
            "backing" => {
                set_once(partial.backing.is_none())?;
                if !is_valid_id(rest) {
                    return Err(Error::parse(file, lineno, format!("invalid identifier `{rest}`")));
                }
                partial.backing = Some(SchemaSetId::new(rest));
            }
            "rebuttal" => {
                partial.rebuttals.push(parse_id(rest, file, lineno)?);
            }
            other => {
                return Err(Error::parse(file, lineno, format!("unknown frame line `{other}`")));
            }
        }
    }
    if let Some(done) = current.take() {
        frames.push(done.finish(file)?);
    }
    Ok(frames)
}

fn parse_id(token: &str, file: &str, lineno: usize) -> Result<PropId> {
    if !is_valid_id(token) {
        return Err(Error::parse(file, lineno, format!("invalid identifier `{token}`")));
    }
    Ok(PropId::new(token))
}

fn parse_qualifier(rest: &str, file: &str, lineno: usize) -> Result<Qualifier> {
    let parse_floats = |s: &str| -> Result<Vec<f64>> {
        s.split_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::parse(file, lineno, format!("expected number, found `{v}`")))
            })
            .collect()
    };
    if let Some(v) = rest.strip_prefix("table ") {
        Ok(Qualifier::FullTable {
            entries: parse_floats(v)?,
        })
    } else if let Some(v) = rest.strip_prefix("noisy-or ") {
        let (links, leak) = v
            .split_once('@')
            .ok_or_else(|| Error::parse(file, lineno, "noisy-or needs `@ <leak>`"))?;
        let leak: f64 = leak.trim().parse().map_err(|_| {
            Error::parse(file, lineno, format!("expected leak, found `{}`", leak.trim()))
        })?;
        Ok(Qualifier::NoisyOr {
            links: parse_floats(links)?,
            leak,
        })
    } else {
        Err(Error::parse(
            file,
            lineno,
            "qualifier must be `table` or `noisy-or`",
        ))
    }
}
