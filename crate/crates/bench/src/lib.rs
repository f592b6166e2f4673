//! Deterministic model generators shared by the criterion benches.

use std::fmt::Write;

/// Three-tier layered knowledge base: `roots` parentless propositions,
/// `mids` each caused by two roots, `leaves` each caused by two mids.
/// Strengths vary by index so no two families are identical.
pub fn layered_kb(roots: usize, mids: usize, leaves: usize) -> String {
    assert!(roots >= 2 && mids >= 2);
    let mut text = String::from("[propositions]\n");
    for i in 0..roots {
        writeln!(text, "r{i:02} 0").unwrap();
    }
    for i in 0..mids {
        writeln!(text, "m{i:02} 1").unwrap();
    }
    for i in 0..leaves {
        writeln!(text, "l{i:02} 2").unwrap();
    }
    for i in 0..mids {
        let a = i % roots;
        let b = (i + 3) % roots;
        writeln!(text, "\n[schema mid-{i:02}]").unwrap();
        writeln!(
            text,
            "link r{a:02} -> m{i:02} : {} 0.05",
            0.60 + 0.02 * i as f64
        )
        .unwrap();
        if b != a {
            writeln!(
                text,
                "link r{b:02} -> m{i:02} : {} 0.05",
                0.40 + 0.02 * i as f64
            )
            .unwrap();
        }
    }
    for i in 0..leaves {
        let a = i % mids;
        let b = (i + 1) % mids;
        writeln!(text, "\n[schema leaf-{i:02}]").unwrap();
        writeln!(
            text,
            "link m{a:02} -> l{i:02} : {} 0.02",
            0.55 + 0.03 * i as f64
        )
        .unwrap();
        if b != a {
            writeln!(
                text,
                "link m{b:02} -> l{i:02} : {} 0.02",
                0.35 + 0.03 * i as f64
            )
            .unwrap();
        }
    }
    writeln!(text, "\n[schema priors]").unwrap();
    for i in 0..roots {
        writeln!(text, "prior r{i:02} : {}", 0.20 + 0.05 * i as f64).unwrap();
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use doxa_core::{activate_forward, compile, frames_from_activation, parse_kb, PropId};
    use std::collections::BTreeSet;

    #[test]
    fn layered_kb_compiles_to_the_expected_size() {
        let kb = parse_kb(&layered_kb(8, 8, 8), "bench.kb").unwrap();
        let grounds: BTreeSet<PropId> = (0..8)
            .map(|i| PropId::new(format!("r{i:02}")))
            .chain((0..8).map(|i| PropId::new(format!("m{i:02}"))))
            .collect();
        let mut frames = Vec::new();
        for act in activate_forward(&kb, &grounds).unwrap() {
            frames.extend(frames_from_activation(&act, &kb).unwrap());
        }
        let net = compile(&frames, &kb).unwrap();
        assert_eq!(net.len(), 24);
    }
}
