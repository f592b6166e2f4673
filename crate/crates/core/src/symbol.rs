//! Interned-ish string identifiers for the domain objects.
//!
//! Everything in the engine is addressed by name: propositions, schemata,
//! schema sets, and exported arguments. Newtypes keep the namespaces from
//! leaking into one another.

use std::fmt;

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                $name(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

id_type!(
    /// Names a proposition; doubles as the node id in compiled networks.
    PropId
);
id_type!(
    /// Names a schema inside a knowledge base.
    SchemaId
);
id_type!(
    /// Names a schema set used as backing for another schema.
    SchemaSetId
);
id_type!(
    /// Names an exported argument frame: `warrant:claim` for causal frames,
    /// `warrant:claim:dx` for diagnostic ones, so the two never collide.
    ArgumentId
);

/// True if `s` is usable as an identifier in the textual formats: nonempty,
/// ASCII alphanumerics plus `-` and `_`, so ids never collide with syntax.
pub fn is_valid_id(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_namespaces_are_distinct_types() {
        let p = PropId::new("necklace-missing");
        assert_eq!(p.as_str(), "necklace-missing");
        assert_eq!(format!("{p}"), "necklace-missing");
    }

    #[test]
    fn identifier_charset() {
        assert!(is_valid_id("toss-01"));
        assert!(is_valid_id("a_b"));
        assert!(!is_valid_id(""));
        assert!(!is_valid_id("has space"));
        assert!(!is_valid_id("arrow->sign"));
    }
}
