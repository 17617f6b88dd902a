//! Local attribute knowledge base and template slot-filling.
//!
//! Prompts are built from templates with `[attribute]` slots whose values
//! come from a flat `(concept, attribute) -> value` table. This is the
//! deterministic stand-in for querying an external knowledge source about a
//! concept's visual appearance.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Map from `(concept, attribute)` to an attribute value.
///
/// Serialized as a flat JSON object keyed by `"concept.attribute"`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeKb {
    entries: BTreeMap<String, String>,
}

impl AttributeKb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, concept: &str, attribute: &str, value: &str) {
        self.entries
            .insert(format!("{concept}.{attribute}"), value.to_string());
    }

    pub fn get(&self, concept: &str, attribute: &str) -> Option<&str> {
        self.entries
            .get(&format!("{concept}.{attribute}"))
            .map(String::as_str)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::DatasetParse {
            line: e.line(),
            message: format!("knowledge base {}: {e}", path.display()),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.entries)
            .expect("string map serialization cannot fail");
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

impl FromIterator<(String, String)> for AttributeKb {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        AttributeKb {
            entries: iter.into_iter().collect(),
        }
    }
}

/// Fill every `[attribute]` slot in `template` with the KB value for
/// `(concept, attribute)`. Templates without slots pass through unchanged.
pub fn build_prompt(template: &str, concept: &str, kb: &AttributeKb) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('[') {
        let after = &rest[open + 1..];
        let close = after.find(']').ok_or_else(|| {
            Error::InvalidSpec(format!("unclosed slot in template {template:?}"))
        })?;
        let attribute = &after[..close];
        let value = kb
            .get(concept, attribute)
            .ok_or_else(|| Error::MissingAttribute {
                concept: concept.to_string(),
                attribute: attribute.to_string(),
            })?;
        out.push_str(&rest[..open]);
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kb() -> AttributeKb {
        let mut kb = AttributeKb::new();
        kb.insert("polyp", "color", "pink");
        kb.insert("polyp", "shape", "round");
        kb
    }

    #[test]
    fn no_slots_passes_through() {
        assert_eq!(build_prompt("pink polyp", "polyp", &kb()).unwrap(), "pink polyp");
    }

    #[test]
    fn single_slot_substitution() {
        assert_eq!(build_prompt("[color] polyp", "polyp", &kb()).unwrap(), "pink polyp");
    }

    #[test]
    fn multiple_slots() {
        assert_eq!(
            build_prompt("[color] [shape] polyp", "polyp", &kb()).unwrap(),
            "pink round polyp"
        );
    }

    #[test]
    fn missing_attribute_names_the_pair() {
        let err = build_prompt("[shape] lesion", "lesion", &kb()).unwrap_err();
        match err {
            Error::MissingAttribute { concept, attribute } => {
                assert_eq!(concept, "lesion");
                assert_eq!(attribute, "shape");
            }
            other => panic!("expected MissingAttribute, got {other:?}"),
        }
    }

    #[test]
    fn unclosed_slot_is_invalid() {
        assert!(build_prompt("[color polyp", "polyp", &kb()).is_err());
    }

    #[test]
    fn kb_json_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.json");
        let original = kb();
        original.save(&path).unwrap();
        let loaded = AttributeKb::load(&path).unwrap();
        assert_eq!(original, loaded);
    }
}
