//! Literal markers and the small amount of string handling shared by the
//! operators, the fitness pipeline and the mocks.

/// Emotion placeholder in Layer-1 prompts.
pub const EMOTION_PLACEHOLDER: &str = "<em>";

/// First slot of Layer-2 and Layer-3 templates.
pub const SLOT_1: &str = "SENTENCE_1";

/// Second slot, only present in combine templates.
pub const SLOT_2: &str = "SENTENCE_2";

/// Mask marker sent to token suggesters.
pub const MASK: &str = "<mask>";

/// Collapses every run of Unicode whitespace to a single space and trims.
///
/// Two prompts are duplicates when their normalized texts are byte-equal.
pub fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Whitespace tokens of a prompt.
pub fn tokens(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// True when the token carries the emotion placeholder (e.g. `<em>` or `<em>?`).
pub fn is_placeholder_token(token: &str) -> bool {
    token.contains(EMOTION_PLACEHOLDER)
}

pub fn has_placeholder(text: &str) -> bool {
    text.contains(EMOTION_PLACEHOLDER)
}

/// Replaces every `<em>` with `label`.
pub fn instantiate_placeholder(text: &str, label: &str) -> String {
    text.replace(EMOTION_PLACEHOLDER, label)
}

/// Fills `SENTENCE_1` (and `SENTENCE_2` when given) in one left-to-right pass,
/// so slot names occurring inside the fill values are never re-expanded.
pub fn fill_slots(template: &str, first: &str, second: Option<&str>) -> String {
    let mut out = String::with_capacity(template.len() + first.len() * 2);
    let mut rest = template;
    loop {
        let next_1 = rest.find(SLOT_1).map(|p| (p, SLOT_1, first));
        let next_2 = second.and_then(|s| rest.find(SLOT_2).map(|p| (p, SLOT_2, s)));
        let next = match (next_1, next_2) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        match next {
            Some((pos, marker, value)) => {
                out.push_str(&rest[..pos]);
                out.push_str(value);
                rest = &rest[pos + marker.len()..];
            }
            None => {
                out.push_str(rest);
                return out;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_collapses_whitespace() {
        assert_eq!(normalize("  Write\ta  text\n"), "Write a text");
    }

    #[test]
    fn fill_slots_does_not_reexpand_values() {
        let out = fill_slots("Mix \"SENTENCE_1\" \"SENTENCE_2\"", "a SENTENCE_2", Some("b"));
        assert_eq!(out, "Mix \"a SENTENCE_2\" \"b\"");
    }

    #[test]
    fn fill_single_slot_leaves_second_marker() {
        let out = fill_slots("Rewrite: \"SENTENCE_1\"", "Combine SENTENCE_1 and SENTENCE_2", None);
        assert_eq!(out, "Rewrite: \"Combine SENTENCE_1 and SENTENCE_2\"");
    }

    #[test]
    fn instantiation_replaces_all() {
        assert_eq!(
            instantiate_placeholder("<em> sentence about <em>", "fear"),
            "fear sentence about fear"
        );
    }
}
