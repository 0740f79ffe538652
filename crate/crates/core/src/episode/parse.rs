use std::sync::OnceLock;

use regex::Regex;

use super::{OptionKind, OptionPayload, OptionSet, Outcome};

fn tag_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<(answer|action)>\s*([A-Z])\s*</(answer|action)>").unwrap())
}

/// Reads the last well-formed `<answer>L</answer>` or `<action>L</action>`
/// tag. The letter must name an option of the tag's kind.
pub fn parse_response(raw_text: &str, options: &OptionSet) -> Outcome {
    let last = tag_pattern()
        .captures_iter(raw_text)
        .filter(|c| c[1] == c[3])
        .last();
    let Some(c) = last else {
        return Outcome::Malformed;
    };
    let kind = if &c[1] == "answer" {
        OptionKind::Answer
    } else {
        OptionKind::Action
    };
    let letter = c[2].chars().next().unwrap();
    match options.get(letter).map(|o| (o.payload.kind(), o.payload)) {
        Some((k, OptionPayload::Answer { answer })) if k == kind => {
            Outcome::ChosenAnswer { letter, answer }
        }
        Some((k, OptionPayload::Action { action })) if k == kind => {
            Outcome::ChosenAction { letter, action }
        }
        _ => Outcome::Malformed,
    }
}
