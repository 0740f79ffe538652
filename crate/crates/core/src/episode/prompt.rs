use std::fmt::Write;

use super::OptionSet;
use crate::questions::PublicQuestion;
use crate::world::{Action, Observation};

pub const INSTRUCTION: &str = "You are required to perform active visual reasoning: when the information obtained from image observations is insufficient to answer the question, you need to make action decisions to interact with the environment in order to acquire additional visual information relevant to the question. You should continue gathering new observations until you can infer and summarize a reliable answer based on the accumulated visual history. Choose either an answer to the question or an action decision option from the options above. Final option choice follow this format: (your analysis)...<answer>A/B/C/D/E/F...</answer>";

pub const NO_OBJECTS: &str = "No objects are visible.";

/// One line per visible object: attributes, id and coarse location.
pub fn describe_observation(obs: &Observation) -> String {
    if obs.visible.is_empty() {
        return NO_OBJECTS.to_string();
    }
    let mut out = String::new();
    for v in &obs.visible {
        let _ = writeln!(
            out,
            "- {} #{} ({})",
            v.object.describe(),
            v.object.id,
            v.location
        );
    }
    out.pop();
    out
}

pub fn render_prompt(
    question: &PublicQuestion,
    options: &OptionSet,
    observation: &Observation,
    past_actions: &[Action],
) -> String {
    let mut out = String::new();
    out.push_str(INSTRUCTION);
    out.push_str("\n\nQuestion: ");
    out.push_str(&question.text);
    let _ = write!(
        out,
        "\n\nObservation (step {}, camera azimuth {} degrees, {} elevation):\n{}",
        observation.step_index,
        observation.camera.azimuth,
        observation.camera.elevation.name(),
        describe_observation(observation)
    );
    if !past_actions.is_empty() {
        out.push_str("\n\nActions taken so far:");
        for (i, a) in past_actions.iter().enumerate() {
            let _ = write!(out, "\n{}. {a}", i + 1);
        }
    }
    out.push_str("\n\nOptions:");
    for o in &options.options {
        let tag = match o.payload.kind() {
            super::OptionKind::Answer => "",
            super::OptionKind::Action => "[Action] ",
        };
        let _ = write!(out, "\n{}. {tag}{}", o.letter, o.text);
    }
    out
}
