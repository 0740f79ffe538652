//! The closed perception/reasoning/action loop and its step logs.

mod engine;
mod export;
mod options;
mod parse;
mod prompt;
mod render;
mod trace;
pub mod wire;

use serde::{Deserialize, Serialize};

use crate::agents::Privilege;
use crate::questions::{Answer, Question, SufficiencyFlags};
use crate::world::{Action, ObjectId, Observation, ScenarioCategory, SceneSpec};

pub use engine::{run_episode, EpisodeError, EpisodeSpec};
pub use export::{
    export_avr_core_records, import_avr_core_records, AvrCoreRecord, ExportError, AVRCORE_VERSION,
};
pub use options::{reveals_relevant, OptionError, OptionGenerator, MAX_POOL, MIN_POOL};
pub use parse::parse_response;
pub use prompt::{describe_observation, render_prompt, INSTRUCTION, NO_OBJECTS};
pub use render::{render_png, render_png_base64};
pub use trace::{validate_reasoning_trace, TraceReport, PHASE_HEADERS};

pub const EPISODE_VERSION: &str = "episode/1";
pub const DEFAULT_T_MAX: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptionKind {
    Answer,
    Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptionPayload {
    Answer { answer: Answer },
    Action { action: Action },
}

impl OptionPayload {
    pub fn kind(&self) -> OptionKind {
        match self {
            OptionPayload::Answer { .. } => OptionKind::Answer,
            OptionPayload::Action { .. } => OptionKind::Action,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateOption {
    pub letter: char,
    pub payload: OptionPayload,
    pub text: String,
    /// Zero-gain action. Always false for answers.
    pub is_distractor: bool,
}

/// Lettered candidates: answers first, then actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionSet {
    pub options: Vec<CandidateOption>,
}

impl OptionSet {
    pub fn get(&self, letter: char) -> Option<&CandidateOption> {
        self.options.iter().find(|o| o.letter == letter)
    }

    pub fn answers(&self) -> impl Iterator<Item = (char, Answer)> + '_ {
        self.options.iter().filter_map(|o| match o.payload {
            OptionPayload::Answer { answer } => Some((o.letter, answer)),
            _ => None,
        })
    }

    pub fn actions(&self) -> impl Iterator<Item = (char, Action)> + '_ {
        self.options.iter().filter_map(|o| match o.payload {
            OptionPayload::Action { action } => Some((o.letter, action)),
            _ => None,
        })
    }

    pub fn letter_of_answer(&self, a: Answer) -> Option<char> {
        self.answers().find(|x| x.1 == a).map(|x| x.0)
    }

    pub fn len(&self) -> usize {
        self.options.len()
    }

    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    ChosenAnswer { letter: char, answer: Answer },
    ChosenAction { letter: char, action: Action },
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub raw: String,
    pub structure: TraceReport,
}

/// What happened in the world when a chosen action ran.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionEffect {
    /// The target was not a visible object: nothing happened.
    pub invalid_target: bool,
    pub blocked: bool,
    /// Objects visible afterwards that had never been seen before.
    pub newly_seen: Vec<ObjectId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step_index: u32,
    /// Indices into [`EpisodeRecord::observations`] making up h_t.
    pub observation_history: Vec<u32>,
    pub past_actions: Vec<Action>,
    pub options: OptionSet,
    pub agent_raw_text: String,
    pub reasoning: ReasoningTrace,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info_gain: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_observation: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect: Option<ActionEffect>,
    /// Ground-truth sufficiency of the history before this step.
    pub gt_sufficient: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agent_flags: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Answered,
    StepCap,
    Malformed,
    /// Transport failure; excluded from metrics.
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSeeds {
    pub scene: u64,
    pub question: u64,
    pub options: u64,
    pub agent: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub category: ScenarioCategory,
    pub scenario_type: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub version: String,
    pub episode_id: u64,
    pub seeds: EpisodeSeeds,
    pub scenario: ScenarioMeta,
    pub agent: String,
    pub privilege: Privilege,
    /// "agent" or "human".
    pub source: String,
    pub question: Question,
    pub t_max: u32,
    pub initial_scene: SceneSpec,
    pub observations: Vec<Observation>,
    pub steps: Vec<StepRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_answer: Option<Answer>,
    pub terminated_by: Termination,
    pub initial_sufficiency: SufficiencyFlags,
    /// Shortest action count to sufficiency, if within the search bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_steps: Option<u32>,
    /// Distinct distractor actions offered over the episode.
    pub distractors_offered: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
}

impl EpisodeRecord {
    pub fn action_steps(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s.outcome, Outcome::ChosenAction { .. }))
            .count()
    }
}
