//! Agents share one interface: given what a step shows them, return raw text.
//!
//! What an agent may see is fixed by its [`Privilege`]. The engine builds an
//! [`AgentView`] and only fills in geometry hints or full-scene access for
//! agents that declare the matching capability.

mod baselines;
mod eig;
mod external;
mod transcript;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::belief::{HiddenSlot, SlotId};
use crate::episode::{OptionKind, OptionPayload};
use crate::questions::{Answer, PublicQuestion};
use crate::world::{Action, ObjectSpec, Observation, SceneSpec};

pub use baselines::{
    answer_from_objects, GreedyRevealAgent, HumanAgent, OmniscientAgent, PassiveAgent, RandomAgent,
};
pub use eig::EigOracleAgent;
pub use external::{Endpoint, ExternalAgent, DEFAULT_TIMEOUT_MS};
pub use transcript::TranscriptAgent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Privilege {
    /// Prompt, options and observations only.
    None,
    /// Also hiding-site geometry: where things may be hidden and which
    /// options uncover which sites, never what is there.
    Geometry,
    /// The full scene and the ground-truth answer.
    Full,
}

/// An option as agents see it: no distractor flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionView {
    pub letter: char,
    pub kind: OptionKind,
    pub text: String,
    pub payload: OptionPayload,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GeometryHints {
    /// Hiding sites of the initial view.
    pub slots: Vec<HiddenSlot>,
    /// Open slots each action option would uncover.
    pub reveals: BTreeMap<char, BTreeSet<SlotId>>,
    /// Slots uncovered so far, with what they turned out to hold.
    pub revealed: BTreeMap<SlotId, ObjectSpec>,
    /// Filled only when no option uncovers a slot: for each action option,
    /// the fewest actions (this one included) after which each open slot
    /// becomes visible, within the remaining step budget.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub reach: BTreeMap<char, BTreeMap<SlotId, u32>>,
}

pub struct FullAccess<'a> {
    pub scene: &'a SceneSpec,
    pub ground_truth: Answer,
}

pub struct AgentView<'a> {
    pub episode_id: u64,
    pub step: u32,
    pub question: &'a PublicQuestion,
    pub prompt: &'a str,
    pub options: &'a [OptionView],
    pub observation: &'a Observation,
    /// o_0..=o_t.
    pub history: &'a [Observation],
    pub past_actions: &'a [Action],
    pub image_png_base64: Option<&'a str>,
    pub geometry: Option<&'a GeometryHints>,
    pub full: Option<FullAccess<'a>>,
}

impl AgentView<'_> {
    /// Latest snapshot of every object seen so far, sorted by id.
    pub fn known_objects(&self) -> Vec<ObjectSpec> {
        let mut m: BTreeMap<u32, &ObjectSpec> = BTreeMap::new();
        for o in self.history {
            for obj in o.objects() {
                m.insert(obj.id, obj);
            }
        }
        m.into_values().cloned().collect()
    }

    pub fn answer_letter(&self, a: Answer) -> Option<char> {
        self.options.iter().find_map(|o| match o.payload {
            OptionPayload::Answer { answer } if answer == a => Some(o.letter),
            _ => None,
        })
    }

    pub fn answer_options(&self) -> impl Iterator<Item = (char, Answer)> + '_ {
        self.options.iter().filter_map(|o| match o.payload {
            OptionPayload::Answer { answer } => Some((o.letter, answer)),
            _ => None,
        })
    }

    pub fn action_options(&self) -> impl Iterator<Item = (char, Action)> + '_ {
        self.options.iter().filter_map(|o| match o.payload {
            OptionPayload::Action { action } => Some((o.letter, action)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("no response within {0} ms")]
    Timeout(u64),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("transcript exhausted at step {0}")]
    TranscriptExhausted(u32),
}

pub trait Agent: Send {
    fn name(&self) -> String;

    fn privilege(&self) -> Privilege {
        Privilege::None
    }

    /// "agent" or "human".
    fn source(&self) -> &'static str {
        "agent"
    }

    fn begin_episode(&mut self, _episode_id: u64, _seed: u64) {}

    fn respond(&mut self, view: &AgentView<'_>) -> Result<String, AgentError>;

    /// Log flags raised while producing the last response.
    fn take_flags(&mut self) -> Vec<String> {
        Vec::new()
    }
}

pub const AGENT_NAMES: [&str; 5] = ["passive", "random", "greedy", "eig", "omniscient"];

/// Built-in agent by registry name.
pub fn by_name(name: &str) -> Option<Box<dyn Agent>> {
    Some(match name {
        "passive" => Box::new(PassiveAgent),
        "random" => Box::new(RandomAgent::default()),
        "greedy" => Box::new(GreedyRevealAgent),
        "eig" | "eig_oracle" => Box::new(EigOracleAgent::default()),
        "omniscient" => Box::new(OmniscientAgent),
        _ => return None,
    })
}

pub(crate) fn tag(kind: OptionKind, letter: char) -> String {
    match kind {
        OptionKind::Answer => format!("<answer>{letter}</answer>"),
        OptionKind::Action => format!("<action>{letter}</action>"),
    }
}
