//! One document per step, in the shape of a step-level training sample.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    ActionEffect, EpisodeRecord, EpisodeSeeds, OptionSet, Outcome, ReasoningTrace, ScenarioMeta,
    StepRecord, Termination,
};
use crate::agents::Privilege;
use crate::questions::{Answer, Question, SufficiencyFlags};
use crate::world::{Action, Observation, SceneSpec};

pub const AVRCORE_VERSION: &str = "avrcore/1";

/// Episode-level fields, carried on the first document of each episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub version: String,
    pub seeds: EpisodeSeeds,
    pub scenario: ScenarioMeta,
    pub agent: String,
    pub privilege: Privilege,
    pub source: String,
    pub t_max: u32,
    pub initial_scene: SceneSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_answer: Option<Answer>,
    pub terminated_by: Termination,
    pub initial_sufficiency: SufficiencyFlags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_steps: Option<u32>,
    pub distractors_offered: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvrCoreRecord {
    pub version: String,
    pub episode_id: u64,
    pub step_index: u32,
    pub question: Question,
    /// h_t as indices into the episode's observation list.
    pub observation_history: Vec<u32>,
    /// o_t.
    pub observation: Observation,
    pub past_actions: Vec<Action>,
    pub options: OptionSet,
    pub agent_raw_text: String,
    pub think: ReasoningTrace,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info_gain: Option<bool>,
    /// o_{t+1}; absent for answering and malformed steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_observation: Option<Observation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_observation_index: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect: Option<ActionEffect>,
    pub gt_sufficient: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agent_flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode: Option<EpisodeHeader>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExportError {
    #[error("episode {0}: first document carries no episode header")]
    MissingHeader(u64),
    #[error("episode {episode}: expected step {expected}, found {found}")]
    StepGap {
        episode: u64,
        expected: u32,
        found: u32,
    },
    #[error("episode {0}: observation indices are inconsistent")]
    Observations(u64),
}

/// Episodes without steps (aborted before the first response) produce no
/// documents.
pub fn export_avr_core_records(episode: &EpisodeRecord) -> Vec<AvrCoreRecord> {
    episode
        .steps
        .iter()
        .map(|s| {
            let current = *s.observation_history.last().unwrap_or(&0);
            AvrCoreRecord {
                version: AVRCORE_VERSION.into(),
                episode_id: episode.episode_id,
                step_index: s.step_index,
                question: episode.question.clone(),
                observation_history: s.observation_history.clone(),
                observation: episode.observations[current as usize].clone(),
                past_actions: s.past_actions.clone(),
                options: s.options.clone(),
                agent_raw_text: s.agent_raw_text.clone(),
                think: s.reasoning.clone(),
                outcome: s.outcome,
                info_gain: s.info_gain,
                next_observation: s
                    .next_observation
                    .map(|i| episode.observations[i as usize].clone()),
                next_observation_index: s.next_observation,
                effect: s.effect.clone(),
                gt_sufficient: s.gt_sufficient,
                agent_flags: s.agent_flags.clone(),
                episode: (s.step_index == 0).then(|| EpisodeHeader {
                    version: episode.version.clone(),
                    seeds: episode.seeds,
                    scenario: episode.scenario,
                    agent: episode.agent.clone(),
                    privilege: episode.privilege,
                    source: episode.source.clone(),
                    t_max: episode.t_max,
                    initial_scene: episode.initial_scene.clone(),
                    final_answer: episode.final_answer,
                    terminated_by: episode.terminated_by,
                    initial_sufficiency: episode.initial_sufficiency,
                    min_steps: episode.min_steps,
                    distractors_offered: episode.distractors_offered,
                    abort_reason: episode.abort_reason.clone(),
                }),
            }
        })
        .collect()
}

/// Rebuilds episode records from step documents, ordered by episode id.
pub fn import_avr_core_records(docs: &[AvrCoreRecord]) -> Result<Vec<EpisodeRecord>, ExportError> {
    let mut by_episode: BTreeMap<u64, Vec<&AvrCoreRecord>> = BTreeMap::new();
    for d in docs {
        by_episode.entry(d.episode_id).or_default().push(d);
    }
    let mut out = Vec::new();
    for (id, mut docs) in by_episode {
        docs.sort_by_key(|d| d.step_index);
        let header = docs[0]
            .episode
            .clone()
            .ok_or(ExportError::MissingHeader(id))?;
        let mut observations = vec![docs[0].observation.clone()];
        let mut steps = Vec::new();
        for (i, d) in docs.iter().enumerate() {
            if d.step_index != i as u32 {
                return Err(ExportError::StepGap {
                    episode: id,
                    expected: i as u32,
                    found: d.step_index,
                });
            }
            if let (Some(o), Some(idx)) = (&d.next_observation, d.next_observation_index) {
                if idx as usize != observations.len() {
                    return Err(ExportError::Observations(id));
                }
                observations.push(o.clone());
            }
            steps.push(StepRecord {
                step_index: d.step_index,
                observation_history: d.observation_history.clone(),
                past_actions: d.past_actions.clone(),
                options: d.options.clone(),
                agent_raw_text: d.agent_raw_text.clone(),
                reasoning: d.think.clone(),
                outcome: d.outcome,
                info_gain: d.info_gain,
                next_observation: d.next_observation_index,
                effect: d.effect.clone(),
                gt_sufficient: d.gt_sufficient,
                agent_flags: d.agent_flags.clone(),
            });
        }
        out.push(EpisodeRecord {
            version: header.version,
            episode_id: id,
            seeds: header.seeds,
            scenario: header.scenario,
            agent: header.agent,
            privilege: header.privilege,
            source: header.source,
            question: docs[0].question.clone(),
            t_max: header.t_max,
            initial_scene: header.initial_scene,
            observations,
            steps,
            final_answer: header.final_answer,
            terminated_by: header.terminated_by,
            initial_sufficiency: header.initial_sufficiency,
            min_steps: header.min_steps,
            distractors_offered: header.distractors_offered,
            abort_reason: header.abort_reason,
        });
    }
    Ok(out)
}
