use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::options::{reveals_relevant, OptionError, OptionGenerator};
use super::{
    parse_response, render_png_base64, render_prompt, validate_reasoning_trace, ActionEffect,
    EpisodeRecord, EpisodeSeeds, OptionSet, Outcome, ReasoningTrace, ScenarioMeta, StepRecord,
    Termination, EPISODE_VERSION, PHASE_HEADERS,
};
use crate::agents::{Agent, AgentView, FullAccess, GeometryHints, OptionView, Privilege};
use crate::belief::{min_steps_reduced, slots_from_sites, SlotId, MAX_SEARCH_DEPTH};
use crate::questions::{initial_sufficiency_flags, sufficiency_given_seen, Question};
use crate::world::{
    apply_action, hiding_sites, min_steps_to_see, observe, ObjectId, Observation, SceneSpec,
};

/// Everything needed to run one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub episode_id: u64,
    pub seeds: EpisodeSeeds,
    pub scenario: ScenarioMeta,
    pub scene: SceneSpec,
    pub question: Question,
    pub t_max: u32,
    pub render_images: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Options(#[from] OptionError),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

fn option_views(set: &OptionSet) -> Vec<OptionView> {
    set.options
        .iter()
        .map(|o| OptionView {
            letter: o.letter,
            kind: o.payload.kind(),
            text: o.text.clone(),
            payload: o.payload,
        })
        .collect()
}

/// Latest snapshot of `id` among the observations.
fn last_seen(observations: &[Observation], id: ObjectId) -> Option<&crate::world::ObjectSpec> {
    observations
        .iter()
        .rev()
        .find_map(|o| o.objects().find(|x| x.id == id))
}

fn geometry_hints(
    scene: &SceneSpec,
    slots: &[crate::belief::HiddenSlot],
    slot_objects: &[(SlotId, ObjectId)],
    seen: &BTreeSet<ObjectId>,
    observations: &[Observation],
    options: &OptionSet,
    budget: u32,
) -> GeometryHints {
    let mut reveals = BTreeMap::new();
    for (letter, action) in options.actions() {
        let after = apply_action(scene, &action)
            .map(|(n, _)| observe(&n, 0).ids())
            .unwrap_or_default();
        let r: BTreeSet<SlotId> = slot_objects
            .iter()
            .filter(|(_, id)| !seen.contains(id) && after.contains(id))
            .map(|(s, _)| *s)
            .collect();
        reveals.insert(letter, r);
    }
    let revealed = slot_objects
        .iter()
        .filter(|(_, id)| seen.contains(id))
        .filter_map(|(s, id)| last_seen(observations, *id).map(|o| (*s, o.clone())))
        .collect();
    let mut reach = BTreeMap::new();
    let open: Vec<(SlotId, ObjectId)> = slot_objects
        .iter()
        .copied()
        .filter(|(_, id)| !seen.contains(id))
        .collect();
    if !open.is_empty() && reveals.values().all(|r: &BTreeSet<SlotId>| r.is_empty()) {
        for (letter, action) in options.actions() {
            let Ok((next, _)) = apply_action(scene, &action) else {
                continue;
            };
            let mut s = seen.clone();
            s.extend(observe(&next, 0).ids());
            let dist: BTreeMap<SlotId, u32> = open
                .iter()
                .filter_map(|&(slot, id)| {
                    let d = min_steps_to_see(
                        &next,
                        &s,
                        &BTreeSet::from([id]),
                        budget.saturating_sub(1),
                    )?;
                    Some((slot, d + 1))
                })
                .collect();
            reach.insert(letter, dist);
        }
    }
    GeometryHints {
        slots: slots.to_vec(),
        reveals,
        revealed,
        reach,
    }
}

/// Runs the perceive/reason/act loop until the agent answers, produces an
/// unparseable response, or has taken `t_max` actions.
pub fn run_episode(
    spec: &EpisodeSpec,
    agent: &mut dyn Agent,
) -> Result<EpisodeRecord, EpisodeError> {
    let q = &spec.question;
    let privilege = agent.privilege();
    let mut scene = spec.scene.clone();
    let mut observations = vec![observe(&scene, 0)];
    let mut seen = observations[0].ids();

    let sites = hiding_sites(&scene);
    let slots = slots_from_sites(&sites);
    let slot_objects: Vec<(SlotId, ObjectId)> = slots
        .iter()
        .zip(&sites)
        .map(|(s, h)| (s.slot_id, h.object_id))
        .collect();

    let mut generator = OptionGenerator::new(spec.seeds.options);
    agent.begin_episode(spec.episode_id, spec.seeds.agent);

    let mut steps = Vec::new();
    let mut past_actions = Vec::new();
    let mut final_answer = None;
    let mut abort_reason = None;
    let mut step = 0u32;
    let terminated_by = loop {
        let gt_sufficient = sufficiency_given_seen(&scene, q, &seen).sufficient();
        if past_actions.len() as u32 >= spec.t_max {
            break Termination::StepCap;
        }
        let options = generator.generate(&scene, q, &seen, step, spec.t_max)?;
        let current = observations.last().unwrap().clone();
        let prompt = render_prompt(&q.public, &options, &current, &past_actions);
        let image = spec.render_images.then(|| render_png_base64(&current));
        let hints = (privilege >= Privilege::Geometry).then(|| {
            geometry_hints(
                &scene,
                &slots,
                &slot_objects,
                &seen,
                &observations,
                &options,
                spec.t_max - step,
            )
        });
        let views = option_views(&options);
        let view = AgentView {
            episode_id: spec.episode_id,
            step,
            question: &q.public,
            prompt: &prompt,
            options: &views,
            observation: &current,
            history: &observations,
            past_actions: &past_actions,
            image_png_base64: image.as_deref(),
            geometry: hints.as_ref(),
            full: (privilege >= Privilege::Full).then_some(FullAccess {
                scene: &scene,
                ground_truth: q.ground_truth,
            }),
        };
        let raw = match agent.respond(&view) {
            Ok(t) => t,
            Err(e) => {
                abort_reason = Some(e.to_string());
                break Termination::Aborted;
            }
        };
        let agent_flags = agent.take_flags();
        let outcome = parse_response(&raw, &options);
        let reasoning = ReasoningTrace {
            structure: validate_reasoning_trace(&raw, &PHASE_HEADERS),
            raw: raw.clone(),
        };
        let mut record = StepRecord {
            step_index: step,
            observation_history: (0..observations.len() as u32).collect(),
            past_actions: past_actions.clone(),
            options,
            agent_raw_text: raw,
            reasoning,
            outcome,
            info_gain: None,
            next_observation: None,
            effect: None,
            gt_sufficient,
            agent_flags,
        };
        match outcome {
            Outcome::ChosenAnswer { answer, .. } => {
                steps.push(record);
                final_answer = Some(answer);
                break Termination::Answered;
            }
            Outcome::Malformed => {
                steps.push(record);
                break Termination::Malformed;
            }
            Outcome::ChosenAction { action, .. } => {
                let mut effect = ActionEffect::default();
                match apply_action(&scene, &action) {
                    Ok((next, out)) => {
                        effect.blocked = out.blocked;
                        scene = next;
                    }
                    Err(_) => effect.invalid_target = true,
                }
                let after = observe(&scene, step + 1);
                let gain = reveals_relevant(&seen, &after, q);
                effect.newly_seen = after.ids().difference(&seen).copied().collect();
                seen.extend(after.ids());
                observations.push(after);
                record.info_gain = Some(gain);
                record.next_observation = Some(observations.len() as u32 - 1);
                record.effect = Some(effect);
                steps.push(record);
                past_actions.push(action);
            }
        }
        step += 1;
    };

    if steps.len() as u32 > spec.t_max + 1 {
        return Err(EpisodeError::Invariant(format!(
            "{} steps exceed the cap",
            steps.len()
        )));
    }
    let depth = spec.t_max.min(MAX_SEARCH_DEPTH);
    let min_steps = min_steps_reduced(&spec.scene, q, depth)
        .map_err(|e| EpisodeError::Invariant(e.to_string()))?;
    Ok(EpisodeRecord {
        version: EPISODE_VERSION.into(),
        episode_id: spec.episode_id,
        seeds: spec.seeds,
        scenario: spec.scenario,
        agent: agent.name(),
        privilege,
        source: agent.source().into(),
        question: q.clone(),
        t_max: spec.t_max,
        initial_scene: spec.scene.clone(),
        observations,
        steps,
        final_answer,
        terminated_by,
        initial_sufficiency: initial_sufficiency_flags(&spec.scene, q),
        min_steps,
        distractors_offered: generator.pool().len() as u32,
        abort_reason,
    })
}
