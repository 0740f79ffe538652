//! Candidate option generation.
//!
//! Every step lists the full answer domain followed by 3 or 4 actions. While
//! the history is insufficient at least one action is gainful and the rest are
//! distractors. Distractors are drawn from a per-episode pool so the number
//! of distinct distractors offered over an episode stays within 3..=5.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{CandidateOption, OptionPayload, OptionSet};
use crate::belief::relevant_ids;
use crate::questions::{sufficiency_given_seen, PublicQuestion, Question};
use crate::seed;
use crate::world::{
    apply_action, min_steps_to_see, observe, reduced_actions, valid_actions, Action, CameraState,
    Elevation, ObjectId, Observation, SceneSpec, TiltDirection, ViewerDirection,
};

pub const MIN_POOL: usize = 3;
pub const MAX_POOL: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OptionError {
    #[error("step {step}: history is insufficient but no action reveals a relevant object")]
    NoGainfulAction { step: u32 },
    #[error("step {step}: only {available} zero-gain actions available")]
    TooFewDistractors { step: u32, available: usize },
    #[error("step {step}: could not assemble 3 action options")]
    TooFewActions { step: u32 },
}

/// Does `after` show a relevant object that is not in `seen_before`?
pub fn reveals_relevant(
    seen_before: &BTreeSet<ObjectId>,
    after: &Observation,
    question: &PublicQuestion,
) -> bool {
    after
        .objects()
        .any(|o| !seen_before.contains(&o.id) && question.is_relevant(o))
}

/// Tilting is one distractor whichever way it currently points.
fn same_distractor(a: &Action, b: &Action) -> bool {
    matches!(
        (a, b),
        (Action::RotateViewer { .. }, Action::RotateViewer { .. })
    ) || a == b
}

/// Camera moves never become invalid and picks consume every action on
/// their target, so the pool favours the former.
fn durability(a: &Action) -> u8 {
    match a {
        Action::MoveViewer { .. } | Action::RotateViewer { .. } => 0,
        Action::MoveObject { .. } => 1,
        Action::Pick { .. } => 2,
    }
}

const CAMERA_POSES: usize = 16;

/// For each object, the number of camera poses it is visible from.
fn exposure(scene: &SceneSpec) -> BTreeMap<ObjectId, usize> {
    let mut out = BTreeMap::new();
    let mut s = scene.clone();
    for az in (0..360).step_by(45) {
        for el in [Elevation::Low, Elevation::High] {
            s.camera = CameraState::new(az, el);
            for id in observe(&s, 0).ids() {
                *out.entry(id).or_insert(0) += 1;
            }
        }
    }
    out
}

fn camera_identities() -> [Action; 3] {
    [
        Action::MoveViewer {
            direction: ViewerDirection::Left,
        },
        Action::MoveViewer {
            direction: ViewerDirection::Right,
        },
        Action::RotateViewer {
            direction: TiltDirection::Up,
        },
    ]
}

struct Scored {
    action: Action,
    gainful: bool,
    /// Shows some never-seen object, relevant or not.
    reveals_unseen: bool,
}

pub struct OptionGenerator {
    rng: ChaCha8Rng,
    target_pool: usize,
    pool: Vec<Action>,
}

impl OptionGenerator {
    pub fn new(seed_value: u64) -> Self {
        let mut rng = seed::rng(seed_value, &[0x0F]);
        let target_pool = rng.gen_range(MIN_POOL..=MAX_POOL);
        OptionGenerator {
            rng,
            target_pool,
            pool: Vec::new(),
        }
    }

    /// Next fresh distractor. Past the minimum pool, room is kept for every
    /// camera move not yet pooled: those are always valid and either gainful
    /// or zero-gain, so once pooled they keep every later step fillable.
    /// Object actions prefer targets the pool does not touch yet, that no
    /// gainful action targets and that stay in view from most camera poses,
    /// since an object action is only valid while its target is visible.
    fn take_fresh(
        &mut self,
        fresh: &mut Vec<Action>,
        gainful: &[Action],
        exposure: &BTreeMap<ObjectId, usize>,
    ) -> Option<Action> {
        let cameras_missing = camera_identities()
            .iter()
            .filter(|c| !self.pool.iter().any(|p| same_distractor(p, c)))
            .count();
        let has_camera = fresh.iter().any(|a| durability(a) == 0);
        let object_ok = MAX_POOL - self.pool.len() > cameras_missing
            || (self.pool.len() < MIN_POOL && !has_camera);
        let hot = |a: &Action| {
            a.target()
                .is_some_and(|t| gainful.iter().any(|g| g.target() == Some(t)))
        };
        let touched = |a: &Action| {
            a.target()
                .is_some_and(|t| self.pool.iter().any(|p| p.target() == Some(t)))
        };
        let i = fresh
            .iter()
            .enumerate()
            .filter(|(_, a)| durability(a) == 0 || object_ok)
            .min_by_key(|(i, a)| {
                let hidden_poses = a
                    .target()
                    .map_or(0, |t| CAMERA_POSES - exposure.get(&t).copied().unwrap_or(0));
                (touched(a), hot(a), hidden_poses, *i)
            })?
            .0;
        let a = fresh.remove(i);
        self.pool.push(a);
        Some(a)
    }

    /// Distinct distractors offered so far, in first-offered order.
    pub fn pool(&self) -> &[Action] {
        &self.pool
    }

    pub fn generate(
        &mut self,
        scene: &SceneSpec,
        question: &Question,
        seen: &BTreeSet<ObjectId>,
        step: u32,
        t_max: u32,
    ) -> Result<OptionSet, OptionError> {
        let scored: Vec<Scored> = valid_actions(scene)
            .into_iter()
            .filter_map(|action| {
                let (next, out) = apply_action(scene, &action).ok()?;
                if out.blocked {
                    return None;
                }
                let after = observe(&next, 0);
                Some(Scored {
                    action,
                    gainful: reveals_relevant(seen, &after, question),
                    reveals_unseen: after.ids().iter().any(|id| !seen.contains(id)),
                })
            })
            .collect();
        let sufficient = sufficiency_given_seen(scene, question, seen).sufficient();
        let gainful: Vec<Action> = scored
            .iter()
            .filter(|s| s.gainful)
            .map(|s| s.action)
            .collect();
        let zero: Vec<&Scored> = scored.iter().filter(|s| !s.gainful).collect();

        if step == 0 && zero.len() < MIN_POOL {
            return Err(OptionError::TooFewDistractors {
                step,
                available: zero.len(),
            });
        }
        let mut progress = None;
        if !sufficient && gainful.is_empty() {
            if step == 0 {
                return Err(OptionError::NoGainfulAction { step });
            }
            progress = progress_action(scene, question, seen, t_max.saturating_sub(step).max(1));
        }

        let n_actions = if sufficient {
            self.rng.gen_range(3..=4)
        } else {
            4
        };
        let mut chosen: Vec<(Action, bool)> = Vec::new();
        let mut spare_gainful = gainful.clone();
        if !sufficient && !spare_gainful.is_empty() {
            let budget = t_max.saturating_sub(step).max(1);
            let on_path = shortest_path_actions(scene, question, seen, &spare_gainful, budget);
            let a = *on_path.choose(&mut self.rng).unwrap();
            spare_gainful.retain(|g| *g != a);
            chosen.push((a, false));
        } else if let Some(a) = progress {
            // zero gain, so it is a distractor even though it leads somewhere
            if !self.pool.iter().any(|p| same_distractor(p, &a)) {
                self.pool.push(a);
            }
            chosen.push((a, true));
        }

        let current = |a: &Action| {
            zero.iter()
                .map(|s| s.action)
                .find(|z| same_distractor(z, a))
        };
        // reuse pooled distractors that are still zero-gain here
        for a in self.pool.clone() {
            if chosen.len() >= n_actions {
                break;
            }
            if let Some(z) = current(&a).filter(|z| Some(*z) != progress) {
                chosen.push((z, true));
            }
        }
        // fresh distractors, preferring ones that uncover something
        let mut fresh: Vec<&Scored> = zero
            .iter()
            .copied()
            .filter(|s| {
                !self.pool.iter().any(|p| same_distractor(p, &s.action))
                    && Some(s.action) != progress
            })
            .collect();
        fresh.shuffle(&mut self.rng);
        fresh.sort_by_key(|s| (!s.reveals_unseen, durability(&s.action)));
        let mut fresh: Vec<Action> = fresh.into_iter().map(|s| s.action).collect();
        let exposure = exposure(scene);
        while chosen.len() < n_actions && self.pool.len() < self.target_pool {
            let Some(a) = self.take_fresh(&mut fresh, &gainful, &exposure) else {
                break;
            };
            chosen.push((a, true));
        }
        spare_gainful.shuffle(&mut self.rng);
        while chosen.len() < n_actions {
            let Some(a) = spare_gainful.pop() else { break };
            chosen.push((a, false));
        }
        while chosen.len() < n_actions && self.pool.len() < MAX_POOL {
            let Some(a) = self.take_fresh(&mut fresh, &gainful, &exposure) else {
                break;
            };
            chosen.push((a, true));
        }
        // last resort: pooled moves that are currently blocked still count as
        // valid zero-gain options
        for a in self.pool.clone() {
            if chosen.len() >= 3 {
                break;
            }
            let blocked = apply_action(scene, &a).is_ok_and(|(_, out)| out.blocked);
            if blocked && !chosen.iter().any(|(c, _)| *c == a) {
                chosen.push((a, true));
            }
        }
        // nothing pooled is usable: grow the pool past its cap rather than
        // stall the episode
        while chosen.len() < 3 {
            let Some(i) = fresh
                .iter()
                .position(|a| durability(a) == 0)
                .or((!fresh.is_empty()).then_some(0))
            else {
                break;
            };
            let a = fresh.remove(i);
            self.pool.push(a);
            chosen.push((a, true));
        }
        if chosen.len() < 3 {
            return Err(OptionError::TooFewActions { step });
        }
        chosen.shuffle(&mut self.rng);

        let mut options = Vec::new();
        let mut letter = b'A';
        for answer in &question.answer_domain {
            options.push(CandidateOption {
                letter: letter as char,
                payload: OptionPayload::Answer { answer: *answer },
                text: answer.to_string(),
                is_distractor: false,
            });
            letter += 1;
        }
        for (action, is_distractor) in chosen {
            options.push(CandidateOption {
                letter: letter as char,
                payload: OptionPayload::Action { action },
                text: action.label(scene),
                is_distractor,
            });
            letter += 1;
        }
        Ok(OptionSet { options })
    }
}

/// Actions still needed to reach sufficiency after taking `a`, within `limit`.
fn steps_after(
    scene: &SceneSpec,
    question: &Question,
    seen: &BTreeSet<ObjectId>,
    a: &Action,
    limit: u32,
) -> Option<u32> {
    let (next, out) = apply_action(scene, a).ok()?;
    if out.blocked {
        return None;
    }
    let mut s = seen.clone();
    s.extend(observe(&next, 0).ids());
    min_steps_to_see(&next, &s, &relevant_ids(&next, question), limit)
}

/// The candidates that start a shortest path to sufficiency within `budget`
/// actions. Candidates are deepened together so a distant one never costs
/// more search than the nearest.
fn nearest_to_sufficiency(
    scene: &SceneSpec,
    question: &Question,
    seen: &BTreeSet<ObjectId>,
    candidates: &[Action],
    budget: u32,
) -> Vec<Action> {
    let live: Vec<Action> = candidates
        .iter()
        .copied()
        .filter(|a| apply_action(scene, a).is_ok_and(|(_, out)| !out.blocked))
        .collect();
    for limit in 0..budget {
        let mut hits = Vec::new();
        for a in &live {
            if steps_after(scene, question, seen, a, limit).is_some() {
                hits.push(*a);
            }
        }
        if !hits.is_empty() {
            return hits;
        }
    }
    Vec::new()
}

/// Gainful options start a shortest path to sufficiency where one exists.
fn shortest_path_actions(
    scene: &SceneSpec,
    question: &Question,
    seen: &BTreeSet<ObjectId>,
    candidates: &[Action],
    budget: u32,
) -> Vec<Action> {
    if candidates.len() < 2 {
        return candidates.to_vec();
    }
    let best = nearest_to_sufficiency(scene, question, seen, candidates, budget);
    if best.is_empty() {
        candidates.to_vec()
    } else {
        best
    }
}

/// First action of a shortest path to sufficiency, for histories where no
/// single action uncovers anything relevant.
fn progress_action(
    scene: &SceneSpec,
    question: &Question,
    seen: &BTreeSet<ObjectId>,
    budget: u32,
) -> Option<Action> {
    nearest_to_sufficiency(scene, question, seen, &reduced_actions(scene), budget)
        .first()
        .copied()
}
