//! Hypotheses over hidden content and exact expected information gain.
//!
//! Each hidden slot is summarised by a quotient state: empty, relevant to
//! restriction class `i`, or irrelevant. The answer depends on hidden content
//! only through these states, so enumerating the joint quotient space gives
//! the exact answer posterior.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::questions::{
    sufficiency_given_seen, Answer, Attribute, PublicQuestion, Question, QuestionType,
};
use crate::world::{
    min_steps_to_see, min_steps_until, Action, HidingSite, ObjectId, ObjectSpec, SceneSpec, Size,
};

pub use crate::world::SiteOrigin as SlotOrigin;

pub type SlotId = u32;

/// Largest joint support enumerated before giving up.
pub const SUPPORT_CAP: usize = 4096;

/// Upper bound accepted for search depth in [`min_steps`].
pub const MAX_SEARCH_DEPTH: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenSlot {
    pub slot_id: SlotId,
    pub origin: SlotOrigin,
    pub max_size: Size,
}

impl HiddenSlot {
    /// `empty`, `relevant(i)` per class, `irrelevant`.
    pub fn state_space(classes: usize) -> Vec<SlotState> {
        let mut v = vec![SlotState::Empty];
        v.extend((0..classes).map(SlotState::Relevant));
        v.push(SlotState::Irrelevant);
        v
    }
}

/// Slots in site order, numbered from 0.
pub fn slots_from_sites(sites: &[HidingSite]) -> Vec<HiddenSlot> {
    sites
        .iter()
        .enumerate()
        .map(|(i, s)| HiddenSlot {
            slot_id: i as SlotId,
            origin: s.origin,
            max_size: s.max_size,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "state", content = "class", rename_all = "snake_case")]
pub enum SlotState {
    Empty,
    Relevant(usize),
    Irrelevant,
}

impl SlotState {
    /// Quotient state of what a slot actually holds.
    pub fn of(object: Option<&ObjectSpec>, question: &PublicQuestion) -> SlotState {
        match object {
            None => SlotState::Empty,
            Some(o) => question
                .restriction_classes
                .iter()
                .position(|c| c.matches(o))
                .map_or(SlotState::Irrelevant, SlotState::Relevant),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BeliefError {
    #[error("joint support {support} exceeds the enumeration cap {cap}")]
    Capacity { support: usize, cap: usize },
    #[error("slot {slot} observed as {state:?}, which has zero prior weight")]
    Consistency { slot: SlotId, state: SlotState },
    #[error("unknown slot {0}")]
    UnknownSlot(SlotId),
    #[error("no hypothesis is consistent with the answer domain")]
    EmptySupport,
    #[error("search depth {0} exceeds {MAX_SEARCH_DEPTH}")]
    DepthBound(u32),
}

/// One conditioning step: what an action revealed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Action>,
    pub revealed: Vec<(SlotId, SlotState)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub slots: Vec<HiddenSlot>,
    /// Per-slot categorical weights aligned with [`HiddenSlot::state_space`].
    pub weights: Vec<Vec<f64>>,
    pub conditioned_history: Vec<Conditioning>,
    classes: usize,
}

/// Distribution over the answer domain, in domain order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub probs: Vec<(Answer, f64)>,
}

impl Posterior {
    pub fn entropy(&self) -> f64 {
        entropy(self.probs.iter().map(|p| p.1))
    }

    /// Most probable answer; ties go to the earlier domain entry.
    pub fn mode(&self) -> Answer {
        let mut best = self.probs[0];
        for &p in &self.probs[1..] {
            if p.1 > best.1 + 1e-12 {
                best = p;
            }
        }
        best.0
    }

    pub fn prob(&self, a: Answer) -> f64 {
        self.probs.iter().find(|p| p.0 == a).map_or(0.0, |p| p.1)
    }
}

pub fn entropy(ps: impl IntoIterator<Item = f64>) -> f64 {
    ps.into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

struct Hypothesis {
    states: Vec<SlotState>,
    answer: Answer,
    /// Open-slot index holding the Query referent.
    referent: Option<usize>,
    weight: f64,
}

/// Uniform prior over each slot's feasible states.
///
/// `relevant(i)` is infeasible when class `i` demands a larger size than the
/// slot can conceal.
pub fn init_belief(slots: Vec<HiddenSlot>, question: &PublicQuestion) -> BeliefState {
    let classes = question.restriction_classes.len();
    let weights = slots
        .iter()
        .map(|slot| {
            let feasible: Vec<bool> = HiddenSlot::state_space(classes)
                .into_iter()
                .map(|s| match s {
                    SlotState::Relevant(i) => {
                        let need = question.restriction_classes[i].size;
                        !(need == Some(Size::Large) && slot.max_size == Size::Small)
                    }
                    _ => true,
                })
                .collect();
            let n = feasible.iter().filter(|f| **f).count() as f64;
            feasible
                .into_iter()
                .map(|f| if f { 1.0 / n } else { 0.0 })
                .collect()
        })
        .collect();
    BeliefState {
        slots,
        weights,
        conditioned_history: vec![],
        classes,
    }
}

impl BeliefState {
    fn index(&self, slot: SlotId) -> Result<usize, BeliefError> {
        self.slots
            .iter()
            .position(|s| s.slot_id == slot)
            .ok_or(BeliefError::UnknownSlot(slot))
    }

    fn state_index(&self, state: SlotState) -> Option<usize> {
        HiddenSlot::state_space(self.classes)
            .iter()
            .position(|s| *s == state)
    }

    pub fn revealed(&self) -> BTreeSet<SlotId> {
        self.conditioned_history
            .iter()
            .flat_map(|c| c.revealed.iter().map(|r| r.0))
            .collect()
    }

    /// Slots whose content is still unknown.
    pub fn open_slots(&self) -> Vec<SlotId> {
        let revealed = self.revealed();
        self.slots
            .iter()
            .map(|s| s.slot_id)
            .filter(|id| !revealed.contains(id))
            .collect()
    }

    /// Number of joint quotient assignments over the open slots.
    pub fn joint_support_size(&self) -> usize {
        let open = self.open_slots();
        open.iter()
            .map(|&id| {
                let i = self.index(id).unwrap();
                self.weights[i].iter().filter(|w| **w > 0.0).count()
            })
            .fold(1usize, |acc, n| acc.saturating_mul(n))
    }

    /// Collapses the revealed slots to point masses on what was observed.
    pub fn condition(
        &self,
        action: Option<Action>,
        revealed: &[(SlotId, SlotState)],
    ) -> Result<BeliefState, BeliefError> {
        let mut next = self.clone();
        let already = self.revealed();
        let mut fresh = Vec::new();
        for &(slot, state) in revealed {
            let i = self.index(slot)?;
            let k = self
                .state_index(state)
                .filter(|&k| self.weights[i][k] > 0.0)
                .ok_or(BeliefError::Consistency { slot, state })?;
            next.weights[i] = (0..self.weights[i].len())
                .map(|j| if j == k { 1.0 } else { 0.0 })
                .collect();
            if !already.contains(&slot) {
                fresh.push((slot, state));
            }
        }
        if !fresh.is_empty() {
            next.conditioned_history.push(Conditioning {
                action,
                revealed: fresh,
            });
        }
        Ok(next)
    }

    /// Joint hypotheses over the open slots consistent with the known
    /// objects, the answer domain and (for Query) a unique referent.
    fn hypotheses(
        &self,
        known: &[ObjectSpec],
        question: &PublicQuestion,
    ) -> Result<(Vec<SlotId>, Vec<Hypothesis>), BeliefError> {
        let support = self.joint_support_size();
        if support > SUPPORT_CAP {
            return Err(BeliefError::Capacity {
                support,
                cap: SUPPORT_CAP,
            });
        }
        let space = HiddenSlot::state_space(self.classes);
        let open = self.open_slots();
        let choices: Vec<Vec<(SlotState, f64)>> = open
            .iter()
            .map(|&id| {
                let i = self.index(id).unwrap();
                space
                    .iter()
                    .zip(&self.weights[i])
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(s, w)| (*s, *w))
                    .collect()
            })
            .collect();
        let known_counts = question.class_counts(known);
        let known_answer = question.subscene_answer(known);
        let known_referents = match question.qtype {
            QuestionType::Query => known
                .iter()
                .filter(|o| question.restriction_classes[0].matches(o))
                .count(),
            _ => 0,
        };

        let mut out = Vec::new();
        let mut digits = vec![0usize; open.len()];
        loop {
            let states: Vec<SlotState> =
                digits.iter().zip(&choices).map(|(&d, c)| c[d].0).collect();
            let weight: f64 = digits.iter().zip(&choices).map(|(&d, c)| c[d].1).product();
            if question.qtype == QuestionType::Query {
                let in_slots: Vec<usize> = (0..states.len())
                    .filter(|&j| states[j] == SlotState::Relevant(0))
                    .collect();
                match (known_referents, in_slots.as_slice()) {
                    (1, []) => {
                        if let Some(a) = known_answer.filter(|a| question.answer_domain.contains(a))
                        {
                            out.push(Hypothesis {
                                states,
                                answer: a,
                                referent: None,
                                weight,
                            });
                        }
                    }
                    (0, [j]) => {
                        let slot = &self.slots[self.index(open[*j]).unwrap()];
                        let ys = referent_answers(question, slot.max_size);
                        let share = weight / ys.len().max(1) as f64;
                        for y in ys {
                            out.push(Hypothesis {
                                states: states.clone(),
                                answer: y,
                                referent: Some(*j),
                                weight: share,
                            });
                        }
                    }
                    _ => {}
                }
            } else {
                let mut counts = known_counts.clone();
                for s in &states {
                    if let SlotState::Relevant(i) = s {
                        counts[*i] += 1;
                    }
                }
                if let Some(a) = question
                    .answer_from_counts(&counts)
                    .filter(|a| question.answer_domain.contains(a))
                {
                    out.push(Hypothesis {
                        states,
                        answer: a,
                        referent: None,
                        weight,
                    });
                }
            }
            // advance the mixed-radix counter
            let mut k = 0;
            while k < digits.len() {
                digits[k] += 1;
                if digits[k] < choices[k].len() {
                    break;
                }
                digits[k] = 0;
                k += 1;
            }
            if k == digits.len() {
                break;
            }
        }
        if out.iter().map(|h| h.weight).sum::<f64>() <= 0.0 {
            return Err(BeliefError::EmptySupport);
        }
        Ok((open, out))
    }

    /// Exact posterior over the answer domain.
    pub fn answer_posterior(
        &self,
        known: &[ObjectSpec],
        question: &PublicQuestion,
    ) -> Result<Posterior, BeliefError> {
        let (_, hyps) = self.hypotheses(known, question)?;
        Ok(posterior_of(
            question,
            hyps.iter().map(|h| (h.answer, h.weight)),
        ))
    }

    /// Expected reduction in answer entropy, in bits, from observing the
    /// contents of `reveal`. Exactly 0 when `reveal` touches no open slot.
    pub fn expected_information_gain(
        &self,
        known: &[ObjectSpec],
        question: &PublicQuestion,
        reveal: &BTreeSet<SlotId>,
    ) -> Result<f64, BeliefError> {
        let (open, hyps) = self.hypotheses(known, question)?;
        let touched: Vec<usize> = (0..open.len())
            .filter(|&j| reveal.contains(&open[j]))
            .collect();
        if touched.is_empty() {
            return Ok(0.0);
        }
        let prior = posterior_of(question, hyps.iter().map(|h| (h.answer, h.weight)));
        let mut groups: HashMap<(Vec<SlotState>, Option<Answer>), Vec<(Answer, f64)>> =
            HashMap::new();
        for h in &hyps {
            let states: Vec<SlotState> = touched.iter().map(|&j| h.states[j]).collect();
            let y = h.referent.filter(|j| touched.contains(j)).map(|_| h.answer);
            groups
                .entry((states, y))
                .or_default()
                .push((h.answer, h.weight));
        }
        let total: f64 = hyps.iter().map(|h| h.weight).sum();
        let mut expected = 0.0;
        for members in groups.values() {
            let mass: f64 = members.iter().map(|m| m.1).sum();
            let post = posterior_of(question, members.iter().copied());
            expected += mass / total * post.entropy();
        }
        Ok((prior.entropy() - expected).max(0.0))
    }
}

/// Values the Query answer can take when the referent sits in a slot.
fn referent_answers(question: &PublicQuestion, max_size: Size) -> Vec<Answer> {
    question
        .answer_domain
        .iter()
        .copied()
        .filter(|a| {
            !(question.queried_attribute == Some(Attribute::Size)
                && max_size == Size::Small
                && *a == Answer::Size(Size::Large))
        })
        .collect()
}

fn posterior_of(
    question: &PublicQuestion,
    weighted: impl Iterator<Item = (Answer, f64)>,
) -> Posterior {
    let mut mass: BTreeMap<Answer, f64> = BTreeMap::new();
    let mut total = 0.0;
    for (a, w) in weighted {
        *mass.entry(a).or_default() += w;
        total += w;
    }
    Posterior {
        probs: question
            .answer_domain
            .iter()
            .map(|a| (*a, mass.get(a).copied().unwrap_or(0.0) / total))
            .collect(),
    }
}

/// Fewest actions until the seen objects settle the question: every unseen
/// object is irrelevant and the seen objects give the true answer.
pub fn min_steps<A>(
    scene: &SceneSpec,
    question: &Question,
    actions: A,
    t_max: u32,
) -> Result<Option<u32>, BeliefError>
where
    A: Fn(&SceneSpec) -> Vec<Action>,
{
    if t_max > MAX_SEARCH_DEPTH {
        return Err(BeliefError::DepthBound(t_max));
    }
    let goal =
        |seen: &BTreeSet<ObjectId>| sufficiency_given_seen(scene, question, seen).sufficient();
    Ok(min_steps_until(scene, goal, actions, t_max))
}

/// [`min_steps`] over picks and camera moves. The seen objects settle the
/// question exactly when every relevant object has been seen, so this is a
/// plain visibility search.
pub fn min_steps_reduced(
    scene: &SceneSpec,
    question: &Question,
    t_max: u32,
) -> Result<Option<u32>, BeliefError> {
    if t_max > MAX_SEARCH_DEPTH {
        return Err(BeliefError::DepthBound(t_max));
    }
    let relevant = relevant_ids(scene, question);
    Ok(min_steps_to_see(scene, &BTreeSet::new(), &relevant, t_max))
}

pub fn relevant_ids(scene: &SceneSpec, question: &Question) -> BTreeSet<ObjectId> {
    scene
        .all_objects()
        .filter(|o| question.is_relevant(o))
        .map(|o| o.id)
        .collect()
}
