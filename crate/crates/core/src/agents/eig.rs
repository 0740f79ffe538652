use std::collections::BTreeSet;
use std::fmt::Write;

use super::{tag, Agent, AgentError, AgentView, GreedyRevealAgent, Privilege};
use crate::belief::{init_belief, BeliefError, BeliefState, SlotState};
use crate::episode::{OptionKind, PHASE_HEADERS};

/// Chooses the action with the largest expected information gain about the
/// answer, or answers with the posterior mode once no action helps.
#[derive(Debug, Clone, Default)]
pub struct EigOracleAgent {
    belief: Option<BeliefState>,
    flags: Vec<String>,
}

const GAIN_EPS: f64 = 1e-12;

impl EigOracleAgent {
    pub fn belief(&self) -> Option<&BeliefState> {
        self.belief.as_ref()
    }

    fn decide(&mut self, view: &AgentView<'_>) -> Result<String, BeliefError> {
        let g = view.geometry.cloned().unwrap_or_default();
        let q = view.question;
        let mut belief = match self.belief.take() {
            Some(b) if view.step > 0 => b,
            _ => init_belief(g.slots.clone(), q),
        };
        let known_slots = belief.revealed();
        let fresh: Vec<_> = g
            .revealed
            .iter()
            .filter(|(id, _)| !known_slots.contains(id))
            .map(|(id, o)| (*id, SlotState::of(Some(o), q)))
            .collect();
        if !fresh.is_empty() {
            belief = belief.condition(view.past_actions.last().copied(), &fresh)?;
        }
        self.belief = Some(belief.clone());

        let known = view.known_objects();
        let posterior = belief.answer_posterior(&known, q)?;
        let empty = BTreeSet::new();
        let mut scores = Vec::new();
        for (l, a) in view.action_options() {
            let reveal = g.reveals.get(&l).unwrap_or(&empty);
            scores.push((l, a, belief.expected_information_gain(&known, q, reveal)?));
        }
        let mut best: Option<(char, f64)> = None;
        for &(l, _, s) in &scores {
            if s > GAIN_EPS && best.is_none_or(|b| s > b.1 + GAIN_EPS) {
                best = Some((l, s));
            }
        }
        // nothing is informative one step ahead: head for the nearest slot
        // that still matters
        let mut detour: Option<(char, u32)> = None;
        if best.is_none() && posterior.entropy() > GAIN_EPS {
            let mut useful = BTreeSet::new();
            for slot in belief.open_slots() {
                if belief.expected_information_gain(&known, q, &BTreeSet::from([slot]))? > GAIN_EPS
                {
                    useful.insert(slot);
                }
            }
            for (&l, dist) in &g.reach {
                let d = dist
                    .iter()
                    .filter(|(s, _)| useful.contains(s))
                    .map(|(_, d)| *d)
                    .min();
                if let Some(d) = d {
                    if detour.is_none_or(|b| d < b.1) {
                        detour = Some((l, d));
                    }
                }
            }
        }

        let mut t = String::new();
        let _ = writeln!(t, "{}:", PHASE_HEADERS[0]);
        let _ = writeln!(
            t,
            "{} objects seen, {} of {} hiding sites still unexplored. Answer entropy {:.4} bits.",
            known.len(),
            belief.open_slots().len(),
            belief.slots.len(),
            posterior.entropy()
        );
        let dist: Vec<String> = posterior
            .probs
            .iter()
            .map(|(a, p)| format!("{a}={p:.4}"))
            .collect();
        let _ = writeln!(t, "Posterior: {}", dist.join(", "));
        let _ = writeln!(t, "{}:", PHASE_HEADERS[1]);
        for (l, a, s) in &scores {
            let _ = writeln!(t, "{l}. {a}: expected gain {s:.4} bits");
        }
        let _ = writeln!(t, "{}:", PHASE_HEADERS[2]);
        match (best, detour) {
            (Some((l, s)), _) => {
                let _ = write!(
                    t,
                    "Option {l} is most informative ({s:.4} bits). {}",
                    tag(OptionKind::Action, l)
                );
            }
            (None, Some((l, d))) => {
                let _ = write!(
                    t,
                    "No single action is informative, but option {l} brings an unexplored site into view within {d} actions. {}",
                    tag(OptionKind::Action, l)
                );
            }
            (None, None) => {
                let mode = posterior.mode();
                let l = view.answer_letter(mode).unwrap_or('A');
                let _ = write!(
                    t,
                    "No action is informative; answering {mode} (p={:.4}). {}",
                    posterior.prob(mode),
                    tag(OptionKind::Answer, l)
                );
            }
        }
        Ok(t)
    }
}

impl Agent for EigOracleAgent {
    fn name(&self) -> String {
        "eig".into()
    }

    fn privilege(&self) -> Privilege {
        Privilege::Geometry
    }

    fn begin_episode(&mut self, _episode_id: u64, _seed: u64) {
        self.belief = None;
        self.flags.clear();
    }

    fn respond(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        match self.decide(view) {
            Ok(t) => Ok(t),
            Err(e) => {
                self.flags.push(format!("greedy_fallback: {e}"));
                let (k, l) = GreedyRevealAgent::choose(view);
                Ok(format!(
                    "Belief unavailable ({e}); falling back to greedy reveal. {}",
                    tag(k, l)
                ))
            }
        }
    }

    fn take_flags(&mut self) -> Vec<String> {
        std::mem::take(&mut self.flags)
    }
}
