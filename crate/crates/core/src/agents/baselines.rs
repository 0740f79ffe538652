use std::io::{BufRead, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{tag, Agent, AgentError, AgentView, Privilege};
use crate::episode::OptionKind;
use crate::questions::{Answer, PublicQuestion};
use crate::seed;
use crate::world::ObjectSpec;

/// Letter of the answer option best supported by `objects` alone: the exact
/// subscene answer if offered, else the numerically nearest count, else the
/// first answer option. Ties go to the lower letter.
pub fn answer_from_objects(
    view: &AgentView<'_>,
    question: &PublicQuestion,
    objects: &[ObjectSpec],
) -> char {
    let answers: Vec<(char, Answer)> = view.answer_options().collect();
    let guess = question.subscene_answer(objects);
    if let Some(l) = guess.and_then(|g| answers.iter().find(|a| a.1 == g)) {
        return l.0;
    }
    let target = guess.and_then(|g| g.as_count()).or_else(|| {
        // negative differences land below every count option
        (question.qtype == crate::questions::QuestionType::MathCounting).then_some(0)
    });
    if let Some(t) = target {
        let mut best: Option<(u32, char)> = None;
        for (l, a) in &answers {
            if let Some(n) = a.as_count() {
                let d = n.abs_diff(t);
                if best.is_none_or(|b| d < b.0) {
                    best = Some((d, *l));
                }
            }
        }
        if let Some(b) = best {
            return b.1;
        }
    }
    answers.first().map_or('A', |a| a.0)
}

/// Answers at once from the current view.
#[derive(Debug, Clone, Copy, Default)]
pub struct PassiveAgent;

impl Agent for PassiveAgent {
    fn name(&self) -> String {
        "passive".into()
    }

    fn respond(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let visible: Vec<ObjectSpec> = view.observation.objects().cloned().collect();
        let l = answer_from_objects(view, view.question, &visible);
        Ok(format!(
            "Answering from the current view. {}",
            tag(OptionKind::Answer, l)
        ))
    }
}

/// Uniform choice over all options.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl Default for RandomAgent {
    fn default() -> Self {
        RandomAgent {
            rng: seed::rng(0, &[]),
        }
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn begin_episode(&mut self, _episode_id: u64, seed_value: u64) {
        self.rng = seed::rng(seed_value, &[0xA6]);
    }

    fn respond(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let o = &view.options[self.rng.gen_range(0..view.options.len())];
        Ok(format!("Random choice. {}", tag(o.kind, o.letter)))
    }
}

/// Takes the first action that uncovers any hiding site, else answers from
/// everything seen so far.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyRevealAgent;

impl GreedyRevealAgent {
    pub fn choose(view: &AgentView<'_>) -> (OptionKind, char) {
        if let Some(g) = view.geometry {
            for (l, _) in view.action_options() {
                if g.reveals.get(&l).is_some_and(|r| !r.is_empty()) {
                    return (OptionKind::Action, l);
                }
            }
        }
        let known = view.known_objects();
        (
            OptionKind::Answer,
            answer_from_objects(view, view.question, &known),
        )
    }
}

impl Agent for GreedyRevealAgent {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn privilege(&self) -> Privilege {
        Privilege::Geometry
    }

    fn respond(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let (k, l) = Self::choose(view);
        Ok(tag(k, l))
    }
}

/// Reads the ground truth and answers it.
#[derive(Debug, Clone, Copy, Default)]
pub struct OmniscientAgent;

impl Agent for OmniscientAgent {
    fn name(&self) -> String {
        "omniscient".into()
    }

    fn privilege(&self) -> Privilege {
        Privilege::Full
    }

    fn respond(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let full = view
            .full
            .as_ref()
            .ok_or_else(|| AgentError::Protocol("omniscient agent needs full access".into()))?;
        let l = view
            .answer_letter(full.ground_truth)
            .ok_or_else(|| AgentError::Protocol("ground truth missing from options".into()))?;
        Ok(tag(OptionKind::Answer, l))
    }
}

/// A person at a terminal. Free-text lines are kept as notes; a line that is
/// a bare option letter or contains a tag ends the turn.
pub struct HumanAgent {
    input: Box<dyn BufRead + Send>,
    output: Box<dyn Write + Send>,
}

impl HumanAgent {
    pub fn new(input: Box<dyn BufRead + Send>, output: Box<dyn Write + Send>) -> Self {
        HumanAgent { input, output }
    }

    /// Turns a bare letter into the tag of the matching option kind.
    pub fn normalize(line: &str, view: &AgentView<'_>) -> Option<String> {
        let t = line.trim();
        if t.contains("<answer>") || t.contains("<action>") {
            return Some(t.to_string());
        }
        let mut chars = t.chars();
        let (Some(c), None) = (chars.next(), chars.next()) else {
            return None;
        };
        let c = c.to_ascii_uppercase();
        view.options
            .iter()
            .find(|o| o.letter == c)
            .map(|o| tag(o.kind, c))
    }
}

impl Agent for HumanAgent {
    fn name(&self) -> String {
        "human".into()
    }

    fn source(&self) -> &'static str {
        "human"
    }

    fn respond(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let io = |e: std::io::Error| AgentError::Transport(e.to_string());
        writeln!(self.output, "\n{}\n", view.prompt).map_err(io)?;
        writeln!(self.output, "Type notes, then an option letter:").map_err(io)?;
        self.output.flush().map_err(io)?;
        let mut notes = Vec::new();
        loop {
            let mut line = String::new();
            if self.input.read_line(&mut line).map_err(io)? == 0 {
                return Ok(notes.join("\n"));
            }
            match Self::normalize(&line, view) {
                Some(t) => {
                    notes.push(t);
                    return Ok(notes.join("\n"));
                }
                None => notes.push(line.trim_end().to_string()),
            }
        }
    }
}
