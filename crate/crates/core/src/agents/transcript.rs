use std::collections::VecDeque;

use super::{Agent, AgentError, AgentView, Privilege};
use crate::episode::EpisodeRecord;

/// Replays recorded responses, flags included, in order.
#[derive(Debug, Clone)]
pub struct TranscriptAgent {
    name: String,
    privilege: Privilege,
    source: &'static str,
    turns: VecDeque<(String, Vec<String>)>,
    pending_flags: Vec<String>,
}

impl TranscriptAgent {
    pub fn new(name: String, privilege: Privilege, responses: Vec<String>) -> Self {
        TranscriptAgent {
            name,
            privilege,
            source: "agent",
            turns: responses.into_iter().map(|r| (r, Vec::new())).collect(),
            pending_flags: Vec::new(),
        }
    }

    pub fn from_record(record: &EpisodeRecord) -> Self {
        TranscriptAgent {
            name: record.agent.clone(),
            privilege: record.privilege,
            source: if record.source == "human" {
                "human"
            } else {
                "agent"
            },
            turns: record
                .steps
                .iter()
                .map(|s| (s.agent_raw_text.clone(), s.agent_flags.clone()))
                .collect(),
            pending_flags: Vec::new(),
        }
    }
}

impl Agent for TranscriptAgent {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn privilege(&self) -> Privilege {
        self.privilege
    }

    fn source(&self) -> &'static str {
        self.source
    }

    fn respond(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let (text, flags) = self
            .turns
            .pop_front()
            .ok_or(AgentError::TranscriptExhausted(view.step))?;
        self.pending_flags = flags;
        Ok(text)
    }

    fn take_flags(&mut self) -> Vec<String> {
        std::mem::take(&mut self.pending_flags)
    }
}
