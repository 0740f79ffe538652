//! Newline-delimited JSON protocol spoken with out-of-process agents.
//!
//! The harness opens the session with a `hello` frame naming the protocol
//! version and expects a `hello` back. Each step is one `step` request
//! answered by `{"raw_text": ...}`. An `error` frame from the agent, a closed
//! stream or a timeout aborts the episode.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::OptionKind;
use crate::world::Observation;

pub const PROTOCOL: &str = "avr/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    #[serde(rename = "type")]
    pub kind: String,
    pub protocol: String,
}

impl Hello {
    pub fn new() -> Self {
        Hello {
            kind: "hello".into(),
            protocol: PROTOCOL.into(),
        }
    }
}

impl Default for Hello {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireOption {
    pub letter: char,
    pub kind: OptionKind,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRequest {
    #[serde(rename = "type")]
    pub kind: String,
    pub protocol: String,
    pub episode_id: u64,
    pub step: u32,
    pub prompt: String,
    pub options: Vec<WireOption>,
    pub observation: Observation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub raw_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorFrame {
    #[serde(rename = "type")]
    pub kind: String,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad frame: {0}")]
    Frame(String),
    #[error("protocol mismatch: peer speaks {0}")]
    Version(String),
    #[error("peer reported an error: {0}")]
    Peer(String),
    #[error("stream closed")]
    Closed,
}

/// Classifies one incoming line on the harness side.
pub fn decode_reply(line: &str) -> Result<StepResponse, WireError> {
    let v: serde_json::Value =
        serde_json::from_str(line).map_err(|e| WireError::Frame(e.to_string()))?;
    if v.get("type").and_then(|t| t.as_str()) == Some("error") {
        let msg = v
            .get("message")
            .and_then(|m| m.as_str())
            .unwrap_or("")
            .to_string();
        return Err(WireError::Peer(msg));
    }
    serde_json::from_value(v).map_err(|e| WireError::Frame(e.to_string()))
}

pub fn check_hello(line: &str) -> Result<(), WireError> {
    let h: Hello = serde_json::from_str(line).map_err(|e| WireError::Frame(e.to_string()))?;
    if h.kind != "hello" {
        return Err(WireError::Frame(format!("expected hello, got {}", h.kind)));
    }
    if h.protocol != PROTOCOL {
        return Err(WireError::Version(h.protocol));
    }
    Ok(())
}

pub fn write_frame<W: Write, T: Serialize>(w: &mut W, frame: &T) -> Result<(), WireError> {
    let line = crate::canonical::to_string(frame).map_err(|e| WireError::Frame(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Agent side of a session: answers the handshake, then calls `policy` for
/// every step request until the stream closes. A policy error is reported
/// with an error frame and ends the session.
pub fn serve<R, W, F>(reader: R, mut writer: W, mut policy: F) -> Result<(), WireError>
where
    R: BufRead,
    W: Write,
    F: FnMut(&StepRequest) -> Result<String, String>,
{
    let mut lines = reader.lines();
    let first = lines.next().ok_or(WireError::Closed)??;
    if let Err(e) = check_hello(&first) {
        write_frame(
            &mut writer,
            &ErrorFrame {
                kind: "error".into(),
                message: e.to_string(),
            },
        )?;
        return Err(e);
    }
    write_frame(&mut writer, &Hello::new())?;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req: StepRequest = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                write_frame(
                    &mut writer,
                    &ErrorFrame {
                        kind: "error".into(),
                        message: format!("malformed frame: {e}"),
                    },
                )?;
                return Err(WireError::Frame(e.to_string()));
            }
        };
        match policy(&req) {
            Ok(raw_text) => write_frame(&mut writer, &StepResponse { raw_text })?,
            Err(message) => {
                write_frame(
                    &mut writer,
                    &ErrorFrame {
                        kind: "error".into(),
                        message: message.clone(),
                    },
                )?;
                return Err(WireError::Peer(message));
            }
        }
    }
    Ok(())
}
