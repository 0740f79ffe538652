use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::{Agent, AgentError, AgentView, Privilege};
use crate::episode::wire::{
    check_hello, decode_reply, write_frame, Hello, StepRequest, WireOption, PROTOCOL,
};

pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;

/// Where an external agent listens: `tcp://host:port` or `stdio:<command>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    Stdio(String),
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(addr) = s.strip_prefix("tcp://") {
            Ok(Endpoint::Tcp(addr.to_string()))
        } else if let Some(cmd) = s.strip_prefix("stdio:") {
            Ok(Endpoint::Stdio(cmd.to_string()))
        } else {
            Err(format!("endpoint `{s}` must start with tcp:// or stdio:"))
        }
    }
}

struct Session {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    child: Option<Child>,
}

impl Drop for Session {
    fn drop(&mut self) {
        if let Some(c) = &mut self.child {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

fn spawn_reader<R: BufRead + Send + 'static>(r: R) -> Receiver<std::io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in r.lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    rx
}

/// Forwards each step to an out-of-process agent over the wire protocol.
pub struct ExternalAgent {
    endpoint: Endpoint,
    name: String,
    timeout: Duration,
    session: Option<Session>,
    latencies_ms: Vec<u128>,
}

impl ExternalAgent {
    pub fn new(endpoint: Endpoint, timeout_ms: u64) -> Self {
        let name = match &endpoint {
            Endpoint::Tcp(a) => format!("external:tcp://{a}"),
            Endpoint::Stdio(c) => format!("external:stdio:{c}"),
        };
        ExternalAgent {
            endpoint,
            name,
            timeout: Duration::from_millis(timeout_ms),
            session: None,
            latencies_ms: Vec::new(),
        }
    }

    /// Round-trip times of completed requests.
    pub fn latencies_ms(&self) -> &[u128] {
        &self.latencies_ms
    }

    fn connect(&self) -> Result<Session, AgentError> {
        let t = |e: std::io::Error| AgentError::Transport(e.to_string());
        let mut session = match &self.endpoint {
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(t)?;
                let reader = BufReader::new(stream.try_clone().map_err(t)?);
                Session {
                    writer: Box::new(stream),
                    lines: spawn_reader(reader),
                    child: None,
                }
            }
            Endpoint::Stdio(cmd) => {
                let mut child = Command::new("sh")
                    .arg("-c")
                    .arg(cmd)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .spawn()
                    .map_err(t)?;
                let stdin = child.stdin.take().unwrap();
                let stdout = BufReader::new(child.stdout.take().unwrap());
                Session {
                    writer: Box::new(stdin),
                    lines: spawn_reader(stdout),
                    child: Some(child),
                }
            }
        };
        write_frame(&mut session.writer, &Hello::new())
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        let line = self.recv(&session)?;
        check_hello(&line).map_err(|e| AgentError::Protocol(e.to_string()))?;
        Ok(session)
    }

    fn recv(&self, s: &Session) -> Result<String, AgentError> {
        match s.lines.recv_timeout(self.timeout) {
            Ok(Ok(l)) => Ok(l),
            Ok(Err(e)) => Err(AgentError::Transport(e.to_string())),
            Err(RecvTimeoutError::Timeout) => {
                Err(AgentError::Timeout(self.timeout.as_millis() as u64))
            }
            Err(RecvTimeoutError::Disconnected) => {
                Err(AgentError::Transport("connection closed".into()))
            }
        }
    }
}

impl Agent for ExternalAgent {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn privilege(&self) -> Privilege {
        Privilege::None
    }

    fn respond(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        if self.session.is_none() {
            self.session = Some(self.connect()?);
        }
        let req = StepRequest {
            kind: "step".into(),
            protocol: PROTOCOL.into(),
            episode_id: view.episode_id,
            step: view.step,
            prompt: view.prompt.to_string(),
            options: view
                .options
                .iter()
                .map(|o| WireOption {
                    letter: o.letter,
                    kind: o.kind,
                    text: o.text.clone(),
                })
                .collect(),
            observation: view.observation.clone(),
            image: view.image_png_base64.map(str::to_string),
        };
        let started = Instant::now();
        let result = (|| {
            let s = self.session.as_mut().unwrap();
            write_frame(&mut s.writer, &req).map_err(|e| AgentError::Transport(e.to_string()))?;
            let line = self.recv(self.session.as_ref().unwrap())?;
            decode_reply(&line).map_err(|e| AgentError::Protocol(e.to_string()))
        })();
        match result {
            Ok(r) => {
                self.latencies_ms.push(started.elapsed().as_millis());
                Ok(r.raw_text)
            }
            Err(e) => {
                self.session = None;
                Err(e)
            }
        }
    }
}
