mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::thread;

use avr_core::agents::{Agent, AgentError, AgentView, Endpoint, ExternalAgent, DEFAULT_TIMEOUT_MS};
use avr_core::canonical;
use avr_core::episode::wire::{serve, StepRequest};
use avr_core::episode::{run_episode, OptionKind, Termination};
use avr_core::metrics::aggregate;

/// Takes the last action option on steps 0 and 1, then answers A.
fn scripted(step: u32, options: &[(char, OptionKind)]) -> String {
    match options.iter().rev().find(|(_, k)| *k == OptionKind::Action) {
        Some((l, _)) if step < 2 => format!("Moving on.\n<action>{l}</action>"),
        _ => "<answer>A</answer>".into(),
    }
}

struct InProcess(String);

impl Agent for InProcess {
    fn name(&self) -> String {
        self.0.clone()
    }

    fn respond(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let opts: Vec<_> = view.options.iter().map(|o| (o.letter, o.kind)).collect();
        Ok(scripted(view.step, &opts))
    }
}

fn scripted_policy(req: &StepRequest) -> Result<String, String> {
    let opts: Vec<_> = req.options.iter().map(|o| (o.letter, o.kind)).collect();
    Ok(scripted(req.step, &opts))
}

/// Serves every incoming connection with `handler` on a background thread.
fn listen<F>(handler: F) -> Endpoint
where
    F: Fn(BufReader<std::net::TcpStream>, std::net::TcpStream) + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let handler = std::sync::Arc::new(handler);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            let h = handler.clone();
            thread::spawn(move || {
                let reader = BufReader::new(stream.try_clone().unwrap());
                h(reader, stream);
            });
        }
    });
    Endpoint::Tcp(addr.to_string())
}

#[test]
fn tcp_transport_matches_in_process_policy() {
    let ep = listen(|r, w| {
        let _ = serve(r, w, scripted_policy);
    });
    for spec in common::small_suite(13, 12) {
        let mut remote = ExternalAgent::new(ep.clone(), DEFAULT_TIMEOUT_MS);
        let a = run_episode(&spec, &mut remote).unwrap();
        assert_ne!(
            a.terminated_by,
            Termination::Aborted,
            "{:?}",
            a.abort_reason
        );
        assert!(!remote.latencies_ms().is_empty());
        let mut local = InProcess(remote.name());
        let b = run_episode(&spec, &mut local).unwrap();
        assert_eq!(
            canonical::to_string(&a).unwrap(),
            canonical::to_string(&b).unwrap()
        );
    }
}

#[test]
fn stdio_transport() {
    let script = r#"stdio:read l; echo '{"protocol":"avr/1","type":"hello"}'; while read l; do echo '{"raw_text":"<answer>A</answer>"}'; done"#;
    let spec = common::counting_spec(common::red(), 0);
    let mut agent = ExternalAgent::new(script.parse().unwrap(), DEFAULT_TIMEOUT_MS);
    let rec = run_episode(&spec, &mut agent).unwrap();
    assert_eq!(rec.terminated_by, Termination::Answered);
    assert_eq!(rec.steps.len(), 1);
}

#[test]
fn raised_callback_aborts_without_touching_metrics() {
    let ep = listen(|r, w| {
        let _ = serve(r, w, |req: &StepRequest| {
            if req.step == 0 {
                Err("model crashed".to_string())
            } else {
                Ok(String::new())
            }
        });
    });
    let spec = common::counting_spec(common::red(), 0);
    let mut agent = ExternalAgent::new(ep, DEFAULT_TIMEOUT_MS);
    let rec = run_episode(&spec, &mut agent).unwrap();
    assert_eq!(rec.terminated_by, Termination::Aborted);
    assert!(rec
        .abort_reason
        .as_deref()
        .unwrap()
        .contains("model crashed"));
    assert!(rec.steps.is_empty());

    let good = common::run_named(&common::counting_spec(common::red(), 1), "passive");
    let mut aborted = rec.clone();
    aborted.agent = good.agent.clone();
    let with = aggregate(&[good.clone(), aborted], false);
    let without = aggregate(&[good], false);
    assert_eq!(with.cells, without.cells);
    assert_eq!(with.aborted.values().sum::<u64>(), 1);
}

#[test]
fn dropped_connection_aborts() {
    let ep = listen(|mut r, mut w| {
        let mut line = String::new();
        r.read_line(&mut line).unwrap();
        writeln!(w, r#"{{"protocol":"avr/1","type":"hello"}}"#).unwrap();
        line.clear();
        let _ = r.read_line(&mut line);
        // hang up mid-step
    });
    let spec = common::counting_spec(common::red(), 0);
    let mut agent = ExternalAgent::new(ep, DEFAULT_TIMEOUT_MS);
    let rec = run_episode(&spec, &mut agent).unwrap();
    assert_eq!(rec.terminated_by, Termination::Aborted);
    assert!(rec.abort_reason.unwrap().contains("closed"));
}

#[test]
fn version_mismatch_aborts() {
    let ep = listen(|mut r, mut w| {
        let mut line = String::new();
        r.read_line(&mut line).unwrap();
        writeln!(w, r#"{{"protocol":"avr/0","type":"hello"}}"#).unwrap();
    });
    let spec = common::counting_spec(common::red(), 0);
    let rec = run_episode(&spec, &mut ExternalAgent::new(ep, DEFAULT_TIMEOUT_MS)).unwrap();
    assert_eq!(rec.terminated_by, Termination::Aborted);
    assert!(rec.abort_reason.unwrap().contains("avr/0"));
}

#[test]
fn silent_agent_times_out() {
    let ep = listen(|mut r, _w| {
        let mut line = String::new();
        while r.read_line(&mut line).is_ok_and(|n| n > 0) {
            line.clear();
        }
    });
    let spec = common::counting_spec(common::red(), 0);
    let rec = run_episode(&spec, &mut ExternalAgent::new(ep, 200)).unwrap();
    assert_eq!(rec.terminated_by, Termination::Aborted);
    assert!(rec.abort_reason.unwrap().contains("200 ms"));
}

#[test]
fn unreachable_endpoint_aborts() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let spec = common::counting_spec(common::red(), 0);
    let rec = run_episode(
        &spec,
        &mut ExternalAgent::new(Endpoint::Tcp(addr.to_string()), 1000),
    )
    .unwrap();
    assert_eq!(rec.terminated_by, Termination::Aborted);
}

#[test]
fn serve_closes_on_malformed_frame() {
    let input = format!("{}\nnot json\n", r#"{"protocol":"avr/1","type":"hello"}"#);
    let mut out = Vec::new();
    let r = serve(input.as_bytes(), &mut out, scripted_policy);
    assert!(r.is_err());
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].contains(r#""type":"error""#));
}
