mod common;

use avr_core::agents::{Privilege, TranscriptAgent, AGENT_NAMES};
use avr_core::canonical;
use avr_core::episode::{
    export_avr_core_records, import_avr_core_records, run_episode, Outcome, Termination,
};
use avr_core::metrics::{score_fa, score_isj};
use avr_core::questions::Answer;
use avr_core::world::Action;
use common::*;

#[test]
fn omniscient_answers_at_step_zero() {
    let rec = run_named(&counting_spec(red(), 0), "omniscient");
    assert_eq!(rec.steps.len(), 1);
    assert_eq!(rec.final_answer, Some(Answer::Count(2)));
    assert!(score_fa(&rec));
    // the view is insufficient, so answering at once is the wrong judgment
    assert!(!score_isj(&rec));
}

#[test]
fn passive_undercounts_the_covered_sphere() {
    let rec = run_named(&counting_spec(red(), 0), "passive");
    assert_eq!(rec.steps.len(), 1);
    assert_eq!(rec.final_answer, Some(Answer::Count(1)));
    assert!(!score_fa(&rec));
}

#[test]
fn passive_is_right_when_nothing_relevant_is_hidden() {
    let rec = run_named(&counting_spec(blue(), 0), "passive");
    assert!(rec.initial_sufficiency.sufficient());
    assert_eq!(rec.min_steps, Some(0));
    assert!(score_fa(&rec) && score_isj(&rec));
}

#[test]
fn eig_uncovers_then_answers() {
    let rec = run_named(&counting_spec(red(), 0), "eig");
    assert_eq!(rec.steps.len(), 2);
    assert_eq!(rec.min_steps, Some(1));
    let Outcome::ChosenAction { action, .. } = rec.steps[0].outcome else {
        panic!("expected an action at step 0");
    };
    assert!(matches!(
        action,
        Action::Pick { target_id: 1 } | Action::MoveObject { target_id: 1, .. }
    ));
    assert_eq!(rec.steps[0].info_gain, Some(true));
    assert!(rec.steps[0]
        .effect
        .as_ref()
        .unwrap()
        .newly_seen
        .contains(&2));
    assert!(rec.steps[1].gt_sufficient);
    assert_eq!(rec.final_answer, Some(Answer::Count(2)));
    assert!(score_isj(&rec) && score_fa(&rec));
}

#[test]
fn unparseable_response_ends_the_episode() {
    let spec = counting_spec(red(), 0);
    let mut agent =
        TranscriptAgent::new("t".into(), Privilege::None, vec!["I am not sure.".into()]);
    let rec = run_episode(&spec, &mut agent).unwrap();
    assert_eq!(rec.terminated_by, Termination::Malformed);
    assert_eq!(rec.steps[0].outcome, Outcome::Malformed);
    assert!(!score_isj(&rec) && !score_fa(&rec));
}

#[test]
fn step_cap_stops_an_agent_that_never_answers() {
    let mut spec = counting_spec(blue(), 0);
    spec.t_max = 3;
    // letter E is an action on every step: the counting domain has 4 answers
    let mut agent = TranscriptAgent::new(
        "t".into(),
        Privilege::None,
        vec!["<action>E</action>".into(); 3],
    );
    let rec = run_episode(&spec, &mut agent).unwrap();
    assert_eq!(rec.terminated_by, Termination::StepCap);
    assert_eq!(rec.action_steps(), 3);
    assert!(!score_fa(&rec));
}

#[test]
fn transcript_exhaustion_aborts() {
    let spec = counting_spec(red(), 0);
    let mut agent = TranscriptAgent::new("t".into(), Privilege::None, vec![]);
    let rec = run_episode(&spec, &mut agent).unwrap();
    assert_eq!(rec.terminated_by, Termination::Aborted);
    assert!(rec.steps.is_empty());
    assert!(export_avr_core_records(&rec).is_empty());
}

#[test]
fn replaying_transcripts_reproduces_records() {
    for spec in small_suite(21, 24) {
        for name in AGENT_NAMES {
            let rec = run_named(&spec, name);
            let mut t = TranscriptAgent::from_record(&rec);
            let again = run_episode(&spec, &mut t).unwrap();
            assert_eq!(
                canonical::to_string(&rec).unwrap(),
                canonical::to_string(&again).unwrap()
            );
        }
    }
}

#[test]
fn export_round_trips() {
    let specs = small_suite(5, 15);
    for name in AGENT_NAMES {
        let recs: Vec<_> = specs.iter().map(|s| run_named(s, name)).collect();
        let docs: Vec<_> = recs.iter().flat_map(export_avr_core_records).collect();
        assert_eq!(
            docs.len(),
            recs.iter().map(|r| r.steps.len()).sum::<usize>()
        );
        let text: Vec<String> = docs
            .iter()
            .map(|d| canonical::to_string(d).unwrap())
            .collect();
        let parsed: Vec<_> = text
            .iter()
            .map(|l| canonical::from_str(l).unwrap())
            .collect();
        assert_eq!(import_avr_core_records(&parsed).unwrap(), recs);
    }
}

#[test]
fn export_requires_contiguous_steps() {
    let rec = run_named(&counting_spec(red(), 0), "eig");
    let mut docs = export_avr_core_records(&rec);
    assert!(import_avr_core_records(&docs[1..]).is_err());
    docs[1].step_index = 5;
    assert!(import_avr_core_records(&docs).is_err());
}

#[test]
fn records_survive_json() {
    let rec = run_named(&counting_spec(red(), 0), "greedy");
    let line = canonical::to_string(&rec).unwrap();
    let back: avr_core::EpisodeRecord = canonical::from_str(&line).unwrap();
    assert_eq!(back, rec);
    assert_eq!(canonical::to_string(&back).unwrap(), line);
}
