//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances are the constants below.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use avr_cli::{run_specs, RunOptions};
use avr_core::agents::{Agent, AgentError, AgentView, EigOracleAgent, Privilege};
use avr_core::belief::{BeliefState, HiddenSlot, SlotId, SlotState};
use avr_core::episode::{
    run_episode, EpisodeSpec, OptionPayload, Outcome, Termination, DEFAULT_T_MAX,
};
use avr_core::metrics::{aggregate, IgrVariant};
use avr_core::questions::{Answer, Attribute, PublicQuestion, QuestionType};
use avr_core::suite::{build_suite, counting_suite, SuiteConfig};
use avr_core::world::{
    generate_scene, min_steps_full_reveal, observe, reduced_actions, scenario_params, Color,
    Material, ObjectId, ObjectSpec, Point, ScenarioCategory, Shape, Size,
};
use avr_core::EpisodeRecord;
use serde_json::Value;

const MASTER_SEED: u64 = 7;
const SUITE_SIZE: usize = 300;
const AGENTS: [&str; 5] = ["eig", "greedy", "omniscient", "passive", "random"];

const STRUCTURAL_MIN_STEPS: usize = 1000;
const STRUCTURAL_BUDGET: Duration = Duration::from_secs(10);
const OMNISCIENT_BUDGET: Duration = Duration::from_secs(60);
const EIG_BUDGET: Duration = Duration::from_secs(300);
const EIG_MIN_IGR: f64 = 0.95;
const EIG_BRUTE_FORCE_TOL: f64 = 1e-9;
const EIG_BRUTE_FORCE_MAX_SLOTS: usize = 3;
const PASSIVE_PER_BUCKET: usize = 50;
const PASSIVE_BUCKET3_MAX_FA: f64 = 0.20;
const DEPTH_SCENES: usize = 100;
const DEPTH_MEAN_MIN: f64 = 2.0;
const MARGIN_EIG_GREEDY: f64 = 0.05;
const MARGIN_GREEDY_RANDOM: f64 = 0.30;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn standard() -> SuiteConfig {
    SuiteConfig {
        count: SUITE_SIZE,
        ..SuiteConfig::standard(MASTER_SEED)
    }
}

fn run(specs: &[EpisodeSpec], agent: &str) -> (Vec<EpisodeRecord>, Duration) {
    let opts = RunOptions {
        agents: vec![agent.to_string()],
        endpoint: None,
        jobs: 1,
        igr_variant: IgrVariant::Actions,
    };
    let t = Instant::now();
    let recs = run_specs(specs, &opts).expect("suite run");
    (recs, t.elapsed())
}

fn fa_rate(recs: &[&EpisodeRecord]) -> f64 {
    let ok = recs
        .iter()
        .filter(|r| {
            r.terminated_by == Termination::Answered
                && r.final_answer == Some(r.question.ground_truth)
        })
        .count();
    ok as f64 / recs.len().max(1) as f64
}

/// Mean over episodes with at least one action of gainful/actions.
fn igr_rate(recs: &[EpisodeRecord]) -> f64 {
    let samples: Vec<f64> = recs
        .iter()
        .filter_map(|r| {
            let actions = r.steps.iter().filter(|s| s.info_gain.is_some()).count();
            let gainful = r.steps.iter().filter(|s| s.info_gain == Some(true)).count();
            (actions > 0).then(|| gainful as f64 / actions as f64)
        })
        .collect();
    samples.iter().sum::<f64>() / samples.len().max(1) as f64
}

// [1] -------------------------------------------------------------------

fn structural() -> Verdict {
    let t = Instant::now();
    let mut steps = 0usize;
    let mut episodes = 0usize;
    let mut violations = Vec::new();
    let mut seed = MASTER_SEED;
    while steps < STRUCTURAL_MIN_STEPS {
        let specs = build_suite(&SuiteConfig::standard(seed)).expect("suite");
        let (recs, _) = run(&specs, "random");
        for r in &recs {
            episodes += 1;
            if !(3..=5).contains(&r.distractors_offered) {
                violations.push(format!(
                    "episode {} seed {seed}: {} distractors",
                    r.episode_id, r.distractors_offered
                ));
            }
            for s in &r.steps {
                steps += 1;
                if !(5..=8).contains(&s.options.len()) {
                    violations.push(format!(
                        "episode {} step {}: {} options",
                        r.episode_id,
                        s.step_index,
                        s.options.len()
                    ));
                }
            }
        }
        seed += 1;
    }
    let elapsed = t.elapsed();
    let mut d = format!(
        "{steps} steps over {episodes} episodes, {} violations, {:.2}s",
        violations.len(),
        elapsed.as_secs_f64()
    );
    for v in violations.iter().take(5) {
        let _ = write!(d, "; {v}");
    }
    verdict(violations.is_empty() && elapsed < STRUCTURAL_BUDGET, d)
}

// [2] -------------------------------------------------------------------

fn omniscient(specs: &[EpisodeSpec]) -> Verdict {
    let (recs, elapsed) = run(specs, "omniscient");
    let per_cat: BTreeMap<_, usize> = specs.iter().fold(BTreeMap::new(), |mut m, s| {
        *m.entry(s.scenario.category).or_default() += 1;
        m
    });
    let fa = fa_rate(&recs.iter().collect::<Vec<_>>());
    let balanced = per_cat.values().all(|&n| n == SUITE_SIZE / 3);
    verdict(
        fa == 1.0 && recs.len() == SUITE_SIZE && balanced && elapsed < OMNISCIENT_BUDGET,
        format!(
            "ACC_FA {:.1}% over {} episodes ({}), {:.2}s",
            fa * 100.0,
            recs.len(),
            per_cat
                .iter()
                .map(|(c, n)| format!("{c} {n}"))
                .collect::<Vec<_>>()
                .join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

// [3] -------------------------------------------------------------------

/// Wraps the EIG agent and keeps every small belief state it reasons over.
struct Audited {
    inner: EigOracleAgent,
    states: Vec<AuditedState>,
}

/// Belief, known objects, question and the reveal sets to score.
type AuditedState = (
    BeliefState,
    Vec<ObjectSpec>,
    PublicQuestion,
    Vec<BTreeSet<SlotId>>,
);

impl Agent for Audited {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn privilege(&self) -> Privilege {
        self.inner.privilege()
    }

    fn begin_episode(&mut self, id: u64, seed: u64) {
        self.inner.begin_episode(id, seed);
    }

    fn respond(&mut self, view: &AgentView<'_>) -> Result<String, AgentError> {
        let out = self.inner.respond(view)?;
        if let Some(b) = self.inner.belief() {
            if b.open_slots().len() <= EIG_BRUTE_FORCE_MAX_SLOTS {
                let g = view.geometry.expect("eig agent has geometry");
                let mut reveals: Vec<BTreeSet<SlotId>> = g.reveals.values().cloned().collect();
                reveals.extend(b.open_slots().into_iter().map(|s| BTreeSet::from([s])));
                reveals.push(b.open_slots().into_iter().collect());
                self.states.push((
                    b.clone(),
                    view.known_objects(),
                    view.question.clone(),
                    reveals,
                ));
            }
        }
        Ok(out)
    }

    fn take_flags(&mut self) -> Vec<String> {
        self.inner.take_flags()
    }
}

fn grid(id: ObjectId) -> Vec<ObjectSpec> {
    let mut v = Vec::new();
    for &shape in &Shape::ALL {
        for &color in &Color::ALL {
            for &size in &Size::ALL {
                for &material in &Material::ALL {
                    v.push(ObjectSpec {
                        id,
                        shape,
                        color,
                        size,
                        material,
                        position: Point::new(0.0, 0.0),
                    });
                }
            }
        }
    }
    v
}

/// A concrete object realising a quotient state, optionally with a fixed
/// queried attribute value.
fn materialise(
    state: SlotState,
    q: &PublicQuestion,
    id: ObjectId,
    y: Option<Answer>,
) -> Option<ObjectSpec> {
    let mut g = grid(id);
    if let Some(y) = y {
        g.retain(|o| q.queried_attribute.map(|a| a.of(o)) == Some(y));
    }
    match state {
        SlotState::Empty => None,
        SlotState::Relevant(i) => g.into_iter().find(|o| {
            q.restriction_classes[i].matches(o)
                && (0..q.restriction_classes.len())
                    .all(|j| j == i || !q.restriction_classes[j].matches(o))
        }),
        SlotState::Irrelevant => g
            .into_iter()
            .find(|o| !q.restriction_classes.iter().any(|c| c.matches(o))),
    }
}

/// Mutual information between the answer and what `reveal` shows, by
/// enumerating completed scenes.
fn brute_force_eig(
    b: &BeliefState,
    known: &[ObjectSpec],
    q: &PublicQuestion,
    reveal: &BTreeSet<SlotId>,
) -> f64 {
    let open = b.open_slots();
    let space = HiddenSlot::state_space(q.restriction_classes.len());
    let mut assignments: Vec<Vec<(SlotId, SlotState, f64)>> = vec![vec![]];
    for &sid in &open {
        let i = b.slots.iter().position(|s| s.slot_id == sid).unwrap();
        let mut next = Vec::new();
        for a in &assignments {
            for (s, w) in space.iter().zip(&b.weights[i]) {
                if *w > 0.0 {
                    let mut x = a.clone();
                    x.push((sid, *s, *w));
                    next.push(x);
                }
            }
        }
        assignments = next;
    }
    let mut joint: Vec<(Answer, String, f64)> = Vec::new();
    for a in assignments {
        let w: f64 = a.iter().map(|x| x.2).product();
        let ys: Vec<Option<Answer>> = match a.iter().find(|x| x.1 == SlotState::Relevant(0)) {
            Some(&(sid, _, _)) if q.qtype == QuestionType::Query => {
                let small =
                    b.slots.iter().find(|s| s.slot_id == sid).unwrap().max_size == Size::Small;
                q.answer_domain
                    .iter()
                    .filter(|&&y| {
                        !(small
                            && q.queried_attribute == Some(Attribute::Size)
                            && y == Answer::Size(Size::Large))
                    })
                    .map(|&y| Some(y))
                    .collect()
            }
            _ => vec![None],
        };
        for y in &ys {
            let mut scene = known.to_vec();
            let mut obs = String::new();
            for (n, (sid, st, _)) in a.iter().enumerate() {
                let yy = if *st == SlotState::Relevant(0) {
                    *y
                } else {
                    None
                };
                let o = materialise(*st, q, 10_000 + n as ObjectId, yy);
                if reveal.contains(sid) {
                    let shown = o.as_ref().map(|o| (o.shape, o.color, o.size, o.material));
                    let _ = write!(obs, "{sid}:{shown:?};");
                }
                scene.extend(o);
            }
            let Ok(ans) = q.evaluate(&scene) else {
                continue;
            };
            if q.answer_domain.contains(&ans) {
                joint.push((ans, obs, w / ys.len() as f64));
            }
        }
    }
    let total: f64 = joint.iter().map(|j| j.2).sum();
    let mut py: BTreeMap<Answer, f64> = BTreeMap::new();
    let mut po: BTreeMap<String, f64> = BTreeMap::new();
    let mut pyo: BTreeMap<(Answer, String), f64> = BTreeMap::new();
    for (a, o, w) in &joint {
        let w = w / total;
        *py.entry(*a).or_default() += w;
        *po.entry(o.clone()).or_default() += w;
        *pyo.entry((*a, o.clone())).or_default() += w;
    }
    pyo.iter()
        .map(|((a, o), p)| p * (p / (py[a] * po[o])).log2())
        .sum::<f64>()
        .max(0.0)
}

fn eig_oracle(specs: &[EpisodeSpec]) -> Verdict {
    let t = Instant::now();
    let mut recs = Vec::new();
    let mut states = Vec::new();
    for spec in specs {
        let mut agent = Audited {
            inner: EigOracleAgent::default(),
            states: Vec::new(),
        };
        recs.push(run_episode(spec, &mut agent).expect("episode"));
        states.extend(agent.states);
    }
    let elapsed = t.elapsed();
    let reachable: Vec<&EpisodeRecord> = recs
        .iter()
        .filter(|r| r.min_steps.is_some_and(|m| m <= r.t_max))
        .collect();
    let fa = fa_rate(&reachable);
    let igr = igr_rate(&recs);
    // a distractor chosen while a gainful action was on offer
    let mut missed = 0;
    for r in &recs {
        for s in &r.steps {
            let Outcome::ChosenAction { letter, .. } = s.outcome else {
                continue;
            };
            let offered = s
                .options
                .options
                .iter()
                .any(|o| matches!(o.payload, OptionPayload::Action { .. }) && !o.is_distractor);
            if offered && s.options.get(letter).is_some_and(|o| o.is_distractor) {
                missed += 1;
            }
        }
    }
    let mut checked = 0;
    let mut worst = 0.0f64;
    for (b, known, q, reveals) in &states {
        for reveal in reveals {
            let lib = b.expected_information_gain(known, q, reveal).expect("eig");
            let oracle = brute_force_eig(b, known, q, reveal);
            worst = worst.max((lib - oracle).abs());
            checked += 1;
        }
    }
    verdict(
        fa == 1.0 && missed == 0 && igr >= EIG_MIN_IGR && worst <= EIG_BRUTE_FORCE_TOL && elapsed < EIG_BUDGET,
        format!(
            "ACC_FA {:.1}% on {} reachable episodes, IGR {:.3}, {missed} distractor picks with a gainful option offered, \
             {checked} EIG values on {} states with <= {EIG_BRUTE_FORCE_MAX_SLOTS} open slots, max |diff| {worst:.2e} bits, {:.2}s",
            fa * 100.0,
            reachable.len(),
            igr,
            states.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// [4] -------------------------------------------------------------------

fn passive_degradation() -> Verdict {
    let eps =
        counting_suite(MASTER_SEED, PASSIVE_PER_BUCKET, DEFAULT_T_MAX).expect("counting suite");
    let mut buckets: BTreeMap<usize, Vec<EpisodeRecord>> = BTreeMap::new();
    for (bucket, spec) in &eps {
        let (mut r, _) = run(std::slice::from_ref(spec), "passive");
        buckets.entry(*bucket).or_default().push(r.remove(0));
    }
    let rates: Vec<f64> = (0..4)
        .map(|b| {
            fa_rate(
                &buckets
                    .get(&b)
                    .map(|v| v.iter().collect::<Vec<_>>())
                    .unwrap_or_default(),
            )
        })
        .collect();
    let sizes: Vec<usize> = (0..4)
        .map(|b| buckets.get(&b).map_or(0, Vec::len))
        .collect();
    let monotone = rates.windows(2).all(|w| w[1] <= w[0]);
    verdict(
        monotone
            && rates[0] == 1.0
            && rates[3] <= PASSIVE_BUCKET3_MAX_FA
            && sizes.iter().all(|&n| n >= PASSIVE_PER_BUCKET),
        format!(
            "ACC_FA by hidden-relevant count 0..3: {} (n = {:?})",
            rates
                .iter()
                .map(|r| format!("{:.1}%", r * 100.0))
                .collect::<Vec<_>>()
                .join(", "),
            sizes
        ),
    )
}

// [5] -------------------------------------------------------------------

fn depth_calibration(specs: &[EpisodeSpec]) -> Verdict {
    let deep: Vec<(u8, (u32, u32))> = (0..10u8)
        .filter_map(|t| {
            scenario_params(ScenarioCategory::Composite, t)
                .depth
                .map(|d| (t, d))
        })
        .collect();
    let mut out_of_band = Vec::new();
    let mut generated = 0;
    let mut seed = 0u64;
    while generated < DEPTH_SCENES {
        let (t, (lo, hi)) = deep[generated % deep.len()];
        seed += 1;
        let Ok(scene) = generate_scene(
            ScenarioCategory::Composite,
            t,
            avr_core::seed::derive(MASTER_SEED, &[0xDEE9, seed]),
        ) else {
            continue;
        };
        generated += 1;
        match min_steps_full_reveal(&scene, reduced_actions, hi) {
            Some(d) if d >= lo => {}
            other => out_of_band.push(format!("type {t} seed {}: {other:?}", scene.seed)),
        }
    }
    let reveal: Vec<u32> = specs
        .iter()
        .filter_map(|s| {
            let all = s
                .scene
                .objects
                .iter()
                .map(|o| o.id)
                .collect::<BTreeSet<_>>();
            let seen = observe(&s.scene, 0).ids();
            avr_core::world::min_steps_to_see(
                &s.scene,
                &seen,
                &all,
                avr_core::belief::MAX_SEARCH_DEPTH,
            )
        })
        .collect();
    let mean_reveal = reveal.iter().sum::<u32>() as f64 / reveal.len().max(1) as f64;
    let sufficiency: Vec<u32> = specs
        .iter()
        .filter_map(|s| {
            avr_core::belief::min_steps_reduced(&s.scene, &s.question, DEFAULT_T_MAX)
                .ok()
                .flatten()
        })
        .collect();
    let mean_suff = sufficiency.iter().sum::<u32>() as f64 / sufficiency.len().max(1) as f64;
    let mut d = format!(
        "{} of {generated} deep composite scenes outside [4,6] (types {:?}); suite mean steps to see every object {mean_reveal:.2} \
         over {} scenes (mean steps to sufficiency {mean_suff:.2}, informational)",
        out_of_band.len(),
        deep.iter().map(|d| d.0).collect::<Vec<_>>(),
        reveal.len()
    );
    for v in out_of_band.iter().take(5) {
        let _ = write!(d, "; {v}");
    }
    verdict(
        out_of_band.is_empty() && reveal.len() == specs.len() && mean_reveal >= DEPTH_MEAN_MIN,
        d,
    )
}

// [7] -------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Frac(u128, u128);

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Frac {
    fn new(n: u128, d: u128) -> Frac {
        let g = gcd(n, d).max(1);
        Frac(n / g, d / g)
    }

    fn add(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }

    fn div(self, k: u128) -> Frac {
        Frac::new(self.0, self.1 * k)
    }

    fn percent(self) -> f64 {
        self.0 as f64 * 100.0 / self.1 as f64
    }
}

#[derive(Default)]
struct Tally {
    n: u128,
    isj: u128,
    fa: u128,
    igr: Option<Frac>,
    igr_n: u128,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "—".to_string(), |x| format!("{x:.1}"))
}

fn object_matches(filter: &Value, obj: &Value) -> bool {
    filter
        .as_object()
        .unwrap()
        .iter()
        .all(|(k, v)| obj.get(k) == Some(v))
}

/// Recomputes report.csv and the gain flags from the raw JSON lines.
fn recompute(log: &str) -> (String, usize, usize) {
    let mut tallies: BTreeMap<String, BTreeMap<String, Tally>> = BTreeMap::new();
    let mut steps = 0;
    let mut flag_mismatch = 0;
    for line in log.lines() {
        let e: Value = serde_json::from_str(line).unwrap();
        let classes = e["question"]["restriction_classes"]
            .as_array()
            .unwrap()
            .clone();
        let obs = e["observations"].as_array().unwrap();
        for s in e["steps"].as_array().unwrap() {
            steps += 1;
            let seen: BTreeSet<u64> = s["observation_history"]
                .as_array()
                .unwrap()
                .iter()
                .flat_map(|i| {
                    obs[i.as_u64().unwrap() as usize]["visible"]
                        .as_array()
                        .unwrap()
                })
                .map(|v| v["object"]["id"].as_u64().unwrap())
                .collect();
            let expected = s.get("next_observation").map(|n| {
                obs[n.as_u64().unwrap() as usize]["visible"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|v| &v["object"])
                    .any(|o| {
                        !seen.contains(&o["id"].as_u64().unwrap())
                            && classes.iter().any(|c| object_matches(c, o))
                    })
            });
            if expected != s.get("info_gain").map(|g| g.as_bool().unwrap()) {
                flag_mismatch += 1;
            }
        }
        if e["terminated_by"] == "aborted" {
            continue;
        }
        let agent = e["agent"].as_str().unwrap().to_string();
        let cat = e["scenario"]["category"].as_str().unwrap().to_string();
        let suff = e["initial_sufficiency"]["unseen_irrelevant"] == true
            && e["initial_sufficiency"]["seen_answer_matches"] == true;
        let steps_v = e["steps"].as_array().unwrap();
        let first = steps_v
            .first()
            .map(|s| s["outcome"]["kind"].as_str().unwrap().to_string());
        let isj = match first.as_deref() {
            Some("chosen_answer") => suff,
            Some("chosen_action") => !suff,
            _ => false,
        };
        let fa = e["terminated_by"] == "answered"
            && e.get("final_answer") == Some(&e["question"]["ground_truth"]);
        let actions = steps_v
            .iter()
            .filter(|s| s.get("info_gain").is_some())
            .count() as u128;
        let gainful = steps_v
            .iter()
            .filter(|s| s.get("info_gain") == Some(&Value::Bool(true)))
            .count() as u128;
        for key in [cat, "AVG".to_string()] {
            let t = tallies
                .entry(agent.clone())
                .or_default()
                .entry(key)
                .or_default();
            t.n += 1;
            t.isj += u128::from(isj);
            t.fa += u128::from(fa);
            if actions > 0 {
                let r = Frac::new(gainful, actions);
                t.igr = Some(t.igr.map_or(r, |s| s.add(r)));
                t.igr_n += 1;
            }
        }
    }
    let mut csv = String::from("agent,category,n,acc_isj,igr,acc_fa\n");
    for (agent, cats) in &tallies {
        for cat in ["occlusion", "stack", "composite", "AVG"] {
            let empty = Tally::default();
            let t = cats.get(cat).unwrap_or(&empty);
            let pct = |k: u128| (t.n > 0).then(|| Frac::new(k, t.n).percent());
            let igr = t.igr.map(|s| s.div(t.igr_n).percent());
            let _ = writeln!(
                csv,
                "{agent},{cat},{},{},{},{}",
                t.n,
                cell(pct(t.isj)),
                cell(igr),
                cell(pct(t.fa))
            );
        }
    }
    (csv, steps, flag_mismatch)
}

fn self_consistency(run_dir: &Path) -> Verdict {
    let log = fs::read_to_string(run_dir.join("episodes.jsonl")).unwrap();
    let report = fs::read_to_string(run_dir.join("report.csv")).unwrap();
    let (csv, steps, flag_mismatch) = recompute(&log);
    let differing: Vec<(&str, &str)> = csv
        .lines()
        .zip(report.lines())
        .filter(|(a, b)| a != b)
        .collect();
    let rows_match = csv.lines().count() == report.lines().count();
    // unrounded cells against exact fractions
    let recs: Vec<EpisodeRecord> = log
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let m = aggregate(&recs, false);
    let cells = m.cells.len();
    verdict(
        differing.is_empty() && rows_match && flag_mismatch == 0 && cells == csv.lines().count() - 1,
        format!(
            "{} report rows recomputed, {} differ; gain flags recounted on {steps} steps, {flag_mismatch} mismatches",
            csv.lines().count() - 1,
            differing.len()
        ),
    )
}

// [6] -------------------------------------------------------------------

fn avr(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_avr"))
        .args(args)
        .env_remove("AVR_AGENT_ENDPOINT")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn pipeline(root: &Path) -> bool {
    let p = |x: &str| root.join(x).to_str().unwrap().to_string();
    let seed = MASTER_SEED.to_string();
    let count = SUITE_SIZE.to_string();
    avr(&[
        "generate",
        "--seed",
        &seed,
        "--count",
        &count,
        "--out",
        &p("gen"),
    ]) && avr(&[
        "run",
        "--scenes",
        &p("gen"),
        "--agent",
        &AGENTS.join(","),
        "--jobs",
        "2",
        "--out",
        &p("run"),
    ]) && avr(&["report", &p("run/episodes.jsonl"), "--out", &p("report")])
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    out
}

fn determinism(a: &Path, b: &Path) -> Verdict {
    let ok = pipeline(a) && pipeline(b);
    if !ok {
        return verdict(false, "pipeline command failed".into());
    }
    let fa = files_under(a);
    let fb = files_under(b);
    let differing: Vec<_> = fa
        .iter()
        .filter(|(k, v)| fb.get(*k) != Some(v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    verdict(
        differing.is_empty() && fa.len() == fb.len() && fa.len() > SUITE_SIZE,
        format!(
            "{} files compared across two generate+run+report pipelines, {} differ {:?}",
            fa.len(),
            differing.len(),
            differing
        ),
    )
}

// [8] -------------------------------------------------------------------

fn baseline_ordering(run_dir: &Path) -> Verdict {
    let recs: Vec<EpisodeRecord> = fs::read_to_string(run_dir.join("episodes.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let by = |a: &str| {
        recs.iter()
            .filter(|r| r.agent == a)
            .cloned()
            .collect::<Vec<_>>()
    };
    let igr: BTreeMap<&str, f64> = AGENTS.iter().map(|&a| (a, igr_rate(&by(a)))).collect();
    let fa: BTreeMap<&str, f64> = AGENTS
        .iter()
        .map(|&a| (a, fa_rate(&by(a).iter().collect::<Vec<_>>())))
        .collect();
    let m1 = igr["eig"] - igr["greedy"];
    let m2 = igr["greedy"] - igr["random"];
    let fa_order = fa["omniscient"] == 1.0
        && fa["omniscient"] >= fa["eig"]
        && fa["eig"] >= fa["greedy"]
        && fa["greedy"] >= fa["random"];
    verdict(
        m1 >= MARGIN_EIG_GREEDY && m2 >= MARGIN_GREEDY_RANDOM && fa_order,
        format!(
            "IGR eig {:.3} / greedy {:.3} / random {:.3} (margins {m1:.3}, {m2:.3}); ACC_FA omniscient {:.1}% >= eig {:.1}% >= greedy {:.1}% >= random {:.1}%",
            igr["eig"],
            igr["greedy"],
            igr["random"],
            fa["omniscient"] * 100.0,
            fa["eig"] * 100.0,
            fa["greedy"] * 100.0,
            fa["random"] * 100.0
        ),
    )
}

fn main() {
    let tmp = std::env::temp_dir().join(format!("avr-acceptance-{}", std::process::id()));
    let _ = fs::remove_dir_all(&tmp);
    fs::create_dir_all(&tmp).unwrap();
    let specs = build_suite(&standard()).expect("standard suite");
    let (a, b) = (tmp.join("a"), tmp.join("b"));

    // determinism runs before self-consistency, which reads its outputs
    let checks: Vec<(u8, &str, Box<dyn FnOnce() -> Verdict>)> = vec![
        (1, "structural fidelity", Box::new(structural)),
        (2, "omniscient bound", Box::new(|| omniscient(&specs))),
        (3, "eig oracle", Box::new(|| eig_oracle(&specs))),
        (4, "passive degradation", Box::new(passive_degradation)),
        (
            5,
            "depth calibration",
            Box::new(|| depth_calibration(&specs)),
        ),
        (7, "determinism", Box::new(|| determinism(&a, &b))),
        (
            6,
            "metric self-consistency",
            Box::new(|| self_consistency(&a.join("run"))),
        ),
        (
            8,
            "baseline ordering",
            Box::new(|| baseline_ordering(&a.join("run"))),
        ),
    ];
    let mut failed = 0;
    for (n, name, check) in checks {
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "{} [{n}] {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    let _ = fs::remove_dir_all(&tmp);
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
