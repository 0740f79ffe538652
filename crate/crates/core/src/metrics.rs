//! Sufficiency judgment accuracy, information gain rate and final answer
//! accuracy, per episode and aggregated per agent and scenario category.
//!
//! Cell values are exact rationals until they are formatted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::episode::{reveals_relevant, EpisodeRecord, Outcome, Termination};
use crate::questions::PublicQuestion;
use crate::world::{ObjectId, Observation, ScenarioCategory};

pub const AVG_LABEL: &str = "AVG";
pub const EMPTY_CELL: &str = "—";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IgrVariant {
    /// Denominator counts action steps only.
    #[default]
    Actions,
    /// Denominator also counts the answering step.
    InclAnswers,
}

/// Step-0 outcome class matches ground-truth sufficiency.
pub fn score_isj(ep: &EpisodeRecord) -> bool {
    let sufficient = ep.initial_sufficiency.sufficient();
    match ep.steps.first().map(|s| s.outcome) {
        Some(Outcome::ChosenAnswer { .. }) => sufficient,
        Some(Outcome::ChosenAction { .. }) => !sufficient,
        _ => false,
    }
}

/// An action gains information when it shows a relevant object that had not
/// been seen before.
pub fn gain_predicate(
    seen_before: &BTreeSet<ObjectId>,
    after: &Observation,
    question: &PublicQuestion,
) -> bool {
    reveals_relevant(seen_before, after, question)
}

/// (gainful action steps, denominator) or `None` when the denominator is 0.
pub fn score_igr(ep: &EpisodeRecord, variant: IgrVariant) -> Option<Ratio<u64>> {
    let actions = ep.steps.iter().filter(|s| s.info_gain.is_some()).count() as u64;
    let gainful = ep
        .steps
        .iter()
        .filter(|s| s.info_gain == Some(true))
        .count() as u64;
    let den = match variant {
        IgrVariant::Actions => actions,
        IgrVariant::InclAnswers => {
            actions
                + ep.steps
                    .iter()
                    .filter(|s| matches!(s.outcome, Outcome::ChosenAnswer { .. }))
                    .count() as u64
        }
    };
    (den > 0).then(|| Ratio::new(gainful, den))
}

pub fn score_fa(ep: &EpisodeRecord) -> bool {
    ep.terminated_by == Termination::Answered && ep.final_answer == Some(ep.question.ground_truth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeScore {
    pub episode_id: u64,
    pub agent: String,
    pub category: ScenarioCategory,
    pub isj: bool,
    pub fa: bool,
    /// "gainful/actions", absent when no action was taken.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub igr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub igr_incl_answers: Option<String>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub agent: String,
    pub category: String,
    pub n: u64,
    /// Percentages.
    pub acc_isj: Option<f64>,
    pub igr: Option<f64>,
    /// Episodes contributing an IGR sample.
    pub igr_n: u64,
    pub acc_fa: Option<f64>,
    pub igr_incl_answers: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub cells: Vec<Cell>,
    pub episodes: Vec<EpisodeScore>,
    /// Aborted episodes per agent, excluded from every cell.
    pub aborted: BTreeMap<String, u64>,
    pub include_incl_answers: bool,
}

fn ratio_str(r: &Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn percent(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 * 100.0 / *r.denom() as f64
}

#[derive(Default)]
struct Acc {
    n: u64,
    isj: u64,
    fa: u64,
    igr_sum: Ratio<u64>,
    igr_n: u64,
    incl_sum: Ratio<u64>,
    incl_n: u64,
}

impl Acc {
    fn add(&mut self, isj: bool, fa: bool, igr: Option<Ratio<u64>>, incl: Option<Ratio<u64>>) {
        self.n += 1;
        self.isj += u64::from(isj);
        self.fa += u64::from(fa);
        if let Some(r) = igr {
            self.igr_sum += r;
            self.igr_n += 1;
        }
        if let Some(r) = incl {
            self.incl_sum += r;
            self.incl_n += 1;
        }
    }

    fn cell(&self, agent: &str, category: &str) -> Cell {
        let mean = |sum: Ratio<u64>, n: u64| (n > 0).then(|| percent(sum / Ratio::from_integer(n)));
        Cell {
            agent: agent.to_string(),
            category: category.to_string(),
            n: self.n,
            acc_isj: (self.n > 0).then(|| percent(Ratio::new(self.isj, self.n))),
            igr: mean(self.igr_sum, self.igr_n),
            igr_n: self.igr_n,
            acc_fa: (self.n > 0).then(|| percent(Ratio::new(self.fa, self.n))),
            igr_incl_answers: mean(self.incl_sum, self.incl_n),
        }
    }
}

/// Per agent: one row per category plus an AVG row pooling all episodes.
pub fn aggregate(episodes: &[EpisodeRecord], include_incl_answers: bool) -> MetricsReport {
    let mut per: BTreeMap<String, BTreeMap<ScenarioCategory, Acc>> = BTreeMap::new();
    let mut avg: BTreeMap<String, Acc> = BTreeMap::new();
    let mut aborted = BTreeMap::new();
    let mut scores = Vec::new();
    let mut sorted: Vec<&EpisodeRecord> = episodes.iter().collect();
    sorted.sort_by(|a, b| (&a.agent, a.episode_id).cmp(&(&b.agent, b.episode_id)));
    for ep in sorted {
        if ep.terminated_by == Termination::Aborted {
            *aborted.entry(ep.agent.clone()).or_insert(0) += 1;
            continue;
        }
        let isj = score_isj(ep);
        let fa = score_fa(ep);
        let igr = score_igr(ep, IgrVariant::Actions);
        let incl = score_igr(ep, IgrVariant::InclAnswers);
        per.entry(ep.agent.clone())
            .or_default()
            .entry(ep.scenario.category)
            .or_default()
            .add(isj, fa, igr, incl);
        avg.entry(ep.agent.clone())
            .or_default()
            .add(isj, fa, igr, incl);
        scores.push(EpisodeScore {
            episode_id: ep.episode_id,
            agent: ep.agent.clone(),
            category: ep.scenario.category,
            isj,
            fa,
            igr: igr.as_ref().map(ratio_str),
            igr_incl_answers: incl.as_ref().map(ratio_str),
            steps: ep.steps.len(),
        });
    }
    let mut cells = Vec::new();
    let agents: BTreeSet<String> = per.keys().chain(aborted.keys()).cloned().collect();
    let empty = Acc::default();
    for agent in &agents {
        for cat in ScenarioCategory::ALL {
            let acc = per.get(agent).and_then(|m| m.get(&cat)).unwrap_or(&empty);
            cells.push(acc.cell(agent, cat.name()));
        }
        cells.push(avg.get(agent).unwrap_or(&empty).cell(agent, AVG_LABEL));
    }
    MetricsReport {
        cells,
        episodes: scores,
        aborted,
        include_incl_answers,
    }
}

pub fn format_cell(v: Option<f64>) -> String {
    v.map_or_else(|| EMPTY_CELL.to_string(), |x| format!("{x:.1}"))
}

impl MetricsReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("agent,category,n,acc_isj,igr,acc_fa");
        if self.include_incl_answers {
            out.push_str(",igr_incl_answers");
        }
        out.push('\n');
        for c in &self.cells {
            let _ = write!(
                out,
                "{},{},{},{},{},{}",
                c.agent,
                c.category,
                c.n,
                format_cell(c.acc_isj),
                format_cell(c.igr),
                format_cell(c.acc_fa)
            );
            if self.include_incl_answers {
                let _ = write!(out, ",{}", format_cell(c.igr_incl_answers));
            }
            out.push('\n');
        }
        out
    }

    /// Aligned table for terminals.
    pub fn to_table(&self) -> String {
        let mut header = vec!["agent", "category", "n", "ACC_ISJ", "IGR", "ACC_FA"];
        if self.include_incl_answers {
            header.push("IGR+ans");
        }
        let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for c in &self.cells {
            let mut r = vec![
                c.agent.clone(),
                c.category.clone(),
                c.n.to_string(),
                format_cell(c.acc_isj),
                format_cell(c.igr),
                format_cell(c.acc_fa),
            ];
            if self.include_incl_answers {
                r.push(format_cell(c.igr_incl_answers));
            }
            rows.push(r);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|i| rows.iter().map(|r| r[i].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &rows {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (s, w))| {
                    let pad = w - s.chars().count();
                    if i < 2 {
                        format!("{s}{}", " ".repeat(pad))
                    } else {
                        format!("{}{s}", " ".repeat(pad))
                    }
                })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        for (agent, n) in &self.aborted {
            let _ = writeln!(out, "aborted episodes ({agent}): {n}");
        }
        out
    }
}
