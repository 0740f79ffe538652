//! Subcommand implementations behind the `avr` binary.
//!
//! Every command returns a [`CliError`] on failure; [`CliError::exit_code`]
//! maps it onto the process exit status.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use avr_core::agents::{
    by_name, Agent, Endpoint, ExternalAgent, HumanAgent, TranscriptAgent, DEFAULT_TIMEOUT_MS,
};
use avr_core::belief::{min_steps_reduced, MAX_SEARCH_DEPTH};
use avr_core::canonical;
use avr_core::episode::{
    export_avr_core_records, run_episode, EpisodeError, EpisodeSpec, Termination, DEFAULT_T_MAX,
};
use avr_core::metrics::{aggregate, IgrVariant, MetricsReport};
use avr_core::suite::{build_episode, build_suite, SuiteConfig};
use avr_core::world::{min_steps_to_see, visible_set, ScenarioCategory};
use avr_core::EpisodeRecord;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ABORTED: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

pub const ENDPOINT_ENV: &str = "AVR_AGENT_ENDPOINT";
pub const EXTERNAL_AGENT: &str = "external";

pub const SUITE_FILE: &str = "suite.json";
pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const SCENES_DIR: &str = "scenes";
pub const EPISODES_FILE: &str = "episodes.jsonl";
pub const AVRCORE_FILE: &str = "avrcore.jsonl";
pub const REPORT_FILE: &str = "report.csv";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Parses "0-9", "2" or "0,3,7" into scenario type indices.
pub fn parse_types(s: &str) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |x: &str| {
            x.trim()
                .parse::<u8>()
                .map_err(|_| format!("bad scenario type `{x}`"))
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty type range `{part}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if let Some(t) = out.iter().find(|&&t| t > 9) {
        return Err(format!("scenario type {t} out of range 0-9"));
    }
    if out.is_empty() {
        return Err("no scenario types given".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeList(pub Vec<u8>);

fn parse_type_list(s: &str) -> Result<TypeList, String> {
    parse_types(s).map(TypeList)
}

/// Suite selection flags shared by generate, run and play.
#[derive(Debug, Clone, clap::Args)]
pub struct SuiteArgs {
    /// Scenario categories, comma separated (default: all).
    #[arg(long, value_delimiter = ',')]
    pub category: Vec<ScenarioCategory>,
    /// Scenario types, e.g. "0-9" or "1,4".
    #[arg(long, default_value = "0-9", value_parser = parse_type_list)]
    pub types: TypeList,
    /// Total number of episodes.
    #[arg(long, default_value_t = 300)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    pub tmax: u32,
    #[arg(long)]
    pub render_images: bool,
}

impl SuiteArgs {
    pub fn config(&self) -> Result<SuiteConfig, CliError> {
        if self.tmax > MAX_SEARCH_DEPTH {
            return Err(CliError::Usage(format!(
                "--tmax must be at most {MAX_SEARCH_DEPTH}"
            )));
        }
        let categories = if self.category.is_empty() {
            ScenarioCategory::ALL.to_vec()
        } else {
            self.category.clone()
        };
        Ok(SuiteConfig {
            categories,
            types: self.types.0.clone(),
            count: self.count,
            master_seed: self.seed,
            t_max: self.tmax,
            render_images: self.render_images,
        })
    }
}

/// Provenance written next to the logs of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub suite: SuiteConfig,
    pub agents: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub igr_variant: IgrVariant,
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = canonical::to_string(value).map_err(|e| CliError::Invariant(e.to_string()))?;
    s.push('\n');
    fs::write(path, s).map_err(io_err(path))
}

fn write_jsonl<T: Serialize>(
    path: &Path,
    items: impl IntoIterator<Item = T>,
) -> Result<(), CliError> {
    let mut s = String::new();
    for it in items {
        s.push_str(&canonical::to_string(&it).map_err(|e| CliError::Invariant(e.to_string()))?);
        s.push('\n');
    }
    fs::write(path, s).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

pub fn scene_file_name(index: usize) -> String {
    format!("{index:03}.json")
}

/// Writes `suite.json`, `scenes/NNN.json` and `manifest.csv` under `out`.
pub fn cmd_generate(cfg: &SuiteConfig, out: &Path) -> Result<Vec<EpisodeSpec>, CliError> {
    let specs = build_suite(cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let scenes = out.join(SCENES_DIR);
    create_dir(&scenes)?;
    write_json_file(&out.join(SUITE_FILE), cfg)?;
    let depth = cfg.t_max.min(MAX_SEARCH_DEPTH);
    let rows: Vec<String> = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            let sufficiency = min_steps_reduced(&spec.scene, &spec.question, depth)
                .map_err(|e| CliError::Invariant(e.to_string()))?;
            let all = spec.scene.objects.iter().map(|o| o.id).collect();
            let reveal = min_steps_to_see(
                &spec.scene,
                &visible_set(&spec.scene).ids(),
                &all,
                MAX_SEARCH_DEPTH,
            );
            let cell = |v: Option<u32>| v.map_or_else(String::new, |x| x.to_string());
            Ok(format!(
                "{},{},{},{},{},{},{}",
                spec.episode_id,
                scene_file_name(i),
                spec.scenario.category,
                spec.scenario.scenario_type,
                serde_json::to_value(spec.question.qtype)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                cell(sufficiency),
                cell(reveal)
            ))
        })
        .collect::<Result<_, CliError>>()?;
    for (i, spec) in specs.iter().enumerate() {
        write_json_file(&scenes.join(scene_file_name(i)), spec)?;
    }
    let mut manifest = String::from(
        "episode_id,file,category,scenario_type,question_type,min_steps,min_steps_full_reveal\n",
    );
    for r in rows {
        manifest.push_str(&r);
        manifest.push('\n');
    }
    let path = out.join(MANIFEST_FILE);
    fs::write(&path, manifest).map_err(io_err(&path))?;
    Ok(specs)
}

/// Loads `scenes/*.json` from a generate output directory, in file order.
pub fn load_scenes(dir: &Path) -> Result<(SuiteConfig, Vec<EpisodeSpec>), CliError> {
    let suite_path = dir.join(SUITE_FILE);
    let text = fs::read_to_string(&suite_path).map_err(io_err(&suite_path))?;
    let cfg: SuiteConfig = canonical::from_str(&text)
        .map_err(|e| CliError::Io(format!("{}: {e}", suite_path.display())))?;
    let scenes = dir.join(SCENES_DIR);
    let mut files: Vec<PathBuf> = fs::read_dir(&scenes)
        .map_err(io_err(&scenes))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut specs = Vec::new();
    for f in files {
        let text = fs::read_to_string(&f).map_err(io_err(&f))?;
        specs.push(
            canonical::from_str(&text)
                .map_err(|e| CliError::Io(format!("{}: {e}", f.display())))?,
        );
    }
    Ok((cfg, specs))
}

/// Resolves an agent name, or an external endpoint when the name is
/// `external`.
pub fn make_agent(name: &str, endpoint: Option<&str>) -> Result<Box<dyn Agent>, CliError> {
    if name == EXTERNAL_AGENT {
        let ep = endpoint.ok_or_else(|| {
            CliError::Usage(format!(
                "agent `external` needs --endpoint or {ENDPOINT_ENV}"
            ))
        })?;
        let ep: Endpoint = ep.parse().map_err(CliError::Usage)?;
        return Ok(Box::new(ExternalAgent::new(ep, DEFAULT_TIMEOUT_MS)));
    }
    by_name(name).ok_or_else(|| CliError::Usage(format!("unknown agent `{name}`")))
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub agents: Vec<String>,
    pub endpoint: Option<String>,
    pub jobs: usize,
    pub igr_variant: IgrVariant,
}

#[derive(Debug)]
pub struct RunSummary {
    pub episodes: Vec<EpisodeRecord>,
    pub report: MetricsReport,
    pub aborted: usize,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.aborted > 0 {
            EXIT_ABORTED
        } else {
            EXIT_OK
        }
    }
}

fn episode_error(e: EpisodeError) -> CliError {
    CliError::Invariant(e.to_string())
}

/// Runs every (episode, agent) pair on a pool of `jobs` workers.
pub fn run_specs(specs: &[EpisodeSpec], opts: &RunOptions) -> Result<Vec<EpisodeRecord>, CliError> {
    for a in &opts.agents {
        make_agent(a, opts.endpoint.as_deref())?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let pairs: Vec<(&EpisodeSpec, &String)> = specs
        .iter()
        .flat_map(|s| opts.agents.iter().map(move |a| (s, a)))
        .collect();
    let mut records = pool.install(|| {
        pairs
            .par_iter()
            .map(|(spec, name)| {
                let mut agent = make_agent(name, opts.endpoint.as_deref())?;
                run_episode(spec, agent.as_mut()).map_err(episode_error)
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    records.sort_by(|a, b| (a.episode_id, &a.agent).cmp(&(b.episode_id, &b.agent)));
    Ok(records)
}

fn write_outputs(
    out: &Path,
    records: &[EpisodeRecord],
    variant: IgrVariant,
) -> Result<MetricsReport, CliError> {
    write_jsonl(&out.join(EPISODES_FILE), records)?;
    write_jsonl(
        &out.join(AVRCORE_FILE),
        records.iter().flat_map(export_avr_core_records),
    )?;
    let report = aggregate(records, variant == IgrVariant::InclAnswers);
    let path = out.join(REPORT_FILE);
    fs::write(&path, report.to_csv()).map_err(io_err(&path))?;
    Ok(report)
}

/// Writes `config.json`, `episodes.jsonl`, `avrcore.jsonl` and `report.csv`.
pub fn cmd_run(
    cfg: &SuiteConfig,
    specs: &[EpisodeSpec],
    opts: &RunOptions,
    out: &Path,
) -> Result<RunSummary, CliError> {
    create_dir(out)?;
    write_json_file(
        &out.join(CONFIG_FILE),
        &RunConfig {
            suite: cfg.clone(),
            agents: opts.agents.clone(),
            endpoint: opts.endpoint.clone(),
            igr_variant: opts.igr_variant,
        },
    )?;
    let episodes = run_specs(specs, opts)?;
    let report = write_outputs(out, &episodes, opts.igr_variant)?;
    let aborted = episodes
        .iter()
        .filter(|e| e.terminated_by == Termination::Aborted)
        .count();
    Ok(RunSummary {
        episodes,
        report,
        aborted,
    })
}

/// Parses an episode log; blank lines are skipped and errors carry the
/// 1-based line number.
pub fn read_episodes(path: &Path) -> Result<Vec<EpisodeRecord>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_episodes(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn parse_episodes(text: &str) -> Result<Vec<EpisodeRecord>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| canonical::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

/// Aggregates a log into `report.csv` under `out` and returns the report.
pub fn cmd_report(log: &Path, variant: IgrVariant, out: &Path) -> Result<MetricsReport, CliError> {
    let episodes = read_episodes(log)?;
    let report = aggregate(&episodes, variant == IgrVariant::InclAnswers);
    let path = if out.extension().is_some_and(|x| x == "csv") {
        out.to_path_buf()
    } else {
        create_dir(out)?;
        out.join(REPORT_FILE)
    };
    fs::write(&path, report.to_csv()).map_err(io_err(&path))?;
    Ok(report)
}

/// Converts an episode log into step documents. Returns the document count.
pub fn cmd_export(log: &Path, out: &Path) -> Result<usize, CliError> {
    let episodes = read_episodes(log)?;
    let docs: Vec<_> = episodes.iter().flat_map(export_avr_core_records).collect();
    write_jsonl(out, &docs)?;
    Ok(docs.len())
}

pub fn spec_of(record: &EpisodeRecord) -> EpisodeSpec {
    EpisodeSpec {
        episode_id: record.episode_id,
        seeds: record.seeds,
        scenario: record.scenario,
        scene: record.initial_scene.clone(),
        question: record.question.clone(),
        t_max: record.t_max,
        render_images: false,
    }
}

#[derive(Debug)]
pub struct ReplaySummary {
    pub episodes: usize,
    /// Episode ids whose replayed record differs from the log.
    pub mismatched: Vec<u64>,
}

/// Re-runs each logged episode from its recorded responses and writes the
/// regenerated logs under `out`.
pub fn cmd_replay(log: &Path, out: &Path) -> Result<ReplaySummary, CliError> {
    let original = read_episodes(log)?;
    let replayed = original
        .par_iter()
        .map(|rec| {
            let mut agent = TranscriptAgent::from_record(rec);
            run_episode(&spec_of(rec), &mut agent).map_err(episode_error)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    create_dir(out)?;
    write_outputs(out, &replayed, IgrVariant::Actions)?;
    let mut mismatched = Vec::new();
    for (a, b) in original.iter().zip(&replayed) {
        let same = canonical::to_string(a).ok() == canonical::to_string(b).ok();
        if !same {
            mismatched.push(a.episode_id);
        }
    }
    Ok(ReplaySummary {
        episodes: replayed.len(),
        mismatched,
    })
}

/// One interactive episode; the record is appended to `out/episodes.jsonl`
/// and `out/avrcore.jsonl`.
pub fn cmd_play(
    cfg: &SuiteConfig,
    index: usize,
    input: Box<dyn BufRead + Send>,
    output: Box<dyn Write + Send>,
    out: &Path,
) -> Result<EpisodeRecord, CliError> {
    let spec = build_episode(cfg, index).map_err(|e| CliError::Usage(e.to_string()))?;
    let term = SharedWriter(Arc::new(Mutex::new(output)));
    let mut agent = HumanAgent::new(input, Box::new(term.clone()));
    let record = run_episode(&spec, &mut agent).map_err(episode_error)?;
    drop(agent);
    let mut output = term;
    let mut summary = format!("\nEpisode finished: {:?}", record.terminated_by);
    if let Some(a) = record.final_answer {
        let verdict = if a == record.question.ground_truth {
            "correct"
        } else {
            "incorrect"
        };
        let _ = write!(summary, ", answer {a} ({verdict})");
    }
    writeln!(output, "{summary}").map_err(|e| CliError::Io(e.to_string()))?;
    create_dir(out)?;
    append_line(&out.join(EPISODES_FILE), &record)?;
    for doc in export_avr_core_records(&record) {
        append_line(&out.join(AVRCORE_FILE), &doc)?;
    }
    Ok(record)
}

#[derive(Clone)]
struct SharedWriter(Arc<Mutex<Box<dyn Write + Send>>>);

impl Write for SharedWriter {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).write(buf)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).flush()
    }
}

fn append_line<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    let line = canonical::to_string(value).map_err(|e| CliError::Invariant(e.to_string()))?;
    writeln!(f, "{line}").map_err(io_err(path))
}

/// Agent names named on the command line, deduplicated in order.
pub fn split_agents(list: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    list.split(',')
        .map(str::trim)
        .filter(|a| !a.is_empty() && seen.insert(a.to_string()))
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_lists() {
        assert_eq!(parse_types("0-9").unwrap(), (0..10).collect::<Vec<u8>>());
        assert_eq!(parse_types("7").unwrap(), vec![7]);
        assert_eq!(parse_types("1,4-5").unwrap(), vec![1, 4, 5]);
        assert!(parse_types("3-1").is_err());
        assert!(parse_types("10").is_err());
        assert!(parse_types("x").is_err());
        assert!(parse_types("").is_err());
    }

    #[test]
    fn agent_lists() {
        assert_eq!(split_agents("eig, greedy,eig"), vec!["eig", "greedy"]);
    }

    #[test]
    fn external_needs_endpoint() {
        assert!(matches!(
            make_agent("external", None),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            make_agent("external", Some("udp://x")),
            Err(CliError::Usage(_))
        ));
        assert!(make_agent("external", Some("tcp://127.0.0.1:1")).is_ok());
        assert!(make_agent("nobody", None).is_err());
    }

    #[test]
    fn malformed_line_is_numbered() {
        let e = parse_episodes("\n{}\n").unwrap_err();
        assert!(e.starts_with("line 2:"), "{e}");
        assert!(parse_episodes("").unwrap().is_empty());
    }
}
