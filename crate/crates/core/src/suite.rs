//! Reproducible benchmark suites derived from one master seed.
//!
//! Episode `i` of a suite over categories `C` and types `T` uses category
//! `C[i % |C|]`, type `T[(i / |C|) % |T|]` and cycles through the question
//! types. All of its seeds are derived from `(master, i, attempt)`.

use serde::{Deserialize, Serialize};

use crate::episode::{EpisodeSeeds, EpisodeSpec, OptionGenerator, ScenarioMeta, DEFAULT_T_MAX};
use crate::questions::{
    build_question, instantiate_question, AttributeFilter, Question, QuestionType,
};
use crate::seed;
use crate::world::{
    generate_scene, hidden_ids, visible_set, ScenarioCategory, SceneSpec, Size, HIDDEN_COUNTS,
};

/// Scene regenerations per episode before the suite gives up.
pub const MAX_ATTEMPTS: u64 = 64;
/// Question seeds tried per scene.
pub const QUESTION_TRIES: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub categories: Vec<ScenarioCategory>,
    pub types: Vec<u8>,
    /// Total episodes.
    pub count: usize,
    pub master_seed: u64,
    pub t_max: u32,
    pub render_images: bool,
}

impl SuiteConfig {
    /// All categories and types, 100 episodes per category.
    pub fn standard(master_seed: u64) -> Self {
        SuiteConfig {
            categories: ScenarioCategory::ALL.to_vec(),
            types: (0..10).collect(),
            count: 300,
            master_seed,
            t_max: DEFAULT_T_MAX,
            render_images: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SuiteError {
    #[error("suite needs at least one category and one scenario type")]
    Empty,
    #[error("episode {0}: no usable scene/question after {MAX_ATTEMPTS} attempts")]
    Exhausted(u64),
}

fn seeds_for(master: u64, episode: u64, attempt: u64) -> EpisodeSeeds {
    EpisodeSeeds {
        scene: seed::derive(master, &[episode, attempt, 1]),
        question: seed::derive(master, &[episode, attempt, 2]),
        options: seed::derive(master, &[episode, attempt, 3]),
        agent: seed::derive(master, &[episode, 4]),
    }
}

/// Scene and question pass the step-0 option generator.
fn usable(scene: &SceneSpec, q: &Question, seeds: &EpisodeSeeds, t_max: u32) -> bool {
    let seen = visible_set(scene).ids();
    OptionGenerator::new(seeds.options)
        .generate(scene, q, &seen, 0, t_max)
        .is_ok()
}

pub fn episode_plan(cfg: &SuiteConfig, i: usize) -> (ScenarioMeta, QuestionType) {
    let nc = cfg.categories.len();
    let nt = cfg.types.len();
    let j = i / nc;
    let meta = ScenarioMeta {
        category: cfg.categories[i % nc],
        scenario_type: cfg.types[j % nt],
    };
    (
        meta,
        QuestionType::ALL[(j + j / nt) % QuestionType::ALL.len()],
    )
}

pub fn build_episode(cfg: &SuiteConfig, i: usize) -> Result<EpisodeSpec, SuiteError> {
    let (meta, qtype) = episode_plan(cfg, i);
    let id = i as u64;
    for attempt in 0..MAX_ATTEMPTS {
        let mut seeds = seeds_for(cfg.master_seed, id, attempt);
        let Ok(scene) = generate_scene(meta.category, meta.scenario_type, seeds.scene) else {
            continue;
        };
        for k in 0..QUESTION_TRIES {
            let qseed = seed::derive(seeds.question, &[k]);
            let Ok(question) = instantiate_question(&scene, qtype, qseed) else {
                continue;
            };
            seeds.question = qseed;
            if usable(&scene, &question, &seeds, cfg.t_max) {
                return Ok(EpisodeSpec {
                    episode_id: id,
                    seeds,
                    scenario: meta,
                    scene,
                    question,
                    t_max: cfg.t_max,
                    render_images: cfg.render_images,
                });
            }
            seeds = seeds_for(cfg.master_seed, id, attempt);
        }
    }
    Err(SuiteError::Exhausted(id))
}

pub fn build_suite(cfg: &SuiteConfig) -> Result<Vec<EpisodeSpec>, SuiteError> {
    if cfg.categories.is_empty() || cfg.types.is_empty() {
        return Err(SuiteError::Empty);
    }
    (0..cfg.count).map(|i| build_episode(cfg, i)).collect()
}

/// Counting episodes whose question covers exactly `bucket` hidden objects.
///
/// For `bucket > 0` the scene hides `bucket` objects that share an attribute
/// and the question counts that attribute. For `bucket == 0` the question
/// counts large objects of some color, which hiding sites never conceal.
pub fn counting_suite(
    master_seed: u64,
    per_bucket: usize,
    t_max: u32,
) -> Result<Vec<(usize, EpisodeSpec)>, SuiteError> {
    let mut out = Vec::new();
    let single = [ScenarioCategory::Occlusion, ScenarioCategory::Stack];
    for bucket in 0..4usize {
        let types: Vec<u8> = if bucket == 0 {
            (0..10).collect()
        } else {
            (0..10u8)
                .filter(|&t| HIDDEN_COUNTS[t as usize] == bucket)
                .collect()
        };
        for n in 0..per_bucket {
            let id = (bucket * 100_000 + n) as u64;
            let meta = ScenarioMeta {
                category: single[n % 2],
                scenario_type: types[(n / 2) % types.len()],
            };
            let mut built = None;
            for attempt in 0..MAX_ATTEMPTS {
                let seeds = seeds_for(master_seed ^ 0xC0C0, id, attempt);
                let Ok(scene) = generate_scene(meta.category, meta.scenario_type, seeds.scene)
                else {
                    continue;
                };
                let hidden: Vec<_> = hidden_ids(&scene)
                    .into_iter()
                    .filter_map(|h| scene.object(h))
                    .collect();
                let mut rng = seed::rng(seeds.question, &[]);
                let class = if bucket == 0 {
                    use rand::seq::SliceRandom;
                    AttributeFilter {
                        size: Some(Size::Large),
                        color: Some(*crate::world::Color::ALL.choose(&mut rng).unwrap()),
                        ..Default::default()
                    }
                } else {
                    let Some(first) = hidden.first() else {
                        continue;
                    };
                    let shared = [
                        crate::questions::Attribute::Shape,
                        crate::questions::Attribute::Color,
                        crate::questions::Attribute::Material,
                    ]
                    .into_iter()
                    .find(|a| hidden.iter().all(|o| a.of(o) == a.of(first)));
                    let Some(attr) = shared else { continue };
                    AttributeFilter::default().pin(attr, first)
                };
                let Ok(q) = build_question(
                    &scene,
                    QuestionType::Counting,
                    vec![class],
                    None,
                    None,
                    seeds.question,
                ) else {
                    continue;
                };
                let relevant_hidden = hidden.iter().filter(|o| q.is_relevant(o)).count();
                if relevant_hidden != bucket || !usable(&scene, &q, &seeds, t_max) {
                    continue;
                }
                built = Some(EpisodeSpec {
                    episode_id: id,
                    seeds,
                    scenario: meta,
                    scene,
                    question: q,
                    t_max,
                    render_images: false,
                });
                break;
            }
            out.push((bucket, built.ok_or(SuiteError::Exhausted(id))?));
        }
    }
    Ok(out)
}
