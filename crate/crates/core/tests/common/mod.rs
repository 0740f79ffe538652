#![allow(dead_code)]

use std::collections::BTreeSet;

use avr_core::episode::{run_episode, EpisodeSeeds, EpisodeSpec, ScenarioMeta};
use avr_core::questions::{build_question, AttributeFilter, QuestionType};
use avr_core::suite::{build_suite, SuiteConfig};
use avr_core::world::{
    CameraState, Color, Elevation, Material, ObjectSpec, Point, ScenarioCategory, SceneSpec, Shape,
    Size, SCENE_VERSION,
};
use avr_core::EpisodeRecord;

pub fn obj(id: u32, shape: Shape, color: Color, size: Size, x: f64, y: f64) -> ObjectSpec {
    ObjectSpec {
        id,
        shape,
        color,
        size,
        material: Material::Rubber,
        position: Point::new(x, y),
    }
}

/// A red large cube covers a red small sphere; a blue cylinder and a gray
/// cube stand in plain view.
pub fn cover_scene() -> SceneSpec {
    SceneSpec {
        version: SCENE_VERSION.into(),
        objects: vec![
            obj(1, Shape::Cube, Color::Red, Size::Large, 30.0, 40.0),
            obj(2, Shape::Sphere, Color::Red, Size::Small, 30.0, 40.0),
            obj(3, Shape::Cylinder, Color::Blue, Size::Small, 70.0, 40.0),
            obj(4, Shape::Cube, Color::Gray, Size::Large, 50.0, 75.0),
        ],
        cover_relations: BTreeSet::from([(1, 2)]),
        held: vec![],
        camera: CameraState::new(270, Elevation::Low),
        scenario_category: ScenarioCategory::Stack,
        scenario_type: 0,
        seed: 0,
    }
}

pub fn red() -> AttributeFilter {
    AttributeFilter {
        color: Some(Color::Red),
        ..Default::default()
    }
}

pub fn blue() -> AttributeFilter {
    AttributeFilter {
        color: Some(Color::Blue),
        ..Default::default()
    }
}

/// Counting question over the cover scene.
pub fn counting_spec(class: AttributeFilter, id: u64) -> EpisodeSpec {
    let scene = cover_scene();
    let question =
        build_question(&scene, QuestionType::Counting, vec![class], None, None, 1).unwrap();
    EpisodeSpec {
        episode_id: id,
        seeds: EpisodeSeeds {
            scene: 0,
            question: 1,
            options: 2,
            agent: 3,
        },
        scenario: ScenarioMeta {
            category: ScenarioCategory::Stack,
            scenario_type: 0,
        },
        scene,
        question,
        t_max: 8,
        render_images: false,
    }
}

pub fn small_suite(seed: u64, count: usize) -> Vec<EpisodeSpec> {
    build_suite(&SuiteConfig {
        count,
        ..SuiteConfig::standard(seed)
    })
    .unwrap()
}

pub fn run_named(spec: &EpisodeSpec, agent: &str) -> EpisodeRecord {
    let mut a = avr_core::agents::by_name(agent).unwrap();
    run_episode(spec, a.as_mut()).unwrap()
}
