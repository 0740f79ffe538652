//! Procedural scene generation by rejection sampling.
//!
//! Scenario types map to a fixed parameter table (see [`scenario_params`]).
//! Every hidden object is small and the hidden objects of a scene share one
//! "theme" attribute value (a shape, a color or a material), so question
//! templates can target them as a class.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::actions::{apply_action, valid_actions};
use super::search::min_steps_to_see;
use super::types::*;
use super::visibility::hidden_ids;
use crate::seed;

/// Attempts before generation gives up.
pub const RETRY_BUDGET: u32 = 4000;

/// Position draws per object before the whole scene is redrawn.
const PLACEMENT_TRIES: usize = 30;

/// Hidden-object counts for scenario types 0..9 of the single-mechanism categories.
pub const HIDDEN_COUNTS: [usize; 10] = [1, 1, 2, 2, 2, 3, 3, 3, 4, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrangement {
    /// Hidden object directly on the occluder's sight line.
    Aligned,
    /// Hidden object offset sideways, still inside the low-elevation shadow.
    Staggered,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioParams {
    pub occluded: usize,
    pub covered: usize,
    pub arrangement: Arrangement,
    /// Coverers placed close together.
    pub clustered: bool,
    /// Required min actions to see every object, when calibrated.
    pub depth: Option<(u32, u32)>,
}

/// Composite table: (occluded, covered, arrangement, depth band).
const COMPOSITE: [(usize, usize, Arrangement, Option<(u32, u32)>); 10] = [
    (1, 1, Arrangement::Aligned, None),
    (1, 1, Arrangement::Staggered, None),
    (1, 2, Arrangement::Aligned, None),
    (2, 1, Arrangement::Staggered, None),
    (2, 2, Arrangement::Aligned, None),
    (1, 2, Arrangement::Staggered, None),
    (2, 2, Arrangement::Staggered, None),
    (1, 3, Arrangement::Aligned, Some((4, 6))),
    (2, 3, Arrangement::Staggered, Some((4, 6))),
    (2, 4, Arrangement::Aligned, Some((4, 6))),
];

pub fn scenario_params(category: ScenarioCategory, scenario_type: u8) -> ScenarioParams {
    let t = usize::from(scenario_type);
    let arrangement = if t % 2 == 0 {
        Arrangement::Aligned
    } else {
        Arrangement::Staggered
    };
    match category {
        ScenarioCategory::Occlusion => ScenarioParams {
            occluded: HIDDEN_COUNTS[t],
            covered: 0,
            arrangement,
            clustered: false,
            depth: None,
        },
        ScenarioCategory::Stack => ScenarioParams {
            occluded: 0,
            covered: HIDDEN_COUNTS[t],
            arrangement,
            clustered: t % 2 == 1,
            depth: None,
        },
        ScenarioCategory::Composite => {
            let (occluded, covered, arrangement, depth) = COMPOSITE[t];
            ScenarioParams {
                occluded,
                covered,
                arrangement,
                clustered: false,
                depth,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerationError {
    #[error("scenario type {0} is outside 0..=9")]
    BadType(u8),
    #[error("no valid {category} scene of type {scenario_type} for seed {seed} after {attempts} attempts")]
    Exhausted {
        category: ScenarioCategory,
        scenario_type: u8,
        seed: u64,
        attempts: u32,
    },
}

#[derive(Clone, Copy)]
enum Theme {
    Shape(Shape),
    Color(Color),
    Material(Material),
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn random_attrs(rng: &mut ChaCha8Rng) -> (Shape, Color, Material) {
    (
        *Shape::ALL.choose(rng).unwrap(),
        *Color::ALL.choose(rng).unwrap(),
        *Material::ALL.choose(rng).unwrap(),
    )
}

fn themed_attrs(rng: &mut ChaCha8Rng, theme: Theme) -> (Shape, Color, Material) {
    let (mut s, mut c, mut m) = random_attrs(rng);
    match theme {
        Theme::Shape(v) => s = v,
        Theme::Color(v) => c = v,
        Theme::Material(v) => m = v,
    }
    (s, c, m)
}

fn spec(attrs: (Shape, Color, Material), size: Size, p: Point) -> ObjectSpec {
    ObjectSpec {
        id: 0,
        shape: attrs.0,
        color: attrs.1,
        size,
        material: attrs.2,
        position: Point::new(round2(p.x), round2(p.y)),
    }
}

fn random_point(rng: &mut ChaCha8Rng, r: f64) -> Point {
    Point::new(
        rng.gen_range(r..=TABLE_SIZE - r),
        rng.gen_range(r..=TABLE_SIZE - r),
    )
}

/// One unvalidated draw. Returns the objects plus the (coverer, covered)
/// index pairs into that list.
fn draw(
    rng: &mut ChaCha8Rng,
    params: &ScenarioParams,
    camera: &CameraState,
) -> (Vec<ObjectSpec>, Vec<(usize, usize)>) {
    let theme = match rng.gen_range(0..3) {
        0 => Theme::Shape(*Shape::ALL.choose(rng).unwrap()),
        1 => Theme::Color(*Color::ALL.choose(rng).unwrap()),
        _ => Theme::Material(*Material::ALL.choose(rng).unwrap()),
    };
    let cam = camera.position();
    let mut objects = Vec::new();
    let mut covers = Vec::new();
    // footprints of uncovered objects placed so far
    let mut free: Vec<(Point, f64)> = Vec::new();
    let fits = |free: &[(Point, f64)], p: Point, r: f64| {
        (r..=TABLE_SIZE - r).contains(&p.x)
            && (r..=TABLE_SIZE - r).contains(&p.y)
            && free.iter().all(|&(q, rq)| p.dist(q) >= r + rq + 0.01)
    };

    for _ in 0..params.occluded {
        let (mut o, mut h) = (Point::new(0.0, 0.0), Point::new(0.0, 0.0));
        for _ in 0..PLACEMENT_TRIES {
            o = random_point(rng, 9.0);
            let (dx, dy) = (o.x - cam.x, o.y - cam.y);
            let n = dx.hypot(dy);
            let (ux, uy) = (dx / n, dy / n);
            let behind = rng.gen_range(12.0..20.0);
            let offset = match params.arrangement {
                Arrangement::Aligned => 0.0,
                Arrangement::Staggered => {
                    let mag = rng.gen_range(5.0..6.5);
                    if rng.gen_bool(0.5) {
                        mag
                    } else {
                        -mag
                    }
                }
            };
            h = Point::new(
                o.x + ux * behind - uy * offset,
                o.y + uy * behind + ux * offset,
            );
            if fits(&free, o, Size::Large.footprint_radius())
                && fits(&free, h, Size::Small.footprint_radius())
            {
                break;
            }
        }
        free.push((o, Size::Large.footprint_radius()));
        free.push((h, Size::Small.footprint_radius()));
        objects.push(spec(random_attrs(rng), Size::Large, o));
        objects.push(spec(themed_attrs(rng, theme), Size::Small, h));
    }

    let mut anchor: Option<Point> = None;
    for _ in 0..params.covered {
        let mut p = Point::new(0.0, 0.0);
        for _ in 0..PLACEMENT_TRIES {
            p = match (params.clustered, anchor) {
                (true, Some(a)) => {
                    let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let d = rng.gen_range(15.0..22.0);
                    Point::new(a.x + d * ang.cos(), a.y + d * ang.sin())
                }
                _ => random_point(rng, 7.0),
            };
            if fits(&free, p, Size::Large.footprint_radius()) {
                break;
            }
        }
        anchor.get_or_insert(p);
        free.push((p, Size::Large.footprint_radius()));
        let coverer = objects.len();
        objects.push(spec(random_attrs(rng), Size::Large, p));
        objects.push(spec(themed_attrs(rng, theme), Size::Small, p));
        covers.push((coverer, coverer + 1));
    }

    let fillers = rng.gen_range(2..=3);
    for _ in 0..fillers {
        let size = *Size::ALL.choose(rng).unwrap();
        let r = size.footprint_radius();
        let mut p = random_point(rng, r);
        for _ in 1..PLACEMENT_TRIES {
            if fits(&free, p, r) {
                break;
            }
            p = random_point(rng, r);
        }
        free.push((p, r));
        objects.push(spec(random_attrs(rng), size, p));
    }
    (objects, covers)
}

/// Builds a scene for `(category, scenario_type, seed)`.
///
/// At least one object is hidden from the initial camera; occlusion scenes
/// hide only by line of sight, stack scenes only by covering. Calibrated
/// composite types additionally need between 4 and 6 actions before every
/// object has been seen.
pub fn generate_scene(
    category: ScenarioCategory,
    scenario_type: u8,
    seed: u64,
) -> Result<SceneSpec, GenerationError> {
    if scenario_type > 9 {
        return Err(GenerationError::BadType(scenario_type));
    }
    let params = scenario_params(category, scenario_type);
    let cat_idx = category as u64;
    for attempt in 0..RETRY_BUDGET {
        let mut rng = seed::rng(
            seed,
            &[cat_idx, u64::from(scenario_type), u64::from(attempt)],
        );
        let camera = CameraState::new(45 * rng.gen_range(0..8u16), Elevation::Low);
        let (objects, covers) = draw(&mut rng, &params, &camera);

        // Ids are assigned after a shuffle so they carry no hint of what is hidden.
        let mut order: Vec<usize> = (0..objects.len()).collect();
        order.shuffle(&mut rng);
        let mut id_of = vec![0; objects.len()];
        for (new_id, &old) in order.iter().enumerate() {
            id_of[old] = new_id as ObjectId + 1;
        }
        let mut placed: Vec<ObjectSpec> = objects
            .iter()
            .enumerate()
            .map(|(i, o)| ObjectSpec {
                id: id_of[i],
                ..o.clone()
            })
            .collect();
        placed.sort_by_key(|o| o.id);
        let cover_relations: BTreeSet<(ObjectId, ObjectId)> =
            covers.iter().map(|&(a, b)| (id_of[a], id_of[b])).collect();

        let scene = SceneSpec {
            version: SCENE_VERSION.into(),
            objects: placed,
            cover_relations,
            held: vec![],
            camera,
            scenario_category: category,
            scenario_type,
            seed,
        };
        if accept(&scene, &params, &objects, &id_of) {
            return Ok(scene);
        }
    }
    Err(GenerationError::Exhausted {
        category,
        scenario_type,
        seed,
        attempts: RETRY_BUDGET,
    })
}

fn accept(
    scene: &SceneSpec,
    params: &ScenarioParams,
    drawn: &[ObjectSpec],
    id_of: &[ObjectId],
) -> bool {
    if scene.validate().is_err() {
        return false;
    }
    // Hidden objects are exactly the small ones drawn as occluded or covered.
    let intended: BTreeSet<ObjectId> = (0..params.occluded)
        .map(|k| 2 * k + 1)
        .chain((0..params.covered).map(|k| 2 * params.occluded + 2 * k + 1))
        .map(|i| id_of[i])
        .collect();
    debug_assert!(intended.iter().all(|id| {
        let i = id_of.iter().position(|x| x == id).unwrap();
        drawn[i].size == Size::Small
    }));
    let hidden: BTreeSet<ObjectId> = hidden_ids(scene).into_iter().collect();
    if hidden != intended || hidden.is_empty() {
        return false;
    }
    // Each hidden object can be exposed by one action from the start.
    let mut revealable = BTreeSet::new();
    for a in valid_actions(scene) {
        if let Ok((_, out)) = apply_action(scene, &a) {
            revealable.extend(out.revealed);
        }
    }
    if !hidden.is_subset(&revealable) {
        return false;
    }
    match params.depth {
        Some((lo, hi)) => matches!(
            min_steps_to_see(scene, &BTreeSet::new(), &scene.objects.iter().map(|o| o.id).collect(), hi),
            Some(d) if d >= lo && d <= hi
        ),
        None => true,
    }
}
