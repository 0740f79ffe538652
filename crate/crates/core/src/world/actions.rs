//! Action vocabulary and kinematics.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::types::*;
use super::visibility::{is_visible, observe};

/// Nominal MoveObject translation.
pub const MOVE_DISTANCE: f64 = 15.0;
/// Extra slide applied while the landing spot collides.
pub const SLIDE_STEP: f64 = 5.0;
/// MoveViewer orbit step, degrees.
pub const VIEWER_STEP: i32 = 45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectDirection {
    Left,
    Right,
    Forward,
    Back,
}

impl ObjectDirection {
    pub const ALL: [ObjectDirection; 4] = [
        ObjectDirection::Left,
        ObjectDirection::Right,
        ObjectDirection::Forward,
        ObjectDirection::Back,
    ];

    /// World-axis unit vector: left=-x, right=+x, forward=+y, back=-y.
    pub fn unit(self) -> (f64, f64) {
        match self {
            ObjectDirection::Left => (-1.0, 0.0),
            ObjectDirection::Right => (1.0, 0.0),
            ObjectDirection::Forward => (0.0, 1.0),
            ObjectDirection::Back => (0.0, -1.0),
        }
    }

    fn name(self) -> &'static str {
        match self {
            ObjectDirection::Left => "left",
            ObjectDirection::Right => "right",
            ObjectDirection::Forward => "forward",
            ObjectDirection::Back => "back",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewerDirection {
    Left,
    Right,
}

impl ViewerDirection {
    /// Orbit delta in degrees; `right` increases azimuth.
    pub fn delta(self) -> i32 {
        match self {
            ViewerDirection::Left => -VIEWER_STEP,
            ViewerDirection::Right => VIEWER_STEP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiltDirection {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Action {
    Pick {
        target_id: ObjectId,
    },
    MoveObject {
        target_id: ObjectId,
        direction: ObjectDirection,
    },
    MoveViewer {
        direction: ViewerDirection,
    },
    RotateViewer {
        direction: TiltDirection,
    },
}

impl Action {
    pub fn target(&self) -> Option<ObjectId> {
        match *self {
            Action::Pick { target_id } | Action::MoveObject { target_id, .. } => Some(target_id),
            _ => None,
        }
    }

    /// Human-readable label, naming targets by their attributes.
    pub fn label(&self, scene: &SceneSpec) -> String {
        let name = |id: ObjectId| {
            scene
                .object(id)
                .map(|o| format!("{} #{id}", o.describe()))
                .unwrap_or_else(|| format!("object #{id}"))
        };
        match *self {
            Action::Pick { target_id } => format!("Pick({})", name(target_id)),
            Action::MoveObject {
                target_id,
                direction,
            } => format!("Move Object({}, {})", name(target_id), direction.name()),
            Action::MoveViewer { direction } => match direction {
                ViewerDirection::Left => "Move Viewer(left)".to_string(),
                ViewerDirection::Right => "Move Viewer(right)".to_string(),
            },
            Action::RotateViewer { direction } => match direction {
                TiltDirection::Up => "Rotate Viewer(up)".to_string(),
                TiltDirection::Down => "Rotate Viewer(down)".to_string(),
            },
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Pick { target_id } => write!(f, "Pick(#{target_id})"),
            Action::MoveObject {
                target_id,
                direction,
            } => write!(f, "MoveObject(#{target_id}, {})", direction.name()),
            Action::MoveViewer { direction } => write!(f, "MoveViewer({direction:?})"),
            Action::RotateViewer { direction } => write!(f, "RotateViewer({direction:?})"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub displaced: Vec<ObjectId>,
    pub revealed: Vec<ObjectId>,
    pub blocked: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActionError {
    #[error("object {0} does not exist in the scene")]
    UnknownTarget(ObjectId),
    #[error("object {0} is not visible from the current viewpoint")]
    NotVisible(ObjectId),
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Applies `action` to a copy of `scene`.
pub fn apply_action(
    scene: &SceneSpec,
    action: &Action,
) -> Result<(SceneSpec, ActionOutcome), ActionError> {
    if let Some(id) = action.target() {
        let Some(target) = scene.object(id) else {
            return Err(if scene.is_held(id) {
                ActionError::NotVisible(id)
            } else {
                ActionError::UnknownTarget(id)
            });
        };
        if !is_visible(scene, target) {
            return Err(ActionError::NotVisible(id));
        }
    }

    let before = observe(scene, 0).ids();
    let mut next = scene.clone();
    let mut outcome = ActionOutcome::default();

    match *action {
        Action::Pick { target_id } => {
            let idx = next.objects.iter().position(|o| o.id == target_id).unwrap();
            let obj = next.objects.remove(idx);
            next.held.push(obj);
            next.cover_relations.retain(|&(a, _)| a != target_id);
            outcome.displaced.push(target_id);
        }
        Action::MoveObject {
            target_id,
            direction,
        } => match slide_target(scene, target_id, direction) {
            Some(p) => {
                let obj = next.objects.iter_mut().find(|o| o.id == target_id).unwrap();
                obj.position = p;
                next.cover_relations.retain(|&(a, _)| a != target_id);
                outcome.displaced.push(target_id);
            }
            None => {
                outcome.blocked = true;
                return Ok((next, outcome));
            }
        },
        Action::MoveViewer { direction } => {
            next.camera = scene.camera.rotated(direction.delta());
        }
        Action::RotateViewer { .. } => {
            next.camera.elevation = scene.camera.elevation.toggled();
        }
    }

    let after = observe(&next, 0).ids();
    outcome.revealed = after.difference(&before).copied().collect();
    Ok((next, outcome))
}

/// Landing spot for a MoveObject, or `None` when every slot along the
/// direction up to the table edge collides.
fn slide_target(scene: &SceneSpec, target_id: ObjectId, dir: ObjectDirection) -> Option<Point> {
    let target = scene.object(target_id)?;
    let r = target.footprint_radius();
    let (ux, uy) = dir.unit();
    let start = target.position;
    // Objects under another coverer share its position and are skipped.
    let obstacles: Vec<&ObjectSpec> = scene
        .objects
        .iter()
        .filter(|o| o.id != target_id)
        .filter(|o| match scene.coverer_of(o.id) {
            Some(c) => c == target_id,
            None => true,
        })
        .collect();

    let lo = r;
    let hi = TABLE_SIZE - r;
    let mut d = MOVE_DISTANCE;
    loop {
        let rx = start.x + ux * d;
        let ry = start.y + uy * d;
        let cx = round2(rx.clamp(lo, hi));
        let cy = round2(ry.clamp(lo, hi));
        let clamped = (cx - rx).abs() > 1e-9 || (cy - ry).abs() > 1e-9;
        let p = Point::new(cx, cy);
        let free = obstacles
            .iter()
            .all(|o| o.position.dist(p) >= o.footprint_radius() + r - 1e-9);
        if free {
            return if p.dist(start) < 1e-9 { None } else { Some(p) };
        }
        if clamped {
            return None;
        }
        d += SLIDE_STEP;
    }
}

/// Every action whose preconditions hold in `scene`, in a fixed order.
pub fn valid_actions(scene: &SceneSpec) -> Vec<Action> {
    let mut out = Vec::new();
    for o in scene.objects.iter().filter(|o| is_visible(scene, o)) {
        out.push(Action::Pick { target_id: o.id });
        for direction in ObjectDirection::ALL {
            out.push(Action::MoveObject {
                target_id: o.id,
                direction,
            });
        }
    }
    out.extend(camera_actions(scene));
    out
}

/// MoveViewer both ways plus the RotateViewer that matches the current tilt.
pub fn camera_actions(scene: &SceneSpec) -> Vec<Action> {
    let tilt = match scene.camera.elevation {
        Elevation::Low => TiltDirection::Up,
        Elevation::High => TiltDirection::Down,
    };
    vec![
        Action::MoveViewer {
            direction: ViewerDirection::Left,
        },
        Action::MoveViewer {
            direction: ViewerDirection::Right,
        },
        Action::RotateViewer { direction: tilt },
    ]
}

/// Pick plus camera moves. For reaching a goal defined by what has been
/// seen, this space is as strong as the full one: picking an object reveals
/// a superset of what moving it would, and never blocks anything later.
pub fn reduced_actions(scene: &SceneSpec) -> Vec<Action> {
    let mut out: Vec<Action> = scene
        .objects
        .iter()
        .filter(|o| is_visible(scene, o))
        .map(|o| Action::Pick { target_id: o.id })
        .collect();
    out.extend(camera_actions(scene));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::visibility::visible_set;
    use std::collections::BTreeSet;

    fn obj(id: ObjectId, size: Size, x: f64, y: f64) -> ObjectSpec {
        ObjectSpec {
            id,
            shape: Shape::Sphere,
            color: Color::Red,
            size,
            material: Material::Metal,
            position: Point::new(x, y),
        }
    }

    fn scene(objects: Vec<ObjectSpec>, covers: &[(ObjectId, ObjectId)]) -> SceneSpec {
        SceneSpec {
            version: SCENE_VERSION.into(),
            objects,
            cover_relations: covers.iter().copied().collect(),
            held: vec![],
            camera: CameraState::new(270, Elevation::Low),
            scenario_category: ScenarioCategory::Stack,
            scenario_type: 0,
            seed: 0,
        }
    }

    #[test]
    fn pick_coverer_reveals_covered() {
        let s = scene(
            vec![
                obj(1, Size::Large, 30.0, 40.0),
                obj(2, Size::Small, 30.0, 40.0),
            ],
            &[(1, 2)],
        );
        s.validate().unwrap();
        assert!(!visible_set(&s).contains(2));
        let (n, out) = apply_action(&s, &Action::Pick { target_id: 1 }).unwrap();
        n.validate().unwrap();
        assert!(visible_set(&n).contains(2));
        assert_eq!(out.revealed, vec![2]);
        assert_eq!(n.held.len(), 1);
        assert!(n.cover_relations.is_empty());
    }

    #[test]
    fn covered_targets_are_rejected() {
        let s = scene(
            vec![
                obj(1, Size::Large, 30.0, 40.0),
                obj(2, Size::Small, 30.0, 40.0),
            ],
            &[(1, 2)],
        );
        assert_eq!(
            apply_action(&s, &Action::Pick { target_id: 2 }),
            Err(ActionError::NotVisible(2))
        );
        assert_eq!(
            apply_action(&s, &Action::Pick { target_id: 9 }),
            Err(ActionError::UnknownTarget(9))
        );
    }

    #[test]
    fn rotate_twice_is_identity() {
        let s = scene(vec![], &[]);
        let up = Action::RotateViewer {
            direction: TiltDirection::Up,
        };
        let (a, _) = apply_action(&s, &up).unwrap();
        assert_eq!(a.camera.elevation, Elevation::High);
        let (b, _) = apply_action(&a, &up).unwrap();
        assert_eq!(b.camera, s.camera);
    }

    #[test]
    fn eight_orbit_steps_close_the_loop() {
        let mut s = scene(vec![], &[]);
        let start = s.camera;
        let right = Action::MoveViewer {
            direction: ViewerDirection::Right,
        };
        for _ in 0..8 {
            s = apply_action(&s, &right).unwrap().0;
        }
        assert_eq!(s.camera, start);
    }

    #[test]
    fn move_slides_past_collisions() {
        // Mover at x=30; nominal landing x=45 collides with blocker at 50.
        let s = scene(
            vec![
                obj(1, Size::Small, 30.0, 50.0),
                obj(2, Size::Small, 50.0, 50.0),
            ],
            &[],
        );
        let (n, out) = apply_action(
            &s,
            &Action::MoveObject {
                target_id: 1,
                direction: ObjectDirection::Right,
            },
        )
        .unwrap();
        assert!(!out.blocked);
        // 45 and 50 collide (need >= 8 from 50), 55 is 5 away, 60 is clear.
        assert_eq!(n.object(1).unwrap().position, Point::new(60.0, 50.0));
        n.validate().unwrap();
    }

    #[test]
    fn move_into_blocked_corridor_is_a_noop() {
        // Mover near the right edge; the only landing spots are taken by a
        // large object pinned at the edge.
        let s = scene(
            vec![
                obj(1, Size::Small, 70.0, 50.0),
                obj(2, Size::Large, 93.0, 50.0),
            ],
            &[],
        );
        let (n, out) = apply_action(
            &s,
            &Action::MoveObject {
                target_id: 1,
                direction: ObjectDirection::Right,
            },
        )
        .unwrap();
        assert!(out.blocked);
        assert_eq!(n, s);
        // Candidate slots 85, 90, 95 and the clamp at 96 all sit within
        // 4 + 7 of the blocker.
        for x in [85.0, 90.0, 95.0, 96.0] {
            assert!(f64::abs(x - 93.0) < 11.0);
        }
    }

    #[test]
    fn move_clamps_to_table_edge() {
        let s = scene(vec![obj(1, Size::Small, 90.0, 50.0)], &[]);
        let (n, out) = apply_action(
            &s,
            &Action::MoveObject {
                target_id: 1,
                direction: ObjectDirection::Right,
            },
        )
        .unwrap();
        assert!(!out.blocked);
        assert_eq!(n.object(1).unwrap().position.x, 96.0);
        let (m, out) = apply_action(
            &n,
            &Action::MoveObject {
                target_id: 1,
                direction: ObjectDirection::Right,
            },
        )
        .unwrap();
        assert!(out.blocked);
        assert_eq!(m, n);
    }

    #[test]
    fn moving_coverer_uncovers() {
        let s = scene(
            vec![
                obj(1, Size::Large, 30.0, 40.0),
                obj(2, Size::Small, 30.0, 40.0),
            ],
            &[(1, 2)],
        );
        let (n, out) = apply_action(
            &s,
            &Action::MoveObject {
                target_id: 1,
                direction: ObjectDirection::Left,
            },
        )
        .unwrap();
        assert!(!out.blocked);
        assert_eq!(n.object(1).unwrap().position, Point::new(15.0, 40.0));
        assert!(n.cover_relations.is_empty());
        n.validate().unwrap();
        assert_eq!(
            visible_set(&n).ids(),
            BTreeSet::from([1, 2]),
            "covered object is exposed once the coverer moves"
        );
    }
}
