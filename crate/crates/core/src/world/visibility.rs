//! Line-of-sight occlusion and the camera-relative location tags.

use super::types::*;

/// Lateral offset (table units) beyond which an object is tagged left/right.
pub const LATERAL_THRESHOLD: f64 = 10.0;

/// Distance from `p` to the segment `a`-`b`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * dx, a.y + t * dy))
}

/// Does `a` block the camera's line of sight to `b`?
pub fn occludes(camera: &CameraState, a: &ObjectSpec, b: &ObjectSpec) -> bool {
    let cam = camera.position();
    a.height() >= b.height()
        && cam.dist(a.position) < cam.dist(b.position)
        && segment_distance(a.position, cam, b.position)
            < a.footprint_radius() * camera.elevation.clearance_factor()
}

/// On-table objects that can block sight lines: everything not covered.
fn exposed(scene: &SceneSpec) -> impl Iterator<Item = &ObjectSpec> {
    scene.objects.iter().filter(|o| !scene.is_covered(o.id))
}

/// Objects standing between the camera and `target`, nearest first.
pub fn occluders_of<'a>(scene: &'a SceneSpec, target: &ObjectSpec) -> Vec<&'a ObjectSpec> {
    let cam = scene.camera.position();
    let mut out: Vec<&ObjectSpec> = exposed(scene)
        .filter(|a| a.id != target.id && occludes(&scene.camera, a, target))
        .collect();
    out.sort_by(|a, b| {
        cam.dist(a.position)
            .total_cmp(&cam.dist(b.position))
            .then(a.id.cmp(&b.id))
    });
    out
}

pub fn is_visible(scene: &SceneSpec, target: &ObjectSpec) -> bool {
    !scene.is_covered(target.id)
        && scene.object(target.id).is_some()
        && !exposed(scene).any(|a| a.id != target.id && occludes(&scene.camera, a, target))
}

/// Partial observation of the scene from its current camera.
pub fn observe(scene: &SceneSpec, step_index: u32) -> Observation {
    let cam = scene.camera.position();
    let visible: Vec<&ObjectSpec> = scene
        .objects
        .iter()
        .filter(|o| is_visible(scene, o))
        .collect();

    let mut dists: Vec<f64> = visible.iter().map(|o| cam.dist(o.position)).collect();
    dists.sort_by(f64::total_cmp);
    let median = match dists.len() {
        0 => 0.0,
        n if n % 2 == 1 => dists[n / 2],
        n => 0.5 * (dists[n / 2 - 1] + dists[n / 2]),
    };

    // Camera looks at the table center; "right" is the clockwise normal.
    let fx = TABLE_CENTER.x - cam.x;
    let fy = TABLE_CENTER.y - cam.y;
    let norm = fx.hypot(fy);
    let (rx, ry) = (fy / norm, -fx / norm);

    let visible = visible
        .into_iter()
        .map(|o| {
            let lateral = (o.position.x - cam.x) * rx + (o.position.y - cam.y) * ry;
            let lateral = if lateral < -LATERAL_THRESHOLD {
                Lateral::Left
            } else if lateral > LATERAL_THRESHOLD {
                Lateral::Right
            } else {
                Lateral::Center
            };
            let range = if cam.dist(o.position) <= median {
                Range::Near
            } else {
                Range::Far
            };
            VisibleObject {
                object: o.clone(),
                location: Location { lateral, range },
            }
        })
        .collect();

    Observation {
        step_index,
        camera: scene.camera,
        visible,
    }
}

/// The observation at step 0.
pub fn visible_set(scene: &SceneSpec) -> Observation {
    observe(scene, 0)
}

/// On-table objects the camera cannot currently see, sorted by id.
pub fn hidden_ids(scene: &SceneSpec) -> Vec<ObjectId> {
    scene
        .objects
        .iter()
        .filter(|o| !is_visible(scene, o))
        .map(|o| o.id)
        .collect()
}
