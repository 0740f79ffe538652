//! Abstract 2.5D tabletop world.
//!
//! Objects are discs with a height on a 100x100 table. A camera orbits the
//! table center at radius 80 in 45 degree steps and can be tilted between a
//! low and a high elevation. An object is hidden when it is covered by a
//! larger object or when a nearer, at-least-as-tall object sits within the
//! lateral clearance of its sight line.

mod actions;
mod generate;
mod search;
mod types;
mod visibility;

use serde::{Deserialize, Serialize};

pub use actions::{
    apply_action, camera_actions, reduced_actions, valid_actions, Action, ActionError,
    ActionOutcome, ObjectDirection, TiltDirection, ViewerDirection, MOVE_DISTANCE, SLIDE_STEP,
    VIEWER_STEP,
};
pub use generate::{
    generate_scene, scenario_params, Arrangement, GenerationError, ScenarioParams, HIDDEN_COUNTS,
    RETRY_BUDGET,
};
pub use search::{min_steps_from, min_steps_full_reveal, min_steps_to_see, min_steps_until};
pub use types::*;
pub use visibility::{
    hidden_ids, is_visible, observe, occluders_of, occludes, segment_distance, visible_set,
    LATERAL_THRESHOLD,
};

/// Why a hidden object cannot be seen, without saying what it is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SiteOrigin {
    OcclusionShadow { occluder_id: ObjectId, azimuth: u16 },
    Covered { coverer_id: ObjectId },
}

/// A place where something is hidden from the current camera.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HidingSite {
    pub object_id: ObjectId,
    pub origin: SiteOrigin,
    /// Largest object size the site can conceal.
    pub max_size: Size,
}

/// Hiding sites of the current view, sorted by hidden object id.
///
/// Concealed objects are always strictly smaller than their concealer in
/// generated scenes, so every site advertises `Small` capacity.
pub fn hiding_sites(scene: &SceneSpec) -> Vec<HidingSite> {
    hidden_ids(scene)
        .into_iter()
        .map(|id| {
            let origin = match scene.coverer_of(id) {
                Some(coverer_id) => SiteOrigin::Covered { coverer_id },
                None => {
                    let target = scene.object(id).expect("hidden id is on the table");
                    let occluder_id = occluders_of(scene, target)
                        .first()
                        .map(|o| o.id)
                        .expect("an uncovered hidden object has an occluder");
                    SiteOrigin::OcclusionShadow {
                        occluder_id,
                        azimuth: scene.camera.azimuth,
                    }
                }
            };
            HidingSite {
                object_id: id,
                origin,
                max_size: Size::Small,
            }
        })
        .collect()
}
