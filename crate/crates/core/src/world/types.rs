use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub type ObjectId = u32;

/// Side length of the square table, in table units.
pub const TABLE_SIZE: f64 = 100.0;
pub const TABLE_CENTER: Point = Point { x: 50.0, y: 50.0 };
/// Distance of the camera from the table center.
pub const ORBIT_RADIUS: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Cube,
    Sphere,
    Cylinder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Gray,
    Red,
    Blue,
    Green,
    Brown,
    Purple,
    Cyan,
    Yellow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Size {
    Small,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Material {
    Rubber,
    Metal,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Cube, Shape::Sphere, Shape::Cylinder];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Cube => "cube",
            Shape::Sphere => "sphere",
            Shape::Cylinder => "cylinder",
        }
    }

    pub fn plural(self) -> &'static str {
        match self {
            Shape::Cube => "cubes",
            Shape::Sphere => "spheres",
            Shape::Cylinder => "cylinders",
        }
    }
}

impl Color {
    pub const ALL: [Color; 8] = [
        Color::Gray,
        Color::Red,
        Color::Blue,
        Color::Green,
        Color::Brown,
        Color::Purple,
        Color::Cyan,
        Color::Yellow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Color::Gray => "gray",
            Color::Red => "red",
            Color::Blue => "blue",
            Color::Green => "green",
            Color::Brown => "brown",
            Color::Purple => "purple",
            Color::Cyan => "cyan",
            Color::Yellow => "yellow",
        }
    }

    pub fn rgb(self) -> [u8; 3] {
        match self {
            Color::Gray => [87, 87, 87],
            Color::Red => [173, 35, 35],
            Color::Blue => [42, 75, 215],
            Color::Green => [29, 105, 20],
            Color::Brown => [129, 74, 25],
            Color::Purple => [129, 38, 192],
            Color::Cyan => [41, 208, 208],
            Color::Yellow => [255, 238, 51],
        }
    }
}

impl Size {
    pub const ALL: [Size; 2] = [Size::Small, Size::Large];

    pub fn name(self) -> &'static str {
        match self {
            Size::Small => "small",
            Size::Large => "large",
        }
    }

    pub fn footprint_radius(self) -> f64 {
        match self {
            Size::Small => 4.0,
            Size::Large => 7.0,
        }
    }

    pub fn height(self) -> f64 {
        match self {
            Size::Small => 6.0,
            Size::Large => 10.0,
        }
    }
}

impl Material {
    pub const ALL: [Material; 2] = [Material::Rubber, Material::Metal];

    pub fn name(self) -> &'static str {
        match self {
            Material::Rubber => "rubber",
            Material::Metal => "metal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: ObjectId,
    pub shape: Shape,
    pub color: Color,
    pub size: Size,
    pub material: Material,
    pub position: Point,
}

impl ObjectSpec {
    pub fn footprint_radius(&self) -> f64 {
        self.size.footprint_radius()
    }

    pub fn height(&self) -> f64 {
        self.size.height()
    }

    /// "large red metal cube"
    pub fn describe(&self) -> String {
        format!(
            "{} {} {} {}",
            self.size.name(),
            self.color.name(),
            self.material.name(),
            self.shape.name()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Elevation {
    Low,
    High,
}

impl Elevation {
    /// Multiplier on an occluder's footprint radius when testing lateral clearance.
    pub fn clearance_factor(self) -> f64 {
        match self {
            Elevation::Low => 1.0,
            Elevation::High => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Elevation::Low => "low",
            Elevation::High => "high",
        }
    }

    pub fn toggled(self) -> Self {
        match self {
            Elevation::Low => Elevation::High,
            Elevation::High => Elevation::Low,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CameraState {
    /// Degrees, multiple of 45 in `[0, 315]`.
    pub azimuth: u16,
    pub elevation: Elevation,
}

impl CameraState {
    pub fn new(azimuth: u16, elevation: Elevation) -> Self {
        CameraState {
            azimuth: azimuth % 360,
            elevation,
        }
    }

    pub fn position(&self) -> Point {
        let theta = f64::from(self.azimuth).to_radians();
        Point::new(
            TABLE_CENTER.x + ORBIT_RADIUS * theta.cos(),
            TABLE_CENTER.y + ORBIT_RADIUS * theta.sin(),
        )
    }

    pub fn rotated(&self, delta: i32) -> Self {
        let az = (i32::from(self.azimuth) + delta).rem_euclid(360) as u16;
        CameraState::new(az, self.elevation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioCategory {
    Occlusion,
    Stack,
    Composite,
}

impl ScenarioCategory {
    pub const ALL: [ScenarioCategory; 3] = [
        ScenarioCategory::Occlusion,
        ScenarioCategory::Stack,
        ScenarioCategory::Composite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioCategory::Occlusion => "occlusion",
            ScenarioCategory::Stack => "stack",
            ScenarioCategory::Composite => "composite",
        }
    }
}

impl fmt::Display for ScenarioCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScenarioCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "occlusion" => Ok(ScenarioCategory::Occlusion),
            "stack" => Ok(ScenarioCategory::Stack),
            "composite" => Ok(ScenarioCategory::Composite),
            other => Err(format!("unknown scenario category `{other}`")),
        }
    }
}

pub const SCENE_VERSION: &str = "scene/1";

/// Full ground-truth state of the tabletop.
///
/// `objects` holds every object still on the table (covered ones included),
/// sorted by id. Picked objects move to `held` in pick order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub version: String,
    pub objects: Vec<ObjectSpec>,
    /// Ordered `(coverer, covered)` pairs.
    pub cover_relations: BTreeSet<(ObjectId, ObjectId)>,
    pub held: Vec<ObjectSpec>,
    pub camera: CameraState,
    pub scenario_category: ScenarioCategory,
    pub scenario_type: u8,
    pub seed: u64,
}

impl SceneSpec {
    pub fn object(&self, id: ObjectId) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Every object the scene knows about: on the table, covered or held.
    pub fn all_objects(&self) -> impl Iterator<Item = &ObjectSpec> {
        self.objects.iter().chain(self.held.iter())
    }

    pub fn total_objects(&self) -> usize {
        self.objects.len() + self.held.len()
    }

    pub fn is_covered(&self, id: ObjectId) -> bool {
        self.cover_relations.iter().any(|&(_, c)| c == id)
    }

    pub fn coverer_of(&self, id: ObjectId) -> Option<ObjectId> {
        self.cover_relations
            .iter()
            .find(|&&(_, c)| c == id)
            .map(|&(a, _)| a)
    }

    pub fn is_held(&self, id: ObjectId) -> bool {
        self.held.iter().any(|o| o.id == id)
    }

    /// Checks every structural invariant of a scene.
    pub fn validate(&self) -> Result<(), SceneError> {
        if self.version != SCENE_VERSION {
            return Err(SceneError::Version(self.version.clone()));
        }
        if !self.camera.azimuth.is_multiple_of(45) || self.camera.azimuth >= 360 {
            return Err(SceneError::Camera(self.camera.azimuth));
        }
        let mut ids = BTreeSet::new();
        for o in self.all_objects() {
            if !ids.insert(o.id) {
                return Err(SceneError::DuplicateId(o.id));
            }
        }
        for w in self.objects.windows(2) {
            if w[0].id >= w[1].id {
                return Err(SceneError::Unsorted);
            }
        }
        for o in &self.objects {
            let r = o.footprint_radius();
            let ok = |v: f64| v >= r - 1e-9 && v <= TABLE_SIZE - r + 1e-9;
            if !ok(o.position.x) || !ok(o.position.y) {
                return Err(SceneError::OutOfBounds(o.id));
            }
        }
        let mut covered_seen = BTreeSet::new();
        for &(a, b) in &self.cover_relations {
            let (Some(oa), Some(ob)) = (self.object(a), self.object(b)) else {
                return Err(SceneError::DanglingCover(a, b));
            };
            if a == b || !covered_seen.insert(b) {
                return Err(SceneError::CoverForest(a, b));
            }
            if self.is_covered(a) {
                return Err(SceneError::CoverForest(a, b));
            }
            if oa.size != Size::Large || ob.size != Size::Small {
                return Err(SceneError::CoverSize(a, b));
            }
            if oa.position.dist(ob.position) > 1e-9 {
                return Err(SceneError::CoverPosition(a, b));
            }
        }
        let free: Vec<&ObjectSpec> = self
            .objects
            .iter()
            .filter(|o| !self.is_covered(o.id))
            .collect();
        for (i, a) in free.iter().enumerate() {
            for b in &free[i + 1..] {
                if a.position.dist(b.position) < a.footprint_radius() + b.footprint_radius() - 1e-9
                {
                    return Err(SceneError::Overlap(a.id, b.id));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("unsupported scene version `{0}`")]
    Version(String),
    #[error("camera azimuth {0} is not a multiple of 45 in [0, 315]")]
    Camera(u16),
    #[error("duplicate object id {0}")]
    DuplicateId(ObjectId),
    #[error("objects are not sorted by id")]
    Unsorted,
    #[error("object {0} lies outside the table")]
    OutOfBounds(ObjectId),
    #[error("cover relation ({0}, {1}) names an object that is not on the table")]
    DanglingCover(ObjectId, ObjectId),
    #[error("cover relation ({0}, {1}) breaks the depth-one forest rule")]
    CoverForest(ObjectId, ObjectId),
    #[error("cover relation ({0}, {1}) needs a large coverer over a small object")]
    CoverSize(ObjectId, ObjectId),
    #[error("cover relation ({0}, {1}) has mismatched positions")]
    CoverPosition(ObjectId, ObjectId),
    #[error("objects {0} and {1} overlap")]
    Overlap(ObjectId, ObjectId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lateral {
    Left,
    Center,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Range {
    Near,
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Location {
    pub lateral: Lateral,
    pub range: Range,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lat = match self.lateral {
            Lateral::Left => "left",
            Lateral::Center => "center",
            Lateral::Right => "right",
        };
        let rng = match self.range {
            Range::Near => "near",
            Range::Far => "far",
        };
        write!(f, "{lat}, {rng}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibleObject {
    pub object: ObjectSpec,
    pub location: Location,
}

/// What the camera sees: value snapshots of visible objects, sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub step_index: u32,
    pub camera: CameraState,
    pub visible: Vec<VisibleObject>,
}

impl Observation {
    pub fn ids(&self) -> BTreeSet<ObjectId> {
        self.visible.iter().map(|v| v.object.id).collect()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.visible.iter().any(|v| v.object.id == id)
    }

    pub fn objects(&self) -> impl Iterator<Item = &ObjectSpec> {
        self.visible.iter().map(|v| &v.object)
    }
}
