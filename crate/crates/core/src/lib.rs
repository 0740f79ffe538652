//! Deterministic simulator and evaluation harness for active visual reasoning.
//!
//! The crate is organised bottom-up:
//!
//! * [`world`] holds the abstract tabletop: scene generation, the occlusion
//!   predicate and action kinematics.
//! * [`questions`] instantiates question templates and evaluates them against
//!   full simulator ground truth.
//! * [`belief`] enumerates hypotheses over hidden content and scores actions by
//!   exact expected information gain.
//! * [`episode`] runs the closed perception/reasoning/action loop and records
//!   higher-order MDP step logs.
//! * [`metrics`] turns episode logs into sufficiency, gain-rate and final
//!   answer accuracy reports.
//! * [`agents`] provides baseline policies and the external agent adapter.
//! * [`suite`] derives reproducible benchmark suites from a master seed.

pub mod agents;
pub mod belief;
pub mod canonical;
pub mod episode;
pub mod metrics;
pub mod questions;
pub mod seed;
pub mod suite;
pub mod world;

pub use belief::{BeliefState, HiddenSlot, SlotId, SlotOrigin, SlotState};
pub use episode::{EpisodeRecord, OptionSet, StepRecord};
pub use metrics::MetricsReport;
pub use questions::{Answer, Question, QuestionType};
pub use world::{Action, CameraState, ObjectSpec, Observation, SceneSpec};
