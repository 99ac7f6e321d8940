//! didact — a budgeted teacher-student intervention engine for
//! chain-of-thought agents.
//!
//! A teacher agent decides *when* to explain (intervention policies over a
//! communication budget), *for whom* (a few-shot mental model estimating the
//! student's confidence with and without help), and *how* (personalized
//! explanation prompts). Protocols run single-round budget sweeps and
//! multi-round teaching loops against either fully simulated agents
//! (deterministic, exactly verifiable) or real completion endpoints.

pub mod agents;
pub mod dataset;
pub mod intervention;
pub mod mental_model;
pub mod metrics;
pub mod prompts;
pub mod protocol;
pub mod reference;
pub mod rng;

#[cfg(feature = "client")]
pub mod client;

pub use agents::{AgentError, AnswerDistribution, Explanation, Prediction, Student, Teacher, TeacherMode};
pub use dataset::{DatasetError, DatasetSplit, Problem, TaskKind};
pub use intervention::{InterventionPlan, PolicyKind, ScoreContext};
pub use mental_model::{MentalModel, Phase, SimDemos, UtilityEstimate};
pub use prompts::{Demonstration, ExplanationSource, PromptKind};
pub use protocol::{ItemRecord, Trace};
