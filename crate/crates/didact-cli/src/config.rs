//! Experiment configuration: a structured key-value (TOML) file, validated
//! up front with field-level errors. The canonical re-serialization of the
//! parsed config is the run's snapshot; its digest names the results
//! directory, so replaying a snapshot reproduces the same run id.

use std::fmt;
use std::path::{Path, PathBuf};

use didact::agents::ConfidenceMode;
use didact::dataset::TaskKind;
use didact::intervention::PolicyKind;
use didact::protocol::DemoMode;
use didact::TeacherMode;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config does not parse: {0}")]
    Parse(String),
    #[error("invalid config:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSection,
    #[serde(default)]
    pub split: SplitSection,
    pub student: AgentSection,
    pub teacher: AgentSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub multi_round: MultiRoundSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<EndpointSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// Line-delimited JSON problems. Omit and set `synthetic` instead for
    /// generated boolean problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub task_kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<usize>,
    #[serde(default = "default_synthetic_seed")]
    pub synthetic_seed: u64,
}

fn default_synthetic_seed() -> u64 {
    0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub demo_count: usize,
    pub sim_count: usize,
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection { demo_count: 6, sim_count: 8, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Simulated,
    Endpoint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub backend: BackendKind,
    /// Simulated profile file; required for the simulated backend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
    /// Teacher only: explanation mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<TeacherMode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub policies: Vec<String>,
    pub budgets: Vec<f64>,
    pub seeds: Vec<u64>,
    /// d: observed demonstrations behind the mental model.
    pub sim_demo_count: usize,
    pub use_gold: bool,
    /// Deceiving demonstration file (wrong answers, perturbed
    /// explanations); required when the teacher mode is `deceive`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deceive_path: Option<PathBuf>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            policies: vec!["random".into()],
            budgets: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            seeds: vec![0, 1, 2],
            sim_demo_count: 8,
            use_gold: true,
            deceive_path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiRoundSection {
    pub rounds: usize,
    pub samples_per_round: usize,
    pub demo_mode: String,
    /// Teaching-pool size, taken from the head of the test partition.
    pub pool_size: usize,
}

impl Default for MultiRoundSection {
    fn default() -> Self {
        MultiRoundSection {
            rounds: 5,
            samples_per_round: 2,
            demo_mode: "teacher_explained".into(),
            pool_size: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EndpointSection {
    pub url: String,
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    pub max_tokens: u32,
    /// scores | one_hot | sample_frequency:<k>
    pub confidence: String,
}

impl Default for EndpointSection {
    fn default() -> Self {
        EndpointSection {
            url: String::new(),
            model: String::new(),
            api_key_env: None,
            timeout_secs: 60,
            max_tokens: 256,
            confidence: "scores".into(),
        }
    }
}

impl EndpointSection {
    pub fn confidence_mode(&self) -> Result<ConfidenceMode, String> {
        match self.confidence.as_str() {
            "scores" => Ok(ConfidenceMode::Scores),
            "one_hot" => Ok(ConfidenceMode::OneHot),
            other => match other.strip_prefix("sample_frequency:") {
                Some(k) => k
                    .parse()
                    .map(ConfidenceMode::SampleFrequency)
                    .map_err(|e| format!("bad sample count '{k}': {e}")),
                None => Err(format!("unknown confidence mode '{other}'")),
            },
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        config.validate()?;
        Ok(config)
    }

    pub fn from_str_unresolved(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Paths in a config file are relative to the file itself.
    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |path: &mut PathBuf| {
            if path.is_relative() {
                *path = base.join(&path);
            }
        };
        if let Some(path) = &mut self.dataset.path {
            resolve(path);
        }
        if let Some(path) = &mut self.student.profile {
            resolve(path);
        }
        if let Some(path) = &mut self.teacher.profile {
            resolve(path);
        }
        if let Some(path) = &mut self.experiment.deceive_path {
            resolve(path);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        if self.dataset.path.is_none() && self.dataset.synthetic.is_none() {
            problems.push("dataset: one of `path` or `synthetic` is required".to_string());
        }
        if let Some(path) = &self.dataset.path {
            if !path.exists() {
                problems.push(format!("dataset.path: {} does not exist", path.display()));
            }
        }
        if !(4..=8).contains(&self.split.demo_count) {
            problems.push(format!(
                "split.demo_count: {} outside the supported range 4..=8",
                self.split.demo_count
            ));
        }
        for (label, section) in [("student", &self.student), ("teacher", &self.teacher)] {
            match section.backend {
                BackendKind::Simulated => match &section.profile {
                    None => problems.push(format!("{label}.profile: required for the simulated backend")),
                    Some(path) if !path.exists() => {
                        problems.push(format!("{label}.profile: {} does not exist", path.display()))
                    }
                    _ => {}
                },
                BackendKind::Endpoint => {
                    if self.endpoint.is_none() {
                        problems.push(format!(
                            "{label}.backend: endpoint backend needs an [endpoint] section"
                        ));
                    }
                }
            }
        }
        if let Some(endpoint) = &self.endpoint {
            if let Err(e) = endpoint.confidence_mode() {
                problems.push(format!("endpoint.confidence: {e}"));
            }
        }
        if self.experiment.policies.is_empty() {
            problems.push("experiment.policies: at least one policy".to_string());
        }
        for name in &self.experiment.policies {
            if PolicyKind::parse(name).is_none() {
                problems.push(format!("experiment.policies: unknown policy '{name}'"));
            }
        }
        if self.experiment.seeds.is_empty() {
            problems.push("experiment.seeds: at least one seed".to_string());
        }
        for budget in &self.experiment.budgets {
            if !(0.0..=1.0).contains(budget) {
                problems.push(format!("experiment.budgets: {budget} outside [0,1]"));
            }
        }
        if let Some(path) = &self.experiment.deceive_path {
            if !path.exists() {
                problems.push(format!("experiment.deceive_path: {} does not exist", path.display()));
            }
        }
        if DemoMode::parse(&self.multi_round.demo_mode).is_none() {
            problems.push(format!(
                "multi_round.demo_mode: unknown mode '{}'",
                self.multi_round.demo_mode
            ));
        }
        if self.teacher.mode == Some(TeacherMode::Deceive) && self.experiment.deceive_path.is_none()
        {
            problems.push(
                "experiment.deceive_path: required when teacher.mode = \"deceive\"".to_string(),
            );
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }

    pub fn policies(&self) -> Vec<PolicyKind> {
        self.experiment
            .policies
            .iter()
            .map(|name| PolicyKind::parse(name).expect("validated policy"))
            .collect()
    }

    pub fn teacher_mode(&self) -> TeacherMode {
        self.teacher.mode.unwrap_or(TeacherMode::Cot)
    }

    pub fn demo_mode(&self) -> DemoMode {
        DemoMode::parse(&self.multi_round.demo_mode).expect("validated demo mode")
    }

    /// Canonical snapshot: the config re-serialized from its parsed form.
    /// Byte-stable, so the digest below names the run reproducibly.
    pub fn snapshot(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 12 hex characters of the snapshot digest.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.snapshot().as_bytes());
        hex::encode(&hasher.finalize()[..6])
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.snapshot())
    }
}
