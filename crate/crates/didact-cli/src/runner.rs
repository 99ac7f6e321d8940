//! Wires configs to agents and protocols, and owns the results layout.
//!
//! Simulated agents are rebuilt per experiment seed so Monte Carlo draws are
//! independent across seeds; an endpoint client is shared across the whole
//! run (greedy endpoints are deterministic, and the response cache makes
//! repeats free).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use didact::agents::simulated::{DemoGain, Dist, MixedSignSpec, ProfileSpec};
use didact::agents::{
    endpoint::{EndpointStudent, EndpointTeacher},
    AgentError, SimProfile, SimulatedStudent, SimulatedTeacher, Student, Teacher,
};
use didact::client::{EndpointConfig, HttpClient};
use didact::dataset::{self, DatasetError, DatasetSplit, Problem, TaskKind};
use didact::mental_model::MentalModel;
use didact::metrics::{self, MetricsError};
use didact::prompts::{self, rendered_answer, Demonstration, ExplanationSource, PromptKind};
use didact::protocol::{
    run_multi_round, run_single_round, MultiRoundConfig, ProtocolError, SingleRoundConfig, Trace,
};
use didact::{intervention, TeacherMode};
use thiserror::Error;

use crate::config::{BackendKind, ConfigError, ExperimentConfig};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("{0}")]
    Other(String),
}

/// Command-line level knobs that never enter the config hash.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_root: PathBuf,
    pub workers: usize,
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { out_root: PathBuf::from("out"), workers: 1, cache_dir: None }
    }
}

pub fn load_problems(config: &ExperimentConfig) -> Result<Vec<Problem>, RunnerError> {
    match (&config.dataset.path, config.dataset.synthetic) {
        (Some(path), _) => Ok(dataset::load_dataset(path, config.dataset.task_kind)?),
        (None, Some(n)) => Ok(didact::agents::simulated::synthetic_problems(
            n,
            config.dataset.synthetic_seed,
        )),
        (None, None) => unreachable!("validated dataset section"),
    }
}

pub fn make_split(config: &ExperimentConfig, problems: &[Problem]) -> Result<DatasetSplit, RunnerError> {
    Ok(dataset::split(
        problems,
        config.split.demo_count,
        config.split.sim_count,
        config.split.seed,
    )?)
}

fn load_deceive_demos(config: &ExperimentConfig) -> Result<Option<Vec<Demonstration>>, RunnerError> {
    let Some(path) = &config.experiment.deceive_path else {
        return Ok(None);
    };
    let problems = dataset::load_dataset(path, config.dataset.task_kind)?;
    Ok(Some(
        problems
            .iter()
            .map(|problem| Demonstration {
                problem: problem.clone(),
                explanation: problem.human_explanation.clone(),
                explanation_source: ExplanationSource::Deceiving,
                shown_prediction: None,
            })
            .collect(),
    ))
}

struct AgentSet {
    student: Arc<dyn Student>,
    teacher: Arc<dyn Teacher>,
    mental_model: MentalModel,
}

struct AgentFactory {
    student_profile: Option<Arc<SimProfile>>,
    teacher_profile: Option<Arc<SimProfile>>,
    client: Option<Arc<HttpClient>>,
    endpoint: Option<crate::config::EndpointSection>,
}

impl AgentFactory {
    fn new(config: &ExperimentConfig, options: &RunOptions) -> Result<Self, RunnerError> {
        let load_profile = |path: &Option<PathBuf>| -> Result<Option<Arc<SimProfile>>, RunnerError> {
            Ok(match path {
                Some(path) => Some(Arc::new(SimProfile::load(path)?)),
                None => None,
            })
        };
        let needs_endpoint = config.student.backend == BackendKind::Endpoint
            || config.teacher.backend == BackendKind::Endpoint;
        let client = if needs_endpoint {
            let section = config.endpoint.as_ref().expect("validated endpoint section");
            Some(Arc::new(HttpClient::new(EndpointConfig {
                url: section.url.clone(),
                model: section.model.clone(),
                api_key_env: section.api_key_env.clone(),
                timeout_secs: section.timeout_secs,
                cache_dir: options.cache_dir.clone(),
                max_retries: 3,
                backoff_ms: 250,
            })))
        } else {
            None
        };
        Ok(AgentFactory {
            student_profile: if config.student.backend == BackendKind::Simulated {
                load_profile(&config.student.profile)?
            } else {
                None
            },
            teacher_profile: if config.teacher.backend == BackendKind::Simulated {
                load_profile(&config.teacher.profile)?
            } else {
                None
            },
            client,
            endpoint: config.endpoint.clone(),
        })
    }

    fn for_seed(&self, seed: u64) -> Result<AgentSet, RunnerError> {
        let student: Arc<dyn Student> = match &self.student_profile {
            Some(profile) => Arc::new(SimulatedStudent::new(profile.clone(), seed)),
            None => {
                let section = self.endpoint.as_ref().expect("endpoint config");
                let mode = section.confidence_mode().map_err(RunnerError::Other)?;
                Arc::new(EndpointStudent::new(
                    self.client.clone().expect("endpoint client"),
                    section.max_tokens,
                    mode,
                ))
            }
        };
        let teacher: Arc<dyn Teacher> = match &self.teacher_profile {
            Some(profile) => Arc::new(SimulatedTeacher::new(profile.clone(), seed)),
            None => {
                let section = self.endpoint.as_ref().expect("endpoint config");
                let mode = section.confidence_mode().map_err(RunnerError::Other)?;
                Arc::new(EndpointTeacher::new(
                    self.client.clone().expect("endpoint client"),
                    section.max_tokens,
                    mode,
                ))
            }
        };
        let mental_model = MentalModel::prompted(teacher.clone());
        Ok(AgentSet { student, teacher, mental_model })
    }
}

/// Runs the full single-round sweep and writes `runs/<hash>/`.
pub fn cmd_single_round(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<PathBuf, RunnerError> {
    let problems = load_problems(config)?;
    let split = make_split(config, &problems)?;
    let deceive_demos = load_deceive_demos(config)?;
    let factory = AgentFactory::new(config, options)?;
    let hash = config.hash();

    let protocol_config = SingleRoundConfig {
        teacher_mode: config.teacher_mode(),
        use_gold: config.experiment.use_gold,
        sim_demo_count: config.experiment.sim_demo_count,
        workers: options.workers,
        config_hash: hash.clone(),
        deceive_demos,
    };

    let mut traces: Vec<Trace> = Vec::new();
    for policy in config.policies() {
        for &seed in &config.experiment.seeds {
            let agents = factory.for_seed(seed)?;
            traces.extend(run_single_round(
                &protocol_config,
                agents.student.as_ref(),
                agents.teacher.as_ref(),
                &agents.mental_model,
                &split,
                policy,
                &config.experiment.budgets,
                &[seed],
            )?);
        }
    }
    Ok(metrics::write_run(&options.out_root, &hash, &config.snapshot(), &traces)?)
}

/// Runs the multi-round teaching loop and writes `runs/<hash>/`.
pub fn cmd_multi_round(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<PathBuf, RunnerError> {
    let problems = load_problems(config)?;
    let split = make_split(config, &problems)?;
    let factory = AgentFactory::new(config, options)?;
    let hash = config.hash();

    let pool_size = config.multi_round.pool_size.min(split.test.len());
    let pool: Vec<Problem> = split.test[..pool_size].to_vec();
    let test: Vec<Problem> = split.test[pool_size..].to_vec();

    let protocol_config = MultiRoundConfig {
        rounds: config.multi_round.rounds,
        samples_per_round: config.multi_round.samples_per_round,
        demo_mode: config.demo_mode(),
        use_gold: config.experiment.use_gold,
        sim_demo_count: config.experiment.sim_demo_count,
        teacher_mode: match config.teacher_mode() {
            // Multi-round explanation generation defaults to the
            // personalized prompt.
            TeacherMode::Cot => TeacherMode::Tom,
            other => other,
        },
        workers: options.workers,
        config_hash: hash.clone(),
    };

    let mut traces: Vec<Trace> = Vec::new();
    for &seed in &config.experiment.seeds {
        let agents = factory.for_seed(seed)?;
        traces.extend(run_multi_round(
            &protocol_config,
            agents.student.as_ref(),
            agents.teacher.as_ref(),
            &agents.mental_model,
            &split,
            &pool,
            &test,
            &[seed],
        )?);
    }
    Ok(metrics::write_run(&options.out_root, &hash, &config.snapshot(), &traces)?)
}

/// Renders every prompt shape for the first test item plus the random-policy
/// plans, without a single agent call.
pub fn dry_run_report(config: &ExperimentConfig) -> Result<String, RunnerError> {
    let problems = load_problems(config)?;
    let split = make_split(config, &problems)?;
    let test = split.test.first().ok_or_else(|| RunnerError::Other("empty test split".into()))?;
    let demos: Vec<Demonstration> = split.demos.iter().map(Demonstration::human).collect();
    let sim_demos: Vec<Demonstration> = split
        .demos
        .iter()
        .map(|p| Demonstration {
            shown_prediction: Some(rendered_answer(p, &p.gold_answer)),
            ..Demonstration::human(p)
        })
        .collect();
    let stand_in = if test.task_kind == TaskKind::Numeric {
        dataset::first_step_only(&test.human_explanation).text
    } else {
        test.human_explanation.clone()
    };

    let mut out = String::new();
    for kind in PromptKind::ALL {
        let demos = if matches!(kind, PromptKind::SimPre | PromptKind::SimPost) {
            &sim_demos
        } else {
            &demos
        };
        let explanation = matches!(
            kind,
            PromptKind::StudentWithIntervention | PromptKind::SimPost
        )
        .then_some(stand_in.as_str());
        let rendered = prompts::render(kind, demos, test, explanation)
            .map_err(|e| RunnerError::Other(e.to_string()))?;
        out.push_str(&format!("==== {kind:?} ====\n{rendered}\n\n"));
    }

    out.push_str("==== random plan ====\n");
    let seed = *config.experiment.seeds.first().expect("validated seeds");
    let context = intervention::ScoreContext { seed, ..Default::default() };
    let scores = intervention::score(intervention::PolicyKind::Random, &split.test, &context)
        .map_err(ProtocolError::from)?;
    for &budget in &config.experiment.budgets {
        let plan = intervention::select(&scores, intervention::PolicyKind::Random, budget)
            .map_err(ProtocolError::from)?;
        let mut ids: Vec<&String> = plan.selected.iter().collect();
        ids.sort();
        let joined = ids.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ");
        out.push_str(&format!("budget {budget}: {} of {} -> [{joined}]\n", plan.selected.len(), split.test.len()));
    }
    Ok(out)
}

/// Everything `gen-profile` needs.
#[derive(Debug, Clone)]
pub struct GenProfileArgs {
    pub n_items: Option<usize>,
    pub dataset: Option<PathBuf>,
    pub task_kind: TaskKind,
    pub pre: String,
    pub post: String,
    pub mixed_sign: Option<String>,
    pub teacher_accuracy: f64,
    pub confidence_noise: f64,
    pub mental_noise: f64,
    pub demo_gain_teacher: f64,
    pub demo_gain_student: f64,
    pub demo_gain_unexplained: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub emit_dataset: Option<PathBuf>,
}

/// Draws a profile file (and optionally a matching synthetic dataset).
pub fn cmd_gen_profile(args: &GenProfileArgs) -> Result<(), RunnerError> {
    let ids: Vec<String> = match (&args.dataset, args.n_items) {
        (Some(path), _) => dataset::load_dataset(path, args.task_kind)?
            .into_iter()
            .map(|p| p.id)
            .collect(),
        (None, Some(n)) => (0..n).map(|i| format!("item-{i:04}")).collect(),
        (None, None) => {
            return Err(RunnerError::Other("one of --dataset or --n is required".into()))
        }
    };
    let mixed_sign = match &args.mixed_sign {
        Some(text) => Some(parse_mixed_sign(text).map_err(RunnerError::Other)?),
        None => None,
    };
    let spec = ProfileSpec {
        pre: Dist::parse(&args.pre).map_err(RunnerError::Other)?,
        post: Dist::parse(&args.post).map_err(RunnerError::Other)?,
        mixed_sign,
        teacher_accuracy: args.teacher_accuracy,
        confidence_noise: args.confidence_noise,
        mental_noise: args.mental_noise,
        demo_gain: DemoGain {
            teacher: args.demo_gain_teacher,
            student: args.demo_gain_student,
            unexplained: args.demo_gain_unexplained,
            human: 0.0,
        },
    };
    let profile = didact::agents::simulated::generate_profile(&ids, &spec, args.seed);
    profile.validate().map_err(RunnerError::Other)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| RunnerError::Other(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    profile.save(&args.out)?;
    if let Some(path) = &args.emit_dataset {
        let problems = didact::agents::simulated::synthetic_problems(ids.len(), args.seed);
        dataset::save_dataset(path, &problems)?;
    }
    Ok(())
}

/// `frac_helpful,frac_harmful,low,high`
fn parse_mixed_sign(text: &str) -> Result<MixedSignSpec, String> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad number '{v}': {e}")))
        .collect::<Result<_, _>>()?;
    match values.as_slice() {
        [helpful, harmful, low, high] if helpful + harmful <= 1.0 && low <= high => {
            Ok(MixedSignSpec {
                helpful_fraction: *helpful,
                harmful_fraction: *harmful,
                low: *low,
                high: *high,
            })
        }
        _ => Err(format!("expected frac_helpful,frac_harmful,low,high; got '{text}'")),
    }
}

/// Writes the bundled reference tables for plot comparison.
pub fn cmd_reference(out_root: &Path) -> Result<(), RunnerError> {
    std::fs::create_dir_all(out_root)
        .map_err(|e| RunnerError::Other(format!("cannot create {}: {e}", out_root.display())))?;
    let single = out_root.join("reference_curves.csv");
    std::fs::write(&single, didact::reference::reference_csv())
        .map_err(|e| RunnerError::Other(format!("cannot write {}: {e}", single.display())))?;
    let rounds = out_root.join("reference_rounds.csv");
    std::fs::write(&rounds, didact::reference::reference_rounds_csv())
        .map_err(|e| RunnerError::Other(format!("cannot write {}: {e}", rounds.display())))?;
    Ok(())
}
