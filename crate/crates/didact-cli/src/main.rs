use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use didact::dataset::TaskKind;
use didact_cli::config::ExperimentConfig;
use didact_cli::runner::{self, GenProfileArgs, RunOptions};

#[derive(Parser)]
#[command(
    name = "didact",
    about = "Budgeted teacher-student intervention experiments over simulated or endpoint-backed agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (structured key-value file).
    #[arg(long)]
    config: PathBuf,
    /// Results root; runs land in <out>/runs/<config-hash>/.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for agent calls; never changes results.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Response cache directory for endpoint backends.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Render prompts and plans without any agent calls.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Budget sweep: score, rank, intervene within each budget.
    SingleRound(RunArgs),
    /// Teaching loop: explained demonstrations accumulate round by round.
    MultiRound(RunArgs),
    /// Draw a simulated agent profile file.
    GenProfile {
        /// Synthetic item count (alternative to --dataset).
        #[arg(long)]
        n: Option<usize>,
        /// Key the profile by this dataset's item ids.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "boolean")]
        task_kind: CliTaskKind,
        /// Distribution of p_pre: const:x | uniform:a,b | beta:a,b
        #[arg(long, default_value = "const:0.58")]
        pre: String,
        /// Distribution of p_post.
        #[arg(long, default_value = "const:0.63")]
        post: String,
        /// Mixed-sign utility shape: frac_helpful,frac_harmful,low,high.
        #[arg(long)]
        mixed_sign: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        teacher_accuracy: f64,
        #[arg(long, default_value_t = 0.0)]
        confidence_noise: f64,
        #[arg(long, default_value_t = 0.0)]
        mental_noise: f64,
        /// Per-demonstration accuracy gain in multi-round teaching.
        #[arg(long, default_value_t = 0.0)]
        demo_gain_teacher: f64,
        #[arg(long, default_value_t = 0.0)]
        demo_gain_student: f64,
        #[arg(long, default_value_t = 0.0)]
        demo_gain_unexplained: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write a matching synthetic dataset here.
        #[arg(long)]
        emit_dataset: Option<PathBuf>,
    },
    /// Emit the bundled reference accuracy tables for plot comparison.
    Reference {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, clap::ValueEnum)]
enum CliTaskKind {
    Boolean,
    Multichoice,
    Numeric,
}

impl From<CliTaskKind> for TaskKind {
    fn from(kind: CliTaskKind) -> TaskKind {
        match kind {
            CliTaskKind::Boolean => TaskKind::Boolean,
            CliTaskKind::Multichoice => TaskKind::Multichoice,
            CliTaskKind::Numeric => TaskKind::Numeric,
        }
    }
}

fn run(args: &RunArgs, multi_round: bool) -> Result<(), String> {
    let config = ExperimentConfig::load(&args.config).map_err(|e| e.to_string())?;
    if args.dry_run {
        let report = runner::dry_run_report(&config).map_err(|e| e.to_string())?;
        print!("{report}");
        return Ok(());
    }
    let options = RunOptions {
        out_root: args.out.clone(),
        workers: args.workers.max(1),
        cache_dir: args.cache_dir.clone(),
    };
    let run_dir = if multi_round {
        runner::cmd_multi_round(&config, &options).map_err(|e| e.to_string())?
    } else {
        runner::cmd_single_round(&config, &options).map_err(|e| e.to_string())?
    };
    println!("results: {}", run_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::SingleRound(args) => run(&args, false),
        Command::MultiRound(args) => run(&args, true),
        Command::GenProfile {
            n,
            dataset,
            task_kind,
            pre,
            post,
            mixed_sign,
            teacher_accuracy,
            confidence_noise,
            mental_noise,
            demo_gain_teacher,
            demo_gain_student,
            demo_gain_unexplained,
            seed,
            out,
            emit_dataset,
        } => runner::cmd_gen_profile(&GenProfileArgs {
            n_items: n,
            dataset,
            task_kind: task_kind.into(),
            pre,
            post,
            mixed_sign,
            teacher_accuracy,
            confidence_noise,
            mental_noise,
            demo_gain_teacher,
            demo_gain_student,
            demo_gain_unexplained,
            seed,
            out,
            emit_dataset,
        })
        .map_err(|e| e.to_string()),
        Command::Reference { out } => runner::cmd_reference(&out).map_err(|e| e.to_string()),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
