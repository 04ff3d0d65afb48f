//! pdedev: operator entry points for the solver library and the module
//! pipeline. Subcommands run reference testers, validate tester output,
//! lint generated code, and drive single or batched pipeline attempts.
//!
//! Exit codes are stable across subcommands: 0 success, 1 task or
//! validation failure, 2 usage or configuration error, 3 I/O or
//! infrastructure error.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use lbm::runner::{run_tester, validate_for_run};
use lbm::task::{builtin_task, TaskSpec};
use pipeline::machine::{run_pipeline, Limits, Outcome, PipelineConfig, PipelineRun};
use pipeline::oracle::{load_output, validate, LoadOutcome, ValidationReport};
use pipeline::packer::merge_into_dir;
use pipeline::sandbox::ExecutionReport;
use pipeline::{ChatBackend, Codebase, HttpBackend, PipelineError, RuleSet, ScriptedBackend};

const EXIT_OK: i32 = 0;
const EXIT_FAILURE: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_INFRA: i32 = 3;

#[derive(Parser)]
#[command(name = "pdedev", version, about = "PDE module development pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a reference tester and validate its output.
    RunTester(RunTesterArgs),
    /// Validate an existing tester output directory.
    Validate(ValidateArgs),
    /// Run one pipeline attempt from a task description.
    Pipeline(PipelineArgs),
    /// Run several independent pipeline attempts and report the rate.
    Batch(BatchArgs),
    /// Lint a file or directory against the guidelines rules.
    Lint(LintArgs),
}

#[derive(Args)]
struct RunTesterArgs {
    /// Built-in task name (ad_gaussian, bc_mixed, fisher_kpp,
    /// cavity_powerlaw) or a path to a task description file.
    task: String,
    /// Output directory for snapshots and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the configured step count.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the grid width.
    #[arg(long)]
    nx: Option<usize>,
    /// Override the grid height.
    #[arg(long)]
    ny: Option<usize>,
    /// Override the snapshot interval.
    #[arg(long)]
    output_every: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Directory holding manifest.json and the snapshot files.
    output_dir: PathBuf,
    /// Task the output claims to solve (name or description path).
    #[arg(long)]
    task: String,
}

#[derive(Args)]
struct PipelineArgs {
    /// Path to the task description document.
    description: PathBuf,
    /// Chat backend: scripted:<fixture-dir> or http.
    #[arg(long)]
    backend: String,
    /// Target codebase directory handed to the agents (default: empty).
    #[arg(long)]
    codebase: Option<PathBuf>,
    /// Attempt directory for transcripts, artifact, and report.
    #[arg(long, default_value = "attempt_out")]
    out: PathBuf,
    /// Guidelines rules file (default: built-in rules).
    #[arg(long)]
    guidelines: Option<PathBuf>,
    /// Model name for the http backend.
    #[arg(long)]
    model: Option<String>,
    /// Command template for the sandbox; {tester} and {workdir} expand.
    #[arg(long)]
    run_command: Option<String>,
    /// Sandbox timeout in seconds.
    #[arg(long)]
    timeout: Option<u64>,
    #[arg(long, default_value_t = 3)]
    max_inspect1: usize,
    #[arg(long, default_value_t = 3)]
    max_inspect2: usize,
    #[arg(long, default_value_t = 8)]
    max_debug: usize,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Number of independent attempts.
    #[arg(long, default_value_t = 10)]
    attempts: usize,
    /// Maximum attempts running concurrently.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Args)]
struct LintArgs {
    /// File or directory to scan.
    path: PathBuf,
    /// Guidelines rules file (default: built-in rules).
    #[arg(long)]
    rules: Option<PathBuf>,
}

/// Failure that carries its exit code; the message goes to stderr.
struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn infra(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INFRA,
            message: message.into(),
        }
    }

    fn failure(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::RunTester(args) => cmd_run_tester(args),
        Cmd::Validate(args) => cmd_validate(args),
        Cmd::Pipeline(args) => cmd_pipeline(args),
        Cmd::Batch(args) => cmd_batch(args),
        Cmd::Lint(args) => cmd_lint(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("pdedev: {}", err.message);
            std::process::exit(err.code);
        }
    }
}

/// Resolves a task argument: a built-in name first, then a description
/// file path.
fn load_task(name_or_path: &str) -> Result<TaskSpec, CliError> {
    if let Some(task) = builtin_task(name_or_path) {
        return Ok(task);
    }
    let path = Path::new(name_or_path);
    if !path.is_file() {
        return Err(CliError::usage(format!(
            "unknown task '{name_or_path}': not a built-in name and not a file"
        )));
    }
    load_description(path)
}

fn load_description(path: &Path) -> Result<TaskSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::infra(format!("read {}: {e}", path.display())))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "task".into());
    TaskSpec::parse_description(&name, &text)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Stand-in execution report for output produced outside the sandbox
/// (reference runs and pre-existing directories).
fn external_exec(dir: &Path) -> ExecutionReport {
    ExecutionReport {
        exit_status: 0,
        stdout: String::new(),
        stderr: String::new(),
        duration_s: 0.0,
        timed_out: false,
        workdir: dir.to_path_buf(),
        captured_errors: Vec::new(),
    }
}

fn map_sim_error(err: lbm::Error) -> CliError {
    match &err {
        lbm::Error::Config(_)
        | lbm::Error::ParameterRange(_)
        | lbm::Error::Description(_)
        | lbm::Error::IncompatibleBc(_)
        | lbm::Error::DuplicateEdge(_) => CliError::usage(err.to_string()),
        lbm::Error::Io(_) | lbm::Error::Vtk { .. } | lbm::Error::Manifest(_) => {
            CliError::infra(err.to_string())
        }
        _ => CliError::failure(err.to_string()),
    }
}

fn print_report(report: &ValidationReport) {
    print!("{}", report.to_json());
}

fn cmd_run_tester(args: RunTesterArgs) -> Result<i32, CliError> {
    let mut task = load_task(&args.task)?;
    if let Some(steps) = args.steps {
        task.config.steps = steps;
    }
    if let Some(nx) = args.nx {
        task.config.nx = nx;
    }
    if let Some(ny) = args.ny {
        task.config.ny = ny;
    }
    if let Some(every) = args.output_every {
        task.config.output_every = every;
    }
    validate_for_run(&task.config).map_err(|e| CliError::usage(e.to_string()))?;

    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(&task.config.output_dir));
    std::fs::create_dir_all(&out)
        .map_err(|e| CliError::infra(format!("create {}: {e}", out.display())))?;

    run_tester(&task, &out).map_err(map_sim_error)?;
    let report = validate(&task, &external_exec(&out), &out);
    print_report(&report);
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_validate(args: ValidateArgs) -> Result<i32, CliError> {
    let task = load_task(&args.task)?;
    if !args.output_dir.is_dir() {
        return Err(CliError::usage(format!(
            "output directory {} does not exist",
            args.output_dir.display()
        )));
    }
    // Unreadable snapshots are an I/O problem with the directory being
    // judged, not evidence about the program that wrote it; bail before
    // classification. A missing manifest, by contrast, is the classic
    // spurious-output signature and flows through validation.
    if let LoadOutcome::Corrupt { reason } = load_output(&args.output_dir) {
        return Err(CliError::infra(format!(
            "cannot read tester output: {reason}"
        )));
    }
    let report = validate(&task, &external_exec(&args.output_dir), &args.output_dir);
    print_report(&report);
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_lint(args: LintArgs) -> Result<i32, CliError> {
    let rules = match &args.rules {
        Some(path) => RuleSet::load(path).map_err(|e| CliError::usage(e.to_string()))?,
        None => RuleSet::default_rules(),
    };
    let files = if args.path.is_file() {
        let text = std::fs::read_to_string(&args.path)
            .map_err(|e| CliError::infra(format!("read {}: {e}", args.path.display())))?;
        let mut map = BTreeMap::new();
        map.insert(args.path.to_string_lossy().into_owned(), text);
        map
    } else if args.path.is_dir() {
        Codebase::load_dir(&args.path)
            .map_err(|e| CliError::infra(e.to_string()))?
            .files
    } else {
        return Err(CliError::usage(format!(
            "path {} does not exist",
            args.path.display()
        )));
    };
    let violations = rules.lint(&files);
    println!(
        "{}",
        serde_json::to_string_pretty(&violations).expect("violations serialize")
    );
    Ok(if violations.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

/// Shared setup for pipeline and batch: task, codebase, and config.
fn pipeline_setup(args: &PipelineArgs) -> Result<(TaskSpec, Codebase, PipelineConfig), CliError> {
    if !args.description.is_file() {
        return Err(CliError::usage(format!(
            "description {} does not exist",
            args.description.display()
        )));
    }
    if args.max_inspect1 == 0 || args.max_inspect2 == 0 || args.max_debug == 0 {
        return Err(CliError::usage(
            "round limits must be at least 1".to_string(),
        ));
    }
    let task = load_description(&args.description)?;

    let codebase = match &args.codebase {
        Some(dir) => {
            if !dir.is_dir() {
                return Err(CliError::usage(format!(
                    "codebase directory {} does not exist",
                    dir.display()
                )));
            }
            Codebase::load_dir(dir).map_err(|e| CliError::infra(e.to_string()))?
        }
        None => Codebase::new(),
    };

    let rules = match &args.guidelines {
        Some(path) => RuleSet::load(path).map_err(|e| CliError::usage(e.to_string()))?,
        None => RuleSet::default_rules(),
    };

    let mut config = PipelineConfig {
        limits: Limits {
            max_inspect1: args.max_inspect1,
            max_inspect2: args.max_inspect2,
            max_debug: args.max_debug,
        },
        rules,
        ..PipelineConfig::default()
    };
    if let Some(cmd) = &args.run_command {
        config.sandbox.run_command = cmd.clone();
    }
    if let Some(timeout) = args.timeout {
        config.sandbox.timeout_s = timeout;
    }
    Ok((task, codebase, config))
}

/// Parses the --backend flag. `attempt_dir` narrows a scripted backend to
/// a per-attempt fixture subdirectory when one exists.
fn make_backend(
    spec: &str,
    model: Option<&str>,
    attempt_subdir: Option<usize>,
) -> Result<Box<dyn ChatBackend>, CliError> {
    if let Some(dir) = spec.strip_prefix("scripted:") {
        let mut dir = PathBuf::from(dir);
        if !dir.is_dir() {
            return Err(CliError::usage(format!(
                "fixture directory {} does not exist",
                dir.display()
            )));
        }
        if let Some(i) = attempt_subdir {
            let candidate = dir.join(format!("attempt_{i}"));
            if candidate.is_dir() {
                dir = candidate;
            }
        }
        return Ok(Box::new(ScriptedBackend::new(dir)));
    }
    if spec == "http" {
        let backend = HttpBackend::from_env(model).map_err(CliError::usage)?;
        return Ok(Box::new(backend));
    }
    Err(CliError::usage(format!(
        "backend must be scripted:<dir> or http, got '{spec}'"
    )))
}

/// Writes transcripts (JSON lines), the final artifact, the validation
/// report, and an outcome summary under `dir`.
fn write_attempt(dir: &Path, run: &PipelineRun) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::infra(format!("create {}: {e}", dir.display())))?;

    let mut transcript_text = String::new();
    for entry in &run.transcripts {
        transcript_text.push_str(&serde_json::to_string(entry).expect("transcript serializes"));
        transcript_text.push('\n');
    }
    std::fs::write(dir.join("transcripts.jsonl"), transcript_text)
        .map_err(|e| CliError::infra(format!("write transcripts: {e}")))?;

    if let Some(artifact) = &run.artifact {
        let artifact_dir = dir.join("artifact");
        for (name, text) in artifact.all_files() {
            let path = artifact_dir.join(&name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::infra(format!("create {}: {e}", parent.display())))?;
            }
            std::fs::write(&path, text)
                .map_err(|e| CliError::infra(format!("write {}: {e}", path.display())))?;
        }
    }

    if let Some(report) = run.outcome.report() {
        std::fs::write(dir.join("report.json"), report.to_json())
            .map_err(|e| CliError::infra(format!("write report: {e}")))?;
    }

    let (status, failure_kind) = match &run.outcome {
        Outcome::Done { .. } => ("done", None),
        Outcome::Failed { kind, .. } => ("failed", Some(*kind)),
    };
    let summary = serde_json::json!({
        "status": status,
        "failure_kind": failure_kind,
        "stages": run.stages,
        "inspect1_rounds": run.inspect1_rounds,
        "inspect2_rounds": run.inspect2_rounds,
        "debug_rounds": run.debug_rounds,
        "error_class": run.outcome.report().map(|r| r.error_class),
    });
    std::fs::write(
        dir.join("outcome.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )
    .map_err(|e| CliError::infra(format!("write outcome: {e}")))?;
    Ok(())
}

fn pipeline_error_code(err: &PipelineError) -> i32 {
    if err.is_infrastructure() {
        EXIT_INFRA
    } else {
        EXIT_FAILURE
    }
}

fn cmd_pipeline(args: PipelineArgs) -> Result<i32, CliError> {
    let (task, codebase, config) = pipeline_setup(&args)?;
    let backend = make_backend(&args.backend, args.model.as_deref(), None)?;

    let run = run_pipeline(&task, &codebase, backend.as_ref(), &config).map_err(|e| CliError {
        code: pipeline_error_code(&e),
        message: e.to_string(),
    })?;
    write_attempt(&args.out, &run)?;

    match &run.outcome {
        Outcome::Done { report, .. } => {
            // Land the artifact in the real codebase tree, not only in
            // the in-memory merge the report was produced against.
            if let Some(dir) = &args.codebase {
                let artifact = run.artifact.as_ref().expect("done implies an artifact");
                let written =
                    merge_into_dir(artifact, dir, &config.merge_subdir).map_err(|e| CliError {
                        code: pipeline_error_code(&e),
                        message: e.to_string(),
                    })?;
                eprintln!(
                    "pdedev: merged {} file(s) into {}",
                    written.len(),
                    dir.join(&config.merge_subdir).display()
                );
            }
            print_report(report);
            Ok(EXIT_OK)
        }
        Outcome::Failed { kind, report } => {
            if let Some(report) = report {
                print_report(report);
            }
            eprintln!("pdedev: attempt failed ({})", kind_name(*kind));
            Ok(EXIT_FAILURE)
        }
    }
}

fn kind_name(kind: pipeline::machine::FailureKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_else(|| format!("{kind:?}"))
}

/// One attempt's row in the batch report.
#[derive(serde::Serialize)]
struct AttemptSummary {
    attempt: usize,
    succeeded: bool,
    /// Oracle class when a validation report exists.
    error_class: Option<String>,
    failure_kind: Option<String>,
    /// Infrastructure or protocol error message, when the attempt never
    /// reached an outcome.
    error: Option<String>,
    duration_s: f64,
}

fn cmd_batch(args: BatchArgs) -> Result<i32, CliError> {
    if args.attempts == 0 || args.parallel == 0 {
        return Err(CliError::usage(
            "--attempts and --parallel must be at least 1".to_string(),
        ));
    }
    let (task, codebase, config) = pipeline_setup(&args.pipeline)?;
    // Fail fast on an unusable backend spec before spawning attempts.
    make_backend(&args.pipeline.backend, args.pipeline.model.as_deref(), None)?;

    let attempts = args.attempts;
    let parallel = args.parallel.min(attempts);
    let mut rows: Vec<Option<AttemptSummary>> = Vec::new();
    rows.resize_with(attempts, || None);

    let next = std::sync::atomic::AtomicUsize::new(0);
    let rows_mutex = std::sync::Mutex::new(&mut rows);
    let out_root = args.pipeline.out.clone();

    std::thread::scope(|scope| {
        for _ in 0..parallel {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= attempts {
                    break;
                }
                let attempt = i + 1;
                let row = run_batch_attempt(
                    attempt,
                    &args.pipeline,
                    &task,
                    &codebase,
                    &config,
                    &out_root,
                );
                rows_mutex.lock().expect("rows lock")[i] = Some(row);
            });
        }
    });

    let rows: Vec<AttemptSummary> = rows
        .into_iter()
        .map(|r| r.expect("every attempt ran"))
        .collect();
    let successes = rows.iter().filter(|r| r.succeeded).count();
    let result = serde_json::json!({
        "task": task.name,
        "attempts": attempts,
        "successes": successes,
        "success_rate": format!("{successes}/{attempts}"),
        "per_attempt": rows,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&result).expect("batch result serializes")
    );
    let _ = std::io::stdout().flush();
    Ok(if successes == attempts {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

fn run_batch_attempt(
    attempt: usize,
    args: &PipelineArgs,
    task: &TaskSpec,
    codebase: &Codebase,
    config: &PipelineConfig,
    out_root: &Path,
) -> AttemptSummary {
    let start = Instant::now();
    let backend = match make_backend(&args.backend, args.model.as_deref(), Some(attempt)) {
        Ok(b) => b,
        Err(e) => {
            return AttemptSummary {
                attempt,
                succeeded: false,
                error_class: None,
                failure_kind: None,
                error: Some(e.message),
                duration_s: start.elapsed().as_secs_f64(),
            }
        }
    };
    match run_pipeline(task, codebase, backend.as_ref(), config) {
        Ok(run) => {
            let dir = out_root.join(format!("attempt_{attempt}"));
            let write_error = write_attempt(&dir, &run).err().map(|e| e.message);
            let (succeeded, failure_kind) = match &run.outcome {
                Outcome::Done { .. } => (true, None),
                Outcome::Failed { kind, .. } => (false, Some(kind_name(*kind))),
            };
            AttemptSummary {
                attempt,
                succeeded,
                error_class: run
                    .outcome
                    .report()
                    .map(|r| r.error_class.to_string()),
                failure_kind,
                error: write_error,
                duration_s: start.elapsed().as_secs_f64(),
            }
        }
        Err(e) => AttemptSummary {
            attempt,
            succeeded: false,
            error_class: None,
            failure_kind: None,
            error: Some(e.to_string()),
            duration_s: start.elapsed().as_secs_f64(),
        },
    }
}
