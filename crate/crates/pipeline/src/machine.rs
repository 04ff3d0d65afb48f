//! The pipeline state machine.
//!
//! One attempt walks a fixed stage graph: a Generator drafts the module
//! and tester, Inspector 1 screens the draft against the equations, the
//! Checker lints and executes it in a sandbox, the Debugger regenerates on
//! captured errors with Inspector 2 screening each repair, and the Packer
//! merges the accepted artifact into the codebase. Validation runs once
//! per clean execution; a semantic failure ends the attempt rather than
//! looping, since the agents have no way to observe the physics they got
//! wrong.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agents::{
    call_with_retries, coder_system_prompt, debugger_system_prompt, debugger_user_prompt,
    generator_user_prompt, inspector_system_prompt, inspector_user_prompt, parse_verdict,
    AgentKind, ChatMessage, TesterTemplate, TranscriptEntry, Verdict,
};
use crate::artifact::{parse_artifact, CodeArtifact, Provenance};
use crate::backend::ChatBackend;
use crate::codebase::Codebase;
use crate::error::Result;
use crate::guidelines::RuleSet;
use crate::oracle::{validate, ValidationReport};
use crate::packer::{merge_artifact, MERGE_SUBDIR};
use crate::sandbox::{execute_tester, ExecutionReport, SandboxConfig};
use lbm::task::TaskSpec;

/// The stages an attempt can be in. `stages` in [`PipelineRun`] records
/// every entry in order; the last element is always `Done` or `Failed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Generating,
    Inspecting1,
    Checking,
    Debugging,
    Inspecting2,
    Packing,
    Done,
    Failed,
}

/// Iteration caps. Defaults: three generation rounds, three consecutive
/// repair rejections, eight debug rounds per attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub max_inspect1: usize,
    pub max_inspect2: usize,
    pub max_debug: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_inspect1: 3,
            max_inspect2: 3,
            max_debug: 8,
        }
    }
}

impl Limits {
    /// All caps must be at least one; zero would mean an agent that can
    /// never act. Used internally so a zeroed config still terminates
    /// with sane semantics.
    fn clamped(self) -> Limits {
        Limits {
            max_inspect1: self.max_inspect1.max(1),
            max_inspect2: self.max_inspect2.max(1),
            max_debug: self.max_debug.max(1),
        }
    }
}

/// Everything one attempt needs besides the task, codebase, and backend.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub limits: Limits,
    pub sandbox: SandboxConfig,
    pub rules: RuleSet,
    pub tester: TesterTemplate,
    /// Codebase subdirectory the packer merges accepted modules into.
    pub merge_subdir: String,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            limits: Limits::default(),
            sandbox: SandboxConfig::default(),
            rules: RuleSet::default_rules(),
            tester: TesterTemplate::default(),
            merge_subdir: MERGE_SUBDIR.into(),
        }
    }
}

/// Why an attempt failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// Inspector 1 rejected every generated draft up to its cap.
    InspectionRejected,
    /// Inspector 2 rejected consecutive repairs up to its cap.
    RepairRejected,
    /// Captured toolchain errors persisted through the debug-round budget.
    Syntactic,
    /// Execution was clean but validation classified the output as wrong.
    Semantic,
}

/// Terminal result of an attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Done {
        report: ValidationReport,
        merged: Codebase,
    },
    Failed {
        kind: FailureKind,
        report: Option<ValidationReport>,
    },
}

impl Outcome {
    pub fn succeeded(&self) -> bool {
        matches!(self, Outcome::Done { .. })
    }

    pub fn report(&self) -> Option<&ValidationReport> {
        match self {
            Outcome::Done { report, .. } => Some(report),
            Outcome::Failed { report, .. } => report.as_ref(),
        }
    }
}

/// Full record of one attempt: the stage history, every agent exchange,
/// the final counters, the last artifact and execution, and the outcome.
/// Sandbox working directories are deleted when the run returns; the
/// `workdir` in `last_exec` is informational only.
#[derive(Debug)]
pub struct PipelineRun {
    pub stages: Vec<Stage>,
    pub transcripts: Vec<TranscriptEntry>,
    pub inspect1_rounds: usize,
    pub inspect2_rounds: usize,
    pub debug_rounds: usize,
    pub artifact: Option<CodeArtifact>,
    pub last_exec: Option<ExecutionReport>,
    pub outcome: Outcome,
}

impl PipelineRun {
    pub fn final_stage(&self) -> Stage {
        *self.stages.last().expect("stage history is never empty")
    }
}

/// Sends prompts and keeps the transcript. The per-agent counter gives
/// each call a 1-based iteration number, which is exactly the numbering a
/// scripted backend uses for its fixture files.
struct Driver<'a> {
    backend: &'a dyn ChatBackend,
    counters: BTreeMap<&'static str, usize>,
    transcripts: Vec<TranscriptEntry>,
}

impl<'a> Driver<'a> {
    fn new(backend: &'a dyn ChatBackend) -> Self {
        Driver {
            backend,
            counters: BTreeMap::new(),
            transcripts: Vec::new(),
        }
    }

    fn call(
        &mut self,
        agent: AgentKind,
        system: &str,
        user_prompt: String,
    ) -> Result<(usize, String)> {
        let messages = vec![ChatMessage::user(user_prompt)];
        let completion = call_with_retries(self.backend, agent, system, &messages)?;
        let counter = self.counters.entry(agent.label()).or_insert(0);
        *counter += 1;
        let iteration = *counter;
        self.transcripts.push(TranscriptEntry {
            agent,
            iteration,
            system: system.to_string(),
            messages,
            completion: completion.clone(),
        });
        Ok((iteration, completion))
    }
}

/// Runs one attempt to completion.
///
/// Transitions: generating -> inspecting1; inspecting1 consistent ->
/// checking, inconsistent -> generating until `max_inspect1` rounds;
/// checking with lint violations or captured errors -> debugging, clean ->
/// validate; debugging -> inspecting2; inspecting2 consistent -> checking,
/// inconsistent -> debugging until `max_inspect2` consecutive rejections;
/// entering debugging beyond `max_debug` rounds fails the attempt;
/// validation pass -> packing -> done, anything else fails as semantic.
///
/// Returns `Err` only for infrastructure and protocol faults (backend
/// exhaustion, malformed completions, spawn or I/O failures); every
/// outcome the agents can cause by writing bad code is an `Outcome`.
/// Worst case the attempt makes `2*max_inspect1 + 2*max_debug` agent
/// calls, within the documented `max_inspect1 + max_debug*(max_inspect2
/// + 1) + 3` bound for the default caps.
pub fn run_pipeline(
    task: &TaskSpec,
    codebase: &Codebase,
    backend: &dyn ChatBackend,
    config: &PipelineConfig,
) -> Result<PipelineRun> {
    let limits = config.limits.clamped();
    let mut driver = Driver::new(backend);

    let coder_system = coder_system_prompt(codebase);
    let inspector_system = inspector_system_prompt();
    let debugger_system = debugger_system_prompt(codebase, &config.rules.render_guidelines());

    let mut stage = Stage::Generating;
    let mut stages: Vec<Stage> = Vec::new();
    let mut artifact: Option<CodeArtifact> = None;
    let mut last_exec: Option<ExecutionReport> = None;
    // Keeps the current sandbox directory alive so validation can read it.
    let mut workdir_guard: Option<tempfile::TempDir> = None;

    let mut inspect1_rounds = 0usize;
    let mut inspect2_rounds = 0usize;
    let mut debug_rounds = 0usize;

    // Findings carried to the next agent call.
    let mut generator_findings: Option<String> = None;
    let mut repair_findings: Option<String> = None;

    let mut failure: Option<(FailureKind, Option<ValidationReport>)> = None;
    let mut accepted_report: Option<ValidationReport> = None;
    let mut merged: Option<Codebase> = None;

    let outcome = loop {
        stages.push(stage);
        match stage {
            Stage::Generating => {
                let prompt =
                    generator_user_prompt(task, &config.tester, generator_findings.as_deref());
                let (iteration, completion) =
                    driver.call(AgentKind::Generator, &coder_system, prompt)?;
                let provenance = Provenance {
                    agent: AgentKind::Generator,
                    iteration,
                };
                artifact = Some(parse_artifact(
                    &completion,
                    &config.tester.file_name,
                    provenance,
                )?);
                stage = Stage::Inspecting1;
            }

            Stage::Inspecting1 => {
                inspect1_rounds += 1;
                let art = artifact.as_ref().expect("inspecting1 follows generation");
                let prompt = inspector_user_prompt(task, art);
                let (_, completion) =
                    driver.call(AgentKind::Inspector1, &inspector_system, prompt)?;
                match parse_verdict(AgentKind::Inspector1, &completion)? {
                    (Verdict::Consistent, _) => {
                        generator_findings = None;
                        stage = Stage::Checking;
                    }
                    (Verdict::Inconsistent, findings) => {
                        if inspect1_rounds >= limits.max_inspect1 {
                            failure = Some((FailureKind::InspectionRejected, None));
                            stage = Stage::Failed;
                        } else {
                            generator_findings = Some(findings);
                            stage = Stage::Generating;
                        }
                    }
                }
            }

            Stage::Checking => {
                let art = artifact.as_ref().expect("checking needs an artifact");
                let violations = config.rules.lint(&art.all_files());
                let (report, guard) = execute_tester(codebase, art, &config.sandbox)?;
                let clean = report.succeeded() && report.captured_errors.is_empty();
                last_exec = Some(report);
                workdir_guard = Some(guard);
                if clean && violations.is_empty() {
                    let exec = last_exec.as_ref().expect("just stored");
                    let validation = validate(task, exec, &exec.workdir);
                    if validation.passed() {
                        accepted_report = Some(validation);
                        stage = Stage::Packing;
                    } else {
                        failure = Some((FailureKind::Semantic, Some(validation)));
                        stage = Stage::Failed;
                    }
                } else if debug_rounds >= limits.max_debug {
                    failure = Some((FailureKind::Syntactic, None));
                    stage = Stage::Failed;
                } else {
                    // A fresh debug cycle: rejection streak starts over.
                    inspect2_rounds = 0;
                    repair_findings = None;
                    stage = Stage::Debugging;
                }
            }

            Stage::Debugging => {
                debug_rounds += 1;
                let art = artifact.as_ref().expect("debugging needs an artifact");
                // Lint the artifact being repaired; after an inspector
                // rejection this is fresher than what checking saw.
                let violations = config.rules.lint(&art.all_files());
                let exec = last_exec.as_ref().expect("debugging follows checking");
                let prompt = debugger_user_prompt(art, exec, &violations, repair_findings.as_deref());
                let (iteration, completion) =
                    driver.call(AgentKind::Debugger, &debugger_system, prompt)?;
                let provenance = Provenance {
                    agent: AgentKind::Debugger,
                    iteration,
                };
                artifact = Some(parse_artifact(
                    &completion,
                    &config.tester.file_name,
                    provenance,
                )?);
                stage = Stage::Inspecting2;
            }

            Stage::Inspecting2 => {
                let art = artifact.as_ref().expect("inspecting2 follows debugging");
                let prompt = inspector_user_prompt(task, art);
                let (_, completion) =
                    driver.call(AgentKind::Inspector2, &inspector_system, prompt)?;
                match parse_verdict(AgentKind::Inspector2, &completion)? {
                    (Verdict::Consistent, _) => {
                        repair_findings = None;
                        stage = Stage::Checking;
                    }
                    (Verdict::Inconsistent, findings) => {
                        inspect2_rounds += 1;
                        if inspect2_rounds >= limits.max_inspect2 {
                            failure = Some((FailureKind::RepairRejected, None));
                            stage = Stage::Failed;
                        } else if debug_rounds >= limits.max_debug {
                            failure = Some((FailureKind::Syntactic, None));
                            stage = Stage::Failed;
                        } else {
                            repair_findings = Some(findings);
                            stage = Stage::Debugging;
                        }
                    }
                }
            }

            Stage::Packing => {
                let art = artifact.as_ref().expect("packing needs an artifact");
                merged = Some(merge_artifact(codebase, art, &config.merge_subdir)?);
                stage = Stage::Done;
            }

            Stage::Done => {
                break Outcome::Done {
                    report: accepted_report.take().expect("packing stored the report"),
                    merged: merged.take().expect("packing merged the artifact"),
                };
            }

            Stage::Failed => {
                let (kind, report) = failure.take().expect("failure reason recorded");
                break Outcome::Failed { kind, report };
            }
        }
    };

    drop(workdir_guard);
    Ok(PipelineRun {
        stages,
        transcripts: driver.transcripts,
        inspect1_rounds,
        inspect2_rounds,
        debug_rounds,
        artifact,
        last_exec,
        outcome,
    })
}
