use serde::{Deserialize, Serialize};

use lbm::task::TaskSpec;

use crate::artifact::CodeArtifact;
use crate::backend::ChatBackend;
use crate::codebase::Codebase;
use crate::error::{PipelineError, Result};
use crate::guidelines::Violation;
use crate::sandbox::ExecutionReport;

/// The four agent roles. Labels double as transcript keys and as the stem
/// of scripted-fixture file names, so they must stay stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Generator,
    Inspector1,
    Inspector2,
    Debugger,
}

impl AgentKind {
    pub fn label(&self) -> &'static str {
        match self {
            AgentKind::Generator => "generator",
            AgentKind::Inspector1 => "inspector1",
            AgentKind::Inspector2 => "inspector2",
            AgentKind::Debugger => "debugger",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// One backend call, recorded in full. A pipeline run's transcript is the
/// ordered list of these entries; serializing them as JSON lines gives a
/// replayable, diffable record with no timestamps or other nondeterminism.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub agent: AgentKind,
    pub iteration: usize,
    pub system: String,
    pub messages: Vec<ChatMessage>,
    pub completion: String,
}

/// Inspection verdict. The first line of an inspector completion must be
/// exactly one of the two words; anything else is a format error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

pub fn parse_verdict(agent: AgentKind, completion: &str) -> Result<(Verdict, String)> {
    let mut lines = completion.lines();
    let first = lines.next().unwrap_or("").trim();
    let verdict = match first {
        "CONSISTENT" => Verdict::Consistent,
        "INCONSISTENT" => Verdict::Inconsistent,
        _ => {
            return Err(PipelineError::VerdictFormat {
                agent: agent.label().into(),
                first_line: first.into(),
            })
        }
    };
    let findings = lines.collect::<Vec<_>>().join("\n").trim().to_string();
    Ok((verdict, findings))
}

/// Skeleton handed to the generator: the file name the tester must use and
/// the conventions its output has to follow for validation to find it.
#[derive(Debug, Clone)]
pub struct TesterTemplate {
    pub file_name: String,
    pub body: String,
}

impl Default for TesterTemplate {
    fn default() -> Self {
        TesterTemplate {
            file_name: "test_case.py".into(),
            body: DEFAULT_TESTER_TEMPLATE.into(),
        }
    }
}

const DEFAULT_TESTER_TEMPLATE: &str = r#"# Tester skeleton. Keep the file name and the output conventions.
#
# The script must:
#   1. build the simulation described in the configuration block,
#   2. run it for the configured number of steps,
#   3. write each requested snapshot as an ASCII VTK STRUCTURED_POINTS file
#      named <task>_<step padded to 6 digits>.vtk in the working directory,
#   4. write manifest.json: a JSON array of entries
#      {"timestep": int, "filename": str, "field_names": [str], "checksum": sha256-hex}
#      covering every snapshot written.
#
# Exit with status 0 on success and nonzero on any failure.
"#;

const CODE_CONDUCT: &str = "You must agree with the code conduct of this codebase: \
reuse its data layouts and naming, import from the files shown instead of external \
solver packages, and keep every new file self-contained.";

fn render_messages(parts: &[(&str, &str)]) -> String {
    let mut out = String::new();
    for (heading, body) in parts {
        out.push_str("# ");
        out.push_str(heading);
        out.push_str("\n\n");
        out.push_str(body);
        if !body.ends_with('\n') {
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// System prompt shared by generator and debugger: the full codebase plus
/// the conduct note. Inspectors get a short role description instead; they
/// judge the artifact against the equations, not against the codebase.
pub fn coder_system_prompt(codebase: &Codebase) -> String {
    format!(
        "You extend the PDE solver codebase below.\n{CODE_CONDUCT}\n\n{}",
        codebase.render_prompt()
    )
}

pub fn generator_user_prompt(
    task: &TaskSpec,
    template: &TesterTemplate,
    prior_findings: Option<&str>,
) -> String {
    let description = task.render_description();
    let mut parts = vec![
        ("Task", description.as_str()),
        ("Tester template", template.body.as_str()),
    ];
    let instructions = format!(
        "Write the solver module files and the tester script {name}. \
Reply with one `FILE: <name>` header per file, each followed by a fenced code block.",
        name = template.file_name
    );
    parts.push(("Instructions", instructions.as_str()));
    if let Some(findings) = prior_findings {
        parts.push(("Inspector findings on your previous attempt", findings));
    }
    render_messages(&parts)
}

pub fn inspector_system_prompt() -> String {
    "You review generated solver code against the governing equations. \
Answer with a first line that is exactly CONSISTENT or INCONSISTENT, \
then list your findings."
        .into()
}

pub fn inspector_user_prompt(task: &TaskSpec, artifact: &CodeArtifact) -> String {
    let rendered = artifact.render();
    render_messages(&[
        ("Equations", task.equations.as_str()),
        ("Algorithm", task.algorithm.as_str()),
        ("Generated code", rendered.as_str()),
    ])
}

pub fn debugger_user_prompt(
    artifact: &CodeArtifact,
    report: &ExecutionReport,
    violations: &[Violation],
    inspector_findings: Option<&str>,
) -> String {
    let rendered = artifact.render();
    let errors = if report.captured_errors.is_empty() {
        "(no interpreter errors captured)".to_string()
    } else {
        report.captured_errors.join("\n")
    };
    let mut parts = vec![
        ("Failing code", rendered.as_str()),
        ("Captured errors", errors.as_str()),
    ];
    let lint_text;
    if !violations.is_empty() {
        lint_text = violations
            .iter()
            .map(Violation::message)
            .collect::<Vec<_>>()
            .join("\n");
        parts.push(("Rule violations", lint_text.as_str()));
    }
    if let Some(findings) = inspector_findings {
        parts.push(("Inspector findings on your previous fix", findings));
    }
    parts.push((
        "Instructions",
        "Repair the code. Reply with the complete corrected files in the same \
`FILE:`/fenced-block format, tester included.",
    ));
    render_messages(&parts)
}

/// Debugger system prompt: codebase plus the guidelines text verbatim.
pub fn debugger_system_prompt(codebase: &Codebase, guidelines_text: &str) -> String {
    let base = coder_system_prompt(codebase);
    if guidelines_text.is_empty() {
        base
    } else {
        format!("{base}\n# Guidelines\n\n{guidelines_text}\n")
    }
}

/// Number of extra attempts after the first failed backend call.
pub const BACKEND_RETRIES: usize = 2;

/// Calls the backend, retrying transport failures up to [`BACKEND_RETRIES`]
/// times. Exhausting the retries is an infrastructure error; the attempt
/// says nothing about the generated code.
pub fn call_with_retries(
    backend: &dyn ChatBackend,
    agent: AgentKind,
    system: &str,
    messages: &[ChatMessage],
) -> Result<String> {
    let mut last_err = String::new();
    for _ in 0..=BACKEND_RETRIES {
        match backend.complete(agent, system, messages) {
            Ok(completion) => return Ok(completion),
            Err(reason) => last_err = reason,
        }
    }
    Err(PipelineError::Backend {
        agent: agent.label().into(),
        attempts: BACKEND_RETRIES + 1,
        reason: last_err,
    })
}
