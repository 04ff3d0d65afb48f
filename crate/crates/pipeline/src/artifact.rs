use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agents::AgentKind;
use crate::error::{PipelineError, Result};

/// Where an artifact came from: which agent produced it on which call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub agent: AgentKind,
    pub iteration: usize,
}

/// One generated module: solver source files plus the tester script that
/// exercises them. The tester is kept apart from the module files because
/// only the module files are merged into the codebase at the end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeArtifact {
    pub module_files: BTreeMap<String, String>,
    pub tester_name: String,
    pub tester_text: String,
    pub provenance: Provenance,
}

impl CodeArtifact {
    /// All files of the artifact, tester included, keyed by name.
    pub fn all_files(&self) -> BTreeMap<String, String> {
        let mut files = self.module_files.clone();
        files.insert(self.tester_name.clone(), self.tester_text.clone());
        files
    }

    /// Renders the artifact in the same wire format `parse_artifact`
    /// accepts, so a failing artifact can be quoted back to an agent.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, text) in self.all_files() {
            out.push_str("FILE: ");
            out.push_str(&name);
            out.push('\n');
            out.push_str("```\n");
            out.push_str(&text);
            if !text.ends_with('\n') {
                out.push('\n');
            }
            out.push_str("```\n\n");
        }
        out
    }
}

/// Parses an agent completion into an artifact.
///
/// The expected shape is one or more `FILE: relative/name.py` header lines,
/// each followed by a fenced code block holding that file's source. Prose
/// between blocks is ignored and the language tag on the fence is optional.
/// A block must name the tester file (`tester_name`) or the completion is
/// rejected; duplicate or empty file names are rejected too.
pub fn parse_artifact(
    completion: &str,
    tester_name: &str,
    provenance: Provenance,
) -> Result<CodeArtifact> {
    let fail = |reason: String| PipelineError::ArtifactFormat {
        agent: provenance.agent.label().to_string(),
        reason,
    };
    let mut files: BTreeMap<String, String> = BTreeMap::new();

    let mut lines = completion.lines().peekable();
    while let Some(line) = lines.next() {
        let Some(raw_name) = file_header(line) else {
            continue;
        };
        if raw_name.is_empty() {
            return Err(fail("FILE: header with empty name".into()));
        }
        // Skip blank lines between the header and its fence.
        while matches!(lines.peek(), Some(l) if l.trim().is_empty()) {
            lines.next();
        }
        match lines.peek() {
            Some(l) if l.trim_start().starts_with("```") => {
                lines.next();
            }
            _ => {
                return Err(fail(format!(
                    "FILE: {raw_name} is not followed by a fenced code block"
                )));
            }
        }
        let mut body = String::new();
        let mut closed = false;
        for line in lines.by_ref() {
            if line.trim() == "```" {
                closed = true;
                break;
            }
            body.push_str(line);
            body.push('\n');
        }
        if !closed {
            return Err(fail(format!("code block for {raw_name} is never closed")));
        }
        if files.insert(raw_name.to_string(), body).is_some() {
            return Err(fail(format!("file {raw_name} appears twice")));
        }
    }

    if files.is_empty() {
        return Err(fail("no code blocks found".into()));
    }
    let Some(tester_text) = files.remove(tester_name) else {
        return Err(fail(format!(
            "tester file {tester_name} missing from completion"
        )));
    };

    Ok(CodeArtifact {
        module_files: files,
        tester_name: tester_name.to_string(),
        tester_text,
        provenance,
    })
}

/// Recognizes a `FILE: name` header line, tolerating `**FILE: name**`
/// markdown bolding and surrounding whitespace.
fn file_header(line: &str) -> Option<&str> {
    let trimmed = line.trim().trim_matches('*').trim();
    let rest = trimmed.strip_prefix("FILE:")?;
    Some(rest.trim())
}
