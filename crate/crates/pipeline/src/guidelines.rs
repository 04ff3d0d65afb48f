use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;

use crate::codebase::Codebase;
use crate::error::{PipelineError, Result};

/// One guideline rule.
///
/// The on-disk format is line oriented: `KIND<TAB>ID<TAB>PAYLOAD`, with
/// `#` comments and blank lines ignored. The payload grammar depends on
/// the kind:
///
///   prompt      sentence injected into coder prompts
///   advisory    sentence kept for the record but not rendered; these are
///               rules that did not change model behavior and were replaced
///               by a remediation
///   lint        `PATTERN<TAB>MESSAGE`, a regex applied to artifact lines
///   remediation `rename FROM -> TO` or `placeholder NAME -> TARGET_FILE`,
///               a mechanical edit applied to the codebase itself
#[derive(Debug, Clone)]
pub struct Rule {
    pub id: String,
    pub kind: RuleKind,
}

#[derive(Debug, Clone)]
pub enum RuleKind {
    Prompt { text: String },
    Advisory { text: String },
    Lint { pattern: Regex, message: String },
    Remediation { action: Remediation },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Remediation {
    Rename { from: String, to: String },
    Placeholder { name: String, target_file: String },
}

/// A lint hit. `line` is 1-based within `file`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Violation {
    pub file: String,
    pub line: usize,
    pub rule_id: String,
    pub message: String,
}

impl Violation {
    pub fn message(&self) -> String {
        format!("{}:{}: {}: {}", self.file, self.line, self.rule_id, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

/// Sentences that must ship with every rule file; experience showed each
/// one prevents a recurring class of generated-code failure.
const REQUIRED_PROMPT_RULES: [(&str, &str); 1] = [(
    "vtk-output",
    "You must produce the .vtk, .vtu files for evaluation",
)];

const REQUIRED_LINT_RULES: [(&str, &str, &str); 2] = [
    (
        "no-einsum",
        r"\beinsum\s*\(",
        "Do not use the function einsum()",
    ),
    (
        "no-jmp-import",
        r"^\s*(import\s+jmp\b|from\s+jmp\b)",
        "Do not import library jmp",
    ),
];

impl RuleSet {
    /// The built-in rule set: the three required rules, the advisory
    /// sentences that preceded the remediations, and the two remediations.
    pub fn default_rules() -> Self {
        let text = default_rules_text();
        parse_rules(&text, Path::new("<built-in>")).expect("built-in rules parse")
    }

    /// Parses a rule file and appends any of the required rules the file
    /// omitted, so a minimal site file still carries the defaults.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::io(format!("read {}", path.display()), e))?;
        let mut set = parse_rules(&text, path)?;
        set.append_required();
        Ok(set)
    }

    fn append_required(&mut self) {
        for (id, text) in REQUIRED_PROMPT_RULES {
            if !self.has(id) {
                self.rules.push(Rule {
                    id: id.into(),
                    kind: RuleKind::Prompt { text: text.into() },
                });
            }
        }
        for (id, pattern, message) in REQUIRED_LINT_RULES {
            if !self.has(id) {
                self.rules.push(Rule {
                    id: id.into(),
                    kind: RuleKind::Lint {
                        pattern: Regex::new(pattern).expect("built-in pattern is valid"),
                        message: message.into(),
                    },
                });
            }
        }
    }

    pub fn has(&self, id: &str) -> bool {
        self.rules.iter().any(|r| r.id == id)
    }

    /// Applies every lint rule to every file, line by line. Hits come back
    /// sorted by (file, line, rule id) so reports are deterministic.
    pub fn lint(&self, files: &BTreeMap<String, String>) -> Vec<Violation> {
        let mut hits = Vec::new();
        for (file, text) in files {
            for (index, line) in text.lines().enumerate() {
                for rule in &self.rules {
                    let RuleKind::Lint { pattern, message } = &rule.kind else {
                        continue;
                    };
                    if pattern.is_match(line) {
                        hits.push(Violation {
                            file: file.clone(),
                            line: index + 1,
                            rule_id: rule.id.clone(),
                            message: message.clone(),
                        });
                    }
                }
            }
        }
        hits.sort_by(|a, b| {
            (&a.file, a.line, &a.rule_id).cmp(&(&b.file, b.line, &b.rule_id))
        });
        hits
    }

    pub fn remediations(&self) -> impl Iterator<Item = (&str, &Remediation)> {
        self.rules.iter().filter_map(|r| match &r.kind {
            RuleKind::Remediation { action } => Some((r.id.as_str(), action)),
            _ => None,
        })
    }

    /// Renders the prompt text handed to agents: prompt sentences and lint
    /// messages as one numbered list, in file order. Advisory sentences and
    /// remediations are deliberately absent; the former are inert, the
    /// latter act on the codebase, not on the model. An empty set renders
    /// to an empty string.
    pub fn render_guidelines(&self) -> String {
        let mut out = String::new();
        let mut number = 0;
        for rule in &self.rules {
            let sentence = match &rule.kind {
                RuleKind::Prompt { text } => text,
                RuleKind::Lint { message, .. } => message,
                _ => continue,
            };
            number += 1;
            out.push_str(&format!("{number}. {sentence}\n"));
        }
        out
    }
}

/// Serializes a rule set back to the line format `load` accepts.
pub fn render_rules(set: &RuleSet) -> String {
    let mut out = String::new();
    for rule in &set.rules {
        match &rule.kind {
            RuleKind::Prompt { text } => {
                out.push_str(&format!("prompt\t{}\t{}\n", rule.id, text));
            }
            RuleKind::Advisory { text } => {
                out.push_str(&format!("advisory\t{}\t{}\n", rule.id, text));
            }
            RuleKind::Lint { pattern, message } => {
                out.push_str(&format!(
                    "lint\t{}\t{}\t{}\n",
                    rule.id,
                    pattern.as_str(),
                    message
                ));
            }
            RuleKind::Remediation { action } => match action {
                Remediation::Rename { from, to } => {
                    out.push_str(&format!(
                        "remediation\t{}\trename {} -> {}\n",
                        rule.id, from, to
                    ));
                }
                Remediation::Placeholder { name, target_file } => {
                    out.push_str(&format!(
                        "remediation\t{}\tplaceholder {} -> {}\n",
                        rule.id, name, target_file
                    ));
                }
            },
        }
    }
    out
}

/// The built-in rules in file format. Shipped as the default `--guidelines`
/// content and kept in one place so tests can round-trip it.
pub fn default_rules_text() -> String {
    let mut out = String::new();
    out.push_str("# Guidelines: KIND<TAB>ID<TAB>PAYLOAD\n");
    out.push_str("prompt\tvtk-output\tYou must produce the .vtk, .vtu files for evaluation\n");
    out.push_str("lint\tno-einsum\t\\beinsum\\s*\\(\tDo not use the function einsum()\n");
    out.push_str(
        "lint\tno-jmp-import\t^\\s*(import\\s+jmp\\b|from\\s+jmp\\b)\tDo not import library jmp\n",
    );
    out.push_str("# Sentences that did not change behavior; kept for the record.\n");
    out.push_str("advisory\tomega-provided\tThe variable omega must be provided.\n");
    out.push_str("advisory\tomega-float\tThe constant omega must be a float.\n");
    out.push_str(
        "advisory\tno-periodicbc-import\tYou cannot import PeriodicBC from src/boundary_conditions.py.\n",
    );
    out.push_str("# Mechanical codebase edits that replaced the sentences above.\n");
    out.push_str("remediation\trename-omega\trename omega -> freq_val\n");
    out.push_str(
        "remediation\tplaceholder-periodicbc\tplaceholder PeriodicBC -> src/boundary_conditions.py\n",
    );
    out
}

/// Parses the line format. Errors name the file and 1-based line.
pub fn parse_rules(text: &str, path: &Path) -> Result<RuleSet> {
    let fail = |line: usize, reason: String| PipelineError::Guidelines {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut rules: Vec<Rule> = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(fail(
                line_no,
                format!("expected KIND<TAB>ID<TAB>PAYLOAD, got {} fields", fields.len()),
            ));
        }
        let (kind_token, id) = (fields[0], fields[1]);
        if id.is_empty() {
            return Err(fail(line_no, "empty rule id".into()));
        }
        if rules.iter().any(|r| r.id == id) {
            return Err(fail(line_no, format!("duplicate rule id {id}")));
        }
        let kind = match kind_token {
            "prompt" | "advisory" => {
                let text = fields[2..].join("\t");
                if text.is_empty() {
                    return Err(fail(line_no, format!("{kind_token} rule has empty text")));
                }
                if kind_token == "prompt" {
                    RuleKind::Prompt { text }
                } else {
                    RuleKind::Advisory { text }
                }
            }
            "lint" => {
                if fields.len() != 4 {
                    return Err(fail(
                        line_no,
                        "lint payload must be PATTERN<TAB>MESSAGE".into(),
                    ));
                }
                let pattern = Regex::new(fields[2])
                    .map_err(|e| fail(line_no, format!("bad lint pattern: {e}")))?;
                RuleKind::Lint {
                    pattern,
                    message: fields[3].to_string(),
                }
            }
            "remediation" => {
                let payload = fields[2..].join("\t");
                let action = parse_remediation(&payload)
                    .map_err(|reason| fail(line_no, reason))?;
                RuleKind::Remediation { action }
            }
            other => return Err(fail(line_no, format!("unknown rule kind {other}"))),
        };
        rules.push(Rule {
            id: id.to_string(),
            kind,
        });
    }
    Ok(RuleSet { rules })
}

fn parse_remediation(payload: &str) -> std::result::Result<Remediation, String> {
    let (left, right) = payload
        .split_once("->")
        .ok_or_else(|| format!("remediation payload {payload:?} has no '->'"))?;
    let right = right.trim();
    let mut left_tokens = left.split_whitespace();
    let action = left_tokens
        .next()
        .ok_or_else(|| "remediation payload is empty".to_string())?;
    let subject = left_tokens.next().ok_or_else(|| {
        format!("remediation {action} needs a subject before '->'")
    })?;
    if left_tokens.next().is_some() {
        return Err(format!("remediation payload {payload:?} has extra tokens"));
    }
    if right.is_empty() {
        return Err(format!("remediation {action} needs a target after '->'"));
    }
    match action {
        "rename" => Ok(Remediation::Rename {
            from: subject.to_string(),
            to: right.to_string(),
        }),
        "placeholder" => Ok(Remediation::Placeholder {
            name: subject.to_string(),
            target_file: right.to_string(),
        }),
        other => Err(format!("unknown remediation action {other}")),
    }
}

/// Renames `from` to `to` as a whole word across every codebase file.
///
/// Renaming an identifier that never occurs is a no-op, which makes a rule
/// set idempotent. When `from` does occur, a `to` that also occurs is
/// rejected: the rename would silently merge two identifiers.
pub fn remediate_rename(codebase: &Codebase, from: &str, to: &str) -> Result<Codebase> {
    if from == to {
        return Err(PipelineError::Rename {
            from: from.into(),
            to: to.into(),
            reason: "source and target are the same identifier".into(),
        });
    }
    if !codebase.contains_word(from) {
        return Ok(codebase.clone());
    }
    if codebase.contains_word(to) {
        return Err(PipelineError::Rename {
            from: from.into(),
            to: to.into(),
            reason: format!("{to} already occurs in the codebase"),
        });
    }
    let pattern = Regex::new(&format!(r"\b{}\b", regex::escape(from)))
        .expect("escaped identifier is a valid pattern");
    let files = codebase
        .files
        .iter()
        .map(|(name, text)| (name.clone(), pattern.replace_all(text, to).into_owned()))
        .collect();
    Ok(Codebase { files })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectOutcome {
    Injected,
    AlreadyPresent,
}

/// Appends an empty-class placeholder named `name` to `target_file`.
///
/// Idempotent: if the identifier already occurs in the target file the
/// codebase is returned unchanged and the caller gets `AlreadyPresent` to
/// warn about. A missing target file is created.
pub fn inject_placeholder(
    codebase: &Codebase,
    name: &str,
    target_file: &str,
) -> (Codebase, InjectOutcome) {
    let pattern = Regex::new(&format!(r"\b{}\b", regex::escape(name)))
        .expect("escaped identifier is a valid pattern");
    if let Some(existing) = codebase.files.get(target_file) {
        if pattern.is_match(existing) {
            return (codebase.clone(), InjectOutcome::AlreadyPresent);
        }
    }
    let mut files = codebase.files.clone();
    let entry = files.entry(target_file.to_string()).or_default();
    if !entry.is_empty() && !entry.ends_with("\n\n") {
        if !entry.ends_with('\n') {
            entry.push('\n');
        }
        entry.push('\n');
    }
    entry.push_str(&format!("class {name}:\n    pass\n"));
    (Codebase { files }, InjectOutcome::Injected)
}

/// Applies every remediation rule in order, collecting a human-readable
/// note per rule. Rename conflicts abort; placeholder re-injection is a
/// warning, not an error.
pub fn apply_remediations(codebase: &Codebase, set: &RuleSet) -> Result<(Codebase, Vec<String>)> {
    let mut current = codebase.clone();
    let mut notes = Vec::new();
    for (id, action) in set.remediations() {
        match action {
            Remediation::Rename { from, to } => {
                if current.contains_word(from) {
                    current = remediate_rename(&current, from, to)?;
                    notes.push(format!("{id}: renamed {from} to {to}"));
                } else {
                    notes.push(format!("{id}: {from} does not occur, skipped"));
                }
            }
            Remediation::Placeholder { name, target_file } => {
                let (next, outcome) = inject_placeholder(&current, name, target_file);
                current = next;
                match outcome {
                    InjectOutcome::Injected => {
                        notes.push(format!("{id}: injected placeholder {name} into {target_file}"));
                    }
                    InjectOutcome::AlreadyPresent => {
                        notes.push(format!(
                            "{id}: warning: {name} already present in {target_file}, skipped"
                        ));
                    }
                }
            }
        }
    }
    Ok((current, notes))
}
