//! Multi-agent pipeline that generates, inspects, executes, debugs, and
//! merges solver modules against a target codebase.
//!
//! The flow mirrors a code-review loop: a generator drafts a module plus a
//! tester script, an inspector checks the draft against the task equations,
//! a sandbox runs the tester, a debugger repairs interpreter errors and rule
//! violations, a second inspector vets each repair, and a validator compares
//! the produced fields against closed-form or reference solutions before the
//! packer merges the module into the codebase.

pub mod agents;
pub mod artifact;
pub mod backend;
pub mod codebase;
pub mod error;
pub mod guidelines;
pub mod machine;
pub mod oracle;
pub mod packer;
pub mod sandbox;

pub use agents::{AgentKind, ChatMessage, TranscriptEntry};
pub use artifact::CodeArtifact;
pub use backend::{ChatBackend, HttpBackend, ScriptedBackend};
pub use codebase::Codebase;
pub use error::PipelineError;
pub use guidelines::{Rule, RuleKind, RuleSet, Violation};
pub use machine::{FailureKind, Limits, Outcome, PipelineConfig, PipelineRun, Stage};
pub use oracle::{CheckResult, ErrorClass, ValidationReport};
pub use sandbox::ExecutionReport;
