use std::path::PathBuf;

/// Errors raised by the pipeline crate.
///
/// `Backend` and `Io`/`Spawn` are infrastructure failures: the harness could
/// not do its job and the attempt result says nothing about the generated
/// code. Everything else describes a malformed input or artifact.
#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("backend call failed for {agent} after {attempts} attempts: {reason}")]
    Backend {
        agent: String,
        attempts: usize,
        reason: String,
    },

    #[error("completion from {agent} has no parseable code blocks: {reason}")]
    ArtifactFormat { agent: String, reason: String },

    #[error("inspection verdict from {agent} is malformed: first line {first_line:?}")]
    VerdictFormat { agent: String, first_line: String },

    #[error("guidelines file {path}: line {line}: {reason}")]
    Guidelines {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("rename {from} -> {to} rejected: {reason}")]
    Rename {
        from: String,
        to: String,
        reason: String,
    },

    #[error("merge rejected: {reason}")]
    Merge { reason: String },

    #[error("failed to spawn tester command {command:?}: {reason}")]
    Spawn { command: String, reason: String },

    #[error("codebase path {path}: {reason}")]
    CodebaseLoad { path: PathBuf, reason: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Sim(#[from] lbm::Error),
}

impl PipelineError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        PipelineError::Io {
            context: context.into(),
            source,
        }
    }

    /// True when the failure is in the harness (network, filesystem, spawn),
    /// not in the generated code. Callers map these to a distinct exit code.
    pub fn is_infrastructure(&self) -> bool {
        matches!(
            self,
            PipelineError::Backend { .. }
                | PipelineError::Spawn { .. }
                | PipelineError::Io { .. }
                | PipelineError::CodebaseLoad { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;
