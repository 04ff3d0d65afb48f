use std::path::Path;

use crate::artifact::CodeArtifact;
use crate::codebase::{join_rel, Codebase};
use crate::error::{PipelineError, Result};

/// Where merged modules land inside the codebase tree. Keeping generated
/// code in its own directory makes a merge trivially reviewable and keeps
/// name collisions with hand-written files impossible in the common case.
pub const MERGE_SUBDIR: &str = "generated";

fn target_name(subdir: &str, name: &str) -> String {
    if subdir.is_empty() {
        name.to_string()
    } else {
        format!("{subdir}/{name}")
    }
}

/// Merges the artifact's module files (not the tester) into a copy of the
/// codebase under `subdir`. Any collision with an existing file aborts the
/// whole merge before anything is copied; file bytes are preserved exactly.
pub fn merge_artifact(
    codebase: &Codebase,
    artifact: &CodeArtifact,
    subdir: &str,
) -> Result<Codebase> {
    for name in artifact.module_files.keys() {
        let target = target_name(subdir, name);
        if codebase.files.contains_key(&target) {
            return Err(PipelineError::Merge {
                reason: format!("{target} already exists in the codebase"),
            });
        }
    }
    let mut merged = codebase.clone();
    for (name, text) in &artifact.module_files {
        merged.files.insert(target_name(subdir, name), text.clone());
    }
    Ok(merged)
}

/// Disk variant of [`merge_artifact`]: writes module files under
/// `root/subdir`. Collisions are checked first; if a later write fails,
/// files already written by this call are removed so the tree is left as
/// found. Returns the relative paths written.
pub fn merge_into_dir(artifact: &CodeArtifact, root: &Path, subdir: &str) -> Result<Vec<String>> {
    let targets: Vec<(String, &String)> = artifact
        .module_files
        .iter()
        .map(|(name, text)| (target_name(subdir, name), text))
        .collect();
    for (rel, _) in &targets {
        if join_rel(root, rel).exists() {
            return Err(PipelineError::Merge {
                reason: format!("{rel} already exists under {}", root.display()),
            });
        }
    }
    let mut written: Vec<String> = Vec::new();
    for (rel, text) in &targets {
        let path = join_rel(root, rel);
        let result = path
            .parent()
            .map(std::fs::create_dir_all)
            .unwrap_or(Ok(()))
            .and_then(|_| std::fs::write(&path, text));
        if let Err(e) = result {
            for done in &written {
                let _ = std::fs::remove_file(join_rel(root, done));
            }
            return Err(PipelineError::io(format!("write {}", path.display()), e));
        }
        written.push(rel.clone());
    }
    Ok(written)
}
