use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use lbm::manifest::sha256_hex;

use crate::error::{PipelineError, Result};

/// In-memory snapshot of the target codebase: relative path -> file text.
///
/// Paths use forward slashes regardless of platform so prompts and
/// checksums are stable. The map is ordered, so every rendering and
/// checksum below is deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebase {
    pub files: BTreeMap<String, String>,
}

impl Codebase {
    pub fn new() -> Self {
        Codebase {
            files: BTreeMap::new(),
        }
    }

    pub fn from_files<I, K, V>(entries: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Codebase {
            files: entries
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    /// Reads every regular file under `root`, keyed by its relative path.
    /// Hidden files and directories (leading dot) are skipped.
    pub fn load_dir(root: &Path) -> Result<Self> {
        let mut files = BTreeMap::new();
        let mut stack = vec![root.to_path_buf()];
        while let Some(dir) = stack.pop() {
            let entries = fs::read_dir(&dir).map_err(|e| PipelineError::CodebaseLoad {
                path: dir.clone(),
                reason: e.to_string(),
            })?;
            for entry in entries {
                let entry = entry.map_err(|e| PipelineError::CodebaseLoad {
                    path: dir.clone(),
                    reason: e.to_string(),
                })?;
                let path = entry.path();
                let name = entry.file_name();
                if name.to_string_lossy().starts_with('.') {
                    continue;
                }
                if path.is_dir() {
                    stack.push(path);
                } else {
                    let text = fs::read_to_string(&path).map_err(|e| {
                        PipelineError::CodebaseLoad {
                            path: path.clone(),
                            reason: e.to_string(),
                        }
                    })?;
                    let rel = path
                        .strip_prefix(root)
                        .expect("walked path is under root")
                        .components()
                        .map(|c| c.as_os_str().to_string_lossy().into_owned())
                        .collect::<Vec<_>>()
                        .join("/");
                    files.insert(rel, text);
                }
            }
        }
        Ok(Codebase { files })
    }

    /// Writes every file under `root`, creating directories as needed.
    pub fn save_dir(&self, root: &Path) -> Result<()> {
        for (rel, text) in &self.files {
            let path = join_rel(root, rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)
                    .map_err(|e| PipelineError::io(format!("create {}", parent.display()), e))?;
            }
            fs::write(&path, text)
                .map_err(|e| PipelineError::io(format!("write {}", path.display()), e))?;
        }
        Ok(())
    }

    /// Renders the whole codebase for an agent prompt. Each file is framed
    /// by a header line so the model can address files by name.
    pub fn render_prompt(&self) -> String {
        let mut out = String::new();
        for (name, text) in &self.files {
            out.push_str("=== FILE: ");
            out.push_str(name);
            out.push_str(" ===\n");
            out.push_str(text);
            if !text.ends_with('\n') {
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }

    /// Per-file SHA-256 checksums, used to assert sandbox isolation: a run
    /// must leave the canonical codebase byte-identical.
    pub fn checksums(&self) -> BTreeMap<String, String> {
        self.files
            .iter()
            .map(|(name, text)| (name.clone(), sha256_hex(text.as_bytes())))
            .collect()
    }

    /// True if `ident` appears as a whole word in any file.
    pub fn contains_word(&self, ident: &str) -> bool {
        let pattern = regex::Regex::new(&format!(r"\b{}\b", regex::escape(ident)))
            .expect("escaped identifier is a valid pattern");
        self.files.values().any(|text| pattern.is_match(text))
    }
}

impl Default for Codebase {
    fn default() -> Self {
        Codebase::new()
    }
}

/// Joins a forward-slash relative path onto `root` component by component.
pub(crate) fn join_rel(root: &Path, rel: &str) -> PathBuf {
    let mut path = root.to_path_buf();
    for part in rel.split('/') {
        path.push(part);
    }
    path
}
