use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::artifact::CodeArtifact;
use crate::codebase::{join_rel, Codebase};
use crate::error::{PipelineError, Result};

/// How a tester is run. `run_command` is a whitespace-split template where
/// `{tester}` expands to the tester file name and `{workdir}` to the
/// sandbox directory; the process always starts with the sandbox directory
/// as its working directory.
#[derive(Debug, Clone)]
pub struct SandboxConfig {
    pub run_command: String,
    pub timeout_s: u64,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        SandboxConfig {
            run_command: "python3 {tester}".into(),
            timeout_s: 300,
        }
    }
}

/// Exit status used when the sandbox kills a run at the deadline, matching
/// the shell `timeout` convention.
pub const TIMEOUT_EXIT_STATUS: i32 = 124;

/// Captured output is cut at this many bytes per stream.
pub const OUTPUT_LIMIT_BYTES: usize = 64 * 1024;

/// Everything observed from one tester run.
///
/// Invariants: `timed_out` implies a nonzero `exit_status`, and
/// `captured_errors` is nonempty exactly when the run failed or the error
/// output matched the diagnostic pattern.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub exit_status: i32,
    pub stdout: String,
    pub stderr: String,
    pub duration_s: f64,
    pub timed_out: bool,
    pub workdir: PathBuf,
    pub captured_errors: Vec<String>,
}

impl ExecutionReport {
    pub fn succeeded(&self) -> bool {
        self.exit_status == 0 && !self.timed_out
    }
}

/// Runs the artifact's tester in a fresh temporary directory seeded with
/// the codebase files plus the artifact files (artifact wins on a name
/// collision, so a regenerated module shadows the original during the run).
///
/// The child environment is the parent's minus anything that looks like a
/// credential. A command that cannot be spawned at all is an infrastructure
/// error, not a report. The returned `TempDir` keeps the working directory
/// (and the output files the tester wrote) alive for validation.
pub fn execute_tester(
    codebase: &Codebase,
    artifact: &CodeArtifact,
    config: &SandboxConfig,
) -> Result<(ExecutionReport, tempfile::TempDir)> {
    let dir = tempfile::tempdir().map_err(|e| PipelineError::io("create sandbox dir", e))?;
    let workdir = dir.path().to_path_buf();

    codebase.save_dir(&workdir)?;
    for (name, text) in artifact.all_files() {
        let path = join_rel(&workdir, &name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| PipelineError::io(format!("create {}", parent.display()), e))?;
        }
        std::fs::write(&path, text)
            .map_err(|e| PipelineError::io(format!("write {}", path.display()), e))?;
    }

    let command_line = config
        .run_command
        .replace("{tester}", &artifact.tester_name)
        .replace("{workdir}", &workdir.to_string_lossy());
    let argv: Vec<&str> = command_line.split_whitespace().collect();
    if argv.is_empty() {
        return Err(PipelineError::Spawn {
            command: config.run_command.clone(),
            reason: "run command is empty".into(),
        });
    }

    let mut command = Command::new(argv[0]);
    command
        .args(&argv[1..])
        .current_dir(&workdir)
        .env_clear()
        .envs(std::env::vars().filter(|(name, _)| !is_credential_name(name)))
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());

    let start = Instant::now();
    let mut child = command.spawn().map_err(|e| PipelineError::Spawn {
        command: command_line.clone(),
        reason: e.to_string(),
    })?;

    // Drain both pipes on threads so a chatty tester cannot deadlock
    // against a full pipe buffer while we poll for exit.
    let stdout_pipe = child.stdout.take().expect("stdout was piped");
    let stderr_pipe = child.stderr.take().expect("stderr was piped");
    let stdout_thread = std::thread::spawn(move || read_all(stdout_pipe));
    let stderr_thread = std::thread::spawn(move || read_all(stderr_pipe));

    let deadline = Duration::from_secs(config.timeout_s);
    let mut timed_out = false;
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break status,
            Ok(None) => {
                if start.elapsed() >= deadline {
                    timed_out = true;
                    let _ = child.kill();
                    break child
                        .wait()
                        .map_err(|e| PipelineError::io("wait after kill", e))?;
                }
                std::thread::sleep(Duration::from_millis(10));
            }
            Err(e) => return Err(PipelineError::io("poll tester process", e)),
        }
    };
    let duration_s = start.elapsed().as_secs_f64();

    let stdout_bytes = stdout_thread.join().expect("stdout reader panicked");
    let stderr_bytes = stderr_thread.join().expect("stderr reader panicked");
    let stdout = hide_workdir(&truncate_output(&stdout_bytes), &workdir);
    let stderr = hide_workdir(&truncate_output(&stderr_bytes), &workdir);

    let exit_status = if timed_out {
        TIMEOUT_EXIT_STATUS
    } else {
        exit_code(&status)
    };

    let mut captured_errors = diagnostic_lines(&stderr);
    if timed_out {
        captured_errors.push(format!(
            "process timed out after {}s and was killed",
            config.timeout_s
        ));
    } else if exit_status != 0 && captured_errors.is_empty() {
        captured_errors = tail_lines(&stderr, 5);
        if captured_errors.is_empty() {
            captured_errors = tail_lines(&stdout, 5);
        }
        if captured_errors.is_empty() {
            captured_errors.push(format!(
                "process exited with status {exit_status} and produced no output"
            ));
        }
    }

    Ok((
        ExecutionReport {
            exit_status,
            stdout,
            stderr,
            duration_s,
            timed_out,
            workdir,
            captured_errors,
        },
        dir,
    ))
}

fn read_all(mut pipe: impl Read) -> Vec<u8> {
    let mut buf = Vec::new();
    let _ = pipe.read_to_end(&mut buf);
    buf
}

fn exit_code(status: &std::process::ExitStatus) -> i32 {
    if let Some(code) = status.code() {
        return code;
    }
    #[cfg(unix)]
    {
        use std::os::unix::process::ExitStatusExt;
        if let Some(signal) = status.signal() {
            return 128 + signal;
        }
    }
    -1
}

/// True for environment variable names that look like credentials; these
/// never reach the tester process.
pub fn is_credential_name(name: &str) -> bool {
    let upper = name.to_uppercase();
    ["_KEY", "_TOKEN", "_SECRET", "_PASSWORD"]
        .iter()
        .any(|suffix| upper.ends_with(suffix))
}

fn truncate_output(bytes: &[u8]) -> String {
    if bytes.len() <= OUTPUT_LIMIT_BYTES {
        return String::from_utf8_lossy(bytes).into_owned();
    }
    let mut text = String::from_utf8_lossy(&bytes[..OUTPUT_LIMIT_BYTES]).into_owned();
    text.push_str(&format!(
        "\n[truncated: output exceeded {OUTPUT_LIMIT_BYTES} bytes]\n"
    ));
    text
}

/// Replaces the randomly named sandbox directory with a stable token in
/// captured text. Interpreters print absolute script paths in tracebacks;
/// without this, two runs of the same artifact would produce different
/// diagnostics, and the difference would leak into agent prompts.
fn hide_workdir(text: &str, workdir: &Path) -> String {
    let mut out = text.replace(&*workdir.to_string_lossy(), "<workdir>");
    if let Ok(canonical) = workdir.canonicalize() {
        out = out.replace(&*canonical.to_string_lossy(), "<workdir>");
    }
    out
}

/// Lines of `stderr` that look like interpreter or compiler diagnostics:
/// Python tracebacks and exception lines, plus generic `error:` messages.
pub fn diagnostic_lines(stderr: &str) -> Vec<String> {
    let pattern = regex::Regex::new(
        r#"(?x)
        ^Traceback\ \(most\ recent\ call\ last\):
        | ^\s+File\ ".*",\ line\ \d+
        | ^[A-Za-z_][\w.]*(?:Error|Exception)\b
        | (?i)\berror:
        "#,
    )
    .expect("diagnostic pattern is valid");
    stderr
        .lines()
        .filter(|line| pattern.is_match(line))
        .map(str::to_string)
        .collect()
}

fn tail_lines(text: &str, count: usize) -> Vec<String> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let start = lines.len().saturating_sub(count);
    lines[start..].iter().map(|l| l.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentKind;
    use crate::artifact::Provenance;

    fn artifact(tester: &str) -> CodeArtifact {
        CodeArtifact {
            module_files: Default::default(),
            tester_name: "test_case.py".into(),
            tester_text: tester.into(),
            provenance: Provenance {
                agent: AgentKind::Generator,
                iteration: 1,
            },
        }
    }

    fn run(tester: &str) -> ExecutionReport {
        let config = SandboxConfig::default();
        let (report, _dir) = execute_tester(&Codebase::new(), &artifact(tester), &config).unwrap();
        report
    }

    #[test]
    fn clean_run_captures_output_and_no_errors() {
        let report = run("import sys\nprint('hello')\nsys.stderr.write('note\\n')\n");
        assert_eq!(report.exit_status, 0);
        assert!(report.succeeded());
        assert_eq!(report.stdout, "hello\n");
        assert_eq!(report.stderr, "note\n");
        assert!(report.captured_errors.is_empty());
    }

    #[test]
    fn traceback_lines_are_captured_verbatim() {
        let report = run("print(omega)\n");
        assert_eq!(report.exit_status, 1);
        assert!(!report.captured_errors.is_empty());
        let joined = report.captured_errors.join("\n");
        assert!(joined.contains("Traceback"), "{joined}");
        assert!(
            joined.contains("NameError: name 'omega' is not defined"),
            "{joined}"
        );
    }

    #[test]
    fn captured_diagnostics_are_identical_across_runs() {
        // The interpreter prints the absolute script path in tracebacks;
        // the sandbox masks its random directory so reruns match.
        let first = run("print(omega)\n");
        let second = run("print(omega)\n");
        assert_eq!(first.captured_errors, second.captured_errors);
        assert_eq!(first.stderr, second.stderr);
        assert!(
            first.stderr.contains("<workdir>"),
            "expected masked path in {}",
            first.stderr
        );
    }

    #[test]
    fn nonzero_exit_without_diagnostics_falls_back_to_stderr_tail() {
        let report =
            run("import sys\nsys.stderr.write('something went sideways\\n')\nsys.exit(3)\n");
        assert_eq!(report.exit_status, 3);
        assert_eq!(report.captured_errors, vec!["something went sideways"]);
    }

    #[test]
    fn silent_failure_still_yields_a_captured_error() {
        let report = run("raise SystemExit(2)\n");
        assert_eq!(report.exit_status, 2);
        assert!(!report.captured_errors.is_empty());
    }

    #[test]
    fn timeout_kills_the_run_and_reports_exit_124() {
        let config = SandboxConfig {
            timeout_s: 1,
            ..SandboxConfig::default()
        };
        let tester = artifact("import time\ntime.sleep(30)\n");
        let start = Instant::now();
        let (report, _dir) = execute_tester(&Codebase::new(), &tester, &config).unwrap();
        assert!(start.elapsed() < Duration::from_secs(10));
        assert!(report.timed_out);
        assert_eq!(report.exit_status, TIMEOUT_EXIT_STATUS);
        assert!(!report.succeeded());
        assert!(report.captured_errors.iter().any(|e| e.contains("timed out")));
    }

    #[test]
    fn long_output_is_truncated_with_a_marker() {
        let report = run("print('a' * 100000)\n");
        assert!(report.stdout.len() < 100000);
        assert!(report.stdout.contains("[truncated: output exceeded"));
    }

    #[test]
    fn credential_names_are_recognized_and_absent_from_the_child() {
        for name in ["LLM_API_KEY", "MY_TOKEN", "DB_PASSWORD", "a_secret"] {
            assert!(is_credential_name(name), "{name}");
        }
        for name in ["PATH", "HOME", "KEYBOARD", "TOKENIZER"] {
            assert!(!is_credential_name(name), "{name}");
        }
        // The child sees a filtered copy of our environment: nothing
        // credential-shaped, but ordinary variables like PATH intact.
        let report = run(
            "import os\nleaks = sorted(k for k in os.environ if __import__('re').search(r'_(KEY|TOKEN|SECRET|PASSWORD)$', k.upper()))\nprint(leaks)\nprint('PATH' in os.environ)\n",
        );
        assert!(report.stdout.contains("[]"), "{}", report.stdout);
        assert!(report.stdout.contains("True"), "{}", report.stdout);
    }

    #[test]
    fn artifact_files_shadow_codebase_files_inside_the_sandbox_only() {
        let codebase = Codebase::from_files([("module.py", "VALUE = 'original'\n")]);
        let before = codebase.checksums();
        let mut art = artifact("import module\nprint(module.VALUE)\nopen('junk.txt', 'w').write('x')\n");
        art.module_files
            .insert("module.py".into(), "VALUE = 'patched'\n".into());
        let config = SandboxConfig::default();
        let (report, _dir) = execute_tester(&codebase, &art, &config).unwrap();
        assert_eq!(report.stdout, "patched\n");
        assert_eq!(codebase.checksums(), before);
    }

    #[test]
    fn unspawnable_command_is_an_infrastructure_error() {
        let config = SandboxConfig {
            run_command: "definitely_not_a_real_binary_xyz {tester}".into(),
            ..SandboxConfig::default()
        };
        let err = execute_tester(&Codebase::new(), &artifact("pass\n"), &config).unwrap_err();
        assert!(err.is_infrastructure());
        assert!(matches!(err, PipelineError::Spawn { .. }));
    }

    #[test]
    fn diagnostic_pattern_catches_compiler_style_errors() {
        let lines = diagnostic_lines("main.c:3: error: expected ';'\nall fine here\n");
        assert_eq!(lines, vec!["main.c:3: error: expected ';'"]);
        assert!(diagnostic_lines("ValueError: bad shape\n").len() == 1);
        assert!(diagnostic_lines("ordinary log line\n").is_empty());
    }
}
