use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::agents::{AgentKind, ChatMessage};

/// A chat-completion backend. `Err` carries a transport-level reason
/// (connection, HTTP status, malformed response body, missing fixture);
/// retry policy lives with the caller, not the backend.
pub trait ChatBackend {
    fn complete(
        &self,
        agent: AgentKind,
        system: &str,
        messages: &[ChatMessage],
    ) -> Result<String, String>;
}

/// Replays canned completions from a fixture directory.
///
/// The `n`-th call for an agent reads `<label>_<n>.txt` (1-based); if that
/// file does not exist, `<label>_default.txt` is used instead. Counters are
/// per-agent and start fresh with each `ScriptedBackend`, so one instance
/// per pipeline attempt gives bit-reproducible transcripts.
pub struct ScriptedBackend {
    dir: PathBuf,
    counters: Mutex<BTreeMap<&'static str, usize>>,
}

impl ScriptedBackend {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ScriptedBackend {
            dir: dir.into(),
            counters: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(
        &self,
        agent: AgentKind,
        _system: &str,
        _messages: &[ChatMessage],
    ) -> Result<String, String> {
        let iteration = {
            let mut counters = self.counters.lock().expect("counter lock");
            let slot = counters.entry(agent.label()).or_insert(0);
            *slot += 1;
            *slot
        };
        let exact = self.dir.join(format!("{}_{}.txt", agent.label(), iteration));
        let fallback = self.dir.join(format!("{}_default.txt", agent.label()));
        let path = if exact.is_file() { exact } else { fallback };
        std::fs::read_to_string(&path).map_err(|e| {
            format!(
                "fixture {} (call {} for {}): {}",
                path.display(),
                iteration,
                agent.label(),
                e
            )
        })
    }
}

/// Talks to an OpenAI-style chat-completions endpoint.
///
/// The request body is `{"model": ..., "messages": [...]}` with the system
/// prompt as the first message; the reply text is the first choice's
/// message content. Credentials come from the environment so they never
/// appear in configs or transcripts.
pub struct HttpBackend {
    endpoint: String,
    api_key: String,
    model: String,
}

/// Environment variable naming the chat-completions URL.
pub const ENV_API_URL: &str = "LLM_API_URL";
/// Environment variable holding the bearer token.
pub const ENV_API_KEY: &str = "LLM_API_KEY";
/// Environment variable naming the model; a CLI flag may override it.
pub const ENV_MODEL: &str = "LLM_MODEL";

impl HttpBackend {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: impl Into<String>,
        model: impl Into<String>,
    ) -> Self {
        HttpBackend {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            model: model.into(),
        }
    }

    /// Builds a backend from `LLM_API_URL`, `LLM_API_KEY`, and `LLM_MODEL`.
    /// `model_override` wins over the environment. A missing variable is a
    /// configuration error, reported by name.
    pub fn from_env(model_override: Option<&str>) -> Result<Self, String> {
        let endpoint = std::env::var(ENV_API_URL)
            .map_err(|_| format!("{ENV_API_URL} is not set"))?;
        let api_key = std::env::var(ENV_API_KEY)
            .map_err(|_| format!("{ENV_API_KEY} is not set"))?;
        let model = match model_override {
            Some(m) => m.to_string(),
            None => std::env::var(ENV_MODEL).map_err(|_| {
                format!("{ENV_MODEL} is not set and no model flag was given")
            })?,
        };
        Ok(HttpBackend::new(endpoint, api_key, model))
    }

    pub fn request_body(&self, system: &str, messages: &[ChatMessage]) -> serde_json::Value {
        let mut all = vec![serde_json::json!({"role": "system", "content": system})];
        for m in messages {
            all.push(serde_json::json!({"role": m.role, "content": m.content}));
        }
        serde_json::json!({"model": self.model, "messages": all})
    }

    /// Pulls the completion text out of a response body.
    pub fn extract_completion(body: &serde_json::Value) -> Result<String, String> {
        body.get("choices")
            .and_then(|c| c.get(0))
            .and_then(|c| c.get("message"))
            .and_then(|m| m.get("content"))
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| "response has no choices[0].message.content".to_string())
    }
}

impl ChatBackend for HttpBackend {
    fn complete(
        &self,
        _agent: AgentKind,
        system: &str,
        messages: &[ChatMessage],
    ) -> Result<String, String> {
        let body = self.request_body(system, messages);
        let response = ureq::post(&self.endpoint)
            .set("Authorization", &format!("Bearer {}", self.api_key))
            .set("Content-Type", "application/json")
            .send_json(body)
            .map_err(|e| match e {
                ureq::Error::Status(code, _) => format!("HTTP {code} from {}", self.endpoint),
                ureq::Error::Transport(t) => format!("transport error: {t}"),
            })?;
        let parsed: serde_json::Value = response
            .into_json()
            .map_err(|e| format!("response is not JSON: {e}"))?;
        Self::extract_completion(&parsed)
    }
}
