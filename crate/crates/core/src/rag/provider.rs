use std::time::{Duration, Instant};

use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::mock::MockGateway;
use super::PromptBundle;
use crate::error::{Error, Result};
use crate::net::RetryPolicy;

/// Provider names starting with this prefix select a built-in mock.
pub const MOCK_PREFIX: &str = "mock:";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub name: String,
    #[serde(default)]
    pub endpoint_url: String,
    #[serde(default)]
    pub model: String,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub credential_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_parallel")]
    pub max_parallel: usize,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
}

fn default_timeout() -> f64 {
    120.0
}

fn default_parallel() -> usize {
    4
}

fn default_attempts() -> u32 {
    3
}

impl ProviderConfig {
    pub fn mock(name: &str) -> ProviderConfig {
        ProviderConfig {
            name: name.to_string(),
            endpoint_url: String::new(),
            model: String::new(),
            credential_env: None,
            timeout_secs: default_timeout(),
            max_parallel: default_parallel(),
            max_attempts: default_attempts(),
        }
    }

    pub fn is_mock(&self) -> bool {
        self.name.starts_with(MOCK_PREFIX)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("provider without a name".into()));
        }
        if self.is_mock() {
            return Ok(());
        }
        if self.endpoint_url.is_empty() || self.model.is_empty() {
            return Err(Error::Config(format!(
                "provider {} needs endpoint_url and model",
                self.name
            )));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(Error::Config(format!(
                "provider {}: timeout_secs must be positive",
                self.name
            )));
        }
        if self.max_parallel == 0 {
            return Err(Error::Config(format!(
                "provider {}: max_parallel must be at least 1",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct ProviderFile {
    #[serde(default)]
    provider: Vec<ProviderConfig>,
}

/// Provider list from a TOML document of `[[provider]]` tables.
pub fn load_providers(text: &str) -> Result<Vec<ProviderConfig>> {
    let file: ProviderFile = toml::from_str(text).map_err(|e| {
        let location = e
            .span()
            .map(|s| {
                let line = text[..s.start].matches('\n').count() + 1;
                format!("line {line}")
            })
            .unwrap_or_else(|| "provider config".into());
        Error::parse(location, e.message())
    })?;
    if file.provider.is_empty() {
        return Err(Error::Config("no [[provider]] entries".into()));
    }
    for p in &file.provider {
        p.validate()?;
    }
    Ok(file.provider)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub latency_ms: u64,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
    pub attempts: u32,
}

pub trait Gateway: Send + Sync {
    fn name(&self) -> &str;
    fn max_parallel(&self) -> usize;
    fn generate(&self, bundle: &PromptBundle) -> Result<Completion>;
}

/// Gateway for `config`: a mock when the name has the mock prefix, an HTTP
/// client otherwise.
pub fn gateway_for(config: &ProviderConfig, seed: u64) -> Result<Box<dyn Gateway>> {
    config.validate()?;
    if config.is_mock() {
        Ok(Box::new(MockGateway::new(&config.name, seed)?))
    } else {
        Ok(Box::new(HttpGateway::new(config.clone())?))
    }
}

/// Chat-completion client: POSTs `{model, messages}` and reads
/// `choices[0].message.content`.
pub struct HttpGateway {
    config: ProviderConfig,
    credential: Option<String>,
    client: reqwest::blocking::Client,
    pub retry: RetryPolicy,
}

impl std::fmt::Debug for HttpGateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpGateway")
            .field("config", &self.config)
            .field(
                "credential",
                &self.credential.as_ref().map(|_| "<redacted>"),
            )
            .finish()
    }
}

impl HttpGateway {
    pub fn new(config: ProviderConfig) -> Result<Self> {
        config.validate()?;
        let credential = match &config.credential_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                Error::Config(format!(
                    "provider {}: credential variable {var} is not set",
                    config.name
                ))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        let retry = RetryPolicy {
            max_attempts: config.max_attempts,
            ..RetryPolicy::default()
        };
        Ok(HttpGateway {
            config,
            credential,
            client,
            retry,
        })
    }

    fn provider_error(&self, message: String, retryable: bool) -> Error {
        Error::Provider {
            provider: self.config.name.clone(),
            message: self.redact(&message),
            retryable,
        }
    }

    fn redact(&self, text: &str) -> String {
        match &self.credential {
            Some(c) if !c.is_empty() => text.replace(c.as_str(), "<redacted>"),
            _ => text.to_string(),
        }
    }

    fn attempt(&self, body: &Value) -> Result<(String, Option<u64>, Option<u64>)> {
        let mut req = self.client.post(&self.config.endpoint_url).json(body);
        if let Some(c) = &self.credential {
            req = req.bearer_auth(c);
        }
        log::debug!(
            "POST {} model={} auth={}",
            self.config.endpoint_url,
            self.config.model,
            if self.credential.is_some() {
                "Bearer <redacted>"
            } else {
                "none"
            }
        );
        let resp = req
            .send()
            .map_err(|e| self.provider_error(format!("request failed: {e}"), true))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| self.provider_error(format!("reading response: {e}"), true))?;
        log::debug!(
            "{} replied {status}: {}",
            self.config.name,
            self.redact(&text)
        );
        if status == StatusCode::TOO_MANY_REQUESTS || status.is_server_error() {
            return Err(self.provider_error(format!("http {status}"), true));
        }
        if !status.is_success() {
            return Err(self.provider_error(format!("http {status}: {}", snippet(&text)), false));
        }
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| self.provider_error(format!("response is not JSON: {e}"), false))?;
        let content = v
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| {
                self.provider_error("response has no choices[0].message.content".into(), false)
            })?;
        let usage = |k: &str| v.pointer(&format!("/usage/{k}")).and_then(Value::as_u64);
        Ok((
            content.to_string(),
            usage("prompt_tokens"),
            usage("completion_tokens"),
        ))
    }
}

fn snippet(text: &str) -> &str {
    match text.char_indices().nth(200) {
        Some((i, _)) => &text[..i],
        None => text,
    }
}

impl Gateway for HttpGateway {
    fn name(&self) -> &str {
        &self.config.name
    }

    fn max_parallel(&self) -> usize {
        self.config.max_parallel
    }

    fn generate(&self, bundle: &PromptBundle) -> Result<Completion> {
        let body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": bundle.system_text},
                {"role": "user", "content": bundle.user_text},
            ],
        });
        let started = Instant::now();
        let mut attempts = 0;
        let result = self.retry.run(|n| {
            attempts = n + 1;
            self.attempt(&body)
        });
        match result {
            Ok((text, prompt_tokens, completion_tokens)) => Ok(Completion {
                text,
                latency_ms: started.elapsed().as_millis() as u64,
                prompt_tokens,
                completion_tokens,
                attempts,
            }),
            Err(Error::Provider {
                provider,
                message,
                retryable: true,
            }) => Err(Error::Provider {
                provider,
                message: format!("{message}; giving up after {attempts} attempts"),
                retryable: false,
            }),
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provider_file() {
        let text = r#"
[[provider]]
name = "gpt"
endpoint_url = "https://example.invalid/v1/chat/completions"
model = "gpt-4o"
credential_env = "OPENAI_API_KEY"

[[provider]]
name = "mock:echo-route"
"#;
        let ps = load_providers(text).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].max_parallel, 4);
        assert!(ps[1].is_mock());
        assert!(matches!(
            load_providers("[[provider]]\nname = \"x\"\n"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            load_providers("[[provider]\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn missing_credential_is_config_error() {
        let cfg = ProviderConfig {
            name: "real".into(),
            endpoint_url: "http://127.0.0.1:9/".into(),
            model: "m".into(),
            credential_env: Some("DIPOLAR_TEST_SURELY_UNSET_KEY".into()),
            ..ProviderConfig::mock("real")
        };
        assert!(matches!(HttpGateway::new(cfg), Err(Error::Config(_))));
    }
}
