//! HTTP access to embedding and chat-completion endpoints.
//!
//! Wire shapes follow the de-facto embeddings and chat APIs: a JSON body
//! in, a JSON body out, bearer-token auth when a key is configured.
//! Transient failures (connect errors, timeouts, 429, 5xx) are retried
//! with exponential backoff; anything else fails fast.

use super::IngestError;
use serde::{Deserialize, Serialize};
use std::time::Duration;

pub const ENV_EMBED_URL: &str = "OOKGATE_EMBED_URL";
pub const ENV_CHAT_URL: &str = "OOKGATE_CHAT_URL";
pub const ENV_API_KEY: &str = "OOKGATE_API_KEY";

/// Endpoint configuration shared by embedding and chat calls.
#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub embed_url: String,
    pub chat_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub batch_size: usize,
    pub timeout: Duration,
    /// Retries after the first attempt; 3 means up to four tries.
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub temperature: f64,
}

impl HttpConfig {
    pub fn new(embed_url: impl Into<String>, chat_url: impl Into<String>) -> Self {
        Self {
            embed_url: embed_url.into(),
            chat_url: chat_url.into(),
            api_key: None,
            model: "default".to_string(),
            batch_size: 16,
            timeout: Duration::from_secs(30),
            max_retries: 3,
            initial_backoff: Duration::from_millis(250),
            temperature: 0.7,
        }
    }

    /// Reads `OOKGATE_EMBED_URL`, `OOKGATE_CHAT_URL`, and the optional
    /// `OOKGATE_API_KEY` from the environment.
    pub fn from_env() -> Result<Self, IngestError> {
        let embed_url =
            std::env::var(ENV_EMBED_URL).map_err(|_| IngestError::MissingEnv(ENV_EMBED_URL))?;
        let chat_url =
            std::env::var(ENV_CHAT_URL).map_err(|_| IngestError::MissingEnv(ENV_CHAT_URL))?;
        let mut config = Self::new(embed_url, chat_url);
        config.api_key = std::env::var(ENV_API_KEY).ok();
        Ok(config)
    }
}

fn agent(config: &HttpConfig) -> ureq::Agent {
    let agent_config = ureq::Agent::config_builder()
        .timeout_global(Some(config.timeout))
        .build();
    ureq::Agent::new_with_config(agent_config)
}

fn is_transient(err: &ureq::Error) -> bool {
    match err {
        ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
        ureq::Error::Io(_) | ureq::Error::Timeout(_) | ureq::Error::ConnectionFailed => true,
        _ => false,
    }
}

fn terminal(err: ureq::Error) -> IngestError {
    match err {
        ureq::Error::StatusCode(code) => IngestError::Endpoint {
            status: code,
            detail: "non-success status".to_string(),
        },
        other => IngestError::Transport(other.to_string()),
    }
}

/// Posts `body` and deserializes the JSON response, retrying transient
/// failures with doubling backoff.
fn post_json<T: serde::de::DeserializeOwned>(
    config: &HttpConfig,
    url: &str,
    body: &impl Serialize,
) -> Result<T, IngestError> {
    let agent = agent(config);
    let mut backoff = config.initial_backoff;
    let mut attempt = 0u32;
    loop {
        let mut request = agent.post(url);
        if let Some(key) = &config.api_key {
            request = request.header("authorization", format!("Bearer {key}"));
        }
        match request.send_json(body) {
            Ok(mut response) => {
                return response
                    .body_mut()
                    .read_json::<T>()
                    .map_err(|e| IngestError::MalformedResponse(e.to_string()));
            }
            Err(err) if is_transient(&err) && attempt < config.max_retries => {
                attempt += 1;
                log::warn!("transient failure on {url} (attempt {attempt}): {err}");
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            Err(err) => return Err(terminal(err)),
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    input: &'a [String],
    model: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    data: Vec<EmbedDatum>,
}

#[derive(Deserialize)]
struct EmbedDatum {
    embedding: Vec<f32>,
    index: usize,
}

/// Embeds one batch; the result is ordered by the response `index` field,
/// which must be a permutation of the input positions.
pub(super) fn embed_batch(
    config: &HttpConfig,
    texts: &[String],
) -> Result<Vec<Vec<f32>>, IngestError> {
    let body = EmbedRequest {
        input: texts,
        model: &config.model,
    };
    let response: EmbedResponse = post_json(config, &config.embed_url, &body)?;
    if response.data.len() != texts.len() {
        return Err(IngestError::MalformedResponse(format!(
            "{} embeddings for {} inputs",
            response.data.len(),
            texts.len()
        )));
    }
    let mut rows: Vec<Option<Vec<f32>>> = vec![None; texts.len()];
    for datum in response.data {
        let slot = rows
            .get_mut(datum.index)
            .ok_or_else(|| {
                IngestError::MalformedResponse(format!("index {} out of range", datum.index))
            })?;
        if slot.is_some() {
            return Err(IngestError::MalformedResponse(format!(
                "duplicate index {}",
                datum.index
            )));
        }
        *slot = Some(datum.embedding);
    }
    // every slot is filled: lengths matched and indices were unique
    Ok(rows.into_iter().map(|r| r.unwrap()).collect())
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

/// Runs one chat completion and returns the first choice's content.
pub(super) fn chat_complete(
    config: &HttpConfig,
    system: &str,
    user: &str,
) -> Result<String, IngestError> {
    let body = ChatRequest {
        model: &config.model,
        messages: vec![
            ChatMessage {
                role: "system",
                content: system,
            },
            ChatMessage {
                role: "user",
                content: user,
            },
        ],
        temperature: config.temperature,
    };
    let response: ChatResponse = post_json(config, &config.chat_url, &body)?;
    response
        .choices
        .into_iter()
        .next()
        .map(|c| c.message.content)
        .ok_or_else(|| IngestError::MalformedResponse("no choices in completion".to_string()))
}
