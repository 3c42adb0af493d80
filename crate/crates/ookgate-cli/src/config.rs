use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ookgate::ingest::client::{self, HttpConfig};

use crate::args::EndpointArgs;
use crate::error::CliError;

/// Keys a config file may set. Anything else is rejected so typos surface
/// instead of silently falling back to defaults.
const KNOWN_KEYS: &[&str] = &[
    "embed_url",
    "chat_url",
    "api_key",
    "model",
    "batch_size",
    "metric",
    "stat",
    "k",
    "rank_j",
    "tau",
    "alpha",
    "seed",
    "chunk_size",
    "chunk_overlap",
];

/// Parsed `key=value` config file. Blank lines and `#` comments are
/// ignored; a repeated key keeps its last value.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| CliError::input(format!("cannot read {}: {err}", path.display())))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::input(format!(
                    "{}:{}: expected key=value, got {line:?}",
                    path.display(),
                    lineno + 1
                )));
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::input(format!(
                    "{}:{}: unknown config key {key:?}",
                    path.display(),
                    lineno + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn get_parsed<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|err| {
                CliError::input(format!("config key {key}: cannot parse {raw:?}: {err}"))
            }),
        }
    }
}

/// Resolves one setting: command-line flag, then config file, then default.
pub fn setting<T>(
    flag: Option<T>,
    cfg: &FileConfig,
    key: &str,
    default: T,
) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    Ok(setting_opt(flag, cfg, key)?.unwrap_or(default))
}

/// As `setting` but without a default, for values derived from others when
/// absent.
pub fn setting_opt<T>(flag: Option<T>, cfg: &FileConfig, key: &str) -> Result<Option<T>, CliError>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    match flag {
        Some(value) => Ok(Some(value)),
        None => cfg.get_parsed(key),
    }
}

fn env_value(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

/// Builds the endpoint configuration from flags, then `OOKGATE_*`
/// environment variables, then the config file. URLs a command does not
/// need may stay unset; required ones missing from every source are an
/// input error naming all three places to set them.
pub fn endpoint_config(
    args: &EndpointArgs,
    cfg: &FileConfig,
    need_embed: bool,
    need_chat: bool,
) -> Result<HttpConfig, CliError> {
    let resolve_url = |flag: &Option<String>, env: &str, key: &str| {
        flag.clone()
            .or_else(|| env_value(env))
            .or_else(|| cfg.get(key).map(str::to_string))
    };
    let embed_url = resolve_url(&args.embed_url, client::ENV_EMBED_URL, "embed_url");
    let chat_url = resolve_url(&args.chat_url, client::ENV_CHAT_URL, "chat_url");
    let embed_url = match (embed_url, need_embed) {
        (Some(url), _) => url,
        (None, false) => String::new(),
        (None, true) => {
            return Err(CliError::input(format!(
                "no embeddings endpoint configured; pass --embed-url, set {}, \
                 or put embed_url in the config file",
                client::ENV_EMBED_URL
            )))
        }
    };
    let chat_url = match (chat_url, need_chat) {
        (Some(url), _) => url,
        (None, false) => String::new(),
        (None, true) => {
            return Err(CliError::input(format!(
                "no chat endpoint configured; pass --chat-url, set {}, \
                 or put chat_url in the config file",
                client::ENV_CHAT_URL
            )))
        }
    };

    let mut http = HttpConfig::new(embed_url, chat_url);
    http.api_key = args
        .api_key
        .clone()
        .or_else(|| env_value(client::ENV_API_KEY))
        .or_else(|| cfg.get("api_key").map(str::to_string));
    if let Some(model) = args
        .model
        .clone()
        .or_else(|| cfg.get("model").map(str::to_string))
    {
        http.model = model;
    }
    if let Some(batch) = setting_opt(args.batch_size, cfg, "batch_size")? {
        http.batch_size = batch;
    }
    Ok(http)
}
