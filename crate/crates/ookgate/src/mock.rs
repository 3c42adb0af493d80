//! Deterministic stand-ins for the embedding and chat endpoints.
//!
//! [`MockServer`] binds a real HTTP listener on a loopback port and speaks
//! just enough of the wire protocol for the ingest client, so pipelines
//! can run end to end without network access or nondeterminism.
//!
//! The mock embedder hashes each whitespace word to a fixed random
//! direction and sums them, so texts sharing words land near each other
//! under cosine similarity: a cheap but honest semantic geometry. The mock
//! chat endpoint answers with a question quoting words from the supplied
//! context, varying by how many times that context has been seen.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

/// Failure injection and response shaping for one server instance.
#[derive(Debug, Clone)]
pub struct MockBehavior {
    /// Embedding dimension of generated vectors.
    pub dim: usize,
    /// The first N embedding requests answer 500.
    pub fail_first_embed: usize,
    /// The first N chat requests answer non-JSON prose.
    pub malformed_first_chat: usize,
    /// The next N chat requests answer with an answer key that is not
    /// among the options.
    pub bad_answer_first_chat: usize,
    /// Embedding requests after the first use this dimension instead.
    pub second_dim: Option<usize>,
}

impl Default for MockBehavior {
    fn default() -> Self {
        Self {
            dim: 32,
            fail_first_embed: 0,
            malformed_first_chat: 0,
            bad_answer_first_chat: 0,
            second_dim: None,
        }
    }
}

fn hash64(s: &str) -> u64 {
    let digest = Sha256::digest(s.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Deterministic text embedding: the normalized sum of per-word random
/// directions, each seeded by the word's hash.
pub fn mock_embedding(text: &str, dim: usize) -> Vec<f32> {
    let mut acc = vec![0.0f64; dim];
    let mut add_word = |word: &str| {
        let mut rng = ChaCha8Rng::seed_from_u64(hash64(word));
        for slot in acc.iter_mut() {
            let draw: f64 = StandardNormal.sample(&mut rng);
            *slot += draw;
        }
    };
    let mut any = false;
    for word in text.split_whitespace() {
        any = true;
        add_word(word);
    }
    if !any {
        add_word(text);
    }
    let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-9 {
        acc[0] = 1.0;
        return acc.iter().map(|&x| x as f32).collect();
    }
    acc.iter().map(|&x| (x / norm) as f32).collect()
}

/// Deterministic chat payload for a context seen `occurrence` times
/// before: a question quoting up to eight distinct context words.
pub fn mock_completion(context: &str, occurrence: usize) -> String {
    let mut seen = std::collections::HashSet::new();
    let words: Vec<&str> = context
        .split_whitespace()
        .filter(|w| seen.insert(*w))
        .collect();
    let seed = hash64(context) ^ (occurrence as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = words.len().min(8);
    let picked: Vec<&str> = if take == 0 {
        Vec::new()
    } else {
        rand::seq::index::sample(&mut rng, words.len(), take)
            .into_iter()
            .map(|i| words[i])
            .collect()
    };
    let question = format!("Which part of the material mentions {}?", picked.join(" "));
    json!({
        "question": question,
        "options": {
            "A": "the provided excerpt",
            "B": "an unrelated source",
            "C": "neither section",
            "D": "both sections"
        },
        "answer": "A"
    })
    .to_string()
}

struct ServerState {
    behavior: MockBehavior,
    embed_requests: AtomicUsize,
    chat_requests: AtomicUsize,
    contexts: Mutex<HashMap<String, usize>>,
}

/// A loopback HTTP server implementing the embedding and chat endpoints.
/// Drop stops it.
pub struct MockServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
    state: Arc<ServerState>,
}

impl MockServer {
    pub fn start(behavior: MockBehavior) -> std::io::Result<Self> {
        let listener = TcpListener::bind(("127.0.0.1", 0))?;
        let addr = listener.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let state = Arc::new(ServerState {
            behavior,
            embed_requests: AtomicUsize::new(0),
            chat_requests: AtomicUsize::new(0),
            contexts: Mutex::new(HashMap::new()),
        });
        let handle = {
            let state = Arc::clone(&state);
            let shutdown = Arc::clone(&shutdown);
            std::thread::spawn(move || accept_loop(listener, state, shutdown))
        };
        Ok(Self {
            addr,
            shutdown,
            handle: Some(handle),
            state,
        })
    }

    pub fn embed_url(&self) -> String {
        format!("http://{}/v1/embeddings", self.addr)
    }

    pub fn chat_url(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    /// Embedding requests served so far, failures included.
    pub fn embed_requests(&self) -> usize {
        self.state.embed_requests.load(Ordering::SeqCst)
    }

    /// Chat requests served so far, malformed responses included.
    pub fn chat_requests(&self) -> usize {
        self.state.chat_requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        // poke the listener so a blocked accept wakes up
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn accept_loop(listener: TcpListener, state: Arc<ServerState>, shutdown: Arc<AtomicBool>) {
    for conn in listener.incoming() {
        if shutdown.load(Ordering::SeqCst) {
            break;
        }
        if let Ok(stream) = conn {
            let _ = handle_connection(stream, &state);
        }
    }
}

fn find_blank_line(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n").map(|p| p + 4)
}

fn handle_connection(mut stream: TcpStream, state: &ServerState) -> std::io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    stream.set_write_timeout(Some(Duration::from_secs(5)))?;
    let mut buf = Vec::new();
    let mut tmp = [0u8; 4096];
    let header_end = loop {
        let n = stream.read(&mut tmp)?;
        if n == 0 {
            return Ok(());
        }
        buf.extend_from_slice(&tmp[..n]);
        if let Some(end) = find_blank_line(&buf) {
            break end;
        }
        if buf.len() > (1 << 20) {
            return Ok(());
        }
    };

    let head = String::from_utf8_lossy(&buf[..header_end]).into_owned();
    let mut lines = head.lines();
    let request_line = lines.next().unwrap_or_default().to_string();
    let mut content_length = 0usize;
    for line in lines {
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = buf[header_end..].to_vec();
    while body.len() < content_length {
        let n = stream.read(&mut tmp)?;
        if n == 0 {
            break;
        }
        body.extend_from_slice(&tmp[..n]);
    }

    let path = request_line.split_whitespace().nth(1).unwrap_or("");
    let (status, payload) = route(path, &body, state);
    let response = format!(
        "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
        payload.len()
    );
    stream.write_all(response.as_bytes())?;
    stream.write_all(payload.as_bytes())?;
    stream.flush()
}

fn route(path: &str, body: &[u8], state: &ServerState) -> (&'static str, String) {
    if path.ends_with("/embeddings") {
        serve_embeddings(body, state)
    } else if path.ends_with("/chat/completions") {
        serve_chat(body, state)
    } else {
        (
            "404 Not Found",
            json!({"error": {"message": "no such route"}}).to_string(),
        )
    }
}

fn bad_request(msg: &str) -> (&'static str, String) {
    (
        "400 Bad Request",
        json!({"error": {"message": msg}}).to_string(),
    )
}

fn serve_embeddings(body: &[u8], state: &ServerState) -> (&'static str, String) {
    let served = state.embed_requests.fetch_add(1, Ordering::SeqCst);
    if served < state.behavior.fail_first_embed {
        return (
            "500 Internal Server Error",
            json!({"error": {"message": "transient failure"}}).to_string(),
        );
    }
    let Ok(request) = serde_json::from_slice::<Value>(body) else {
        return bad_request("body is not JSON");
    };
    let Some(inputs) = request.get("input").and_then(Value::as_array) else {
        return bad_request("missing input array");
    };
    let dim = match (served, state.behavior.second_dim) {
        (0, _) | (_, None) => state.behavior.dim,
        (_, Some(second)) => second,
    };
    let data: Vec<Value> = inputs
        .iter()
        .enumerate()
        .map(|(index, text)| {
            let text = text.as_str().unwrap_or_default();
            json!({"embedding": mock_embedding(text, dim), "index": index, "object": "embedding"})
        })
        .collect();
    (
        "200 OK",
        json!({"object": "list", "data": data, "model": "mock-embedder"}).to_string(),
    )
}

fn extract_context(user: &str) -> &str {
    if let Some(start) = user.find("---\n") {
        let rest = &user[start + 4..];
        if let Some(end) = rest.find("\n---") {
            return &rest[..end];
        }
    }
    user
}

fn serve_chat(body: &[u8], state: &ServerState) -> (&'static str, String) {
    let served = state.chat_requests.fetch_add(1, Ordering::SeqCst);
    let Ok(request) = serde_json::from_slice::<Value>(body) else {
        return bad_request("body is not JSON");
    };
    let user = request
        .get("messages")
        .and_then(Value::as_array)
        .and_then(|msgs| {
            msgs.iter()
                .rev()
                .find(|m| m.get("role").and_then(Value::as_str) == Some("user"))
        })
        .and_then(|m| m.get("content").and_then(Value::as_str))
        .unwrap_or_default();

    let content = if served < state.behavior.malformed_first_chat {
        "Sure! Here are some questions you could use.".to_string()
    } else if served < state.behavior.malformed_first_chat + state.behavior.bad_answer_first_chat {
        json!({"question": "Q?", "options": {"A": "x", "B": "y"}, "answer": "C"}).to_string()
    } else {
        let context = extract_context(user).to_string();
        let occurrence = {
            let mut contexts = state.contexts.lock().unwrap();
            let slot = contexts.entry(context.clone()).or_insert(0);
            let occurrence = *slot;
            *slot += 1;
            occurrence
        };
        mock_completion(&context, occurrence)
    };
    (
        "200 OK",
        json!({
            "object": "chat.completion",
            "model": "mock-chat",
            "choices": [{
                "index": 0,
                "finish_reason": "stop",
                "message": {"role": "assistant", "content": content}
            }]
        })
        .to_string(),
    )
}
