//! Chat-completion gateway with three modes: live HTTPS calls, record
//! (live + persist a fixture), and replay (fixture lookup only, no network).
//! Fixtures are keyed by a content hash of (model id, message sequence), so
//! editing a prompt invalidates stale fixtures loudly instead of silently
//! replaying the wrong response.

use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex, OnceLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::metrics::Telemetry;

pub const DEFAULT_TEMPERATURE: f64 = 0.1;
pub const DEFAULT_MAX_TOKENS: u32 = 800;
pub const API_KEY_ENV: &str = "OPTEVAL_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatewayMode {
    Live,
    Record,
    Replay,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_id: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub endpoint: String,
    pub mode: GatewayMode,
}

fn default_temperature() -> f64 {
    DEFAULT_TEMPERATURE
}

fn default_max_tokens() -> u32 {
    DEFAULT_MAX_TOKENS
}

impl ModelConfig {
    pub fn replay(model_id: impl Into<String>) -> ModelConfig {
        ModelConfig {
            model_id: model_id.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            endpoint: String::new(),
            mode: GatewayMode::Replay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Message {
        Message { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Message {
        Message { role: "assistant".into(), content: content.into() }
    }
}

/// Content hash of (model id, message sequence); the fixture key.
pub fn fixture_key(model_id: &str, messages: &[Message]) -> String {
    #[derive(Serialize)]
    struct KeyContent<'a> {
        model: &'a str,
        messages: &'a [Message],
    }
    let canonical = serde_json::to_vec(&KeyContent { model: model_id, messages }).expect("serialize");
    let mut hasher = Sha256::new();
    hasher.update(&canonical);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayFixture {
    pub schema: String,
    pub key: String,
    pub model: String,
    pub response: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_ms: u64,
    pub recorded_at: String,
}

pub const FIXTURE_SCHEMA: &str = "opteval/fixture/1";

/// One JSON file per fixture under `<root>/<model>/<key>.json`.
#[derive(Debug, Clone)]
pub struct FixtureStore {
    root: PathBuf,
}

impl FixtureStore {
    pub fn new(root: impl Into<PathBuf>) -> FixtureStore {
        FixtureStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, model: &str, key: &str) -> PathBuf {
        self.root.join(model).join(format!("{key}.json"))
    }

    pub fn load(&self, model: &str, key: &str) -> Result<Option<ReplayFixture>, GatewayError> {
        let path = self.path(model, key);
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                let fixture: ReplayFixture = serde_json::from_str(&text)
                    .map_err(|e| GatewayError::BadFixture(path.display().to_string(), e.to_string()))?;
                Ok(Some(fixture))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(GatewayError::Io(e.to_string())),
        }
    }

    pub fn save(&self, fixture: &ReplayFixture) -> Result<(), GatewayError> {
        let path = self.path(&fixture.model, &fixture.key);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| GatewayError::Io(e.to_string()))?;
        }
        let body = serde_json::to_string_pretty(fixture).expect("serialize");
        std::fs::write(&path, body).map_err(|e| GatewayError::Io(e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("no replay fixture for key {key} (model {model})")]
    MissingFixture { model: String, key: String },
    #[error("fixture {0} is malformed: {1}")]
    BadFixture(String, String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("network failure after retries: {0}")]
    Network(String),
    #[error("malformed completion response: {0}")]
    BadResponse(String),
    #[error("io error: {0}")]
    Io(String),
}

#[derive(Debug, thiserror::Error)]
#[error("multi-step exchange failed at step {step}: {source}")]
pub struct MultiStepError {
    pub step: usize,
    pub source: GatewayError,
    /// Exchanges completed before the failure.
    pub partial: Transcript,
}

// ---------------------------------------------------------------------------
// Transport
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HttpReply {
    pub text: String,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

#[derive(Debug)]
pub enum TransportError {
    /// Client errors (4xx): not retried.
    Client { status: u16, body: String },
    /// Connection failures and server errors: retried with backoff.
    Retryable(String),
    Malformed(String),
}

/// Abstraction over the HTTP call so tests can count or stub requests.
pub trait Transport: Send + Sync {
    fn send(&self, cfg: &ModelConfig, messages: &[Message]) -> Result<HttpReply, TransportError>;
}

/// Chat-completions JSON over HTTP(S) via a lazily constructed client; the
/// client is never built in replay mode.
pub struct HttpTransport {
    client: OnceLock<reqwest::blocking::Client>,
}

impl HttpTransport {
    pub fn new() -> HttpTransport {
        HttpTransport { client: OnceLock::new() }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

#[derive(Deserialize)]
struct Usage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

impl Transport for HttpTransport {
    fn send(&self, cfg: &ModelConfig, messages: &[Message]) -> Result<HttpReply, TransportError> {
        let client = self.client.get_or_init(|| {
            reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .expect("client")
        });
        let mut req = client.post(&cfg.endpoint).json(&ChatRequest {
            model: &cfg.model_id,
            messages,
            temperature: cfg.temperature,
            max_tokens: cfg.max_tokens,
        });
        if let Ok(key) = std::env::var(API_KEY_ENV) {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| TransportError::Retryable(e.to_string()))?;
        let status = resp.status().as_u16();
        if (400..500).contains(&status) {
            let body = resp.text().unwrap_or_default();
            return Err(TransportError::Client { status, body });
        }
        if status >= 500 {
            let body = resp.text().unwrap_or_default();
            return Err(TransportError::Retryable(format!("HTTP {status}: {body}")));
        }
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| TransportError::Malformed(e.to_string()))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| TransportError::Malformed("no choices".into()))?;
        let usage = parsed.usage;
        Ok(HttpReply {
            text: choice.message.content,
            prompt_tokens: usage.as_ref().and_then(|u| u.prompt_tokens),
            completion_tokens: usage.as_ref().and_then(|u| u.completion_tokens),
        })
    }
}

// ---------------------------------------------------------------------------
// Rate limiting
// ---------------------------------------------------------------------------

struct LimiterState {
    in_flight: usize,
    tokens: f64,
    last_refill: Instant,
}

/// In-flight cap plus a token bucket; only live traffic passes through it.
struct Limiter {
    max_in_flight: usize,
    rate_per_sec: f64,
    burst: f64,
    state: Mutex<LimiterState>,
    cv: Condvar,
}

impl Limiter {
    fn new(max_in_flight: usize, per_minute: u32) -> Limiter {
        let burst = 10.0f64.min(per_minute as f64).max(1.0);
        Limiter {
            max_in_flight,
            rate_per_sec: per_minute as f64 / 60.0,
            burst,
            state: Mutex::new(LimiterState {
                in_flight: 0,
                tokens: burst,
                last_refill: Instant::now(),
            }),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) {
        let mut st = self.state.lock().unwrap();
        loop {
            let now = Instant::now();
            let elapsed = now.duration_since(st.last_refill).as_secs_f64();
            st.tokens = (st.tokens + elapsed * self.rate_per_sec).min(self.burst);
            st.last_refill = now;
            if st.in_flight < self.max_in_flight && st.tokens >= 1.0 {
                st.in_flight += 1;
                st.tokens -= 1.0;
                return;
            }
            let wait = if st.tokens < 1.0 {
                Duration::from_secs_f64(((1.0 - st.tokens) / self.rate_per_sec).max(0.01))
            } else {
                Duration::from_millis(20)
            };
            let (guard, _) = self.cv.wait_timeout(st, wait).unwrap();
            st = guard;
        }
    }

    fn release(&self) {
        let mut st = self.state.lock().unwrap();
        st.in_flight = st.in_flight.saturating_sub(1);
        drop(st);
        self.cv.notify_all();
    }
}

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub request: Vec<Message>,
    pub response: String,
    pub telemetry: Telemetry,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    pub exchanges: Vec<Exchange>,
    /// Summed telemetry across steps: tokens and latency are additive.
    pub combined: Telemetry,
}

impl Transcript {
    pub fn final_response(&self) -> Option<&str> {
        self.exchanges.last().map(|e| e.response.as_str())
    }

    fn push(&mut self, exchange: Exchange) {
        let t = &exchange.telemetry;
        self.combined.latency_ms += t.latency_ms;
        self.combined.input_tokens =
            Some(self.combined.input_tokens.unwrap_or(0) + t.input_tokens.unwrap_or(0));
        self.combined.output_tokens =
            Some(self.combined.output_tokens.unwrap_or(0) + t.output_tokens.unwrap_or(0));
        self.combined.request_chars += t.request_chars;
        self.combined.response_chars += t.response_chars;
        self.exchanges.push(exchange);
    }
}

pub struct Gateway {
    store: FixtureStore,
    transport: Box<dyn Transport>,
    limiter: Limiter,
    retry_delays: Vec<Duration>,
}

impl Gateway {
    pub fn new(fixture_root: impl Into<PathBuf>) -> Gateway {
        Gateway::with_transport(fixture_root, Box::new(HttpTransport::new()))
    }

    pub fn with_transport(fixture_root: impl Into<PathBuf>, transport: Box<dyn Transport>) -> Gateway {
        Gateway {
            store: FixtureStore::new(fixture_root),
            transport,
            limiter: Limiter::new(2, 60),
            retry_delays: vec![
                Duration::from_secs(1),
                Duration::from_secs(2),
                Duration::from_secs(4),
            ],
        }
    }

    /// Test hook: removes the retry backoff sleeps.
    pub fn without_backoff(mut self) -> Gateway {
        self.retry_delays = vec![Duration::ZERO; 3];
        self
    }

    pub fn store(&self) -> &FixtureStore {
        &self.store
    }

    /// One completion. Live: a single chat call with retries; record: live
    /// plus fixture persistence; replay: fixture values verbatim (latency
    /// is not re-measured).
    pub fn complete(
        &self,
        cfg: &ModelConfig,
        messages: &[Message],
    ) -> Result<(String, Telemetry), GatewayError> {
        let key = fixture_key(&cfg.model_id, messages);
        let request_chars: usize = messages.iter().map(|m| m.content.len()).sum();
        match cfg.mode {
            GatewayMode::Replay => {
                let fixture = self.store.load(&cfg.model_id, &key)?.ok_or_else(|| {
                    GatewayError::MissingFixture { model: cfg.model_id.clone(), key: key.clone() }
                })?;
                let telemetry = Telemetry {
                    latency_ms: fixture.latency_ms,
                    input_tokens: Some(fixture.input_tokens),
                    output_tokens: Some(fixture.output_tokens),
                    request_chars,
                    response_chars: fixture.response.len(),
                };
                Ok((fixture.response, telemetry))
            }
            GatewayMode::Live | GatewayMode::Record => {
                let (reply, latency_ms) = self.send_with_retries(cfg, messages)?;
                let telemetry = Telemetry {
                    latency_ms,
                    input_tokens: reply.prompt_tokens,
                    output_tokens: reply.completion_tokens,
                    request_chars,
                    response_chars: reply.text.len(),
                };
                if cfg.mode == GatewayMode::Record {
                    let eff = crate::metrics::efficiency(&telemetry);
                    self.store.save(&ReplayFixture {
                        schema: FIXTURE_SCHEMA.into(),
                        key,
                        model: cfg.model_id.clone(),
                        response: reply.text.clone(),
                        input_tokens: eff.input_tokens,
                        output_tokens: eff.output_tokens,
                        latency_ms,
                        recorded_at: now_rfc3339(),
                    })?;
                }
                Ok((reply.text, telemetry))
            }
        }
    }

    fn send_with_retries(
        &self,
        cfg: &ModelConfig,
        messages: &[Message],
    ) -> Result<(HttpReply, u64), GatewayError> {
        self.limiter.acquire();
        let result = (|| {
            let mut last_error = String::new();
            for (attempt, delay) in std::iter::once(&Duration::ZERO)
                .chain(self.retry_delays.iter())
                .enumerate()
            {
                if attempt > 0 {
                    std::thread::sleep(*delay);
                }
                let start = Instant::now();
                match self.transport.send(cfg, messages) {
                    Ok(reply) => {
                        let latency_ms = start.elapsed().as_millis() as u64;
                        return Ok((reply, latency_ms));
                    }
                    Err(TransportError::Client { status, body }) => {
                        return Err(GatewayError::Http { status, body });
                    }
                    Err(TransportError::Malformed(m)) => {
                        return Err(GatewayError::BadResponse(m));
                    }
                    Err(TransportError::Retryable(m)) => last_error = m,
                }
            }
            Err(GatewayError::Network(last_error))
        })();
        self.limiter.release();
        result
    }

    /// Sequential multi-message protocol: each response joins the context
    /// before the next step; telemetry sums across steps. On failure the
    /// error cites the step index and preserves the completed exchanges.
    pub fn run_multistep(
        &self,
        cfg: &ModelConfig,
        steps: &[String],
    ) -> Result<Transcript, Box<MultiStepError>> {
        let mut transcript = Transcript::default();
        let mut context: Vec<Message> = Vec::new();
        for (i, step) in steps.iter().enumerate() {
            context.push(Message::user(step.clone()));
            let request = context.clone();
            match self.complete(cfg, &context) {
                Ok((response, telemetry)) => {
                    context.push(Message::assistant(response.clone()));
                    transcript.push(Exchange { request, response, telemetry });
                }
                Err(source) => {
                    return Err(Box::new(MultiStepError { step: i + 1, source, partial: transcript }))
                }
            }
        }
        Ok(transcript)
    }
}

fn now_rfc3339() -> String {
    // Seconds since the epoch rendered as a UTC timestamp, without pulling
    // in a clock crate for one field.
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let days = secs / 86_400;
    let tod = secs % 86_400;
    // Civil-from-days (Howard Hinnant's algorithm).
    let z = days as i64 + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = if m <= 2 { y + 1 } else { y };
    format!(
        "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z",
        y,
        m,
        d,
        tod / 3600,
        (tod % 3600) / 60,
        tod % 60
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    struct CannedTransport {
        calls: Arc<AtomicUsize>,
        replies: Vec<Result<HttpReply, TransportError>>,
        cursor: Mutex<usize>,
    }

    impl Transport for CannedTransport {
        fn send(&self, _cfg: &ModelConfig, _messages: &[Message]) -> Result<HttpReply, TransportError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let mut cur = self.cursor.lock().unwrap();
            let idx = (*cur).min(self.replies.len() - 1);
            *cur += 1;
            match &self.replies[idx] {
                Ok(r) => Ok(r.clone()),
                Err(TransportError::Client { status, body }) => {
                    Err(TransportError::Client { status: *status, body: body.clone() })
                }
                Err(TransportError::Retryable(m)) => Err(TransportError::Retryable(m.clone())),
                Err(TransportError::Malformed(m)) => Err(TransportError::Malformed(m.clone())),
            }
        }
    }

    fn canned(replies: Vec<Result<HttpReply, TransportError>>) -> (Gateway, Arc<AtomicUsize>, tempfile::TempDir) {
        let calls = Arc::new(AtomicUsize::new(0));
        let dir = tempfile::tempdir().unwrap();
        let gw = Gateway::with_transport(
            dir.path(),
            Box::new(CannedTransport { calls: calls.clone(), replies, cursor: Mutex::new(0) }),
        )
        .without_backoff();
        (gw, calls, dir)
    }

    fn ok_reply(text: &str) -> Result<HttpReply, TransportError> {
        Ok(HttpReply {
            text: text.into(),
            prompt_tokens: Some(137),
            completion_tokens: Some(39),
        })
    }

    fn live_cfg() -> ModelConfig {
        ModelConfig {
            model_id: "test-model".into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            endpoint: "http://localhost:0/v1/chat".into(),
            mode: GatewayMode::Live,
        }
    }

    #[test]
    fn defaults_match_run_configuration() {
        let cfg = ModelConfig::replay("m");
        assert_eq!(cfg.temperature, 0.1);
        assert_eq!(cfg.max_tokens, 800);
    }

    #[test]
    fn fixture_key_is_content_addressed() {
        let a = fixture_key("m", &[Message::user("hello")]);
        let b = fixture_key("m", &[Message::user("hello")]);
        let c = fixture_key("m", &[Message::user("hello!")]);
        let d = fixture_key("m2", &[Message::user("hello")]);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn record_then_replay_round_trips() {
        let (gw, calls, dir) = canned(vec![ok_reply("the formulation")]);
        let mut cfg = live_cfg();
        cfg.mode = GatewayMode::Record;
        let messages = [Message::user("prompt")];
        let (text, telemetry) = gw.complete(&cfg, &messages).unwrap();
        assert_eq!(text, "the formulation");
        assert_eq!(telemetry.input_tokens, Some(137));
        assert_eq!(calls.load(Ordering::SeqCst), 1);

        // Replay through a fresh gateway whose transport would fail loudly.
        let replay_gw = Gateway::with_transport(
            dir.path(),
            Box::new(CannedTransport {
                calls: Arc::new(AtomicUsize::new(0)),
                replies: vec![Err(TransportError::Retryable("no network in replay".into()))],
                cursor: Mutex::new(0),
            }),
        );
        let mut replay_cfg = cfg.clone();
        replay_cfg.mode = GatewayMode::Replay;
        let (text2, telemetry2) = replay_gw.complete(&replay_cfg, &messages).unwrap();
        assert_eq!(text2, text);
        assert_eq!(telemetry2.input_tokens, Some(137));
        assert_eq!(telemetry2.output_tokens, Some(39));
    }

    #[test]
    fn replay_performs_zero_network_operations() {
        let (gw, calls, _dir) = canned(vec![ok_reply("unused")]);
        let mut cfg = live_cfg();
        cfg.mode = GatewayMode::Replay;
        let err = gw.complete(&cfg, &[Message::user("never recorded")]).unwrap_err();
        match err {
            GatewayError::MissingFixture { key, .. } => assert_eq!(key.len(), 64),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn retries_on_network_failure_then_succeeds() {
        let (gw, calls, _dir) = canned(vec![
            Err(TransportError::Retryable("connection refused".into())),
            Err(TransportError::Retryable("connection refused".into())),
            ok_reply("late success"),
        ]);
        let (text, _) = gw.complete(&live_cfg(), &[Message::user("p")]).unwrap();
        assert_eq!(text, "late success");
        assert_eq!(calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_three_retries() {
        let (gw, calls, _dir) = canned(vec![Err(TransportError::Retryable("down".into()))]);
        let err = gw.complete(&live_cfg(), &[Message::user("p")]).unwrap_err();
        assert!(matches!(err, GatewayError::Network(_)));
        assert_eq!(calls.load(Ordering::SeqCst), 4); // initial + 3 retries
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (gw, calls, _dir) = canned(vec![Err(TransportError::Client {
            status: 401,
            body: "unauthorized".into(),
        })]);
        let err = gw.complete(&live_cfg(), &[Message::user("p")]).unwrap_err();
        assert!(matches!(err, GatewayError::Http { status: 401, .. }));
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn multistep_accumulates_context_and_sums_telemetry() {
        let (gw, _calls, _dir) = canned(vec![
            Ok(HttpReply { text: "vars".into(), prompt_tokens: Some(100), completion_tokens: Some(10) }),
            Ok(HttpReply { text: "objective".into(), prompt_tokens: Some(120), completion_tokens: Some(12) }),
            Ok(HttpReply { text: "constraints".into(), prompt_tokens: Some(140), completion_tokens: Some(14) }),
            Ok(HttpReply { text: "full model".into(), prompt_tokens: Some(160), completion_tokens: Some(16) }),
        ]);
        let steps: Vec<String> = ["s1", "s2", "s3", "s4"].iter().map(|s| s.to_string()).collect();
        let transcript = gw.run_multistep(&live_cfg(), &steps).unwrap();
        assert_eq!(transcript.exchanges.len(), 4);
        assert_eq!(transcript.final_response(), Some("full model"));
        assert_eq!(transcript.combined.input_tokens, Some(100 + 120 + 140 + 160));
        assert_eq!(transcript.combined.output_tokens, Some(10 + 12 + 14 + 16));
        // The last request carries the whole conversation.
        assert_eq!(transcript.exchanges[3].request.len(), 7);
    }

    #[test]
    fn multistep_failure_cites_step_and_keeps_partial() {
        let (gw, _calls, _dir) = canned(vec![
            ok_reply("one"),
            ok_reply("two"),
            Err(TransportError::Client { status: 400, body: "bad".into() }),
        ]);
        let steps: Vec<String> = ["s1", "s2", "s3", "s4"].iter().map(|s| s.to_string()).collect();
        let err = gw.run_multistep(&live_cfg(), &steps).unwrap_err();
        assert_eq!(err.step, 3);
        assert_eq!(err.partial.exchanges.len(), 2);
    }

    #[test]
    fn single_step_transcript() {
        let (gw, _calls, _dir) = canned(vec![ok_reply("only")]);
        let transcript = gw.run_multistep(&live_cfg(), &["p".to_string()]).unwrap();
        assert_eq!(transcript.exchanges.len(), 1);
    }

    /// Minimal HTTP server for exercising the real transport.
    fn serve_once(response_body: String, status: &'static str) -> (std::net::SocketAddr, std::thread::JoinHandle<()>) {
        use std::io::{Read, Write};
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let handle = std::thread::spawn(move || {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = [0u8; 65536];
            let mut read = 0;
            loop {
                let n = stream.read(&mut buf[read..]).unwrap();
                read += n;
                let text = String::from_utf8_lossy(&buf[..read]);
                if let Some(pos) = text.find("\r\n\r\n") {
                    let headers = &text[..pos];
                    let content_length = headers
                        .lines()
                        .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                        .unwrap_or(0);
                    if read >= pos + 4 + content_length {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            let reply = format!(
                "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{response_body}",
                response_body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        });
        (addr, handle)
    }

    #[test]
    fn http_transport_parses_chat_completion() {
        let body = serde_json::json!({
            "choices": [{"message": {"role": "assistant", "content": "maximize x1"}}],
            "usage": {"prompt_tokens": 42, "completion_tokens": 7}
        })
        .to_string();
        let (addr, handle) = serve_once(body, "200 OK");
        let gw = Gateway::with_transport(tempfile::tempdir().unwrap().path(), Box::new(HttpTransport::new()));
        let cfg = ModelConfig {
            model_id: "m".into(),
            temperature: 0.1,
            max_tokens: 800,
            endpoint: format!("http://{addr}/v1/chat/completions"),
            mode: GatewayMode::Live,
        };
        let (text, telemetry) = gw.complete(&cfg, &[Message::user("p")]).unwrap();
        assert_eq!(text, "maximize x1");
        assert_eq!(telemetry.input_tokens, Some(42));
        assert_eq!(telemetry.output_tokens, Some(7));
        handle.join().unwrap();
    }

    #[test]
    fn http_transport_surfaces_4xx() {
        let (addr, handle) = serve_once("{\"error\": \"bad key\"}".into(), "401 Unauthorized");
        let gw = Gateway::with_transport(tempfile::tempdir().unwrap().path(), Box::new(HttpTransport::new()))
            .without_backoff();
        let cfg = ModelConfig {
            model_id: "m".into(),
            temperature: 0.1,
            max_tokens: 800,
            endpoint: format!("http://{addr}/v1/chat/completions"),
            mode: GatewayMode::Live,
        };
        let err = gw.complete(&cfg, &[Message::user("p")]).unwrap_err();
        assert!(matches!(err, GatewayError::Http { status: 401, .. }));
        handle.join().unwrap();
    }
}
