use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::manifest::sha256_hex;

/// Connection settings shared by every remote client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    /// Base URL; request paths are appended to it.
    pub endpoint: String,
    /// Sent as a bearer token when present.
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub timeout_ms: u64,
    /// Extra attempts after a transient failure.
    pub retries: u32,
    pub backoff_ms: u64,
    pub max_backoff_ms: u64,
    /// Requests per second allowed by the shared token bucket, if any.
    pub rate_per_sec: Option<f64>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            api_key: None,
            timeout_ms: 120_000,
            retries: 3,
            backoff_ms: 250,
            max_backoff_ms: 8_000,
            rate_per_sec: None,
        }
    }
}

impl HttpConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self { endpoint: endpoint.into(), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return Err(Error::Config(format!("endpoint {:?} is not an http(s) URL", self.endpoint)));
        }
        if self.rate_per_sec.is_some_and(|r| !(r.is_finite() && r > 0.0)) {
            return Err(Error::Config("rate_per_sec must be positive".into()));
        }
        Ok(())
    }

    /// Delay before retry number `attempt` (zero-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        let ms = self.backoff_ms.saturating_mul(1u64 << attempt.min(20)).min(self.max_backoff_ms);
        Duration::from_millis(ms)
    }
}

/// Blocking token bucket with a burst of one.
#[derive(Debug)]
pub struct TokenBucket {
    interval: Duration,
    next: Mutex<Instant>,
}

impl TokenBucket {
    pub fn new(rate_per_sec: f64) -> Self {
        Self { interval: Duration::from_secs_f64(1.0 / rate_per_sec), next: Mutex::new(Instant::now()) }
    }

    /// Waits until a token is available and takes it.
    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next.lock().expect("bucket poisoned");
            let now = Instant::now();
            let slot = (*next).max(now);
            *next = slot + self.interval;
            slot - now
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

/// Hash of the path and body, sent as `Idempotency-Key` on every attempt.
pub fn idempotency_key(path: &str, body: &Value) -> String {
    let mut bytes = path.as_bytes().to_vec();
    bytes.push(b'\n');
    bytes.extend(serde_json::to_vec(body).expect("json value serializes"));
    sha256_hex(&bytes)
}

/// JSON-over-HTTP with retries, backoff and optional rate limiting.
#[derive(Debug, Clone)]
pub struct HttpTransport {
    client: Client,
    config: HttpConfig,
    bucket: Option<Arc<TokenBucket>>,
}

impl HttpTransport {
    pub fn new(config: HttpConfig) -> Result<Self> {
        config.validate()?;
        let client = Client::builder()
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        let bucket = config.rate_per_sec.map(|r| Arc::new(TokenBucket::new(r)));
        Ok(Self { client, config, bucket })
    }

    /// Shares one bucket between several clients.
    pub fn with_bucket(mut self, bucket: Arc<TokenBucket>) -> Self {
        self.bucket = Some(bucket);
        self
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.config.endpoint.trim_end_matches('/'), path.trim_start_matches('/'))
    }

    /// POSTs `body` and returns the JSON reply.
    ///
    /// Connection failures, timeouts, 429 and 5xx replies are retried with
    /// exponential backoff; other 4xx replies fail at once. Failures are
    /// wrapped with `wrap` so callers choose the error kind.
    pub fn post_json(&self, path: &str, body: &Value, wrap: fn(String) -> Error) -> Result<Value> {
        let key = idempotency_key(path, body);
        let url = self.url(path);
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff(attempt - 1));
            }
            if let Some(b) = &self.bucket {
                b.acquire();
            }
            let mut req = self.client.post(&url).header("Idempotency-Key", &key).json(body);
            if let Some(token) = &self.config.api_key {
                req = req.bearer_auth(token);
            }
            match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp.json::<Value>().map_err(|e| wrap(format!("{url}: unreadable reply: {e}")));
                    }
                    let text = resp.text().unwrap_or_default();
                    last = format!("{url}: HTTP {status}: {}", text.chars().take(200).collect::<String>());
                    if !(status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS) {
                        return Err(wrap(last));
                    }
                }
                Err(e) => last = format!("{url}: {e}"),
            }
            log::warn!("attempt {} failed: {last}", attempt + 1);
        }
        Err(wrap(format!("gave up after {} attempts: {last}", self.config.retries + 1)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_and_caps() {
        let c = HttpConfig { backoff_ms: 100, max_backoff_ms: 500, ..HttpConfig::default() };
        let ms: Vec<u128> = (0..5).map(|a| c.backoff(a).as_millis()).collect();
        assert_eq!(ms, [100, 200, 400, 500, 500]);
    }

    #[test]
    fn key_depends_on_path_and_body() {
        let a = idempotency_key("/x", &serde_json::json!({"a": 1, "b": 2}));
        assert_eq!(a, idempotency_key("/x", &serde_json::json!({"b": 2, "a": 1})));
        assert_ne!(a, idempotency_key("/y", &serde_json::json!({"a": 1, "b": 2})));
    }

    #[test]
    fn bucket_spaces_requests() {
        let b = TokenBucket::new(50.0);
        let t = Instant::now();
        for _ in 0..6 {
            b.acquire();
        }
        assert!(t.elapsed() >= Duration::from_millis(95));
    }

    #[test]
    fn rejects_non_http_endpoint() {
        assert!(matches!(HttpTransport::new(HttpConfig::new("ftp://x")), Err(Error::Config(_))));
    }
}
