//! JSON-over-HTTP plumbing shared by the remote adapters: a swappable
//! transport, bounded geometric retry and a per-endpoint in-flight limit.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::ProviderError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Sends one POST. Errors are connection-level failures; HTTP statuses,
/// including error statuses, come back as responses.
pub trait Transport: Send + Sync {
    fn post(&self, req: &HttpRequest) -> Result<HttpResponse, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent }
    }
}

impl Transport for UreqTransport {
    fn post(&self, req: &HttpRequest) -> Result<HttpResponse, String> {
        let mut builder = self.agent.post(&req.url).header("content-type", "application/json");
        for (k, v) in &req.headers {
            builder = builder.header(k, v);
        }
        let mut resp = builder.send(req.body.as_str()).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpResponse { status, body })
    }
}

/// Attempts are capped at `max_attempts`; the wait before attempt `n + 1`
/// is `initial_delay · multiplier^(n − 1)`, capped at `max_delay`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_delay_ms: u64,
    pub multiplier: f64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            initial_delay_ms: 500,
            multiplier: 2.0,
            max_delay_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_attempts == 0 {
            return Err("max_attempts must be at least 1".into());
        }
        if !(self.multiplier.is_finite() && self.multiplier >= 1.0) {
            return Err("retry multiplier must be at least 1".into());
        }
        Ok(())
    }

    /// Delay after the `attempt`-th failure (1-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        let ms = self.initial_delay_ms as f64 * self.multiplier.powi(attempt.saturating_sub(1) as i32);
        Duration::from_millis(ms.min(self.max_delay_ms as f64) as u64)
    }
}

pub trait Sleeper: Send + Sync {
    fn sleep(&self, d: Duration);
}

pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// Counting semaphore capping concurrent requests.
#[derive(Debug)]
pub struct InFlightLimit {
    max: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

pub struct InFlightGuard<'a> {
    limit: &'a InFlightLimit,
}

impl InFlightLimit {
    pub fn new(max: usize) -> Self {
        Self {
            max: max.max(1),
            active: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> InFlightGuard<'_> {
        let mut n = self.active.lock().expect("limiter lock");
        while *n >= self.max {
            n = self.freed.wait(n).expect("limiter lock");
        }
        *n += 1;
        InFlightGuard { limit: self }
    }

    pub fn active(&self) -> usize {
        *self.active.lock().expect("limiter lock")
    }
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.limit.active.lock().expect("limiter lock") -= 1;
        self.limit.freed.notify_one();
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivered {
    pub response: HttpResponse,
    pub attempts: u32,
}

fn retryable(status: u16) -> bool {
    status == 429 || status == 408 || status >= 500
}

/// A transport plus retry, back-off and concurrency policy for one endpoint.
#[derive(Clone)]
pub struct HttpClient {
    transport: Arc<dyn Transport>,
    retry: RetryPolicy,
    sleeper: Arc<dyn Sleeper>,
    limit: Arc<InFlightLimit>,
}

impl HttpClient {
    pub fn new(transport: Arc<dyn Transport>, retry: RetryPolicy, max_in_flight: usize) -> Self {
        Self {
            transport,
            retry,
            sleeper: Arc::new(ThreadSleeper),
            limit: Arc::new(InFlightLimit::new(max_in_flight)),
        }
    }

    pub fn with_sleeper(mut self, sleeper: Arc<dyn Sleeper>) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn retry(&self) -> &RetryPolicy {
        &self.retry
    }

    /// Posts until a 2xx arrives, a non-retryable status is seen or the
    /// attempt budget runs out.
    pub fn post(&self, req: &HttpRequest) -> Result<Delivered, ProviderError> {
        let max = self.retry.max_attempts.max(1);
        let mut last: Option<ProviderError> = None;
        for attempt in 1..=max {
            let outcome = {
                let _slot = self.limit.acquire();
                self.transport.post(req)
            };
            match outcome {
                Ok(r) if (200..300).contains(&r.status) => {
                    return Ok(Delivered {
                        response: r,
                        attempts: attempt,
                    })
                }
                Ok(r) if !retryable(r.status) => {
                    return Err(ProviderError::Http {
                        status: r.status,
                        body: r.body,
                        attempts: attempt,
                    })
                }
                Ok(r) => {
                    log::warn!("{} returned {} (attempt {attempt}/{max})", req.url, r.status);
                    last = Some(if r.status == 429 {
                        ProviderError::RateLimited { attempts: attempt }
                    } else {
                        ProviderError::Http {
                            status: r.status,
                            body: r.body,
                            attempts: attempt,
                        }
                    });
                }
                Err(message) => {
                    log::warn!("{} failed: {message} (attempt {attempt}/{max})", req.url);
                    last = Some(ProviderError::Transport {
                        message,
                        attempts: attempt,
                    });
                }
            }
            if attempt < max {
                self.sleeper.sleep(self.retry.delay(attempt));
            }
        }
        Err(last.expect("at least one attempt"))
    }

    pub fn post_json(
        &self,
        url: &str,
        api_key: Option<&str>,
        body: &serde_json::Value,
    ) -> Result<(serde_json::Value, u32), ProviderError> {
        let mut headers = Vec::new();
        if let Some(k) = api_key {
            headers.push(("authorization".to_owned(), format!("Bearer {k}")));
        }
        let req = HttpRequest {
            url: url.to_owned(),
            headers,
            body: body.to_string(),
        };
        let d = self.post(&req)?;
        let v = serde_json::from_str(&d.response.body)
            .map_err(|e| ProviderError::MalformedResponse(format!("response is not JSON: {e}")))?;
        Ok((v, d.attempts))
    }
}
