use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use crate::IngestError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Blocking HTTP GET. Implementations report connection-level failures as
/// [`IngestError::Transport`] and return any HTTP status as a response.
pub trait HttpTransport: Send + Sync {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<HttpResponse, IngestError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(60))
    }
}

impl HttpTransport for UreqTransport {
    fn get(&self, url: &str, headers: &[(String, String)]) -> Result<HttpResponse, IngestError> {
        let mut request = self.agent.get(url);
        for (name, value) in headers {
            request = request.header(name.as_str(), value.as_str());
        }
        let mut response = request.call().map_err(|e| IngestError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .with_config()
            .limit(256 * 1024 * 1024)
            .read_to_string()
            .map_err(|e| IngestError::Transport(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

/// Refuses every request; counts the attempts.
#[derive(Debug, Default)]
pub struct OfflineTransport {
    attempts: AtomicUsize,
}

impl OfflineTransport {
    pub fn attempts(&self) -> usize {
        self.attempts.load(Ordering::SeqCst)
    }
}

impl HttpTransport for OfflineTransport {
    fn get(&self, url: &str, _headers: &[(String, String)]) -> Result<HttpResponse, IngestError> {
        self.attempts.fetch_add(1, Ordering::SeqCst);
        Err(IngestError::Transport(format!("offline: refused request to {url}")))
    }
}

/// Serves recorded responses keyed by URL. Unknown URLs get a 404. Failures
/// can be scripted per URL to exercise retries.
#[derive(Debug, Default)]
pub struct FixtureTransport {
    responses: BTreeMap<String, HttpResponse>,
    failures: Mutex<BTreeMap<String, usize>>,
    calls: Mutex<Vec<String>>,
}

impl FixtureTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, url: impl Into<String>, status: u16, body: impl Into<String>) -> Self {
        self.responses.insert(
            url.into(),
            HttpResponse {
                status,
                body: body.into(),
            },
        );
        self
    }

    /// The next `count` requests to `url` fail at the connection level.
    pub fn failing(self, url: impl Into<String>, count: usize) -> Self {
        self.failures.lock().expect("lock").insert(url.into(), count);
        self
    }

    pub fn calls(&self) -> Vec<String> {
        self.calls.lock().expect("lock").clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().expect("lock").len()
    }
}

impl HttpTransport for FixtureTransport {
    fn get(&self, url: &str, _headers: &[(String, String)]) -> Result<HttpResponse, IngestError> {
        self.calls.lock().expect("lock").push(url.to_string());
        if let Some(left) = self.failures.lock().expect("lock").get_mut(url) {
            if *left > 0 {
                *left -= 1;
                return Err(IngestError::Transport(format!("scripted failure for {url}")));
            }
        }
        Ok(self.responses.get(url).cloned().unwrap_or(HttpResponse {
            status: 404,
            body: String::new(),
        }))
    }
}
