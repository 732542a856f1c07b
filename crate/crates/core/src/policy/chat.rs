//! Client for an OpenAI-style `/v1/chat/completions` endpoint.

use std::time::Duration;

use thiserror::Error;

use super::prompt::ChatRequest;

pub const BASE_URL_ENV: &str = "LORO_LLM_BASE_URL";
pub const API_KEY_ENV: &str = "LORO_LLM_API_KEY";

#[derive(Debug, Error)]
pub enum ChatError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned status {status} after {attempts} attempt(s): {body}")]
    Status {
        status: u16,
        attempts: u32,
        body: String,
    },
    #[error("malformed response body: {0}")]
    Malformed(String),
    #[error("chat endpoint not configured: set {0}")]
    NotConfigured(&'static str),
}

/// Anything that can answer a chat request with completion text.
pub trait ChatTransport: Send {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, ChatError>;
}

/// Raw response of one POST.
#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// One HTTP POST of a JSON body. Errors are transport failures (connection
/// refused, timeout, ...); HTTP error statuses come back as responses.
pub trait HttpPost: Send {
    fn post_json(
        &mut self,
        url: &str,
        api_key: Option<&str>,
        body: &str,
    ) -> Result<HttpResponse, String>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }
}

impl RetryPolicy {
    /// Backoff before retry number `attempt` (1-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        self.initial_backoff
            .saturating_mul(1u32 << (attempt - 1).min(16))
    }
}

fn retryable(status: u16) -> bool {
    status == 429 || status >= 500
}

/// Chat client over any [`HttpPost`].
pub struct HttpChatClient<P: HttpPost> {
    pub base_url: String,
    pub api_key: Option<String>,
    pub retry: RetryPolicy,
    post: P,
}

impl<P: HttpPost> HttpChatClient<P> {
    /// The underlying HTTP poster.
    pub fn transport(&self) -> &P {
        &self.post
    }

    pub fn with_transport(base_url: impl Into<String>, api_key: Option<String>, post: P) -> Self {
        HttpChatClient {
            base_url: base_url.into(),
            api_key,
            retry: RetryPolicy::default(),
            post,
        }
    }

    pub fn endpoint(&self) -> String {
        format!(
            "{}/v1/chat/completions",
            self.base_url.trim_end_matches('/')
        )
    }
}

/// `choices[0].message.content` of a completion response.
pub fn parse_completion(body: &str) -> Result<String, ChatError> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| ChatError::Malformed(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(|c| c.as_str())
        .map(str::to_string)
        .ok_or_else(|| ChatError::Malformed("missing choices[0].message.content".into()))
}

impl<P: HttpPost> ChatTransport for HttpChatClient<P> {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, ChatError> {
        let url = self.endpoint();
        let body = request.to_json();
        let attempts = self.retry.attempts.max(1);
        let mut last = None;
        for attempt in 1..=attempts {
            match self.post.post_json(&url, self.api_key.as_deref(), &body) {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    return parse_completion(&resp.body)
                }
                Ok(resp) if !retryable(resp.status) => {
                    return Err(ChatError::Status {
                        status: resp.status,
                        attempts: attempt,
                        body: resp.body,
                    })
                }
                Ok(resp) => {
                    last = Some(ChatError::Status {
                        status: resp.status,
                        attempts: attempt,
                        body: resp.body,
                    })
                }
                Err(message) => {
                    last = Some(ChatError::Transport {
                        attempts: attempt,
                        message,
                    })
                }
            }
            if attempt < attempts {
                std::thread::sleep(self.retry.delay(attempt));
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

#[cfg(feature = "http")]
pub use ureq_backend::UreqPost;

#[cfg(feature = "http")]
mod ureq_backend {
    use super::*;

    /// Blocking POST via ureq.
    pub struct UreqPost {
        agent: ureq::Agent,
    }

    impl UreqPost {
        pub fn new(timeout: Duration) -> Self {
            let config = ureq::Agent::config_builder()
                .timeout_global(Some(timeout))
                .http_status_as_error(false)
                .build();
            UreqPost {
                agent: config.into(),
            }
        }
    }

    impl Default for UreqPost {
        fn default() -> Self {
            UreqPost::new(Duration::from_secs(120))
        }
    }

    impl HttpPost for UreqPost {
        fn post_json(
            &mut self,
            url: &str,
            api_key: Option<&str>,
            body: &str,
        ) -> Result<HttpResponse, String> {
            let mut req = self
                .agent
                .post(url)
                .header("Content-Type", "application/json");
            if let Some(key) = api_key {
                req = req.header("Authorization", &format!("Bearer {key}"));
            }
            let mut resp = req.send(body).map_err(|e| e.to_string())?;
            let status = resp.status().as_u16();
            let body = resp
                .body_mut()
                .read_to_string()
                .map_err(|e| e.to_string())?;
            Ok(HttpResponse { status, body })
        }
    }

    impl HttpChatClient<UreqPost> {
        pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Self {
            HttpChatClient::with_transport(base_url, api_key, UreqPost::default())
        }

        /// Endpoint and key from the environment.
        pub fn from_env() -> Result<Self, ChatError> {
            let base =
                std::env::var(BASE_URL_ENV).map_err(|_| ChatError::NotConfigured(BASE_URL_ENV))?;
            let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
            Ok(HttpChatClient::new(base, key))
        }
    }
}

/// Replays canned completions in order, cycling when exhausted. Records every
/// request it saw.
#[derive(Debug, Clone, Default)]
pub struct ScriptedChat {
    pub replies: Vec<String>,
    pub requests: Vec<ChatRequest>,
    next: usize,
}

impl ScriptedChat {
    pub fn new<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        ScriptedChat {
            replies: replies.into_iter().map(Into::into).collect(),
            requests: Vec::new(),
            next: 0,
        }
    }
}

impl ChatTransport for ScriptedChat {
    fn complete(&mut self, request: &ChatRequest) -> Result<String, ChatError> {
        self.requests.push(request.clone());
        if self.replies.is_empty() {
            return Err(ChatError::Malformed("no canned replies".into()));
        }
        let r = self.replies[self.next % self.replies.len()].clone();
        self.next += 1;
        Ok(r)
    }
}
