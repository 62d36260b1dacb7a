//! Blocking JSON-over-HTTP helper shared by the external service clients.

use std::time::Duration;

use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct JsonPoster {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
    timeout_ms: u64,
}

impl JsonPoster {
    pub(crate) fn new(endpoint: &str, api_key: Option<String>, timeout_ms: u64) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint: endpoint.to_string(),
            api_key,
            timeout_ms,
        }
    }

    pub(crate) fn post(&self, body: &Value) -> Result<Value> {
        let mut req = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| self.transport_error(e))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(Error::Service {
                status: Some(status),
                message: text,
            });
        }
        resp.body_mut()
            .read_json::<Value>()
            .map_err(|e| self.transport_error(e))
    }

    fn transport_error(&self, err: ureq::Error) -> Error {
        match err {
            ureq::Error::Timeout(_) => Error::Timeout {
                timeout_ms: self.timeout_ms,
            },
            ureq::Error::StatusCode(code) => Error::Service {
                status: Some(code),
                message: format!("HTTP {code}"),
            },
            other => Error::Service {
                status: None,
                message: other.to_string(),
            },
        }
    }
}

/// Reads an API key from the environment variable named `var`, if any.
pub(crate) fn api_key_from_env(var: Option<&str>) -> Result<Option<String>> {
    match var {
        None => Ok(None),
        Some(name) => match std::env::var(name) {
            Ok(v) if !v.is_empty() => Ok(Some(v)),
            _ => Err(Error::InvalidInput(format!(
                "environment variable `{name}` with the service API key is not set"
            ))),
        },
    }
}
