//! Blocking JSON-over-HTTP client shared by the generic REST adapters.

use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RestClient {
    provider_id: String,
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl RestClient {
    /// `api_key` comes from the environment, never from config files.
    pub fn new(
        provider_id: impl Into<String>,
        endpoint: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self> {
        let provider_id = provider_id.into();
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::unavailable(provider_id.clone(), e))?;
        Ok(Self {
            provider_id,
            endpoint: endpoint.into(),
            api_key,
            client,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn post_json<T: Serialize + ?Sized>(&self, body: &T) -> Result<Vec<u8>> {
        let mut request = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| Error::unavailable(self.provider_id.clone(), e))?;
        let status = response.status();
        if !status.is_success() {
            return Err(Error::unavailable(
                self.provider_id.clone(),
                format!("HTTP {status} from {}", self.endpoint),
            ));
        }
        response
            .bytes()
            .map(|b| b.to_vec())
            .map_err(|e| Error::unavailable(self.provider_id.clone(), e))
    }

    /// Cheap reachability check: any HTTP response counts as reachable.
    pub fn probe(&self) -> bool {
        self.client
            .head(&self.endpoint)
            .timeout(Duration::from_secs(3))
            .send()
            .is_ok()
    }
}
