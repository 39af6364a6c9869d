//! Chat-completions provider over HTTP. The endpoint, model name, and
//! timeout come from [`ModelConfig`]; the API key comes from the
//! `S2RQ_API_KEY` environment variable.

use serde::Deserialize;
use serde_json::json;

use super::{GatewayError, ModelConfig, PromptRequest, Provider, ProviderKind, API_KEY_ENV};

pub struct RemoteProvider {
    endpoint: String,
    model: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl RemoteProvider {
    pub fn from_config(config: &ModelConfig) -> Result<RemoteProvider, GatewayError> {
        let endpoint = config.endpoint.clone().ok_or_else(|| {
            GatewayError::InvalidConfig("remote provider requires an endpoint URL".to_string())
        })?;
        let api_key = std::env::var(API_KEY_ENV).map_err(|_| {
            GatewayError::InvalidConfig(format!("remote provider requires {API_KEY_ENV} to be set"))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        Ok(RemoteProvider {
            endpoint,
            model: config.model_name.clone(),
            api_key,
            client,
        })
    }
}

impl Provider for RemoteProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::RemoteApi
    }

    fn complete(&self, request: &PromptRequest<'_>) -> Result<String, GatewayError> {
        let body = json!({
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": request.prompt}],
        });
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = response.status();
        if status.is_server_error() {
            return Err(GatewayError::Transport(format!("HTTP {status}")));
        }
        if !status.is_success() {
            // Quota and auth problems are surfaced with the provider message
            // and never retried.
            let text = response.text().unwrap_or_default();
            return Err(GatewayError::Provider(format!("HTTP {status}: {text}")));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| GatewayError::Provider(format!("malformed provider response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| GatewayError::Provider("provider returned no choices".to_string()))
    }
}
