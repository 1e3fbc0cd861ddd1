//! Async client for the partscale HTTP service.

use partscale::ZoneEdit;
use partscale_api::wire::{DecomposeRequest, DecomposeResponse, ObjectList};
use partscale_api::{AtlasBundle, ErrorBody, History, ObjectInfo};
use reqwest::header::{CONTENT_TYPE, IF_MATCH};
use reqwest::{RequestBuilder, Response, StatusCode};
use serde::de::DeserializeOwned;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    /// The service answered with an error body.
    #[error("{status}: {body}")]
    Api { status: StatusCode, body: ErrorBody },
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Transport(e) => e.status(),
        }
    }

    /// Error body, synthesized for transport failures.
    pub fn body(&self) -> ErrorBody {
        match self {
            ClientError::Api { body, .. } => body.clone(),
            ClientError::Transport(e) => ErrorBody::new("transport", e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

/// Which grid an atlas request reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtlasResolution {
    Full,
    Preview,
}

#[derive(Clone, Debug)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Client {
        Client {
            base: base.into().trim_end_matches('/').to_owned(),
            http: reqwest::Client::new(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn send(req: RequestBuilder) -> Result<Response> {
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let bytes = resp.bytes().await?;
        let body = serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| ErrorBody::new("http", String::from_utf8_lossy(&bytes).into_owned()));
        Err(ClientError::Api { status, body })
    }

    async fn json<T: DeserializeOwned>(req: RequestBuilder) -> Result<T> {
        Ok(Client::send(req).await?.json().await?)
    }

    async fn bytes(req: RequestBuilder) -> Result<Vec<u8>> {
        Ok(Client::send(req).await?.bytes().await?.to_vec())
    }

    fn edit_body(req: RequestBuilder, edit: &ZoneEdit) -> RequestBuilder {
        req.header(CONTENT_TYPE, "application/json")
            .body(serde_json::to_vec(edit).expect("zone edits serialize"))
    }

    fn if_match(req: RequestBuilder, version: Option<usize>) -> RequestBuilder {
        match version {
            Some(v) => req.header(IF_MATCH, format!("\"{v}\"")),
            None => req,
        }
    }

    pub async fn health(&self) -> Result<()> {
        Client::send(self.http.get(self.url("/health"))).await.map(drop)
    }

    pub async fn list(&self) -> Result<ObjectList> {
        Client::json(self.http.get(self.url("/objects"))).await
    }

    /// Upload a CSDF binary or a mesh; `format` overrides content sniffing.
    pub async fn upload(&self, bytes: Vec<u8>, format: Option<&str>) -> Result<ObjectInfo> {
        let mut req = self.http.post(self.url("/objects")).body(bytes);
        if let Some(f) = format {
            req = req.query(&[("format", f)]);
        }
        Client::json(req).await
    }

    pub async fn info(&self, id: &str) -> Result<ObjectInfo> {
        Client::json(self.http.get(self.url(&format!("/objects/{id}")))).await
    }

    /// Grid payload at `version`, or the current one.
    pub async fn csdf(&self, id: &str, version: Option<usize>) -> Result<Vec<u8>> {
        let mut req = self.http.get(self.url(&format!("/objects/{id}/csdf")));
        if let Some(v) = version {
            req = req.query(&[("version", v)]);
        }
        Client::bytes(req).await
    }

    pub async fn atlas(&self, id: &str, resolution: AtlasResolution) -> Result<AtlasBundle> {
        let res = match resolution {
            AtlasResolution::Full => "full",
            AtlasResolution::Preview => "preview",
        };
        let req = self.http.get(self.url(&format!("/objects/{id}/atlas"))).query(&[("resolution", res)]);
        Client::json(req).await
    }

    pub async fn preview(&self, id: &str, edit: &ZoneEdit) -> Result<AtlasBundle> {
        let req = self.http.post(self.url(&format!("/objects/{id}/preview")));
        Client::json(Client::edit_body(req, edit)).await
    }

    /// Apply `edit` at full resolution. With `expected` set the commit only
    /// succeeds if the object is still at that version.
    pub async fn commit(&self, id: &str, edit: &ZoneEdit, expected: Option<usize>) -> Result<ObjectInfo> {
        let req = self.http.post(self.url(&format!("/objects/{id}/commit")));
        Client::json(Client::if_match(Client::edit_body(req, edit), expected)).await
    }

    pub async fn decompose(&self, id: &str, req: &DecomposeRequest, expected: Option<usize>) -> Result<DecomposeResponse> {
        let r = self
            .http
            .post(self.url(&format!("/objects/{id}/decompose")))
            .header(CONTENT_TYPE, "application/json")
            .body(serde_json::to_vec(req).expect("requests serialize"));
        Client::json(Client::if_match(r, expected)).await
    }

    pub async fn render(&self, id: &str, width: u32, height: u32, parts: bool) -> Result<Vec<u8>> {
        let req = self
            .http
            .get(self.url(&format!("/objects/{id}/render")))
            .query(&[("w", width.to_string()), ("h", height.to_string()), ("parts", parts.to_string())]);
        Client::bytes(req).await
    }

    pub async fn history(&self, id: &str) -> Result<History> {
        Client::json(self.http.get(self.url(&format!("/objects/{id}/history")))).await
    }

    /// Send a raw body to a mutation endpoint; for callers that already hold
    /// request JSON.
    pub async fn post_raw(&self, path: &str, body: Vec<u8>) -> Result<Vec<u8>> {
        let req = self
            .http
            .post(self.url(path))
            .header(CONTENT_TYPE, "application/json")
            .body(body);
        Client::bytes(req).await
    }
}
