//! Thin typed client for the gridsafe service.

use gridsafe_core::api::{
    ApiError, ErrorBody, Health, OpenSessionRequest, SafeSetRequest, SafeSetResponse, SessionInfo, SimulateRequest,
    SimulateResponse,
};
use reqwest::{Response, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::tcp::{OwnedReadHalf, OwnedWriteHalf};
use tokio::net::{TcpStream, ToSocketAddrs};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport error: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server returned {status}: {} ({})", .error.message, .error.kind)]
    Api { status: u16, error: ApiError },
    #[error("unexpected response ({status}): {body}")]
    Unexpected { status: u16, body: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("connection closed by peer")]
    Closed,
}

impl ClientError {
    /// Process exit code matching the server-side failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            ClientError::Api { error, .. } => error.exit_code,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        Client {
            base: base_url.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    pub async fn health(&self) -> Result<Health> {
        decode(self.http.get(self.url("/v1/health")).send().await?).await
    }

    pub async fn safeset(&self, req: &SafeSetRequest) -> Result<SafeSetResponse> {
        self.post("/v1/safeset", req).await
    }

    pub async fn simulate(&self, req: &SimulateRequest) -> Result<SimulateResponse> {
        self.post("/v1/simulate", req).await
    }

    pub async fn open_session(&self, req: &OpenSessionRequest) -> Result<SessionInfo> {
        self.post("/v1/sessions", req).await
    }

    /// Sends one protocol frame; protocol errors are returned in-band.
    pub async fn frame(&self, id: u64, frame: &Value) -> Result<Value> {
        self.post(&format!("/v1/sessions/{id}/frame"), frame).await
    }

    /// Sends a raw frame line unchanged, malformed or not.
    pub async fn frame_raw(&self, id: u64, line: &str) -> Result<Value> {
        let resp = self
            .http
            .post(self.url(&format!("/v1/sessions/{id}/frame")))
            .body(line.to_string())
            .send()
            .await?;
        decode(resp).await
    }

    pub async fn close_session(&self, id: u64) -> Result<()> {
        let resp = self.http.delete(self.url(&format!("/v1/sessions/{id}"))).send().await?;
        if resp.status().is_success() {
            Ok(())
        } else {
            Err(error_from(resp).await)
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn post<B: Serialize + ?Sized, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        decode(self.http.post(self.url(path)).json(body).send().await?).await
    }
}

async fn decode<T: DeserializeOwned>(resp: Response) -> Result<T> {
    if resp.status() == StatusCode::OK {
        let bytes = resp.bytes().await?;
        Ok(serde_json::from_slice(&bytes)?)
    } else {
        Err(error_from(resp).await)
    }
}

async fn error_from(resp: Response) -> ClientError {
    let status = resp.status().as_u16();
    match resp.text().await {
        Ok(body) => match serde_json::from_str::<ErrorBody>(&body) {
            Ok(b) => ClientError::Api { status, error: b.error },
            Err(_) => ClientError::Unexpected { status, body },
        },
        Err(e) => e.into(),
    }
}

/// One session over the line-delimited TCP protocol.
pub struct NdjsonClient {
    lines: tokio::io::Lines<BufReader<OwnedReadHalf>>,
    writer: OwnedWriteHalf,
}

impl NdjsonClient {
    pub async fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let (r, w) = TcpStream::connect(addr).await?.into_split();
        Ok(NdjsonClient {
            lines: BufReader::new(r).lines(),
            writer: w,
        })
    }

    pub async fn request(&mut self, frame: &Value) -> Result<Value> {
        self.request_raw(&frame.to_string()).await
    }

    pub async fn request_raw(&mut self, line: &str) -> Result<Value> {
        self.writer.write_all(line.as_bytes()).await?;
        self.writer.write_all(b"\n").await?;
        self.writer.flush().await?;
        let reply = self.lines.next_line().await?.ok_or(ClientError::Closed)?;
        Ok(serde_json::from_str(&reply)?)
    }
}
