//! Line-delimited JSON session protocol for external learners.
//!
//! Every request and reply is one JSON object on one line. Replies carry
//! `"v":1`. Requests may omit `v`; if present it must be 1. Errors are
//! reported in-band and leave the session usable.
//!
//! ```text
//! {"op":"reset","seed":3,"day":0}     -> {"v":1,"obs":[...]}
//! {"op":"step","action":[...]}        -> {"v":1,"obs":[...],"reward":r,"done":b,"info":{...}}
//! {"op":"layout"}                     -> {"v":1,"layout":[...],"action_dim":k}
//! {"op":"close"}                      -> {"v":1,"closed":true}
//! ```

use serde::Deserialize;
use serde_json::{json, Value};

use crate::env::{MicrogridEnv, Observation, OBS_LAYOUT_VERSION};
use crate::error::Error;
use crate::shield::Action;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    Reset {
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        day: Option<usize>,
        #[serde(default)]
        v: Option<u32>,
    },
    Step {
        action: Vec<f64>,
        #[serde(default)]
        v: Option<u32>,
    },
    Layout {
        #[serde(default)]
        v: Option<u32>,
    },
    Close {
        #[serde(default)]
        v: Option<u32>,
    },
}

impl Request {
    fn version(&self) -> Option<u32> {
        match self {
            Request::Reset { v, .. } | Request::Step { v, .. } | Request::Layout { v } | Request::Close { v } => *v,
        }
    }
}

/// A protocol-level failure, independent of the simulation error type.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameError {
    pub kind: String,
    pub message: String,
}

impl FrameError {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        FrameError {
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"v": OBS_LAYOUT_VERSION, "error": {"kind": self.kind, "message": self.message}})
    }
}

impl From<Error> for FrameError {
    fn from(e: Error) -> Self {
        FrameError::new(e.kind(), e.to_string())
    }
}

pub fn parse_request(line: &str) -> Result<Request, FrameError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| FrameError::new("malformed", format!("invalid JSON: {e}")))?;
    if !value.is_object() {
        return Err(FrameError::new("malformed", "frame must be a JSON object"));
    }
    let req: Request =
        serde_json::from_value(value).map_err(|e| FrameError::new("bad_request", e.to_string()))?;
    match req.version() {
        None | Some(OBS_LAYOUT_VERSION) => Ok(req),
        Some(other) => Err(FrameError::new(
            "unsupported_version",
            format!("protocol version {other} is not supported (expected {OBS_LAYOUT_VERSION})"),
        )),
    }
}

/// One learner's episode state behind the wire protocol.
pub struct Session {
    env: MicrogridEnv,
    closed: bool,
}

impl Session {
    pub fn new(env: MicrogridEnv) -> Self {
        Session { env, closed: false }
    }

    pub fn env(&self) -> &MicrogridEnv {
        &self.env
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Handles one raw line and returns the reply frame.
    pub fn handle_line(&mut self, line: &str) -> Value {
        match parse_request(line) {
            Ok(req) => self.handle(req),
            Err(e) => e.to_json(),
        }
    }

    pub fn handle(&mut self, req: Request) -> Value {
        if self.closed {
            return FrameError::new("closed", "session is closed").to_json();
        }
        match self.dispatch(req) {
            Ok(v) => v,
            Err(e) => e.to_json(),
        }
    }

    fn dispatch(&mut self, req: Request) -> Result<Value, FrameError> {
        match req {
            Request::Reset { seed, day, .. } => {
                let days = self.env.dataset().days();
                let day = day.unwrap_or((seed % days as u64) as usize);
                let obs = self.env.reset(day, seed)?;
                Ok(json!({"v": OBS_LAYOUT_VERSION, "obs": obs.to_vec()}))
            }
            Request::Step { action, .. } => {
                let n = self.env.config().grid.n();
                let expected = self.env.action_dim();
                if action.len() != expected {
                    return Err(FrameError::new(
                        "dimension",
                        format!("action has {} entries, expected {expected}", action.len()),
                    ));
                }
                let out = self.env.step(&Action::from_flat(&action, n)?)?;
                Ok(json!({
                    "v": OBS_LAYOUT_VERSION,
                    "obs": out.obs.to_vec(),
                    "reward": out.reward,
                    "done": out.done,
                    "info": out.info,
                }))
            }
            Request::Layout { .. } => {
                let cfg = self.env.config();
                Ok(json!({
                    "v": OBS_LAYOUT_VERSION,
                    "layout": Observation::layout(cfg.grid.n(), &cfg.forecast.horizons),
                    "action_dim": self.env.action_dim(),
                }))
            }
            Request::Close { .. } => {
                self.closed = true;
                Ok(json!({"v": OBS_LAYOUT_VERSION, "closed": true}))
            }
        }
    }
}
