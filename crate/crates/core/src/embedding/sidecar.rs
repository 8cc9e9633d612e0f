//! Client for an external embedding server.
//!
//! The protocol is newline-delimited JSON. Each request
//! `{"id": int, "op": "embed", "texts": [str]}` is answered by exactly one
//! line, either `{"id": int, "dim": int, "vectors": [[float]]}` or
//! `{"id": int, "error": str}`. Responses are matched to requests by id.
//!
//! Endpoints are `host:port` (optionally prefixed `tcp://`) or
//! `stdio:<command> [args...]`, which spawns the server as a child process
//! and talks over its stdin/stdout.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Embedder, MAX_BATCH};
use crate::error::{Error, Result};

/// Requests written before the client waits for responses.
pub const MAX_IN_FLIGHT: usize = 4;

const IO_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub id: u64,
    pub op: String,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EmbedResponse {
    Vectors {
        id: u64,
        dim: usize,
        vectors: Vec<Vec<f32>>,
    },
    Error {
        id: u64,
        error: String,
    },
}

impl EmbedResponse {
    pub fn id(&self) -> u64 {
        match self {
            EmbedResponse::Vectors { id, .. } | EmbedResponse::Error { id, .. } => *id,
        }
    }
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

pub struct SidecarEmbedder {
    endpoint: String,
    dim: usize,
    next_id: u64,
    conn: Option<Connection>,
}

impl SidecarEmbedder {
    /// Lazily connects on first use.
    pub fn new(endpoint: &str, dim: usize) -> Self {
        Self {
            endpoint: endpoint.to_owned(),
            dim,
            next_id: 1,
            conn: None,
        }
    }

    fn unavailable(&self, reason: impl std::fmt::Display) -> Error {
        Error::SidecarUnavailable {
            endpoint: self.endpoint.clone(),
            reason: reason.to_string(),
        }
    }

    fn connect(&self) -> Result<Connection> {
        if let Some(cmd) = self.endpoint.strip_prefix("stdio:") {
            let mut parts = cmd.split_whitespace();
            let program = parts
                .next()
                .ok_or_else(|| self.unavailable("empty command"))?;
            let mut child = Command::new(program)
                .args(parts)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()
                .map_err(|e| self.unavailable(e))?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            return Ok(Connection {
                reader: Box::new(BufReader::new(stdout)),
                writer: Box::new(stdin),
                child: Some(child),
            });
        }
        let addr = self
            .endpoint
            .strip_prefix("tcp://")
            .unwrap_or(&self.endpoint);
        let stream = TcpStream::connect(addr).map_err(|e| self.unavailable(e))?;
        stream
            .set_read_timeout(Some(IO_TIMEOUT))
            .and_then(|_| stream.set_write_timeout(Some(IO_TIMEOUT)))
            .map_err(|e| self.unavailable(e))?;
        let read_half = stream.try_clone().map_err(|e| self.unavailable(e))?;
        Ok(Connection {
            reader: Box::new(BufReader::new(read_half)),
            writer: Box::new(stream),
            child: None,
        })
    }

    fn send(&mut self, req: &EmbedRequest) -> Result<()> {
        let mut line = serde_json::to_vec(req).expect("request serializes");
        line.push(b'\n');
        let result = {
            let conn = self.conn.as_mut().expect("connected");
            conn.writer
                .write_all(&line)
                .and_then(|_| conn.writer.flush())
        };
        result.map_err(|e| {
            self.conn = None;
            self.unavailable(e)
        })
    }

    fn receive(&mut self) -> Result<EmbedResponse> {
        let mut line = String::new();
        let read = {
            let conn = self.conn.as_mut().expect("connected");
            conn.reader.read_line(&mut line)
        };
        match read {
            Ok(0) => {
                self.conn = None;
                Err(self.unavailable("connection closed"))
            }
            Ok(_) => serde_json::from_str(&line)
                .map_err(|e| self.unavailable(format!("malformed response: {e}"))),
            Err(e) => {
                self.conn = None;
                Err(self.unavailable(e))
            }
        }
    }

    fn check(&self, texts: &[String], resp: EmbedResponse) -> Result<Vec<Vec<f32>>> {
        match resp {
            EmbedResponse::Error { error, .. } => {
                Err(self.unavailable(format!("server error: {error}")))
            }
            EmbedResponse::Vectors { dim, vectors, .. } => {
                if vectors.len() != texts.len() {
                    return Err(self.unavailable(format!(
                        "{} vectors for {} texts",
                        vectors.len(),
                        texts.len()
                    )));
                }
                for v in std::iter::once(dim).chain(vectors.iter().map(Vec::len)) {
                    if v != self.dim {
                        return Err(Error::DimensionMismatch {
                            expected: self.dim,
                            got: v,
                        });
                    }
                }
                Ok(vectors)
            }
        }
    }
}

impl Embedder for SidecarEmbedder {
    fn backend_id(&self) -> String {
        format!("sidecar/{}", self.endpoint)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&mut self, texts: &[String]) -> Result<Vec<Vec<f32>>> {
        let mut out = self.embed_batches(&[texts.to_vec()])?;
        Ok(out.pop().expect("one batch"))
    }

    fn embed_batches(&mut self, batches: &[Vec<String>]) -> Result<Vec<Vec<Vec<f32>>>> {
        if let Some(b) = batches.iter().find(|b| b.len() > MAX_BATCH) {
            return Err(Error::InvalidConfig(format!(
                "batch of {} exceeds the limit of {MAX_BATCH}",
                b.len()
            )));
        }
        if self.conn.is_none() {
            self.conn = Some(self.connect()?);
        }
        let mut results: Vec<Option<Vec<Vec<f32>>>> = vec![None; batches.len()];
        let mut in_flight: HashMap<u64, usize> = HashMap::new();
        let mut next = 0;
        while next < batches.len() || !in_flight.is_empty() {
            while next < batches.len() && in_flight.len() < MAX_IN_FLIGHT {
                let id = self.next_id;
                self.next_id += 1;
                self.send(&EmbedRequest {
                    id,
                    op: "embed".into(),
                    texts: batches[next].clone(),
                })?;
                in_flight.insert(id, next);
                next += 1;
            }
            let resp = self.receive()?;
            let slot = in_flight
                .remove(&resp.id())
                .ok_or_else(|| self.unavailable(format!("unexpected response id {}", resp.id())))?;
            results[slot] = Some(self.check(&batches[slot], resp)?);
        }
        Ok(results.into_iter().map(|r| r.expect("answered")).collect())
    }
}
