//! Line-delimited JSON bridge to out-of-process model backends.
//!
//! Each request is one JSON object on its own line:
//!
//! ```text
//! {"id":1,"op":"masked_topk","args":{"segments":["S","S'"],"tokens":[...],"mask_position":7,"k":120}}
//! {"id":2,"op":"masked_topk","args":{...,"targets":["the","cat"]}}
//! {"id":3,"op":"entail","args":{"premise":"...","hypothesis":"..."}}
//! {"id":4,"op":"embed","args":{"word":"big"}}
//! ```
//!
//! and each response echoes the `id` with either a `result` or an `error`:
//!
//! ```text
//! {"id":1,"result":{"candidates":[["mandatory",0.41],["required",0.12]]}}
//! {"id":2,"result":{"probs":[0.02,0.0004]}}
//! {"id":3,"result":{"prob":0.93}}
//! {"id":4,"result":{"vector":[0.1,-0.2]}}
//! {"id":5,"error":"CUDA out of memory"}
//! ```
//!
//! Requests on one connection are answered in order. The client serializes
//! calls, so backends never see overlapping requests.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, OnceLock};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

use super::{select_topk, Embedder, LmCapabilities, MaskedLm, Nli, PairEncoding, Providers};

pub const ENDPOINT_ENV: &str = "LEXSIMP_ENDPOINT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    MaskedTopk,
    Entail,
    Embed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub op: Op,
    pub args: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// `tcp://host:port` or bare `host:port`.
    Tcp(String),
    /// `exec:program arg...`, spoken to over the child's stdin/stdout.
    Exec(Vec<String>),
}

impl Endpoint {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(cmd) = s.strip_prefix("exec:") {
            let argv: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            if argv.is_empty() {
                return Err(Error::config("endpoint", "exec: needs a command"));
            }
            return Ok(Endpoint::Exec(argv));
        }
        let addr = s.strip_prefix("tcp://").unwrap_or(s);
        if addr
            .rsplit_once(':')
            .is_none_or(|(h, p)| h.is_empty() || p.parse::<u16>().is_err())
        {
            return Err(Error::config(
                "endpoint",
                format!("expected tcp://host:port or exec:command, got {s:?}"),
            ));
        }
        Ok(Endpoint::Tcp(addr.to_string()))
    }
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        // closing stdin lets a well-behaved backend exit on EOF
        self.writer = Box::new(std::io::sink());
        if let Some(child) = self.child.as_mut() {
            let _ = child.wait();
        }
    }
}

/// Client side of the protocol. One instance can serve as masked LM, NLI
/// model and embedder at once.
pub struct RemoteClient {
    conn: Mutex<Connection>,
    next_id: AtomicU64,
    max_sequence_length: usize,
    dim: OnceLock<usize>,
}

fn provider_err(e: impl std::fmt::Display) -> Error {
    Error::ProviderFailure(e.to_string())
}

impl RemoteClient {
    pub fn connect(endpoint: &Endpoint) -> Result<Self> {
        let conn = match endpoint {
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr)
                    .map_err(|e| provider_err(format!("connect {addr}: {e}")))?;
                stream.set_nodelay(true).ok();
                let reader = BufReader::new(stream.try_clone().map_err(provider_err)?);
                Connection {
                    reader: Box::new(reader),
                    writer: Box::new(stream),
                    child: None,
                }
            }
            Endpoint::Exec(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| provider_err(format!("spawn {:?}: {e}", argv[0])))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Connection {
                    reader: Box::new(BufReader::new(stdout)),
                    writer: Box::new(stdin),
                    child: Some(child),
                }
            }
        };
        Ok(RemoteClient {
            conn: Mutex::new(conn),
            next_id: AtomicU64::new(1),
            max_sequence_length: 512,
            dim: OnceLock::new(),
        })
    }

    pub fn with_max_sequence_length(mut self, n: usize) -> Self {
        self.max_sequence_length = n;
        self
    }

    pub fn call(&self, op: Op, args: Value) -> Result<Value> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let mut line = serde_json::to_string(&Request { id, op, args }).map_err(provider_err)?;
        line.push('\n');

        let mut conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        conn.writer
            .write_all(line.as_bytes())
            .and_then(|_| conn.writer.flush())
            .map_err(provider_err)?;
        let mut reply = String::new();
        if conn.reader.read_line(&mut reply).map_err(provider_err)? == 0 {
            return Err(provider_err("backend closed the connection"));
        }
        drop(conn);

        let resp: Response = serde_json::from_str(reply.trim_end())
            .map_err(|e| provider_err(format!("malformed response: {e}")))?;
        if resp.id != id {
            return Err(provider_err(format!(
                "response id {} does not match request id {id}",
                resp.id
            )));
        }
        if let Some(msg) = resp.error {
            return Err(Error::ProviderFailure(msg));
        }
        resp.result
            .ok_or_else(|| provider_err("response has neither result nor error"))
    }
}

fn field<T: for<'de> Deserialize<'de>>(v: &Value, name: &str) -> Result<T> {
    let raw = v
        .get(name)
        .ok_or_else(|| provider_err(format!("missing field {name:?}")))?;
    serde_json::from_value(raw.clone()).map_err(|e| provider_err(format!("field {name:?}: {e}")))
}

fn check_prob(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(provider_err(format!("probability {p} outside [0, 1]")))
    }
}

fn encoding_args(encoding: &PairEncoding) -> Value {
    json!({
        "segments": encoding.segments,
        "tokens": encoding.tokens,
        "mask_position": encoding.mask_position,
    })
}

impl MaskedLm for RemoteClient {
    fn capabilities(&self) -> LmCapabilities {
        LmCapabilities {
            vocab: "remote".into(),
            max_sequence_length: self.max_sequence_length,
        }
    }

    fn masked_topk(&self, encoding: &PairEncoding, k: usize) -> Result<Vec<(String, f64)>> {
        let mut args = encoding_args(encoding);
        args["k"] = json!(k);
        let result = self.call(Op::MaskedTopk, args)?;
        let raw: Vec<(String, f64)> = field(&result, "candidates")?;
        for (_, p) in &raw {
            check_prob(*p)?;
        }
        Ok(select_topk(raw, k))
    }

    fn target_probs(&self, encoding: &PairEncoding, words: &[String]) -> Result<Vec<f64>> {
        let mut args = encoding_args(encoding);
        args["k"] = json!(words.len());
        args["targets"] = json!(words);
        let result = self.call(Op::MaskedTopk, args)?;
        let probs: Vec<f64> = field(&result, "probs")?;
        if probs.len() != words.len() {
            return Err(provider_err(format!(
                "asked for {} target probabilities, got {}",
                words.len(),
                probs.len()
            )));
        }
        probs.into_iter().map(check_prob).collect()
    }

    fn concurrent(&self) -> bool {
        false
    }
}

impl Nli for RemoteClient {
    fn name(&self) -> &str {
        "remote"
    }

    fn entail_prob(&self, premise: &str, hypothesis: &str) -> Result<f64> {
        let result = self.call(
            Op::Entail,
            json!({ "premise": premise, "hypothesis": hypothesis }),
        )?;
        check_prob(field(&result, "prob")?)
    }

    fn concurrent(&self) -> bool {
        false
    }
}

impl Embedder for RemoteClient {
    /// Known after the first `embed` call; 0 before.
    fn dim(&self) -> usize {
        self.dim.get().copied().unwrap_or(0)
    }

    fn embed(&self, word: &str) -> Result<Vec<f64>> {
        let result = self.call(Op::Embed, json!({ "word": word }))?;
        let v: Vec<f64> = field(&result, "vector")?;
        let dim = *self.dim.get_or_init(|| v.len());
        if v.len() != dim {
            return Err(provider_err(format!(
                "embedding dimension changed from {dim} to {}",
                v.len()
            )));
        }
        Ok(v)
    }

    fn concurrent(&self) -> bool {
        false
    }
}

fn dispatch(req: &Request, providers: &Providers) -> Result<Value> {
    match req.op {
        Op::MaskedTopk => {
            let encoding = PairEncoding {
                segments: field(&req.args, "segments")?,
                tokens: field(&req.args, "tokens")?,
                mask_position: field(&req.args, "mask_position")?,
            };
            match req.args.get("targets") {
                Some(t) if !t.is_null() => {
                    let targets: Vec<String> = field(&req.args, "targets")?;
                    let probs = providers.lm.target_probs(&encoding, &targets)?;
                    Ok(json!({ "probs": probs }))
                }
                _ => {
                    let k: usize = field(&req.args, "k")?;
                    let candidates = providers.lm.masked_topk(&encoding, k)?;
                    Ok(json!({ "candidates": candidates }))
                }
            }
        }
        Op::Entail => {
            let premise: String = field(&req.args, "premise")?;
            let hypothesis: String = field(&req.args, "hypothesis")?;
            Ok(json!({ "prob": providers.nli.entail_prob(&premise, &hypothesis)? }))
        }
        Op::Embed => {
            let word: String = field(&req.args, "word")?;
            Ok(json!({ "vector": providers.embedder.embed(&word)? }))
        }
    }
}

/// Answer requests from `reader` until EOF using local `providers`.
///
/// Malformed requests get an error response with `id` 0 rather than ending
/// the session.
pub fn serve<R: BufRead, W: Write>(reader: R, mut writer: W, providers: &Providers) -> Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let resp = match serde_json::from_str::<Request>(&line) {
            Ok(req) => {
                debug!("request {} {:?}", req.id, req.op);
                match dispatch(&req, providers) {
                    Ok(result) => Response {
                        id: req.id,
                        result: Some(result),
                        error: None,
                    },
                    Err(e) => Response {
                        id: req.id,
                        result: None,
                        error: Some(e.to_string()),
                    },
                }
            }
            Err(e) => Response {
                id: 0,
                result: None,
                error: Some(format!("malformed request: {e}")),
            },
        };
        let mut out = serde_json::to_string(&resp).map_err(provider_err)?;
        out.push('\n');
        writer.write_all(out.as_bytes())?;
        writer.flush()?;
    }
    Ok(())
}

/// Accept connections forever, one thread per connection.
pub fn serve_tcp(listener: TcpListener, providers: Providers) -> Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let providers = providers.clone();
        std::thread::spawn(move || {
            let reader = match stream.try_clone() {
                Ok(s) => BufReader::new(s),
                Err(e) => {
                    warn!("clone stream: {e}");
                    return;
                }
            };
            if let Err(e) = serve(reader, stream, &providers) {
                warn!("connection ended with error: {e}");
            }
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::stub::{StubEmbedder, StubMaskedLm, StubNli};

    #[test]
    fn endpoint_parsing() {
        assert_eq!(
            Endpoint::parse("tcp://127.0.0.1:9000").unwrap(),
            Endpoint::Tcp("127.0.0.1:9000".into())
        );
        assert_eq!(
            Endpoint::parse("localhost:80").unwrap(),
            Endpoint::Tcp("localhost:80".into())
        );
        assert_eq!(
            Endpoint::parse("exec:python3 backend.py --gpu").unwrap(),
            Endpoint::Exec(vec!["python3".into(), "backend.py".into(), "--gpu".into()])
        );
        for bad in ["", "exec:", "nohost", ":80", "host:port"] {
            assert!(Endpoint::parse(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn wire_format() {
        let req = Request {
            id: 7,
            op: Op::Entail,
            args: json!({"premise": "a", "hypothesis": "b"}),
        };
        let line = serde_json::to_string(&req).unwrap();
        assert_eq!(
            line,
            r#"{"id":7,"op":"entail","args":{"hypothesis":"b","premise":"a"}}"#
        );
        let resp: Response = serde_json::from_str(r#"{"id":7,"error":"boom"}"#).unwrap();
        assert_eq!(resp.error.as_deref(), Some("boom"));
        assert!(resp.result.is_none());
    }

    #[test]
    fn serve_answers_each_line() {
        let providers = Providers::stub();
        let input = concat!(
            r#"{"id":1,"op":"entail","args":{"premise":"a b","hypothesis":"a c"}}"#,
            "\n",
            "not json\n",
            r#"{"id":3,"op":"embed","args":{}}"#,
            "\n",
            r#"{"id":4,"op":"masked_topk","args":{"segments":["<mask>"],"tokens":["<s>","<mask>","</s>"],"mask_position":1,"k":2}}"#,
            "\n",
        );
        let mut out = Vec::new();
        serve(input.as_bytes(), &mut out, &providers).unwrap();
        let lines: Vec<Response> = String::from_utf8(out)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0].result, Some(json!({"prob": 0.022})));
        assert_eq!(lines[1].id, 0);
        assert!(lines[1].error.is_some());
        assert!(lines[2].error.as_deref().unwrap().contains("word"));
        let cands = lines[3].result.as_ref().unwrap()["candidates"]
            .as_array()
            .unwrap();
        assert_eq!(cands.len(), 2);
    }

    #[test]
    fn tcp_client_matches_local_stub() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || serve_tcp(listener, Providers::stub()));
        let client = RemoteClient::connect(&Endpoint::Tcp(addr.to_string())).unwrap();

        let enc = PairEncoding {
            segments: vec!["a <mask> b".into()],
            tokens: ["<s>", "a", "<mask>", "b", "</s>"]
                .map(String::from)
                .to_vec(),
            mask_position: 2,
        };
        let lm = StubMaskedLm::default();
        assert_eq!(
            client.masked_topk(&enc, 40).unwrap(),
            lm.masked_topk(&enc, 40).unwrap()
        );
        let words = vec!["the".to_string(), "cat".to_string()];
        assert_eq!(
            client.target_probs(&enc, &words).unwrap(),
            lm.target_probs(&enc, &words).unwrap()
        );
        assert_eq!(
            client.entail_prob("p", "h").unwrap(),
            StubNli::default().entail_prob("p", "h").unwrap()
        );
        assert_eq!(
            client.embed("big").unwrap(),
            StubEmbedder::default().embed("big").unwrap()
        );
        assert_eq!(Embedder::dim(&client), 8);
        assert!(!MaskedLm::concurrent(&client));
    }

    #[test]
    fn backend_errors_become_provider_failures() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut w = stream;
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            writeln!(w, r#"{{"id":1,"error":"model exploded"}}"#).unwrap();
            line.clear();
            reader.read_line(&mut line).unwrap();
            writeln!(w, r#"{{"id":99,"result":{{"prob":0.5}}}}"#).unwrap();
            line.clear();
            reader.read_line(&mut line).unwrap();
            writeln!(w, r#"{{"id":3,"result":{{"prob":1.5}}}}"#).unwrap();
        });
        let client = RemoteClient::connect(&Endpoint::Tcp(addr.to_string())).unwrap();
        for expected in ["model exploded", "does not match", "outside"] {
            let err = client.entail_prob("a", "b").unwrap_err();
            assert!(err.is_provider_error());
            assert!(err.to_string().contains(expected), "{err}");
        }
        // server hung up
        assert!(client
            .entail_prob("a", "b")
            .unwrap_err()
            .is_provider_error());
    }

    #[test]
    fn connect_failure_is_provider_failure() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        let err = RemoteClient::connect(&Endpoint::Tcp(addr.to_string()))
            .err()
            .unwrap();
        assert!(err.is_provider_error());
    }
}
