//! Client side of the external predictor line protocol.
//!
//! Newline-delimited text, one request in flight:
//!
//! ```text
//! > HELLO pmatic/1 vocab=<N>          < OK vocab=<N>
//! > PREDICT <k> <id_1> ... <id_k>     < LOGITS <N> <v_1> ... <v_N>
//! > RESET                             < OK
//! ```
//!
//! Logits travel as shortest round-trip decimal text, so `f64` values
//! survive the trip unchanged.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::{Predictor, PredictorError};
use crate::probmodel::LogitVector;

pub const PROTOCOL_VERSION: &str = "pmatic/1";
pub const DEFAULT_BRIDGE_TIMEOUT: Duration = Duration::from_secs(30);

pub struct BridgeClient {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    child: Option<Child>,
    vocab: usize,
    timeout: Duration,
    id: String,
}

impl BridgeClient {
    /// Run `command` through `sh -c` and handshake over its stdio.
    pub fn spawn(command: &str, vocab: usize, timeout: Duration) -> Result<Self, PredictorError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut client = Self::from_streams(BufReader::new(stdout), stdin, vocab, timeout);
        client.child = Some(child);
        client.handshake()?;
        Ok(client)
    }

    /// Handshake over arbitrary streams (a socket, or in-memory pipes in tests).
    pub fn connect<R, W>(reader: R, writer: W, vocab: usize, timeout: Duration) -> Result<Self, PredictorError>
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        let mut client = Self::from_streams(reader, writer, vocab, timeout);
        client.handshake()?;
        Ok(client)
    }

    fn from_streams<R, W>(reader: R, writer: W, vocab: usize, timeout: Duration) -> Self
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        BridgeClient { writer: Box::new(writer), lines: rx, child: None, vocab, timeout, id: "external".into() }
    }

    fn handshake(&mut self) -> Result<(), PredictorError> {
        let reply = self.request(&format!("HELLO {PROTOCOL_VERSION} vocab={}", self.vocab))?;
        let got = reply
            .strip_prefix("OK vocab=")
            .and_then(|v| v.trim().parse::<usize>().ok())
            .ok_or_else(|| PredictorError::ProtocolError(format!("bad handshake reply {reply:?}")))?;
        if got != self.vocab {
            return Err(PredictorError::VocabMismatch { expected: self.vocab, got });
        }
        Ok(())
    }

    fn request(&mut self, line: &str) -> Result<String, PredictorError> {
        writeln!(self.writer, "{line}")?;
        self.writer.flush()?;
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => Ok(reply.trim_end().to_string()),
            Ok(Err(e)) => Err(e.into()),
            Err(RecvTimeoutError::Timeout) => Err(PredictorError::BridgeTimeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                Err(PredictorError::ProtocolError("bridge closed its output".into()))
            }
        }
    }

    fn parse_logits(&self, reply: &str) -> Result<LogitVector, PredictorError> {
        let bad = |why: &str| PredictorError::ProtocolError(format!("{why} in reply {reply:?}"));
        let mut fields = reply.split_ascii_whitespace();
        if fields.next() != Some("LOGITS") {
            return Err(bad("expected LOGITS"));
        }
        let declared: usize = fields.next().and_then(|n| n.parse().ok()).ok_or_else(|| bad("missing count"))?;
        let values = fields
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| bad("non-numeric logit"))?;
        if declared != values.len() {
            return Err(bad("count does not match values"));
        }
        if values.len() != self.vocab {
            return Err(PredictorError::ProtocolError(format!(
                "expected {} logits, got {}",
                self.vocab,
                values.len()
            )));
        }
        Ok(LogitVector::new(values).expect("checked finite"))
    }
}

impl Predictor for BridgeClient {
    fn vocab_size(&self) -> usize {
        self.vocab
    }

    fn id(&self) -> String {
        self.id.clone()
    }

    fn predict(&mut self, context: &[u32]) -> Result<LogitVector, PredictorError> {
        let mut line = format!("PREDICT {}", context.len());
        for t in context {
            line.push(' ');
            line.push_str(&t.to_string());
        }
        let reply = self.request(&line)?;
        self.parse_logits(&reply)
    }

    fn reset(&mut self) -> Result<(), PredictorError> {
        let reply = self.request("RESET")?;
        if reply != "OK" {
            return Err(PredictorError::ProtocolError(format!("bad RESET reply {reply:?}")));
        }
        Ok(())
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
