//! Child-process latency adapter.
//!
//! The command is run through `sh -c`. It receives one line `{"bits":"<encoding>"}` on
//! standard input and must print one line `{"latency_ms": <number>}` on standard
//! output, then exit with status 0.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use serde::Deserialize;

use super::LatencyOracle;
use crate::error::OracleError;
use crate::numeric::Rng;
use crate::space::{encode, CellConfig, DiscreteArch, Encoding};

pub const DEFAULT_TIMEOUT_S: f64 = 30.0;

#[derive(Deserialize)]
struct Response {
    latency_ms: f64,
}

pub fn external_latency(
    encoding: &Encoding,
    command: &str,
    timeout: Duration,
) -> Result<f64, OracleError> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(OracleError::Spawn)?;

    let request = format!("{}\n", serde_json::json!({ "bits": encoding.to_string() }));
    if let Some(mut stdin) = child.stdin.take() {
        // an adapter that ignores its input may close the pipe early
        match stdin.write_all(request.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(OracleError::Spawn(e));
            }
            _ => {}
        }
    }

    let stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let (tx, rx) = mpsc::channel();
    let reader = std::thread::spawn(move || {
        let mut line = String::new();
        let res = BufReader::new(stdout).read_line(&mut line).map(|_| line);
        let _ = tx.send(res);
    });
    let err_reader = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });

    let start = Instant::now();
    let status = loop {
        match child.try_wait().map_err(OracleError::Spawn)? {
            Some(status) => break status,
            None if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                let _ = reader.join();
                let _ = err_reader.join();
                return Err(OracleError::Timeout(timeout.as_secs_f64()));
            }
            None => std::thread::sleep(Duration::from_millis(2)),
        }
    };
    let line = rx
        .recv_timeout(timeout.saturating_sub(start.elapsed()).max(Duration::from_millis(100)))
        .ok();
    let _ = reader.join();
    let stderr = err_reader.join().unwrap_or_default();

    if !status.success() {
        return Err(OracleError::NonZeroExit {
            code: status.code(),
            stderr: stderr.trim().to_string(),
        });
    }
    let line = match line {
        Some(Ok(line)) => line,
        Some(Err(e)) => return Err(OracleError::Malformed(e.to_string())),
        None => return Err(OracleError::Malformed("no output".into())),
    };
    let resp: Response = serde_json::from_str(line.trim())
        .map_err(|e| OracleError::Malformed(format!("{e}: {:?}", line.trim())))?;
    if !resp.latency_ms.is_finite() {
        return Err(OracleError::Malformed(format!("non-finite latency {}", resp.latency_ms)));
    }
    if resp.latency_ms <= 0.0 {
        return Err(OracleError::NonPositive(resp.latency_ms));
    }
    Ok(resp.latency_ms)
}

/// Adapter-backed oracle. The adapter is invoked once per record and is responsible for
/// any repetition or warm-up of its own, so records carry `repeats = 1`.
#[derive(Debug, Clone)]
pub struct ExternalOracle {
    pub command: String,
    pub timeout: Duration,
}

impl ExternalOracle {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            timeout: Duration::from_secs_f64(DEFAULT_TIMEOUT_S),
        }
    }
}

impl LatencyOracle for ExternalOracle {
    fn id(&self) -> String {
        "external".into()
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "kind": "external",
            "command": self.command,
            "timeout_s": self.timeout.as_secs_f64(),
        })
    }

    fn effective_repeats(&self, _requested: u32) -> u32 {
        1
    }

    fn measure(
        &self,
        arch: &DiscreteArch,
        config: &CellConfig,
        _repeats: u32,
        _rng: &mut Rng,
    ) -> Result<f64, OracleError> {
        let enc = encode(arch, config).map_err(|e| OracleError::InvalidArch(e.to_string()))?;
        external_latency(&enc, &self.command, self.timeout)
    }
}
