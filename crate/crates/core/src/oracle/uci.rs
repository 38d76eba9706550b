//! Minimal UCI client: handshake, `position fen`, `go`, and score parsing.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::{OracleError, Score, SearchLimit};

pub const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(5);

/// Talks to an engine through any line sink and a channel of its output lines.
pub struct UciClient {
    writer: Box<dyn Write + Send>,
    lines: Receiver<String>,
    child: Option<Child>,
    pub response_timeout: Duration,
}

impl UciClient {
    /// Wraps an already connected engine and performs the handshake.
    pub fn from_parts(
        writer: Box<dyn Write + Send>,
        lines: Receiver<String>,
        handshake_timeout: Duration,
    ) -> Result<UciClient, OracleError> {
        let mut c = UciClient {
            writer,
            lines,
            child: None,
            response_timeout: Duration::from_secs(60),
        };
        c.handshake(handshake_timeout)?;
        Ok(c)
    }

    pub fn spawn(path: &Path, handshake_timeout: Duration) -> Result<UciClient, OracleError> {
        let mut child = Command::new(path)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| OracleError::Spawn(path.display().to_string(), e))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin = child.stdin.take().expect("piped stdin");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut c = UciClient {
            writer: Box::new(stdin),
            lines: rx,
            child: Some(child),
            response_timeout: Duration::from_secs(60),
        };
        c.handshake(handshake_timeout)?;
        Ok(c)
    }

    fn send(&mut self, cmd: &str) -> Result<(), OracleError> {
        log::trace!("uci > {cmd}");
        writeln!(self.writer, "{cmd}")
            .and_then(|_| self.writer.flush())
            .map_err(OracleError::Io)
    }

    /// Reads lines until one satisfies `done`, returning every line seen.
    fn read_until(&mut self, deadline: Instant, what: &str, done: impl Fn(&str) -> bool) -> Result<Vec<String>, OracleError> {
        let mut seen = Vec::new();
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(line) => {
                    log::trace!("uci < {line}");
                    let stop = done(line.trim());
                    seen.push(line);
                    if stop {
                        return Ok(seen);
                    }
                }
                Err(RecvTimeoutError::Timeout) => return Err(OracleError::Timeout(what.to_string())),
                Err(RecvTimeoutError::Disconnected) => return Err(OracleError::EngineExited),
            }
        }
    }

    fn handshake(&mut self, timeout: Duration) -> Result<(), OracleError> {
        let deadline = Instant::now() + timeout;
        self.send("uci")?;
        self.read_until(deadline, "uciok", |l| l == "uciok")?;
        self.send("isready")?;
        self.read_until(deadline, "readyok", |l| l == "readyok")?;
        Ok(())
    }

    pub fn new_game(&mut self) -> Result<(), OracleError> {
        self.send("ucinewgame")?;
        self.send("isready")?;
        let deadline = Instant::now() + self.response_timeout;
        self.read_until(deadline, "readyok", |l| l == "readyok")?;
        Ok(())
    }

    /// Side-to-move score of `fen` after a search bounded by `limit`.
    pub fn score(&mut self, fen: &str, limit: SearchLimit) -> Result<Score, OracleError> {
        self.send(&format!("position fen {fen}"))?;
        let (go, extra) = match limit {
            SearchLimit::Depth(d) => (format!("go depth {d}"), Duration::ZERO),
            SearchLimit::MovetimeMs(ms) => (format!("go movetime {ms}"), Duration::from_millis(ms.into())),
        };
        self.send(&go)?;
        let deadline = Instant::now() + self.response_timeout + extra;
        let lines = self.read_until(deadline, "bestmove", |l| l.starts_with("bestmove"))?;
        let mut last = None;
        for line in &lines {
            if let Some(s) = parse_info_score(line)? {
                last = Some(s);
            }
        }
        last.ok_or_else(|| OracleError::Protocol(format!("no score before {:?}", lines.last().unwrap())))
    }
}

impl Drop for UciClient {
    fn drop(&mut self) {
        let _ = self.send("quit");
        if let Some(mut child) = self.child.take() {
            let deadline = Instant::now() + Duration::from_millis(500);
            while Instant::now() < deadline {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Extracts `score cp X` / `score mate M` from an `info` line; other lines yield `None`.
pub fn parse_info_score(line: &str) -> Result<Option<Score>, OracleError> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("info") {
        return Ok(None);
    }
    let tokens: Vec<&str> = tokens.collect();
    if tokens.first() == Some(&"string") {
        return Ok(None);
    }
    let Some(pos) = tokens.iter().position(|&t| t == "score") else {
        return Ok(None);
    };
    let bad = || OracleError::Protocol(line.to_string());
    let kind = tokens.get(pos + 1).ok_or_else(bad)?;
    let value: i32 = tokens.get(pos + 2).and_then(|v| v.parse().ok()).ok_or_else(bad)?;
    match *kind {
        "cp" => Ok(Some(Score::Cp(value))),
        "mate" => Ok(Some(Score::Mate(value))),
        _ => Err(bad()),
    }
}
