//! Scripted UCI engine for protocol tests.
//!
//! Usage: `pepper-fake-uci [SCRIPT]`. The script lists positions and the exact
//! lines to print when asked to search them:
//!
//! ```text
//! # comment
//! fen <fen>
//! info depth 1 score cp 35
//! info string thinking
//! bestmove e2e4
//! ```
//!
//! A line `silent` makes the engine ignore `go`; `crash` makes it exit on `go`.
//! Unknown positions get a reply without a score. Without a script every
//! position scores `cp 0`.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::process::ExitCode;

#[derive(Default)]
struct Script {
    replies: HashMap<String, Vec<String>>,
    silent: bool,
    crash: bool,
    scripted: bool,
}

fn normalize_fen(fen: &str) -> String {
    fen.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn load(path: &str) -> io::Result<Script> {
    let mut s = Script {
        scripted: true,
        ..Script::default()
    };
    let mut current: Option<String> = None;
    for line in std::fs::read_to_string(path)?.lines() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        match line.trim() {
            "silent" => s.silent = true,
            "crash" => s.crash = true,
            l => {
                if let Some(fen) = l.strip_prefix("fen ") {
                    let key = normalize_fen(fen);
                    s.replies.entry(key.clone()).or_default();
                    current = Some(key);
                } else if let Some(key) = &current {
                    s.replies.get_mut(key).expect("entry exists").push(l.to_string());
                }
            }
        }
    }
    Ok(s)
}

fn main() -> ExitCode {
    let script = match std::env::args().nth(1) {
        Some(path) => match load(&path) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("cannot read script {path}: {e}");
                return ExitCode::from(2);
            }
        },
        None => Script::default(),
    };
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    let mut fen = String::new();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        let line = line.trim();
        let reply: Vec<String> = if line == "uci" {
            vec!["id name fake-uci".into(), "id author test".into(), "uciok".into()]
        } else if line == "isready" {
            vec!["readyok".into()]
        } else if line == "quit" {
            break;
        } else if let Some(f) = line.strip_prefix("position fen ") {
            fen = normalize_fen(f.split(" moves ").next().unwrap_or(f));
            vec![]
        } else if line.starts_with("go") {
            if script.crash {
                return ExitCode::from(1);
            }
            if script.silent {
                vec![]
            } else if !script.scripted {
                vec!["info depth 1 score cp 0".into(), "bestmove 0000".into()]
            } else if let Some(lines) = script.replies.get(&fen) {
                lines.clone()
            } else {
                vec!["info string unknown position".into(), "bestmove 0000".into()]
            }
        } else {
            vec![]
        };
        for r in reply {
            if writeln!(out, "{r}").is_err() {
                return ExitCode::from(1);
            }
        }
        if out.flush().is_err() {
            return ExitCode::from(1);
        }
    }
    ExitCode::SUCCESS
}
