//! Inbound UCI subset: `uci`, `isready`, `ucinewgame`, `position`, `go`, `quit`.

use std::io::{self, BufRead, Write};

use pepper_core::chess::{Board, Move};
use pepper_core::search::{search, Evaluator, SearchConfig, Temperature, TemperatureSchedule};

/// Parses `position startpos|fen <fen> [moves ...]`; the leading keyword is already stripped.
pub fn parse_position(args: &str) -> Result<Board, String> {
    let (setup, moves) = match args.split_once("moves") {
        Some((s, m)) => (s.trim(), Some(m)),
        None => (args.trim(), None),
    };
    let mut board = if setup == "startpos" {
        Board::startpos()
    } else if let Some(fen) = setup.strip_prefix("fen") {
        Board::from_fen(fen.trim()).map_err(|e| e.to_string())?
    } else {
        return Err(format!("expected `startpos` or `fen`, got {setup:?}"));
    };
    for token in moves.into_iter().flat_map(str::split_whitespace) {
        let mv = Move::from_uci(token).ok_or_else(|| format!("bad move {token:?}"))?;
        board = board.apply_move(mv).map_err(|e| e.to_string())?;
    }
    Ok(board)
}

/// Runs a session until `quit` or end of input.
pub fn serve<R: BufRead, W: Write>(
    input: R,
    mut out: W,
    net: &(dyn Evaluator + Sync),
    search_cfg: &SearchConfig,
) -> io::Result<()> {
    let cfg = SearchConfig {
        dirichlet_epsilon: 0.0,
        temperature: TemperatureSchedule::constant(Temperature::Argmax),
        ..*search_cfg
    };
    let mut board = Board::startpos();
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        let (cmd, rest) = line.split_once(' ').unwrap_or((line, ""));
        match cmd {
            "uci" => {
                writeln!(out, "id name pepper {}", env!("CARGO_PKG_VERSION"))?;
                writeln!(out, "id author pepper developers")?;
                writeln!(out, "uciok")?;
            }
            "isready" => writeln!(out, "readyok")?,
            "ucinewgame" => board = Board::startpos(),
            "position" => match parse_position(rest) {
                Ok(b) => board = b,
                Err(e) => writeln!(out, "info string error {e}")?,
            },
            "go" => {
                if !board.outcome().is_ongoing() {
                    writeln!(out, "bestmove 0000")?;
                } else {
                    match search(&board, net, &cfg) {
                        Ok(r) => {
                            let cp = (r.root_value.clamp(-0.999, 0.999).atanh() * 600.0).round() as i32;
                            writeln!(out, "info depth 1 nodes {} score cp {cp}", cfg.simulations)?;
                            writeln!(out, "bestmove {}", r.chosen_move)?;
                        }
                        Err(e) => {
                            writeln!(out, "info string error {e}")?;
                            writeln!(out, "bestmove 0000")?;
                        }
                    }
                }
            }
            "quit" => break,
            "" | "stop" | "setoption" | "debug" | "ponderhit" | "register" => {}
            other => writeln!(out, "info string error unknown command {other}")?,
        }
        out.flush()?;
    }
    Ok(())
}
