//! Position evaluation for adjudication and pretraining labels: an external
//! UCI engine, or a material-and-mobility heuristic when none is available.

mod material;
mod uci;

pub use material::{
    material_balance, material_eval, mobility_balance, normalize_cp, piece_value, MATE_CP, MOBILITY_CP,
};
pub use uci::{parse_info_score, UciClient, HANDSHAKE_TIMEOUT};

use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use crate::chess::{Board, Color};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("engine not found at {0}")]
    NotFound(PathBuf),
    #[error("no engine configured and fallback disabled")]
    NoEngine,
    #[error("failed to start engine {0}: {1}")]
    Spawn(String, #[source] std::io::Error),
    #[error("timed out waiting for {0}")]
    Timeout(String),
    #[error("engine closed its output")]
    EngineExited,
    #[error("unparseable engine response: {0}")]
    Protocol(String),
    #[error("invalid search limit: {0}")]
    InvalidLimit(String),
    #[error(transparent)]
    Io(std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchLimit {
    Depth(u32),
    MovetimeMs(u32),
}

impl SearchLimit {
    pub fn validate(self) -> Result<SearchLimit, OracleError> {
        match self {
            SearchLimit::Depth(0) => Err(OracleError::InvalidLimit("depth must be at least 1".into())),
            SearchLimit::MovetimeMs(ms) if ms < 10 => {
                Err(OracleError::InvalidLimit("movetime must be at least 10 ms".into()))
            }
            ok => Ok(ok),
        }
    }
}

impl Default for SearchLimit {
    fn default() -> Self {
        SearchLimit::Depth(8)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    pub engine_path: Option<PathBuf>,
    pub limit: SearchLimit,
    pub fallback_allowed: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            engine_path: None,
            limit: SearchLimit::default(),
            fallback_allowed: true,
        }
    }
}

/// Engine score. In an [`EvalResult`] it is White-centric; mate distances are
/// in plies with the sign of the winning side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Score {
    Cp(i32),
    Mate(i32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScoreSource {
    ExternalEngine,
    MaterialHeuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalResult {
    pub score: Score,
    pub source: ScoreSource,
}

impl EvalResult {
    /// White-centric centipawns, with mates clamped to `±MATE_CP`.
    pub fn centipawns(&self) -> i32 {
        match self.score {
            Score::Cp(cp) => cp.clamp(-MATE_CP, MATE_CP),
            Score::Mate(m) if m > 0 => MATE_CP,
            Score::Mate(_) => -MATE_CP,
        }
    }

    pub fn mate_in(&self) -> Option<i32> {
        match self.score {
            Score::Mate(m) => Some(m),
            Score::Cp(_) => None,
        }
    }

    /// Centipawns from `color`'s point of view.
    pub fn centipawns_for(&self, color: Color) -> i32 {
        self.centipawns() * color.sign()
    }
}

/// Converts a side-to-move UCI score to the White-centric convention.
pub fn to_white_centric(score: Score, side_to_move: Color) -> Score {
    let s = side_to_move.sign();
    match score {
        Score::Cp(cp) => Score::Cp(cp * s),
        // "mate 0" means the side to move is already mated.
        Score::Mate(0) => Score::Cp(-MATE_CP * s),
        Score::Mate(m) if m > 0 => Score::Mate((2 * m - 1) * s),
        Score::Mate(m) => Score::Mate(2 * m * s),
    }
}

enum Backend {
    Material,
    Engine(Box<UciClient>),
}

/// One evaluation session; not shareable between threads.
pub struct Oracle {
    backend: Backend,
    limit: SearchLimit,
}

impl Oracle {
    pub fn material() -> Oracle {
        Oracle {
            backend: Backend::Material,
            limit: SearchLimit::default(),
        }
    }

    pub fn from_client(client: UciClient, limit: SearchLimit) -> Oracle {
        Oracle {
            backend: Backend::Engine(Box::new(client)),
            limit,
        }
    }

    pub fn source(&self) -> ScoreSource {
        match self.backend {
            Backend::Material => ScoreSource::MaterialHeuristic,
            Backend::Engine(_) => ScoreSource::ExternalEngine,
        }
    }

    pub fn evaluate(&mut self, board: &Board) -> Result<EvalResult, OracleError> {
        match &mut self.backend {
            Backend::Material => Ok(EvalResult {
                score: Score::Cp(material_eval(board)),
                source: ScoreSource::MaterialHeuristic,
            }),
            Backend::Engine(client) => {
                let raw = client.score(&board.to_fen(), self.limit)?;
                Ok(EvalResult {
                    score: to_white_centric(raw, board.side_to_move()),
                    source: ScoreSource::ExternalEngine,
                })
            }
        }
    }

    pub fn new_game(&mut self) -> Result<(), OracleError> {
        match &mut self.backend {
            Backend::Material => Ok(()),
            Backend::Engine(client) => client.new_game(),
        }
    }
}

/// Starts the configured engine, or the material heuristic when no engine is
/// configured or the binary is missing and fallback is allowed.
pub fn connect(cfg: &OracleConfig) -> Result<Oracle, OracleError> {
    let limit = cfg.limit.validate()?;
    match &cfg.engine_path {
        Some(path) if path.is_file() => {
            let client = UciClient::spawn(path, HANDSHAKE_TIMEOUT)?;
            Ok(Oracle::from_client(client, limit))
        }
        Some(path) if cfg.fallback_allowed => {
            log::warn!("engine {} not found; using the material heuristic", path.display());
            Ok(Oracle::material())
        }
        Some(path) => Err(OracleError::NotFound(path.clone())),
        None if cfg.fallback_allowed => Ok(Oracle::material()),
        None => Err(OracleError::NoEngine),
    }
}

/// Handshake timeout used by [`connect`].
pub fn handshake_timeout() -> Duration {
    HANDSHAKE_TIMEOUT
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;
    use std::sync::mpsc;
    use std::thread;

    /// Writer that forwards each written line to a scripted engine thread.
    struct LineSink(mpsc::Sender<String>, Vec<u8>);

    impl Write for LineSink {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.1.extend_from_slice(buf);
            while let Some(i) = self.1.iter().position(|&b| b == b'\n') {
                let line: Vec<u8> = self.1.drain(..=i).collect();
                let _ = self.0.send(String::from_utf8_lossy(&line).trim().to_string());
            }
            Ok(buf.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    /// Engine thread answering `go` with `reply` lines; `silent` never says uciok.
    fn fake(reply: Vec<&'static str>, silent: bool) -> (Box<dyn Write + Send>, mpsc::Receiver<String>) {
        let (cmd_tx, cmd_rx) = mpsc::channel::<String>();
        let (out_tx, out_rx) = mpsc::channel::<String>();
        thread::spawn(move || {
            for cmd in cmd_rx {
                let say = |s: &str| out_tx.send(s.to_string()).is_ok();
                let ok = match cmd.split_whitespace().next() {
                    Some("uci") if silent => true,
                    Some("uci") => say("id name scripted") && say("uciok"),
                    Some("isready") => say("readyok"),
                    Some("go") => reply.iter().all(|l| say(l)),
                    Some("quit") => break,
                    _ => true,
                };
                if !ok {
                    break;
                }
            }
        });
        (Box::new(LineSink(cmd_tx, Vec::new())), out_rx)
    }

    fn oracle(reply: Vec<&'static str>) -> Oracle {
        let (w, r) = fake(reply, false);
        Oracle::from_client(UciClient::from_parts(w, r, HANDSHAKE_TIMEOUT).unwrap(), SearchLimit::Depth(8))
    }

    #[test]
    fn black_to_move_score_is_flipped() {
        let mut o = oracle(vec!["info depth 1 score cp 10", "info depth 8 score cp -50", "bestmove e7e5"]);
        let b = Board::from_fen("rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq - 0 1").unwrap();
        let r = o.evaluate(&b).unwrap();
        assert_eq!(r.score, Score::Cp(50));
        assert_eq!(r.source, ScoreSource::ExternalEngine);
        assert_eq!(r.centipawns(), 50);
    }

    #[test]
    fn mate_scores_become_white_centric_plies() {
        let b = Board::from_fen("6k1/5ppp/8/8/8/8/5PPP/R5K1 w - - 0 1").unwrap();
        let mut o = oracle(vec!["info string thinking", "info depth 1 score mate 1 pv a1a8", "bestmove a1a8"]);
        let r = o.evaluate(&b).unwrap();
        assert_eq!(r.score, Score::Mate(1));
        assert_eq!(r.centipawns(), MATE_CP);
        assert_eq!(to_white_centric(Score::Mate(-2), Color::White), Score::Mate(-4));
        assert_eq!(to_white_centric(Score::Mate(3), Color::Black), Score::Mate(-5));
        assert_eq!(to_white_centric(Score::Mate(-1), Color::Black), Score::Mate(2));
        assert_eq!(to_white_centric(Score::Mate(0), Color::Black), Score::Cp(MATE_CP));
    }

    #[test]
    fn missing_score_is_a_protocol_error() {
        let mut o = oracle(vec!["info depth 1 nodes 3", "bestmove e2e4"]);
        let err = o.evaluate(&Board::startpos()).unwrap_err();
        assert!(matches!(err, OracleError::Protocol(ref l) if l.contains("bestmove")), "{err}");
    }

    #[test]
    fn silent_engine_times_out() {
        let (w, r) = fake(vec![], true);
        let err = UciClient::from_parts(w, r, Duration::from_millis(50)).err().unwrap();
        assert!(matches!(err, OracleError::Timeout(ref s) if s == "uciok"));
    }

    #[test]
    fn connect_fallback_rules() {
        let missing = OracleConfig {
            engine_path: Some(PathBuf::from("/nonexistent/engine")),
            ..OracleConfig::default()
        };
        assert_eq!(connect(&missing).unwrap().source(), ScoreSource::MaterialHeuristic);
        let strict = OracleConfig {
            fallback_allowed: false,
            ..missing
        };
        assert!(matches!(connect(&strict), Err(OracleError::NotFound(_))));
        let bad_limit = OracleConfig {
            limit: SearchLimit::MovetimeMs(5),
            ..OracleConfig::default()
        };
        assert!(matches!(connect(&bad_limit), Err(OracleError::InvalidLimit(_))));
    }

    #[test]
    fn material_oracle_is_antisymmetric_and_repeatable() {
        let b = Board::from_fen("r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1").unwrap();
        let mut o = Oracle::material();
        let a = o.evaluate(&b).unwrap();
        assert_eq!(a, o.evaluate(&b).unwrap());
        assert_eq!(o.evaluate(&b.mirror()).unwrap().centipawns(), -a.centipawns());
    }
}
