//! Chess rules: positions, legal moves, game termination, FEN and PGN.

mod board;
mod fen;
mod movegen;
mod pgn;
mod types;

pub use board::{Board, PositionKey, START_FEN};
pub use movegen::{BISHOP_DIRS, QUEEN_DIRS, ROOK_DIRS};
pub(crate) use movegen::for_each_attack;
pub use pgn::{parse_pgn, write_pgn, PgnGame};
pub use types::*;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChessError {
    #[error("invalid FEN ({field}): {message}")]
    Fen { field: &'static str, message: String },
    #[error("illegal move {mv} in position {fen}")]
    IllegalMove { mv: String, fen: String },
    #[error("PGN game {game}, ply {ply}: {message}")]
    Pgn {
        game: usize,
        ply: usize,
        message: String,
    },
}

impl ChessError {
    pub(crate) fn fen(field: &'static str, message: impl Into<String>) -> ChessError {
        ChessError::Fen {
            field,
            message: message.into(),
        }
    }
}
