//! Hand-crafted 353-slot board encoding and the 5120-way policy index space.
//!
//! Slot layout:
//!
//! | slots     | content                                                        |
//! |-----------|----------------------------------------------------------------|
//! | 0         | side to move (1 white, 0 black)                                |
//! | 1-4       | castling rights WQ, WK, BQ, BK                                  |
//! | 5-16      | piece counts K Q R B N P (white, then black), ÷ starting count |
//! | 17-176    | 32 piece records: exists, file/7, rank/7, attacker, defender   |
//! | 177-224   | slider reach per direction ÷ 7 (Q, R×2, B×2 per side)          |
//! | 225-352   | per square: lowest attacker, lowest defender                   |
//!
//! Attacker/defender values use P=1, N=B=3, R=5, Q=9, K=10, divided by 10.

mod encode;
mod move_index;

pub use encode::{
    exchange_value, extract_features, FeatureVector, FEATURE_DIM, GLOBAL_RANGE, PIECE_RANGE,
    SQUARE_RANGE,
};
pub(crate) use move_index::policy_index;
pub use move_index::{
    decode_move, encode_move, index_to_move, promotion_side, LegalMask, MoveIndex, POLICY_DIM,
};

use crate::chess::Move;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("move {0} has no policy index")]
    Unencodable(Move),
    #[error("policy index {0} is not a legal move here")]
    NotLegal(usize),
}
