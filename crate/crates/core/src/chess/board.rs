use super::types::*;
use super::ChessError;

const ZOBRIST_LEN: usize = 12 * 64 + 1 + 16 + 65;

const fn splitmix64(state: u64) -> (u64, u64) {
    let state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (state, z ^ (z >> 31))
}

const fn build_zobrist() -> [u64; ZOBRIST_LEN] {
    let mut table = [0u64; ZOBRIST_LEN];
    let mut state = 0x5045_5050_4552_u64;
    let mut i = 0;
    while i < ZOBRIST_LEN {
        let (s, v) = splitmix64(state);
        state = s;
        table[i] = v;
        i += 1;
    }
    table
}

static ZOBRIST: [u64; ZOBRIST_LEN] = build_zobrist();
const Z_SIDE: usize = 12 * 64;
const Z_CASTLE: usize = Z_SIDE + 1;
const Z_EP: usize = Z_CASTLE + 16;

/// Identity of a position for repetition purposes: placement, side to move,
/// castling rights and en-passant square. The hash is only a fast filter;
/// equality compares the full packed state.
#[derive(Clone, Copy, Debug, Eq)]
pub struct PositionKey {
    hash: u64,
    packed: [u8; 32],
    meta: u8,
    ep: u8,
}

impl PartialEq for PositionKey {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash
            && self.packed == other.packed
            && self.meta == other.meta
            && self.ep == other.ep
    }
}

impl std::hash::Hash for PositionKey {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl PositionKey {
    pub fn hash_value(&self) -> u64 {
        self.hash
    }
}

/// A complete chess position. Values are immutable from the outside:
/// [`Board::apply_move`] returns a new board.
#[derive(Clone, Debug)]
pub struct Board {
    pub(crate) squares: [Option<Piece>; 64],
    pub(crate) side: Color,
    pub(crate) castling: CastlingRights,
    pub(crate) en_passant: Option<Square>,
    pub(crate) halfmove: u32,
    pub(crate) fullmove: u32,
    pub(crate) kings: [Square; 2],
    /// Keys of earlier positions since the last irreversible move.
    pub(crate) history: Vec<PositionKey>,
    pub(crate) key: PositionKey,
}

impl PartialEq for Board {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.halfmove == other.halfmove && self.fullmove == other.fullmove
    }
}

pub const START_FEN: &str = "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1";

impl Default for Board {
    fn default() -> Self {
        Board::startpos()
    }
}

impl Board {
    pub fn startpos() -> Board {
        Board::from_fen(START_FEN).expect("start position is valid")
    }

    /// Builds a board from raw parts and validates every position invariant.
    pub(crate) fn from_parts(
        squares: [Option<Piece>; 64],
        side: Color,
        castling: CastlingRights,
        en_passant: Option<Square>,
        halfmove: u32,
        fullmove: u32,
    ) -> Result<Board, ChessError> {
        let mut kings = [None, None];
        for sq in Square::all() {
            if let Some(p) = squares[sq.index()] {
                if p.kind == PieceKind::King {
                    if kings[p.color.index()].is_some() {
                        return Err(ChessError::fen("placement", "more than one king per color"));
                    }
                    kings[p.color.index()] = Some(sq);
                }
                if p.kind == PieceKind::Pawn && (sq.rank() == 0 || sq.rank() == 7) {
                    return Err(ChessError::fen("placement", "pawn on first or last rank"));
                }
            }
        }
        let (Some(wk), Some(bk)) = (kings[0], kings[1]) else {
            return Err(ChessError::fen("placement", "each side needs exactly one king"));
        };
        let rook_at = |sq: u8, color| {
            squares[sq as usize] == Some(Piece::new(color, PieceKind::Rook))
        };
        let checks = [
            (CastlingRights::WHITE_QUEENSIDE, wk.index() == 4 && rook_at(0, Color::White)),
            (CastlingRights::WHITE_KINGSIDE, wk.index() == 4 && rook_at(7, Color::White)),
            (CastlingRights::BLACK_QUEENSIDE, bk.index() == 60 && rook_at(56, Color::Black)),
            (CastlingRights::BLACK_KINGSIDE, bk.index() == 60 && rook_at(63, Color::Black)),
        ];
        for (right, ok) in checks {
            if castling.contains(right) && !ok {
                return Err(ChessError::fen(
                    "castling",
                    "castling right without king and rook on home squares",
                ));
            }
        }
        if let Some(ep) = en_passant {
            let expected_rank = if side == Color::White { 5 } else { 2 };
            if ep.rank() != expected_rank {
                return Err(ChessError::fen("en passant", "en-passant square on wrong rank"));
            }
        }
        if fullmove == 0 {
            return Err(ChessError::fen("fullmove", "fullmove number must be at least 1"));
        }
        let mut board = Board {
            squares,
            side,
            castling,
            en_passant,
            halfmove,
            fullmove,
            kings: [wk, bk],
            history: Vec::new(),
            key: PositionKey {
                hash: 0,
                packed: [0; 32],
                meta: 0,
                ep: 64,
            },
        };
        if board.is_square_attacked(board.kings[side.opposite().index()], side) {
            return Err(ChessError::fen("side to move", "side not to move is in check"));
        }
        board.key = board.compute_key();
        Ok(board)
    }

    pub(crate) fn compute_key(&self) -> PositionKey {
        let mut hash = 0u64;
        let mut packed = [0u8; 32];
        for (i, sq) in self.squares.iter().enumerate() {
            if let Some(p) = sq {
                let code = p.code();
                packed[i / 2] |= code << ((i & 1) * 4);
                hash ^= ZOBRIST[(code as usize - 1) * 64 + i];
            }
        }
        if self.side == Color::Black {
            hash ^= ZOBRIST[Z_SIDE];
        }
        hash ^= ZOBRIST[Z_CASTLE + self.castling.bits() as usize];
        let ep = self.en_passant.map_or(64, |s| s.index() as u8);
        hash ^= ZOBRIST[Z_EP + ep as usize];
        PositionKey {
            hash,
            packed,
            meta: self.side as u8 | (self.castling.bits() << 1),
            ep,
        }
    }

    #[inline]
    pub fn piece_at(&self, sq: Square) -> Option<Piece> {
        self.squares[sq.index()]
    }

    #[inline]
    pub fn side_to_move(&self) -> Color {
        self.side
    }

    pub fn castling(&self) -> CastlingRights {
        self.castling
    }

    pub fn en_passant(&self) -> Option<Square> {
        self.en_passant
    }

    pub fn halfmove_clock(&self) -> u32 {
        self.halfmove
    }

    pub fn fullmove_number(&self) -> u32 {
        self.fullmove
    }

    #[inline]
    pub fn king_square(&self, color: Color) -> Square {
        self.kings[color.index()]
    }

    pub fn key(&self) -> PositionKey {
        self.key
    }

    /// Half-moves played since the standard start (derived from the move counters).
    pub fn ply(&self) -> u32 {
        2 * (self.fullmove - 1) + self.side as u32
    }

    pub fn pieces(&self) -> impl Iterator<Item = (Square, Piece)> + '_ {
        Square::all().filter_map(move |sq| self.squares[sq.index()].map(|p| (sq, p)))
    }

    pub fn count(&self, color: Color, kind: PieceKind) -> usize {
        self.squares
            .iter()
            .filter(|p| **p == Some(Piece::new(color, kind)))
            .count()
    }

    pub fn in_check(&self) -> bool {
        self.is_square_attacked(self.king_square(self.side), self.side.opposite())
    }

    /// Number of times the current position has occurred, including now.
    pub fn repetition_count(&self) -> usize {
        1 + self.history.iter().filter(|k| **k == self.key).count()
    }

    /// Returns a new board with `mv` played. Fails if `mv` is not legal here.
    pub fn apply_move(&self, mv: Move) -> Result<Board, ChessError> {
        if !self.legal_moves().contains(&mv) {
            return Err(ChessError::IllegalMove {
                mv: mv.to_string(),
                fen: self.to_fen(),
            });
        }
        Ok(self.apply_move_unchecked(mv))
    }

    /// Plays a move already known to be legal.
    pub(crate) fn apply_move_unchecked(&self, mv: Move) -> Board {
        let mut next = self.clone();
        let us = self.side;
        let piece = self.squares[mv.from.index()].expect("move from empty square");
        let captured = self.squares[mv.to.index()];
        let mut irreversible = captured.is_some() || piece.kind == PieceKind::Pawn;

        next.squares[mv.from.index()] = None;
        next.squares[mv.to.index()] = Some(match mv.promotion {
            Some(kind) => Piece::new(us, kind),
            None => piece,
        });
        next.en_passant = None;

        match piece.kind {
            PieceKind::Pawn => {
                if Some(mv.to) == self.en_passant && captured.is_none() {
                    let victim = Square::from_index_unchecked(
                        (mv.to.index() as i32 - 8 * us.sign()) as u8,
                    );
                    next.squares[victim.index()] = None;
                }
                if mv.from.rank().abs_diff(mv.to.rank()) == 2 {
                    next.en_passant = Some(Square::from_index_unchecked(
                        ((mv.from.index() + mv.to.index()) / 2) as u8,
                    ));
                }
            }
            PieceKind::King => {
                next.kings[us.index()] = mv.to;
                next.castling.remove(CastlingRights::kingside(us));
                next.castling.remove(CastlingRights::queenside(us));
                if mv.from.file() == 4 && mv.to.file() == 6 {
                    let base = mv.from.index() - 4;
                    next.squares[base + 5] = next.squares[base + 7].take();
                } else if mv.from.file() == 4 && mv.to.file() == 2 {
                    let base = mv.from.index() - 4;
                    next.squares[base + 3] = next.squares[base].take();
                }
            }
            _ => {}
        }
        for sq in [mv.from, mv.to] {
            match sq.index() {
                0 => next.castling.remove(CastlingRights::WHITE_QUEENSIDE),
                7 => next.castling.remove(CastlingRights::WHITE_KINGSIDE),
                56 => next.castling.remove(CastlingRights::BLACK_QUEENSIDE),
                63 => next.castling.remove(CastlingRights::BLACK_KINGSIDE),
                _ => {}
            }
        }
        if next.castling != self.castling {
            irreversible = true;
        }

        next.side = us.opposite();
        if us == Color::Black {
            next.fullmove += 1;
        }
        if irreversible {
            next.halfmove = 0;
            next.history.clear();
        } else {
            next.halfmove += 1;
            next.history.push(self.key);
        }
        next.key = next.compute_key();
        next
    }

    /// Colour-flipped mirror: ranks reversed, colours swapped, side to move swapped.
    pub fn mirror(&self) -> Board {
        let mut squares = [None; 64];
        for (sq, p) in self.pieces() {
            squares[sq.flip_rank().index()] = Some(Piece::new(p.color.opposite(), p.kind));
        }
        Board::from_parts(
            squares,
            self.side.opposite(),
            self.castling.flip(),
            self.en_passant.map(Square::flip_rank),
            self.halfmove,
            self.fullmove,
        )
        .expect("mirror of a valid position is valid")
    }

    pub fn outcome(&self) -> GameOutcome {
        if self.legal_moves().is_empty() {
            return if self.in_check() {
                let kind = match self.side {
                    Color::White => OutcomeKind::BlackWin,
                    Color::Black => OutcomeKind::WhiteWin,
                };
                GameOutcome::finished(kind, OutcomeReason::Checkmate)
            } else {
                GameOutcome::finished(OutcomeKind::Draw, OutcomeReason::Stalemate)
            };
        }
        if self.insufficient_material() {
            return GameOutcome::finished(OutcomeKind::Draw, OutcomeReason::InsufficientMaterial);
        }
        if self.halfmove >= 100 {
            return GameOutcome::finished(OutcomeKind::Draw, OutcomeReason::FiftyMove);
        }
        if self.repetition_count() >= 3 {
            return GameOutcome::finished(OutcomeKind::Draw, OutcomeReason::Threefold);
        }
        GameOutcome::ONGOING
    }

    /// K v K, K+N v K, K+B v K and KB v KB with same-coloured bishops.
    pub fn insufficient_material(&self) -> bool {
        let mut minors: [Vec<(PieceKind, Square)>; 2] = [Vec::new(), Vec::new()];
        for (sq, p) in self.pieces() {
            match p.kind {
                PieceKind::King => {}
                PieceKind::Knight | PieceKind::Bishop => minors[p.color.index()].push((p.kind, sq)),
                _ => return false,
            }
        }
        match (minors[0].as_slice(), minors[1].as_slice()) {
            ([], []) => true,
            ([_], []) | ([], [_]) => true,
            ([(PieceKind::Bishop, a)], [(PieceKind::Bishop, b)]) => {
                (a.file() + a.rank()) % 2 == (b.file() + b.rank()) % 2
            }
            _ => false,
        }
    }
}
