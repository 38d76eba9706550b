use super::board::Board;
use super::types::*;
use crate::features::policy_index;

const fn leaper_table(deltas: &[(i8, i8)]) -> [u64; 64] {
    let mut table = [0u64; 64];
    let mut sq = 0;
    while sq < 64 {
        let f = (sq % 8) as i8;
        let r = (sq / 8) as i8;
        let mut i = 0;
        while i < deltas.len() {
            let nf = f + deltas[i].0;
            let nr = r + deltas[i].1;
            if nf >= 0 && nf < 8 && nr >= 0 && nr < 8 {
                table[sq] |= 1u64 << (nf + 8 * nr);
            }
            i += 1;
        }
        sq += 1;
    }
    table
}

const KNIGHT_DELTAS: [(i8, i8); 8] = [
    (1, 2),
    (2, 1),
    (2, -1),
    (1, -2),
    (-1, -2),
    (-2, -1),
    (-2, 1),
    (-1, 2),
];
const KING_DELTAS: [(i8, i8); 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];

pub(crate) static KNIGHT_ATTACKS: [u64; 64] = leaper_table(&KNIGHT_DELTAS);
pub(crate) static KING_ATTACKS: [u64; 64] = leaper_table(&KING_DELTAS);

/// Ray directions as (file, rank) steps: N, NE, E, SE, S, SW, W, NW.
pub const QUEEN_DIRS: [(i8, i8); 8] = KING_DELTAS;
pub const ROOK_DIRS: [(i8, i8); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];
pub const BISHOP_DIRS: [(i8, i8); 4] = [(1, 1), (1, -1), (-1, -1), (-1, 1)];

#[inline]
fn bits(mut mask: u64) -> impl Iterator<Item = Square> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as u8;
            mask &= mask - 1;
            Some(Square::from_index_unchecked(i))
        }
    })
}

pub(crate) fn slider_dirs(kind: PieceKind) -> &'static [(i8, i8)] {
    match kind {
        PieceKind::Bishop => &BISHOP_DIRS,
        PieceKind::Rook => &ROOK_DIRS,
        PieceKind::Queen => &QUEEN_DIRS,
        _ => &[],
    }
}

/// Calls `f` for every square attacked by the piece on `from`, regardless of
/// pins or whose turn it is.
pub(crate) fn for_each_attack(
    squares: &[Option<Piece>; 64],
    from: Square,
    piece: Piece,
    mut f: impl FnMut(Square),
) {
    match piece.kind {
        PieceKind::Pawn => {
            let dr = piece.color.sign() as i8;
            for df in [-1, 1] {
                if let Some(t) = from.offset(df, dr) {
                    f(t);
                }
            }
        }
        PieceKind::Knight => bits(KNIGHT_ATTACKS[from.index()]).for_each(f),
        PieceKind::King => bits(KING_ATTACKS[from.index()]).for_each(f),
        kind => {
            for &(df, dr) in slider_dirs(kind) {
                let mut cur = from;
                while let Some(t) = cur.offset(df, dr) {
                    f(t);
                    if squares[t.index()].is_some() {
                        break;
                    }
                    cur = t;
                }
            }
        }
    }
}

fn is_attacked_on(squares: &[Option<Piece>; 64], sq: Square, by: Color) -> bool {
    let is = |s: Square, kind: PieceKind| squares[s.index()] == Some(Piece::new(by, kind));
    // Pawns of `by` attack `sq` from one rank behind it.
    let dr = -by.sign() as i8;
    for df in [-1, 1] {
        if let Some(s) = sq.offset(df, dr) {
            if is(s, PieceKind::Pawn) {
                return true;
            }
        }
    }
    if bits(KNIGHT_ATTACKS[sq.index()]).any(|s| is(s, PieceKind::Knight)) {
        return true;
    }
    if bits(KING_ATTACKS[sq.index()]).any(|s| is(s, PieceKind::King)) {
        return true;
    }
    for (dirs, kind) in [(ROOK_DIRS, PieceKind::Rook), (BISHOP_DIRS, PieceKind::Bishop)] {
        for (df, dr) in dirs {
            let mut cur = sq;
            while let Some(t) = cur.offset(df, dr) {
                if let Some(p) = squares[t.index()] {
                    if p.color == by && (p.kind == kind || p.kind == PieceKind::Queen) {
                        return true;
                    }
                    break;
                }
                cur = t;
            }
        }
    }
    false
}

impl Board {
    pub fn is_square_attacked(&self, sq: Square, by: Color) -> bool {
        is_attacked_on(&self.squares, sq, by)
    }

    fn pseudo_legal(&self, color: Color, out: &mut Vec<Move>) {
        let sqs = &self.squares;
        for (from, piece) in self.pieces().filter(|(_, p)| p.color == color) {
            match piece.kind {
                PieceKind::Pawn => self.pawn_moves(from, color, out),
                kind => {
                    let push = |to: Square| {
                        if sqs[to.index()].map_or(true, |p| p.color != color) {
                            out.push(Move::new(from, to));
                        }
                    };
                    match kind {
                        PieceKind::Knight => bits(KNIGHT_ATTACKS[from.index()]).for_each(push),
                        PieceKind::King => bits(KING_ATTACKS[from.index()]).for_each(push),
                        _ => for_each_attack(sqs, from, piece, push),
                    }
                }
            }
        }
        if color == self.side {
            self.castling_moves(out);
        }
    }

    fn pawn_moves(&self, from: Square, color: Color, out: &mut Vec<Move>) {
        let dr = color.sign() as i8;
        let last_rank = if color == Color::White { 7 } else { 0 };
        let start_rank = if color == Color::White { 1 } else { 6 };
        let mut emit = |to: Square| {
            if to.rank() == last_rank {
                for kind in PieceKind::PROMOTIONS {
                    out.push(Move::with_promotion(from, to, kind));
                }
            } else {
                out.push(Move::new(from, to));
            }
        };
        if let Some(one) = from.offset(0, dr) {
            if self.squares[one.index()].is_none() {
                emit(one);
                if from.rank() == start_rank {
                    let two = one.offset(0, dr).expect("double push stays on board");
                    if self.squares[two.index()].is_none() {
                        emit(two);
                    }
                }
            }
        }
        for df in [-1, 1] {
            if let Some(to) = from.offset(df, dr) {
                let enemy = self.squares[to.index()].is_some_and(|p| p.color != color);
                if enemy || (Some(to) == self.en_passant && color == self.side) {
                    emit(to);
                }
            }
        }
    }

    fn castling_moves(&self, out: &mut Vec<Move>) {
        let us = self.side;
        let them = us.opposite();
        let base = if us == Color::White { 0u8 } else { 56 };
        let sq = |off: u8| Square::from_index_unchecked(base + off);
        let empty = |off: u8| self.squares[(base + off) as usize].is_none();
        if self.castling.contains(CastlingRights::kingside(us))
            && empty(5)
            && empty(6)
            && !self.is_square_attacked(sq(4), them)
            && !self.is_square_attacked(sq(5), them)
            && !self.is_square_attacked(sq(6), them)
        {
            out.push(Move::new(sq(4), sq(6)));
        }
        if self.castling.contains(CastlingRights::queenside(us))
            && empty(1)
            && empty(2)
            && empty(3)
            && !self.is_square_attacked(sq(4), them)
            && !self.is_square_attacked(sq(3), them)
            && !self.is_square_attacked(sq(2), them)
        {
            out.push(Move::new(sq(4), sq(2)));
        }
    }

    /// Whether playing `mv` (pseudo-legal for `color`) keeps `color`'s king safe.
    fn keeps_king_safe(&self, mv: Move, color: Color) -> bool {
        let mut squares = self.squares;
        let piece = squares[mv.from.index()].take().expect("pseudo-legal move");
        if piece.kind == PieceKind::Pawn
            && Some(mv.to) == self.en_passant
            && squares[mv.to.index()].is_none()
            && mv.from.file() != mv.to.file()
        {
            let victim = (mv.to.index() as i32 - 8 * color.sign()) as usize;
            squares[victim] = None;
        }
        squares[mv.to.index()] = Some(piece);
        let king = if piece.kind == PieceKind::King {
            mv.to
        } else {
            self.kings[color.index()]
        };
        !is_attacked_on(&squares, king, color.opposite())
    }

    /// All legal moves, sorted by ascending policy index.
    pub fn legal_moves(&self) -> Vec<Move> {
        self.legal_moves_for(self.side)
    }

    /// Moves `color` could legally make if it were its turn. Castling and
    /// en passant are only considered for the side to move.
    pub(crate) fn legal_moves_for(&self, color: Color) -> Vec<Move> {
        let mut pseudo = Vec::with_capacity(48);
        self.pseudo_legal(color, &mut pseudo);
        let mut legal: Vec<Move> = pseudo
            .into_iter()
            .filter(|&m| self.keeps_king_safe(m, color))
            .collect();
        legal.sort_unstable_by_key(policy_index);
        legal
    }

    /// Counts leaf nodes of the legal move tree at exactly `depth` plies.
    pub fn perft(&self, depth: u32) -> u64 {
        if depth == 0 {
            return 1;
        }
        let moves = self.legal_moves();
        if depth == 1 {
            return moves.len() as u64;
        }
        moves
            .into_iter()
            .map(|m| self.apply_move_unchecked(m).perft(depth - 1))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KIWIPETE: &str = "r3k2r/p1ppqpb1/bn2pnp1/3PN3/1p2P3/2N2Q1p/PPPBBPPP/R3K2R w KQkq - 0 1";

    #[test]
    fn start_position_has_twenty_moves() {
        assert_eq!(Board::startpos().legal_moves().len(), 20);
    }

    #[test]
    fn perft_depth_zero_is_one() {
        assert_eq!(Board::startpos().perft(0), 1);
        assert_eq!(Board::from_fen(KIWIPETE).unwrap().perft(0), 1);
    }

    #[test]
    fn perft_shallow() {
        let b = Board::startpos();
        assert_eq!(b.perft(1), 20);
        assert_eq!(b.perft(2), 400);
        assert_eq!(b.perft(3), 8902);
        let k = Board::from_fen(KIWIPETE).unwrap();
        assert_eq!(k.perft(1), 48);
        assert_eq!(k.perft(2), 2039);
    }

    #[test]
    fn perft_position_3_and_4() {
        // En-passant discovered checks and promotion-heavy positions.
        let p3 = Board::from_fen("8/2p5/3p4/KP5r/1R3p1k/8/4P1P1/8 w - - 0 1").unwrap();
        assert_eq!(p3.perft(1), 14);
        assert_eq!(p3.perft(2), 191);
        assert_eq!(p3.perft(3), 2812);
        assert_eq!(p3.perft(4), 43238);
        let p4 = Board::from_fen("r3k2r/Pppp1ppp/1b3nbN/nP6/BBP1P3/q4N2/Pp1P2PP/R2Q1RK1 w kq - 0 1")
            .unwrap();
        assert_eq!(p4.perft(1), 6);
        assert_eq!(p4.perft(2), 264);
        assert_eq!(p4.perft(3), 9467);
    }

    #[test]
    fn lone_black_king_avoids_white_king() {
        let b = Board::from_fen("8/8/8/8/8/5k2/8/6K1 b - - 0 1").unwrap();
        let moves = b.legal_moves();
        assert!(moves.len() <= 8);
        let wk = b.king_square(Color::White);
        for m in &moves {
            let adjacent = m.to.file().abs_diff(wk.file()) <= 1 && m.to.rank().abs_diff(wk.rank()) <= 1;
            assert!(!adjacent, "{m} touches the white king");
        }
        // f3 king: 8 neighbours minus f2 and g2, which g1 guards.
        assert_eq!(moves.len(), 6);
    }

    #[test]
    fn stalemate_has_no_moves() {
        let b = Board::from_fen("7k/5Q2/6K1/8/8/8/8/8 b - - 0 1").unwrap();
        assert!(b.legal_moves().is_empty());
        assert!(!b.in_check());
    }

    #[test]
    fn moves_sorted_by_policy_index() {
        let b = Board::from_fen(KIWIPETE).unwrap();
        let idx: Vec<u16> = b.legal_moves().iter().map(policy_index).collect();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
    }
}
