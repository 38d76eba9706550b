use crate::chess::{
    for_each_attack, Board, CastlingRights, Color, PieceKind, Square, BISHOP_DIRS, QUEEN_DIRS,
    ROOK_DIRS,
};

pub const FEATURE_DIM: usize = 353;
pub const GLOBAL_RANGE: std::ops::Range<usize> = 0..17;
pub const PIECE_RANGE: std::ops::Range<usize> = 17..225;
pub const SQUARE_RANGE: std::ops::Range<usize> = 225..353;

const COUNTS_BASE: usize = 5;
const RECORDS_BASE: usize = 17;
const MOBILITY_BASE: usize = 177;
const SQUARES_BASE: usize = 225;

/// Per-side roster order and capacity for the piece records.
const ROSTER: [(PieceKind, usize); 6] = [
    (PieceKind::King, 1),
    (PieceKind::Queen, 1),
    (PieceKind::Rook, 2),
    (PieceKind::Bishop, 2),
    (PieceKind::Knight, 2),
    (PieceKind::Pawn, 8),
];

/// Starting counts used to normalise slots 5-16.
const COUNT_SCALE: [(PieceKind, f64); 6] = [
    (PieceKind::King, 1.0),
    (PieceKind::Queen, 1.0),
    (PieceKind::Rook, 2.0),
    (PieceKind::Bishop, 2.0),
    (PieceKind::Knight, 2.0),
    (PieceKind::Pawn, 8.0),
];

/// Exchange value on the 0..10 scale used for attacker/defender slots.
pub fn exchange_value(kind: PieceKind) -> u8 {
    match kind {
        PieceKind::Pawn => 1,
        PieceKind::Knight | PieceKind::Bishop => 3,
        PieceKind::Rook => 5,
        PieceKind::Queen => 9,
        PieceKind::King => 10,
    }
}

#[derive(Clone, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl std::fmt::Debug for FeatureVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FeatureVector({:?}..)", &self.0[..17])
    }
}

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn global(&self) -> &[f64] {
        &self.0[GLOBAL_RANGE]
    }

    pub fn piece_centric(&self) -> &[f64] {
        &self.0[PIECE_RANGE]
    }

    pub fn square_centric(&self) -> &[f64] {
        &self.0[SQUARE_RANGE]
    }
}

/// Lowest exchange value of a `color` piece attacking each square, 0 for none.
fn lowest_attackers(board: &Board, color: Color) -> [u8; 64] {
    let mut lowest = [0u8; 64];
    for (from, piece) in board.pieces().filter(|(_, p)| p.color == color) {
        let v = exchange_value(piece.kind);
        for_each_attack(&board.squares, from, piece, |sq| {
            let slot = &mut lowest[sq.index()];
            if *slot == 0 || v < *slot {
                *slot = v;
            }
        });
    }
    lowest
}

/// Squares reachable along one ray, counting a capturable enemy blocker.
fn ray_length(board: &Board, from: Square, color: Color, (df, dr): (i8, i8)) -> u8 {
    let mut n = 0;
    let mut cur = from;
    while let Some(next) = cur.offset(df, dr) {
        match board.piece_at(next) {
            None => n += 1,
            Some(p) => {
                if p.color != color {
                    n += 1;
                }
                break;
            }
        }
        cur = next;
    }
    n
}

pub fn extract_features(board: &Board) -> FeatureVector {
    let mut v = [0.0f64; FEATURE_DIM];

    v[0] = if board.side_to_move() == Color::White { 1.0 } else { 0.0 };
    let rights = board.castling();
    for (i, r) in [
        CastlingRights::WHITE_QUEENSIDE,
        CastlingRights::WHITE_KINGSIDE,
        CastlingRights::BLACK_QUEENSIDE,
        CastlingRights::BLACK_KINGSIDE,
    ]
    .into_iter()
    .enumerate()
    {
        v[1 + i] = if rights.contains(r) { 1.0 } else { 0.0 };
    }

    // Pieces of each colour and kind in ascending square order.
    let mut by_kind: [[Vec<Square>; 6]; 2] = Default::default();
    for (sq, p) in board.pieces() {
        by_kind[p.color.index()][p.kind.index()].push(sq);
    }

    for color in [Color::White, Color::Black] {
        for (i, (kind, scale)) in COUNT_SCALE.iter().enumerate() {
            let n = by_kind[color.index()][kind.index()].len() as f64;
            v[COUNTS_BASE + 6 * color.index() + i] = (n / scale).min(1.0);
        }
    }

    let attacks = [
        lowest_attackers(board, Color::White),
        lowest_attackers(board, Color::Black),
    ];

    for color in [Color::White, Color::Black] {
        let own = &attacks[color.index()];
        let enemy = &attacks[color.opposite().index()];
        let mut slot = RECORDS_BASE + 80 * color.index();
        for (kind, capacity) in ROSTER {
            let squares = &by_kind[color.index()][kind.index()];
            for k in 0..capacity {
                if let Some(&sq) = squares.get(k) {
                    v[slot] = 1.0;
                    v[slot + 1] = sq.file() as f64 / 7.0;
                    v[slot + 2] = sq.rank() as f64 / 7.0;
                    v[slot + 3] = enemy[sq.index()] as f64 / 10.0;
                    v[slot + 4] = own[sq.index()] as f64 / 10.0;
                }
                slot += 5;
            }
        }

        let mut slot = MOBILITY_BASE + 24 * color.index();
        let sliders: [(PieceKind, usize, &[(i8, i8)]); 3] = [
            (PieceKind::Queen, 1, &QUEEN_DIRS),
            (PieceKind::Rook, 2, &ROOK_DIRS),
            (PieceKind::Bishop, 2, &BISHOP_DIRS),
        ];
        for (kind, capacity, dirs) in sliders {
            let squares = &by_kind[color.index()][kind.index()];
            for k in 0..capacity {
                for &dir in dirs {
                    if let Some(&sq) = squares.get(k) {
                        v[slot] = ray_length(board, sq, color, dir) as f64 / 7.0;
                    }
                    slot += 1;
                }
            }
        }
    }

    // Occupied squares: attacker is the occupant's enemy, defender its own side.
    // Empty squares: attacker is the side to move.
    let stm = board.side_to_move();
    for sq in Square::all() {
        let owner = board.piece_at(sq).map_or(stm.opposite(), |p| p.color);
        let base = SQUARES_BASE + 2 * sq.index();
        v[base] = attacks[owner.opposite().index()][sq.index()] as f64 / 10.0;
        v[base + 1] = attacks[owner.index()][sq.index()] as f64 / 10.0;
    }

    FeatureVector(v)
}
