use crate::chess::{Board, Color, PieceKind};

/// Centipawn value used for a forced mate before normalisation.
pub const MATE_CP: i32 = 10_000;

/// Centipawns contributed by each legal move of mobility advantage.
pub const MOBILITY_CP: i32 = 10;

pub fn piece_value(kind: PieceKind) -> i32 {
    match kind {
        PieceKind::Pawn => 100,
        PieceKind::Knight => 320,
        PieceKind::Bishop => 330,
        PieceKind::Rook => 500,
        PieceKind::Queen => 900,
        PieceKind::King => 0,
    }
}

/// White material minus Black material.
pub fn material_balance(board: &Board) -> i32 {
    board
        .pieces()
        .map(|(_, p)| piece_value(p.kind) * p.color.sign())
        .sum()
}

/// White legal-move count minus Black's, each counted as if it were that side's turn.
pub fn mobility_balance(board: &Board) -> i32 {
    let w = board.legal_moves_for(Color::White).len() as i32;
    let b = board.legal_moves_for(Color::Black).len() as i32;
    w - b
}

/// White-centric heuristic score in centipawns.
pub fn material_eval(board: &Board) -> i32 {
    material_balance(board) + MOBILITY_CP * mobility_balance(board)
}

/// Maps centipawns to (-1, 1) with `tanh(cp / 600)`.
pub fn normalize_cp(cp: f64) -> f64 {
    (cp / 600.0).tanh()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_position_is_level() {
        assert_eq!(material_eval(&Board::startpos()), 0);
    }

    #[test]
    fn queen_up() {
        let b = Board::from_fen("4k3/8/8/8/8/8/8/3QK3 w - - 0 1").unwrap();
        assert_eq!(material_balance(&b), 900);
        let kk = Board::from_fen("4k3/8/8/8/8/8/8/4K3 w - - 0 1").unwrap();
        assert_eq!(material_eval(&kk), 0);
        // Missing black queen from the initial array.
        let b = Board::from_fen("rnb1kbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1").unwrap();
        assert_eq!(material_balance(&b), 900);
    }

    #[test]
    fn normalisation_points() {
        assert_eq!(normalize_cp(0.0), 0.0);
        assert!((normalize_cp(600.0) - 1f64.tanh()).abs() < 1e-15);
        assert!((normalize_cp(600.0) - 0.761_594_155_955_764_9).abs() < 1e-12);
        assert_eq!(normalize_cp(-600.0), -normalize_cp(600.0));
        assert!((normalize_cp(800.0) - 0.870_061_661_742_671_9).abs() < 1e-12);
    }
}
