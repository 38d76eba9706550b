use crate::chess::{Board, Color, Move, PieceKind, Square};

use super::FeatureError;

/// Size of the policy output space.
pub const POLICY_DIM: usize = 5120;
const PROMOTION_BASE: usize = 4096;

/// Index into the policy output, `< 5120`.
///
/// `0..4096` hold `from * 64 + to`; promotions live at
/// `4096 + side * 512 + from_file * 64 + (file_delta + 1) * 16 + piece_code`.
/// Remaining indices above 4096 are never produced and stay masked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MoveIndex(u16);

impl MoveIndex {
    pub fn new(index: usize) -> Option<MoveIndex> {
        (index < POLICY_DIM).then_some(MoveIndex(index as u16))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

fn promotion_code(kind: PieceKind) -> Option<usize> {
    match kind {
        PieceKind::Knight => Some(0),
        PieceKind::Bishop => Some(1),
        PieceKind::Rook => Some(2),
        PieceKind::Queen => Some(3),
        _ => None,
    }
}

pub fn encode_move(m: &Move) -> Result<MoveIndex, FeatureError> {
    let Some(kind) = m.promotion else {
        return Ok(MoveIndex((m.from.index() * 64 + m.to.index()) as u16));
    };
    let code = promotion_code(kind).ok_or(FeatureError::Unencodable(*m))?;
    let side = match m.to.rank() {
        7 => 0,
        0 => 1,
        _ => return Err(FeatureError::Unencodable(*m)),
    };
    let delta = m.to.file() as i32 - m.from.file() as i32;
    if delta.abs() > 1 {
        return Err(FeatureError::Unencodable(*m));
    }
    let index = PROMOTION_BASE
        + side * 512
        + m.from.file() as usize * 64
        + (delta + 1) as usize * 16
        + code;
    Ok(MoveIndex(index as u16))
}

/// Total variant of [`encode_move`] used for move ordering.
pub(crate) fn policy_index(m: &Move) -> u16 {
    encode_move(m).map_or((m.from.index() * 64 + m.to.index()) as u16, |i| i.0)
}

/// Inverse of [`encode_move`] restricted to moves legal in `board`.
pub fn decode_move(index: MoveIndex, board: &Board) -> Result<Move, FeatureError> {
    board
        .legal_moves()
        .into_iter()
        .find(|m| policy_index(m) == index.0)
        .ok_or(FeatureError::NotLegal(index.get()))
}

/// Reconstructs the geometric move an index stands for, without a position.
pub fn index_to_move(index: MoveIndex) -> Option<Move> {
    let i = index.get();
    if i < PROMOTION_BASE {
        let from = Square::new((i / 64) as u8)?;
        let to = Square::new((i % 64) as u8)?;
        return Some(Move::new(from, to));
    }
    let rel = i - PROMOTION_BASE;
    let side = rel / 512;
    let from_file = (rel % 512) / 64;
    let delta = ((rel % 64) / 16) as i32 - 1;
    let code = rel % 16;
    if side > 1 || from_file > 7 || delta > 1 || code > 3 {
        return None;
    }
    let to_file = from_file as i32 + delta;
    if !(0..8).contains(&to_file) {
        return None;
    }
    let (from_rank, to_rank) = if side == 0 { (6, 7) } else { (1, 0) };
    let kind = [
        PieceKind::Knight,
        PieceKind::Bishop,
        PieceKind::Rook,
        PieceKind::Queen,
    ][code];
    Some(Move::with_promotion(
        Square::from_coords(from_file as u8, from_rank)?,
        Square::from_coords(to_file as u8, to_rank)?,
        kind,
    ))
}

/// Set of legal policy indices for a position.
#[derive(Clone, PartialEq, Eq)]
pub struct LegalMask {
    bits: [u64; POLICY_DIM / 64],
}

impl std::fmt::Debug for LegalMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter().map(|i| i.get())).finish()
    }
}

impl Default for LegalMask {
    fn default() -> Self {
        LegalMask {
            bits: [0; POLICY_DIM / 64],
        }
    }
}

impl LegalMask {
    pub fn for_board(board: &Board) -> LegalMask {
        board.legal_moves().iter().map(policy_index).map(|i| MoveIndex(i)).collect()
    }

    /// Every index set; useful for tests of the masking contract.
    pub fn full() -> LegalMask {
        LegalMask {
            bits: [u64::MAX; POLICY_DIM / 64],
        }
    }

    #[inline]
    pub fn contains(&self, index: MoveIndex) -> bool {
        self.bits[index.get() / 64] >> (index.get() % 64) & 1 == 1
    }

    pub fn insert(&mut self, index: MoveIndex) {
        self.bits[index.get() / 64] |= 1 << (index.get() % 64);
    }

    pub fn remove(&mut self, index: MoveIndex) {
        self.bits[index.get() / 64] &= !(1 << (index.get() % 64));
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Set indices in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = MoveIndex> + '_ {
        self.bits.iter().enumerate().flat_map(|(word, &bits)| {
            let mut rest = bits;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(MoveIndex((word * 64 + b) as u16))
            })
        })
    }
}

impl FromIterator<MoveIndex> for LegalMask {
    fn from_iter<I: IntoIterator<Item = MoveIndex>>(iter: I) -> Self {
        let mut mask = LegalMask::default();
        for i in iter {
            mask.insert(i);
        }
        mask
    }
}

/// Side whose pawns a promotion index belongs to.
pub fn promotion_side(index: MoveIndex) -> Option<Color> {
    match index.get() {
        i if i < PROMOTION_BASE => None,
        i if i < PROMOTION_BASE + 512 => Some(Color::White),
        _ => Some(Color::Black),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mv(s: &str) -> Move {
        Move::from_uci(s).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_move(&mv("e2e4")).unwrap().get(), 796);
        assert_eq!(encode_move(&mv("e7e8q")).unwrap().get(), 4371);
        assert_eq!(encode_move(&mv("a1a1")).unwrap().get(), 0);
        assert_eq!(encode_move(&mv("b2a1n")).unwrap().get(), 4096 + 512 + 64);
    }

    #[test]
    fn wide_promotion_is_rejected() {
        assert!(matches!(
            encode_move(&mv("a7c8q")),
            Err(FeatureError::Unencodable(_))
        ));
        assert!(encode_move(&mv("e6e7q")).is_err());
    }

    #[test]
    fn decode_examples() {
        let start = Board::startpos();
        let i = MoveIndex::new(796).unwrap();
        assert_eq!(decode_move(i, &start).unwrap(), mv("e2e4"));
        let promo = Board::from_fen("k7/4P3/8/8/8/8/8/K7 w - - 0 1").unwrap();
        assert_eq!(
            decode_move(MoveIndex::new(4371).unwrap(), &promo).unwrap(),
            mv("e7e8q")
        );
        let empty_e2 = Board::from_fen("4k3/8/8/8/8/8/8/4K3 w - - 0 1").unwrap();
        assert!(matches!(
            decode_move(i, &empty_e2),
            Err(FeatureError::NotLegal(796))
        ));
    }

    #[test]
    fn masks() {
        assert_eq!(LegalMask::for_board(&Board::startpos()).count(), 20);
        let stalemate = Board::from_fen("7k/5Q2/6K1/8/8/8/8/8 b - - 0 1").unwrap();
        assert!(LegalMask::for_board(&stalemate).is_empty());
        let promo = Board::from_fen("k7/4P3/8/8/8/8/8/K7 w - - 0 1").unwrap();
        let mask = LegalMask::for_board(&promo);
        for code in 0..4 {
            let i = MoveIndex::new(4096 + 4 * 64 + 16 + code).unwrap();
            assert!(mask.contains(i), "piece code {code}");
        }
    }

    #[test]
    fn index_to_move_inverts_encode() {
        for i in 0..POLICY_DIM {
            let idx = MoveIndex::new(i).unwrap();
            if let Some(m) = index_to_move(idx) {
                if m.promotion.is_some() {
                    assert_eq!(encode_move(&m).unwrap(), idx);
                    assert!(promotion_side(idx).is_some());
                }
            }
        }
    }
}
