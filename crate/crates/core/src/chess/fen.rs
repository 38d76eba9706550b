use super::board::Board;
use super::types::*;
use super::ChessError;

impl Board {
    /// Parses a six-field FEN record.
    pub fn from_fen(text: &str) -> Result<Board, ChessError> {
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(ChessError::fen(
                "record",
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let squares = parse_placement(fields[0])?;
        let side = match fields[1] {
            "w" => Color::White,
            "b" => Color::Black,
            other => {
                return Err(ChessError::fen("side to move", format!("unknown side {other:?}")))
            }
        };
        let mut castling = CastlingRights::NONE;
        if fields[2] != "-" {
            for c in fields[2].chars() {
                let right = match c {
                    'K' => CastlingRights::WHITE_KINGSIDE,
                    'Q' => CastlingRights::WHITE_QUEENSIDE,
                    'k' => CastlingRights::BLACK_KINGSIDE,
                    'q' => CastlingRights::BLACK_QUEENSIDE,
                    _ => return Err(ChessError::fen("castling", format!("bad character {c:?}"))),
                };
                if castling.contains(right) {
                    return Err(ChessError::fen("castling", format!("duplicate right {c:?}")));
                }
                castling.insert(right);
            }
        }
        let en_passant = match fields[3] {
            "-" => None,
            s => Some(
                s.parse::<Square>()
                    .map_err(|_| ChessError::fen("en passant", format!("bad square {s:?}")))?,
            ),
        };
        let halfmove = fields[4]
            .parse()
            .map_err(|_| ChessError::fen("halfmove clock", format!("bad number {:?}", fields[4])))?;
        let fullmove = fields[5]
            .parse()
            .map_err(|_| ChessError::fen("fullmove", format!("bad number {:?}", fields[5])))?;
        Board::from_parts(squares, side, castling, en_passant, halfmove, fullmove)
    }

    /// Canonical FEN for this position.
    pub fn to_fen(&self) -> String {
        let mut out = String::with_capacity(90);
        for rank in (0..8).rev() {
            let mut empty = 0;
            for file in 0..8 {
                match self.squares[file + 8 * rank] {
                    None => empty += 1,
                    Some(p) => {
                        if empty > 0 {
                            out.push(char::from(b'0' + empty));
                            empty = 0;
                        }
                        out.push(p.to_fen_char());
                    }
                }
            }
            if empty > 0 {
                out.push(char::from(b'0' + empty));
            }
            if rank > 0 {
                out.push('/');
            }
        }
        out.push(' ');
        out.push(if self.side == Color::White { 'w' } else { 'b' });
        out.push(' ');
        let rights = [
            (CastlingRights::WHITE_KINGSIDE, 'K'),
            (CastlingRights::WHITE_QUEENSIDE, 'Q'),
            (CastlingRights::BLACK_KINGSIDE, 'k'),
            (CastlingRights::BLACK_QUEENSIDE, 'q'),
        ];
        let before = out.len();
        for (r, c) in rights {
            if self.castling.contains(r) {
                out.push(c);
            }
        }
        if out.len() == before {
            out.push('-');
        }
        match self.en_passant {
            Some(sq) => out.push_str(&format!(" {sq}")),
            None => out.push_str(" -"),
        }
        out.push_str(&format!(" {} {}", self.halfmove, self.fullmove));
        out
    }
}

fn parse_placement(text: &str) -> Result<[Option<Piece>; 64], ChessError> {
    let ranks: Vec<&str> = text.split('/').collect();
    if ranks.len() != 8 {
        return Err(ChessError::fen(
            "placement",
            format!("expected 8 ranks, found {}", ranks.len()),
        ));
    }
    let mut squares = [None; 64];
    for (i, rank_text) in ranks.iter().enumerate() {
        let rank = 7 - i;
        let mut file = 0usize;
        for c in rank_text.chars() {
            if let Some(d) = c.to_digit(10) {
                if !(1..=8).contains(&d) {
                    return Err(ChessError::fen("placement", format!("bad run length {c:?}")));
                }
                file += d as usize;
            } else {
                let piece = Piece::from_fen_char(c)
                    .ok_or_else(|| ChessError::fen("placement", format!("bad piece {c:?}")))?;
                if file < 8 {
                    squares[file + 8 * rank] = Some(piece);
                }
                file += 1;
            }
            if file > 8 {
                break;
            }
        }
        if file != 8 {
            return Err(ChessError::fen(
                "placement",
                format!("rank {} has {} entries", rank + 1, file),
            ));
        }
    }
    Ok(squares)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chess::START_FEN;

    #[test]
    fn start_position() {
        let b = Board::from_fen(START_FEN).unwrap();
        assert_eq!(b.castling(), CastlingRights::ALL);
        assert_eq!(b.side_to_move(), Color::White);
        assert_eq!(b.to_fen(), START_FEN);
    }

    #[test]
    fn bare_kings() {
        let b = Board::from_fen("8/8/8/8/8/8/8/K6k w - - 0 1").unwrap();
        assert_eq!(b.castling(), CastlingRights::NONE);
        assert_eq!(b.pieces().count(), 2);
    }

    #[test]
    fn short_rank_is_rejected() {
        let err = Board::from_fen("rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBN w KQkq - 0 1")
            .unwrap_err();
        assert!(matches!(err, ChessError::Fen { field: "placement", .. }), "{err}");
        assert!(err.to_string().contains("rank 1 has 7"));
    }

    #[test]
    fn invalid_records() {
        let cases = [
            ("8/8/8/8/8/8/8/K6k w - - 0", "record"),
            ("8/8/8/8/8/8/8/KK5k w - - 0 1", "placement"),
            ("8/8/8/8/8/8/8/K7 w - - 0 1", "placement"),
            ("P7/8/8/8/8/8/8/K6k w - - 0 1", "placement"),
            ("8/8/8/8/8/8/8/K6k x - - 0 1", "side to move"),
            ("8/8/8/8/8/8/8/K6k w K - 0 1", "castling"),
            ("8/8/8/8/8/8/8/K6k w - e9 0 1", "en passant"),
            ("8/8/8/8/8/8/8/K6k w - - x 1", "halfmove clock"),
            ("8/8/8/8/8/8/8/K6k w - - 0 0", "fullmove"),
            ("8/8/8/8/8/8/8/Kr5k b - - 0 1", "side to move"),
        ];
        for (fen, field) in cases {
            match Board::from_fen(fen) {
                Err(ChessError::Fen { field: f, .. }) => assert_eq!(f, field, "{fen}"),
                other => panic!("{fen}: expected error on {field}, got {other:?}"),
            }
        }
    }
}
