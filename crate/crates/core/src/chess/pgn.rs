//! Standard algebraic notation and PGN import/export (mainline only).

use super::board::{Board, START_FEN};
use super::types::*;
use super::ChessError;

/// One imported game: the position before every ply plus the final position.
#[derive(Clone, Debug)]
pub struct PgnGame {
    pub tags: Vec<(String, String)>,
    pub moves: Vec<Move>,
    pub positions: Vec<Board>,
    pub result: Option<String>,
}

impl Board {
    /// Resolves a SAN token (`Nbd7`, `exd8=Q+`, `O-O`) to a legal move.
    pub fn parse_san(&self, san: &str) -> Result<Move, String> {
        let token = san.trim_end_matches(['+', '#', '!', '?']);
        let legal = self.legal_moves();
        if matches!(token, "O-O" | "0-0" | "O-O-O" | "0-0-0") {
            let file = if token.len() == 3 { 6 } else { 2 };
            let king = self.king_square(self.side);
            return legal
                .into_iter()
                .find(|m| {
                    m.from == king && king.file() == 4 && m.to.file() == file && m.to.rank() == king.rank()
                })
                .ok_or_else(|| format!("castling {san:?} is not legal"));
        }

        let mut body = token;
        let mut promotion = None;
        if let Some(eq) = body.find('=') {
            let p = body[eq + 1..]
                .chars()
                .next()
                .and_then(PieceKind::from_char)
                .ok_or_else(|| format!("bad promotion in {san:?}"))?;
            promotion = Some(p);
            body = &body[..eq];
        } else if body.len() >= 3 {
            // Promotion without '=' as in "e8Q".
            let last = body.chars().last().unwrap();
            if last.is_ascii_uppercase() && body.as_bytes()[0].is_ascii_lowercase() {
                promotion = PieceKind::from_char(last);
                body = &body[..body.len() - 1];
            }
        }

        let (kind, rest) = match body.chars().next() {
            Some(c @ ('N' | 'B' | 'R' | 'Q' | 'K')) => (PieceKind::from_char(c).unwrap(), &body[1..]),
            Some(_) => (PieceKind::Pawn, body),
            None => return Err("empty move".into()),
        };
        let rest = rest.replace(['x', ':', '-'], "");
        if rest.len() < 2 || !rest.is_ascii() {
            return Err(format!("bad move {san:?}"));
        }
        let to: Square = rest[rest.len() - 2..]
            .parse()
            .map_err(|_| format!("bad destination in {san:?}"))?;
        let mut from_file = None;
        let mut from_rank = None;
        for c in rest[..rest.len() - 2].chars() {
            match c {
                'a'..='h' => from_file = Some(c as u8 - b'a'),
                '1'..='8' => from_rank = Some(c as u8 - b'1'),
                _ => return Err(format!("bad disambiguation in {san:?}")),
            }
        }
        let candidates: Vec<Move> = legal
            .into_iter()
            .filter(|m| {
                m.to == to
                    && m.promotion == promotion
                    && self.piece_at(m.from).map(|p| p.kind) == Some(kind)
                    && from_file.map_or(true, |f| m.from.file() == f)
                    && from_rank.map_or(true, |r| m.from.rank() == r)
            })
            .collect();
        match candidates.as_slice() {
            [m] => Ok(*m),
            [] => Err(format!("{san:?} is not legal")),
            _ => Err(format!("{san:?} is ambiguous")),
        }
    }

    /// SAN for a legal move, with check and mate suffixes.
    pub fn san(&self, mv: Move) -> String {
        let piece = self.piece_at(mv.from).expect("move from occupied square");
        let mut out = String::new();
        if piece.kind == PieceKind::King && mv.from.file() == 4 && mv.to.file().abs_diff(4) == 2 {
            out.push_str(if mv.to.file() == 6 { "O-O" } else { "O-O-O" });
        } else {
            let capture = self.piece_at(mv.to).is_some()
                || (piece.kind == PieceKind::Pawn && mv.from.file() != mv.to.file());
            if piece.kind == PieceKind::Pawn {
                if capture {
                    out.push((b'a' + mv.from.file()) as char);
                }
            } else {
                out.push(piece.kind.to_char().to_ascii_uppercase());
                let rivals: Vec<Move> = self
                    .legal_moves()
                    .into_iter()
                    .filter(|m| {
                        m.to == mv.to && m.from != mv.from && self.piece_at(m.from) == Some(piece)
                    })
                    .collect();
                if !rivals.is_empty() {
                    let file_unique = rivals.iter().all(|m| m.from.file() != mv.from.file());
                    let rank_unique = rivals.iter().all(|m| m.from.rank() != mv.from.rank());
                    if file_unique {
                        out.push((b'a' + mv.from.file()) as char);
                    } else if rank_unique {
                        out.push((b'1' + mv.from.rank()) as char);
                    } else {
                        out.push_str(&mv.from.to_string());
                    }
                }
            }
            if capture {
                out.push('x');
            }
            out.push_str(&mv.to.to_string());
            if let Some(p) = mv.promotion {
                out.push('=');
                out.push(p.to_char().to_ascii_uppercase());
            }
        }
        let next = self.apply_move_unchecked(mv);
        if next.in_check() {
            out.push(if next.legal_moves().is_empty() { '#' } else { '+' });
        }
        out
    }
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Tag(&'a str),
    Word(&'a str),
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut depth = 0usize;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'{' => {
                i = text[i..].find('}').map_or(bytes.len(), |j| i + j + 1);
            }
            b';' => {
                i = text[i..].find('\n').map_or(bytes.len(), |j| i + j + 1);
            }
            b'%' if i == 0 || bytes[i - 1] == b'\n' => {
                i = text[i..].find('\n').map_or(bytes.len(), |j| i + j + 1);
            }
            b'(' => {
                depth += 1;
                i += 1;
            }
            b')' => {
                depth = depth.saturating_sub(1);
                i += 1;
            }
            b'[' if depth == 0 => {
                let end = text[i..].find(']').map_or(bytes.len(), |j| i + j);
                tokens.push(Token::Tag(&text[i + 1..end]));
                i = end + 1;
            }
            _ if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'{' | b'(' | b')' | b';' | b'[')
                {
                    i += 1;
                }
                if depth == 0 {
                    tokens.push(Token::Word(&text[start..i]));
                }
            }
        }
    }
    tokens
}

fn parse_tag(tag: &str) -> Option<(String, String)> {
    let tag = tag.trim();
    let space = tag.find(char::is_whitespace)?;
    let value = tag[space..].trim().trim_matches('"');
    Some((tag[..space].to_string(), value.to_string()))
}

/// Strips a leading move number such as `12.` or `12...` from a token.
fn strip_move_number(word: &str) -> &str {
    let digits = word.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 && word[digits..].starts_with('.') {
        word[digits..].trim_start_matches('.')
    } else {
        word
    }
}

const RESULTS: [&str; 4] = ["1-0", "0-1", "1/2-1/2", "*"];

/// Parses every game in `text`. Comments, NAGs and variations are skipped.
pub fn parse_pgn(text: &str) -> Result<Vec<PgnGame>, ChessError> {
    let mut games = Vec::new();
    let mut current: Option<PgnGame> = None;

    fn fresh(tags: Vec<(String, String)>, game: usize) -> Result<PgnGame, ChessError> {
        let fen = tags
            .iter()
            .find(|(k, _)| k == "FEN")
            .map_or(START_FEN, |(_, v)| v.as_str());
        let start = Board::from_fen(fen).map_err(|e| ChessError::Pgn {
            game,
            ply: 0,
            message: format!("bad FEN tag: {e}"),
        })?;
        Ok(PgnGame {
            tags,
            moves: Vec::new(),
            positions: vec![start],
            result: None,
        })
    }

    let mut pending_tags = Vec::new();
    for token in tokenize(text) {
        match token {
            Token::Tag(t) => {
                if let Some(g) = current.take() {
                    if !g.moves.is_empty() || g.result.is_some() {
                        games.push(g);
                    }
                }
                if let Some(kv) = parse_tag(t) {
                    pending_tags.push(kv);
                }
            }
            Token::Word(w) => {
                if current.is_none() {
                    current = Some(fresh(std::mem::take(&mut pending_tags), games.len())?);
                }
                let game = current.as_mut().unwrap();
                if RESULTS.contains(&w) {
                    game.result = Some(w.to_string());
                    games.push(current.take().unwrap());
                    continue;
                }
                let san = strip_move_number(w);
                if san.is_empty() || san.starts_with('$') || san.chars().all(|c| c == '.') {
                    continue;
                }
                let board = game.positions.last().unwrap();
                let mv = board.parse_san(san).map_err(|message| ChessError::Pgn {
                    game: games.len(),
                    ply: game.moves.len(),
                    message,
                })?;
                let next = board.apply_move_unchecked(mv);
                game.moves.push(mv);
                game.positions.push(next);
            }
        }
    }
    if let Some(g) = current {
        if !g.moves.is_empty() {
            games.push(g);
        }
    }
    Ok(games)
}

/// Renders a game as PGN with the given tags and result token.
pub fn write_pgn(tags: &[(String, String)], start: &Board, moves: &[Move], result: &str) -> String {
    let mut out = String::new();
    for (k, v) in tags {
        out.push_str(&format!("[{k} \"{v}\"]\n"));
    }
    if start.to_fen() != START_FEN && !tags.iter().any(|(k, _)| k == "FEN") {
        out.push_str(&format!("[SetUp \"1\"]\n[FEN \"{}\"]\n", start.to_fen()));
    }
    out.push('\n');
    let mut board = start.clone();
    let mut line = String::new();
    for (i, &mv) in moves.iter().enumerate() {
        let mut tok = String::new();
        if board.side_to_move() == Color::White {
            tok.push_str(&format!("{}. ", board.fullmove_number()));
        } else if i == 0 {
            tok.push_str(&format!("{}... ", board.fullmove_number()));
        }
        tok.push_str(&board.san(mv));
        if line.len() + tok.len() > 79 {
            out.push_str(line.trim_end());
            out.push('\n');
            line.clear();
        }
        line.push_str(&tok);
        line.push(' ');
        board = board.apply_move_unchecked(mv);
    }
    line.push_str(result);
    out.push_str(&line);
    out.push_str("\n\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const OPERA: &str = r#"[Event "Paris"]
[White "Morphy"]
[Black "Duke Karl / Count Isouard"]
[Result "1-0"]

1. e4 e5 2. Nf3 d6 3. d4 Bg4 {This is a weak move} 4. dxe5 Bxf3 5. Qxf3 dxe5
6. Bc4 Nf6 7. Qb3 Qe7 8. Nc3 c6 9. Bg5 b5 10. Nxb5 cxb5 11. Bxb5+ Nbd7
12. O-O-O Rd8 13. Rxd7 Rxd7 14. Rd1 Qe6 15. Bxd7+ Nxd7 16. Qb8+ Nxb8 17. Rd8# 1-0
"#;

    #[test]
    fn short_game_counts_plies() {
        let games = parse_pgn("1. e4 e5 2. Nf3 *").unwrap();
        assert_eq!(games.len(), 1);
        assert_eq!(games[0].moves.len(), 3);
        assert_eq!(games[0].positions.len(), 4);
        assert_eq!(games[0].result.as_deref(), Some("*"));
    }

    #[test]
    fn opera_game_ends_in_mate() {
        let games = parse_pgn(OPERA).unwrap();
        assert_eq!(games.len(), 1);
        let g = &games[0];
        assert_eq!(g.moves.len(), 33);
        assert_eq!(g.result.as_deref(), Some("1-0"));
        assert_eq!(g.positions.last().unwrap().outcome().kind, OutcomeKind::WhiteWin);
        assert!(g.tags.iter().any(|(k, v)| k == "White" && v == "Morphy"));
    }

    #[test]
    fn variations_and_nags_are_skipped() {
        let text = "1. e4 (1. d4 d5 (1... Nf6 2. c4)) e5 $1 2. Nf3 {comment (with paren} Nc6 1/2-1/2";
        let games = parse_pgn(text).unwrap();
        assert_eq!(games[0].moves.len(), 4);
        assert_eq!(games[0].result.as_deref(), Some("1/2-1/2"));
    }

    #[test]
    fn bad_san_reports_game_and_ply() {
        let text = "1. e4 e5 *\n\n1. d4 d5 2. Qd7 *";
        match parse_pgn(text) {
            Err(ChessError::Pgn { game, ply, .. }) => {
                assert_eq!(game, 1);
                assert_eq!(ply, 2);
            }
            other => panic!("expected PGN error, got {other:?}"),
        }
    }

    #[test]
    fn export_round_trips() {
        let games = parse_pgn(OPERA).unwrap();
        let g = &games[0];
        let text = write_pgn(&g.tags, &g.positions[0], &g.moves, "1-0");
        let again = parse_pgn(&text).unwrap();
        assert_eq!(again[0].moves, g.moves);
        assert!(text.contains("17. Rd8# 1-0"));
    }

    #[test]
    fn san_disambiguation() {
        let b = Board::from_fen("4k3/8/8/8/8/8/4K3/R6R w - - 0 1").unwrap();
        let m = b.parse_san("Rad1").unwrap();
        assert_eq!(m.from.to_string(), "a1");
        assert_eq!(b.san(m), "Rad1");
        assert!(b.parse_san("Rd1").is_err(), "ambiguous without file");
        let p = Board::from_fen("4k3/P7/8/8/8/8/8/4K3 w - - 0 1").unwrap();
        let promo = p.parse_san("a8=N").unwrap();
        assert_eq!(promo.promotion, Some(PieceKind::Knight));
    }
}
