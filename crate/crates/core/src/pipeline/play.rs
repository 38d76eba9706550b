use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{derive_seed, AdjudicationConfig, GenerationConfig, PipelineError, TrainingTriplet};
use crate::chess::{write_pgn, Board, Color, GameOutcome, Move, OutcomeKind, OutcomeReason};
use crate::features::{extract_features, LegalMask};
use crate::oracle::{connect, normalize_cp, Oracle, OracleConfig};
use crate::search::{
    advance_root, run_mcts, visit_policy, Evaluator, SearchConfig, SearchNode, SearchResult, Temperature,
    TemperatureSchedule,
};

/// Move chooser for one side of a game.
#[derive(Clone, Copy)]
pub enum Player<'a> {
    Mcts {
        net: &'a (dyn Evaluator + Sync),
        search: SearchConfig,
    },
    /// Uniformly random legal moves.
    Random,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayedGame {
    pub moves: Vec<Move>,
    pub outcome: GameOutcome,
    /// White-centric oracle score that ended the game, if adjudicated.
    pub adjudication_cp: Option<i32>,
}

impl PlayedGame {
    pub fn plies(&self) -> usize {
        self.moves.len()
    }
}

/// Plays one game from the initial position. With `shared_tree` both sides
/// search in one tree (self-play); otherwise each side keeps its own.
/// `record` sees every searched position before its move is played.
pub fn play_game<R: Rng + ?Sized>(
    white: &Player,
    black: &Player,
    shared_tree: bool,
    adj: &AdjudicationConfig,
    mut oracle: Option<&mut Oracle>,
    rng: &mut R,
    mut record: impl FnMut(&Board, &SearchResult),
) -> Result<PlayedGame, PipelineError> {
    let mut board = Board::startpos();
    let mut trees: [Option<SearchNode>; 2] = [None, None];
    let mut moves = Vec::new();
    let mut adjudication_cp = None;
    let outcome = loop {
        let outcome = board.outcome();
        if !outcome.is_ongoing() {
            break outcome;
        }
        if moves.len() as u32 >= adj.max_plies {
            break GameOutcome::finished(OutcomeKind::Draw, OutcomeReason::PlyCap);
        }
        let side = board.side_to_move();
        let slot = if shared_tree { 0 } else { side.index() };
        let player = if side == Color::White { white } else { black };
        let mv = match player {
            Player::Mcts { net, search } => {
                let (res, node) = run_mcts(&board, *net, search, trees[slot].take(), rng)?;
                record(&board, &res);
                trees[slot] = Some(advance_root(node, res.chosen_move)?);
                res.chosen_move
            }
            Player::Random => *board.legal_moves().choose(rng).expect("ongoing position has moves"),
        };
        if !shared_tree {
            let other = 1 - slot;
            trees[other] = trees[other].take().and_then(|t| advance_root(t, mv).ok());
        }
        board = board.apply_move(mv)?;
        moves.push(mv);

        if adj.enabled && moves.len() as u32 >= adj.start_ply && board.outcome().is_ongoing() {
            if let Some(o) = oracle.as_deref_mut() {
                let cp = o.evaluate(&board)?.centipawns();
                if cp.abs() >= adj.threshold_cp {
                    adjudication_cp = Some(cp);
                    let kind = if cp > 0 {
                        OutcomeKind::BlackResigned
                    } else {
                        OutcomeKind::WhiteResigned
                    };
                    break GameOutcome::finished(kind, OutcomeReason::Adjudicated);
                }
            }
        }
    };
    Ok(PlayedGame {
        moves,
        outcome,
        adjudication_cp,
    })
}

#[derive(Clone, Debug)]
pub struct GameRecord {
    pub triplets: Vec<TrainingTriplet>,
    pub moves: Vec<Move>,
    pub outcome: GameOutcome,
    pub termination_ply: usize,
    pub adjudicated: bool,
    pub adjudication_cp: Option<i32>,
}

/// White-centric game value used to backfill `z`.
fn white_value(game: &PlayedGame) -> f64 {
    match (game.adjudication_cp, game.outcome.winner()) {
        (Some(cp), _) => normalize_cp(cp as f64),
        (None, Some(Color::White)) => 1.0,
        (None, Some(Color::Black)) => -1.0,
        (None, None) => 0.0,
    }
}

/// One self-play game. Each position yields a triplet whose policy target is
/// the normalised root visit counts and whose `z` is the final result from
/// that position's side to move.
pub fn generate_game<R: Rng + ?Sized>(
    net: &(dyn Evaluator + Sync),
    cfg: &GenerationConfig,
    oracle: &mut Oracle,
    rng: &mut R,
) -> Result<GameRecord, PipelineError> {
    oracle.new_game()?;
    let player = Player::Mcts { net, search: cfg.search };
    let mut pending: Vec<(TrainingTriplet, Color)> = Vec::new();
    let mut failure = None;
    let game = play_game(&player, &player, true, &cfg.adjudication, Some(oracle), rng, |board, res| {
        match visit_policy(&res.visit_counts, Temperature::Value(1.0)) {
            Ok(policy) => pending.push((
                TrainingTriplet {
                    features: Box::new(extract_features(board)),
                    mask: LegalMask::for_board(board),
                    policy,
                    z: 0.0,
                },
                board.side_to_move(),
            )),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let zw = white_value(&game);
    let triplets = pending
        .into_iter()
        .map(|(mut t, side)| {
            t.z = zw * f64::from(side.sign());
            t
        })
        .collect();
    Ok(GameRecord {
        triplets,
        termination_ply: game.plies(),
        adjudicated: game.adjudication_cp.is_some(),
        adjudication_cp: game.adjudication_cp,
        outcome: game.outcome,
        moves: game.moves,
    })
}

/// `count` self-play games in parallel; game `i` is seeded from `(cfg.seed, stream, i)`
/// so results do not depend on the number of worker threads.
pub fn generate_games(
    net: &(dyn Evaluator + Sync),
    cfg: &GenerationConfig,
    oracle_cfg: &OracleConfig,
    count: usize,
    stream: u64,
) -> Result<Vec<GameRecord>, PipelineError> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut oracle = connect(oracle_cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, stream, i as u64));
            generate_game(net, cfg, &mut oracle, &mut rng)
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchResult {
    pub games: usize,
    pub a_wins: usize,
    pub b_wins: usize,
    pub draws: usize,
    pub total_plies: usize,
    /// Per game: whether A had White, and how the game ended.
    pub outcomes: Vec<(bool, GameOutcome)>,
}

impl MatchResult {
    /// `(wins + draws / 2) / games` for player A.
    pub fn score_a(&self) -> f64 {
        (self.a_wins as f64 + 0.5 * self.draws as f64) / self.games as f64
    }
}

/// Plays `games` games between A and B with alternating colours (A is White in even games).
pub fn play_match(
    a: &Player,
    b: &Player,
    games: usize,
    adj: &AdjudicationConfig,
    oracle_cfg: Option<&OracleConfig>,
    seed: u64,
) -> Result<MatchResult, PipelineError> {
    let played: Vec<(bool, PlayedGame)> = (0..games)
        .into_par_iter()
        .map(|i| {
            let mut oracle = match oracle_cfg {
                Some(cfg) if adj.enabled => Some(connect(cfg)?),
                _ => None,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2, i as u64));
            let a_white = i % 2 == 0;
            let (w, bl) = if a_white { (a, b) } else { (b, a) };
            let g = play_game(w, bl, false, adj, oracle.as_mut(), &mut rng, |_, _| {})?;
            Ok((a_white, g))
        })
        .collect::<Result<_, PipelineError>>()?;
    let mut r = MatchResult {
        games,
        ..MatchResult::default()
    };
    for (a_white, g) in played {
        r.total_plies += g.plies();
        match g.outcome.winner() {
            None => r.draws += 1,
            Some(c) if (c == Color::White) == a_white => r.a_wins += 1,
            Some(_) => r.b_wins += 1,
        }
        r.outcomes.push((a_white, g.outcome));
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateResult {
    pub games: usize,
    pub new_wins: usize,
    pub old_wins: usize,
    pub draws: usize,
    pub accepted: bool,
}

impl GateResult {
    /// Accepted when the new network wins more than half of the decisive games.
    pub fn from_counts(new_wins: usize, old_wins: usize, draws: usize) -> GateResult {
        GateResult {
            games: new_wins + old_wins + draws,
            new_wins,
            old_wins,
            draws,
            accepted: new_wins > old_wins,
        }
    }
}

/// Plays `games` games between two networks with alternating colours and
/// argmax move selection; root noise is kept for variety.
pub fn gate(
    new: &(dyn Evaluator + Sync),
    old: &(dyn Evaluator + Sync),
    games: usize,
    search: &SearchConfig,
    adj: &AdjudicationConfig,
    oracle_cfg: &OracleConfig,
    seed: u64,
) -> Result<GateResult, PipelineError> {
    if games < 2 || games % 2 != 0 {
        return Err(PipelineError::GateGames(games));
    }
    let search = SearchConfig {
        temperature: TemperatureSchedule::constant(Temperature::Argmax),
        ..*search
    };
    let a = Player::Mcts { net: new, search };
    let b = Player::Mcts { net: old, search };
    let m = play_match(&a, &b, games, adj, Some(oracle_cfg), seed)?;
    Ok(GateResult::from_counts(m.a_wins, m.b_wins, m.draws))
}

/// PGN text for a game played from the initial position.
pub fn record_to_pgn(moves: &[Move], outcome: &GameOutcome, tags: &[(String, String)]) -> String {
    let mut tags = tags.to_vec();
    if let Some(reason) = outcome.reason {
        tags.push(("Termination".into(), format!("{reason:?}")));
    }
    tags.push(("Result".into(), outcome.pgn_result().into()));
    write_pgn(&tags, &Board::startpos(), moves, outcome.pgn_result())
}
