use std::collections::HashSet;
use std::fs;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{train_epoch, EpochStats, PipelineError, TrainConfig, TrainingTriplet};
use crate::chess::{parse_pgn, Board, PgnGame};
use crate::features::{encode_move, extract_features, LegalMask, MoveIndex};
use crate::net::{AdamState, NetworkParams};
use crate::oracle::{normalize_cp, Oracle, OracleError, MATE_CP};

/// Approximate policy and value labels for `board` from oracle scores.
///
/// Each child is scored from the mover's point of view in pawns and the
/// scores are softmaxed. A child that is checkmate scores `MATE_CP`, a drawn
/// child scores 0. The value is the normalised score of `board` itself for
/// its side to move.
pub fn pretrain_label(board: &Board, oracle: &mut Oracle) -> Result<(Vec<(MoveIndex, f64)>, f64), OracleError> {
    let mover = board.side_to_move();
    let mut scored = Vec::new();
    for mv in board.legal_moves() {
        let child = board.apply_move(mv).expect("legal move applies");
        let outcome = child.outcome();
        let cp = if outcome.is_ongoing() {
            oracle.evaluate(&child)?.centipawns_for(mover)
        } else if outcome.winner() == Some(mover) {
            MATE_CP
        } else {
            0
        };
        scored.push((encode_move(&mv).expect("legal moves are encodable"), cp));
    }
    let probs = softmax_pawns(&scored.iter().map(|s| s.1).collect::<Vec<_>>());
    let policy = scored.into_iter().map(|s| s.0).zip(probs).collect();
    let value = normalize_cp(f64::from(oracle.evaluate(board)?.centipawns_for(mover)));
    Ok((policy, value))
}

/// Softmax over centipawn scores expressed in pawns.
fn softmax_pawns(cp: &[i32]) -> Vec<f64> {
    let pawns: Vec<f64> = cp.iter().map(|&c| f64::from(c) / 100.0).collect();
    let max = pawns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = pawns.iter().map(|s| (s - max).exp()).sum();
    pawns.iter().map(|s| (s - max).exp() / total).collect()
}

/// Reads and parses PGN files; a missing file is reported as such.
pub fn load_corpus(paths: &[PathBuf]) -> Result<Vec<PgnGame>, PipelineError> {
    let mut games = Vec::new();
    for p in paths {
        if !p.is_file() {
            return Err(PipelineError::CorpusNotFound(p.clone()));
        }
        games.extend(parse_pgn(&fs::read_to_string(p)?)?);
    }
    Ok(games)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub train: TrainConfig,
    /// Stop collecting after this many distinct positions.
    pub max_positions: Option<usize>,
    pub seed: u64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            epochs: 5,
            train: TrainConfig::default(),
            max_positions: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PretrainReport {
    pub positions: usize,
    pub skipped: usize,
    pub epochs: Vec<EpochStats>,
}

/// Labels every distinct non-terminal position of the corpus with the oracle
/// and trains `params` on the labels for `cfg.epochs` epochs.
pub fn pretrain(
    games: &[PgnGame],
    params: &mut NetworkParams,
    oracle: &mut Oracle,
    cfg: &PretrainConfig,
) -> Result<PretrainReport, PipelineError> {
    let mut seen = HashSet::new();
    let mut buffer = Vec::new();
    let mut skipped = 0;
    'games: for game in games {
        for board in &game.positions {
            if cfg.max_positions.is_some_and(|m| buffer.len() >= m) {
                break 'games;
            }
            if !board.outcome().is_ongoing() || !seen.insert(board.key()) {
                continue;
            }
            match pretrain_label(board, oracle) {
                Ok((policy, z)) => buffer.push(TrainingTriplet {
                    features: Box::new(extract_features(board)),
                    mask: LegalMask::for_board(board),
                    policy,
                    z,
                }),
                Err(e) => {
                    log::warn!("skipping {}: {e}", board.to_fen());
                    skipped += 1;
                }
            }
        }
    }
    if buffer.is_empty() {
        return Err(PipelineError::EmptyCorpus);
    }
    log::info!("pretraining on {} positions", buffer.len());
    let mut adam = AdamState::new(params, cfg.train.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for e in 0..cfg.epochs {
        let stats = train_epoch(&buffer, params, &mut adam, cfg.train.batch_size, &mut rng)?;
        log::info!("pretrain epoch {}: mean J {:.4}", e + 1, stats.mean.total);
        epochs.push(stats);
    }
    Ok(PretrainReport {
        positions: buffer.len(),
        skipped,
        epochs,
    })
}
