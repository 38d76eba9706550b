//! Self-play training loop: game generation with adjudication, training on
//! recorded triplets, gating, and supervised pretraining from PGN.

mod play;
mod pretrain;
mod run;
mod train;

pub use play::{
    gate, generate_game, generate_games, play_game, play_match, record_to_pgn, GameRecord, GateResult,
    MatchResult, PlayedGame, Player,
};
pub use pretrain::{load_corpus, pretrain, pretrain_label, PretrainConfig, PretrainReport};
pub use run::{latest_checkpoint, run_training, IterationMetrics, PipelineConfig, StartMode, METRICS_HEADER};
pub use train::{train_epoch, EpochStats, TrainConfig};

use std::path::PathBuf;

use thiserror::Error;

use crate::chess::ChessError;
use crate::features::{FeatureVector, LegalMask, MoveIndex};
use crate::net::NetError;
use crate::oracle::OracleError;
use crate::search::{SearchConfig, SearchError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Chess(#[from] ChessError),
    #[error("training buffer is empty")]
    EmptyBuffer,
    #[error("corpus has no usable positions")]
    EmptyCorpus,
    #[error("corpus not found: {0}")]
    CorpusNotFound(PathBuf),
    #[error("non-finite loss in batch {batch}; parameters restored")]
    NonFiniteLoss { batch: usize },
    #[error("gating needs an even number of games, at least 2 (got {0})")]
    GateGames(usize),
    #[error("corrupted checkpoint {path}: {source}")]
    CorruptCheckpoint {
        path: PathBuf,
        #[source]
        source: NetError,
    },
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One training example. `z` is from the perspective of the side to move.
#[derive(Clone, Debug)]
pub struct TrainingTriplet {
    pub features: Box<FeatureVector>,
    pub mask: LegalMask,
    pub policy: Vec<(MoveIndex, f64)>,
    pub z: f64,
}

/// Early-resignation and length limits shared by every kind of game.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjudicationConfig {
    /// First ply after which the oracle is consulted.
    pub start_ply: u32,
    pub threshold_cp: i32,
    pub max_plies: u32,
    /// Disables oracle adjudication; length capping still applies.
    pub enabled: bool,
}

impl Default for AdjudicationConfig {
    fn default() -> Self {
        AdjudicationConfig {
            start_ply: 80,
            threshold_cp: 600,
            max_plies: 512,
            enabled: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenerationConfig {
    pub adjudication: AdjudicationConfig,
    pub games_per_epoch: usize,
    pub search: SearchConfig,
    pub seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            adjudication: AdjudicationConfig::default(),
            games_per_epoch: 25,
            search: SearchConfig::default(),
            seed: 0,
        }
    }
}

/// Independent stream seed for `(stream, index)` under `base`.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(base) ^ stream) ^ index)
}
