use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    derive_seed, gate, generate_games, record_to_pgn, train_epoch, GateResult, GenerationConfig, PipelineError,
    TrainConfig, TrainingTriplet,
};
use crate::net::{load_weights_as, save_weights, AdamState, Architecture, LossBreakdown, NetworkParams};
use crate::oracle::OracleConfig;

pub const METRICS_HEADER: &str =
    "iter,games,mean_J,mse,ce,gate_new_wins,gate_old_wins,gate_draws,accepted,mean_game_plies";

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub arch: Architecture,
    /// Last iteration number to run.
    pub iterations: usize,
    pub generation: GenerationConfig,
    pub train: TrainConfig,
    /// Games per gate; 0 accepts every candidate without playing.
    pub gate_games: usize,
    /// Keep earlier data in the buffer even after an accepted gate.
    pub retain_buffer: bool,
    pub max_buffer: usize,
    pub export_pgn: bool,
    pub oracle: OracleConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            arch: Architecture::PolicyValParts,
            iterations: 10,
            generation: GenerationConfig::default(),
            train: TrainConfig::default(),
            gate_games: 10,
            retain_buffer: false,
            max_buffer: 200_000,
            export_pgn: false,
            oracle: OracleConfig::default(),
            seed: 0,
        }
    }
}

pub enum StartMode {
    /// Start at iteration 1 from the given weights or a seeded initialisation.
    Fresh(Option<NetworkParams>),
    /// Continue after the newest checkpoint in the output directory.
    Resume,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationMetrics {
    pub iter: usize,
    pub games: usize,
    pub loss: LossBreakdown,
    pub gate: GateResult,
    pub mean_game_plies: f64,
}

impl IterationMetrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{},{},{},{},{:.2}",
            self.iter,
            self.games,
            self.loss.total,
            self.loss.mse,
            self.loss.ce,
            self.gate.new_wins,
            self.gate.old_wins,
            self.gate.draws,
            self.gate.accepted,
            self.mean_game_plies
        )
    }
}

fn checkpoint_path(out: &Path, iter: usize) -> PathBuf {
    out.join("checkpoints").join(format!("iter_{iter}.weights"))
}

/// Highest-numbered `iter_<n>.weights` under `out/checkpoints`.
pub fn latest_checkpoint(out: &Path) -> Result<Option<(usize, PathBuf)>, PipelineError> {
    let dir = out.join("checkpoints");
    if !dir.is_dir() {
        return Ok(None);
    }
    let mut best: Option<(usize, PathBuf)> = None;
    for entry in fs::read_dir(&dir)? {
        let path = entry?.path();
        let n = path
            .file_name()
            .and_then(|f| f.to_str())
            .and_then(|f| f.strip_prefix("iter_"))
            .and_then(|f| f.strip_suffix(".weights"))
            .and_then(|n| n.parse::<usize>().ok());
        if let Some(n) = n {
            if best.as_ref().map_or(true, |b| n > b.0) {
                best = Some((n, path));
            }
        }
    }
    Ok(best)
}

fn append_metrics(out: &Path, row: &IterationMetrics) -> Result<(), PipelineError> {
    let path = out.join("metrics.csv");
    let fresh = !path.exists();
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "{METRICS_HEADER}")?;
    }
    writeln!(f, "{}", row.csv_row())?;
    Ok(())
}

/// Generate, train, gate, checkpoint; once per iteration up to `cfg.iterations`.
/// Each iteration's randomness derives from `(cfg.seed, iteration)` only, so
/// a resumed run replays the same streams.
pub fn run_training(cfg: &PipelineConfig, out: &Path, start: StartMode) -> Result<Vec<IterationMetrics>, PipelineError> {
    fs::create_dir_all(out.join("checkpoints"))?;
    let (mut params, first) = match start {
        StartMode::Fresh(init) => {
            let metrics = out.join("metrics.csv");
            if metrics.exists() {
                fs::remove_file(metrics)?;
            }
            let p = init.unwrap_or_else(|| NetworkParams::init(cfg.arch, cfg.seed));
            if p.architecture() != cfg.arch {
                return Err(PipelineError::Config(format!(
                    "initial weights are {}, config asks for {}",
                    p.architecture(),
                    cfg.arch
                )));
            }
            (p, 1)
        }
        StartMode::Resume => {
            let (n, path) = latest_checkpoint(out)?
                .ok_or_else(|| PipelineError::Config(format!("no checkpoint to resume in {}", out.display())))?;
            let p = load_weights_as(&path, cfg.arch)
                .map_err(|source| PipelineError::CorruptCheckpoint { path: path.clone(), source })?;
            log::info!("resuming after iteration {n}");
            (p, n + 1)
        }
    };
    if cfg.export_pgn {
        fs::create_dir_all(out.join("games"))?;
    }

    let mut carry: Vec<TrainingTriplet> = Vec::new();
    let mut all = Vec::new();
    for iter in first..=cfg.iterations {
        let it = iter as u64;
        let gen = GenerationConfig {
            seed: derive_seed(cfg.seed, 10, it),
            ..cfg.generation
        };
        let records = match generate_games(&params, &gen, &cfg.oracle, gen.games_per_epoch, 0) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("iteration {iter} skipped: game generation failed: {e}");
                continue;
            }
        };
        let plies: usize = records.iter().map(|r| r.termination_ply).sum();
        let mean_game_plies = plies as f64 / records.len().max(1) as f64;
        if cfg.export_pgn {
            let text: String = records
                .iter()
                .enumerate()
                .map(|(g, r)| {
                    let tags = [
                        ("Event".to_string(), format!("selfplay iter {iter}")),
                        ("Round".to_string(), (g + 1).to_string()),
                    ];
                    record_to_pgn(&r.moves, &r.outcome, &tags)
                })
                .collect();
            fs::write(out.join("games").join(format!("iter_{iter}.pgn")), text)?;
        }

        let mut buffer = std::mem::take(&mut carry);
        buffer.extend(records.into_iter().flat_map(|r| r.triplets));
        if buffer.len() > cfg.max_buffer {
            buffer.drain(..buffer.len() - cfg.max_buffer);
        }

        let mut candidate = params.clone();
        let mut adam = AdamState::new(&candidate, cfg.train.adam);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 11, it));
        let mut sum = LossBreakdown::default();
        let mut trained = Ok(());
        for _ in 0..cfg.train.epochs.max(1) {
            match train_epoch(&buffer, &mut candidate, &mut adam, cfg.train.batch_size, &mut rng) {
                Ok(s) => {
                    sum.total += s.mean.total;
                    sum.mse += s.mean.mse;
                    sum.ce += s.mean.ce;
                    sum.l2 += s.mean.l2;
                }
                Err(e) => {
                    trained = Err(e);
                    break;
                }
            }
        }
        if let Err(e) = trained {
            log::warn!("iteration {iter} skipped: training failed: {e}");
            carry = buffer;
            continue;
        }
        let k = cfg.train.epochs.max(1) as f64;
        let loss = LossBreakdown {
            total: sum.total / k,
            mse: sum.mse / k,
            ce: sum.ce / k,
            l2: sum.l2 / k,
        };

        let gate_result = if cfg.gate_games == 0 {
            GateResult::from_counts(0, 0, 0)
        } else {
            match gate(
                &candidate,
                &params,
                cfg.gate_games,
                &gen.search,
                &gen.adjudication,
                &cfg.oracle,
                derive_seed(cfg.seed, 12, it),
            ) {
                Ok(g) => g,
                Err(e) => {
                    log::warn!("iteration {iter} skipped: gating failed: {e}");
                    carry = buffer;
                    continue;
                }
            }
        };
        let accepted = cfg.gate_games == 0 || gate_result.accepted;
        if accepted {
            params = candidate;
        }
        if !accepted || cfg.retain_buffer {
            carry = buffer;
        }
        save_weights(&params, checkpoint_path(out, iter))?;
        let row = IterationMetrics {
            iter,
            games: gen.games_per_epoch,
            loss,
            gate: GateResult { accepted, ..gate_result },
            mean_game_plies,
        };
        append_metrics(out, &row)?;
        log::info!("{}", row.csv_row());
        all.push(row);
    }
    Ok(all)
}
