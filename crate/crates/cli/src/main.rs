mod config;
mod uci;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use pepper_core::chess::{Board, ChessError, START_FEN};
use pepper_core::net::{load_weights, save_weights, Architecture, NetError, NetworkParams};
use pepper_core::oracle::{connect, OracleError};
use pepper_core::pipeline::{
    gate, latest_checkpoint, load_corpus, play_match, pretrain, run_training, PipelineError, Player, StartMode,
};
use pepper_core::search::{Temperature, TemperatureSchedule};
use thiserror::Error;

use crate::config::{ConfigError, Overrides, RunConfig};

const ENGINE_ENV: &str = "PEPPER_ENGINE";

#[derive(Parser, Debug)]
#[command(name = "pepper", version, about = "Self-play chess engine: training, evaluation and tools")]
struct Cli {
    /// TOML file with [search], [net], [pipeline] and [oracle] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all logical cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// UCI engine used as oracle; falls back to $PEPPER_ENGINE.
    #[arg(long, global = true)]
    engine: Option<PathBuf>,
    /// MCTS simulations per move.
    #[arg(long, global = true)]
    sims: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Supervised pretraining on oracle-labelled PGN positions.
    Pretrain {
        /// PGN files forming the corpus.
        #[arg(long = "pgn", required = true, num_args = 1..)]
        pgn: Vec<PathBuf>,
        /// Output weights file.
        #[arg(long)]
        out: PathBuf,
        /// Start from these weights instead of a seeded initialisation.
        #[arg(long)]
        init: Option<PathBuf>,
        /// Overrides pipeline.pretrain_epochs.
        #[arg(long)]
        epochs: Option<usize>,
        /// Per-epoch metrics (default: metrics.csv next to the weights).
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Self-play training with gating and checkpoints.
    Train {
        /// Run directory for checkpoints/, metrics.csv and games/.
        #[arg(long)]
        out: PathBuf,
        /// Initial weights for a fresh run.
        #[arg(long, conflicts_with = "resume")]
        weights: Option<PathBuf>,
        /// Overrides pipeline.iterations.
        #[arg(long)]
        iterations: Option<usize>,
        /// Start over even if checkpoints exist.
        #[arg(long, conflicts_with = "resume")]
        fresh: bool,
        /// Continue after the latest checkpoint.
        #[arg(long)]
        resume: bool,
    },
    /// Match between two weight files, or weights against a random mover.
    Eval {
        a: PathBuf,
        /// Weights file, or `random`.
        b: String,
        #[arg(long, default_value_t = 25)]
        games: usize,
        /// Also write the result table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gate a candidate network against the incumbent.
    Gate {
        new: PathBuf,
        old: PathBuf,
        /// Overrides pipeline.gate_games.
        #[arg(long)]
        games: Option<usize>,
    },
    /// Count leaf nodes of the legal move tree.
    Perft {
        depth: u32,
        #[arg(long, default_value = START_FEN)]
        fen: String,
    },
    /// Serve UCI on standard input and output.
    Uci {
        /// Weights to play with (default: seeded initialisation).
        #[arg(long)]
        weights: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path} holds {found} weights but the config asks for {expected}")]
    ArchitectureMismatch {
        path: PathBuf,
        found: Architecture,
        expected: Architecture,
    },
    #[error("cannot load weights {path}: {source}")]
    Weights {
        path: PathBuf,
        #[source]
        source: NetError,
    },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Chess(#[from] ChessError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Config(_)
            | CliError::ArchitectureMismatch { .. }
            | CliError::Chess(ChessError::Fen { .. })
            | CliError::Pipeline(
                PipelineError::CorpusNotFound(_) | PipelineError::GateGames(_) | PipelineError::Config(_),
            ) => 2,
            _ => 1,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        seed: cli.seed,
        workers: cli.workers,
        engine: cli.engine.clone(),
        sims: cli.sims,
    };
    cfg.apply(&overrides, std::env::var_os(ENGINE_ENV).map(PathBuf::from));
    cfg.validate()?;
    Ok(cfg)
}

fn load_net(path: &Path, arch: Architecture) -> Result<NetworkParams, CliError> {
    let p = load_weights(path).map_err(|source| CliError::Weights {
        path: path.to_path_buf(),
        source,
    })?;
    if p.architecture() != arch {
        return Err(CliError::ArchitectureMismatch {
            path: path.to_path_buf(),
            found: p.architecture(),
            expected: arch,
        });
    }
    Ok(p)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli)?;
    if let Some(n) = cfg.pipeline.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("worker pool already initialised: {e}");
        }
    }
    let arch = cfg.architecture();
    match cli.command {
        Command::Pretrain {
            pgn,
            out,
            init,
            epochs,
            metrics,
        } => {
            let games = load_corpus(&pgn)?;
            let mut params = match &init {
                Some(p) => load_net(p, arch)?,
                None => NetworkParams::init(arch, cfg.pipeline.seed),
            };
            let mut pcfg = cfg.pretrain_config();
            if let Some(e) = epochs {
                pcfg.epochs = e;
            }
            let mut oracle = connect(&cfg.oracle_config())?;
            let report = pretrain(&games, &mut params, &mut oracle, &pcfg)?;
            save_weights(&params, &out)?;
            let metrics =
                metrics.unwrap_or_else(|| out.parent().unwrap_or(Path::new("")).join("metrics.csv"));
            let mut csv = String::from("epoch,positions,mean_J,mse,ce\n");
            for (i, e) in report.epochs.iter().enumerate() {
                csv += &format!(
                    "{},{},{:.6},{:.6},{:.6}\n",
                    i + 1,
                    report.positions,
                    e.mean.total,
                    e.mean.mse,
                    e.mean.ce
                );
            }
            fs::write(&metrics, csv)?;
            println!(
                "pretrained on {} positions ({} skipped); weights {}, metrics {}",
                report.positions,
                report.skipped,
                out.display(),
                metrics.display()
            );
        }
        Command::Train {
            out,
            weights,
            iterations,
            fresh,
            resume,
        } => {
            let mut pcfg = cfg.pipeline_config();
            if let Some(n) = iterations {
                pcfg.iterations = n;
            }
            let init = weights.as_deref().map(|p| load_net(p, arch)).transpose()?;
            let start = if resume || (!fresh && init.is_none() && latest_checkpoint(&out)?.is_some()) {
                StartMode::Resume
            } else {
                StartMode::Fresh(init)
            };
            let rows = run_training(&pcfg, &out, start)?;
            let accepted = rows.iter().filter(|r| r.gate.accepted).count();
            println!(
                "ran {} iterations ({accepted} accepted); metrics in {}",
                rows.len(),
                out.join("metrics.csv").display()
            );
        }
        Command::Eval { a, b, games, out } => {
            if games == 0 {
                return Err(CliError::Usage("--games must be at least 1".into()));
            }
            let net_a = load_net(&a, arch)?;
            let net_b = if b == "random" {
                None
            } else {
                Some(load_net(Path::new(&b), arch)?)
            };
            // Evaluation measures strength: most-visited move, no root noise.
            let search = pepper_core::search::SearchConfig {
                dirichlet_epsilon: 0.0,
                temperature: TemperatureSchedule::constant(Temperature::Argmax),
                ..cfg.search_config()
            };
            let pa = Player::Mcts { net: &net_a, search };
            let pb = match &net_b {
                Some(n) => Player::Mcts { net: n, search },
                None => Player::Random,
            };
            let r = play_match(
                &pa,
                &pb,
                games,
                &cfg.adjudication(),
                Some(&cfg.oracle_config()),
                cfg.pipeline.seed,
            )?;
            let row = format!(
                "{},{},{},{},{},{},{:.4}",
                a.display(),
                b,
                r.games,
                r.a_wins,
                r.draws,
                r.b_wins,
                r.score_a()
            );
            println!("{:<10} {:>6} {:>6} {:>6} {:>8}", "player", "wins", "draws", "losses", "score");
            println!("{:<10} {:>6} {:>6} {:>6} {:>8.4}", "A", r.a_wins, r.draws, r.b_wins, r.score_a());
            println!("{:<10} {:>6} {:>6} {:>6} {:>8.4}", "B", r.b_wins, r.draws, r.a_wins, 1.0 - r.score_a());
            if let Some(path) = out {
                fs::write(path, format!("a,b,games,a_wins,draws,a_losses,a_score\n{row}\n"))?;
            }
        }
        Command::Gate { new, old, games } => {
            let n = load_net(&new, arch)?;
            let o = load_net(&old, arch)?;
            let games = games.unwrap_or(cfg.pipeline.gate_games);
            let g = gate(
                &n,
                &o,
                games,
                &cfg.search_config(),
                &cfg.adjudication(),
                &cfg.oracle_config(),
                cfg.pipeline.seed,
            )?;
            println!(
                "new {} old {} draws {}: {}",
                g.new_wins,
                g.old_wins,
                g.draws,
                if g.accepted { "accepted" } else { "rejected" }
            );
        }
        Command::Perft { depth, fen } => {
            let board = Board::from_fen(&fen)?;
            let t = Instant::now();
            let nodes = board.perft(depth);
            let secs = t.elapsed().as_secs_f64();
            println!("perft({depth}) = {nodes}");
            println!("time {secs:.3} s, {:.0} nodes/s", nodes as f64 / secs.max(1e-9));
        }
        Command::Uci { weights } => {
            let net = match &weights {
                Some(p) => load_net(p, arch)?,
                None => NetworkParams::init(arch, cfg.pipeline.seed),
            };
            let stdin = io::stdin();
            let stdout = io::stdout();
            uci::serve(stdin.lock(), stdout.lock(), &net, &cfg.search_config())?;
            io::stdout().flush()?;
        }
    }
    Ok(())
}
