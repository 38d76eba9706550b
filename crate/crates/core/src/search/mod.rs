//! PUCT Monte Carlo tree search and a plain UCT reference for toy trees.

mod mcts;
mod uct;

pub use mcts::{
    advance_root, puct_score, run_mcts, search, select_child, visit_policy, Edge, EdgeStats, Evaluator,
    SearchNode, SearchResult, UniformEvaluator,
};
pub use uct::{uct_reference, Reward, ToyTree, UctResult};

use thiserror::Error;

use crate::chess::Move;
use crate::net::NetError;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("cannot search from a finished position")]
    TerminalRoot,
    #[error("node has no legal edges to select")]
    NoEdges,
    #[error("visit counts are all zero")]
    ZeroCounts,
    #[error("move {0} is not legal at the root")]
    IllegalMove(Move),
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("simulations must be at least 1")]
    NoSimulations,
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Exponent applied to visit counts when turning them into a policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Temperature {
    Value(f64),
    /// One-hot on the most visited move.
    Argmax,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TemperatureSchedule {
    pub opening: Temperature,
    pub opening_plies: u32,
    pub after: Temperature,
}

impl TemperatureSchedule {
    pub fn constant(t: Temperature) -> TemperatureSchedule {
        TemperatureSchedule {
            opening: t,
            opening_plies: 0,
            after: t,
        }
    }

    pub fn at_ply(&self, ply: u32) -> Temperature {
        if ply < self.opening_plies {
            self.opening
        } else {
            self.after
        }
    }
}

impl Default for TemperatureSchedule {
    fn default() -> Self {
        TemperatureSchedule {
            opening: Temperature::Value(1.0),
            opening_plies: 20,
            after: Temperature::Argmax,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    pub simulations: u32,
    pub c_puct: f64,
    pub dirichlet_alpha: f64,
    /// Weight of the root noise; 0 disables it.
    pub dirichlet_epsilon: f64,
    pub temperature: TemperatureSchedule,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            simulations: 800,
            c_puct: 1.5,
            dirichlet_alpha: 0.3,
            dirichlet_epsilon: 0.25,
            temperature: TemperatureSchedule::default(),
            seed: 0,
        }
    }
}
