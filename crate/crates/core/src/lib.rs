//! Self-play chess engine core: rules, feature encoding, policy/value
//! networks, PUCT search, position oracle and the training pipeline.

pub mod chess;
pub mod features;
pub mod net;
pub mod oracle;
pub mod pipeline;
pub mod search;
