//! TOML run configuration. Every section and key is optional; missing keys
//! take the library defaults and unknown keys are rejected.

use std::path::{Path, PathBuf};

use pepper_core::net::{AdamConfig, Architecture};
use pepper_core::oracle::{OracleConfig, SearchLimit};
use pepper_core::pipeline::{
    AdjudicationConfig, GenerationConfig, PipelineConfig, PretrainConfig, TrainConfig,
};
use pepper_core::search::{SearchConfig, Temperature, TemperatureSchedule};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("config key `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub search: SearchSection,
    pub net: NetSection,
    pub pipeline: PipelineSection,
    pub oracle: OracleSection,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub simulations: u32,
    pub c_puct: f64,
    pub dirichlet_alpha: f64,
    pub dirichlet_epsilon: f64,
    /// Opening temperature for self-play; 0 plays the most-visited move throughout.
    pub temperature: f64,
    /// Plies played at `temperature` before switching to the most-visited move.
    pub temperature_plies: u32,
}

impl Default for SearchSection {
    fn default() -> Self {
        let d = SearchConfig::default();
        let temperature = match d.temperature.opening {
            Temperature::Value(t) => t,
            Temperature::Argmax => 0.0,
        };
        SearchSection {
            simulations: d.simulations,
            c_puct: d.c_puct,
            dirichlet_alpha: d.dirichlet_alpha,
            dirichlet_epsilon: d.dirichlet_epsilon,
            temperature,
            temperature_plies: d.temperature.opening_plies,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NetSection {
    pub architecture: String,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub l2: f64,
    pub batch_size: usize,
    /// Passes over the replay buffer per iteration.
    pub epochs: usize,
}

impl Default for NetSection {
    fn default() -> Self {
        let a = AdamConfig::default();
        let t = TrainConfig::default();
        NetSection {
            architecture: PipelineConfig::default().arch.name().to_string(),
            learning_rate: a.learning_rate,
            beta1: a.beta1,
            beta2: a.beta2,
            epsilon: a.epsilon,
            l2: a.l2,
            batch_size: t.batch_size,
            epochs: t.epochs,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineSection {
    pub seed: u64,
    /// Worker threads; unset uses every logical core.
    pub workers: Option<usize>,
    pub iterations: usize,
    pub games_per_epoch: usize,
    /// Even number of gate games; 0 accepts every candidate.
    pub gate_games: usize,
    pub retain_buffer: bool,
    pub max_buffer: usize,
    pub export_pgn: bool,
    pub adjudication: bool,
    pub adjudication_start_ply: u32,
    pub adjudication_threshold_cp: i32,
    pub max_plies: u32,
    pub pretrain_epochs: usize,
    pub max_positions: Option<usize>,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        let adj = AdjudicationConfig::default();
        PipelineSection {
            seed: p.seed,
            workers: None,
            iterations: p.iterations,
            games_per_epoch: p.generation.games_per_epoch,
            gate_games: p.gate_games,
            retain_buffer: p.retain_buffer,
            max_buffer: p.max_buffer,
            export_pgn: p.export_pgn,
            adjudication: adj.enabled,
            adjudication_start_ply: adj.start_ply,
            adjudication_threshold_cp: adj.threshold_cp,
            max_plies: adj.max_plies,
            pretrain_epochs: PretrainConfig::default().epochs,
            max_positions: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub engine: Option<PathBuf>,
    pub depth: Option<u32>,
    pub movetime_ms: Option<u32>,
    /// Use the material heuristic when no engine is available.
    pub fallback: bool,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            engine: None,
            depth: None,
            movetime_ms: None,
            fallback: OracleConfig::default().fallback_allowed,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub engine: Option<PathBuf>,
    pub sims: Option<u32>,
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<RunConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        RunConfig::parse(&text, path)
    }

    /// Applies flags, then the engine environment variable if no engine is set anywhere.
    pub fn apply(&mut self, o: &Overrides, env_engine: Option<PathBuf>) {
        if let Some(s) = o.seed {
            self.pipeline.seed = s;
        }
        if let Some(w) = o.workers {
            self.pipeline.workers = Some(w);
        }
        if let Some(n) = o.sims {
            self.search.simulations = n;
        }
        if let Some(e) = &o.engine {
            self.oracle.engine = Some(e.clone());
        } else if self.oracle.engine.is_none() {
            self.oracle.engine = env_engine;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.search;
        if s.simulations == 0 {
            return Err(invalid("search.simulations", "must be at least 1"));
        }
        if !(s.c_puct.is_finite() && s.c_puct > 0.0) {
            return Err(invalid("search.c_puct", "must be positive"));
        }
        if !(s.dirichlet_alpha.is_finite() && s.dirichlet_alpha > 0.0) {
            return Err(invalid("search.dirichlet_alpha", "must be positive"));
        }
        if !(0.0..=1.0).contains(&s.dirichlet_epsilon) {
            return Err(invalid("search.dirichlet_epsilon", "must lie in [0, 1]"));
        }
        if !(s.temperature.is_finite() && s.temperature >= 0.0) {
            return Err(invalid("search.temperature", "must be non-negative"));
        }
        let n = &self.net;
        n.architecture
            .parse::<Architecture>()
            .map_err(|e| invalid("net.architecture", e))?;
        for (key, v) in [
            ("net.learning_rate", n.learning_rate),
            ("net.epsilon", n.epsilon),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(key, "must be positive"));
            }
        }
        for (key, v) in [("net.beta1", n.beta1), ("net.beta2", n.beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(invalid(key, "must lie in [0, 1)"));
            }
        }
        if !(n.l2.is_finite() && n.l2 >= 0.0) {
            return Err(invalid("net.l2", "must be non-negative"));
        }
        if n.batch_size == 0 {
            return Err(invalid("net.batch_size", "must be at least 1"));
        }
        if n.epochs == 0 {
            return Err(invalid("net.epochs", "must be at least 1"));
        }
        let p = &self.pipeline;
        if p.workers == Some(0) {
            return Err(invalid("pipeline.workers", "must be at least 1"));
        }
        if p.games_per_epoch == 0 {
            return Err(invalid("pipeline.games_per_epoch", "must be at least 1"));
        }
        if p.gate_games % 2 != 0 {
            return Err(invalid("pipeline.gate_games", "must be even (0 disables gating)"));
        }
        if p.max_buffer == 0 {
            return Err(invalid("pipeline.max_buffer", "must be at least 1"));
        }
        if p.max_plies == 0 {
            return Err(invalid("pipeline.max_plies", "must be at least 1"));
        }
        if p.adjudication_threshold_cp <= 0 {
            return Err(invalid("pipeline.adjudication_threshold_cp", "must be positive"));
        }
        if p.max_positions == Some(0) {
            return Err(invalid("pipeline.max_positions", "must be at least 1"));
        }
        let o = &self.oracle;
        if o.depth.is_some() && o.movetime_ms.is_some() {
            return Err(invalid("oracle.movetime_ms", "set either oracle.depth or oracle.movetime_ms, not both"));
        }
        self.oracle_config()
            .limit
            .validate()
            .map_err(|e| invalid(if o.movetime_ms.is_some() { "oracle.movetime_ms" } else { "oracle.depth" }, e.to_string()))?;
        Ok(())
    }

    pub fn architecture(&self) -> Architecture {
        // Unparseable names are rejected by `validate`.
        self.net.architecture.parse().unwrap_or(PipelineConfig::default().arch)
    }

    pub fn search_config(&self) -> SearchConfig {
        let s = &self.search;
        let opening = if s.temperature == 0.0 {
            Temperature::Argmax
        } else {
            Temperature::Value(s.temperature)
        };
        SearchConfig {
            simulations: s.simulations,
            c_puct: s.c_puct,
            dirichlet_alpha: s.dirichlet_alpha,
            dirichlet_epsilon: s.dirichlet_epsilon,
            temperature: TemperatureSchedule {
                opening,
                opening_plies: s.temperature_plies,
                after: Temperature::Argmax,
            },
            seed: self.pipeline.seed,
        }
    }

    pub fn adjudication(&self) -> AdjudicationConfig {
        let p = &self.pipeline;
        AdjudicationConfig {
            start_ply: p.adjudication_start_ply,
            threshold_cp: p.adjudication_threshold_cp,
            max_plies: p.max_plies,
            enabled: p.adjudication,
        }
    }

    pub fn oracle_config(&self) -> OracleConfig {
        let o = &self.oracle;
        let limit = match (o.depth, o.movetime_ms) {
            (_, Some(ms)) => SearchLimit::MovetimeMs(ms),
            (Some(d), None) => SearchLimit::Depth(d),
            (None, None) => SearchLimit::default(),
        };
        OracleConfig {
            engine_path: o.engine.clone(),
            limit,
            fallback_allowed: o.fallback,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let n = &self.net;
        TrainConfig {
            batch_size: n.batch_size,
            epochs: n.epochs,
            adam: AdamConfig {
                learning_rate: n.learning_rate,
                beta1: n.beta1,
                beta2: n.beta2,
                epsilon: n.epsilon,
                l2: n.l2,
            },
        }
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        let p = &self.pipeline;
        PipelineConfig {
            arch: self.architecture(),
            iterations: p.iterations,
            generation: GenerationConfig {
                adjudication: self.adjudication(),
                games_per_epoch: p.games_per_epoch,
                search: self.search_config(),
                seed: p.seed,
            },
            train: self.train_config(),
            gate_games: p.gate_games,
            retain_buffer: p.retain_buffer,
            max_buffer: p.max_buffer,
            export_pgn: p.export_pgn,
            oracle: self.oracle_config(),
            seed: p.seed,
        }
    }

    pub fn pretrain_config(&self) -> PretrainConfig {
        PretrainConfig {
            epochs: self.pipeline.pretrain_epochs,
            train: self.train_config(),
            max_positions: self.pipeline.max_positions,
            seed: self.pipeline.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let c = RunConfig::parse(text, Path::new("test.toml"))?;
        c.validate()?;
        Ok(c)
    }

    #[test]
    fn empty_file_gives_library_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.pipeline_config(), PipelineConfig::default());
        assert_eq!(c.search_config(), SearchConfig::default());
    }

    #[test]
    fn values_reach_the_library_configs() {
        let c = parse(
            "[search]\nsimulations = 16\ntemperature = 0\n[net]\narchitecture = \"separate-full\"\nbatch_size = 4\n\
             [pipeline]\nseed = 9\ngate_games = 0\n[oracle]\nmovetime_ms = 50\n",
        )
        .unwrap();
        let p = c.pipeline_config();
        assert_eq!(p.arch, Architecture::SeparateFull);
        assert_eq!(p.generation.search.simulations, 16);
        assert_eq!(p.generation.search.temperature.opening, Temperature::Argmax);
        assert_eq!(p.train.batch_size, 4);
        assert_eq!(p.seed, 9);
        assert_eq!(p.gate_games, 0);
        assert_eq!(p.oracle.limit, SearchLimit::MovetimeMs(50));
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = parse("[search]\nsimulatons = 3\n").unwrap_err().to_string();
        assert!(e.contains("simulatons"), "{e}");
        let e = parse("[training]\nx = 1\n").unwrap_err().to_string();
        assert!(e.contains("training"), "{e}");
    }

    #[test]
    fn bad_values_are_named() {
        let cases = [
            ("[search]\nsimulations = 0\n", "search.simulations"),
            ("[search]\ndirichlet_epsilon = 1.5\n", "search.dirichlet_epsilon"),
            ("[net]\narchitecture = \"wide\"\n", "net.architecture"),
            ("[net]\nbatch_size = 0\n", "net.batch_size"),
            ("[pipeline]\ngate_games = 3\n", "pipeline.gate_games"),
            ("[oracle]\ndepth = 0\n", "oracle.depth"),
            ("[oracle]\ndepth = 4\nmovetime_ms = 100\n", "oracle.movetime_ms"),
        ];
        for (text, key) in cases {
            let e = parse(text).unwrap_err().to_string();
            assert!(e.contains(key), "{text:?}: {e}");
        }
        let e = parse("[search]\nsimulations = \"many\"\n").unwrap_err().to_string();
        assert!(e.contains("simulations"), "{e}");
    }

    #[test]
    fn flags_beat_file_and_env_is_the_last_resort() {
        let mut c = parse("[oracle]\nengine = \"/from/file\"\n").unwrap();
        c.apply(&Overrides::default(), Some("/from/env".into()));
        assert_eq!(c.oracle.engine, Some(PathBuf::from("/from/file")));

        let mut c = RunConfig::default();
        c.apply(&Overrides::default(), Some("/from/env".into()));
        assert_eq!(c.oracle.engine, Some(PathBuf::from("/from/env")));

        let o = Overrides {
            seed: Some(4),
            workers: Some(2),
            engine: Some("/from/flag".into()),
            sims: Some(7),
        };
        c.apply(&o, Some("/from/env".into()));
        assert_eq!(c.oracle.engine, Some(PathBuf::from("/from/flag")));
        assert_eq!((c.pipeline.seed, c.pipeline.workers, c.search.simulations), (4, Some(2), 7));
    }
}
