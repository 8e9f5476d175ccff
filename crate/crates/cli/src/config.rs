//! JSON run configuration and command-line overrides.

use std::path::{Path, PathBuf};

use citesim_core::engine::{Checkpoint, SimulationConfig, DEFAULT_EVENTS, DEFAULT_PAPERS};
use citesim_core::io::{read_json, read_teams};
use citesim_core::kernels::{KernelMode, KernelSpec};
use citesim_core::population::{gen_team_sizes, TeamGenParams, TeamSizeVector};
use citesim_core::rng::replicate_rng;
use citesim_core::stats::BinningScheme;
use citesim_core::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

/// RNG stream reserved for synthetic cohorts, so they never share random
/// numbers with replicate 0 of a run using the same seed.
pub const TEAM_STREAM: u64 = u64::MAX;

/// Everything a pipeline needs. Every field is optional in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    pub n_papers: usize,
    pub total_events: u64,
    pub replicates: u64,
    pub seed: u64,
    /// Replaces the default "initial"/"final" checkpoints when set.
    pub checkpoints: Option<Vec<Checkpoint>>,
    pub kernel: KernelSpec,
    pub team_gen: TeamGenParams,
    pub binning: BinningScheme,
    /// Team CSV; a synthetic cohort is generated when absent.
    pub teams: Option<PathBuf>,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            n_papers: DEFAULT_PAPERS,
            total_events: DEFAULT_EVENTS,
            replicates: 1,
            seed: 0,
            checkpoints: None,
            kernel: KernelSpec::default(),
            team_gen: TeamGenParams::default(),
            binning: BinningScheme::default(),
            teams: None,
        }
    }
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => read_json(p),
            None => Ok(Self::default()),
        }
    }

    pub fn simulation(&self) -> SimulationConfig {
        let cfg = SimulationConfig::new(self.n_papers, self.total_events, self.seed, self.replicates);
        match &self.checkpoints {
            Some(cps) => cfg.with_checkpoints(cps.clone()),
            None => cfg,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.simulation().validate()?;
        self.kernel.validate()?;
        self.team_gen.validate()?;
        self.binning.validate()
    }

    /// Reads the configured team CSV, which fixes the number of papers.
    fn load_teams(&mut self) -> Result<Option<TeamSizeVector>> {
        let Some(path) = &self.teams else { return Ok(None) };
        let teams = read_teams(path)?;
        self.n_papers = teams.len();
        Ok(Some(teams))
    }
}

/// Flags shared by `simulate` and `fit`; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Kernel mode (uniform, pure-ca, price, gen-price, team, team-general,
    /// direct-only-team, powerlaw-attract, influence)
    #[arg(long)]
    pub kernel: Option<KernelMode>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub cap: Option<u32>,
    /// Total citation events per replicate
    #[arg(long)]
    pub events: Option<u64>,
    /// Number of papers (ignored when --teams is given)
    #[arg(long, alias = "n")]
    pub papers: Option<usize>,
    #[arg(long)]
    pub replicates: Option<u64>,
    /// Team-size CSV (`paper_id,team_size`)
    #[arg(long)]
    pub teams: Option<PathBuf>,
    /// Checkpoint as `label=events`; repeat for several. Replaces the defaults.
    #[arg(long = "checkpoint-at", value_parser = parse_checkpoint)]
    pub checkpoints: Vec<Checkpoint>,
}

fn parse_checkpoint(s: &str) -> std::result::Result<Checkpoint, String> {
    let (label, events) = s
        .split_once('=')
        .ok_or_else(|| format!("expected label=events, got {s:?}"))?;
    let events = events
        .trim()
        .parse()
        .map_err(|_| format!("checkpoint events must be a non-negative integer, got {events:?}"))?;
    if label.trim().is_empty() {
        return Err("checkpoint label must not be empty".into());
    }
    Ok(Checkpoint::new(label.trim(), events))
}

impl Overrides {
    pub fn apply(&self, cfg: &mut CliConfig) {
        let k = &mut cfg.kernel;
        if let Some(m) = self.kernel {
            k.mode = m;
        }
        if let Some(v) = self.alpha {
            k.alpha = v;
        }
        if let Some(v) = self.beta {
            k.beta = v;
        }
        if let Some(v) = self.epsilon {
            k.epsilon = v;
        }
        if let Some(v) = self.gamma {
            k.transform.set_gamma(v);
        }
        if let Some(v) = self.c {
            k.transform.set_c(v);
        }
        if let Some(v) = self.cap {
            k.transform.cap = v;
        }
        if let Some(v) = self.events {
            cfg.total_events = v;
        }
        if let Some(v) = self.papers {
            cfg.n_papers = v;
        }
        if let Some(v) = self.replicates {
            cfg.replicates = v;
        }
        if let Some(p) = &self.teams {
            cfg.teams = Some(p.clone());
        }
        if !self.checkpoints.is_empty() {
            cfg.checkpoints = Some(self.checkpoints.clone());
        }
    }
}

/// Applies the seed, resolves the cohort and validates every field. Nothing
/// is simulated before this returns.
pub fn prepare(mut cfg: CliConfig, seed: Option<u64>) -> Result<(CliConfig, TeamSizeVector)> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let loaded = cfg.load_teams()?;
    cfg.validate()?;
    let teams = match loaded {
        Some(t) => t,
        None => gen_team_sizes(&cfg.team_gen, cfg.n_papers, &mut replicate_rng(cfg.seed, TEAM_STREAM))?,
    };
    Ok((cfg, teams))
}
