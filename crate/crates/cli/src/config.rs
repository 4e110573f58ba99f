//! Experiment configuration: one flat struct shared by every subcommand,
//! loadable from JSON (`--config`) and round-trippable.

use serde::{Deserialize, Serialize};

fn default_n() -> f64 {
    1.0
}
fn default_x() -> f64 {
    1.0
}
fn default_p() -> f64 {
    0.5
}
fn default_r() -> u32 {
    1
}
fn default_window() -> u32 {
    0
}
fn default_k() -> u32 {
    1
}
fn default_cut() -> u32 {
    2
}
fn default_sweeps() -> u64 {
    1000
}
fn default_burnin() -> u64 {
    1000
}
fn default_gap() -> u64 {
    10
}
fn default_samples() -> u64 {
    1000
}
fn default_chains() -> u64 {
    1
}
fn default_threads() -> u64 {
    0
}
fn default_eps() -> f64 {
    0.4
}
fn default_tv_tol() -> f64 {
    1e-9
}
fn default_stat_tol() -> f64 {
    3.0
}
fn default_side() -> usize {
    16
}

/// Every knob of every subcommand; unused fields keep their defaults so one
/// config file can drive any command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Subcommand this configuration belongs to.
    pub command: String,
    /// Loop weight n > 0.
    #[serde(default = "default_n")]
    pub n: f64,
    /// Edge weight x > 0.
    #[serde(default = "default_x")]
    pub x: f64,
    /// Site-percolation parameter in [0, 1].
    #[serde(default = "default_p")]
    pub p: f64,
    /// Ball radius of the host patch (or triangular patch radius for arms,
    /// rhombus side for trifurcation).
    #[serde(default = "default_r")]
    pub r: u32,
    /// Resampling window radius.
    #[serde(default = "default_window")]
    pub window: u32,
    /// Annulus scale / arm pair count.
    #[serde(default = "default_k")]
    pub k: u32,
    /// Combinatorial ball radius for cut sets.
    #[serde(default = "default_cut")]
    pub cut_radius: u32,
    /// Base seed; required on the command line for stochastic commands.
    pub seed: Option<u64>,
    #[serde(default = "default_sweeps")]
    pub sweeps: u64,
    #[serde(default = "default_burnin")]
    pub burnin: u64,
    #[serde(default = "default_gap")]
    pub gap: u64,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_chains")]
    pub chains: u64,
    /// Worker threads for chain execution; 0 means one thread per chain.
    #[serde(default = "default_threads")]
    pub threads: u64,
    /// Arc-splitting threshold.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Exact total-variation tolerance.
    #[serde(default = "default_tv_tol")]
    pub tv_tol: f64,
    /// Statistical tolerance in standard errors.
    #[serde(default = "default_stat_tol")]
    pub stat_tol: f64,
    /// Rhombus side for crossing estimates.
    #[serde(default = "default_side")]
    pub side: usize,
    /// Grid lists; when empty the scalar fields are used.
    #[serde(default)]
    pub n_list: Vec<f64>,
    #[serde(default)]
    pub x_list: Vec<f64>,
    #[serde(default)]
    pub k_list: Vec<u32>,
    #[serde(default)]
    pub r_list: Vec<u32>,
    /// Frozen boundary condition as an edge-index list; empty means free.
    #[serde(default)]
    pub boundary: Vec<u32>,
    /// Append each sample's edge-index list to the sample CSV.
    #[serde(default)]
    pub emit_configs: bool,
}

impl ExperimentConfig {
    pub fn new(command: &str) -> ExperimentConfig {
        ExperimentConfig {
            command: command.to_string(),
            n: default_n(),
            x: default_x(),
            p: default_p(),
            r: default_r(),
            window: default_window(),
            k: default_k(),
            cut_radius: default_cut(),
            seed: None,
            sweeps: default_sweeps(),
            burnin: default_burnin(),
            gap: default_gap(),
            samples: default_samples(),
            chains: default_chains(),
            threads: default_threads(),
            eps: default_eps(),
            tv_tol: default_tv_tol(),
            stat_tol: default_stat_tol(),
            side: default_side(),
            n_list: Vec::new(),
            x_list: Vec::new(),
            k_list: Vec::new(),
            r_list: Vec::new(),
            boundary: Vec::new(),
            emit_configs: false,
        }
    }

    /// Numeric range validation shared by every command. Violations are
    /// usage errors (exit code 2).
    pub fn validate(&self) -> Result<(), String> {
        if !(self.n > 0.0) || !self.n.is_finite() {
            return Err(format!("loop weight n must be positive, got {}", self.n));
        }
        if !(self.x > 0.0) || !self.x.is_finite() {
            return Err(format!("edge weight x must be positive, got {}", self.x));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(format!("p must lie in [0,1], got {}", self.p));
        }
        for &n in &self.n_list {
            if !(n > 0.0) {
                return Err(format!("n grid value {n} must be positive"));
            }
        }
        for &x in &self.x_list {
            if !(x > 0.0) {
                return Err(format!("x grid value {x} must be positive"));
            }
        }
        Ok(())
    }

    pub fn seed_or_usage(&self) -> Result<u64, String> {
        self.seed
            .ok_or_else(|| "--seed is required for stochastic commands".to_string())
    }

    pub fn emit(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    pub fn parse(s: &str) -> Result<ExperimentConfig, String> {
        serde_json::from_str(s).map_err(|e| format!("bad config: {e}"))
    }
}
