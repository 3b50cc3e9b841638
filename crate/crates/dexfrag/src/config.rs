//! Experiment configuration: a TOML file of nested sections whose defaults
//! reproduce the full-scale experimental design. Command-line flags override
//! file values; the desk-scale profile shrinks sample counts for quick runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use dexfrag_core::econ::EconParams;
use dexfrag_core::monte_carlo::{McParams, SweepConfig, SweepParams};
use dexfrag_core::stream::Fingerprint;
use dexfrag_core::topology::{ClusterConfig, LinkDelayModel};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub output_dir: String,
    pub network: NetworkSection,
    pub delay: DelaySection,
    pub bootstrap: BootstrapSection,
    pub monte_carlo: MonteCarloSection,
    pub econ: EconSection,
    pub protocol: ProtocolSection,
    pub histogram: HistogramSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    /// Cluster size pairs (eta_a, eta_b) swept by the experiments.
    pub asymmetry_levels: Vec<(usize, usize)>,
    /// Mean slow-link (inter-cluster) delays in milliseconds.
    pub slow_mean_ms: Vec<f64>,
    pub fast_low_ms: f64,
    pub fast_high_ms: f64,
    pub slow_half_width_ms: f64,
    /// Maximum intermediate hops on a sampled route.
    pub max_intermediate_hops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelaySection {
    /// Simulated message delays per configuration.
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapSection {
    pub n_subsamples: usize,
    pub subsample_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSection {
    /// Resampling rounds per simulation.
    pub n_draws: usize,
    /// Number of simulations averaged per configuration.
    pub n_sim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconSection {
    pub beta: f64,
    pub n_miners: u32,
    pub fee: f64,
    pub delta: f64,
    pub theta: f64,
    pub lambda: f64,
    pub xi_ms: f64,
    /// Number of speed-ratio grid points on (0, 1].
    pub pi_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub eta_a: usize,
    pub eta_b: usize,
    pub slow_mean_ms: f64,
    pub f_faulty: usize,
    pub rounds: usize,
    pub n_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramSection {
    /// Histogram bin count; 0 selects the Freedman-Diaconis rule.
    pub bins: usize,
    /// Evaluation points of the exported CDF curves.
    pub grid_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 2024,
            output_dir: "out".into(),
            network: NetworkSection::default(),
            delay: DelaySection::default(),
            bootstrap: BootstrapSection::default(),
            monte_carlo: MonteCarloSection::default(),
            econ: EconSection::default(),
            protocol: ProtocolSection::default(),
            histogram: HistogramSection::default(),
        }
    }
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            asymmetry_levels: vec![(5, 5), (6, 4), (7, 3), (8, 2), (9, 1)],
            slow_mean_ms: vec![50.0, 100.0, 150.0, 200.0, 250.0, 300.0],
            fast_low_ms: 10.0,
            fast_high_ms: 30.0,
            slow_half_width_ms: 20.0,
            max_intermediate_hops: 8,
        }
    }
}

impl Default for DelaySection {
    fn default() -> Self {
        DelaySection { n_samples: 100_000 }
    }
}

impl Default for BootstrapSection {
    fn default() -> Self {
        BootstrapSection {
            n_subsamples: 1000,
            subsample_size: 5000,
        }
    }
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            n_draws: 10_000,
            n_sim: 1000,
        }
    }
}

impl Default for EconSection {
    fn default() -> Self {
        EconSection {
            beta: 0.75,
            n_miners: 4,
            fee: 1.0,
            delta: 0.05,
            theta: 1.0,
            lambda: 1.0,
            xi_ms: 2.0,
            pi_steps: 100,
        }
    }
}

impl Default for ProtocolSection {
    fn default() -> Self {
        ProtocolSection {
            eta_a: 5,
            eta_b: 5,
            slow_mean_ms: 300.0,
            f_faulty: 3,
            rounds: 2,
            n_runs: 1000,
        }
    }
}

impl Default for HistogramSection {
    fn default() -> Self {
        HistogramSection {
            bins: 0,
            grid_points: 120,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Reduced profile for laptop-scale runs: same grids, smaller samples.
    pub fn desk_scale(mut self) -> Self {
        self.delay.n_samples = 10_000;
        self.bootstrap.n_subsamples = 1000;
        self.bootstrap.subsample_size = 1000;
        self.monte_carlo.n_draws = 1000;
        self.monte_carlo.n_sim = 100;
        self.protocol.n_runs = 200;
        self
    }

    /// Validates every section and returns the core-typed sweep grid,
    /// ordered asymmetry-major then slow-mean (the canonical config index).
    pub fn sweep_configs(&self) -> Result<Vec<SweepConfig>, CliError> {
        if self.network.asymmetry_levels.is_empty() {
            return Err(CliError::Config(
                "network.asymmetry_levels must not be empty".into(),
            ));
        }
        if self.network.slow_mean_ms.is_empty() {
            return Err(CliError::Config(
                "network.slow_mean_ms must not be empty".into(),
            ));
        }
        let mut configs = Vec::new();
        for &(eta_a, eta_b) in &self.network.asymmetry_levels {
            let cluster = ClusterConfig::new(eta_a, eta_b).map_err(|e| {
                CliError::Config(format!("network.asymmetry_levels: {e}"))
            })?;
            if self.network.max_intermediate_hops > cluster.total() - 2 {
                return Err(CliError::Config(format!(
                    "network.max_intermediate_hops: {} exceeds total-2 for ({eta_a},{eta_b})",
                    self.network.max_intermediate_hops
                )));
            }
            for &slow in &self.network.slow_mean_ms {
                let model = LinkDelayModel::new(
                    self.network.fast_low_ms,
                    self.network.fast_high_ms,
                    slow,
                    self.network.slow_half_width_ms,
                )
                .map_err(|e| CliError::Config(format!("network.slow_mean_ms={slow}: {e}")))?;
                configs.push(SweepConfig { cluster, model });
            }
        }
        Ok(configs)
    }

    pub fn sweep_params(&self) -> Result<SweepParams, CliError> {
        if self.delay.n_samples == 0 {
            return Err(CliError::Config("delay.n_samples must be positive".into()));
        }
        if self.monte_carlo.n_draws == 0 || self.monte_carlo.n_sim == 0 {
            return Err(CliError::Config(
                "monte_carlo.n_draws and monte_carlo.n_sim must be positive".into(),
            ));
        }
        Ok(SweepParams {
            n_delays: self.delay.n_samples,
            max_intermediate: self.network.max_intermediate_hops,
            mc: McParams {
                n_draws: self.monte_carlo.n_draws,
                n_sim: self.monte_carlo.n_sim,
            },
        })
    }

    pub fn econ_params(&self) -> Result<EconParams, CliError> {
        if self.econ.pi_steps == 0 {
            return Err(CliError::Config("econ.pi_steps must be positive".into()));
        }
        let params = EconParams {
            beta: self.econ.beta,
            n_miners: self.econ.n_miners,
            fee: self.econ.fee,
            pi: 1.0, // grid point placeholder, swept by the econ export
            delta: self.econ.delta,
            theta: self.econ.theta,
            lambda: self.econ.lambda,
            xi: self.econ.xi_ms,
            allow_pi_zero: false,
        };
        params
            .validate()
            .map_err(|e| CliError::Config(format!("econ: {e}")))?;
        Ok(params)
    }

    pub fn protocol_cluster(&self) -> Result<ClusterConfig, CliError> {
        ClusterConfig::new(self.protocol.eta_a, self.protocol.eta_b)
            .map_err(|e| CliError::Config(format!("protocol: {e}")))
    }

    pub fn protocol_model(&self) -> Result<LinkDelayModel, CliError> {
        LinkDelayModel::new(
            self.network.fast_low_ms,
            self.network.fast_high_ms,
            self.protocol.slow_mean_ms,
            self.network.slow_half_width_ms,
        )
        .map_err(|e| CliError::Config(format!("protocol.slow_mean_ms: {e}")))
    }

    /// Fingerprint over every field that influences the outputs, plus the
    /// master seed. Stamped into the trailer of each emitted file.
    pub fn fingerprint(&self) -> u64 {
        let mut f = Fingerprint::new();
        f.write_u64(self.master_seed);
        for &(a, b) in &self.network.asymmetry_levels {
            f.write_usize(a).write_usize(b);
        }
        for &s in &self.network.slow_mean_ms {
            f.write_f64(s);
        }
        f.write_f64(self.network.fast_low_ms)
            .write_f64(self.network.fast_high_ms)
            .write_f64(self.network.slow_half_width_ms)
            .write_usize(self.network.max_intermediate_hops)
            .write_usize(self.delay.n_samples)
            .write_usize(self.bootstrap.n_subsamples)
            .write_usize(self.bootstrap.subsample_size)
            .write_usize(self.monte_carlo.n_draws)
            .write_usize(self.monte_carlo.n_sim)
            .write_f64(self.econ.beta)
            .write_u64(u64::from(self.econ.n_miners))
            .write_f64(self.econ.fee)
            .write_f64(self.econ.delta)
            .write_f64(self.econ.theta)
            .write_f64(self.econ.lambda)
            .write_f64(self.econ.xi_ms)
            .write_usize(self.econ.pi_steps)
            .write_usize(self.protocol.eta_a)
            .write_usize(self.protocol.eta_b)
            .write_f64(self.protocol.slow_mean_ms)
            .write_usize(self.protocol.f_faulty)
            .write_usize(self.protocol.rounds)
            .write_usize(self.protocol.n_runs)
            .write_usize(self.histogram.bins)
            .write_usize(self.histogram.grid_points);
        f.finish()
    }
}
