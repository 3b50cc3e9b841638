//! Monte Carlo estimation of which cluster posts a transaction first.
//!
//! Given cluster-conditional delay distributions, each round resamples one
//! delay per node (`eta_a` from A's distribution, `eta_b` from B's) and
//! attributes the round to the cluster holding the minimum. Rounds are
//! grouped into simulations so the dispersion across simulations is
//! observable, matching how the winning probabilities are reported.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::delay::{simulate_delays, DelayError};
use crate::stats::{sample_std, EmpiricalCdf, StatsError};
use crate::stream::StreamKey;
use crate::topology::{Cluster, ClusterConfig, ClusterTopology, LinkDelayModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("{0} must be nonzero")]
    ZeroCount(&'static str),
    #[error("sweep configuration list is empty")]
    EmptySweep,
    #[error("sweep config ({eta_a},{eta_b}) slow_mean {slow_mean_ms} ms failed: {source}")]
    ConfigFailed {
        eta_a: usize,
        eta_b: usize,
        slow_mean_ms: f64,
        source: SweepStageError,
    },
}

/// What went wrong inside one sweep configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepStageError {
    #[error("delay simulation: {0}")]
    Delay(#[from] DelayError),
    #[error("conditional distribution: {0}")]
    Stats(#[from] StatsError),
    #[error("estimation: {0} must be nonzero")]
    ZeroCount(&'static str),
}

/// Cluster- and node-level winning probabilities from one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub eta_a: usize,
    pub eta_b: usize,
    /// Probability that some node in cluster A holds the round minimum.
    pub p_cluster_a: f64,
    /// Per-node winning probability in A, `p_cluster_a / eta_a`.
    pub p_node_a: f64,
    /// Per-node winning probability in B, `(1 - p_cluster_a) / eta_b`.
    pub p_node_b: f64,
    /// Per-simulation estimates of `p_cluster_a`.
    pub per_simulation_p: Vec<f64>,
    /// Sample standard deviation of the per-simulation estimates.
    pub std_across_sims: f64,
}

impl MonteCarloEstimate {
    /// A-over-B advantage ratio; infinite when B never wins.
    pub fn likelihood_ratio(&self) -> f64 {
        likelihood_ratio(self.p_node_a, self.p_node_b)
    }

    /// The empirical speed ratio fed back into the economic model:
    /// long-distance over local, `p_node_b / p_node_a` (0 when the advantage
    /// ratio is infinite).
    pub fn pi_hat(&self) -> f64 {
        if self.p_node_a > 0.0 {
            self.p_node_b / self.p_node_a
        } else {
            f64::INFINITY
        }
    }
}

/// Per-node winning probability from a cluster-level one.
pub fn node_win_prob(p_cluster: f64, eta: usize) -> Result<f64, McError> {
    if eta == 0 {
        return Err(McError::ZeroCount("eta"));
    }
    Ok(p_cluster / eta as f64)
}

/// Ratio of per-node winning probabilities, A over B. A value of 1 means no
/// local advantage; `p_node_b = 0` yields the infinite-advantage sentinel.
pub fn likelihood_ratio(p_node_a: f64, p_node_b: f64) -> f64 {
    if p_node_b > 0.0 {
        p_node_a / p_node_b
    } else {
        f64::INFINITY
    }
}

/// Monte Carlo design: rounds per simulation and number of simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McParams {
    pub n_draws: usize,
    pub n_sim: usize,
}

impl Default for McParams {
    fn default() -> Self {
        McParams {
            n_draws: 10_000,
            n_sim: 1_000,
        }
    }
}

/// Estimates the probability that cluster A holds the smallest delay.
///
/// Every simulation owns a substream derived from `key` and its index, so
/// simulations can be inspected or re-run independently. Ties at the round
/// minimum are broken uniformly at random among the tied nodes.
pub fn estimate_cluster_win(
    cdf_a: &EmpiricalCdf,
    cdf_b: &EmpiricalCdf,
    eta_a: usize,
    eta_b: usize,
    params: &McParams,
    key: &StreamKey,
) -> Result<MonteCarloEstimate, McError> {
    if eta_a == 0 || eta_b == 0 {
        return Err(McError::ZeroCount("cluster size"));
    }
    if params.n_draws == 0 {
        return Err(McError::ZeroCount("n_draws"));
    }
    if params.n_sim == 0 {
        return Err(McError::ZeroCount("n_sim"));
    }

    let mut per_simulation_p = Vec::with_capacity(params.n_sim);
    for sim in 0..params.n_sim {
        let mut rng = key.index(sim as u64).rng();
        let mut wins_a = 0usize;
        for _ in 0..params.n_draws {
            if round_won_by_a(cdf_a, cdf_b, eta_a, eta_b, &mut rng) {
                wins_a += 1;
            }
        }
        per_simulation_p.push(wins_a as f64 / params.n_draws as f64);
    }

    let p_cluster_a =
        per_simulation_p.iter().sum::<f64>() / per_simulation_p.len() as f64;
    Ok(MonteCarloEstimate {
        eta_a,
        eta_b,
        p_cluster_a,
        p_node_a: p_cluster_a / eta_a as f64,
        p_node_b: (1.0 - p_cluster_a) / eta_b as f64,
        std_across_sims: sample_std(&per_simulation_p),
        per_simulation_p,
    })
}

fn round_won_by_a<R: Rng + ?Sized>(
    cdf_a: &EmpiricalCdf,
    cdf_b: &EmpiricalCdf,
    eta_a: usize,
    eta_b: usize,
    rng: &mut R,
) -> bool {
    let (min_a, ties_a) = cluster_minimum(cdf_a, eta_a, rng);
    let (min_b, ties_b) = cluster_minimum(cdf_b, eta_b, rng);
    if min_a < min_b {
        true
    } else if min_b < min_a {
        false
    } else {
        // tie: pick uniformly among the tied nodes across both clusters
        rng.random_range(0..ties_a + ties_b) < ties_a
    }
}

fn cluster_minimum<R: Rng + ?Sized>(
    cdf: &EmpiricalCdf,
    eta: usize,
    rng: &mut R,
) -> (f64, usize) {
    let mut min = f64::INFINITY;
    let mut ties = 0usize;
    for _ in 0..eta {
        let v = cdf.inverse_sample(rng);
        if v < min {
            min = v;
            ties = 1;
        } else if v == min {
            ties += 1;
        }
    }
    (min, ties)
}

/// One (cluster sizes, link delays) point of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub cluster: ClusterConfig,
    pub model: LinkDelayModel,
}

/// Shared parameters of a sweep: how many delays feed the conditional
/// distributions, the route model, and the Monte Carlo design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub n_delays: usize,
    pub max_intermediate: usize,
    pub mc: McParams,
}

/// Result row for one sweep configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eta_a: usize,
    pub eta_b: usize,
    pub slow_mean_ms: f64,
    pub estimate: MonteCarloEstimate,
}

/// Seed of the delay stage for sweep configuration `config_index`. Exposed
/// so other consumers of the same experiment (exports, bootstraps) can
/// regenerate the exact sample set a sweep row was built from.
pub fn sweep_delay_seed(master: &StreamKey, config_index: usize) -> u64 {
    master.child("delay_sim").index(config_index as u64).seed()
}

/// Runs the full experiment for one grid point: simulate delays, build the
/// cluster-conditional distributions, estimate winning probabilities.
///
/// Substreams derive from `(master, config_index)`, so rows may be computed
/// concurrently and in any order.
pub fn run_sweep_config(
    config: &SweepConfig,
    params: &SweepParams,
    master: &StreamKey,
    config_index: usize,
) -> Result<SweepRow, McError> {
    let fail = |source: SweepStageError| McError::ConfigFailed {
        eta_a: config.cluster.eta_a(),
        eta_b: config.cluster.eta_b(),
        slow_mean_ms: config.model.slow_mean,
        source,
    };

    let topology = ClusterTopology::build(&config.cluster);
    let delay_seed = sweep_delay_seed(master, config_index);
    let samples = simulate_delays(
        &topology,
        &config.model,
        params.max_intermediate,
        params.n_delays,
        delay_seed,
    )
    .map_err(|e| fail(e.into()))?;

    let cdf_a = EmpiricalCdf::from_samples(samples.filter_by_source(Cluster::A).delays())
        .map_err(|e| fail(e.into()))?;
    let cdf_b = EmpiricalCdf::from_samples(samples.filter_by_source(Cluster::B).delays())
        .map_err(|e| fail(e.into()))?;

    let mc_key = master.child("monte_carlo").index(config_index as u64);
    let estimate = estimate_cluster_win(
        &cdf_a,
        &cdf_b,
        config.cluster.eta_a(),
        config.cluster.eta_b(),
        &params.mc,
        &mc_key,
    )
    .map_err(|e| match e {
        McError::ZeroCount(what) => fail(SweepStageError::ZeroCount(what)),
        other => other,
    })?;

    Ok(SweepRow {
        eta_a: config.cluster.eta_a(),
        eta_b: config.cluster.eta_b(),
        slow_mean_ms: config.model.slow_mean,
        estimate,
    })
}

/// Runs every configuration in order; deterministic in `master`.
pub fn sweep_experiment(
    configs: &[SweepConfig],
    params: &SweepParams,
    master: &StreamKey,
) -> Result<Vec<SweepRow>, McError> {
    if configs.is_empty() {
        return Err(McError::EmptySweep);
    }
    configs
        .iter()
        .enumerate()
        .map(|(i, config)| run_sweep_config(config, params, master, i))
        .collect()
}
