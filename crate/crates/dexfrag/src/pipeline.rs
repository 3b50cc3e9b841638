//! The experiment pipeline behind each CLI subcommand.
//!
//! Every step regenerates what it needs from the master seed through named
//! substreams, so steps can run standalone or together and always agree:
//! the delay sample set behind `delays.csv`, the bootstrap and the winning
//! probabilities is the same set, whichever subcommand produced it.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use dexfrag_core::delay::{self, DelaySampleSet};
use dexfrag_core::monte_carlo::{run_sweep_config, sweep_delay_seed, SweepConfig, SweepRow};
use dexfrag_core::protocol::{simulate_protocol_run, QuorumSpec};
use dexfrag_core::regression::{reproduce_table, HcFlavor, SweepObservations};
use dexfrag_core::stats::{fd_bin_count, histogram_density, EmpiricalCdf};
use dexfrag_core::stream::StreamKey;
use dexfrag_core::topology::{Cluster, ClusterTopology, NodeId};

use crate::config::ExperimentConfig;
use crate::csvio::{open_reader, parse_f64, parse_usize, sig6, CsvFile};
use crate::{plots, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    CsvOnly,
    Svg,
}

/// Record of everything a run produced.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub files: Vec<PathBuf>,
    pub fingerprint: u64,
    pub seed: u64,
}

impl Manifest {
    /// Every listed file must exist on disk.
    pub fn verify(&self) -> Result<(), CliError> {
        for file in &self.files {
            if !file.is_file() {
                return Err(CliError::Io(format!(
                    "manifest lists missing file {}",
                    file.display()
                )));
            }
        }
        Ok(())
    }

    pub fn write(&self, path: PathBuf) -> Result<PathBuf, CliError> {
        let mut out = CsvFile::create(path, &["file", "fingerprint", "seed"])?;
        for file in &self.files {
            out.row(&[
                file.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                format!("{:016x}", self.fingerprint),
                self.seed.to_string(),
            ])?;
        }
        out.finish(self.fingerprint, self.seed)
    }
}

pub struct Pipeline {
    config: ExperimentConfig,
    out_dir: PathBuf,
    fingerprint: u64,
}

impl Pipeline {
    /// Validates the configuration up front and prepares the output
    /// directory.
    pub fn new(config: ExperimentConfig, out_dir: PathBuf) -> Result<Self, CliError> {
        config.sweep_configs()?;
        config.sweep_params()?;
        config.econ_params()?;
        config.protocol_cluster()?;
        config.protocol_model()?;
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
        let fingerprint = config.fingerprint();
        Ok(Pipeline {
            config,
            out_dir,
            fingerprint,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    fn master(&self) -> StreamKey {
        StreamKey::root(self.config.master_seed)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn csv(&self, name: &str, header: &[&str]) -> Result<CsvFile, CliError> {
        CsvFile::create(self.path(name), header)
    }

    fn seal(&self, file: CsvFile) -> Result<PathBuf, CliError> {
        file.finish(self.fingerprint, self.config.master_seed)
    }

    /// Regenerates the delay sample set of sweep configuration `index`,
    /// sharded across the worker pool. Identical to the sequential result.
    fn delay_set(&self, index: usize, cfg: &SweepConfig) -> Result<DelaySampleSet, CliError> {
        let params = self.config.sweep_params()?;
        let seed = sweep_delay_seed(&self.master(), index);
        let topology = ClusterTopology::build(&cfg.cluster);
        let shards: Result<Vec<_>, _> = delay::shard_plan(params.n_delays)
            .into_par_iter()
            .map(|shard| {
                delay::simulate_shard(&topology, &cfg.model, params.max_intermediate, seed, shard)
            })
            .collect();
        let fingerprint = delay::sample_fingerprint(
            &cfg.cluster,
            &cfg.model,
            params.max_intermediate,
            params.n_delays,
            seed,
        );
        delay::assemble(shards.map_err(|e| CliError::Runtime(e.to_string()))?, fingerprint)
            .map_err(|e| CliError::Runtime(e.to_string()))
    }

    /// Speed-ratio sweep of the closed-form economics (`econ.csv`).
    pub fn run_econ(&self) -> Result<PathBuf, CliError> {
        let base = self.config.econ_params()?;
        let steps = self.config.econ.pi_steps;
        let mut out = self.csv(
            "econ.csv",
            &[
                "pi",
                "profit_A_single",
                "profit_B_single",
                "profit_A_frag",
                "profit_B_frag",
                "gap",
                "adopts_A",
            ],
        )?;
        for step in 1..=steps {
            let pi = step as f64 / steps as f64;
            let params = dexfrag_core::econ::EconParams { pi, ..base };
            let row = (|| -> Result<[String; 7], dexfrag_core::econ::EconError> {
                Ok([
                    sig6(pi),
                    sig6(params.expected_profit_single(Cluster::A)?),
                    sig6(params.expected_profit_single(Cluster::B)?),
                    sig6(params.expected_profit_fragmented(Cluster::A)?),
                    sig6(params.expected_profit_fragmented(Cluster::B)?),
                    sig6(params.profit_gap_single()?),
                    params.adopts_single_dex(Cluster::A)?.to_string(),
                ])
            })()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
            out.row(&row)?;
        }
        self.seal(out)
    }

    /// Raw simulated message delays for every sweep configuration
    /// (`delays.csv`).
    pub fn run_simulate(&self) -> Result<PathBuf, CliError> {
        let configs = self.config.sweep_configs()?;
        let mut out = self.csv(
            "delays.csv",
            &[
                "draw_index",
                "source_cluster",
                "delay_ms",
                "eta_a",
                "eta_b",
                "slow_mean_ms",
                "seed",
            ],
        )?;
        let seed_field = self.config.master_seed.to_string();
        for (index, cfg) in configs.iter().enumerate() {
            let set = self.delay_set(index, cfg)?;
            let eta_a = cfg.cluster.eta_a().to_string();
            let eta_b = cfg.cluster.eta_b().to_string();
            let slow = sig6(cfg.model.slow_mean);
            for (draw_index, (delay_ms, source)) in set.iter().enumerate() {
                out.row(&[
                    draw_index.to_string(),
                    source.to_string(),
                    sig6(delay_ms),
                    eta_a.clone(),
                    eta_b.clone(),
                    slow.clone(),
                    seed_field.clone(),
                ])?;
            }
        }
        self.seal(out)
    }

    /// Bootstrapped mean delay per configuration (`bootstrap.csv`).
    pub fn run_bootstrap(&self) -> Result<PathBuf, CliError> {
        let configs = self.config.sweep_configs()?;
        let n_sub = self.config.bootstrap.n_subsamples;
        let sub_size = self.config.bootstrap.subsample_size;

        let rows: Result<Vec<_>, CliError> = configs
            .par_iter()
            .enumerate()
            .map(|(index, cfg)| {
                let set = self.delay_set(index, cfg)?;
                let mut rng = self.master().child("bootstrap").index(index as u64).rng();
                let boot =
                    dexfrag_core::stats::bootstrap_mean(set.delays(), n_sub, sub_size, &mut rng)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                Ok((cfg, boot))
            })
            .collect();

        let mut out = self.csv(
            "bootstrap.csv",
            &[
                "eta_a",
                "eta_b",
                "slow_mean_ms",
                "grand_mean_ms",
                "std_of_means_ms",
            ],
        )?;
        for (cfg, boot) in rows? {
            out.row(&[
                cfg.cluster.eta_a().to_string(),
                cfg.cluster.eta_b().to_string(),
                sig6(cfg.model.slow_mean),
                sig6(boot.grand_mean),
                sig6(boot.std_of_means),
            ])?;
        }
        self.seal(out)
    }

    /// Density and CDF curves per configuration and scope
    /// (`density.csv`, `cdf.csv`).
    pub fn run_distributions(&self) -> Result<Vec<PathBuf>, CliError> {
        let configs = self.config.sweep_configs()?;
        let grid_points = self.config.histogram.grid_points.max(2);

        type Curves = (Vec<[String; 6]>, Vec<[String; 6]>);
        let per_config: Result<Vec<Curves>, CliError> = configs
            .par_iter()
            .enumerate()
            .map(|(index, cfg)| {
                let set = self.delay_set(index, cfg)?;
                let eta_a = cfg.cluster.eta_a().to_string();
                let eta_b = cfg.cluster.eta_b().to_string();
                let slow = sig6(cfg.model.slow_mean);
                let mut density_rows = Vec::new();
                let mut cdf_rows = Vec::new();
                for (scope, samples) in [
                    ("full", set.delays().to_vec()),
                    ("A", set.filter_by_source(Cluster::A).delays().to_vec()),
                    ("B", set.filter_by_source(Cluster::B).delays().to_vec()),
                ] {
                    if samples.is_empty() {
                        return Err(CliError::Runtime(format!(
                            "no {scope}-sourced delays for ({},{}) at {} ms",
                            cfg.cluster.eta_a(),
                            cfg.cluster.eta_b(),
                            cfg.model.slow_mean
                        )));
                    }
                    let bins = if self.config.histogram.bins > 0 {
                        self.config.histogram.bins
                    } else {
                        fd_bin_count(&samples)
                    };
                    let hist = histogram_density(&samples, bins)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                    for (center, density) in hist {
                        density_rows.push([
                            eta_a.clone(),
                            eta_b.clone(),
                            slow.clone(),
                            scope.to_string(),
                            sig6(center),
                            sig6(density),
                        ]);
                    }
                    let cdf = EmpiricalCdf::from_samples(&samples)
                        .map_err(|e| CliError::Runtime(e.to_string()))?;
                    let (lo, hi) = (cdf.min(), cdf.max());
                    for step in 0..grid_points {
                        let x = lo + (hi - lo) * step as f64 / (grid_points - 1) as f64;
                        cdf_rows.push([
                            eta_a.clone(),
                            eta_b.clone(),
                            slow.clone(),
                            scope.to_string(),
                            sig6(x),
                            sig6(cdf.evaluate(x)),
                        ]);
                    }
                }
                Ok((density_rows, cdf_rows))
            })
            .collect();
        let per_config = per_config?;

        let mut density = self.csv(
            "density.csv",
            &["eta_a", "eta_b", "slow_mean_ms", "scope", "bin_center_ms", "density"],
        )?;
        let mut cdf = self.csv(
            "cdf.csv",
            &["eta_a", "eta_b", "slow_mean_ms", "scope", "x_ms", "cdf"],
        )?;
        for (density_rows, cdf_rows) in per_config {
            for row in density_rows {
                density.row(&row)?;
            }
            for row in cdf_rows {
                cdf.row(&row)?;
            }
        }
        Ok(vec![self.seal(density)?, self.seal(cdf)?])
    }

    /// Runs the winning-probability sweep in memory (shared with tests).
    pub fn sweep_rows(&self) -> Result<Vec<SweepRow>, CliError> {
        let configs = self.config.sweep_configs()?;
        let params = self.config.sweep_params()?;
        let master = self.master();
        configs
            .par_iter()
            .enumerate()
            .map(|(index, cfg)| {
                run_sweep_config(cfg, &params, &master, index)
                    .map_err(|e| CliError::Runtime(e.to_string()))
            })
            .collect()
    }

    /// Cluster- and node-level winning probabilities (`winprob.csv`).
    pub fn run_montecarlo(&self) -> Result<PathBuf, CliError> {
        let rows = self.sweep_rows()?;
        let mut out = self.csv(
            "winprob.csv",
            &[
                "eta_a",
                "eta_b",
                "slow_mean_ms",
                "p_cluster_a",
                "p_node_a",
                "p_node_b",
                "ratio_a_over_b",
                "pi_hat",
                "std_across_sims",
                "seed",
            ],
        )?;
        let seed_field = self.config.master_seed.to_string();
        for row in rows {
            out.row(&[
                row.eta_a.to_string(),
                row.eta_b.to_string(),
                sig6(row.slow_mean_ms),
                sig6(row.estimate.p_cluster_a),
                sig6(row.estimate.p_node_a),
                sig6(row.estimate.p_node_b),
                sig6(row.estimate.likelihood_ratio()),
                sig6(row.estimate.pi_hat()),
                sig6(row.estimate.std_across_sims),
                seed_field.clone(),
            ])?;
        }
        self.seal(out)
    }

    /// Fits the four sweep regressions from `winprob.csv` (`table2.csv`).
    pub fn run_regress(&self) -> Result<PathBuf, CliError> {
        let winprob = self.path("winprob.csv");
        if !winprob.is_file() {
            return Err(CliError::Io(format!(
                "{} not found; run the montecarlo step first",
                winprob.display()
            )));
        }
        let obs = read_winprob(&winprob)?;
        let fits =
            reproduce_table(&obs, HcFlavor::Hc1).map_err(|e| CliError::Runtime(e.to_string()))?;

        let terms = ["const", "delay", "asymmetry", "delay_x_asymmetry"];
        let mut out = self.csv(
            "table2.csv",
            &[
                "outcome",
                "term",
                "coefficient",
                "robust_se",
                "z",
                "stars",
                "r_squared",
            ],
        )?;
        for fit in &fits {
            for (i, term) in terms.iter().enumerate() {
                out.row(&[
                    fit.outcome.name().to_string(),
                    (*term).to_string(),
                    sig6(fit.fit.coefficients[i]),
                    sig6(fit.fit.robust_se[i]),
                    sig6(fit.fit.z_stats[i]),
                    fit.fit.stars(i).to_string(),
                    sig6(fit.fit.r_squared),
                ])?;
            }
        }
        self.seal(out)
    }

    /// Timed consensus protocol runs (`protocol.csv`).
    pub fn run_protocol(&self) -> Result<PathBuf, CliError> {
        let cluster = self.config.protocol_cluster()?;
        let model = self.config.protocol_model()?;
        let topology = ClusterTopology::build(&cluster);
        let spec = QuorumSpec::from_faults(self.config.protocol.f_faulty);
        let rounds = self.config.protocol.rounds;
        let xi = self.config.econ.xi_ms;
        let max_intermediate = self
            .config
            .network
            .max_intermediate_hops
            .min(topology.node_count() - 2);
        let master = self.master().child("protocol");

        let runs: Result<Vec<_>, CliError> = (0..self.config.protocol.n_runs)
            .into_par_iter()
            .map(|run_index| {
                // even runs start in A, odd runs in B
                let initiator = if run_index % 2 == 0 {
                    NodeId(0)
                } else {
                    NodeId(cluster.eta_a())
                };
                let mut rng = master.index(run_index as u64).rng();
                let run = simulate_protocol_run(
                    &topology,
                    &model,
                    max_intermediate,
                    initiator,
                    &spec,
                    rounds,
                    xi,
                    &mut rng,
                )
                .map_err(|e| CliError::Runtime(e.to_string()))?;
                let cluster_tag = topology
                    .cluster_of(initiator)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                Ok((run_index, cluster_tag, run))
            })
            .collect();

        let mut out = self.csv(
            "protocol.csv",
            &[
                "run_index",
                "initiator_cluster",
                "rounds",
                "elapsed_ms",
                "committed",
            ],
        )?;
        for (run_index, cluster_tag, run) in runs? {
            out.row(&[
                run_index.to_string(),
                cluster_tag.to_string(),
                rounds.to_string(),
                sig6(run.elapsed_ms),
                run.committed.to_string(),
            ])?;
        }
        self.seal(out)
    }

    /// The full pipeline: every artifact, the optional plots, and the
    /// manifest.
    pub fn run_all(&self, format: OutputFormat) -> Result<Manifest, CliError> {
        let mut files = vec![
            self.run_econ()?,
            self.run_simulate()?,
            self.run_bootstrap()?,
        ];
        files.extend(self.run_distributions()?);
        files.push(self.run_montecarlo()?);
        files.push(self.run_regress()?);
        files.push(self.run_protocol()?);

        let mut manifest = Manifest {
            files,
            fingerprint: self.fingerprint,
            seed: self.config.master_seed,
        };
        if format == OutputFormat::Svg {
            let plot_files = plots::emit_plots(&manifest, &self.out_dir)?;
            manifest.files.extend(plot_files);
        }
        manifest.verify()?;
        manifest.write(self.path("manifest.csv"))?;
        Ok(manifest)
    }
}

/// Parses `winprob.csv` back into regression observations.
fn read_winprob(path: &Path) -> Result<SweepObservations, CliError> {
    let mut reader = open_reader(path)?;
    let mut obs = SweepObservations {
        delay_ms: Vec::new(),
        asymmetry: Vec::new(),
        p_cluster_a_pct: Vec::new(),
        p_node_a_pct: Vec::new(),
        p_node_b_pct: Vec::new(),
        ratio: Vec::new(),
    };
    let context = path.display().to_string();
    for record in reader.records() {
        let record = record?;
        let eta_a = parse_usize(&record[0], &context)?;
        let eta_b = parse_usize(&record[1], &context)?;
        if eta_b == 0 {
            return Err(CliError::Runtime(format!("{context}: eta_b must be nonzero")));
        }
        obs.delay_ms.push(parse_f64(&record[2], &context)?);
        obs.asymmetry.push(eta_a as f64 / eta_b as f64);
        obs.p_cluster_a_pct
            .push(parse_f64(&record[3], &context)? * 100.0);
        obs.p_node_a_pct
            .push(parse_f64(&record[4], &context)? * 100.0);
        obs.p_node_b_pct
            .push(parse_f64(&record[5], &context)? * 100.0);
        obs.ratio.push(parse_f64(&record[6], &context)?);
    }
    Ok(obs)
}
