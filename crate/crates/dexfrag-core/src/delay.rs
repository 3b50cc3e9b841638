//! Bulk simulation of end-to-end message delays over the two-cluster
//! network.
//!
//! Each draw picks a distinct source/destination pair uniformly at random,
//! samples a route, and sums the per-hop link delays. Draws are organized in
//! fixed-size shards, each with its own derived substream, so the output is
//! identical whether shards run sequentially or across any number of
//! workers.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::stream::{Fingerprint, StreamKey};
use crate::topology::{
    sample_link_delay, sample_route, Cluster, ClusterConfig, ClusterTopology, LinkDelayModel,
    NodeId, TopologyError,
};

/// Draws per shard; fixed so shard boundaries never depend on worker count.
pub const SHARD_SIZE: usize = 4096;

const DELAY_STREAM: &str = "delay";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DelayError {
    #[error("sample count must be at least 1")]
    EmptySampleRequest,
    #[error("shard outputs do not form a contiguous plan")]
    IncoherentShards,
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// A batch of simulated one-way message delays with their source clusters.
///
/// The fingerprint identifies the generating configuration and seed, so two
/// sets with equal fingerprints hold identical data.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySampleSet {
    delays: Vec<f64>,
    source_clusters: Vec<Cluster>,
    fingerprint: u64,
}

impl DelaySampleSet {
    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn source_clusters(&self) -> &[Cluster] {
        &self.source_clusters
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Cluster)> + '_ {
        self.delays
            .iter()
            .copied()
            .zip(self.source_clusters.iter().copied())
    }

    /// The subset of draws whose source lies in `cluster`, in original
    /// order. Keeps the parent fingerprint so lineage stays visible; the
    /// result may be empty.
    pub fn filter_by_source(&self, cluster: Cluster) -> DelaySampleSet {
        let mut delays = Vec::new();
        let mut sources = Vec::new();
        for (d, c) in self.iter() {
            if c == cluster {
                delays.push(d);
                sources.push(c);
            }
        }
        DelaySampleSet {
            delays,
            source_clusters: sources,
            fingerprint: self.fingerprint,
        }
    }
}

/// Identifies one contiguous block of draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardSpec {
    pub index: usize,
    pub len: usize,
}

/// Output of one shard, tagged with its position in the plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ShardOutput {
    pub index: usize,
    pub delays: Vec<f64>,
    pub sources: Vec<Cluster>,
}

/// Splits `n` draws into fixed-size shards.
pub fn shard_plan(n: usize) -> Vec<ShardSpec> {
    let mut shards = Vec::with_capacity(n.div_ceil(SHARD_SIZE));
    let mut remaining = n;
    let mut index = 0;
    while remaining > 0 {
        let len = remaining.min(SHARD_SIZE);
        shards.push(ShardSpec { index, len });
        remaining -= len;
        index += 1;
    }
    shards
}

/// Fingerprint of a delay-simulation configuration.
pub fn sample_fingerprint(
    config: &ClusterConfig,
    model: &LinkDelayModel,
    max_intermediate: usize,
    n: usize,
    seed: u64,
) -> u64 {
    let mut f = Fingerprint::new();
    f.write_str("delay-sample-set")
        .write_usize(config.eta_a())
        .write_usize(config.eta_b())
        .write_f64(model.fast_low)
        .write_f64(model.fast_high)
        .write_f64(model.slow_mean)
        .write_f64(model.slow_half_width)
        .write_usize(max_intermediate)
        .write_usize(n)
        .write_u64(seed);
    f.finish()
}

/// One end-to-end message delay between two given nodes: a random route plus
/// the sum of its per-hop link delays.
pub fn message_delay<R: Rng + ?Sized>(
    topology: &ClusterTopology,
    model: &LinkDelayModel,
    max_intermediate: usize,
    source: NodeId,
    dest: NodeId,
    rng: &mut R,
) -> Result<f64, TopologyError> {
    model.validate()?;
    let route = sample_route(topology, source, dest, max_intermediate, rng)?;
    let mut total = 0.0;
    for pair in route.windows(2) {
        let class = topology.link_class(pair[0], pair[1])?;
        total += sample_link_delay(class, model, rng);
    }
    Ok(total)
}

/// Runs one shard of the plan. The substream depends only on `(seed, shard
/// index)`, never on the caller's threading.
pub fn simulate_shard(
    topology: &ClusterTopology,
    model: &LinkDelayModel,
    max_intermediate: usize,
    seed: u64,
    shard: ShardSpec,
) -> Result<ShardOutput, DelayError> {
    let mut rng = StreamKey::root(seed)
        .child(DELAY_STREAM)
        .index(shard.index as u64)
        .rng();
    let total = topology.node_count();
    let mut delays = Vec::with_capacity(shard.len);
    let mut sources = Vec::with_capacity(shard.len);
    for _ in 0..shard.len {
        let source = NodeId(rng.random_range(0..total));
        let mut dest_raw = rng.random_range(0..total - 1);
        if dest_raw >= source.0 {
            dest_raw += 1;
        }
        let dest = NodeId(dest_raw);
        let delay = message_delay(topology, model, max_intermediate, source, dest, &mut rng)?;
        delays.push(delay);
        sources.push(topology.cluster_of(source)?);
    }
    Ok(ShardOutput {
        index: shard.index,
        delays,
        sources,
    })
}

/// Reassembles shard outputs in plan order into one sample set.
pub fn assemble(mut shards: Vec<ShardOutput>, fingerprint: u64) -> Result<DelaySampleSet, DelayError> {
    shards.sort_by_key(|s| s.index);
    if shards.iter().enumerate().any(|(i, s)| s.index != i) {
        return Err(DelayError::IncoherentShards);
    }
    let n: usize = shards.iter().map(|s| s.delays.len()).sum();
    let mut delays = Vec::with_capacity(n);
    let mut sources = Vec::with_capacity(n);
    for shard in shards {
        delays.extend_from_slice(&shard.delays);
        sources.extend_from_slice(&shard.sources);
    }
    Ok(DelaySampleSet {
        delays,
        source_clusters: sources,
        fingerprint,
    })
}

/// Simulates `n` independent message delays, deterministically in `seed`.
pub fn simulate_delays(
    topology: &ClusterTopology,
    model: &LinkDelayModel,
    max_intermediate: usize,
    n: usize,
    seed: u64,
) -> Result<DelaySampleSet, DelayError> {
    if n == 0 {
        return Err(DelayError::EmptySampleRequest);
    }
    let fingerprint = sample_fingerprint(&topology.config(), model, max_intermediate, n, seed);
    let mut outputs = Vec::new();
    for shard in shard_plan(n) {
        outputs.push(simulate_shard(topology, model, max_intermediate, seed, shard)?);
    }
    assemble(outputs, fingerprint)
}
