//! Two-cluster fully connected network with per-link delay classes.
//!
//! Nodes live in one of two clusters, A (the larger) and B. Every pair of
//! nodes is linked; links inside a cluster are fast, links between clusters
//! are slow. Link delays are uniform on a class-specific interval and a
//! message travels over a randomly drawn simple route, so its end-to-end
//! delay is the sum of the per-hop draws.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use thiserror::Error;

/// Default lower edge of the fast-link delay interval, in milliseconds.
pub const DEFAULT_FAST_LOW_MS: f64 = 10.0;
/// Default upper edge of the fast-link delay interval, in milliseconds.
pub const DEFAULT_FAST_HIGH_MS: f64 = 30.0;
/// Default half-width of the slow-link delay interval, in milliseconds.
pub const DEFAULT_SLOW_HALF_WIDTH_MS: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("cluster sizes must satisfy eta_a >= eta_b >= 1, got ({eta_a}, {eta_b})")]
    BadClusterSizes { eta_a: usize, eta_b: usize },
    #[error("invalid link delay model: {0}")]
    BadDelayModel(&'static str),
    #[error("node {0} is not part of the topology")]
    UnknownNode(usize),
    #[error("link endpoints must be two distinct nodes")]
    IdenticalEndpoints,
    #[error("route may use at most {max} intermediate nodes, requested {requested}")]
    TooManyIntermediates { requested: usize, max: usize },
}

/// Which of the two geographic clusters a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cluster {
    A,
    B,
}

impl Cluster {
    pub fn tag(self) -> char {
        match self {
            Cluster::A => 'A',
            Cluster::B => 'B',
        }
    }

    pub fn other(self) -> Cluster {
        match self {
            Cluster::A => Cluster::B,
            Cluster::B => Cluster::A,
        }
    }
}

impl fmt::Display for Cluster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())
    }
}

/// Identifier of a node; indices `0..eta_a` are cluster A, the rest B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// Cluster sizes `(eta_a, eta_b)` with A fixed as the larger cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterConfig {
    eta_a: usize,
    eta_b: usize,
}

impl ClusterConfig {
    /// Requires `eta_a >= eta_b >= 1`; the single-cluster case `eta_b = 0`
    /// is rejected as degenerate.
    pub fn new(eta_a: usize, eta_b: usize) -> Result<Self, TopologyError> {
        if eta_b < 1 || eta_a < eta_b {
            return Err(TopologyError::BadClusterSizes { eta_a, eta_b });
        }
        Ok(ClusterConfig { eta_a, eta_b })
    }

    pub fn eta_a(&self) -> usize {
        self.eta_a
    }

    pub fn eta_b(&self) -> usize {
        self.eta_b
    }

    pub fn total(&self) -> usize {
        self.eta_a + self.eta_b
    }

    /// The asymmetry measure `eta_a / eta_b` used throughout the analysis.
    pub fn asymmetry_ratio(&self) -> f64 {
        self.eta_a as f64 / self.eta_b as f64
    }
}

/// Uniform delay intervals for the two link classes, in milliseconds.
///
/// Fast links draw from `[fast_low, fast_high]`; slow links from
/// `[slow_mean - slow_half_width, slow_mean + slow_half_width]`. The slow
/// interval must sit strictly above the fast one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDelayModel {
    pub fast_low: f64,
    pub fast_high: f64,
    pub slow_mean: f64,
    pub slow_half_width: f64,
}

impl LinkDelayModel {
    pub fn new(
        fast_low: f64,
        fast_high: f64,
        slow_mean: f64,
        slow_half_width: f64,
    ) -> Result<Self, TopologyError> {
        let model = LinkDelayModel {
            fast_low,
            fast_high,
            slow_mean,
            slow_half_width,
        };
        model.validate()?;
        Ok(model)
    }

    /// Default fast interval (10–30 ms) and slow half-width (20 ms) around
    /// the given slow-link mean.
    pub fn with_slow_mean(slow_mean: f64) -> Result<Self, TopologyError> {
        Self::new(
            DEFAULT_FAST_LOW_MS,
            DEFAULT_FAST_HIGH_MS,
            slow_mean,
            DEFAULT_SLOW_HALF_WIDTH_MS,
        )
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        if !(self.fast_low > 0.0 && self.fast_high > self.fast_low) {
            return Err(TopologyError::BadDelayModel(
                "fast interval must satisfy 0 < fast_low < fast_high",
            ));
        }
        if !(self.slow_half_width >= 0.0) {
            return Err(TopologyError::BadDelayModel(
                "slow_half_width must be nonnegative",
            ));
        }
        // touching intervals are allowed: the default slow mean of 50 ms
        // with half-width 20 meets the default fast edge at exactly 30 ms
        if !(self.slow_mean - self.slow_half_width >= self.fast_high) {
            return Err(TopologyError::BadDelayModel(
                "slow interval must not dip below the fast interval",
            ));
        }
        Ok(())
    }

    pub fn slow_low(&self) -> f64 {
        self.slow_mean - self.slow_half_width
    }

    pub fn slow_high(&self) -> f64 {
        self.slow_mean + self.slow_half_width
    }
}

/// Delay class of a link: fast within a cluster, slow across clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkClass {
    Fast,
    Slow,
}

/// The fully connected two-cluster network.
///
/// Nodes are indexed `0..total`; indices below `eta_a` are cluster A
/// (labels `A0..`), the remainder cluster B (labels `B0..`). Construction is
/// deterministic, and the value is immutable afterwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterTopology {
    eta_a: usize,
    eta_b: usize,
}

impl ClusterTopology {
    pub fn build(config: &ClusterConfig) -> Self {
        ClusterTopology {
            eta_a: config.eta_a(),
            eta_b: config.eta_b(),
        }
    }

    pub fn config(&self) -> ClusterConfig {
        ClusterConfig {
            eta_a: self.eta_a,
            eta_b: self.eta_b,
        }
    }

    pub fn node_count(&self) -> usize {
        self.eta_a + self.eta_b
    }

    pub fn cluster_size(&self, cluster: Cluster) -> usize {
        match cluster {
            Cluster::A => self.eta_a,
            Cluster::B => self.eta_b,
        }
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.0 < self.node_count()
    }

    /// All node identifiers in canonical order (A nodes first).
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId)
    }

    pub fn cluster_of(&self, node: NodeId) -> Result<Cluster, TopologyError> {
        if !self.contains(node) {
            return Err(TopologyError::UnknownNode(node.0));
        }
        Ok(if node.0 < self.eta_a {
            Cluster::A
        } else {
            Cluster::B
        })
    }

    /// Human-readable node label, `A0..A(eta_a-1)`, `B0..B(eta_b-1)`.
    pub fn label(&self, node: NodeId) -> Result<String, TopologyError> {
        let cluster = self.cluster_of(node)?;
        let offset = match cluster {
            Cluster::A => node.0,
            Cluster::B => node.0 - self.eta_a,
        };
        Ok(alloc::format!("{}{}", cluster.tag(), offset))
    }

    /// Looks a node up by its label, the inverse of [`Self::label`].
    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        let (tag, rest) = label.split_at(1);
        let offset: usize = rest.parse().ok()?;
        let id = match tag {
            "A" => NodeId(offset),
            "B" => NodeId(self.eta_a + offset),
            _ => return None,
        };
        if self.contains(id) && offset < self.cluster_size(if tag == "A" { Cluster::A } else { Cluster::B })
        {
            Some(id)
        } else {
            None
        }
    }

    /// Fast iff both endpoints are in the same cluster.
    pub fn link_class(&self, i: NodeId, j: NodeId) -> Result<LinkClass, TopologyError> {
        if i == j {
            return Err(TopologyError::IdenticalEndpoints);
        }
        let ci = self.cluster_of(i)?;
        let cj = self.cluster_of(j)?;
        Ok(if ci == cj {
            LinkClass::Fast
        } else {
            LinkClass::Slow
        })
    }
}

/// Draws one link delay from the class interval.
pub fn sample_link_delay<R: Rng + ?Sized>(
    class: LinkClass,
    model: &LinkDelayModel,
    rng: &mut R,
) -> f64 {
    match class {
        LinkClass::Fast => rng.random_range(model.fast_low..=model.fast_high),
        LinkClass::Slow => rng.random_range(model.slow_low()..=model.slow_high()),
    }
}

/// Draws a random simple route from `source` to `dest`.
///
/// The number of intermediate hops `h` is uniform on `{0, ..,
/// max_intermediate}` and the intermediates themselves are drawn uniformly
/// without replacement from the remaining quorum nodes, so no node repeats.
pub fn sample_route<R: Rng + ?Sized>(
    topology: &ClusterTopology,
    source: NodeId,
    dest: NodeId,
    max_intermediate: usize,
    rng: &mut R,
) -> Result<Vec<NodeId>, TopologyError> {
    if !topology.contains(source) {
        return Err(TopologyError::UnknownNode(source.0));
    }
    if !topology.contains(dest) {
        return Err(TopologyError::UnknownNode(dest.0));
    }
    if source == dest {
        return Err(TopologyError::IdenticalEndpoints);
    }
    let max_possible = topology.node_count() - 2;
    if max_intermediate > max_possible {
        return Err(TopologyError::TooManyIntermediates {
            requested: max_intermediate,
            max: max_possible,
        });
    }

    let hops = rng.random_range(0..=max_intermediate);
    let mut pool: Vec<NodeId> = topology
        .nodes()
        .filter(|&n| n != source && n != dest)
        .collect();
    // partial Fisher-Yates: the first `hops` slots become the intermediates
    for k in 0..hops {
        let j = rng.random_range(k..pool.len());
        pool.swap(k, j);
    }

    let mut route = Vec::with_capacity(hops + 2);
    route.push(source);
    route.extend_from_slice(&pool[..hops]);
    route.push(dest);
    Ok(route)
}
