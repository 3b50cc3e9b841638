//! Quorum arithmetic, consensus message-count formulas, and a timed model
//! of the transaction verification message sequence.
//!
//! The sequence mirrors the verification protocol: the initiator invites the
//! other quorum nodes, collects acknowledgements and hash confirmations,
//! then the quorum exchanges all-to-all message rounds. Each phase completes
//! at the slowest of its messages, and message delays come from the same
//! random-route model as the delay simulator. No faulty behaviour is
//! injected; the fault bound only sizes the quorum and its vote threshold.

use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::delay::message_delay;
use crate::topology::{ClusterTopology, LinkDelayModel, NodeId, TopologyError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("node count must be at least 1")]
    EmptyQuorum,
    #[error("group size k must be at least 2 for the scalable algorithm")]
    GroupTooSmall,
    #[error("votes ({votes}) exceed quorum size ({quorum})")]
    TooManyVotes { votes: usize, quorum: usize },
    #[error("xi must be nonnegative")]
    NegativeXi,
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Byzantine quorum sized as `n = 3f + 1` with commit threshold `2f + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuorumSpec {
    n_nodes: usize,
    f_faulty: usize,
}

impl QuorumSpec {
    /// Builds the quorum for a tolerated fault count `f`.
    pub fn from_faults(f_faulty: usize) -> QuorumSpec {
        QuorumSpec {
            n_nodes: 3 * f_faulty + 1,
            f_faulty,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn f_faulty(&self) -> usize {
        self.f_faulty
    }

    /// Minimum validations for consensus, `2f + 1`, always a qualified
    /// majority of the quorum.
    pub fn validation_threshold(&self) -> usize {
        2 * self.f_faulty + 1
    }

    /// Whether `votes` validations reach consensus.
    pub fn validate(&self, votes: usize) -> Result<bool, ProtocolError> {
        if votes > self.n_nodes {
            return Err(ProtocolError::TooManyVotes {
                votes,
                quorum: self.n_nodes,
            });
        }
        Ok(votes >= self.validation_threshold())
    }
}

/// Consensus algorithm whose message complexity is being counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Practical byzantine fault tolerance: `2 n^2` messages.
    Pbft,
    /// Scalable dynamic multi-agent variant communicating in groups of `k`:
    /// `k n log_k n` messages.
    ScalableMultiAgent,
}

/// Message count as the formula's real value plus its integer ceiling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessageCount {
    pub exact: f64,
    pub ceil: u64,
}

/// Messages required to reach consensus among `n` nodes. `k` is the group
/// size of the scalable variant and is ignored for PBFT.
pub fn message_count(algorithm: Algorithm, n: u64, k: u64) -> Result<MessageCount, ProtocolError> {
    if n < 1 {
        return Err(ProtocolError::EmptyQuorum);
    }
    let exact = match algorithm {
        Algorithm::Pbft => 2.0 * (n as f64) * (n as f64),
        Algorithm::ScalableMultiAgent => {
            if k < 2 {
                return Err(ProtocolError::GroupTooSmall);
            }
            let log_k_n = libm::log(n as f64) / libm::log(k as f64);
            (k as f64) * (n as f64) * log_k_n
        }
    };
    Ok(MessageCount {
        exact,
        ceil: libm::ceil(exact) as u64,
    })
}

/// Phases of the verification and consensus sequence, in protocol order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolPhase {
    Invitation,
    Acknowledge,
    TransactionOk,
    ConsensusRounds,
    Committed,
    Aborted,
}

impl ProtocolPhase {
    /// Legal successors; `Aborted` is reachable from any pre-commit phase
    /// and the consensus rounds may be skipped when none are configured.
    pub fn may_follow(self, prev: ProtocolPhase) -> bool {
        use ProtocolPhase::*;
        match (prev, self) {
            (Invitation, Acknowledge)
            | (Acknowledge, TransactionOk)
            | (TransactionOk, ConsensusRounds)
            | (TransactionOk, Committed)
            | (ConsensusRounds, Committed) => true,
            (Invitation | Acknowledge | TransactionOk | ConsensusRounds, Aborted) => true,
            _ => false,
        }
    }
}

/// Outcome of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    /// Fixed computation time plus the sum of per-phase maxima.
    pub elapsed_ms: f64,
    /// Phase trace, ending in `Committed` or `Aborted`.
    pub phases: Vec<ProtocolPhase>,
    pub committed: bool,
}

/// Simulates one timed protocol run from `initiator`.
///
/// All topology nodes participate. Each phase synchronizes on its slowest
/// message: invitations fan out from the initiator, acknowledgements and
/// hash confirmations fan back in, and every consensus round exchanges the
/// full `n(n-1)` directed messages. A run aborts (without timing the
/// consensus rounds) when the network cannot seat the quorum's vote
/// threshold.
pub fn simulate_protocol_run<R: Rng + ?Sized>(
    topology: &ClusterTopology,
    model: &LinkDelayModel,
    max_intermediate: usize,
    initiator: NodeId,
    spec: &QuorumSpec,
    rounds: usize,
    xi_ms: f64,
    rng: &mut R,
) -> Result<ProtocolRun, ProtocolError> {
    if !topology.contains(initiator) {
        return Err(ProtocolError::Topology(TopologyError::UnknownNode(
            initiator.0,
        )));
    }
    if !(xi_ms >= 0.0) {
        return Err(ProtocolError::NegativeXi);
    }

    let participants: Vec<NodeId> = topology.nodes().filter(|&n| n != initiator).collect();
    let mut phases = Vec::with_capacity(rounds.min(1) + 4);
    let mut elapsed = xi_ms;

    // fan-out / fan-in phases, each gated by its slowest message
    for (phase, fan_out) in [
        (ProtocolPhase::Invitation, true),
        (ProtocolPhase::Acknowledge, false),
        (ProtocolPhase::TransactionOk, false),
    ] {
        let mut slowest = 0.0f64;
        for &node in &participants {
            let (src, dst) = if fan_out {
                (initiator, node)
            } else {
                (node, initiator)
            };
            let d = message_delay(topology, model, max_intermediate, src, dst, rng)?;
            slowest = slowest.max(d);
        }
        elapsed += slowest;
        phases.push(phase);
    }

    let committed = topology.node_count() >= spec.validation_threshold();
    if !committed {
        phases.push(ProtocolPhase::Aborted);
        return Ok(ProtocolRun {
            elapsed_ms: elapsed,
            phases,
            committed,
        });
    }

    if rounds > 0 {
        phases.push(ProtocolPhase::ConsensusRounds);
        let nodes: Vec<NodeId> = topology.nodes().collect();
        for _ in 0..rounds {
            let mut slowest = 0.0f64;
            for &src in &nodes {
                for &dst in &nodes {
                    if src != dst {
                        let d = message_delay(topology, model, max_intermediate, src, dst, rng)?;
                        slowest = slowest.max(d);
                    }
                }
            }
            elapsed += slowest;
        }
    }

    phases.push(ProtocolPhase::Committed);
    Ok(ProtocolRun {
        elapsed_ms: elapsed,
        phases,
        committed,
    })
}
