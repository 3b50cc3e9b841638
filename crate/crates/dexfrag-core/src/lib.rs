//! Core model of a distributed exchange spanning two geographic miner
//! clusters.
//!
//! The crate has two halves that meet in the speed ratio `pi`:
//!
//! * [`econ`]: closed-form miner economics, with win probabilities, expected
//!   profits under a single shared ledger versus per-region ledgers, and the
//!   adoption decision that determines whether the exchange stays unified.
//! * [`topology`], [`delay`], [`stats`], [`monte_carlo`]: a two-cluster
//!   unstructured peer-to-peer network simulator that produces message-delay
//!   distributions and Monte Carlo estimates of per-node winning
//!   probabilities, an empirical counterpart of `pi`.
//!
//! [`regression`] links the simulated winning probabilities to cluster
//! distance and asymmetry, and [`protocol`] models the consensus message
//! sequence on top of the same delay model.
//!
//! The crate is `no_std` (with `alloc`); all IO, file formats and the CLI
//! live in the companion `dexfrag` crate. Every sampling operation takes an
//! explicit random stream derived from a [`stream::StreamKey`], so results
//! are reproducible and independent of worker count.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod delay;
pub mod econ;
pub mod monte_carlo;
pub mod protocol;
pub mod regression;
pub mod stats;
pub mod stream;
pub mod topology;

pub use topology::Cluster;
