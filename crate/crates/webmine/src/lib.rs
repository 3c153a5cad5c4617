//! Web usage mining toolkit.
//!
//! The crate covers the reactive web-usage-mining pipeline end to end:
//!
//! * [`clf`] — Common Log Format ingestion into per-user request streams.
//! * [`topology`] — the directed hyperlink graph of a site, plus a seeded
//!   random-topology generator for simulation studies.
//! * [`simulator`] — a web-user agent simulator that emits ground-truth
//!   sessions together with the cache-censored log a server would record.
//! * [`reconstruct`] — four sessionization heuristics (TO1, TO2,
//!   navigation-oriented, Smart-SRA).
//! * [`miner`] — maximal frequent navigation patterns via a topology-pruned
//!   sequential apriori.
//! * [`eval`] — session and pattern accuracy against simulator ground truth.
//! * [`runner`] — seeded experiment sweeps producing figure-ready CSV tables.

pub mod clf;
pub mod eval;
pub mod miner;
pub mod page;
pub mod reconstruct;
pub mod runner;
pub mod session;
pub mod simulator;
pub mod topology;

pub(crate) mod seeds;

#[cfg(test)]
pub(crate) mod testutil;

pub use page::PageId;

/// Seconds since the Unix epoch, UTC. All timestamps in the toolkit are
/// normalized to this so threshold arithmetic is deterministic.
pub type Timestamp = i64;
