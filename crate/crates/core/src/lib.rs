//! Multiscale gossip for decentralized averaging on random geometric graphs.
//!
//! The crate is organised bottom-up:
//!
//! * [`topology`] builds random geometric graphs and routes greedily between
//!   arbitrary points of the unit square.
//! * [`partition`] recursively splits the unit square into cells, elects
//!   representatives and wires them into overlay grids.
//! * [`gossip`] runs asynchronous pairwise gossip on physical or overlay
//!   graphs under a pluggable transport, charging every single-hop
//!   transmission to a [`ledger::TransmissionLedger`].
//! * [`multiscale`] orchestrates the hierarchical algorithm end to end.
//! * [`baselines`] implements path averaging and geographic gossip.
//! * [`theory`] evaluates the analytical cost and error predictions.
//! * [`harness`] drives seeded, multi-run experiments and writes CSV/JSON.
//!
//! With the default `parallel` feature, independent cells within a level and
//! independent rows within a sweep run on the rayon thread pool. Without it
//! every loop runs sequentially; results are bit-identical either way.

// Parameter checks use `!(x > 0.0)` on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod gossip;
pub mod harness;
pub mod ledger;
pub mod multiscale;
pub mod par;
pub mod partition;
pub mod rng;
pub mod theory;
pub mod topology;

pub use error::{Error, Result};
pub use gossip::{FailureModel, StoppingRule, ValueVector};
pub use ledger::TransmissionLedger;
pub use multiscale::{MultiscaleConfig, MultiscaleOutcome};
pub use topology::{GeoGraph, NodeId, Point, RoutePath};
