//! Desk-scale laboratory for learned scheduling of DAG-structured jobs on an
//! executor cluster.
//!
//! The crate is organised bottom-up:
//!
//! * [`workload`]: job DAGs, synthetic generators, trace files, task durations.
//! * [`simenv`]: the discrete-event cluster simulator the schedulers drive.
//! * [`heuristics`]: classical baseline schedulers and the exhaustive-search oracle.
//! * [`nn`]: small dense networks with hand-written backward passes.
//! * [`gnn`]: message-passing graph embeddings over job DAGs.
//! * [`policy`]: node/limit/class score heads and the masked action distributions.
//! * [`training`]: REINFORCE with input-dependent baselines and curriculum.
//! * [`cli`]: experiment runner behind the `dagsched` binary.

pub mod cli;
pub mod error;
pub mod gnn;
pub mod heuristics;
pub mod nn;
pub mod policy;
pub mod rng;
pub mod simenv;
pub mod training;
pub mod util;
pub mod workload;

pub use error::{Error, Result};
