//! Federated graph learning simulator.
//!
//! - [`graph`]: CSR graphs, homophily, normalization, label propagation, SBM generator.
//! - [`learn`]: GCN and MLP layers with hand-written backward passes, losses, Adam.
//! - [`partition`]: Louvain community split, balanced split with edge injection, sparsity knobs.
//! - [`fed`]: client workers, FedAvg and the round loop (the FedGCN baseline).
//! - [`adafgl`]: topology optimization, personalized propagation and HCS.
//! - [`io`]: on-disk graph and task formats, LINQS import.

pub mod adafgl;
pub mod error;
pub mod fed;
pub mod graph;
pub mod io;
pub mod learn;
pub mod matrix;
pub mod partition;

pub use error::{Error, Result};
