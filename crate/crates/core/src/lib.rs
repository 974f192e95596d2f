//! Communication-aware scheduling of quantum jobs on modular platforms.
//!
//! Jobs are expanded into fragments per communication regime (independent
//! local cuts, classically coupled cuts, or quantum-linked parts), packed into
//! parallel groups per module, timed against link and precedence constraints,
//! and replayed in a deterministic discrete-event simulator.

pub mod cost;
pub mod metrics;
pub mod model;
pub mod partition;
pub mod scheduler;
pub mod sim;
pub mod workload;

pub use model::*;
