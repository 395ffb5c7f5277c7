//! Decentralized zero-order optimization over agent networks.
//!
//! Agents hold private objectives `f_i`, query only function values, and
//! exchange iterates with graph neighbours through a doubly stochastic
//! mixing matrix.

pub mod algorithms;
pub mod cli;
pub mod estimators;
pub mod harness;
pub mod network;
pub mod objectives;
pub mod rng;
pub mod stack;

pub use algorithms::{run, Kernel, Schedule};
pub use harness::{Trace, TraceRow, Verdict};
pub use network::{Graph, MixingMatrix};
pub use objectives::ObjectiveSuite;
pub use rng::RngStream;
pub use stack::AgentStack;
