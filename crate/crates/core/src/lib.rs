//! Stochastic simulation of noisy quantum circuits on decision diagrams.
//!
//! Each simulation run starts from |0...0>, applies the circuit gate by gate
//! and, after every gate, fires depolarizing, amplitude-damping and
//! phase-flip errors with their physical probabilities. The final state of a
//! run is one sample from the noisy output ensemble. Quadratic properties
//! `|<w|psi>|^2` (basis-outcome probabilities, fidelities) are estimated by
//! averaging over independent runs, which are spread across worker threads
//! with deterministic seeding.
//!
//! Modules:
//! - [`dd`]: decision-diagram package (states, operators, arithmetic, sampling)
//! - [`circuit`]: circuit IR, GHZ/QFT generators, OpenQASM 2.0 parser
//! - [`noise`]: the three error channels and their insertion policy
//! - [`sampler`]: run sizing, concurrent ensembles, aggregation
//! - [`oracle`]: dense state-vector reference used for verification
//! - [`report`]: JSON/CSV result documents
//!
//! Qubit `q0` is always the most significant bit of a basis-state index, and
//! bitstrings are written with q0 first.

pub mod circuit;
pub mod dd;
pub mod error;
pub mod noise;
pub mod oracle;
pub mod report;
pub mod sampler;

pub use error::{Error, Result};
