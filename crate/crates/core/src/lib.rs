//! Simulation and analysis of a secret-sharing relay across a chain of cities
//! whose relay nodes are randomly compromised.
//!
//! - [`topology`]: the network, compromise patterns and the cut predicate.
//! - [`relay`]: the share re-randomization protocol, adversary view and key reconstruction.
//! - [`verification`]: the key-confirmation exchange and attacks on it.
//! - [`analysis`]: security bound, exact and Monte Carlo probabilities, dimensioning.

pub mod analysis;
pub mod bits;
pub mod error;
pub mod relay;
pub mod rng;
pub mod topology;
pub mod verification;

pub use bits::ShareString;
pub use error::Error;
pub use relay::{
    adversary_reconstruct, extract_view, run_relay, AdversaryView, RunOutcome, TamperPlan,
    Transcript,
};
pub use topology::{
    build_network, has_cut, CompromiseModel, CompromisePattern, NetworkSpec, NodeAddress,
};
