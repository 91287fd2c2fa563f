//! Cross-border data governance simulator.
//!
//! Models jurisdictions and regulation regimes as declarative rule tables,
//! plans policy-compliant routes over a multi-region graph, protects
//! payloads with jurisdiction-escrowed layered encryption, commits every
//! transfer decision to a Merkle-backed audit log, and serves a synthetic
//! memorizing model behind jurisdiction-aware inference-time differential
//! privacy. A scenario engine wires the pieces together with executable
//! adversaries and reproduces the interception, extraction and compliance
//! experiments across four architecture variants.

pub mod adversary;
pub mod audit;
pub mod config;
pub mod crypto;
pub mod policy;
pub mod privacy;
pub mod report;
pub mod routing;
pub mod scalar;
pub mod sim;

pub use scalar::{real, Real};

/// Default working scalar for the numeric core.
pub type Scalar = f64;

/// Region graph over the default scalar.
pub type Graph = routing::RegionGraph<Scalar>;
/// Planned route over the default scalar.
pub type PlannedRoute = routing::Route<Scalar>;
/// Privacy budget over the default scalar.
pub type Budget = privacy::PrivacyBudget<Scalar>;
