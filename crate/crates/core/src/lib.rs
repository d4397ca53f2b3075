//! Sandwich coupling of a random regular graph between two binomial random graphs.
//!
//! The crate is organized bottom-up:
//!
//! * [`graph`]: simple graphs, multigraphs, degree sequences, the edge-list format.
//! * [`sampling`]: seeded streams, `G(n,p)`, uniform edges, Poisson counts, t-factors.
//! * [`edgeprob`]: conditional edge probabilities and η tables.
//! * [`coupling`]: the sequential three-graph coupling with its IndSample fallback.
//! * [`params`]: closed-form μ, ζ and the two-case parameter selection.
//! * [`scheme`]: the two-stage pipeline assembling `(G^L, G, G^U)`.
//! * [`verify`]: chi-square, edge-margin and independence checks.

pub mod coupling;
pub mod edgeprob;
pub mod graph;
pub mod params;
pub mod sampling;
pub mod scheme;
pub mod verify;

pub use graph::{DegreeSequence, Edge, HostedFactorSpec, MultiGraph, SimpleGraph};
pub use sampling::RngStream;
