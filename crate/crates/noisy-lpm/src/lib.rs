//! Latent position models with exact and grid-approximated MCMC inference.
//!
//! A latent position model (LPM) places every node of an observed network at
//! an unobserved point in the plane and connects pairs of nodes independently
//! with a probability that decays with their latent distance. Bayesian
//! inference with Metropolis-within-Gibbs costs O(N²) per sweep, which caps
//! the model at a few hundred nodes.
//!
//! This crate also implements the noisy variant of that sampler: the latent
//! square is partitioned into an M×M grid of boxes, and the distance from a
//! node to any other node is replaced by the distance to the centre of the
//! box containing it. The per-box edge and non-edge counts are maintained
//! incrementally, so a position update costs O(degree + #non-empty boxes)
//! instead of O(N), and the whole sweep becomes linear in N for a fixed grid.
//! The error this approximation injects into the acceptance probabilities and
//! into the invariant distribution of the chain admits closed-form bounds,
//! which the [`bounds`] module computes and empirically certifies.
//!
//! Module map:
//! - [`graph`]: immutable undirected binary networks and edge-list ingestion.
//! - [`model`]: link functions, bounded parameter spaces, priors, proposals.
//! - [`grid`]: the box grid with incrementally maintained occupancy counts.
//! - [`likelihood`]: exact and noisy log-likelihoods and ratio kernels.
//! - [`sampler`]: the exact and noisy Metropolis-within-Gibbs samplers.
//! - [`align`]: Procrustes post-processing of posterior draws.
//! - [`bounds`]: approximation-error constants, bounds, and certificates.
//! - [`synth`]: synthetic network generation for the simulation studies.

pub mod align;
pub mod bounds;
pub mod error;
pub mod graph;
pub mod grid;
pub mod likelihood;
pub mod model;
pub mod sampler;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
