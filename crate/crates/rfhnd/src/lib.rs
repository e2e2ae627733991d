//! Curvature-guided diffusion on weighted hypergraphs.
//!
//! The crate is organized around the pipeline it implements:
//!
//! * [`hypergraph`] — immutable incidence structure, degrees, dataset I/O.
//! * [`curvature`] — Forman and Ollivier hyperedge curvature, including an
//!   exact 1-Wasserstein transportation solver.
//! * [`flow`] — attribute-coupled hyperedge weights, Dirichlet energy,
//!   discrete Ricci flow on the weights, and the energy/convergence
//!   certificates attached to a flow trajectory.
//! * [`diffusion`] — the curvature-modulated feature dynamics: closed-form
//!   aggregation weights, sparse operator assembly, a stability-bounded
//!   explicit Euler stepper.
//! * [`neural`] — a minimal reverse-mode tape, the hypernetwork that learns
//!   aggregation weights, and the node-classification training loop.
//! * [`synthgen`] — contextual hypergraph SBM generation and noise protocols.
//! * [`suites`] — the experiment drivers behind the CLI subcommands.

pub mod curvature;
pub mod diffusion;
pub mod flow;
pub mod hypergraph;
pub mod neural;
pub mod suites;
pub mod synthgen;

mod error;

pub use error::{Error, Result};
