//! Reduced Kähler-Ricci flow on the P1-bundles M_{n,k} under the U(n)-invariant
//! Calabi ansatz.
//!
//! A U(n)-invariant Kähler metric is `i∂∂̄P(ρ)` with `ρ = log|z|²`; the flow is
//! carried by the momentum profile `φ = P′`. The crate integrates the reduced flow
//! up to the contraction of the zero section, continues it on the weighted
//! projective orbifold, runs the ε-regularized families, and measures the
//! metric estimates along the way.
//!
//! Squared lengths follow `|v|² = 2·Σ G_{ij̄} vⁱ v̄ʲ` with `G` the raw complex
//! Hessian of the potential.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calabi;
pub mod error;
pub mod estimates;
pub mod flow;
pub mod local_model;
pub mod metric;
pub mod numerics;
pub mod runner;

pub use calabi::{FlowParams, Grid, KahlerClass, Phase, RadialProfile};
pub use error::{KrfError, Result};
pub use flow::{FlowState, FlowTrajectory, Scheme, SolverConfig};
