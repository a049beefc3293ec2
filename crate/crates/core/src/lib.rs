//! Simulation-and-verification toolkit for the laws of the random time at
//! which a one-dimensional diffusion first exceeds its running maximum over
//! an initial interval, together with related arcsine-type functionals.
//!
//! The crate is organized as:
//!
//! - [`catalog`]: diffusion models, scale functions, conjugation maps to
//!   Brownian motion, time changes, and the built-in worked examples.
//! - [`laws`]: closed-form CDFs/PDFs (arctangent and arcsine laws, envelope
//!   bounds, the two-interval law, truncated means).
//! - [`pathsim`]: trajectory generation and path-functional extraction.
//! - [`stats`]: censoring-aware ECDFs and Kolmogorov-Smirnov distances.
//! - [`verify`]: the named end-to-end verification experiments driven by the
//!   CLI and the acceptance suite.

pub mod catalog;
pub mod interp;
pub mod laws;
pub mod pathsim;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod verify;
