//! Simulation and verification tools for surjective and reversible cellular
//! automata perturbed by positive additive noise.
//!
//! The crate covers the deterministic automata themselves ([`rules`],
//! [`analysis`]), the noise channels ([`noise`]), exact evolution of window
//! laws ([`exact`]), Monte Carlo sampling on tori ([`montecarlo`]), the
//! entropy and mixing bounds ([`theory`]), noisy reversible circuits
//! ([`finite`]) and a batch experiment runner ([`experiment`]).

pub mod analysis;
pub mod entropy;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod finite;
pub mod lattice;
pub mod montecarlo;
pub mod noise;
pub mod rng;
pub mod rules;
pub mod theory;

pub use error::{Error, Result};
pub use lattice::{Alphabet, Cell, CellSet, Symbol, Window};
pub use noise::NoiseModel;
pub use rules::{apply_rule, LocalRule, TorusConfiguration};
