//! Synchrony-breaking steady-state bifurcation analysis for coupled cell
//! networks with asymmetric inputs.
//!
//! A [`network::Network`] is a set of cells with one input map per coupling
//! type. [`synchrony`] enumerates its lattice of balanced partitions,
//! [`spectrum`] and [`classify`] attach the generic eigenvalue functions of
//! each quotient, and [`bifurcation`] predicts which synchrony subspaces carry
//! a bifurcating branch. [`reduction`] and [`numerics`] check those
//! predictions on sampled admissible systems. [`catalog`] bundles the
//! classified three-cell networks.
//!
//! The `parallel` feature (on by default) runs the data-parallel loops on
//! rayon; [`par::Exec`] selects the path at run time and results never depend
//! on it.

pub mod algebra;
pub mod error;
pub mod exact;
pub mod network;
pub mod par;
pub mod synchrony;
pub mod spectrum;
pub mod expr;
pub mod classify;
pub mod catalog;
pub mod reduction;
pub mod bifurcation;
pub mod numerics;
