//! Quantum walks on glued binary trees with on-site disorder.
//!
//! Graph construction, Hamiltonian assembly, spectral localization
//! statistics, walk dynamics, the local-decay column model, scattering
//! transmission and the classical master-equation reference.

pub mod classical;
pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod hamiltonian;
pub mod localdecay;
pub mod numerics;
pub mod output;
pub mod runner;
pub mod scattering;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{Coord, Family, Gluing, Graph, Layout, Variant};
