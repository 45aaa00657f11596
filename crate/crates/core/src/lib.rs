//! Numerical monodromy of integrable Hamiltonian systems.
//!
//! The crate computes the invariants that detect obstructions to global
//! action-angle coordinates in two-degree-of-freedom integrable systems:
//!
//! * classical (Hamiltonian) monodromy along loops of regular values, by
//!   rotation-number variation and independently by circle-action
//!   fixed-point counting, plus the Chern-number sequence of energy levels;
//! * quantum monodromy, via joint spectra and Bohr-Sommerfeld lattices with
//!   elementary-cell transport;
//! * fractional monodromy of the 1:(-2) resonance, via isotropy census,
//!   the Euler-number weight formula and a quotient rotation pipeline;
//! * scattering monodromy of a planar repulsive system, via deflection
//!   angles, radial action differences and the scattering map.
//!
//! Every headline matrix is produced by at least two independent routes
//! that are cross-checked in the test suites.

pub mod error;
pub mod flow;
pub mod fractional;
pub mod lattice;
pub mod monodromy;
pub mod quadrature;
pub mod rational;
pub mod report;
pub mod scattering;
pub mod systems;
pub mod tridiag;

pub use error::{Error, Result};
pub use rational::{rat, Mat2, Rat};
pub use systems::{EmValue, State, System, SystemId};
