//! Truncated Fock-space simulation of cross-Kerr cat-state generation and its
//! continuous-variable entanglement diagnostics.
//!
//! The crate is layered bottom-up:
//! - [`fock`]: multi-mode truncated Fock spaces, pure states, density operators.
//! - [`linalg`]: dense complex matrix helpers (matrix exponential, Hermitian checks).
//! - [`optics`]: ladder operators, displacement, beam splitters, cross-Kerr
//!   unitaries, photon loss, and the beam-splitter rotation device.
//! - [`atomic`]: effective non-Hermitian level Hamiltonians, eigenvalue
//!   continuation, and the susceptibility / Kerr-rate formulas they feed.
//! - [`measure`]: homodyne quadrature statistics, the Duan total-variance
//!   functional, on/off detector POVMs, and coincidence probabilities.
//! - [`protocol`]: end-to-end pipelines (conditional cat generation, entangled
//!   coherent state preparation, rotation-coincidence interference).

pub mod atomic;
pub mod fock;
pub mod linalg;
pub mod measure;
pub mod optics;
pub mod protocol;
