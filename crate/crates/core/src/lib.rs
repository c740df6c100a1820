//! Teleportation of a d-level system through an arbitrary pure shared state.
//!
//! The crate models a general teleportation protocol as a rank-one POVM on
//! Alice's side (written in the Schmidt basis of the shared state) followed by
//! per-outcome Kraus corrections on Bob's side. On top of that model it
//! provides exact and Monte-Carlo mean fidelities, the closed-form optimal
//! fidelity and estimation-fidelity bounds, a detector for the conditions
//! under which a measurement is optimal, and a random search over measurements
//! that checks the bound numerically.
//!
//! Modules, bottom-up:
//!
//! * [`qcore`]: states, operators, Schmidt decomposition, nuclear norm.
//! * [`haar`]: seeded RNG streams, unitarily invariant state sampling and the
//!   fourth-moment operators `M_kl`.
//! * [`protocol`]: measurements, corrections, the standard protocol,
//!   single-shot simulation and the JSON document format.
//! * [`fidelity`]: mean teleportation fidelity and its bound.
//! * [`estimation`]: Alice's outcome-conditioned state estimate.
//! * [`search`]: random POVMs and the brute-force bound check.

pub mod error;
pub mod estimation;
pub mod fidelity;
pub mod haar;
pub mod protocol;
pub mod qcore;
pub mod search;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use haar::{McEstimate, SeededRng};
pub use protocol::{AliceMeasurement, BobCorrections, Protocol, TeleportOutcome};
pub use qcore::{BipartiteVector, Operator, PureState, SchmidtDecomposition};

pub use num_complex::Complex64;
