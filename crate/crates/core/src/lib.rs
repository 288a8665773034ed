//! Pulse design and open-system simulation for one-step preparation of
//! qutrit (three-level) Bell and GHZ states with Rydberg atoms.
//!
//! Each atom carries two ground levels `|0⟩`, `|1⟩` and a Rydberg level
//! `|2⟩`. Doubly excited pairs are shifted by the interaction `V`. Choosing
//! the drive detunings so that only a chain of transitions stays resonant
//! reduces the dynamics to a five-level (Bell) or six-level (GHZ) ladder,
//! which is driven by symmetric Gaussian pulses.
//!
//! The crate is organised as:
//!
//! - [`qudit`]: tensor-product register and elementary operators
//! - [`pulse`]: Gaussian pulses, amplitude noise, GHZ bridge pulses
//! - [`hamiltonian`]: full, intermediate and effective Hamiltonians
//! - [`propagate`]: RK4 propagation of states, density matrices and the
//!   Lindblad master equation
//! - [`fidelity`]: target states with interaction phases and fidelities
//! - [`optimize`]: two-stage pulse optimizer (gradient, then genetic)
//! - [`scenario`]: named experiments, sweeps, Monte-Carlo noise studies and
//!   CSV/JSON export
//!
//! Units: `ħ = 1`, times in units of the total pulse duration `T`, all rates
//! and frequencies in units of `1/T`.

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fidelity;
pub mod hamiltonian;
pub mod optimize;
pub mod propagate;
pub mod pulse;
pub mod qudit;
pub mod scenario;

pub use error::{Error, Result};
pub use fidelity::{fidelity, fidelity_pure, target_vector, PhaseMode, TargetKind, TargetState};
pub use hamiltonian::{DetuningPlan, HamiltonianModel, ModelVariant};
pub use propagate::{
    propagate_lindblad, propagate_state, propagate_von_neumann, DecoherenceSpec,
    DensityTrajectory, IntegratorConfig, StateTrajectory,
};
pub use pulse::{GaussianPulse, NoiseSpec, PulseChannel, PulseParameterSet, PulseRef};
pub use qudit::QuditRegister;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix (row-major).
pub type ComplexMatrix = ndarray::Array2<C64>;
/// Dense complex vector.
pub type ComplexVector = ndarray::Array1<C64>;
