//! Target states and fidelities.
//!
//! The targets are `(|0…0⟩ + |1…1⟩ + e^{−iφ(t)}|2…2⟩)/√3`. In the raw mode
//! `φ = 0`; in the interaction-phase mode `φ(t) = E·t` where `E` is the pair
//! shift of the all-Rydberg state (`V` for two atoms, `3V` for three), the
//! phase the full models accumulate in their interaction picture.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::HamiltonianModel;
use crate::qudit::QuditRegister;
use crate::{ComplexMatrix, ComplexVector, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetKind {
    Bell3D,
    Ghz3D,
}

impl TargetKind {
    pub fn n_atoms(self) -> usize {
        match self {
            TargetKind::Bell3D => 2,
            TargetKind::Ghz3D => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseMode {
    Raw,
    InteractionPhase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    pub kind: TargetKind,
    pub mode: PhaseMode,
    /// Pair interaction `V`.
    pub interaction: f64,
    /// Labels of the space the target lives in (full register or chain).
    basis: Vec<Vec<u8>>,
}

impl TargetState {
    /// Target in the full `3^N`-dimensional register.
    pub fn full(kind: TargetKind, mode: PhaseMode, interaction: f64) -> Self {
        let register = QuditRegister::new(kind.n_atoms()).expect("2 or 3 atoms");
        Self {
            kind,
            mode,
            interaction,
            basis: register.basis_labels(),
        }
    }

    /// Target expressed in the basis of `model`. Chain models carry no pair
    /// shift, so both modes coincide there.
    pub fn for_model(model: &HamiltonianModel, mode: PhaseMode) -> Self {
        let kind = if model.variant().is_bell() {
            TargetKind::Bell3D
        } else {
            TargetKind::Ghz3D
        };
        Self {
            kind,
            mode,
            interaction: model.interaction(),
            basis: model.basis().to_vec(),
        }
    }

    pub fn basis(&self) -> &[Vec<u8>] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Indices of `|0…0⟩`, `|1…1⟩`, `|2…2⟩`.
    pub fn component_indices(&self) -> Result<[usize; 3]> {
        let n = self.kind.n_atoms();
        let mut out = [0; 3];
        for (level, slot) in out.iter_mut().enumerate() {
            let labels = vec![level as u8; n];
            *slot = self
                .basis
                .iter()
                .position(|l| *l == labels)
                .ok_or_else(|| Error::config(format!("basis lacks the target component {labels:?}")))?;
        }
        Ok(out)
    }

    /// Energy of the all-Rydberg component, `V·N(N−1)/2`.
    pub fn rydberg_energy(&self) -> f64 {
        let n = self.kind.n_atoms() as f64;
        self.interaction * n * (n - 1.0) / 2.0
    }

    pub fn phase_factor(&self, t: f64) -> C64 {
        match self.mode {
            PhaseMode::Raw => C64::new(1.0, 0.0),
            PhaseMode::InteractionPhase => C64::from_polar(1.0, -self.rydberg_energy() * t),
        }
    }
}

/// Normalized target vector at time `t`.
pub fn target_vector(target: &TargetState, t: f64) -> Result<ComplexVector> {
    let [a, b, c] = target.component_indices()?;
    let amp = 1.0 / 3f64.sqrt();
    let mut v = Array1::zeros(target.dim());
    v[a] = C64::new(amp, 0.0);
    v[b] = C64::new(amp, 0.0);
    v[c] = target.phase_factor(t) * amp;
    Ok(v)
}

/// `⟨ψ|ρ|ψ⟩`, unclamped (see [`clamp_fidelity`]).
pub fn fidelity(rho: &ComplexMatrix, target: &TargetState, t: f64) -> Result<f64> {
    if rho.nrows() != target.dim() || rho.ncols() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: rho.nrows(),
        });
    }
    let psi = target_vector(target, t)?;
    let idx = target.component_indices()?;
    // ψ has three nonzero entries
    let mut acc = C64::new(0.0, 0.0);
    for &i in &idx {
        for &j in &idx {
            acc += psi[i].conj() * rho[[i, j]] * psi[j];
        }
    }
    Ok(acc.re)
}

/// `|⟨ψ|φ⟩|²`
pub fn fidelity_pure(state: &ComplexVector, target: &TargetState, t: f64) -> Result<f64> {
    if state.len() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: state.len(),
        });
    }
    let psi = target_vector(target, t)?;
    let overlap: C64 = psi.iter().zip(state).map(|(a, b)| a.conj() * b).sum();
    Ok(overlap.norm_sqr())
}

/// Clamps a fidelity into `[0, 1]` for reporting.
pub fn clamp_fidelity(f: f64) -> f64 {
    f.clamp(0.0, 1.0)
}

/// Populations of `|0…0⟩`, `|1…1⟩`, `|2…2⟩`.
pub fn target_populations_density(rho: &ComplexMatrix, target: &TargetState) -> Result<[f64; 3]> {
    let idx = target.component_indices()?;
    Ok(idx.map(|i| rho[[i, i]].re))
}

pub fn target_populations_state(psi: &ComplexVector, target: &TargetState) -> Result<[f64; 3]> {
    let idx = target.component_indices()?;
    Ok(idx.map(|i| psi[i].norm_sqr()))
}

/// Places chain amplitudes at their labels in the full register.
pub fn chain_embedding(
    state: &ComplexVector,
    chain_basis: &[Vec<u8>],
    register: &QuditRegister,
) -> Result<ComplexVector> {
    if state.len() != chain_basis.len() {
        return Err(Error::DimensionMismatch {
            expected: chain_basis.len(),
            got: state.len(),
        });
    }
    let mut full = Array1::zeros(register.dim());
    for (amp, labels) in state.iter().zip(chain_basis) {
        full[register.basis_index(labels)?] = *amp;
    }
    Ok(full)
}

/// Restriction of a full-register state to the chain labels.
pub fn chain_projection(
    state: &ComplexVector,
    chain_basis: &[Vec<u8>],
    register: &QuditRegister,
) -> Result<ComplexVector> {
    if state.len() != register.dim() {
        return Err(Error::DimensionMismatch {
            expected: register.dim(),
            got: state.len(),
        });
    }
    chain_basis
        .iter()
        .map(|labels| Ok(state[register.basis_index(labels)?]))
        .collect::<Result<Vec<_>>>()
        .map(Array1::from)
}
