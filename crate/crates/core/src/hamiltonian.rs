//! Time-dependent Hamiltonians for the Bell and GHZ schemes.
//!
//! All five variants share one representation: a static real diagonal plus
//! a list of drive terms. A drive term carries a pulse, an optional
//! modulation, a detuning and a sparsity pattern of `(row, col)` pairs; it
//! contributes `c(t)·|row⟩⟨col| + h.c.` for each pair with
//! `c(t) = Ω(t)·m(t)·e^{−iδt}`.
//!
//! Full models live in the interaction picture of the bare drive terms with
//! the pair shifts kept on the diagonal. Effective and intermediate models
//! are the resonant chains left after the fast terms are dropped; their
//! bases are listed by [`HamiltonianModel::basis`].

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::pulse::{ghz_bridge_pulses, PulseParameterSet, PulseRef};
use crate::qudit::{QuditRegister, RYDBERG};
use crate::{ComplexMatrix, Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    BellFull,
    BellEffective,
    GhzFull,
    GhzIntermediate,
    GhzEffective,
}

impl ModelVariant {
    pub fn dim(self) -> usize {
        match self {
            ModelVariant::BellFull => 9,
            ModelVariant::BellEffective => 5,
            ModelVariant::GhzFull => 27,
            ModelVariant::GhzIntermediate => 8,
            ModelVariant::GhzEffective => 6,
        }
    }

    pub fn n_atoms(self) -> usize {
        match self {
            ModelVariant::BellFull | ModelVariant::BellEffective => 2,
            _ => 3,
        }
    }

    pub fn is_full(self) -> bool {
        matches!(self, ModelVariant::BellFull | ModelVariant::GhzFull)
    }

    pub fn is_bell(self) -> bool {
        self.n_atoms() == 2
    }

    /// Number of Gaussian pulse channels the variant is driven by.
    pub fn channel_count(self) -> usize {
        if self.is_bell() {
            4
        } else {
            5
        }
    }
}

/// Drive detunings `δ_kj` for atom `k` (1-based) and lower level `j ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetuningPlan {
    detunings: Vec<[f64; 2]>,
}

impl DetuningPlan {
    pub fn from_table(detunings: Vec<[f64; 2]>) -> Self {
        Self { detunings }
    }

    /// `δ₁₀ = δ₂₁ = 0`, `δ₂₀ = δ₁₁ = V`.
    pub fn bell(v: f64) -> Self {
        Self {
            detunings: vec![[0.0, v], [v, 0.0]],
        }
    }

    /// `δ₁₀ = δ₃₁ = 0`, `δ₂₀ = δ₁₁ = V`, `δ₃₀ = δ₂₁ = 2V`.
    pub fn ghz(v: f64) -> Self {
        Self {
            detunings: vec![[0.0, v], [v, 2.0 * v], [2.0 * v, 0.0]],
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.detunings.len()
    }

    pub fn get(&self, atom: usize, lower: u8) -> Result<f64> {
        self.detunings
            .get(atom.wrapping_sub(1))
            .and_then(|row| row.get(lower as usize))
            .copied()
            .ok_or(Error::AtomOutOfRange {
                atom,
                n_atoms: self.detunings.len(),
            })
    }
}

/// Time modulation applied on top of a pulse envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Modulation {
    None,
    /// `cos(ωt)`
    Cos(f64),
    /// `i·sin(ωt)`
    ISin(f64),
}

impl Modulation {
    pub fn factor(self, t: f64) -> C64 {
        match self {
            Modulation::None => C64::new(1.0, 0.0),
            Modulation::Cos(w) => C64::new((w * t).cos(), 0.0),
            Modulation::ISin(w) => C64::new(0.0, (w * t).sin()),
        }
    }
}

pub struct DriveTerm {
    pub label: &'static str,
    pub pulse: PulseRef,
    pub modulation: Modulation,
    pub detuning: f64,
    pub pattern: Vec<(usize, usize)>,
}

impl DriveTerm {
    pub fn coefficient(&self, t: f64) -> C64 {
        let carrier = if self.detuning == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            C64::from_polar(1.0, -self.detuning * t)
        };
        self.pulse.value(t) * self.modulation.factor(t) * carrier
    }
}

impl fmt::Debug for DriveTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DriveTerm")
            .field("label", &self.label)
            .field("modulation", &self.modulation)
            .field("detuning", &self.detuning)
            .field("pattern", &self.pattern)
            .finish()
    }
}

/// Physical drives of the three-atom scheme. `omega20` and `omega30` are the
/// unmodulated envelopes; the model applies `cos ωt` and `i·sin ωt`.
#[derive(Debug, Clone)]
pub struct GhzDrives {
    pub omega10: PulseRef,
    pub omega20: PulseRef,
    pub omega30: PulseRef,
    pub omega11: PulseRef,
    pub omega21: PulseRef,
    pub omega31: PulseRef,
}

impl GhzDrives {
    /// Maps chain channels onto atoms: `Ω₁→Ω₁₀`, `Ω₃→Ω₂₁`, `Ω₄→Ω₁₁`,
    /// `Ω₅→Ω₃₁`; `Ω₂` is split into the bridge pair `Ω₂₀ = Ω₃₀`.
    pub fn from_chain(pulses: &[PulseRef], omega: f64) -> Result<Self> {
        check_channels(pulses, 5)?;
        let (omega20, omega30) = ghz_bridge_pulses(pulses[1].clone(), omega)?;
        Ok(Self {
            omega10: pulses[0].clone(),
            omega20,
            omega30,
            omega11: pulses[3].clone(),
            omega21: pulses[2].clone(),
            omega31: pulses[4].clone(),
        })
    }

    pub fn as_array(&self) -> [&PulseRef; 6] {
        [
            &self.omega10,
            &self.omega20,
            &self.omega30,
            &self.omega11,
            &self.omega21,
            &self.omega31,
        ]
    }

    /// Applies `f` to every physical drive.
    pub fn map<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &PulseRef) -> Result<PulseRef>,
    {
        Ok(Self {
            omega10: f(0, &self.omega10)?,
            omega20: f(1, &self.omega20)?,
            omega30: f(2, &self.omega30)?,
            omega11: f(3, &self.omega11)?,
            omega21: f(4, &self.omega21)?,
            omega31: f(5, &self.omega31)?,
        })
    }
}

fn check_channels(pulses: &[PulseRef], expected: usize) -> Result<()> {
    if pulses.len() != expected {
        return Err(Error::config(format!(
            "model needs {expected} pulse channels, got {}",
            pulses.len()
        )));
    }
    Ok(())
}

#[derive(Debug)]
pub struct HamiltonianModel {
    variant: ModelVariant,
    basis: Vec<Vec<u8>>,
    register: Option<QuditRegister>,
    diagonal: Vec<f64>,
    terms: Vec<DriveTerm>,
    interaction: f64,
    omega: Option<f64>,
    plan: Option<DetuningPlan>,
    total_time: f64,
}

const BELL_CHAIN: [[u8; 2]; 5] = [[0, 0], [2, 0], [2, 2], [1, 2], [1, 1]];
const GHZ_INTERMEDIATE_CHAIN: [[u8; 3]; 8] = [
    [0, 0, 0],
    [2, 0, 0],
    [2, 2, 0],
    [1, 2, 0],
    [2, 2, 2],
    [2, 1, 2],
    [1, 1, 2],
    [1, 1, 1],
];
const GHZ_CHAIN: [[u8; 3]; 6] = [
    [0, 0, 0],
    [2, 0, 0],
    [2, 2, 2],
    [2, 1, 2],
    [1, 1, 2],
    [1, 1, 1],
];

impl HamiltonianModel {
    /// Builds any variant from Gaussian pulse parameters. `v` is ignored by
    /// the chain variants and `omega` is required by the GHZ variants that
    /// contain the bridge drives.
    pub fn from_params(
        variant: ModelVariant,
        params: &PulseParameterSet,
        v: f64,
        omega: Option<f64>,
    ) -> Result<Self> {
        params.validate()?;
        let pulses = params.pulses();
        let total = params.total_time;
        let need_omega = || omega.ok_or_else(|| Error::config("GHZ bridge needs a modulation frequency ω"));
        match variant {
            ModelVariant::BellFull => Self::bell_full(&pulses, v, &DetuningPlan::bell(v), total),
            ModelVariant::BellEffective => Self::bell_effective(&pulses, total),
            ModelVariant::GhzFull => Self::ghz_full(&pulses, v, need_omega()?, &DetuningPlan::ghz(v), total),
            ModelVariant::GhzIntermediate => Self::ghz_intermediate(&pulses, need_omega()?, total),
            ModelVariant::GhzEffective => Self::ghz_effective(&pulses, total),
        }
    }

    /// Two-atom interaction-picture Hamiltonian with channel mapping
    /// `Ω₁→Ω₁₀`, `Ω₂→Ω₂₀`, `Ω₃→Ω₁₁`, `Ω₄→Ω₂₁`.
    pub fn bell_full(pulses: &[PulseRef], v: f64, plan: &DetuningPlan, total_time: f64) -> Result<Self> {
        check_channels(pulses, 4)?;
        let register = QuditRegister::two_atoms();
        let channels = [
            ("Omega10", 1, 0u8, &pulses[0]),
            ("Omega20", 2, 0, &pulses[1]),
            ("Omega11", 1, 1, &pulses[2]),
            ("Omega21", 2, 1, &pulses[3]),
        ];
        let mut terms = Vec::with_capacity(4);
        for (label, atom, lower, pulse) in channels {
            terms.push(Self::atomic_term(
                &register,
                label,
                atom,
                lower,
                pulse.clone(),
                Modulation::None,
                plan,
            )?);
        }
        Self::full(ModelVariant::BellFull, register, terms, v, None, plan, total_time)
    }

    /// Three-atom interaction-picture Hamiltonian with the bridge drives
    /// derived from chain channel 2.
    pub fn ghz_full(
        pulses: &[PulseRef],
        v: f64,
        omega: f64,
        plan: &DetuningPlan,
        total_time: f64,
    ) -> Result<Self> {
        let drives = GhzDrives::from_chain(pulses, omega)?;
        Self::ghz_full_with_drives(&drives, v, omega, plan, total_time)
    }

    pub fn ghz_full_with_drives(
        drives: &GhzDrives,
        v: f64,
        omega: f64,
        plan: &DetuningPlan,
        total_time: f64,
    ) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::config("GHZ bridge needs a positive modulation frequency ω"));
        }
        let register = QuditRegister::three_atoms();
        let channels = [
            ("Omega10", 1, 0u8, &drives.omega10, Modulation::None),
            ("Omega20", 2, 0, &drives.omega20, Modulation::Cos(omega)),
            ("Omega30", 3, 0, &drives.omega30, Modulation::ISin(omega)),
            ("Omega11", 1, 1, &drives.omega11, Modulation::None),
            ("Omega21", 2, 1, &drives.omega21, Modulation::None),
            ("Omega31", 3, 1, &drives.omega31, Modulation::None),
        ];
        let mut terms = Vec::with_capacity(6);
        for (label, atom, lower, pulse, modulation) in channels {
            terms.push(Self::atomic_term(
                &register,
                label,
                atom,
                lower,
                pulse.clone(),
                modulation,
                plan,
            )?);
        }
        Self::full(ModelVariant::GhzFull, register, terms, v, Some(omega), plan, total_time)
    }

    /// Five-level chain `|00⟩–|20⟩–|22⟩–|12⟩–|11⟩`.
    pub fn bell_effective(pulses: &[PulseRef], total_time: f64) -> Result<Self> {
        check_channels(pulses, 4)?;
        let links = [
            ("Omega1", 1, 0, &pulses[0]),
            ("Omega2", 2, 1, &pulses[1]),
            ("Omega3", 2, 3, &pulses[2]),
            ("Omega4", 3, 4, &pulses[3]),
        ];
        Ok(Self::chain(
            ModelVariant::BellEffective,
            BELL_CHAIN.iter().map(|l| l.to_vec()).collect(),
            links
                .into_iter()
                .map(|(label, r, c, p)| Self::link(label, r, c, p.clone(), Modulation::None))
                .collect(),
            None,
            total_time,
        ))
    }

    /// Eight-level resonant structure before the bridge is eliminated:
    /// `|000⟩–|200⟩–|220⟩–|222⟩–|212⟩–|112⟩–|111⟩` with the side branch
    /// `|220⟩–|120⟩`. The last link is driven by `Ω₃₁` (channel 5).
    pub fn ghz_intermediate(pulses: &[PulseRef], omega: f64, total_time: f64) -> Result<Self> {
        check_channels(pulses, 5)?;
        let (omega20, omega30) = ghz_bridge_pulses(pulses[1].clone(), omega)?;
        let terms = vec![
            Self::link("Omega10", 1, 0, pulses[0].clone(), Modulation::None),
            Self::link("Omega20", 2, 1, omega20, Modulation::Cos(omega)),
            Self::link("Omega11", 2, 3, pulses[3].clone(), Modulation::None),
            Self::link("Omega30", 4, 2, omega30, Modulation::ISin(omega)),
            Self::link("Omega21", 4, 5, pulses[2].clone(), Modulation::None),
            Self::link("Omega11", 5, 6, pulses[3].clone(), Modulation::None),
            Self::link("Omega31", 6, 7, pulses[4].clone(), Modulation::None),
        ];
        Ok(Self::chain(
            ModelVariant::GhzIntermediate,
            GHZ_INTERMEDIATE_CHAIN.iter().map(|l| l.to_vec()).collect(),
            terms,
            Some(omega),
            total_time,
        ))
    }

    /// Six-level chain `|000⟩–|200⟩–|222⟩–|212⟩–|112⟩–|111⟩`.
    pub fn ghz_effective(pulses: &[PulseRef], total_time: f64) -> Result<Self> {
        check_channels(pulses, 5)?;
        let links = [
            ("Omega1", 1, 0, &pulses[0]),
            ("Omega2", 2, 1, &pulses[1]),
            ("Omega3", 2, 3, &pulses[2]),
            ("Omega4", 3, 4, &pulses[3]),
            ("Omega5", 4, 5, &pulses[4]),
        ];
        Ok(Self::chain(
            ModelVariant::GhzEffective,
            GHZ_CHAIN.iter().map(|l| l.to_vec()).collect(),
            links
                .into_iter()
                .map(|(label, r, c, p)| Self::link(label, r, c, p.clone(), Modulation::None))
                .collect(),
            None,
            total_time,
        ))
    }

    fn atomic_term(
        register: &QuditRegister,
        label: &'static str,
        atom: usize,
        lower: u8,
        pulse: PulseRef,
        modulation: Modulation,
        plan: &DetuningPlan,
    ) -> Result<DriveTerm> {
        let op = register.transition_operator(atom, RYDBERG, lower)?;
        let pattern = op
            .indexed_iter()
            .filter(|(_, z)| z.norm() != 0.0)
            .map(|(idx, _)| idx)
            .collect();
        Ok(DriveTerm {
            label,
            pulse,
            modulation,
            detuning: plan.get(atom, lower)?,
            pattern,
        })
    }

    fn link(label: &'static str, row: usize, col: usize, pulse: PulseRef, modulation: Modulation) -> DriveTerm {
        DriveTerm {
            label,
            pulse,
            modulation,
            detuning: 0.0,
            pattern: vec![(row, col)],
        }
    }

    fn full(
        variant: ModelVariant,
        register: QuditRegister,
        terms: Vec<DriveTerm>,
        v: f64,
        omega: Option<f64>,
        plan: &DetuningPlan,
        total_time: f64,
    ) -> Result<Self> {
        if !(v >= 0.0) {
            return Err(Error::config(format!("interaction strength must be >= 0, got {v}")));
        }
        if plan.n_atoms() != register.n_atoms() {
            return Err(Error::config("detuning plan does not match the register size"));
        }
        Ok(Self {
            variant,
            basis: register.basis_labels(),
            register: Some(register),
            diagonal: register.rydberg_shifts(v),
            terms,
            interaction: v,
            omega,
            plan: Some(plan.clone()),
            total_time,
        })
    }

    fn chain(
        variant: ModelVariant,
        basis: Vec<Vec<u8>>,
        terms: Vec<DriveTerm>,
        omega: Option<f64>,
        total_time: f64,
    ) -> Self {
        Self {
            variant,
            diagonal: vec![0.0; basis.len()],
            basis,
            register: None,
            terms,
            interaction: 0.0,
            omega,
            plan: None,
            total_time,
        }
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Atom labels of each basis state, in matrix index order.
    pub fn basis(&self) -> &[Vec<u8>] {
        &self.basis
    }

    /// Index of the basis state with the given labels, if present.
    pub fn index_of(&self, labels: &[u8]) -> Option<usize> {
        self.basis.iter().position(|l| l.as_slice() == labels)
    }

    /// Present for the full variants only.
    pub fn register(&self) -> Option<QuditRegister> {
        self.register
    }

    /// The pair shift `V` on the diagonal; zero for chain variants, whose
    /// frame already co-rotates with it.
    pub fn interaction(&self) -> f64 {
        self.interaction
    }

    pub fn omega(&self) -> Option<f64> {
        self.omega
    }

    pub fn detuning_plan(&self) -> Option<&DetuningPlan> {
        self.plan.as_ref()
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn terms(&self) -> &[DriveTerm] {
        &self.terms
    }

    /// Dense `H(t)`.
    pub fn evaluate(&self, t: f64) -> ComplexMatrix {
        let n = self.dim();
        let mut h = Array2::zeros((n, n));
        for (i, &d) in self.diagonal.iter().enumerate() {
            h[[i, i]] = C64::new(d, 0.0);
        }
        for term in &self.terms {
            let c = term.coefficient(t);
            for &(r, col) in &term.pattern {
                h[[r, col]] += c;
                h[[col, r]] += c.conj();
            }
        }
        h
    }

    /// Replaces the pulse channels of a model in place of a fresh build;
    /// used by the noise study to wrap every drive.
    pub fn map_pulses<F>(mut self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &PulseRef) -> Result<PulseRef>,
    {
        // Terms that share a pulse (the chain Ω₁₁ links) keep sharing the
        // same wrapped instance.
        let mut wrapped: Vec<(PulseRef, PulseRef)> = Vec::new();
        for term in &mut self.terms {
            if let Some((_, w)) = wrapped.iter().find(|(orig, _)| Arc::ptr_eq(orig, &term.pulse)) {
                term.pulse = w.clone();
                continue;
            }
            let w = f(wrapped.len(), &term.pulse)?;
            wrapped.push((term.pulse.clone(), w.clone()));
            term.pulse = w;
        }
        Ok(self)
    }
}

/// `max |H − H†|` over entries.
pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{GaussianPulse, PulseParameterSet, ZeroPulse, BELL_TABLE, GHZ_TABLE};
    use approx::assert_relative_eq;

    fn bell(v: f64) -> HamiltonianModel {
        HamiltonianModel::from_params(ModelVariant::BellFull, &PulseParameterSet::bell_table(), v, None).unwrap()
    }

    fn ghz(variant: ModelVariant) -> HamiltonianModel {
        HamiltonianModel::from_params(variant, &PulseParameterSet::ghz_table(), 4000.0, Some(200.0)).unwrap()
    }

    fn zero_pulses(n: usize) -> Vec<PulseRef> {
        (0..n).map(|_| Arc::new(ZeroPulse) as PulseRef).collect()
    }

    #[test]
    fn detuning_plans() {
        let plan = DetuningPlan::bell(200.0);
        assert_eq!(plan.get(1, 0).unwrap(), 0.0);
        assert_eq!(plan.get(2, 1).unwrap(), 0.0);
        assert_eq!(plan.get(2, 0).unwrap(), 200.0);
        assert_eq!(plan.get(1, 1).unwrap(), 200.0);
        assert!(plan.get(3, 0).is_err());
        let plan = DetuningPlan::ghz(5.0);
        assert_eq!(plan.get(1, 0).unwrap(), 0.0);
        assert_eq!(plan.get(3, 1).unwrap(), 0.0);
        assert_eq!(plan.get(2, 0).unwrap(), 5.0);
        assert_eq!(plan.get(1, 1).unwrap(), 5.0);
        assert_eq!(plan.get(3, 0).unwrap(), 10.0);
        assert_eq!(plan.get(2, 1).unwrap(), 10.0);
    }

    #[test]
    fn bell_full_examples() {
        let h = bell(200.0);
        assert_eq!(h.dim(), 9);
        let h0 = h.evaluate(0.0);
        for i in 0..9 {
            for j in 0..9 {
                let expected = if i == 8 && j == 8 { 200.0 } else { 0.0 };
                assert!((h0[[i, j]] - C64::new(expected, 0.0)).norm() < 1e-14);
            }
        }
        let hm = h.evaluate(0.5);
        assert_eq!(hm[[8, 8]].re, 200.0);
        let r = QuditRegister::two_atoms();
        let z = hm[[r.basis_index(&[2, 0]).unwrap(), r.basis_index(&[0, 0]).unwrap()]];
        assert_relative_eq!(z.re, 2.94874, epsilon = 1e-12);
        assert!(z.im.abs() < 1e-14);
        assert!(matches!(
            HamiltonianModel::bell_full(&zero_pulses(3), 1.0, &DetuningPlan::bell(1.0), 1.0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn bell_full_matches_dense_operator_sum() {
        let v = 200.0;
        let reg = QuditRegister::two_atoms();
        let plan = DetuningPlan::bell(v);
        let pulses = PulseParameterSet::bell_table().pulses();
        let model = bell(v);
        let map = [(1usize, 0u8), (2, 0), (1, 1), (2, 1)];
        for &t in &[0.1, 0.37, 0.5, 0.93] {
            let mut oracle = reg.rydberg_interaction(v).unwrap();
            for (k, &(atom, lower)) in map.iter().enumerate() {
                let op = reg.transition_operator(atom, 2, lower).unwrap();
                let c = pulses[k].value(t) * C64::from_polar(1.0, -plan.get(atom, lower).unwrap() * t);
                oracle = oracle + op.mapv(|z| z * c) + op.t().mapv(|z| z * c.conj());
            }
            let diff = (&model.evaluate(t) - &oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn bell_effective_examples() {
        let h = HamiltonianModel::from_params(ModelVariant::BellEffective, &PulseParameterSet::bell_table(), 0.0, None)
            .unwrap();
        assert!(h.evaluate(0.0).iter().all(|z| z.norm() < 1e-14));
        let z = h.evaluate(0.5)[[2, 1]];
        let expected = C64::from_polar(6.47073, 3.14148);
        assert!((z - expected).norm() < 1e-12);
        // orientation of the third link: |22⟩⟨12|
        let z = h.evaluate(0.5)[[2, 3]];
        assert!((z - C64::from_polar(BELL_TABLE[2].amplitude, BELL_TABLE[2].theta)).norm() < 1e-12);
        assert_eq!(h.basis()[3], vec![1, 2]);
    }

    #[test]
    fn hermiticity_at_random_times() {
        let models = [
            bell(200.0),
            HamiltonianModel::from_params(ModelVariant::BellEffective, &PulseParameterSet::bell_table(), 0.0, None)
                .unwrap(),
            ghz(ModelVariant::GhzFull),
            ghz(ModelVariant::GhzIntermediate),
            ghz(ModelVariant::GhzEffective),
        ];
        let mut t = 0.123_f64;
        for _ in 0..100 {
            t = (t * 7.31 + 0.417).fract();
            for m in &models {
                assert!(hermiticity_error(&m.evaluate(t)) < 1e-12);
            }
        }
    }

    #[test]
    fn ghz_full_examples() {
        let h = ghz(ModelVariant::GhzFull);
        let reg = QuditRegister::three_atoms();
        let top = reg.basis_index(&[2, 2, 2]).unwrap();
        assert_eq!(h.evaluate(0.4)[[top, top]].re, 12000.0);
        assert_eq!(h.interaction(), 4000.0);
        assert_eq!(h.omega(), Some(200.0));

        // cos(ωt) = 0 switches the Ω₂₀ term off.
        let t = std::f64::consts::FRAC_PI_2 / 200.0 * 61.0;
        let term = h.terms().iter().find(|d| d.label == "Omega20").unwrap();
        assert!(term.coefficient(t).norm() < 1e-12);
        let hm = h.evaluate(t);
        for &(r, c) in &term.pattern {
            // nothing else drives atom 2 from |0⟩ with these labels
            assert!(hm[[r, c]].norm() < 1e-9, "{r} {c}");
        }
        assert!(matches!(
            HamiltonianModel::from_params(ModelVariant::GhzFull, &PulseParameterSet::ghz_table(), 1.0, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ghz_full_structure() {
        let h = ghz(ModelVariant::GhzFull);
        let reg = QuditRegister::three_atoms();
        let m = h.evaluate(0.41);
        for i in 0..27 {
            for j in 0..27 {
                if i == j || m[[i, j]].norm() == 0.0 {
                    continue;
                }
                let a = reg.labels(i);
                let b = reg.labels(j);
                let differing: Vec<_> = (0..3).filter(|&k| a[k] != b[k]).collect();
                assert_eq!(differing.len(), 1);
                let k = differing[0];
                assert!(a[k] == 2 || b[k] == 2);
            }
        }
    }

    #[test]
    fn ghz_intermediate_examples() {
        let h = ghz(ModelVariant::GhzIntermediate);
        assert!(h.evaluate(0.0).iter().all(|z| z.norm() < 1e-14));
        let t = 0.43;
        let m = h.evaluate(t);
        let i220 = h.index_of(&[2, 2, 0]).unwrap();
        let i120 = h.index_of(&[1, 2, 0]).unwrap();
        let ch4 = GaussianPulse::new(GHZ_TABLE[3], 1.0);
        use crate::pulse::PulseChannel;
        assert!((m[[i220, i120]] - ch4.value(t)).norm() < 1e-12);
        let i112 = h.index_of(&[1, 1, 2]).unwrap();
        let i111 = h.index_of(&[1, 1, 1]).unwrap();
        let ch5 = GaussianPulse::new(GHZ_TABLE[4], 1.0);
        assert!((m[[i112, i111]] - ch5.value(t)).norm() < 1e-12);
        let couplings = (0..8)
            .flat_map(|i| (0..8).map(move |j| (i, j)))
            .filter(|&(i, j)| i < j && m[[i, j]].norm() > 0.0)
            .count();
        assert_eq!(couplings, 7);
        assert!((0..8).all(|i| m[[i, i]].norm() == 0.0));
    }

    #[test]
    fn ghz_effective_examples() {
        let h = ghz(ModelVariant::GhzEffective);
        assert!(h.evaluate(0.0).iter().all(|z| z.norm() < 1e-14));
        let m = h.evaluate(0.5);
        assert_relative_eq!(m[[2, 3]].norm(), 9.46614, epsilon = 1e-12);
        assert_relative_eq!(m[[2, 3]].arg(), -2.47423, epsilon = 1e-12);
        for i in 0..6 {
            for j in 0..6 {
                if (i as i64 - j as i64).abs() != 1 {
                    assert_eq!(m[[i, j]], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn shared_pulses_stay_shared_after_mapping() {
        let h = ghz(ModelVariant::GhzIntermediate);
        let mut calls = 0;
        let mapped = h
            .map_pulses(|_, p| {
                calls += 1;
                Ok(p.clone())
            })
            .unwrap();
        // Ω₁₁ drives two links.
        assert_eq!(calls, 6);
        assert_eq!(mapped.terms().len(), 7);
    }
}
