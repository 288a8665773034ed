//! Named experiments: trajectories for each model, decoherence sweeps,
//! Monte-Carlo amplitude-noise studies and CSV/JSON export.
//!
//! Every entry point is a pure function of its configuration (and seed);
//! parallel fan-out collects results by index, so output does not depend on
//! scheduling.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fidelity::{
    clamp_fidelity, fidelity, fidelity_pure, target_populations_density, target_populations_state, PhaseMode,
    TargetState,
};
use crate::hamiltonian::{DetuningPlan, GhzDrives, HamiltonianModel, ModelVariant};
use crate::propagate::{
    outer, propagate_lindblad, propagate_state, DecoherenceSpec, IntegratorConfig, Physicality, DEFAULT_SAMPLES,
};
use crate::pulse::{apply_amplitude_noise, NoiseSpec, PulseParameterSet, PulseRef, DEFAULT_NOISE_GRID};
use crate::{Error, Result, C64};

/// Interaction strength of the Bell scheme, `V = 200/T`.
pub const BELL_INTERACTION: f64 = 200.0;
/// Bridge modulation frequency of the GHZ scheme, `ω = 200/T`.
pub const GHZ_OMEGA: f64 = 200.0;
/// GHZ interaction strength, `V = 20ω`.
pub const GHZ_INTERACTION: f64 = 20.0 * GHZ_OMEGA;
/// Step-halving tolerance on reported fidelities.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    BellEffective,
    BellFull,
    GhzEffective,
    GhzIntermediate,
    GhzFull,
    OptimizeBell,
    OptimizeGhz,
    NoiseBell,
    NoiseGhz,
    DecoherenceSweepBell,
    DecoherenceSweepGhz,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 11] = [
        ScenarioName::BellEffective,
        ScenarioName::BellFull,
        ScenarioName::GhzEffective,
        ScenarioName::GhzIntermediate,
        ScenarioName::GhzFull,
        ScenarioName::OptimizeBell,
        ScenarioName::OptimizeGhz,
        ScenarioName::NoiseBell,
        ScenarioName::NoiseGhz,
        ScenarioName::DecoherenceSweepBell,
        ScenarioName::DecoherenceSweepGhz,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::BellEffective => "bell-effective",
            ScenarioName::BellFull => "bell-full",
            ScenarioName::GhzEffective => "ghz-effective",
            ScenarioName::GhzIntermediate => "ghz-intermediate",
            ScenarioName::GhzFull => "ghz-full",
            ScenarioName::OptimizeBell => "optimize-bell",
            ScenarioName::OptimizeGhz => "optimize-ghz",
            ScenarioName::NoiseBell => "noise-bell",
            ScenarioName::NoiseGhz => "noise-ghz",
            ScenarioName::DecoherenceSweepBell => "decoherence-sweep-bell",
            ScenarioName::DecoherenceSweepGhz => "decoherence-sweep-ghz",
        }
    }

    pub fn is_bell(self) -> bool {
        matches!(
            self,
            ScenarioName::BellEffective
                | ScenarioName::BellFull
                | ScenarioName::OptimizeBell
                | ScenarioName::NoiseBell
                | ScenarioName::DecoherenceSweepBell
        )
    }

    /// Model propagated by the scenario (noise studies and sweeps use the
    /// full models).
    pub fn variant(self) -> ModelVariant {
        match self {
            ScenarioName::BellEffective | ScenarioName::OptimizeBell => ModelVariant::BellEffective,
            ScenarioName::BellFull | ScenarioName::NoiseBell | ScenarioName::DecoherenceSweepBell => {
                ModelVariant::BellFull
            }
            ScenarioName::GhzEffective | ScenarioName::OptimizeGhz => ModelVariant::GhzEffective,
            ScenarioName::GhzIntermediate => ModelVariant::GhzIntermediate,
            ScenarioName::GhzFull | ScenarioName::NoiseGhz | ScenarioName::DecoherenceSweepGhz => {
                ModelVariant::GhzFull
            }
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown scenario `{s}`")))
    }
}

/// Laboratory parameters converted to units of `T` by `rate × T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabUnits {
    pub total_time_us: f64,
    pub gamma_khz: f64,
    pub dephasing_khz: f64,
    pub interaction_mhz: f64,
    pub omega_mhz: Option<f64>,
}

impl LabUnits {
    /// `T = 10 µs`, `γ = 2 kHz`, `Γ = 1 kHz`, `V = 20 MHz`.
    pub fn bell() -> Self {
        Self {
            total_time_us: 10.0,
            gamma_khz: 2.0,
            dephasing_khz: 1.0,
            interaction_mhz: 20.0,
            omega_mhz: None,
        }
    }

    /// As [`bell`](Self::bell) with `ω = 20 MHz`, `V = 400 MHz`.
    pub fn ghz() -> Self {
        Self {
            interaction_mhz: 400.0,
            omega_mhz: Some(20.0),
            ..Self::bell()
        }
    }

    pub fn dimensionless(&self) -> DimensionlessRates {
        let t = self.total_time_us * 1e-6;
        DimensionlessRates {
            gamma: self.gamma_khz * 1e3 * t,
            dephasing: self.dephasing_khz * 1e3 * t,
            interaction: self.interaction_mhz * 1e6 * t,
            omega: self.omega_mhz.map(|w| w * 1e6 * t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessRates {
    pub gamma: f64,
    pub dephasing: f64,
    pub interaction: f64,
    pub omega: Option<f64>,
}

/// Inclusive linear grid `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::config(format!("grid `{s}` is not of the form start:stop:count"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].parse().map_err(|_| bad())?;
        let count: usize = parts[2].parse().map_err(|_| bad())?;
        if count == 0 || start < 0.0 || stop < start {
            return Err(bad());
        }
        Ok(Self { start, stop, count })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioName,
    /// `V`; defaults to 200 (Bell) or 4000 (GHZ).
    pub interaction: Option<f64>,
    /// `ω`; GHZ only, defaults to 200.
    pub omega: Option<f64>,
    pub decoherence: DecoherenceSpec,
    pub total_time: f64,
    /// RK4 steps; defaults per model.
    pub steps: Option<usize>,
    pub samples: usize,
    /// Pulse parameters; defaults to the built-in optimized tables.
    pub pulses: Option<PulseParameterSet>,
    pub seed: u64,
    pub noise_amplitude: f64,
    pub runs: usize,
    pub noise_grid: usize,
    /// Repeat the run at half the steps and flag changes above
    /// [`CONVERGENCE_TOLERANCE`].
    pub check_convergence: bool,
    /// Set when the rates came from [`LabUnits`]; echoed in summaries.
    pub lab_units: Option<LabUnits>,
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioName) -> Self {
        Self {
            scenario,
            interaction: None,
            omega: None,
            decoherence: DecoherenceSpec::none(),
            total_time: 1.0,
            steps: None,
            samples: DEFAULT_SAMPLES,
            pulses: None,
            seed: 0,
            noise_amplitude: 0.0,
            runs: 20,
            noise_grid: DEFAULT_NOISE_GRID,
            check_convergence: false,
            lab_units: None,
        }
    }

    /// Applies laboratory parameters (rates, `V`, `ω`).
    pub fn with_lab_units(mut self, units: LabUnits) -> Self {
        let d = units.dimensionless();
        self.decoherence = DecoherenceSpec::new(d.gamma, d.dephasing);
        self.interaction = Some(d.interaction);
        if self.scenario.variant().is_bell() {
            self.omega = None;
        } else {
            self.omega = d.omega;
        }
        self.lab_units = Some(units);
        self
    }

    pub fn variant(&self) -> ModelVariant {
        self.scenario.variant()
    }

    pub fn interaction(&self) -> f64 {
        self.interaction.unwrap_or(if self.scenario.is_bell() {
            BELL_INTERACTION
        } else {
            GHZ_INTERACTION
        })
    }

    pub fn omega(&self) -> Option<f64> {
        if self.scenario.is_bell() {
            None
        } else {
            Some(self.omega.unwrap_or(GHZ_OMEGA))
        }
    }

    pub fn pulses(&self) -> PulseParameterSet {
        let mut p = self.pulses.clone().unwrap_or_else(|| {
            if self.scenario.is_bell() {
                PulseParameterSet::bell_table()
            } else {
                PulseParameterSet::ghz_table()
            }
        });
        p.total_time = self.total_time;
        p
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::for_variant(self.variant());
        if let Some(steps) = self.steps {
            cfg.steps = steps;
        }
        cfg.samples = self.samples;
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenario.is_bell() && self.omega.is_some() {
            return Err(Error::config("--omega only applies to GHZ scenarios"));
        }
        if let Some(v) = self.interaction {
            if !(v >= 0.0) {
                return Err(Error::config(format!("V must be >= 0, got {v}")));
            }
        }
        if let Some(w) = self.omega {
            if !(w > 0.0) {
                return Err(Error::config(format!("omega must be positive, got {w}")));
            }
        }
        if !(self.total_time > 0.0) {
            return Err(Error::config("T must be positive"));
        }
        self.decoherence.validate()?;
        self.integrator().validate()?;
        let pulses = self.pulses();
        pulses.validate()?;
        if pulses.len() != self.variant().channel_count() {
            return Err(Error::config(format!(
                "{} needs {} pulse channels, the pulse file has {}",
                self.scenario,
                self.variant().channel_count(),
                pulses.len()
            )));
        }
        if !self.variant().is_full() && !self.decoherence.is_none() {
            return Err(Error::config(format!(
                "{} is a closed effective model; decoherence applies to the full models only",
                self.scenario
            )));
        }
        NoiseSpec::new(self.noise_amplitude, self.seed)
            .with_grid(self.noise_grid)
            .validate()?;
        if self.runs == 0 {
            return Err(Error::config("--runs must be at least 1"));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<HamiltonianModel> {
        HamiltonianModel::from_params(self.variant(), &self.pulses(), self.interaction(), self.omega())
    }
}

/// One output sample. Populations are those of `|0…0⟩`, `|1…1⟩`, `|2…2⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub populations: [f64; 3],
    pub fidelity_raw: f64,
    pub fidelity_phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCheck {
    pub steps: usize,
    pub half_steps: usize,
    pub fidelity_phase_half: f64,
    pub fidelity_raw_half: f64,
    pub max_change: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: ScenarioName,
    pub variant: ModelVariant,
    pub interaction: f64,
    pub omega: Option<f64>,
    pub decoherence: DecoherenceSpec,
    pub total_time: f64,
    pub integrator: IntegratorConfig,
    pub pulses: PulseParameterSet,
    pub final_fidelity_raw: f64,
    pub final_fidelity_phase: f64,
    pub final_populations: [f64; 3],
    pub physicality: Physicality,
    pub convergence: Option<ConvergenceCheck>,
    pub lab_units: Option<LabUnits>,
    pub dimensionless: Option<DimensionlessRates>,
    pub warnings: Vec<String>,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub records: Vec<TrajectoryRecord>,
    pub summary: ScenarioSummary,
}

fn initial_state(model: &HamiltonianModel) -> Result<Array1<C64>> {
    let n = model.variant().n_atoms();
    let idx = model
        .index_of(&vec![0; n])
        .ok_or_else(|| Error::config("model basis lacks the ground state"))?;
    let mut psi = Array1::zeros(model.dim());
    psi[idx] = C64::new(1.0, 0.0);
    Ok(psi)
}

/// Propagates `model` from the all-ground state and samples the target
/// observables. Closed runs use the state-vector path.
pub fn simulate(
    model: &HamiltonianModel,
    decoherence: &DecoherenceSpec,
    integrator: &IntegratorConfig,
) -> Result<(Vec<TrajectoryRecord>, Physicality)> {
    let psi0 = initial_state(model)?;
    let raw = TargetState::for_model(model, PhaseMode::Raw);
    let phased = TargetState::for_model(model, PhaseMode::InteractionPhase);
    if decoherence.is_none() {
        let traj = propagate_state(model, &psi0, integrator)?;
        let records = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(&t, psi)| {
                Ok(TrajectoryRecord {
                    t,
                    populations: target_populations_state(psi, &raw)?,
                    fidelity_raw: clamp_fidelity(fidelity_pure(psi, &raw, t)?),
                    fidelity_phase: clamp_fidelity(fidelity_pure(psi, &phased, t)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((records, traj.physicality))
    } else {
        let traj = propagate_lindblad(model, &outer(&psi0), decoherence, integrator)?;
        let records = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(&t, rho)| {
                Ok(TrajectoryRecord {
                    t,
                    populations: target_populations_density(rho, &raw)?,
                    fidelity_raw: clamp_fidelity(fidelity(rho, &raw, t)?),
                    fidelity_phase: clamp_fidelity(fidelity(rho, &phased, t)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((records, traj.physicality))
    }
}

/// Final-time phase-corrected and raw fidelities only.
pub fn final_fidelities(
    model: &HamiltonianModel,
    decoherence: &DecoherenceSpec,
    steps: usize,
) -> Result<(f64, f64)> {
    let (records, _) = simulate(model, decoherence, &IntegratorConfig::endpoints(steps))?;
    let last = records.last().expect("non-empty trajectory");
    Ok((last.fidelity_phase, last.fidelity_raw))
}

fn physicality_warnings(p: &Physicality, closed: bool) -> Vec<String> {
    let mut w = Vec::new();
    if closed {
        if p.max_trace_drift >= 1e-8 {
            w.push(format!("state norm drifted by {:.3e}", p.max_trace_drift));
        }
    } else {
        if p.max_trace_drift >= 1e-7 {
            w.push(format!("trace drifted by {:.3e}", p.max_trace_drift));
        }
        if p.max_hermiticity_error >= 1e-8 {
            w.push(format!("Hermiticity error {:.3e}", p.max_hermiticity_error));
        }
        if !p.positivity_ok() {
            w.push(format!("minimum eigenvalue {:.3e}", p.min_eigenvalue));
        }
    }
    w
}

/// Runs one of the trajectory scenarios (`bell-effective`, `bell-full`,
/// `ghz-effective`, `ghz-intermediate`, `ghz-full`).
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    use ScenarioName::*;
    if !matches!(
        config.scenario,
        BellEffective | BellFull | GhzEffective | GhzIntermediate | GhzFull
    ) {
        return Err(Error::config(format!(
            "{} is not a trajectory scenario",
            config.scenario
        )));
    }
    config.validate()?;
    let start = Instant::now();
    let model = config.build_model()?;
    let integrator = config.integrator();
    let (records, physicality) = simulate(&model, &config.decoherence, &integrator)?;
    let last = *records.last().expect("non-empty trajectory");
    let mut warnings = physicality_warnings(&physicality, config.decoherence.is_none());

    let convergence = if config.check_convergence {
        let half = integrator.halved();
        let (phase_half, raw_half) = final_fidelities(&model, &config.decoherence, half.steps)?;
        let max_change = (phase_half - last.fidelity_phase)
            .abs()
            .max((raw_half - last.fidelity_raw).abs());
        let passed = max_change < CONVERGENCE_TOLERANCE;
        if !passed {
            warnings.push(format!(
                "step halving changed the final fidelity by {max_change:.3e} (tolerance {CONVERGENCE_TOLERANCE:e})"
            ));
        }
        Some(ConvergenceCheck {
            steps: integrator.steps,
            half_steps: half.steps,
            fidelity_phase_half: phase_half,
            fidelity_raw_half: raw_half,
            max_change,
            passed,
        })
    } else {
        None
    };

    let summary = ScenarioSummary {
        scenario: config.scenario,
        variant: model.variant(),
        interaction: model.interaction(),
        omega: config.omega(),
        decoherence: config.decoherence,
        total_time: config.total_time,
        integrator,
        pulses: config.pulses(),
        final_fidelity_raw: last.fidelity_raw,
        final_fidelity_phase: last.fidelity_phase,
        final_populations: last.populations,
        physicality,
        convergence,
        lab_units: config.lab_units,
        dimensionless: config.lab_units.map(|u| u.dimensionless()),
        warnings,
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(ScenarioOutput { records, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: ScenarioName,
    pub gammas: Vec<f64>,
    pub dephasings: Vec<f64>,
    /// `fidelities[i][j]` at `(gammas[i], dephasings[j])`, phase-corrected.
    pub fidelities: Vec<Vec<f64>>,
    pub fidelities_raw: Vec<Vec<f64>>,
    pub runtime_seconds: f64,
}

impl SweepResult {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.fidelities[i][j]
    }
}

/// Final fidelity of the full model over a `γ × Γ` grid.
pub fn run_decoherence_sweep(config: &ScenarioConfig, gammas: &[f64], dephasings: &[f64]) -> Result<SweepResult> {
    let start = Instant::now();
    let mut base = config.clone();
    base.scenario = if config.scenario.is_bell() {
        ScenarioName::DecoherenceSweepBell
    } else {
        ScenarioName::DecoherenceSweepGhz
    };
    base.validate()?;
    let model = base.build_model()?;
    let steps = base.integrator().steps;
    let points: Vec<(usize, usize)> = (0..gammas.len())
        .flat_map(|i| (0..dephasings.len()).map(move |j| (i, j)))
        .collect();
    let values = points
        .par_iter()
        .map(|&(i, j)| {
            let deco = DecoherenceSpec::new(gammas[i], dephasings[j]);
            deco.validate()?;
            final_fidelities(&model, &deco, steps)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut fidelities = vec![vec![0.0; dephasings.len()]; gammas.len()];
    let mut fidelities_raw = fidelities.clone();
    for (&(i, j), &(phase, raw)) in points.iter().zip(&values) {
        fidelities[i][j] = phase;
        fidelities_raw[i][j] = raw;
    }
    Ok(SweepResult {
        scenario: base.scenario,
        gammas: gammas.to_vec(),
        dephasings: dephasings.to_vec(),
        fidelities,
        fidelities_raw,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudy {
    pub scenario: ScenarioName,
    pub amplitude: f64,
    pub seed: u64,
    pub grid: usize,
    /// Noiseless reference through the same propagation path.
    pub noiseless: f64,
    /// Phase-corrected final fidelity of each run, in run order.
    pub fidelities: Vec<f64>,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    pub runtime_seconds: f64,
}

/// Builds the full model with every physical drive wrapped in independent
/// amplitude noise. Run `run` of a study uses seed `seed + run`; drive `k`
/// uses generator stream `k`.
pub fn noisy_full_model(config: &ScenarioConfig, noise: &NoiseSpec) -> Result<HamiltonianModel> {
    let total = config.total_time;
    let v = config.interaction();
    let pulses = config.pulses().pulses();
    let wrap = |k: usize, p: &PulseRef| -> Result<PulseRef> {
        Ok(Arc::new(apply_amplitude_noise(p.clone(), &noise.for_channel(k as u64), total)?))
    };
    if config.scenario.is_bell() {
        let noisy = pulses
            .iter()
            .enumerate()
            .map(|(k, p)| wrap(k, p))
            .collect::<Result<Vec<_>>>()?;
        HamiltonianModel::bell_full(&noisy, v, &DetuningPlan::bell(v), total)
    } else {
        let omega = config.omega().expect("GHZ scenarios carry omega");
        let drives = GhzDrives::from_chain(&pulses, omega)?.map(wrap)?;
        HamiltonianModel::ghz_full_with_drives(&drives, v, omega, &DetuningPlan::ghz(v), total)
    }
}

/// `runs` independent noise realizations at amplitude `amplitude`.
pub fn run_noise_study(config: &ScenarioConfig, amplitude: f64, runs: usize, seed: u64) -> Result<NoiseStudy> {
    let start = Instant::now();
    let mut base = config.clone();
    base.scenario = if config.scenario.is_bell() {
        ScenarioName::NoiseBell
    } else {
        ScenarioName::NoiseGhz
    };
    base.noise_amplitude = amplitude;
    base.runs = runs;
    base.seed = seed;
    base.validate()?;
    let steps = base.integrator().steps;
    let noiseless = final_fidelities(&base.build_model()?, &base.decoherence, steps)?.0;
    let fidelities = (0..runs)
        .into_par_iter()
        .map(|run| {
            let noise = NoiseSpec::new(amplitude, seed.wrapping_add(run as u64)).with_grid(base.noise_grid);
            let model = noisy_full_model(&base, &noise)?;
            Ok(final_fidelities(&model, &base.decoherence, steps)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = fidelities.len() as f64;
    let mean = fidelities.iter().sum::<f64>() / n;
    let var = fidelities.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
    Ok(NoiseStudy {
        scenario: base.scenario,
        amplitude,
        seed,
        grid: base.noise_grid,
        noiseless,
        mean,
        std_dev: var.sqrt(),
        min: fidelities.iter().copied().fold(f64::INFINITY, f64::min),
        max: fidelities.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        fidelities,
        runtime_seconds: start.elapsed().as_secs_f64(),
    })
}

pub const CSV_HEADER: &str = "t,p_a,p_b,p_c,fidelity_raw,fidelity_phase";

/// Trajectory CSV. Values use the shortest round-trip representation, so
/// every digit needed to reproduce the `f64` is written.
pub fn trajectory_csv(records: &[TrajectoryRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::config("no trajectory records to export"));
    }
    let mut out = String::with_capacity(records.len() * 120);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?},{:?}\n",
            r.t, r.populations[0], r.populations[1], r.populations[2], r.fidelity_raw, r.fidelity_phase
        ));
    }
    Ok(out)
}

pub fn export_csv(records: &[TrajectoryRecord], path: &Path) -> Result<()> {
    let text = trajectory_csv(records)?;
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("gamma,Gamma,fidelity_phase,fidelity_raw\n");
    for (i, g) in sweep.gammas.iter().enumerate() {
        for (j, d) in sweep.dephasings.iter().enumerate() {
            out.push_str(&format!(
                "{:?},{:?},{:?},{:?}\n",
                g, d, sweep.fidelities[i][j], sweep.fidelities_raw[i][j]
            ));
        }
    }
    out
}

pub fn noise_csv(study: &NoiseStudy) -> String {
    let mut out = String::from("run,fidelity_phase\n");
    for (i, f) in study.fidelities.iter().enumerate() {
        out.push_str(&format!("{i},{f:?}\n"));
    }
    out
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
