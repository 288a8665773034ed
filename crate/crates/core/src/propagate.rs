//! Fixed-step RK4 propagation of pure states, density matrices and the
//! Lindblad master equation
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Σ_L ( L ρ L† − ½{L†L, ρ} )
//! ```
//!
//! The generator never forms dense products with `H`: every model is a
//! diagonal plus sparse drive patterns, and collapse operators are reduced
//! to triplets (diagonal ones are merged into a single weight matrix).
//! Writing `A = −iH − ½K` with `K = Σ L†L`, the right-hand side is
//! `Aρ + (Aρ)† + Σ LρL†`.

use log::warn;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::hamiltonian::HamiltonianModel;
use crate::qudit::{QuditRegister, RYDBERG};
use crate::{ComplexMatrix, ComplexVector, Error, Result, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Tolerance used when validating initial states.
pub const INPUT_TOLERANCE: f64 = 1e-9;
/// Negative-eigenvalue floor beyond which a warning is raised.
pub const POSITIVITY_FLOOR: f64 = -1e-6;

pub const DEFAULT_STEPS: usize = 200_000;
pub const GHZ_FULL_STEPS: usize = 2_000_000;
pub const DEFAULT_SAMPLES: usize = 1000;

/// Fixed-step classical RK4. `steps` covers the whole window `[0, T]`;
/// `samples` is the number of output intervals (so `samples + 1` points
/// including `t = 0` are recorded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub steps: usize,
    pub samples: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            samples: DEFAULT_SAMPLES,
        }
    }
}

impl IntegratorConfig {
    pub fn new(steps: usize, samples: usize) -> Self {
        Self { steps, samples }
    }

    /// Default step count for a model: the GHZ full model needs ten times
    /// more steps to resolve its `2V` carriers.
    pub fn for_variant(variant: crate::ModelVariant) -> Self {
        let steps = if variant == crate::ModelVariant::GhzFull {
            GHZ_FULL_STEPS
        } else {
            DEFAULT_STEPS
        };
        Self {
            steps,
            samples: DEFAULT_SAMPLES,
        }
    }

    /// Only the initial and final states.
    pub fn endpoints(steps: usize) -> Self {
        Self { steps, samples: 1 }
    }

    pub fn with_steps(self, steps: usize) -> Self {
        Self { steps, ..self }
    }

    /// Half the steps, for step-halving convergence checks.
    pub fn halved(self) -> Self {
        Self {
            steps: self.steps / 2,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.samples == 0 {
            return Err(Error::config("integrator needs at least one step and one sample"));
        }
        Ok(())
    }

    /// Step indices at which output is recorded, always including 0 and
    /// `steps`.
    fn sample_steps(&self) -> Vec<usize> {
        let samples = self.samples.min(self.steps);
        (0..=samples)
            .map(|j| ((j as u128 * self.steps as u128 + samples as u128 / 2) / samples as u128) as usize)
            .collect()
    }
}

/// Spontaneous emission (`γ`) and dephasing (`Γ`) rates in units of `1/T`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DecoherenceSpec {
    pub gamma: f64,
    pub dephasing: f64,
}

impl DecoherenceSpec {
    pub fn new(gamma: f64, dephasing: f64) -> Self {
        Self { gamma, dephasing }
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_none(&self) -> bool {
        self.gamma == 0.0 && self.dephasing == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !(self.dephasing >= 0.0) {
            return Err(Error::config(format!(
                "decoherence rates must be >= 0, got gamma={} dephasing={}",
                self.gamma, self.dephasing
            )));
        }
        Ok(())
    }

    /// For every atom `k` and ground level `α ∈ {0, 1}`:
    /// `√(γ/2)|α⟩_k⟨2|` and `√(Γ/2)(|2⟩_k⟨2| − |α⟩_k⟨α|)`. Channels with
    /// zero rate are omitted.
    pub fn collapse_operators(&self, register: &QuditRegister) -> Result<Vec<ComplexMatrix>> {
        self.validate()?;
        let mut ops = Vec::new();
        let emission = (self.gamma / 2.0).sqrt();
        let dephasing = (self.dephasing / 2.0).sqrt();
        for atom in 1..=register.n_atoms() {
            for alpha in 0..2u8 {
                if self.gamma > 0.0 {
                    ops.push(register.transition_operator(atom, alpha, RYDBERG)?.mapv(|z| z * emission));
                }
                if self.dephasing > 0.0 {
                    let upper = register.transition_operator(atom, RYDBERG, RYDBERG)?;
                    let lower = register.transition_operator(atom, alpha, alpha)?;
                    ops.push((upper - lower).mapv(|z| z * dephasing));
                }
            }
        }
        Ok(ops)
    }
}

/// Worst-case deviations observed along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Physicality {
    /// `max |‖ψ‖ − 1|` (state) or `max |Tr ρ − 1|` (density matrix).
    pub max_trace_drift: f64,
    /// `max |ρ − ρ†|`; zero for state trajectories.
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue seen; `0` for state trajectories.
    pub min_eigenvalue: f64,
}

impl Physicality {
    pub fn positivity_ok(&self) -> bool {
        self.min_eigenvalue >= POSITIVITY_FLOOR
    }
}

#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexVector>,
    pub physicality: Physicality,
}

impl StateTrajectory {
    pub fn final_state(&self) -> &ComplexVector {
        self.states.last().expect("trajectory always holds the initial state")
    }
}

#[derive(Debug, Clone)]
pub struct DensityTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexMatrix>,
    pub physicality: Physicality,
}

impl DensityTrajectory {
    pub fn final_state(&self) -> &ComplexMatrix {
        self.states.last().expect("trajectory always holds the initial state")
    }
}

/// Sparse operator in triplet form.
#[derive(Debug, Clone, Default)]
struct Triplets {
    entries: Vec<(usize, usize, C64)>,
}

impl Triplets {
    fn from_dense(m: &ComplexMatrix) -> Self {
        Self {
            entries: m
                .indexed_iter()
                .filter(|(_, z)| z.norm() != 0.0)
                .map(|((r, c), &z)| (r, c, z))
                .collect(),
        }
    }

    fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|&(r, c, _)| r == c)
    }
}

/// Precomputed Lindblad generator for one model.
struct Generator<'a> {
    model: &'a HamiltonianModel,
    dim: usize,
    /// `−½K` entries.
    damping: Vec<(usize, usize, C64)>,
    /// Merged `Σ l_i l_j*` over diagonal collapse operators.
    diagonal_jumps: Option<Vec<f64>>,
    jumps: Vec<Triplets>,
}

impl<'a> Generator<'a> {
    fn new(model: &'a HamiltonianModel, collapse: &[ComplexMatrix]) -> Result<Self> {
        let dim = model.dim();
        for op in collapse {
            if op.dim() != (dim, dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: op.nrows(),
                });
            }
        }
        let mut k = Array2::<C64>::zeros((dim, dim));
        let mut diagonal_weights: Option<Array2<C64>> = None;
        let mut jumps = Vec::new();
        for op in collapse {
            let adj = op.t().mapv(|z| z.conj());
            k = k + adj.dot(op);
            let trip = Triplets::from_dense(op);
            if trip.is_diagonal() {
                let w = diagonal_weights.get_or_insert_with(|| Array2::zeros((dim, dim)));
                let diag: Vec<C64> = (0..dim).map(|i| op[[i, i]]).collect();
                for i in 0..dim {
                    for j in 0..dim {
                        w[[i, j]] += diag[i] * diag[j].conj();
                    }
                }
            } else {
                jumps.push(trip);
            }
        }
        let damping = Triplets::from_dense(&k.mapv(|z| z * -0.5)).entries;
        // For Hermitian diagonal operators the merged weights are real.
        let diagonal_jumps = diagonal_weights.map(|w| w.iter().map(|z| z.re).collect());
        Ok(Self {
            model,
            dim,
            damping,
            diagonal_jumps,
            jumps,
        })
    }

    fn coefficients(&self, t: f64, out: &mut Vec<C64>) {
        out.clear();
        out.extend(self.model.terms().iter().map(|term| term.coefficient(t)));
    }

    /// `dψ/dt = −iHψ`.
    fn state_rhs(&self, coeffs: &[C64], psi: &[C64], out: &mut [C64]) {
        for ((o, &p), &d) in out.iter_mut().zip(psi).zip(self.model.diagonal()) {
            *o = p * d;
        }
        for (term, &c) in self.model.terms().iter().zip(coeffs) {
            let cc = c.conj();
            for &(r, col) in &term.pattern {
                out[r] += c * psi[col];
                out[col] += cc * psi[r];
            }
        }
        for o in out.iter_mut() {
            *o = C64::new(o.im, -o.re);
        }
    }

    /// Lindblad right-hand side on a row-major flattened `ρ`. `scratch`
    /// holds `Aρ`.
    fn density_rhs(&self, coeffs: &[C64], rho: &[C64], scratch: &mut [C64], out: &mut [C64]) {
        let n = self.dim;
        // scratch = −iHρ − ½Kρ
        for (i, &d) in self.model.diagonal().iter().enumerate() {
            let f = C64::new(0.0, -d);
            let (row_out, row_in) = (&mut scratch[i * n..(i + 1) * n], &rho[i * n..(i + 1) * n]);
            for (o, &x) in row_out.iter_mut().zip(row_in) {
                *o = f * x;
            }
        }
        for (term, &c) in self.model.terms().iter().zip(coeffs) {
            let a = C64::new(c.im, -c.re); // −i·c
            let b = C64::new(-c.im, -c.re); // −i·c*
            for &(r, col) in &term.pattern {
                for j in 0..n {
                    scratch[r * n + j] += a * rho[col * n + j];
                    scratch[col * n + j] += b * rho[r * n + j];
                }
            }
        }
        for &(r, col, k) in &self.damping {
            for j in 0..n {
                scratch[r * n + j] += k * rho[col * n + j];
            }
        }
        // out = Aρ + (Aρ)†
        for i in 0..n {
            for j in i..n {
                let v = scratch[i * n + j] + scratch[j * n + i].conj();
                out[i * n + j] = v;
                out[j * n + i] = v.conj();
            }
        }
        if let Some(w) = &self.diagonal_jumps {
            for ((o, &x), &wij) in out.iter_mut().zip(rho).zip(w) {
                *o += x * wij;
            }
        }
        for jump in &self.jumps {
            for &(ra, ca, va) in &jump.entries {
                for &(rb, cb, vb) in &jump.entries {
                    out[ra * n + rb] += va * vb.conj() * rho[ca * n + cb];
                }
            }
        }
    }
}

fn axpy(out: &mut [C64], base: &[C64], h: f64, k: &[C64]) {
    for ((o, &b), &d) in out.iter_mut().zip(base).zip(k) {
        *o = b + d * h;
    }
}

/// Core RK4 loop over a flat state. `record` sees every sampled state.
fn integrate<F, R>(
    model: &HamiltonianModel,
    generator: &Generator<'_>,
    initial: Vec<C64>,
    config: &IntegratorConfig,
    mut rhs: F,
    mut record: R,
) where
    F: FnMut(&[C64], &[C64], &mut [C64]),
    R: FnMut(f64, &[C64]),
{
    let total = model.total_time();
    let h = total / config.steps as f64;
    let len = initial.len();
    let mut y = initial;
    let mut stage = vec![ZERO; len];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![ZERO; len], vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]);
    let mut c_start = Vec::new();
    let mut c_mid = Vec::new();
    let mut c_end = Vec::new();
    let samples = config.sample_steps();
    let mut next_sample = 0;
    let time_at = |i: usize| total * i as f64 / config.steps as f64;

    generator.coefficients(0.0, &mut c_start);
    for i in 0..=config.steps {
        if next_sample < samples.len() && samples[next_sample] == i {
            record(time_at(i), &y);
            next_sample += 1;
        }
        if i == config.steps {
            break;
        }
        let t = time_at(i);
        let t_next = time_at(i + 1);
        generator.coefficients(0.5 * (t + t_next), &mut c_mid);
        generator.coefficients(t_next, &mut c_end);

        rhs(&c_start, &y, &mut k1);
        axpy(&mut stage, &y, 0.5 * h, &k1);
        rhs(&c_mid, &stage, &mut k2);
        axpy(&mut stage, &y, 0.5 * h, &k2);
        rhs(&c_mid, &stage, &mut k3);
        axpy(&mut stage, &y, h, &k3);
        rhs(&c_end, &stage, &mut k4);
        let w = h / 6.0;
        for idx in 0..len {
            y[idx] += (k1[idx] + (k2[idx] + k3[idx]) * 2.0 + k4[idx]) * w;
        }
        std::mem::swap(&mut c_start, &mut c_end);
    }
}

fn check_dim(model: &HamiltonianModel, got: usize) -> Result<()> {
    if got != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got,
        });
    }
    Ok(())
}

/// Closed-system Schrödinger evolution of a pure state.
pub fn propagate_state(
    model: &HamiltonianModel,
    initial: &ComplexVector,
    config: &IntegratorConfig,
) -> Result<StateTrajectory> {
    config.validate()?;
    check_dim(model, initial.len())?;
    let norm = initial.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > INPUT_TOLERANCE {
        return Err(Error::Validation(format!("initial state has norm {norm}, expected 1")));
    }
    let generator = Generator::new(model, &[])?;
    let mut times = Vec::with_capacity(config.samples + 1);
    let mut states = Vec::with_capacity(config.samples + 1);
    let mut drift: f64 = 0.0;
    integrate(
        model,
        &generator,
        initial.to_vec(),
        config,
        |c, y, out| generator.state_rhs(c, y, out),
        |t, y| {
            let n = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            drift = drift.max((n - 1.0).abs());
            times.push(t);
            states.push(Array1::from(y.to_vec()));
        },
    );
    Ok(StateTrajectory {
        times,
        states,
        physicality: Physicality {
            max_trace_drift: drift,
            max_hermiticity_error: 0.0,
            min_eigenvalue: 0.0,
        },
    })
}

/// Closed-system Liouville–von Neumann evolution `dρ/dt = −i[H, ρ]`.
pub fn propagate_von_neumann(
    model: &HamiltonianModel,
    initial: &ComplexMatrix,
    config: &IntegratorConfig,
) -> Result<DensityTrajectory> {
    propagate_with_operators(model, initial, &[], config)
}

/// Lindblad evolution with the collapse operators of `decoherence` built on
/// the model's register. Chain models have no register and only accept the
/// decoherence-free case.
pub fn propagate_lindblad(
    model: &HamiltonianModel,
    initial: &ComplexMatrix,
    decoherence: &DecoherenceSpec,
    config: &IntegratorConfig,
) -> Result<DensityTrajectory> {
    decoherence.validate()?;
    let ops = if decoherence.is_none() {
        Vec::new()
    } else {
        let register = model.register().ok_or_else(|| {
            Error::config("decoherence needs a full (atom-register) model, not an effective chain")
        })?;
        decoherence.collapse_operators(&register)?
    };
    propagate_with_operators(model, initial, &ops, config)
}

/// Lindblad evolution with arbitrary collapse operators.
pub fn propagate_with_operators(
    model: &HamiltonianModel,
    initial: &ComplexMatrix,
    collapse: &[ComplexMatrix],
    config: &IntegratorConfig,
) -> Result<DensityTrajectory> {
    config.validate()?;
    check_dim(model, initial.nrows())?;
    check_dim(model, initial.ncols())?;
    validate_density(initial)?;
    let generator = Generator::new(model, collapse)?;
    let n = model.dim();
    let mut scratch = vec![ZERO; n * n];
    let mut times = Vec::with_capacity(config.samples + 1);
    let mut states = Vec::with_capacity(config.samples + 1);
    let mut phys = Physicality {
        max_trace_drift: 0.0,
        max_hermiticity_error: 0.0,
        min_eigenvalue: f64::INFINITY,
    };
    integrate(
        model,
        &generator,
        initial.iter().copied().collect(),
        config,
        |c, y, out| generator.density_rhs(c, y, &mut scratch, out),
        |t, y| {
            let rho = Array2::from_shape_vec((n, n), y.to_vec()).expect("square buffer");
            let p = density_physicality(&rho);
            phys.max_trace_drift = phys.max_trace_drift.max(p.max_trace_drift);
            phys.max_hermiticity_error = phys.max_hermiticity_error.max(p.max_hermiticity_error);
            phys.min_eigenvalue = phys.min_eigenvalue.min(p.min_eigenvalue);
            times.push(t);
            states.push(rho);
        },
    );
    if !phys.positivity_ok() {
        warn!(
            "density matrix lost positivity (min eigenvalue {:.3e}); integrator steps may be too coarse",
            phys.min_eigenvalue
        );
    }
    Ok(DensityTrajectory {
        times,
        states,
        physicality: phys,
    })
}

/// `|ψ⟩⟨ψ|`
pub fn outer(psi: &ComplexVector) -> ComplexMatrix {
    let n = psi.len();
    Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj())
}

pub fn hermiticity_error(rho: &ComplexMatrix) -> f64 {
    crate::hamiltonian::hermiticity_error(rho)
}

pub fn trace(rho: &ComplexMatrix) -> C64 {
    rho.diag().iter().sum()
}

/// Eigenvalues of the Hermitian part of `rho`, ascending.
pub fn hermitian_eigenvalues(rho: &ComplexMatrix) -> Vec<f64> {
    let n = rho.nrows();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| (rho[[i, j]] + rho[[j, i]].conj()) * 0.5);
    let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

pub fn purity(rho: &ComplexMatrix) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

/// Trace drift, Hermiticity error and minimum eigenvalue of one matrix.
pub fn density_physicality(rho: &ComplexMatrix) -> Physicality {
    Physicality {
        max_trace_drift: (trace(rho) - C64::new(1.0, 0.0)).norm(),
        max_hermiticity_error: hermiticity_error(rho),
        min_eigenvalue: hermitian_eigenvalues(rho).first().copied().unwrap_or(0.0),
    }
}

fn validate_density(rho: &ComplexMatrix) -> Result<()> {
    let p = density_physicality(rho);
    if p.max_hermiticity_error > INPUT_TOLERANCE {
        return Err(Error::Validation(format!(
            "initial density matrix is not Hermitian (error {:.3e})",
            p.max_hermiticity_error
        )));
    }
    if p.max_trace_drift > INPUT_TOLERANCE {
        return Err(Error::Validation(format!(
            "initial density matrix has trace {}, expected 1",
            trace(rho)
        )));
    }
    if p.min_eigenvalue < -INPUT_TOLERANCE {
        return Err(Error::Validation(format!(
            "initial density matrix is not positive semidefinite (eigenvalue {:.3e})",
            p.min_eigenvalue
        )));
    }
    Ok(())
}
