//! Two-stage pulse optimization on the effective chains.
//!
//! Stage 1 keeps every phase at zero and tunes amplitudes and widths so the
//! final populations of the three target components approach `1/3` each.
//! Progress is reported with the balanced-population surrogate
//! `1 − Σ min(P_s, 1/3)`. That surrogate is flat in any direction that only
//! raises an already saturated population, so the search itself descends
//! the smooth log-balance objective `−⅓ Σ ln P_s − ln 3`, which vanishes at
//! exactly the same points. It uses central finite-difference gradients, a
//! BFGS direction in scaled coordinates and a backtracking (Armijo) line
//! search, so accepted steps never increase the search objective.
//!
//! Stage 2 freezes `{A_k, σ_k}` and searches the phases `θ_k` with a seeded
//! genetic algorithm against the full objective `1 − f(T)`.
//!
//! On a chain the coupling phases only re-gauge the basis states, so stage 2
//! can at best reach `(Σ √P_s)²/3` from the stage-1 populations `P_s`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::fidelity::{fidelity_pure, target_populations_state, PhaseMode, TargetState};
use crate::hamiltonian::{HamiltonianModel, ModelVariant};
use crate::propagate::{propagate_state, IntegratorConfig};
use crate::pulse::{GaussianParams, PulseParameterSet};
use crate::{ComplexVector, Error, Result, C64};

/// RK4 steps per objective evaluation. The chain couplings stay below
/// `~10/T`, so this is far inside the step-halving tolerance.
pub const OBJECTIVE_STEPS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chain {
    Bell,
    Ghz,
}

impl Chain {
    pub fn variant(self) -> ModelVariant {
        match self {
            Chain::Bell => ModelVariant::BellEffective,
            Chain::Ghz => ModelVariant::GhzEffective,
        }
    }

    pub fn channel_count(self) -> usize {
        self.variant().channel_count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub chain: Chain,
    pub total_time: f64,
    pub steps: usize,
}

impl ObjectiveSpec {
    pub fn new(chain: Chain) -> Self {
        Self {
            chain,
            total_time: 1.0,
            steps: OBJECTIVE_STEPS,
        }
    }

    fn check(&self, params: &PulseParameterSet) -> Result<()> {
        if params.len() != self.chain.channel_count() {
            return Err(Error::config(format!(
                "{:?} chain needs {} channels, got {}",
                self.chain,
                self.chain.channel_count(),
                params.len()
            )));
        }
        Ok(())
    }

    /// Closed evolution from `|0…0⟩` to `T`.
    fn final_state(&self, params: &PulseParameterSet) -> Result<(ComplexVector, TargetState)> {
        self.check(params)?;
        let params = PulseParameterSet {
            total_time: self.total_time,
            ..params.clone()
        };
        let model = HamiltonianModel::from_params(self.chain.variant(), &params, 0.0, None)?;
        let mut psi0 = ComplexVector::zeros(model.dim());
        psi0[0] = C64::new(1.0, 0.0);
        let traj = propagate_state(&model, &psi0, &IntegratorConfig::endpoints(self.steps))?;
        let target = TargetState::for_model(&model, PhaseMode::Raw);
        let psi = traj.final_state().clone();
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::OptimizationFailed("propagation produced a non-finite state".into()));
        }
        Ok((psi, target))
    }
}

/// Infidelity `1 − f(T)` of the closed effective-chain evolution.
pub fn objective(params: &PulseParameterSet, spec: &ObjectiveSpec) -> Result<f64> {
    let (psi, target) = spec.final_state(params)?;
    Ok(1.0 - fidelity_pure(&psi, &target, spec.total_time)?)
}

/// Final populations of `|0…0⟩`, `|1…1⟩`, `|2…2⟩`.
pub fn final_target_populations(params: &PulseParameterSet, spec: &ObjectiveSpec) -> Result<[f64; 3]> {
    let (psi, target) = spec.final_state(params)?;
    target_populations_state(&psi, &target)
}

fn zero_phase_populations(params: &PulseParameterSet, spec: &ObjectiveSpec) -> Result<[f64; 3]> {
    let mut real = params.clone();
    for ch in &mut real.channels {
        ch.theta = 0.0;
    }
    final_target_populations(&real, spec)
}

fn surrogate(pops: &[f64; 3]) -> f64 {
    1.0 - pops.iter().map(|&p| p.min(1.0 / 3.0)).sum::<f64>()
}

fn log_balance(pops: &[f64; 3]) -> f64 {
    -pops.iter().map(|&p| p.max(f64::MIN_POSITIVE).ln()).sum::<f64>() / 3.0 - 3f64.ln()
}

/// Balanced-population surrogate `1 − Σ_s min(P_s, 1/3)` evaluated with all
/// phases set to zero.
pub fn stage1_objective(params: &PulseParameterSet, spec: &ObjectiveSpec) -> Result<f64> {
    Ok(surrogate(&zero_phase_populations(params, spec)?))
}

/// Log-balance objective `−⅓ Σ_s ln P_s − ln 3` at zero phases. It is
/// non-negative whenever `Σ P_s ≤ 1` and zero only at the balanced profile.
pub fn stage1_search_objective(params: &PulseParameterSet, spec: &ObjectiveSpec) -> Result<f64> {
    Ok(log_balance(&zero_phase_populations(params, spec)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    IterationCap,
    /// Line search could not find a decrease; best point returned.
    Stalled,
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage1Config {
    /// Relative central-difference step.
    pub fd_step: f64,
    /// Longest trial move per line search, in scaled coordinates
    /// (amplitude in units of 1, width in units of 0.05).
    pub max_move: f64,
    pub max_iterations: usize,
    /// Stop once the balanced-population surrogate falls below this.
    pub threshold: f64,
    pub amplitude_bounds: (f64, f64),
    pub sigma_bounds: (f64, f64),
    /// Consecutive accepted steps with increasing objective that count as
    /// divergence.
    pub divergence_window: usize,
}

impl Default for Stage1Config {
    fn default() -> Self {
        Self {
            fd_step: 1e-4,
            max_move: 1.0,
            max_iterations: 400,
            threshold: 1e-4,
            amplitude_bounds: (1e-3, 12.0),
            sigma_bounds: (0.1, 0.5),
            divergence_window: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub params: PulseParameterSet,
    pub objective: f64,
    pub iterations: usize,
    pub status: Status,
    /// Surrogate after each accepted iteration (stage 1) or best objective
    /// after each generation (stage 2), starting with the initial value.
    pub trace: Vec<f64>,
    /// Stage 1 only: log-balance search objective after each accepted
    /// iteration. Non-increasing by construction.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub search_trace: Vec<f64>,
}

/// Typical magnitudes used to scale amplitude and width coordinates.
const AMPLITUDE_SCALE: f64 = 1.0;
const SIGMA_SCALE: f64 = 0.05;

struct Stage1Problem<'a> {
    spec: &'a ObjectiveSpec,
    template: PulseParameterSet,
    config: &'a Stage1Config,
}

impl Stage1Problem<'_> {
    fn n(&self) -> usize {
        self.template.len()
    }

    fn scale(&self, i: usize) -> f64 {
        if i < self.n() {
            AMPLITUDE_SCALE
        } else {
            SIGMA_SCALE
        }
    }

    fn to_vector(&self, p: &PulseParameterSet) -> Vec<f64> {
        let n = self.n();
        (0..2 * n)
            .map(|i| {
                let ch = &p.channels[i % n];
                let x = if i < n { ch.amplitude } else { ch.sigma };
                x / self.scale(i)
            })
            .collect()
    }

    fn to_params(&self, u: &[f64]) -> PulseParameterSet {
        let n = self.n();
        let mut p = self.template.clone();
        for (k, ch) in p.channels.iter_mut().enumerate() {
            ch.amplitude = u[k] * self.scale(k);
            ch.sigma = u[n + k] * self.scale(n + k);
        }
        p
    }

    fn project(&self, u: &mut [f64]) {
        let n = self.n();
        for (i, x) in u.iter_mut().enumerate() {
            let (lo, hi) = if i < n {
                self.config.amplitude_bounds
            } else {
                self.config.sigma_bounds
            };
            let s = self.scale(i);
            *x = x.clamp(lo / s, hi / s);
        }
    }

    fn value(&self, u: &[f64]) -> Result<f64> {
        stage1_search_objective(&self.to_params(u), self.spec)
    }

    fn surrogate(&self, u: &[f64]) -> Result<f64> {
        stage1_objective(&self.to_params(u), self.spec)
    }

    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        (0..u.len())
            .into_par_iter()
            .map(|i| {
                let h = self.config.fd_step * u[i].abs().max(1e-3);
                let mut plus = u.to_vec();
                let mut minus = u.to_vec();
                plus[i] += h;
                minus[i] -= h;
                Ok((self.value(&plus)? - self.value(&minus)?) / (2.0 * h))
            })
            .collect()
    }
}

/// Central-difference gradient of the stage-1 search objective with respect to
/// `(A_1…A_n, σ_1…σ_n)` in natural units.
pub fn stage1_gradient(params: &PulseParameterSet, spec: &ObjectiveSpec, config: &Stage1Config) -> Result<Vec<f64>> {
    spec.check(params)?;
    let problem = Stage1Problem {
        spec,
        template: params.clone(),
        config,
    };
    let u = problem.to_vector(params);
    let g = problem.gradient(&u)?;
    Ok(g.iter().enumerate().map(|(i, gi)| gi / problem.scale(i)).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gradient stage over amplitudes and widths; phases are carried through
/// unchanged.
pub fn optimize_stage1(spec: &ObjectiveSpec, config: &Stage1Config, init: &PulseParameterSet) -> Result<StageResult> {
    spec.check(init)?;
    init.validate()?;
    let problem = Stage1Problem {
        spec,
        template: init.clone(),
        config,
    };
    let dim = 2 * problem.n();
    let mut u = problem.to_vector(init);
    problem.project(&mut u);
    let mut f = problem.value(&u)?;
    let mut reported = problem.surrogate(&u)?;
    let mut g = problem.gradient(&u)?;
    let mut trace = vec![reported];
    let mut search_trace = vec![f];
    // Inverse-Hessian approximation.
    let mut h_inv = identity(dim);
    let mut rising = 0;
    let mut status = Status::IterationCap;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        if reported <= config.threshold {
            status = Status::Converged;
            break;
        }
        iterations += 1;
        let mut dir: Vec<f64> = (0..dim).map(|i| -dot(&h_inv[i], &g)).collect();
        if dot(&dir, &g) >= 0.0 {
            h_inv = identity(dim);
            dir = g.iter().map(|x| -x).collect();
        }
        let dir_norm = dot(&dir, &dir).sqrt();
        if dir_norm == 0.0 {
            status = Status::Converged;
            break;
        }
        // Backtracking line search on the projected path.
        let mut alpha = (config.max_move / dir_norm).min(1.0);
        let mut accepted = None;
        for _ in 0..40 {
            let mut trial: Vec<f64> = u.iter().zip(&dir).map(|(x, d)| x + alpha * d).collect();
            problem.project(&mut trial);
            let moved: Vec<f64> = trial.iter().zip(&u).map(|(a, b)| a - b).collect();
            let decrease = dot(&g, &moved);
            let ft = problem.value(&trial)?;
            if ft <= f + 1e-4 * decrease && ft < f {
                accepted = Some((trial, ft, moved));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, ft, moved)) = accepted else {
            if h_inv != identity(dim) {
                // Retry once from steepest descent before giving up.
                h_inv = identity(dim);
                continue;
            }
            status = Status::Stalled;
            break;
        };
        let g_new = problem.gradient(&trial)?;
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&moved, &y);
        if sy > 1e-12 {
            bfgs_update(&mut h_inv, &moved, &y, sy);
        }
        let reported_new = problem.surrogate(&trial)?;
        rising = if ft > f { rising + 1 } else { 0 };
        u = trial;
        f = ft;
        reported = reported_new;
        g = g_new;
        trace.push(reported);
        search_trace.push(f);
        if rising >= config.divergence_window {
            status = Status::Diverged;
            break;
        }
    }
    if status == Status::IterationCap && reported <= config.threshold {
        status = Status::Converged;
    }
    Ok(StageResult {
        params: problem.to_params(&u),
        objective: reported,
        iterations,
        status,
        trace,
        search_trace,
    })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i][j] += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage2Config {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Standard deviation of the Gaussian phase mutation (radians).
    pub mutation_scale: f64,
    pub elite: usize,
    pub tournament: usize,
    pub seed: u64,
    /// Objective the final result must reach to count as converged.
    pub threshold: f64,
}

impl Default for Stage2Config {
    fn default() -> Self {
        Self {
            population: 64,
            generations: 200,
            crossover_rate: 0.7,
            mutation_rate: 0.15,
            mutation_scale: 0.2,
            elite: 2,
            tournament: 3,
            seed: 0,
            threshold: 1e-3,
        }
    }
}

impl Stage2Config {
    fn validate(&self) -> Result<()> {
        if self.population < 2 || self.tournament == 0 || self.elite >= self.population {
            return Err(Error::config("stage-2 population must exceed the elite count and hold at least two genomes"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::config("stage-2 rates must lie in [0, 1]"));
        }
        if !(self.mutation_scale > 0.0) {
            return Err(Error::config("stage-2 mutation scale must be positive"));
        }
        Ok(())
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let mut x = theta.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Gauge-fixes `θ₁ = 0` by moving its phase onto the second link; the
/// intermediate chain state absorbs the difference, leaving `f(T)`
/// unchanged.
pub fn canonical_phases(params: &PulseParameterSet) -> PulseParameterSet {
    let mut p = params.clone();
    if p.channels.len() >= 2 {
        let shift = p.channels[0].theta;
        p.channels[0].theta = 0.0;
        p.channels[1].theta = wrap_phase(p.channels[1].theta + shift);
    }
    for ch in &mut p.channels {
        ch.theta = wrap_phase(ch.theta);
    }
    p
}

fn with_phases(base: &PulseParameterSet, phases: &[f64]) -> PulseParameterSet {
    let mut p = base.clone();
    for (ch, &th) in p.channels.iter_mut().zip(phases) {
        ch.theta = th;
    }
    p
}

fn evaluate_population(
    base: &PulseParameterSet,
    spec: &ObjectiveSpec,
    population: &[Vec<f64>],
) -> Result<Vec<f64>> {
    population
        .par_iter()
        .map(|phases| objective(&with_phases(base, phases), spec))
        .collect()
}

/// Genetic search over the phases with amplitudes and widths frozen.
pub fn optimize_stage2(spec: &ObjectiveSpec, config: &Stage2Config, stage1: &PulseParameterSet) -> Result<StageResult> {
    spec.check(stage1)?;
    config.validate()?;
    let n = stage1.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mutation = Normal::new(0.0, config.mutation_scale)
        .map_err(|e| Error::config(format!("invalid mutation scale: {e}")))?;

    let mut population: Vec<Vec<f64>> = Vec::with_capacity(config.population);
    population.push(stage1.channels.iter().map(|c| wrap_phase(c.theta)).collect());
    while population.len() < config.population {
        population.push((0..n).map(|_| wrap_phase(rng.random_range(-PI..PI))).collect());
    }
    let mut scores = evaluate_population(stage1, spec, &population)?;
    let mut trace = Vec::with_capacity(config.generations + 1);

    let rank = |scores: &[f64]| {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        order
    };
    let mut order = rank(&scores);
    trace.push(scores[order[0]]);

    for _ in 0..config.generations {
        let mut next: Vec<Vec<f64>> = order[..config.elite].iter().map(|&i| population[i].clone()).collect();
        while next.len() < config.population {
            let a = tournament(&mut rng, &scores, config.tournament);
            let b = tournament(&mut rng, &scores, config.tournament);
            let mut child = population[a].clone();
            if rng.random::<f64>() < config.crossover_rate {
                for (gene, other) in child.iter_mut().zip(&population[b]) {
                    if rng.random::<bool>() {
                        *gene = *other;
                    }
                }
            }
            for gene in child.iter_mut() {
                if rng.random::<f64>() < config.mutation_rate {
                    *gene = wrap_phase(*gene + mutation.sample(&mut rng));
                }
            }
            next.push(child);
        }
        population = next;
        scores = evaluate_population(stage1, spec, &population)?;
        order = rank(&scores);
        trace.push(scores[order[0]]);
    }

    let best = canonical_phases(&with_phases(stage1, &population[order[0]]));
    let value = objective(&best, spec)?;
    Ok(StageResult {
        params: best,
        objective: value,
        iterations: config.generations,
        status: if value <= config.threshold {
            Status::Converged
        } else {
            Status::IterationCap
        },
        trace,
        search_trace: Vec::new(),
    })
}

fn tournament(rng: &mut ChaCha8Rng, scores: &[f64], size: usize) -> usize {
    let mut best = rng.random_range(0..scores.len());
    for _ in 1..size {
        let c = rng.random_range(0..scores.len());
        if scores[c] < scores[best] {
            best = c;
        }
    }
    best
}

/// Full optimization record, serialized as the JSON report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub spec: ObjectiveSpec,
    pub stage1_config: Stage1Config,
    pub stage2_config: Stage2Config,
    pub initial: PulseParameterSet,
    pub stage1: StageResult,
    pub stage2: StageResult,
    /// `1 − f(T)` of the final parameters.
    pub objective: f64,
    pub converged: bool,
}

pub fn optimize_two_stage(
    spec: &ObjectiveSpec,
    stage1_config: &Stage1Config,
    stage2_config: &Stage2Config,
    init: &PulseParameterSet,
) -> Result<OptimizationReport> {
    let mut zeroed = init.clone();
    for ch in &mut zeroed.channels {
        ch.theta = 0.0;
    }
    let stage1 = optimize_stage1(spec, stage1_config, &zeroed)?;
    let stage2 = optimize_stage2(spec, stage2_config, &stage1.params)?;
    let objective = stage2.objective;
    Ok(OptimizationReport {
        spec: *spec,
        stage1_config: *stage1_config,
        stage2_config: *stage2_config,
        initial: init.clone(),
        converged: objective <= stage2_config.threshold,
        stage1,
        stage2,
        objective,
    })
}

/// Uniform starting point: every channel at amplitude `amplitude`, width
/// `sigma`, phase zero.
pub fn uniform_init(chain: Chain, amplitude: f64, sigma: f64) -> PulseParameterSet {
    PulseParameterSet {
        channels: vec![GaussianParams::new(amplitude, sigma, 0.0); chain.channel_count()],
        total_time: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_wrapping() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_phase(0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn tables_are_near_optimal() {
        let bell = objective(&PulseParameterSet::bell_table(), &ObjectiveSpec::new(Chain::Bell)).unwrap();
        assert!(bell <= 0.01, "{bell}");
        let ghz = objective(&PulseParameterSet::ghz_table(), &ObjectiveSpec::new(Chain::Ghz)).unwrap();
        assert!(ghz <= 0.01, "{ghz}");
    }

    #[test]
    fn undriven_chain_overlaps_by_one_third() {
        let spec = ObjectiveSpec::new(Chain::Bell);
        let p = uniform_init(Chain::Bell, 0.0, 0.25);
        assert!((objective(&p, &spec).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_channel_count_is_rejected() {
        let spec = ObjectiveSpec::new(Chain::Ghz);
        assert!(matches!(objective(&PulseParameterSet::bell_table(), &spec), Err(Error::Config(_))));
    }

    #[test]
    fn canonical_form_preserves_objective() {
        let spec = ObjectiveSpec::new(Chain::Ghz);
        let p = PulseParameterSet::ghz_table();
        let c = canonical_phases(&p);
        assert_eq!(c.channels[0].theta, 0.0);
        let a = objective(&p, &spec).unwrap();
        let b = objective(&c, &spec).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn stage2_config_validation() {
        let spec = ObjectiveSpec::new(Chain::Bell);
        let bad = Stage2Config {
            elite: 64,
            ..Stage2Config::default()
        };
        assert!(optimize_stage2(&spec, &bad, &PulseParameterSet::bell_table()).is_err());
    }
}
