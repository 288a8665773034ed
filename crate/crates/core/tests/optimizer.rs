use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qutrit_core::optimize::{
    canonical_phases, objective, optimize_stage1, optimize_stage2, stage1_gradient, stage1_search_objective,
    uniform_init, Chain, ObjectiveSpec, Stage1Config, Stage2Config, Status,
};
use qutrit_core::PulseParameterSet;

fn zero_phases(mut p: PulseParameterSet) -> PulseParameterSet {
    for ch in &mut p.channels {
        ch.theta = 0.0;
    }
    p
}

/// Four-point central stencil, O(h⁴).
fn stencil(params: &PulseParameterSet, spec: &ObjectiveSpec, index: usize) -> f64 {
    let n = params.len();
    let (channel, is_sigma) = (index % n, index >= n);
    let x0 = if is_sigma {
        params.channels[channel].sigma
    } else {
        params.channels[channel].amplitude
    };
    let h = 2e-3 * x0;
    let at = |dx: f64| {
        let mut p = params.clone();
        if is_sigma {
            p.channels[channel].sigma = x0 + dx;
        } else {
            p.channels[channel].amplitude = x0 + dx;
        }
        stage1_search_objective(&p, spec).unwrap()
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

#[test]
fn gradient_matches_four_point_stencil() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for chain in [Chain::Bell, Chain::Ghz] {
        let spec = ObjectiveSpec::new(chain);
        let mut p = uniform_init(chain, 1.0, 0.25);
        for ch in &mut p.channels {
            ch.amplitude = rng.random_range(2.0..8.0);
            ch.sigma = rng.random_range(0.2..0.3);
        }
        let g = stage1_gradient(&p, &spec, &Stage1Config::default()).unwrap();
        let oracle: Vec<f64> = (0..g.len()).map(|i| stencil(&p, &spec, i)).collect();
        let scale = oracle.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in g.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-4 * scale, "{chain:?}: {a} vs {b} (scale {scale})");
        }
    }
}

#[test]
fn table_one_is_a_fixed_point() {
    let spec = ObjectiveSpec::new(Chain::Bell);
    let init = zero_phases(PulseParameterSet::bell_table());
    let result = optimize_stage1(&spec, &Stage1Config::default(), &init).unwrap();
    assert!(result.iterations <= 5, "{} iterations", result.iterations);
    assert_eq!(result.status, Status::Converged);
    for (a, b) in result.params.channels.iter().zip(&init.channels) {
        assert!((a.amplitude - b.amplitude).abs() <= 0.01 * b.amplitude);
        assert!((a.sigma - b.sigma).abs() <= 0.01 * b.sigma);
        assert_eq!(a.theta, 0.0);
    }
}

#[test]
fn stage1_from_a_neutral_start() {
    for chain in [Chain::Bell, Chain::Ghz] {
        let spec = ObjectiveSpec::new(chain);
        let result = optimize_stage1(&spec, &Stage1Config::default(), &uniform_init(chain, 1.0, 0.25)).unwrap();
        assert!(result.objective < 0.05, "{chain:?}: {}", result.objective);
        assert!(result.search_trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(result.trace.len(), result.search_trace.len());
        let cfg = Stage1Config::default();
        for ch in &result.params.channels {
            assert!(ch.amplitude >= cfg.amplitude_bounds.0 && ch.amplitude <= cfg.amplitude_bounds.1);
            assert!(ch.sigma >= cfg.sigma_bounds.0 && ch.sigma <= cfg.sigma_bounds.1);
            assert_eq!(ch.theta, 0.0);
        }
    }
}

#[test]
fn stage1_rejects_bad_input() {
    let spec = ObjectiveSpec::new(Chain::Ghz);
    assert!(optimize_stage1(&spec, &Stage1Config::default(), &PulseParameterSet::bell_table()).is_err());
}

#[test]
fn stage2_is_seed_deterministic_and_canonical() {
    let spec = ObjectiveSpec::new(Chain::Bell);
    let base = zero_phases(PulseParameterSet::bell_table());
    let config = Stage2Config {
        population: 24,
        generations: 30,
        seed: 9,
        ..Stage2Config::default()
    };
    let a = optimize_stage2(&spec, &config, &base).unwrap();
    let b = optimize_stage2(&spec, &config, &base).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.params.channels[0].theta, 0.0);
    assert!(a.trace.windows(2).all(|w| w[1] <= w[0]), "elitism keeps the best");
    for (x, y) in a.params.channels.iter().zip(&base.channels) {
        assert_eq!((x.amplitude, x.sigma), (y.amplitude, y.sigma));
        assert!(x.theta > -std::f64::consts::PI && x.theta <= std::f64::consts::PI);
    }
    assert_relative_eq!(a.objective, objective(&a.params, &spec).unwrap(), epsilon = 1e-15);
    assert!(a.objective <= 1e-3, "{}", a.objective);
}

#[test]
fn table_one_phases_reach_the_target() {
    let spec = ObjectiveSpec::new(Chain::Bell);
    let table = PulseParameterSet::bell_table();
    assert!(objective(&table, &spec).unwrap() <= 1e-3);
    let canon = canonical_phases(&table);
    assert_relative_eq!(
        objective(&canon, &spec).unwrap(),
        objective(&table, &spec).unwrap(),
        epsilon = 1e-12
    );
}
