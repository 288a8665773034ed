use std::sync::Arc;

use ndarray::Array1;
use proptest::prelude::*;

use qutrit_core::fidelity::{fidelity, fidelity_pure};
use qutrit_core::hamiltonian::hermiticity_error;
use qutrit_core::optimize::{canonical_phases, objective, Chain, ObjectiveSpec};
use qutrit_core::propagate::{outer, propagate_lindblad, trace, IntegratorConfig};
use qutrit_core::pulse::{apply_amplitude_noise, gaussian_envelope, GaussianParams, GaussianPulse};
use qutrit_core::{
    DecoherenceSpec, HamiltonianModel, ModelVariant, NoiseSpec, PhaseMode, PulseChannel, PulseParameterSet,
    QuditRegister, TargetKind, TargetState, C64,
};

fn channel() -> impl Strategy<Value = GaussianParams> {
    (0.0..10.0f64, 0.1..0.5f64, -3.0..3.0f64).prop_map(|(a, s, th)| GaussianParams::new(a, s, th))
}

fn params(n: usize) -> impl Strategy<Value = PulseParameterSet> {
    prop::collection::vec(channel(), n).prop_map(|channels| PulseParameterSet {
        channels,
        total_time: 1.0,
    })
}

/// Chain links as `(row, column)` of the coupling `Ω_k`.
fn links(chain: Chain) -> &'static [(usize, usize)] {
    match chain {
        Chain::Bell => &[(1, 0), (2, 1), (2, 3), (3, 4)],
        Chain::Ghz => &[(1, 0), (2, 1), (2, 3), (3, 4), (4, 5)],
    }
}

fn target_sites(chain: Chain) -> &'static [usize] {
    match chain {
        Chain::Bell => &[0, 2, 4],
        Chain::Ghz => &[0, 2, 5],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chain_gauge_leaves_fidelity_unchanged(
        p in params(5),
        site_phases in prop::collection::vec(-3.0..3.0f64, 6),
        common in -3.0..3.0f64,
        ghz in any::<bool>(),
    ) {
        let chain = if ghz { Chain::Ghz } else { Chain::Bell };
        let mut p = p;
        p.channels.truncate(chain.channel_count());
        let mut phi = site_phases;
        for &s in target_sites(chain) {
            phi[s] = common;
        }
        let mut gauged = p.clone();
        for (ch, &(r, c)) in gauged.channels.iter_mut().zip(links(chain)) {
            ch.theta += phi[r] - phi[c];
        }
        let spec = ObjectiveSpec { steps: 1500, ..ObjectiveSpec::new(chain) };
        let a = objective(&p, &spec).unwrap();
        let b = objective(&gauged, &spec).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
        let c = objective(&canonical_phases(&p), &spec).unwrap();
        prop_assert!((a - c).abs() < 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
    }

    #[test]
    fn hamiltonians_are_hermitian(p in params(5), t in 0.0..1.0f64, v in 0.0..500.0f64) {
        for variant in [
            ModelVariant::BellFull,
            ModelVariant::BellEffective,
            ModelVariant::GhzFull,
            ModelVariant::GhzIntermediate,
            ModelVariant::GhzEffective,
        ] {
            let mut q = p.clone();
            q.channels.truncate(variant.channel_count());
            let model = HamiltonianModel::from_params(variant, &q, v, Some(200.0)).unwrap();
            let h = model.evaluate(t);
            prop_assert!(hermiticity_error(&h) < 1e-12);
            prop_assert_eq!(h.nrows(), variant.dim());
        }
    }

    #[test]
    fn envelopes_are_symmetric_and_pinned(c in channel(), t in 0.0..1.0f64, total in 0.5..4.0f64) {
        let tt = t * total;
        let a = gaussian_envelope(tt, c.amplitude, c.sigma, c.theta, total).unwrap();
        let b = gaussian_envelope(total - tt, c.amplitude, c.sigma, c.theta, total).unwrap();
        prop_assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()));
        prop_assert!(a.norm() <= c.amplitude / total * (1.0 + 1e-12));
        prop_assert!(gaussian_envelope(0.0, c.amplitude, c.sigma, c.theta, total).unwrap().norm() < 1e-12);
        prop_assert!(gaussian_envelope(total, c.amplitude, c.sigma, c.theta, total).unwrap().norm() < 1e-12);
        prop_assert!(gaussian_envelope(total * 1.01, c.amplitude, c.sigma, c.theta, total).is_err());
    }

    #[test]
    fn noise_stays_within_bounds(
        r in 0.0..0.99f64,
        seed in any::<u64>(),
        grid in 1usize..200,
        t in 0.0..1.0f64,
    ) {
        let spec = NoiseSpec::new(r, seed).with_grid(grid);
        let m = spec.multipliers().unwrap();
        prop_assert_eq!(m.len(), grid);
        prop_assert!(m.iter().all(|x| (1.0 - r..=1.0 + r).contains(x)));
        prop_assert_eq!(&m, &spec.multipliers().unwrap());
        let base = Arc::new(GaussianPulse::new(GaussianParams::new(5.0, 0.25, 0.4), 1.0));
        let noisy = apply_amplitude_noise(base.clone(), &spec, 1.0).unwrap();
        let ratio = noisy.value(t).norm() / base.value(t).norm().max(1e-300);
        prop_assert!(base.value(t).norm() < 1e-12 || (ratio - 1.0).abs() <= r + 1e-12);
    }

    #[test]
    fn basis_index_round_trips(labels in prop::collection::vec(0u8..3, 2..=3)) {
        let reg = QuditRegister::new(labels.len()).unwrap();
        let idx = reg.basis_index(&labels).unwrap();
        prop_assert!(idx < reg.dim());
        prop_assert_eq!(reg.labels(idx), labels);
    }

    #[test]
    fn fidelity_of_random_states_is_bounded(
        re in prop::collection::vec(-1.0..1.0f64, 27),
        im in prop::collection::vec(-1.0..1.0f64, 27),
        t in 0.0..1.0f64,
    ) {
        let mut psi: Array1<C64> = re.iter().zip(&im).map(|(a, b)| C64::new(*a, *b)).collect();
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        psi.mapv_inplace(|z| z / norm);
        let target = TargetState::full(TargetKind::Ghz3D, PhaseMode::InteractionPhase, 4000.0);
        let f = fidelity_pure(&psi, &target, t).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        let g = fidelity(&outer(&psi), &target, t).unwrap();
        prop_assert!((f - g).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn lindblad_preserves_trace_and_hermiticity(gamma in 0.0..0.5f64, deph in 0.0..0.5f64) {
        let model =
            HamiltonianModel::from_params(ModelVariant::BellFull, &PulseParameterSet::bell_table(), 200.0, None).unwrap();
        let mut psi = Array1::zeros(9);
        psi[0] = C64::new(1.0, 0.0);
        let traj = propagate_lindblad(
            &model,
            &outer(&psi),
            &DecoherenceSpec::new(gamma, deph),
            &IntegratorConfig::new(20_000, 20),
        )
        .unwrap();
        prop_assert!(traj.physicality.max_trace_drift < 1e-7);
        prop_assert!(traj.physicality.max_hermiticity_error < 1e-8);
        prop_assert!(traj.physicality.min_eigenvalue >= -1e-6);
        prop_assert!((trace(traj.final_state()).re - 1.0).abs() < 1e-7);
    }
}
