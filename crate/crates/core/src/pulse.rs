//! Drive pulses.
//!
//! Every Rabi frequency is a [`PulseChannel`]: a complex function of time on
//! `[0, T]`. The base family is the baseline-subtracted symmetric Gaussian,
//! which vanishes at both ends of the window. Noise and the GHZ bridge are
//! wrappers around another channel.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// A complex Rabi frequency `Ω(t)` in units of `1/T`.
pub trait PulseChannel: Send + Sync + fmt::Debug {
    fn value(&self, t: f64) -> C64;
}

pub type PulseRef = Arc<dyn PulseChannel>;

/// One `(A, σ, θ)` triple. Serialized with the keys `A`, `sigma`, `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    #[serde(rename = "A")]
    pub amplitude: f64,
    pub sigma: f64,
    pub theta: f64,
}

impl GaussianParams {
    pub const fn new(amplitude: f64, sigma: f64, theta: f64) -> Self {
        Self {
            amplitude,
            sigma,
            theta,
        }
    }
}

/// Optimized Bell-chain pulses (channels Ω₁…Ω₄).
pub const BELL_TABLE: [GaussianParams; 4] = [
    GaussianParams::new(2.94874, 0.24857, 0.00000),
    GaussianParams::new(6.47073, 0.24714, 3.14148),
    GaussianParams::new(5.64579, 0.24667, -0.76998),
    GaussianParams::new(9.28367, 0.25359, -2.37169),
];

/// Optimized GHZ-chain pulses (channels Ω₁…Ω₅).
pub const GHZ_TABLE: [GaussianParams; 5] = [
    GaussianParams::new(7.07187, 0.25219, 2.02993),
    GaussianParams::new(5.76400, 0.25323, 1.11166),
    GaussianParams::new(9.46614, 0.25667, -2.47423),
    GaussianParams::new(3.87972, 0.24955, 2.66979),
    GaussianParams::new(7.65357, 0.25311, -1.76635),
];

/// Per-channel Gaussian parameters plus the total duration `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseParameterSet {
    pub channels: Vec<GaussianParams>,
    pub total_time: f64,
}

impl PulseParameterSet {
    pub fn new(channels: Vec<GaussianParams>, total_time: f64) -> Result<Self> {
        let set = Self {
            channels,
            total_time,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn bell_table() -> Self {
        Self {
            channels: BELL_TABLE.to_vec(),
            total_time: 1.0,
        }
    }

    pub fn ghz_table() -> Self {
        Self {
            channels: GHZ_TABLE.to_vec(),
            total_time: 1.0,
        }
    }

    /// Amplitudes may be zero (an undriven channel) but not negative; widths
    /// must be strictly positive.
    pub fn validate(&self) -> Result<()> {
        if !(self.total_time > 0.0) || !self.total_time.is_finite() {
            return Err(Error::config(format!(
                "total time must be positive, got {}",
                self.total_time
            )));
        }
        if !matches!(self.channels.len(), 4 | 5) {
            return Err(Error::config(format!(
                "expected 4 (Bell) or 5 (GHZ) pulse channels, got {}",
                self.channels.len()
            )));
        }
        for (k, p) in self.channels.iter().enumerate() {
            if !(p.amplitude >= 0.0) || !(p.sigma > 0.0) || !p.theta.is_finite() {
                return Err(Error::config(format!(
                    "channel {}: need A >= 0, sigma > 0 and finite theta, got {:?}",
                    k + 1,
                    p
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Pulse objects for every channel, in channel order.
    pub fn pulses(&self) -> Vec<PulseRef> {
        self.channels
            .iter()
            .map(|p| Arc::new(GaussianPulse::new(*p, self.total_time)) as PulseRef)
            .collect()
    }

    /// Reads a JSON array of `{A, sigma, theta}` objects.
    pub fn from_json(text: &str, total_time: f64) -> Result<Self> {
        let channels: Vec<GaussianParams> = serde_json::from_str(text)?;
        Self::new(channels, total_time)
    }

    pub fn channels_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.channels)?)
    }
}

/// `(A/T)·[exp(−(t−T/2)²/(2(σT)²)) − B]/(1 − B)·e^{iθ}` with
/// `B = exp(−(T/2)²/(2(σT)²))`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianPulse {
    params: GaussianParams,
    total_time: f64,
    baseline: f64,
    phase: C64,
}

impl GaussianPulse {
    pub fn new(params: GaussianParams, total_time: f64) -> Self {
        let width = params.sigma * total_time;
        let half = 0.5 * total_time;
        let baseline = (-(half * half) / (2.0 * width * width)).exp();
        Self {
            params,
            total_time,
            baseline,
            phase: C64::from_polar(1.0, params.theta),
        }
    }

    pub fn params(&self) -> GaussianParams {
        self.params
    }

    fn real_envelope(&self, t: f64) -> f64 {
        let width = self.params.sigma * self.total_time;
        let dt = t - 0.5 * self.total_time;
        let g = (-(dt * dt) / (2.0 * width * width)).exp();
        self.params.amplitude / self.total_time * (g - self.baseline) / (1.0 - self.baseline)
    }
}

impl PulseChannel for GaussianPulse {
    fn value(&self, t: f64) -> C64 {
        self.phase * self.real_envelope(t)
    }
}

/// Checked evaluation of a single Gaussian envelope.
pub fn gaussian_envelope(t: f64, amplitude: f64, sigma: f64, theta: f64, total_time: f64) -> Result<C64> {
    if !(0.0..=total_time).contains(&t) {
        return Err(Error::TimeOutOfDomain {
            t,
            total: total_time,
        });
    }
    Ok(GaussianPulse::new(GaussianParams::new(amplitude, sigma, theta), total_time).value(t))
}

/// Identically zero drive.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPulse;

impl PulseChannel for ZeroPulse {
    fn value(&self, _t: f64) -> C64 {
        C64::new(0.0, 0.0)
    }
}

pub const DEFAULT_NOISE_GRID: usize = 1000;

/// Multiplicative amplitude noise `(1 + r(t))`, `r` uniform in `(−R, R)` and
/// piecewise constant on `grid` equal segments of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub amplitude: f64,
    pub seed: u64,
    pub grid: usize,
    /// Generator stream; distinct channels draw from distinct streams.
    #[serde(default)]
    pub stream: u64,
}

impl NoiseSpec {
    pub fn new(amplitude: f64, seed: u64) -> Self {
        Self {
            amplitude,
            seed,
            grid: DEFAULT_NOISE_GRID,
            stream: 0,
        }
    }

    pub fn with_grid(mut self, grid: usize) -> Self {
        self.grid = grid;
        self
    }

    /// Independent realization for channel `channel` under the same seed.
    pub fn for_channel(&self, channel: u64) -> Self {
        Self {
            stream: channel,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.amplitude) {
            return Err(Error::InvalidNoise(self.amplitude));
        }
        if self.grid == 0 {
            return Err(Error::config("noise grid must have at least one segment"));
        }
        Ok(())
    }

    /// The segment multipliers `1 + r_i`.
    pub fn multipliers(&self) -> Result<Vec<f64>> {
        self.validate()?;
        if self.amplitude == 0.0 {
            return Ok(vec![1.0; self.grid]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        let r = self.amplitude;
        Ok((0..self.grid)
            .map(|_| {
                // Reject the closed endpoint so r stays in the open interval.
                loop {
                    let x: f64 = rng.random_range(-r..r);
                    if x != -r {
                        break 1.0 + x;
                    }
                }
            })
            .collect())
    }
}

#[derive(Debug)]
pub struct NoisyPulse {
    inner: PulseRef,
    multipliers: Vec<f64>,
    total_time: f64,
}

impl NoisyPulse {
    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.multipliers.len();
        let s = (t / self.total_time * n as f64).floor();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(n - 1)
        }
    }
}

impl PulseChannel for NoisyPulse {
    fn value(&self, t: f64) -> C64 {
        self.inner.value(t) * self.multipliers[self.segment(t)]
    }
}

/// Wraps `pulse` with the seeded amplitude noise described by `noise`.
pub fn apply_amplitude_noise(pulse: PulseRef, noise: &NoiseSpec, total_time: f64) -> Result<NoisyPulse> {
    Ok(NoisyPulse {
        inner: pulse,
        multipliers: noise.multipliers()?,
        total_time,
    })
}

/// Base envelope of the two bridge drives, `√(2ω|Ω₂|)·e^{i·arg(Ω₂)/2}`.
#[derive(Debug)]
pub struct BridgePulse {
    effective: PulseRef,
    omega: f64,
}

impl PulseChannel for BridgePulse {
    fn value(&self, t: f64) -> C64 {
        let target = self.effective.value(t);
        let modulus = target.norm();
        if modulus == 0.0 {
            return C64::new(0.0, 0.0);
        }
        C64::from_polar((2.0 * self.omega * modulus).sqrt(), 0.5 * target.arg())
    }
}

/// Splits the effective two-photon coupling `Ω₂` into equal physical drives
/// `Ω₂₀ = Ω₃₀` with `Ω₂₀·Ω₃₀/(2ω) = Ω₂`. The `cos ωt` and `i·sin ωt`
/// modulations are applied by the Hamiltonian, not here.
pub fn ghz_bridge_pulses(effective: PulseRef, omega: f64) -> Result<(PulseRef, PulseRef)> {
    if !(omega > 0.0) {
        return Err(Error::config(format!("bridge frequency must be positive, got {omega}")));
    }
    // Two objects: the physical lasers are independent (e.g. under noise).
    let first: PulseRef = Arc::new(BridgePulse {
        effective: effective.clone(),
        omega,
    });
    let second: PulseRef = Arc::new(BridgePulse { effective, omega });
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn envelope_examples() {
        let z = gaussian_envelope(0.0, 3.0, 0.2, 0.7, 1.0).unwrap();
        assert_eq!(z.norm(), 0.0);
        let z = gaussian_envelope(1.0, 3.0, 0.2, 0.7, 1.0).unwrap();
        assert!(z.norm() < 1e-15);

        let peak = gaussian_envelope(0.5, 2.94874, 0.24857, 0.0, 1.0).unwrap();
        assert_relative_eq!(peak.re, 2.94874, epsilon = 1e-14);
        assert_eq!(peak.im, 0.0);

        let quarter = gaussian_envelope(0.25, 1.0, 0.25, 0.0, 1.0).unwrap();
        let oracle = ((-0.5f64).exp() - (-2.0f64).exp()) / (1.0 - (-2.0f64).exp());
        assert_relative_eq!(quarter.re, oracle, epsilon = 1e-14);
        assert_relative_eq!(quarter.re, 0.54494, epsilon = 1e-5);
    }

    #[test]
    fn envelope_domain() {
        assert!(matches!(
            gaussian_envelope(-0.01, 1.0, 0.25, 0.0, 1.0),
            Err(Error::TimeOutOfDomain { .. })
        ));
        assert!(gaussian_envelope(1.5, 1.0, 0.25, 0.0, 1.0).is_err());
    }

    #[test]
    fn envelope_scales_with_total_time() {
        let t_total = 10.0;
        let peak = gaussian_envelope(5.0, 4.0, 0.25, 0.0, t_total).unwrap();
        assert_relative_eq!(peak.re, 0.4, epsilon = 1e-14);
    }

    #[test]
    fn tables_respect_the_drive_ceiling() {
        for set in [PulseParameterSet::bell_table(), PulseParameterSet::ghz_table()] {
            let max = set
                .channels
                .iter()
                .map(|p| p.amplitude / set.total_time)
                .fold(0.0, f64::max);
            assert!(max <= 10.0, "max drive {max}");
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(PulseParameterSet::new(BELL_TABLE[..3].to_vec(), 1.0).is_err());
        let mut bad = BELL_TABLE.to_vec();
        bad[1].sigma = 0.0;
        assert!(PulseParameterSet::new(bad, 1.0).is_err());
        let mut bad = BELL_TABLE.to_vec();
        bad[0].amplitude = -1.0;
        assert!(PulseParameterSet::new(bad, 1.0).is_err());
    }

    #[test]
    fn pulse_file_format() {
        let text = r#"[{"A": 1.5, "sigma": 0.25, "theta": 0.0},
                       {"A": 2.0, "sigma": 0.3, "theta": 1.0},
                       {"A": 2.5, "sigma": 0.2, "theta": -1.0},
                       {"A": 3.0, "sigma": 0.25, "theta": 3.0}]"#;
        let set = PulseParameterSet::from_json(text, 1.0).unwrap();
        assert_eq!(set.channels[1], GaussianParams::new(2.0, 0.3, 1.0));
        let back = PulseParameterSet::from_json(&set.channels_json().unwrap(), 1.0).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn zero_noise_is_identity() {
        let base: PulseRef = Arc::new(GaussianPulse::new(BELL_TABLE[2], 1.0));
        let noisy = apply_amplitude_noise(base.clone(), &NoiseSpec::new(0.0, 9), 1.0).unwrap();
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert_eq!(noisy.value(t), base.value(t));
        }
    }

    #[test]
    fn noise_is_bounded_and_reproducible() {
        let base: PulseRef = Arc::new(GaussianPulse::new(BELL_TABLE[3], 1.0));
        let spec = NoiseSpec::new(0.1, 3);
        let noisy = apply_amplitude_noise(base.clone(), &spec, 1.0).unwrap();
        for i in 1..1000 {
            let t = i as f64 / 1000.0 + 1e-4;
            let ratio = noisy.value(t) / base.value(t);
            assert!((ratio - 1.0).norm() < 0.1);
        }
        assert_eq!(noisy.value(0.0).norm(), 0.0);
        assert!(noisy.value(1.0).norm() < 1e-15);

        let spec = NoiseSpec::new(0.05, 42).with_grid(1000);
        let a = spec.multipliers().unwrap();
        let b = spec.multipliers().unwrap();
        assert_eq!(a.len(), 1000);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        let other = spec.for_channel(1).multipliers().unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn noise_amplitude_must_be_below_one() {
        let base: PulseRef = Arc::new(ZeroPulse);
        assert!(matches!(
            apply_amplitude_noise(base.clone(), &NoiseSpec::new(1.0, 0), 1.0),
            Err(Error::InvalidNoise(_))
        ));
        assert!(apply_amplitude_noise(base, &NoiseSpec::new(-0.1, 0), 1.0).is_err());
    }

    #[test]
    fn bridge_examples() {
        let (a, b) = ghz_bridge_pulses(Arc::new(ZeroPulse), 200.0).unwrap();
        assert_eq!(a.value(0.3), C64::new(0.0, 0.0));
        assert_eq!(b.value(0.7), C64::new(0.0, 0.0));

        #[derive(Debug)]
        struct Constant(C64);
        impl PulseChannel for Constant {
            fn value(&self, _t: f64) -> C64 {
                self.0
            }
        }
        let (a, _) = ghz_bridge_pulses(Arc::new(Constant(C64::new(2.0, 0.0))), 200.0).unwrap();
        assert_relative_eq!(a.value(0.5).re, 800f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(a.value(0.5).re, 28.284, epsilon = 1e-3);

        assert!(ghz_bridge_pulses(Arc::new(ZeroPulse), 0.0).is_err());
    }

    #[test]
    fn bridge_reconstructs_the_effective_coupling() {
        let omega = 200.0;
        let effective: PulseRef = Arc::new(GaussianPulse::new(GHZ_TABLE[1], 1.0));
        let (a, b) = ghz_bridge_pulses(effective.clone(), omega).unwrap();
        for i in 0..1000 {
            let t = i as f64 / 999.0;
            let rebuilt = a.value(t) * b.value(t) / (2.0 * omega);
            assert!((rebuilt - effective.value(t)).norm() <= 1e-12);
        }
    }
}
