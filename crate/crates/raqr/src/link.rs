//! Link budgets and the uncoded link-level engine: received power, SNR for
//! atomic and classical receivers, scaling-law predictors, ergodic capacity,
//! and a seeded block-error Monte Carlo over Rayleigh fading.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, FREE_SPACE_IMPEDANCE, SPEED_OF_LIGHT};
use crate::receiver::{linear_signal_limit, NoiseBudget};

/// Link-level misconfiguration.
#[derive(Debug, thiserror::Error)]
pub enum LinkError {
    #[error("total noise power is zero; the noise budget is misconfigured")]
    ZeroNoise,
}

/// Geometry and bandwidth configuration of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkScenario {
    /// Transmit power P_t (W).
    pub transmit_power: f64,
    /// Transmit antenna gain G_t (linear).
    pub transmit_gain: f64,
    /// Transmitter-receiver distance L (m).
    pub distance: f64,
    /// Carrier frequency f_c (Hz).
    pub carrier_frequency: f64,
    /// Atomic receiver bandwidth B_RAQR (Hz).
    pub raqr_bandwidth: f64,
    /// Classical receiver bandwidth B_CL (Hz).
    pub classical_bandwidth: f64,
    /// Ambient temperature T_env (K).
    pub environment_temperature: f64,
}

impl LinkScenario {
    /// Incident power flux density P_t·G_t/(4πL²) (W/m²).
    pub fn flux_density(&self) -> f64 {
        self.transmit_power * self.transmit_gain
            / (4.0 * std::f64::consts::PI * self.distance * self.distance)
    }

    /// Incident field amplitude √(2Z₀·S)·|h| (V/m).
    pub fn incident_field(&self, channel_magnitude: f64) -> f64 {
        (2.0 * FREE_SPACE_IMPEDANCE * self.flux_density()).sqrt() * channel_magnitude
    }

    pub fn rf_wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }
}

/// Conductor-antenna receiver used as the comparison baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalReceiver {
    /// Antenna gain G_r (linear).
    pub antenna_gain: f64,
    /// Low-noise amplifier gain (linear).
    pub lna_gain: f64,
    /// Noise factor F (linear, >= 1).
    pub noise_factor: f64,
    /// Butterworth filter order of the baseband selectivity model.
    pub filter_order: u32,
}

/// Baseband received power P_S = β·(P_t·G_t/4πL²)·|h|² at the atomic
/// receiver output (the unit-modulus phase response drops out).
pub fn raqr_received_power(scenario: &LinkScenario, beta: f64, h: Complex64) -> f64 {
    beta * scenario.flux_density() * h.norm_sqr()
}

/// SNR of the atomic receiver against its three-term noise budget.
pub fn raqr_snr(signal_power: f64, budget: &NoiseBudget) -> Result<f64, LinkError> {
    let noise = budget.total();
    if noise <= 0.0 {
        return Err(LinkError::ZeroNoise);
    }
    Ok(signal_power / noise)
}

/// SNR of the classical receiver:
/// γ_CL = G_t·G_r·λ²·P_t / ((4πL)²·k_B·T_env·F·B_CL).
pub fn classical_snr(scenario: &LinkScenario, rx: &ClassicalReceiver) -> f64 {
    let lambda = scenario.rf_wavelength();
    let four_pi_l = 4.0 * std::f64::consts::PI * scenario.distance;
    scenario.transmit_gain * rx.antenna_gain * lambda * lambda * scenario.transmit_power
        / (four_pi_l
            * four_pi_l
            * BOLTZMANN
            * scenario.environment_temperature
            * rx.noise_factor
            * scenario.classical_bandwidth)
}

/// Which noise term dominates the SNR-gain scaling law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseRegime {
    /// Photon-shot-limited: the gain follows the fourth power of the
    /// linewidth ratio times the probe-power ratio.
    PhotonShotLimit,
    /// Standard-quantum-limited: the gain follows the linewidth ratio.
    StandardQuantumLimit,
}

/// Predicted five-level over four-level SNR gain from the linewidth budgets.
pub fn snr_gain_prediction(
    gamma_eit_4l: f64,
    gamma_eit_5l: f64,
    probe_power_ratio: f64,
    regime: NoiseRegime,
) -> f64 {
    assert!(gamma_eit_4l > 0.0 && gamma_eit_5l > 0.0);
    let ratio = gamma_eit_4l / gamma_eit_5l;
    match regime {
        NoiseRegime::PhotonShotLimit => probe_power_ratio * ratio.powi(4),
        NoiseRegime::StandardQuantumLimit => ratio,
    }
}

/// Signal Rabi frequency clamped to the linear-response margin; models the
/// saturation plateau without re-solving the nonlinear dynamics.
pub fn clamped_signal_rabi(omega_sig: f64, omega_lo: f64, gamma_eit: f64, margin: f64) -> f64 {
    omega_sig.min(linear_signal_limit(omega_lo, gamma_eit, margin))
}

/// Ergodic capacity B·E[log₂(1 + γ|h|²)] over Rayleigh fading (|h|²
/// exponential with unit mean), by seeded Monte Carlo.
pub fn ergodic_capacity(gamma: f64, bandwidth: f64, n_samples: usize, seed: u64) -> f64 {
    assert!(n_samples > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0f64;
    for _ in 0..n_samples {
        let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
        let h2 = -u.ln();
        acc += (1.0 + gamma * h2).log2();
    }
    bandwidth * acc / n_samples as f64
}

/// Gray-mapped 16-QAM constellation with unit average symbol energy.
pub fn qam16_constellation() -> [Complex64; 16] {
    // Gray order per axis: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
    const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
    let scale = 1.0 / 10f64.sqrt();
    let mut points = [Complex64::ZERO; 16];
    for (i, &re) in LEVELS.iter().enumerate() {
        for (q, &im) in LEVELS.iter().enumerate() {
            points[i * 4 + q] = Complex64::new(re * scale, im * scale);
        }
    }
    points
}

/// Uncoded block format: one known pilot opens every block, the rest is
/// 16-QAM data; a block is in error when any symbol decision is wrong.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModemConfig {
    /// Symbols per block, pilot included.
    pub block_length: usize,
    /// Number of fading blocks per run.
    pub block_count: usize,
    /// Known pilot symbols per block.
    pub pilot_count: usize,
    /// Run seed; per-block streams derive from it.
    pub seed: u64,
}

impl Default for ModemConfig {
    fn default() -> Self {
        ModemConfig {
            block_length: 256,
            block_count: 800,
            pilot_count: 1,
            seed: 0,
        }
    }
}

/// Block-fading Rayleigh channel: one h ~ CN(0, 1) draw per block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FadingModel;

impl FadingModel {
    pub fn draw(&self, rng: &mut impl Rng) -> Complex64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) / 2f64.sqrt()
    }
}

/// Outcome of a block-error run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlerResult {
    /// Errored blocks over total blocks.
    pub bler: f64,
    /// Empirical mean of |h|² across the run.
    pub mean_channel_power: f64,
    pub block_count: usize,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Independent per-block random stream derived from (seed, block index), so
/// parallel and serial runs draw identical values.
fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(block as u64 + 1)))
}

fn detect(point: Complex64, constellation: &[Complex64; 16]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, &c) in constellation.iter().enumerate() {
        let d = (point - c).norm_sqr();
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

/// Block-error rate over block-fading Rayleigh channels at mean symbol SNR
/// `gamma`: least-squares channel estimation from the pilot, per-symbol
/// linear MMSE equalization, minimum-distance detection.
pub fn bler_simulation(modem: &ModemConfig, fading: &FadingModel, gamma: f64) -> BlerResult {
    assert!(modem.block_length > modem.pilot_count);
    let constellation = qam16_constellation();
    let sigma2 = 1.0 / gamma;
    let sigma = (sigma2 / 2.0).sqrt();
    let data_len = modem.block_length - modem.pilot_count;
    let pilot = Complex64::from(1.0);

    let per_block: Vec<(bool, f64)> = (0..modem.block_count)
        .into_par_iter()
        .map(|block| {
            let mut rng = block_rng(modem.seed, block);
            let h = fading.draw(&mut rng);
            let noise = |rng: &mut ChaCha8Rng| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * sigma, im * sigma)
            };
            // pilot pass: least-squares channel estimate
            let mut h_est = Complex64::ZERO;
            for _ in 0..modem.pilot_count {
                let y = h * pilot + noise(&mut rng);
                h_est += y / pilot;
            }
            h_est /= modem.pilot_count as f64;

            let mut errored = false;
            for _ in 0..data_len {
                let index = rng.random_range(0..16usize);
                let s = constellation[index];
                let y = h * s + noise(&mut rng);
                // per-symbol LMMSE equalizer for unit-energy symbols
                let equalized = h_est.conj() * y / (h_est.norm_sqr() + sigma2);
                if detect(equalized, &constellation) != index {
                    errored = true;
                    // decisions after the first error cannot un-error the block
                    break;
                }
            }
            (errored, h.norm_sqr())
        })
        .collect();

    let errors = per_block.iter().filter(|(e, _)| *e).count();
    let mean_h2 =
        per_block.iter().map(|(_, p)| p).sum::<f64>() / modem.block_count as f64;
    BlerResult {
        bler: errors as f64 / modem.block_count as f64,
        mean_channel_power: mean_h2,
        block_count: modem.block_count,
    }
}

/// Perfect-CSI single-tap AWGN variant of the block-error run: no fading,
/// no estimation, minimum-distance detection at symbol SNR `gamma`.
pub fn bler_simulation_awgn(modem: &ModemConfig, gamma: f64) -> BlerResult {
    let constellation = qam16_constellation();
    let sigma = (1.0 / gamma / 2.0).sqrt();
    let data_len = modem.block_length - modem.pilot_count;

    let errors = (0..modem.block_count)
        .into_par_iter()
        .filter(|&block| {
            let mut rng = block_rng(modem.seed, block);
            for _ in 0..data_len {
                let index = rng.random_range(0..16usize);
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let y = constellation[index] + Complex64::new(re * sigma, im * sigma);
                if detect(y, &constellation) != index {
                    return true;
                }
            }
            false
        })
        .count();
    BlerResult {
        bler: errors as f64 / modem.block_count as f64,
        mean_channel_power: 1.0,
        block_count: modem.block_count,
    }
}

/// Butterworth magnitude response 1/√(1 + (Δf/B)^{2n}) of the classical
/// receiver's baseband filter.
pub fn butterworth_response(bandwidth: f64, order: u32, delta_f: f64) -> f64 {
    assert!(order >= 1, "filter order must be at least 1");
    1.0 / (1.0 + (delta_f / bandwidth).powi(2 * order as i32)).sqrt()
}
