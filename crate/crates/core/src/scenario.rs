//! Cell geometry, user drops and large-scale fading.
//!
//! The base station is a uniform linear array of `M` antennas lying on the
//! x-axis, centred at the origin, split into `B` contiguous subarrays (SAs).
//! Users are dropped uniformly by area over the annulus `r_i <= |p| <= r_e`.
//! Each SA is visible to a user independently with probability `P_b`; the
//! gain of a visible SA is the path loss averaged over its antennas, with
//! one log-normal shadowing draw per (user, SA) pair.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::analytics::CrossTerm;
use crate::{Error, Result};

pub type UeId = u64;

/// Physical, protocol and simulation parameters of one cell.
///
/// Powers and noise are in watts and every internal computation is linear;
/// decibel values only appear in the fields suffixed `_db`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Inner cell radius (m).
    pub r_i: f64,
    /// Outer cell radius (m).
    pub r_e: f64,
    /// Total number of antennas.
    pub antennas: usize,
    /// Number of subarrays.
    pub subarrays: usize,
    /// Length of the array (m).
    pub array_length: f64,
    /// Probability that a given SA is visible to a user.
    pub p_visible: f64,
    /// Probability that an inactive user starts an access attempt in a block.
    pub p_access: f64,
    /// Number (and length) of orthogonal RA pilots.
    pub tau_ra: usize,
    /// Path-loss exponent.
    pub kappa: f64,
    /// Path loss at the reference distance (dB).
    pub g_db: f64,
    /// Shadowing standard deviation (dB).
    pub sigma_sf_db: f64,
    /// Receiver noise power (W).
    pub noise_power: f64,
    /// UE transmit power during random access (W).
    pub ue_tx_power: f64,
    /// BS transmit power for the precoded responses (W).
    pub bs_tx_power: f64,
    /// UE transmit power during payload transmission (W).
    pub data_tx_power: f64,
    /// SINR needed to decode any control message (dB).
    pub decode_threshold_db: f64,
    /// Channel uses per coherence block.
    pub coherence_uses: usize,
    /// Coherence time (s).
    pub coherence_time: f64,
    /// System bandwidth (Hz).
    pub bandwidth_hz: f64,
    /// Payload intervals (blocks) per admitted session.
    pub payload_intervals: u32,
    /// RA attempts before a user gives up.
    pub max_attempts: u32,
    /// Per-block retransmission probability of a backlogged user.
    pub backoff_retx_prob: f64,
    /// Bias of the strongest-user test in the SUCRe family: a contender
    /// repeats its pilot when its gain exceeds half the total plus this.
    pub sucre_bias: f64,
    /// Leakage model of the precoded downlink response.
    pub cross_term: CrossTerm,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            r_i: 20.0,
            r_e: 200.0,
            antennas: 400,
            subarrays: 10,
            array_length: 40.0,
            p_visible: 0.5,
            p_access: 0.01,
            tau_ra: 10,
            kappa: 3.8,
            g_db: -34.53,
            sigma_sf_db: 10.0,
            // -174 dBm/Hz + 73 dB (20 MHz) + 9 dB noise figure = -92 dBm
            noise_power: 10f64.powf(-12.2),
            ue_tx_power: 0.1,
            bs_tx_power: 0.1,
            data_tx_power: 0.1,
            decode_threshold_db: 0.0,
            coherence_uses: 200,
            coherence_time: 1e-3,
            bandwidth_hz: 20e6,
            payload_intervals: 10,
            max_attempts: 10,
            backoff_retx_prob: 0.5,
            sucre_bias: 0.0,
            cross_term: CrossTerm::Gain,
        }
    }
}

impl ScenarioConfig {
    /// Checks every documented bound, naming the first violated one.
    pub fn validate(&self) -> Result<()> {
        fn bad(msg: String) -> Result<()> {
            Err(Error::InvalidConfig(msg))
        }
        let positive = [
            ("r_i", self.r_i),
            ("r_e", self.r_e),
            ("array_length", self.array_length),
            ("noise_power", self.noise_power),
            ("ue_tx_power", self.ue_tx_power),
            ("bs_tx_power", self.bs_tx_power),
            ("data_tx_power", self.data_tx_power),
            ("kappa", self.kappa),
            ("t_c", self.coherence_time),
            ("bandwidth_w", self.bandwidth_hz),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} = {v} must be finite and > 0"));
            }
        }
        if self.r_i >= self.r_e {
            return bad(format!("r_i = {} must be < r_e = {}", self.r_i, self.r_e));
        }
        if self.antennas < 2 {
            return bad(format!("M = {} must be >= 2", self.antennas));
        }
        if self.subarrays == 0 || !self.antennas.is_multiple_of(self.subarrays) {
            return bad(format!(
                "M = {} must be a positive multiple of B = {}",
                self.antennas, self.subarrays
            ));
        }
        for (name, v) in [("P_b", self.p_visible), ("backoff_retx_prob", self.backoff_retx_prob)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} = {v} must lie in (0, 1]"));
            }
        }
        // P_a = 0 is allowed: it switches new arrivals off.
        if !(0.0..=1.0).contains(&self.p_access) {
            return bad(format!("P_a = {} must lie in [0, 1]", self.p_access));
        }
        for (name, v) in [
            ("tau_ra", self.tau_ra as u64),
            ("T", self.coherence_uses as u64),
            ("mu_pd", self.payload_intervals as u64),
            ("max_attempts", self.max_attempts as u64),
        ] {
            if v == 0 {
                return bad(format!("{name} must be > 0"));
            }
        }
        for (name, v) in [
            ("g_db", self.g_db),
            ("decode_threshold_db", self.decode_threshold_db),
            ("sucre_bias", self.sucre_bias),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} = {v} must be finite"));
            }
        }
        if !(self.sigma_sf_db.is_finite() && self.sigma_sf_db >= 0.0) {
            return bad(format!("sigma_sf_db = {} must be >= 0", self.sigma_sf_db));
        }
        Ok(())
    }

    /// Antennas per subarray, `M_b = M / B`.
    pub fn antennas_per_sa(&self) -> usize {
        self.antennas / self.subarrays
    }

    /// Decode threshold on the linear scale.
    pub fn decode_threshold(&self) -> f64 {
        10f64.powf(self.decode_threshold_db / 10.0)
    }

    /// Returns a copy with every power and the noise multiplied by `factor`.
    /// All SINRs are invariant under this map.
    pub fn with_power_scale(&self, factor: f64) -> Self {
        Self {
            noise_power: self.noise_power * factor,
            ue_tx_power: self.ue_tx_power * factor,
            bs_tx_power: self.bs_tx_power * factor,
            data_tx_power: self.data_tx_power * factor,
            ..self.clone()
        }
    }
}

/// Which subarrays a user can see.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VisibilityVector {
    bits: Vec<bool>,
}

impl VisibilityVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Builds a vector from 0/1 entries.
    pub fn from_01(entries: &[u8]) -> Result<Self> {
        entries
            .iter()
            .map(|&e| match e {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::Domain(format!("visibility entry {e} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_visible(&self, sa: usize) -> bool {
        self.bits[sa]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Indices of visible subarrays.
    pub fn visible(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &v)| v).map(|(b, _)| b)
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&v| v).count()
    }

    /// True when the two regions share no subarray.
    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !(a && b))
    }
}

impl fmt::Display for VisibilityVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Lifecycle of a user within a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UeState {
    /// No pending request; may start a new attempt with probability `P_a`.
    Inactive,
    /// Lost at least one attempt and retries with the backoff probability.
    Backoff,
    /// Holds a payload data pilot.
    Active,
    /// Gave up after exhausting its attempts.
    Failed,
}

/// One user terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct UserEquipment {
    pub id: UeId,
    pub position: [f64; 2],
    pub visibility: VisibilityVector,
    /// Subarray-averaged large-scale gains (linear), zero where blocked.
    pub beta: Vec<f64>,
    pub state: UeState,
    /// RA attempts made in the current request.
    pub attempts: u32,
    /// RA pilot chosen in the current block, if transmitting.
    pub chosen_pilot: Option<usize>,
    pub pdp: Option<crate::PdpId>,
    pub remaining_intervals: u32,
}

impl UserEquipment {
    /// Sum of the gains over all subarrays.
    pub fn total_gain(&self) -> f64 {
        self.beta.iter().sum()
    }
}

/// Antenna coordinates: `M` points equally spaced along the x-axis,
/// centred at the origin. Antenna `m` belongs to subarray `m / M_b`.
pub fn antenna_positions(config: &ScenarioConfig) -> Vec<[f64; 2]> {
    let m = config.antennas;
    let spacing = config.array_length / (m - 1) as f64;
    let start = -config.array_length / 2.0;
    (0..m).map(|i| [start + i as f64 * spacing, 0.0]).collect()
}

/// Path-loss gain `10^(-kappa log10(d) + (g + chi)/10)` at distance `d`
/// with shadowing realisation `chi_db`.
pub fn pathloss(d: f64, chi_db: f64, config: &ScenarioConfig) -> Result<f64> {
    if d.is_nan() || d <= 0.0 {
        return Err(Error::Domain(format!("distance {d} must be > 0")));
    }
    Ok(10f64.powf(-config.kappa * d.log10() + (config.g_db + chi_db) / 10.0))
}

/// Draws one visibility vector with independent Bernoulli(`P_b`) entries.
pub fn sample_visibility<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> VisibilityVector {
    VisibilityVector::new(
        (0..config.subarrays)
            .map(|_| rng.random::<f64>() < config.p_visible)
            .collect(),
    )
}

/// Averaged gain per subarray with caller-supplied shadowing per SA (dB).
/// Blocked subarrays get exactly zero.
pub fn subarray_gains_with_shadowing(
    position: [f64; 2],
    visibility: &VisibilityVector,
    antennas: &[[f64; 2]],
    shadowing_db: &[f64],
    config: &ScenarioConfig,
) -> Vec<f64> {
    let m_b = config.antennas_per_sa();
    (0..config.subarrays)
        .map(|b| {
            if !visibility.is_visible(b) {
                return 0.0;
            }
            let sum: f64 = antennas[b * m_b..(b + 1) * m_b]
                .iter()
                .map(|a| {
                    let d = (position[0] - a[0]).hypot(position[1] - a[1]);
                    // Users never sit on an antenna: r_i > 0 and the array is
                    // shorter than the inner diameter in every sane setup.
                    pathloss(d.max(f64::MIN_POSITIVE), shadowing_db[b], config).expect("distance is positive")
                })
                .sum();
            sum / m_b as f64
        })
        .collect()
}

/// Averaged gain per subarray, drawing one shadowing value per visible SA.
pub fn subarray_gains<R: Rng + ?Sized>(
    position: [f64; 2],
    visibility: &VisibilityVector,
    antennas: &[[f64; 2]],
    config: &ScenarioConfig,
    rng: &mut R,
) -> Vec<f64> {
    let shadow = Normal::new(0.0, config.sigma_sf_db).expect("validated std");
    // One draw per SA, visible or not, so that the stream does not depend
    // on the visibility pattern.
    let chi: Vec<f64> = (0..config.subarrays).map(|_| shadow.sample(rng)).collect();
    subarray_gains_with_shadowing(position, visibility, antennas, &chi, config)
}

/// Uniform-by-area point in the annulus, by inverting the radial CDF.
pub fn sample_position<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> [f64; 2] {
    let (ri2, re2) = (config.r_i * config.r_i, config.r_e * config.r_e);
    let r = (rng.random::<f64>() * (re2 - ri2) + ri2).sqrt();
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    [r * theta.cos(), r * theta.sin()]
}

/// Drops one fresh inactive user.
pub fn drop_user<R: Rng + ?Sized>(
    id: UeId,
    config: &ScenarioConfig,
    antennas: &[[f64; 2]],
    rng: &mut R,
) -> UserEquipment {
    let position = sample_position(config, rng);
    let visibility = sample_visibility(config, rng);
    let beta = subarray_gains(position, &visibility, antennas, config, rng);
    UserEquipment {
        id,
        position,
        visibility,
        beta,
        state: UeState::Inactive,
        attempts: 0,
        chosen_pilot: None,
        pdp: None,
        remaining_intervals: 0,
    }
}

/// Drops `k` inactive users with ids `0..k`.
pub fn place_users<R: Rng + ?Sized>(config: &ScenarioConfig, k: usize, rng: &mut R) -> Vec<UserEquipment> {
    let antennas = antenna_positions(config);
    (0..k as UeId).map(|id| drop_user(id, config, &antennas, rng)).collect()
}
