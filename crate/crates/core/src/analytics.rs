//! Closed-form probabilities, SINRs and rates.
//!
//! All quantities are linear. Gains `beta` are the subarray-averaged
//! large-scale coefficients from [`crate::scenario`]; powers are in watts.

use crate::scenario::{UeId, VisibilityVector};
use crate::{Error, Result};

/// Probability that a given SA is visible to the tagged UE and to none of
/// its `n - 1` co-pilot contenders: `P_b (1 - P_b)^(n - 1)`.
pub fn p_exclusive_sa(p_b: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("contender count must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p_b) {
        return Err(Error::Domain(format!("P_b = {p_b} is not a probability")));
    }
    Ok(p_b * (1.0 - p_b).powi(n as i32 - 1))
}

/// Probability that at least one of `b` SAs is exclusively visible to the
/// tagged UE among `n` contenders.
pub fn p_exclusive_any(p_b: f64, n: usize, b: usize) -> Result<f64> {
    if b == 0 {
        return Err(Error::Domain("subarray count must be >= 1".into()));
    }
    let p = p_exclusive_sa(p_b, n)?;
    Ok(1.0 - (1.0 - p).powi(b as i32))
}

/// One row of the exclusivity curve family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusivityPoint {
    pub subarrays: usize,
    pub contenders: usize,
    pub probability: f64,
}

/// `p_exclusive_any` over `1..=max_contenders` for each subarray count.
pub fn exclusivity_grid(p_b: f64, subarrays: &[usize], max_contenders: usize) -> Result<Vec<ExclusivityPoint>> {
    let mut out = Vec::with_capacity(subarrays.len() * max_contenders);
    for &b in subarrays {
        for n in 1..=max_contenders {
            out.push(ExclusivityPoint {
                subarrays: b,
                contenders: n,
                probability: p_exclusive_any(p_b, n, b)?,
            });
        }
    }
    Ok(out)
}

/// Transmit power and large-scale gain of one UE seen from one SA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emitter {
    pub power: f64,
    pub gain: f64,
}

impl Emitter {
    pub fn new(power: f64, gain: f64) -> Self {
        Self { power, gain }
    }

    fn received(&self) -> f64 {
        self.power * self.gain
    }
}

/// Per-SA constants of the uplink decode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkParams {
    pub antennas_per_sa: f64,
    pub tau_ra: f64,
    pub noise: f64,
}

impl UplinkParams {
    pub fn from_config(c: &crate::ScenarioConfig) -> Self {
        Self {
            antennas_per_sa: c.antennas_per_sa() as f64,
            tau_ra: c.tau_ra as f64,
            noise: c.noise_power,
        }
    }
}

/// Total received power `sum_j rho_j beta_j` at one SA over every UE
/// transmitting in the block.
pub fn received_load(all_tx: &[Emitter]) -> f64 {
    all_tx.iter().map(Emitter::received).fold(0.0, |a, r| a + r)
}

/// SINR of the UL message of `tagged` decoded at one SA with the estimate
/// from its RA pilot.
///
/// `co_pilot` lists the other UEs on the same pilot; `block_load` is
/// [`received_load`] over every transmitter in the block, `tagged`
/// included. The first denominator term is the coherent interference from
/// co-pilot UEs, the second the non-coherent interference.
pub fn ul_sinr_step1(tagged: Emitter, co_pilot: &[Emitter], block_load: f64, p: &UplinkParams) -> f64 {
    if tagged.gain == 0.0 {
        return 0.0;
    }
    let m_b = p.antennas_per_sa;
    let coherent: f64 = co_pilot.iter().map(|e| e.received().powi(2)).sum();
    let pilot_load = tagged.received() + co_pilot.iter().map(Emitter::received).sum::<f64>();
    m_b * tagged.received().powi(2) / (m_b * coherent + (pilot_load + p.noise / p.tau_ra) * (block_load + p.noise))
}

/// Uplink SINR when the SA is visible to `tagged` alone among its co-pilot
/// contenders.
pub fn ul_sinr_exclusive(tagged: Emitter, block_load: f64, p: &UplinkParams) -> f64 {
    if tagged.gain == 0.0 {
        return 0.0;
    }
    let m_b = p.antennas_per_sa;
    m_b * tagged.received().powi(2) / ((tagged.received() + p.noise / p.tau_ra) * (block_load + p.noise))
}

/// Channel-hardening limit `||y_t||^2 / M_b -> sum_i rho_i tau beta_i + sigma^2`
/// of the pilot-`t` observation at one SA.
pub fn alpha_squared(contenders: &[Emitter], tau_ra: f64, noise: f64) -> f64 {
    contenders.iter().map(|e| e.power * tau_ra * e.gain).sum::<f64>() + noise
}

/// One UE whose UL message was decoded at one or more SAs.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub ue: UeId,
    pub pilot: usize,
    pub power: f64,
    pub beta: Vec<f64>,
    pub visibility: VisibilityVector,
    /// Column of the decode matrix: SAs holding a reliable estimate.
    pub decoded: Vec<bool>,
}

/// Decode matrix `E`, visibility matrix `V` and candidate list `C`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecodeMatrix {
    subarrays: usize,
    candidates: Vec<Candidate>,
}

impl DecodeMatrix {
    pub fn new(subarrays: usize) -> Self {
        Self {
            subarrays,
            candidates: Vec::new(),
        }
    }

    /// Admits a candidate. Rejects decodes at SAs the UE cannot see and
    /// candidates that decoded nowhere.
    pub fn push(&mut self, c: Candidate) -> Result<()> {
        if c.decoded.len() != self.subarrays || c.visibility.len() != self.subarrays || c.beta.len() != self.subarrays {
            return Err(Error::Domain(format!("candidate {} has wrong dimensions", c.ue)));
        }
        if let Some(b) = (0..self.subarrays).find(|&b| c.decoded[b] && !c.visibility.is_visible(b)) {
            return Err(Error::Domain(format!("UE {} decoded at SA {b} it cannot see", c.ue)));
        }
        if !c.decoded.iter().any(|&d| d) {
            return Err(Error::Domain(format!("UE {} decoded at no SA", c.ue)));
        }
        self.candidates.push(c);
        Ok(())
    }

    pub fn subarrays(&self) -> usize {
        self.subarrays
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn position(&self, ue: UeId) -> Option<usize> {
        self.candidates.iter().position(|c| c.ue == ue)
    }

    /// Entry `E[b, k]` for the candidate at column `k`.
    pub fn entry(&self, b: usize, k: usize) -> bool {
        self.candidates[k].decoded[b]
    }

    /// Number of candidates precoded from SA `b`.
    pub fn delta(&self, b: usize) -> usize {
        self.candidates.iter().filter(|c| c.decoded[b]).count()
    }
}

/// Hardening constants `alpha_t^(b)^2` per (pilot, SA), with the per-SA
/// precoding counts `delta_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct HardeningConstants {
    alpha_sq: Vec<Vec<f64>>,
    delta: Vec<usize>,
}

impl HardeningConstants {
    /// `alpha_sq[t][b]` must come from [`alpha_squared`] over the UEs
    /// whose pilot-`t` transmission produced the estimates.
    pub fn new(alpha_sq: Vec<Vec<f64>>, dm: &DecodeMatrix) -> Self {
        let delta = (0..dm.subarrays()).map(|b| dm.delta(b)).collect();
        Self { alpha_sq, delta }
    }

    pub fn alpha_sq(&self, pilot: usize, b: usize) -> f64 {
        self.alpha_sq[pilot][b]
    }

    pub fn delta(&self, b: usize) -> usize {
        self.delta[b]
    }
}

/// Constants of the precoded downlink response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownlinkParams {
    pub antennas_per_sa: f64,
    pub tau_ra: f64,
    pub noise: f64,
    pub bs_power: f64,
    pub subarrays: usize,
}

impl DownlinkParams {
    pub fn from_config(c: &crate::ScenarioConfig) -> Self {
        Self {
            antennas_per_sa: c.antennas_per_sa() as f64,
            tau_ra: c.tau_ra as f64,
            noise: c.noise_power,
            bs_power: c.bs_tx_power,
            subarrays: c.subarrays,
        }
    }
}

/// Per-stream leakage term of the downlink SINR.
///
/// A unit-norm precoder built from an estimate independent of the tagged
/// channel leaks exactly `beta_k` of power to it, which is [`CrossTerm::Gain`].
/// [`CrossTerm::GainOverAlpha`] divides that by `alpha_{r(k')}^(b)`. That
/// form is dimensionally inconsistent and breaks
/// the invariance of every SINR under a common power scaling, so it is
/// kept only for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossTerm {
    #[default]
    Gain,
    GainOverAlpha,
}

/// Candidates `k'` whose response from SA `b` is beamformed partly onto
/// candidate column `k`: same pilot, both see `b`, and `b` decoded `k'`.
pub fn interference_set(k: usize, b: usize, dm: &DecodeMatrix) -> Vec<UeId> {
    let tagged = &dm.candidates()[k];
    if !tagged.visibility.is_visible(b) {
        return Vec::new();
    }
    dm.candidates()
        .iter()
        .enumerate()
        .filter(|&(j, c)| {
            j != k && c.pilot == tagged.pilot && c.decoded[b] && {
                debug_assert!(c.visibility.is_visible(b));
                true
            }
        })
        .map(|(_, c)| c.ue)
        .collect()
}

/// SINR of the precoded response received by candidate `ue`.
///
/// Subarrays that decoded nobody transmit nothing and contribute no term.
pub fn dl_sinr_step2(
    ue: UeId,
    dm: &DecodeMatrix,
    hc: &HardeningConstants,
    p: &DownlinkParams,
    cross: CrossTerm,
) -> Result<f64> {
    let k = dm
        .position(ue)
        .ok_or_else(|| Error::Domain(format!("UE {ue} is not a candidate")))?;
    let tagged = &dm.candidates()[k];
    let (m_b, b_count) = (p.antennas_per_sa, p.subarrays as f64);

    let mut signal = 0.0;
    let mut directed = 0.0;
    let mut leakage = 0.0;
    for b in tagged.visibility.visible() {
        let delta = hc.delta(b);
        if delta == 0 {
            continue;
        }
        let beta_k = tagged.beta[b];
        let share = p.bs_power / (b_count * delta as f64);
        let coherent = share * tagged.power * p.tau_ra * beta_k * beta_k;
        if tagged.decoded[b] {
            signal += coherent / hc.alpha_sq(tagged.pilot, b);
        }
        for other in dm.candidates() {
            if !other.decoded[b] {
                continue;
            }
            // Directed interference needs a shared pilot; same pilot means
            // same hardening constant as the tagged UE.
            if other.ue != ue && other.pilot == tagged.pilot {
                directed += coherent / hc.alpha_sq(other.pilot, b);
            }
            leakage += match cross {
                CrossTerm::Gain => share * beta_k,
                CrossTerm::GainOverAlpha => share * beta_k / hc.alpha_sq(other.pilot, b).sqrt(),
            };
        }
    }
    Ok(m_b * signal / (m_b * directed + leakage + p.noise))
}

/// Zero-forcing data SINR of a UE with gains `beta_k` among `others`
/// (the other active UEs).
pub fn zf_data_sinr(
    beta_k: &[f64],
    others: &[&[f64]],
    antennas_per_sa: f64,
    data_power: f64,
    noise: f64,
) -> Result<f64> {
    let own: f64 = beta_k.iter().sum();
    if own <= 0.0 {
        return Err(Error::Domain("active UE sees no subarray".into()));
    }
    let mut cross = 0.0;
    for other in others {
        let total: f64 = other.iter().sum();
        if total <= 0.0 {
            return Err(Error::Domain("active UE sees no subarray".into()));
        }
        let overlap: f64 = beta_k.iter().zip(other.iter()).map(|(a, b)| a * b).sum();
        cross += overlap / total;
    }
    Ok(data_power / noise * (antennas_per_sa * own - cross))
}

/// Zero-forcing SINR of every UE in `active`, in `O(|A| B)`.
pub fn zf_sinr_all(active: &[&[f64]], antennas_per_sa: f64, data_power: f64, noise: f64) -> Result<Vec<f64>> {
    let Some(first) = active.first() else {
        return Ok(Vec::new());
    };
    let totals: Vec<f64> = active.iter().map(|b| b.iter().sum()).collect();
    if totals.iter().any(|&t| t <= 0.0) {
        return Err(Error::Domain("active UE sees no subarray".into()));
    }
    // normalised load per SA: sum_j beta_j^(b) / sum_b' beta_j^(b')
    let mut load = vec![0.0; first.len()];
    for (beta, total) in active.iter().zip(&totals) {
        for (l, g) in load.iter_mut().zip(beta.iter()) {
            *l += g / total;
        }
    }
    Ok(active
        .iter()
        .zip(&totals)
        .map(|(beta, &total)| {
            let cross: f64 = beta.iter().zip(&load).map(|(g, l)| g * (l - g / total)).sum();
            data_power / noise * (antennas_per_sa * total - cross)
        })
        .collect())
}

/// Frame constants of the spectral-efficiency expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub bandwidth_hz: f64,
    pub coherence_time: f64,
    pub coherence_uses: usize,
}

impl RateParams {
    pub fn from_config(c: &crate::ScenarioConfig) -> Self {
        Self {
            bandwidth_hz: c.bandwidth_hz,
            coherence_time: c.coherence_time,
            coherence_uses: c.coherence_uses,
        }
    }
}

/// Spectral efficiency (bit/s/Hz) of a UE that needed `mu_ra` attempts of
/// `phi_ra` channel uses each and then sent payload for `mu_pd` intervals,
/// with `tau_pd` pilot symbols per coherence block.
pub fn spectral_efficiency(
    mu_ra: u32,
    mu_pd: u32,
    phi_ra: f64,
    tau_pd: usize,
    p: &RateParams,
    gamma: f64,
) -> Result<f64> {
    if tau_pd > p.coherence_uses {
        return Err(Error::Domain(format!(
            "pilot length {tau_pd} exceeds coherence block of {} uses",
            p.coherence_uses
        )));
    }
    let payload = mu_pd as f64 * p.bandwidth_hz * p.coherence_time;
    let access = payload / (mu_ra as f64 * phi_ra + payload);
    let training = 1.0 - tau_pd as f64 / p.coherence_uses as f64;
    Ok(access * training * (1.0 + gamma).log2())
}

/// Sum rate (bit/s) of the active set from per-UE spectral efficiencies.
pub fn sum_rate(rates: &[f64], bandwidth_hz: f64) -> f64 {
    // fold from +0.0: an empty float sum is -0.0
    bandwidth_hz * rates.iter().fold(0.0, |a, r| a + r)
}

/// One UE of a small uplink instance for [`expected_term_powers`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermUe {
    pub power: f64,
    pub gain: f64,
    /// Whether the UE transmits the tagged UE's pilot.
    pub on_pilot: bool,
}

/// A single-SA uplink instance: every transmitter in the block.
#[derive(Debug, Clone, PartialEq)]
pub struct TermInstance {
    pub antennas_per_sa: f64,
    pub tau_ra: f64,
    pub noise: f64,
    /// Index into `ues` of the tagged UE, which must be on the pilot.
    pub tagged: usize,
    pub ues: Vec<TermUe>,
}

/// Squared mean and variance of one term of the decoded UL symbol.
///
/// The mean is taken over fading and noise with the data symbols held
/// fixed, then its squared magnitude is averaged over i.i.d. unit-power
/// symbols; the variance is the remaining power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermPower {
    pub mean_sq: f64,
    pub variance: f64,
}

/// Expected power of the six terms of the decoded UL symbol at one SA:
/// desired signal, co-pilot signals, cross-channel products between
/// co-pilot UEs, pilot-noise leakage, off-pilot UEs and data noise.
pub fn expected_term_powers(inst: &TermInstance) -> Result<[TermPower; 6]> {
    let tagged = inst
        .ues
        .get(inst.tagged)
        .ok_or_else(|| Error::Domain("tagged index out of range".into()))?;
    if !tagged.on_pilot {
        return Err(Error::Domain("tagged UE must transmit the pilot".into()));
    }
    let m = inst.antennas_per_sa;
    let rx = |u: &TermUe| u.power * u.gain;
    let pilot: Vec<f64> = inst.ues.iter().filter(|u| u.on_pilot).map(rx).collect();
    let off_pilot: f64 = inst.ues.iter().filter(|u| !u.on_pilot).map(rx).fold(0.0, |a, r| a + r);
    let pilot_sum: f64 = pilot.iter().sum();
    let pilot_sq: f64 = pilot.iter().map(|x| x * x).sum();
    let others_sq: f64 = inst
        .ues
        .iter()
        .enumerate()
        .filter(|&(i, u)| u.on_pilot && i != inst.tagged)
        .map(|(_, u)| rx(u).powi(2))
        .sum();
    let estimate = pilot_sum + inst.noise / inst.tau_ra;
    let own = rx(tagged);
    Ok([
        TermPower {
            mean_sq: m * m * own * own,
            variance: m * own * own,
        },
        TermPower {
            mean_sq: m * m * others_sq,
            variance: m * others_sq,
        },
        TermPower {
            mean_sq: 0.0,
            variance: m * (pilot_sum * pilot_sum - pilot_sq),
        },
        TermPower {
            mean_sq: 0.0,
            variance: m * inst.noise / inst.tau_ra * pilot_sum,
        },
        TermPower {
            mean_sq: 0.0,
            variance: m * estimate * off_pilot,
        },
        TermPower {
            mean_sq: 0.0,
            variance: m * estimate * inst.noise,
        },
    ])
}

/// Uplink SINR assembled from the term powers: the squared mean of the
/// desired term over everything else, its own variance included.
pub fn sinr_from_terms(terms: &[TermPower; 6]) -> f64 {
    let interference: f64 = terms[1].mean_sq + terms.iter().map(|t| t.variance).sum::<f64>();
    terms[0].mean_sq / interference
}
