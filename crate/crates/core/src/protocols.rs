//! Access rounds of NOVR-XL, SUCRe-XL and mSUCRe-XL.
//!
//! A round takes the UEs transmitting in one RA block, decides every
//! decode by comparing an analytic SINR with the threshold, and grants a
//! PDP to each UE that completes the handshake.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::analytics::{
    alpha_squared, dl_sinr_step2, received_load, ul_sinr_step1, Candidate, DecodeMatrix, DownlinkParams, Emitter,
    HardeningConstants, UplinkParams,
};
use crate::scenario::{ScenarioConfig, UeId, UeState, UserEquipment};
use crate::scheduler::{PdpId, PdpPool};
use crate::{Error, Result};

/// Random-access protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    NovrXl,
    SucreXl,
    MsucreXl,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::NovrXl, Protocol::SucreXl, Protocol::MsucreXl];

    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::NovrXl => "novr-xl",
            Protocol::SucreXl => "sucre-xl",
            Protocol::MsucreXl => "msucre-xl",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown protocol {s:?}")))
    }
}

/// Channel uses spent by one access attempt.
///
/// Message fields in bits, sent at one bit per channel use: RA-RNTI 16,
/// TA 8, C-RNTI 16, contention-resolution ID 48, UE ID 16, VR report `B`.
pub fn ra_overhead(protocol: Protocol, tau_ra: usize, subarrays: usize) -> Result<usize> {
    if tau_ra == 0 || subarrays == 0 {
        return Err(Error::Domain("tau_ra and B must be >= 1".into()));
    }
    const RA_RNTI: usize = 16;
    const TA: usize = 8;
    const C_RNTI: usize = 16;
    const CRI: usize = 48;
    const ID: usize = 16;
    let vr = subarrays;
    let steps = match protocol {
        Protocol::SucreXl => [tau_ra, tau_ra + RA_RNTI + TA, tau_ra + C_RNTI, CRI + C_RNTI],
        Protocol::MsucreXl => [tau_ra, tau_ra + RA_RNTI + TA, tau_ra + C_RNTI + vr, CRI + C_RNTI],
        Protocol::NovrXl => [tau_ra + vr + ID, CRI + ID + TA, 0, 0],
    };
    Ok(steps.iter().sum())
}

/// Draws this block's transmissions. Every population slot consumes
/// exactly two uniforms in order, whatever its state, so the draws of one
/// slot do not depend on the others. Transmitters get `chosen_pilot` set
/// and their attempt counter incremented; everybody else is cleared.
///
/// Returns, per RA pilot, the population indices transmitting on it.
pub fn form_contention<R: Rng + ?Sized>(
    population: &mut [UserEquipment],
    config: &ScenarioConfig,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let mut sets = vec![Vec::new(); config.tau_ra];
    for (i, ue) in population.iter_mut().enumerate() {
        let u_tx: f64 = rng.random();
        let u_pilot: f64 = rng.random();
        let p = match ue.state {
            UeState::Inactive => config.p_access,
            UeState::Backoff => config.backoff_retx_prob,
            UeState::Active | UeState::Failed => 0.0,
        };
        ue.chosen_pilot = None;
        if u_tx < p {
            let t = ((u_pilot * config.tau_ra as f64) as usize).min(config.tau_ra - 1);
            ue.chosen_pilot = Some(t);
            ue.attempts += 1;
            sets[t].push(i);
        }
    }
    sets
}

/// Result of one attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttemptOutcome {
    Success(PdpId),
    Failure,
}

/// Intermediate state of one round, kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct RaBlockState {
    /// Population indices per RA pilot.
    pub contention: Vec<Vec<usize>>,
    /// Retransmitting subsets (SUCRe family only).
    pub retransmit: Option<Vec<Vec<usize>>>,
    pub decode: DecodeMatrix,
}

/// Outcomes of every transmitter, in population order.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub outcomes: Vec<(usize, AttemptOutcome)>,
    pub block: RaBlockState,
}

/// Runs the access round of `protocol` over the sets from
/// [`form_contention`], granting PDPs from `pool`.
pub fn run_round(
    protocol: Protocol,
    contention: Vec<Vec<usize>>,
    population: &[UserEquipment],
    pool: &mut PdpPool,
    config: &ScenarioConfig,
) -> Result<RoundReport> {
    match protocol {
        Protocol::NovrXl => novr_round(contention, population, pool, config),
        Protocol::SucreXl => sucre_round(contention, population, pool, config, false),
        Protocol::MsucreXl => sucre_round(contention, population, pool, config, true),
    }
}

/// Step-1 decode of every UE in `sets` at every SA; returns the decode
/// matrix and the hardening constants of those sets.
fn uplink_decode(
    sets: &[Vec<usize>],
    population: &[UserEquipment],
    config: &ScenarioConfig,
) -> (DecodeMatrix, HardeningConstants) {
    let b_count = config.subarrays;
    let rho = config.ue_tx_power;
    let ul = UplinkParams::from_config(config);
    let threshold = config.decode_threshold();

    let loads: Vec<f64> = (0..b_count)
        .map(|b| {
            let tx: Vec<Emitter> = sets
                .iter()
                .flatten()
                .map(|&i| Emitter::new(rho, population[i].beta[b]))
                .collect();
            received_load(&tx)
        })
        .collect();

    let mut dm = DecodeMatrix::new(b_count);
    for (t, set) in sets.iter().enumerate() {
        for &k in set {
            let ue = &population[k];
            let decoded: Vec<bool> = (0..b_count)
                .map(|b| {
                    if !ue.visibility.is_visible(b) {
                        return false;
                    }
                    let co: Vec<Emitter> = set
                        .iter()
                        .filter(|&&i| i != k)
                        .map(|&i| Emitter::new(rho, population[i].beta[b]))
                        .collect();
                    ul_sinr_step1(Emitter::new(rho, ue.beta[b]), &co, loads[b], &ul) >= threshold
                })
                .collect();
            if decoded.iter().any(|&d| d) {
                dm.push(Candidate {
                    ue: ue.id,
                    pilot: t,
                    power: rho,
                    beta: ue.beta.clone(),
                    visibility: ue.visibility.clone(),
                    decoded,
                })
                .expect("decodes only at visible SAs");
            }
        }
    }
    let alpha_sq = sets
        .iter()
        .map(|set| {
            (0..b_count)
                .map(|b| {
                    let em: Vec<Emitter> = set.iter().map(|&i| Emitter::new(rho, population[i].beta[b])).collect();
                    alpha_squared(&em, config.tau_ra as f64, config.noise_power)
                })
                .collect()
        })
        .collect();
    let hc = HardeningConstants::new(alpha_sq, &dm);
    (dm, hc)
}

fn index_of(population: &[UserEquipment], ue: UeId, sets: &[Vec<usize>]) -> usize {
    sets.iter()
        .flatten()
        .copied()
        .find(|&i| population[i].id == ue)
        .expect("candidate comes from the contention sets")
}

/// Collects outcomes in population order; transmitters not listed in
/// `granted` failed.
fn assemble(contention: &[Vec<usize>], mut granted: Vec<(usize, PdpId)>) -> Vec<(usize, AttemptOutcome)> {
    let mut all: Vec<usize> = contention.iter().flatten().copied().collect();
    all.sort_unstable();
    granted.sort_unstable_by_key(|g| g.0);
    all.into_iter()
        .map(|i| match granted.binary_search_by_key(&i, |g| g.0) {
            Ok(j) => (i, AttemptOutcome::Success(granted[j].1)),
            Err(_) => (i, AttemptOutcome::Failure),
        })
        .collect()
}

/// Two-step NOVR-XL round: pilot with ID and VR report, then a precoded
/// grant from every SA that decoded the request.
pub fn novr_round(
    contention: Vec<Vec<usize>>,
    population: &[UserEquipment],
    pool: &mut PdpPool,
    config: &ScenarioConfig,
) -> Result<RoundReport> {
    let (dm, hc) = uplink_decode(&contention, population, config);
    let dl = DownlinkParams::from_config(config);
    let threshold = config.decode_threshold();

    let mut order: Vec<&Candidate> = dm.candidates().iter().collect();
    order.sort_by_key(|c| c.ue);
    let mut granted = Vec::new();
    for c in order {
        let pdp = pool.allocate(c.ue, &c.visibility)?;
        if dl_sinr_step2(c.ue, &dm, &hc, &dl, config.cross_term)? >= threshold {
            granted.push((index_of(population, c.ue, &contention), pdp));
        } else {
            pool.release(c.ue)?;
        }
    }
    let outcomes = assemble(&contention, granted);
    Ok(RoundReport {
        outcomes,
        block: RaBlockState {
            contention,
            retransmit: None,
            decode: dm,
        },
    })
}

/// Four-step SUCRe-XL round. Each contender compares its own received
/// gain over its VR with half of the pilot's total received gain and
/// repeats the pilot only if it is the strongest; the repeated request is
/// decoded against the repeaters alone. `modified` adds the VR report so
/// PDPs are shared by first fit; otherwise every admitted UE gets its own.
pub fn sucre_round(
    contention: Vec<Vec<usize>>,
    population: &[UserEquipment],
    pool: &mut PdpPool,
    config: &ScenarioConfig,
    modified: bool,
) -> Result<RoundReport> {
    let rho_tau = config.ue_tx_power * config.tau_ra as f64;
    let retransmit: Vec<Vec<usize>> = contention
        .iter()
        .map(|set| {
            let total: f64 = set.iter().map(|&i| rho_tau * population[i].total_gain()).sum();
            set.iter()
                .copied()
                .filter(|&k| rho_tau * population[k].total_gain() > total / 2.0 + config.sucre_bias)
                .collect()
        })
        .collect();

    let (dm, hc) = uplink_decode(&retransmit, population, config);
    let dl = DownlinkParams::from_config(config);
    let threshold = config.decode_threshold();

    let mut order: Vec<&Candidate> = dm.candidates().iter().collect();
    order.sort_by_key(|c| c.ue);
    let mut granted = Vec::new();
    for c in order {
        if dl_sinr_step2(c.ue, &dm, &hc, &dl, config.cross_term)? >= threshold {
            let pdp = if modified {
                pool.allocate(c.ue, &c.visibility)?
            } else {
                pool.allocate_exclusive(c.ue, &c.visibility)?
            };
            granted.push((index_of(population, c.ue, &retransmit), pdp));
        }
    }
    let outcomes = assemble(&contention, granted);
    Ok(RoundReport {
        outcomes,
        block: RaBlockState {
            contention,
            retransmit: Some(retransmit),
            decode: dm,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::VisibilityVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ue(id: UeId, vis: &[u8], gain: f64) -> UserEquipment {
        let visibility = VisibilityVector::from_01(vis).unwrap();
        let beta = vis.iter().map(|&v| if v == 1 { gain } else { 0.0 }).collect();
        UserEquipment {
            id,
            position: [0.0, 50.0],
            visibility,
            beta,
            state: UeState::Inactive,
            attempts: 1,
            chosen_pilot: Some(0),
            pdp: None,
            remaining_intervals: 0,
        }
    }

    fn cfg() -> ScenarioConfig {
        ScenarioConfig {
            subarrays: 4,
            antennas: 64,
            ..ScenarioConfig::default()
        }
    }

    // gain at which the received SNR is 40 dB
    fn strong(c: &ScenarioConfig) -> f64 {
        1e4 * c.noise_power / c.ue_tx_power
    }

    #[test]
    fn protocol_tags_round_trip() {
        for p in Protocol::ALL {
            assert_eq!(p.as_str().parse::<Protocol>().unwrap(), p);
        }
        assert!("aloha".parse::<Protocol>().is_err());
    }

    #[test]
    fn overheads_match_closed_forms() {
        for tau in 1..30 {
            for b in 1..40 {
                assert_eq!(ra_overhead(Protocol::SucreXl, tau, b).unwrap(), 104 + 3 * tau);
                assert_eq!(ra_overhead(Protocol::MsucreXl, tau, b).unwrap(), 104 + b + 3 * tau);
                assert_eq!(ra_overhead(Protocol::NovrXl, tau, b).unwrap(), 88 + b + tau);
            }
        }
        assert_eq!(ra_overhead(Protocol::SucreXl, 10, 10).unwrap(), 134);
        assert_eq!(ra_overhead(Protocol::MsucreXl, 10, 10).unwrap(), 144);
        assert_eq!(ra_overhead(Protocol::NovrXl, 10, 10).unwrap(), 108);
        assert!(ra_overhead(Protocol::NovrXl, 0, 10).is_err());
    }

    #[test]
    fn no_access_probability_means_no_contention() {
        let c = ScenarioConfig { p_access: 0.0, ..cfg() };
        let mut pop: Vec<_> = (0..50).map(|i| ue(i, &[1, 0, 0, 0], 1.0)).collect();
        let sets = form_contention(&mut pop, &c, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(sets.iter().all(Vec::is_empty));
        assert!(pop.iter().all(|u| u.chosen_pilot.is_none() && u.attempts == 1));
    }

    #[test]
    fn contention_skips_active_and_failed() {
        let c = ScenarioConfig {
            p_access: 1.0,
            backoff_retx_prob: 1.0,
            ..cfg()
        };
        let mut pop: Vec<_> = (0..4).map(|i| ue(i, &[1, 0, 0, 0], 1.0)).collect();
        pop[1].state = UeState::Active;
        pop[2].state = UeState::Failed;
        pop[3].state = UeState::Backoff;
        let sets = form_contention(&mut pop, &c, &mut ChaCha8Rng::seed_from_u64(2));
        let mut tx: Vec<usize> = sets.into_iter().flatten().collect();
        tx.sort();
        assert_eq!(tx, vec![0, 3]);
        assert_eq!(pop[0].attempts, 2);
        assert_eq!(pop[1].attempts, 1);
    }

    #[test]
    fn uncontested_access_succeeds() {
        let c = cfg();
        let pop = vec![ue(5, &[0, 1, 0, 0], strong(&c))];
        for p in Protocol::ALL {
            let mut pool = PdpPool::new(4);
            let r = run_round(p, vec![vec![0]], &pop, &mut pool, &c).unwrap();
            assert!(matches!(r.outcomes[..], [(0, AttemptOutcome::Success(_))]), "{p}");
            assert_eq!(pool.len(), 1);
        }
    }

    #[test]
    fn disjoint_co_pilot_users_both_succeed_and_share() {
        let c = cfg();
        let g = strong(&c);
        let pop = vec![ue(1, &[1, 1, 0, 0], g), ue(2, &[0, 0, 1, 1], g)];
        let mut pool = PdpPool::new(4);
        let r = novr_round(vec![vec![0, 1]], &pop, &mut pool, &c).unwrap();
        assert!(r.outcomes.iter().all(|o| matches!(o.1, AttemptOutcome::Success(_))));
        assert_eq!(pool.len(), 1);
        assert_eq!(pool.member_count(), 2);
    }

    #[test]
    fn identical_co_pilot_users_both_fail() {
        let c = cfg();
        let g = strong(&c);
        let pop = vec![ue(1, &[1, 1, 1, 0], g), ue(2, &[1, 1, 1, 0], g)];
        let mut pool = PdpPool::new(4);
        let r = novr_round(vec![vec![0, 1]], &pop, &mut pool, &c).unwrap();
        assert!(r.block.decode.is_empty());
        assert!(r.outcomes.iter().all(|o| o.1 == AttemptOutcome::Failure));
        assert!(pool.is_empty());
    }

    #[test]
    fn sucre_lets_only_the_strongest_repeat() {
        let c = cfg();
        let g = strong(&c);
        let pop = vec![ue(1, &[1, 1, 1, 1], 10.0 * g), ue(2, &[1, 1, 1, 1], g)];
        let mut pool = PdpPool::new(4);
        let r = sucre_round(vec![vec![0, 1]], &pop, &mut pool, &c, false).unwrap();
        assert_eq!(r.block.retransmit, Some(vec![vec![0]]));
        assert!(matches!(r.outcomes[0].1, AttemptOutcome::Success(_)));
        assert_eq!(r.outcomes[1].1, AttemptOutcome::Failure);
    }

    #[test]
    fn plain_sucre_never_shares() {
        let c = cfg();
        let g = strong(&c);
        let pop: Vec<_> = (0..4)
            .map(|i| {
                let mut v = [0u8; 4];
                v[i] = 1;
                ue(i as UeId, &v, g)
            })
            .collect();
        let sets = vec![vec![0], vec![1], vec![2], vec![3]];
        let mut pool = PdpPool::new(4);
        sucre_round(sets.clone(), &pop, &mut pool, &c, false).unwrap();
        assert_eq!(pool.len(), 4);
        let mut pool = PdpPool::new(4);
        sucre_round(sets, &pop, &mut pool, &c, true).unwrap();
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn failed_downlink_rolls_back_allocation() {
        // a decodable UL with a response drowned in noise
        let c = ScenarioConfig {
            bs_tx_power: 1e-9,
            ..cfg()
        };
        let pop = vec![ue(1, &[1, 0, 0, 0], strong(&c))];
        let mut pool = PdpPool::new(4);
        let r = novr_round(vec![vec![0]], &pop, &mut pool, &c).unwrap();
        assert_eq!(r.block.decode.len(), 1);
        assert_eq!(r.outcomes, vec![(0, AttemptOutcome::Failure)]);
        assert!(pool.is_empty());
        pool.check_invariants().unwrap();
    }
}
