//! Block-sequential Monte Carlo campaigns.
//!
//! One block is one RA opportunity and one payload interval. Every access
//! request comes from a freshly dropped user: a user that exhausts its
//! attempts is retired, one that ends its session leaves, and either way
//! its population slot is taken by a new drop. The population size stays
//! at `K` and its composition is stationary; keeping well-placed users
//! forever would make the statistics drift with the campaign length.

use crate::analytics::{
    spectral_efficiency, sum_rate, ul_sinr_exclusive, zf_sinr_all, Emitter, RateParams, UplinkParams,
};
use crate::protocols::{form_contention, ra_overhead, run_round, AttemptOutcome, Protocol};
use crate::scenario::{
    antenna_positions, drop_user, sample_position, sample_visibility, subarray_gains, ScenarioConfig, UeId, UeState,
    UserEquipment,
};
use crate::scheduler::PdpPool;
use crate::streams::{stream, TAG_BLOCK, TAG_CALIBRATE, TAG_DROP};
use crate::{Error, Result};

/// Campaign size and seeding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CampaignOptions {
    /// Population size `K`.
    pub users: usize,
    /// Blocks simulated after warm-up.
    pub blocks: usize,
    /// Blocks simulated before metrics are collected.
    pub warmup: usize,
    pub seed: u64,
    /// Keep every access outcome in [`CampaignMetrics::trace`].
    pub record_trace: bool,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        Self {
            users: 2000,
            blocks: 10_000,
            warmup: 100,
            seed: 0,
            record_trace: false,
        }
    }
}

/// A decided access request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Resolution {
    pub block: u64,
    pub ue: UeId,
    pub attempts: u32,
    pub success: bool,
}

/// Steady-state statistics of one campaign.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CampaignMetrics {
    /// Requests decided after warm-up.
    pub resolved: u64,
    pub successes: u64,
    pub failures: u64,
    /// Attempts spent by the decided requests.
    pub total_attempts: u64,
    pub max_attempts: u32,
    /// Per-block |A|, |P| and sum rate (bit/s) after warm-up.
    pub active: Vec<usize>,
    pub pdps: Vec<usize>,
    pub sum_rate: Vec<f64>,
    /// Every decided request, warm-up included, when tracing.
    pub trace: Vec<Resolution>,
}

fn mean<T: Copy + Into<f64>>(xs: &[T]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().map(|&x| x.into()).sum::<f64>() / xs.len() as f64
    }
}

impl CampaignMetrics {
    /// Mean attempts per decided request; 0 when nothing was decided.
    pub fn avg_attempts(&self) -> f64 {
        if self.resolved == 0 {
            0.0
        } else {
            self.total_attempts as f64 / self.resolved as f64
        }
    }

    /// Fraction of decided requests that gave up.
    pub fn failure_prob(&self) -> f64 {
        if self.resolved == 0 {
            0.0
        } else {
            self.failures as f64 / self.resolved as f64
        }
    }

    /// Markov bound `avg_attempts / max_attempts` on [`Self::failure_prob`],
    /// evaluated as one division so the bound holds in floating point too.
    pub fn markov_bound(&self) -> f64 {
        if self.resolved == 0 {
            0.0
        } else {
            self.total_attempts as f64 / (self.max_attempts as f64 * self.resolved as f64)
        }
    }

    pub fn mean_active(&self) -> f64 {
        mean(&self.active.iter().map(|&a| a as f64).collect::<Vec<_>>())
    }

    pub fn mean_pdps(&self) -> f64 {
        mean(&self.pdps.iter().map(|&a| a as f64).collect::<Vec<_>>())
    }

    pub fn mean_sum_rate(&self) -> f64 {
        mean(&self.sum_rate)
    }

    /// Mean of |A| / |P| over blocks with at least one PDP.
    pub fn ues_per_pdp(&self) -> f64 {
        let ratios: Vec<f64> = self
            .active
            .iter()
            .zip(&self.pdps)
            .filter(|&(_, &p)| p > 0)
            .map(|(&a, &p)| a as f64 / p as f64)
            .collect();
        mean(&ratios)
    }
}

/// State of a running campaign.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: ScenarioConfig,
    protocol: Protocol,
    options: CampaignOptions,
    antennas: Vec<[f64; 2]>,
    population: Vec<UserEquipment>,
    pool: PdpPool,
    block: u64,
    next_id: UeId,
    /// Drops made so far in each slot; keys the next drop's stream.
    generation: Vec<u64>,
    phi_ra: f64,
    metrics: CampaignMetrics,
}

impl Simulation {
    pub fn new(config: &ScenarioConfig, protocol: Protocol, options: CampaignOptions) -> Result<Self> {
        config.validate()?;
        let antennas = antenna_positions(config);
        let population = (0..options.users as UeId)
            .map(|id| {
                drop_user(
                    id,
                    config,
                    &antennas,
                    &mut stream(options.seed, TAG_DROP, drop_key(id as usize, 0)),
                )
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            protocol,
            options,
            antennas,
            population,
            pool: PdpPool::new(config.subarrays),
            block: 0,
            next_id: options.users as UeId,
            generation: vec![0; options.users],
            phi_ra: ra_overhead(protocol, config.tau_ra, config.subarrays)? as f64,
            metrics: CampaignMetrics {
                max_attempts: config.max_attempts,
                ..Default::default()
            },
        })
    }

    pub fn population(&self) -> &[UserEquipment] {
        &self.population
    }

    pub fn pool(&self) -> &PdpPool {
        &self.pool
    }

    pub fn metrics(&self) -> &CampaignMetrics {
        &self.metrics
    }

    pub fn into_metrics(self) -> CampaignMetrics {
        self.metrics
    }

    /// Blocks simulated so far, warm-up included.
    pub fn blocks_done(&self) -> u64 {
        self.block
    }

    fn resolve(&mut self, slot: usize, success: bool) {
        let ue = &self.population[slot];
        let r = Resolution {
            block: self.block,
            ue: ue.id,
            attempts: ue.attempts,
            success,
        };
        if self.options.record_trace {
            self.metrics.trace.push(r);
        }
        if self.block >= self.options.warmup as u64 {
            let m = &mut self.metrics;
            m.resolved += 1;
            m.total_attempts += u64::from(r.attempts);
            if success {
                m.successes += 1;
            } else {
                m.failures += 1;
            }
        }
    }

    /// Refills `slot` with a new user. The drop depends only on the slot
    /// and how many users it has held, so every protocol sees the same
    /// sequence of users in each slot.
    fn replace(&mut self, slot: usize) {
        let id = self.next_id;
        self.next_id += 1;
        self.generation[slot] += 1;
        let rng = &mut stream(self.options.seed, TAG_DROP, drop_key(slot, self.generation[slot]));
        self.population[slot] = drop_user(id, &self.config, &self.antennas, rng);
    }

    /// Advances one block.
    pub fn run_block(&mut self) -> Result<()> {
        let was_active: Vec<bool> = self.population.iter().map(|u| u.state == UeState::Active).collect();

        let mut rng = stream(self.options.seed, TAG_BLOCK, self.block);
        let sets = form_contention(&mut self.population, &self.config, &mut rng);
        let report = run_round(self.protocol, sets, &self.population, &mut self.pool, &self.config)?;

        for (slot, outcome) in report.outcomes {
            match outcome {
                AttemptOutcome::Success(pdp) => {
                    self.resolve(slot, true);
                    let ue = &mut self.population[slot];
                    ue.state = UeState::Active;
                    ue.pdp = Some(pdp);
                    ue.remaining_intervals = self.config.payload_intervals;
                }
                AttemptOutcome::Failure if self.population[slot].attempts >= self.config.max_attempts => {
                    self.resolve(slot, false);
                    self.replace(slot);
                }
                AttemptOutcome::Failure => self.population[slot].state = UeState::Backoff,
            }
        }

        for (slot, was) in was_active.into_iter().enumerate() {
            if !was {
                continue;
            }
            let ue = &mut self.population[slot];
            ue.remaining_intervals -= 1;
            if ue.remaining_intervals == 0 {
                self.pool.release(ue.id)?;
                self.replace(slot);
            }
        }
        if cfg!(debug_assertions) {
            self.pool.check_invariants()?;
        }

        if self.block >= self.options.warmup as u64 {
            let rate = self.block_sum_rate()?;
            let active = self.population.iter().filter(|u| u.state == UeState::Active).count();
            self.metrics.active.push(active);
            self.metrics.pdps.push(self.pool.len());
            self.metrics.sum_rate.push(rate);
        }
        self.block += 1;
        Ok(())
    }

    /// Sum rate of the current active set; zero when the payload pilots
    /// would not fit in a coherence block.
    pub fn block_sum_rate(&self) -> Result<f64> {
        let tau_pd = self.pool.len();
        if tau_pd > self.config.coherence_uses {
            return Ok(0.0);
        }
        let active: Vec<&UserEquipment> = self.population.iter().filter(|u| u.state == UeState::Active).collect();
        let betas: Vec<&[f64]> = active.iter().map(|u| u.beta.as_slice()).collect();
        let sinr = zf_sinr_all(
            &betas,
            self.config.antennas_per_sa() as f64,
            self.config.data_tx_power,
            self.config.noise_power,
        )?;
        let rp = RateParams::from_config(&self.config);
        let rates = active
            .iter()
            .zip(sinr)
            .map(|(u, g)| spectral_efficiency(u.attempts, self.config.payload_intervals, self.phi_ra, tau_pd, &rp, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(sum_rate(&rates, self.config.bandwidth_hz))
    }

    /// Checks the population and pool against each other.
    pub fn check_consistency(&self) -> Result<()> {
        self.pool.check_invariants()?;
        let active = self.population.iter().filter(|u| u.state == UeState::Active).count();
        if active != self.pool.member_count() {
            return Err(Error::PoolCorrupted(format!(
                "{active} active UEs but {} PDP members",
                self.pool.member_count()
            )));
        }
        for ue in &self.population {
            let held = self.pool.pdp_of(ue.id);
            if (ue.state == UeState::Active) != held.is_some() || ue.pdp != held {
                return Err(Error::PoolCorrupted(format!(
                    "UE {} state does not match the pool",
                    ue.id
                )));
            }
            if ue.attempts > self.config.max_attempts || ue.state == UeState::Failed {
                return Err(Error::PoolCorrupted(format!("UE {} should have been retired", ue.id)));
            }
        }
        Ok(())
    }
}

fn drop_key(slot: usize, generation: u64) -> u64 {
    (generation << 32) ^ slot as u64
}

/// Runs `options.warmup + options.blocks` blocks from a fresh population.
pub fn run_campaign(config: &ScenarioConfig, protocol: Protocol, options: CampaignOptions) -> Result<CampaignMetrics> {
    let mut sim = Simulation::new(config, protocol, options)?;
    for _ in 0..options.warmup + options.blocks {
        sim.run_block()?;
    }
    Ok(sim.into_metrics())
}

/// Step-1 SINR (linear) of a lone transmitter at its best SA, for
/// `samples` independent drops. With `edge` the UE sits on the outer cell
/// radius at a uniform angle, otherwise it is dropped uniformly by area.
pub fn lone_user_sinr_samples(config: &ScenarioConfig, samples: usize, edge: bool, seed: u64) -> Result<Vec<f64>> {
    config.validate()?;
    let antennas = antenna_positions(config);
    let ul = UplinkParams::from_config(config);
    Ok((0..samples as u64)
        .map(|i| {
            let rng = &mut stream(seed, TAG_CALIBRATE, i);
            let mut position = sample_position(config, rng);
            if edge {
                let r = position[0].hypot(position[1]);
                position = [position[0] * config.r_e / r, position[1] * config.r_e / r];
            }
            let visibility = sample_visibility(config, rng);
            let beta = subarray_gains(position, &visibility, &antennas, config, rng);
            beta.iter()
                .map(|&g| {
                    let e = Emitter::new(config.ue_tx_power, g);
                    ul_sinr_exclusive(e, e.power * e.gain, &ul)
                })
                .fold(0.0, f64::max)
        })
        .collect())
}
