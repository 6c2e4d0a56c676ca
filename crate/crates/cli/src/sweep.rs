//! Campaign grids and their aggregation across seeds.

use serde::{Deserialize, Serialize};
use xlra_core::{run_campaign, CampaignOptions, Protocol, ScenarioConfig};

use crate::config::SweepSpec;

/// Steady-state metrics of one (protocol, K, seed) campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub protocol: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub avg_attempts: f64,
    pub fail_prob: f64,
    pub markov_bound: f64,
    pub sum_rate_bps: f64,
    pub mean_active: f64,
    pub mean_pdps: f64,
    pub ues_per_pdp: f64,
}

/// Runs one campaign.
pub fn run_cell(
    scenario: &ScenarioConfig,
    protocol: Protocol,
    k: usize,
    seed: u64,
    n_blocks: usize,
    warmup: usize,
) -> xlra_core::Result<ResultRow> {
    let opts = CampaignOptions {
        users: k,
        blocks: n_blocks,
        warmup,
        seed,
        record_trace: false,
    };
    let m = run_campaign(scenario, protocol, opts)?;
    Ok(ResultRow {
        protocol: protocol.to_string(),
        k,
        seed,
        avg_attempts: m.avg_attempts(),
        fail_prob: m.failure_prob(),
        markov_bound: m.markov_bound(),
        sum_rate_bps: m.mean_sum_rate(),
        mean_active: m.mean_active(),
        mean_pdps: m.mean_pdps(),
        ues_per_pdp: m.ues_per_pdp(),
    })
}

/// Every cell of the grid, ordered by protocol, then K, then seed.
pub fn run_sweep(scenario: &ScenarioConfig, spec: &SweepSpec) -> xlra_core::Result<Vec<ResultRow>> {
    let mut protocols = spec.protocols.clone();
    protocols.sort();
    protocols.dedup();
    let mut ks = spec.k_values.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();

    let mut rows = Vec::with_capacity(protocols.len() * ks.len() * seeds.len());
    for &p in &protocols {
        for &k in &ks {
            for &seed in &seeds {
                rows.push(run_cell(scenario, p, k, seed, spec.n_blocks, spec.warmup)?);
            }
        }
    }
    Ok(rows)
}

/// Mean and standard error of one metric across seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let se = if xs.len() < 2 {
            0.0
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        };
        Self { mean, se }
    }
}

/// Aggregate of one (protocol, K) cell across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub protocol: String,
    pub k: usize,
    pub seeds: usize,
    pub avg_attempts: Estimate,
    pub fail_prob: Estimate,
    pub markov_bound: Estimate,
    pub sum_rate_bps: Estimate,
    pub mean_active: Estimate,
    pub mean_pdps: Estimate,
    pub ues_per_pdp: Estimate,
}

/// Groups consecutive rows with equal (protocol, K), as produced by
/// [`run_sweep`].
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    rows.chunk_by(|a, b| a.protocol == b.protocol && a.k == b.k)
        .map(|g| {
            let est = |f: fn(&ResultRow) -> f64| Estimate::of(&g.iter().map(f).collect::<Vec<_>>());
            SummaryRow {
                protocol: g[0].protocol.clone(),
                k: g[0].k,
                seeds: g.len(),
                avg_attempts: est(|r| r.avg_attempts),
                fail_prob: est(|r| r.fail_prob),
                markov_bound: est(|r| r.markov_bound),
                sum_rate_bps: est(|r| r.sum_rate_bps),
                mean_active: est(|r| r.mean_active),
                mean_pdps: est(|r| r.mean_pdps),
                ues_per_pdp: est(|r| r.ues_per_pdp),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(protocols: Vec<Protocol>, k_values: Vec<usize>, seeds: Vec<u64>) -> SweepSpec {
        SweepSpec {
            protocols,
            k_values,
            seeds,
            n_blocks: 5,
            warmup: 0,
            ..SweepSpec::default()
        }
    }

    #[test]
    fn single_cell_gives_one_row() {
        let rows = run_sweep(
            &ScenarioConfig::default(),
            &spec(vec![Protocol::NovrXl], vec![50], vec![1]),
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].protocol.as_str(), rows[0].k, rows[0].seed), ("novr-xl", 50, 1));
    }

    #[test]
    fn grid_cardinality_and_order() {
        let ks = vec![80, 10, 20, 30, 40, 50, 60, 70];
        let seeds: Vec<u64> = (0..10).rev().collect();
        let rows = run_sweep(&ScenarioConfig::default(), &spec(Protocol::ALL.to_vec(), ks, seeds)).unwrap();
        assert_eq!(rows.len(), 240);
        let keys: Vec<_> = rows
            .iter()
            .map(|r| (r.protocol.parse::<Protocol>().unwrap(), r.k, r.seed))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(summarize(&rows).len(), 24);
        assert!(summarize(&rows).iter().all(|s| s.seeds == 10));
    }

    #[test]
    fn estimate_values() {
        let e = Estimate::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(Estimate::of(&[7.0]), Estimate { mean: 7.0, se: 0.0 });
    }
}
