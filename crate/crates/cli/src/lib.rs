//! Configuration, sweep orchestration and result emission for the `xlra`
//! binary.

pub mod config;
pub mod emit;
pub mod sweep;

use std::io::Write;

use xlra_core::analytics::exclusivity_grid;
use xlra_core::protocols::ra_overhead;
use xlra_core::simulator::lone_user_sinr_samples;
use xlra_core::{Protocol, ScenarioConfig};

/// Writes `subarrays,contenders,p_exclusive` for every grid point.
pub fn write_exclusivity<W: Write>(
    p_b: f64,
    subarrays: &[usize],
    max_contenders: usize,
    mut out: W,
) -> anyhow::Result<()> {
    writeln!(out, "subarrays,contenders,p_exclusive")?;
    for pt in exclusivity_grid(p_b, subarrays, max_contenders)? {
        writeln!(out, "{},{},{}", pt.subarrays, pt.contenders, emit::sig6(pt.probability))?;
    }
    Ok(())
}

/// Writes the per-attempt channel uses of every protocol.
pub fn write_overheads<W: Write>(tau_ra: usize, subarrays: usize, mut out: W) -> anyhow::Result<()> {
    writeln!(out, "protocol,tau_ra,B,channel_uses")?;
    for p in Protocol::ALL {
        writeln!(out, "{p},{tau_ra},{subarrays},{}", ra_overhead(p, tau_ra, subarrays)?)?;
    }
    Ok(())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

fn db(x: f64) -> String {
    if x > 0.0 {
        format!("{:.2}", 10.0 * x.log10())
    } else {
        "-inf".into()
    }
}

/// Reports the lone-user step-1 SINR distribution at the cell edge and
/// over the whole cell, with the fraction clearing the decode threshold.
pub fn write_calibration<W: Write>(
    config: &ScenarioConfig,
    samples: usize,
    seed: u64,
    mut out: W,
) -> anyhow::Result<()> {
    anyhow::ensure!(samples > 0, "need at least one sample");
    writeln!(
        out,
        "# ue_tx_power = {} W, noise_power = {} W, decode_threshold_db = {}",
        config.ue_tx_power, config.noise_power, config.decode_threshold_db
    )?;
    writeln!(out, "region,samples,p05_db,p25_db,p50_db,p75_db,p95_db,decodable")?;
    for (name, edge) in [("edge", true), ("cell", false)] {
        let mut s = lone_user_sinr_samples(config, samples, edge, seed)?;
        s.sort_by(f64::total_cmp);
        let ok = s.iter().filter(|&&g| g >= config.decode_threshold()).count() as f64 / samples as f64;
        let qs: Vec<String> = [0.05, 0.25, 0.5, 0.75, 0.95]
            .iter()
            .map(|&q| db(quantile(&s, q)))
            .collect();
        writeln!(out, "{name},{samples},{},{}", qs.join(","), emit::sig6(ok))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overhead_table() {
        let mut buf = Vec::new();
        write_overheads(10, 10, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "protocol,tau_ra,B,channel_uses\nnovr-xl,10,10,108\nsucre-xl,10,10,134\nmsucre-xl,10,10,144\n"
        );
    }

    #[test]
    fn exclusivity_table() {
        let mut buf = Vec::new();
        write_exclusivity(0.5, &[5, 10, 20, 30], 30, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 121);
        assert_eq!(text.lines().nth(1).unwrap(), "5,1,0.96875");
    }

    #[test]
    fn calibration_report_shape() {
        let mut buf = Vec::new();
        write_calibration(&ScenarioConfig::default(), 200, 1, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("edge,200,"));
        assert!(lines[3].starts_with("cell,200,"));
    }
}
