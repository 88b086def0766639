//! Episode traces as stable on-disk artifacts.
//!
//! Floats are written with Rust's shortest round-trip formatting, so two
//! episodes with bit-identical results produce byte-identical files.

use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::marl::EpisodeResult;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Serializable digest of one episode.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EpisodeSummary {
    pub algorithm: String,
    pub seed: u64,
    pub iterations: usize,
    pub converged_iteration: Option<usize>,
    /// Mean stable-user count over the final tenth of the episode.
    pub converged_value: f64,
    /// Mean stable-user count over the whole trace.
    pub mean_stable: f64,
    pub cache_hit_fraction: f64,
    /// Unlicensed duty cycle in effect.
    pub theta: f64,
    pub total_delivered_bits: f64,
    /// Users that were assigned at least one slot.
    pub served_users: usize,
    pub action_space_sizes: Vec<u64>,
}

impl EpisodeSummary {
    pub fn from_result(r: &EpisodeResult) -> Self {
        EpisodeSummary {
            algorithm: r.algorithm.name().to_string(),
            seed: r.seed,
            iterations: r.records.len(),
            converged_iteration: r.converged_iteration,
            converged_value: r.converged_value,
            mean_stable: r.mean_stable(),
            cache_hit_fraction: r.cache_hit_fraction(),
            theta: r.theta,
            total_delivered_bits: r.delivered_user_bits.iter().sum(),
            served_users: r.assigned_slots.iter().filter(|&&s| s > 0).count(),
            action_space_sizes: r.action_space_sizes.clone(),
        }
    }
}

/// Per-iteration trace as CSV: one row per slot, with one trailing
/// `stable_uav_<k>` column per UAV.
pub fn records_csv(result: &EpisodeResult) -> String {
    let n_uavs = result.records.first().map_or(0, |r| r.stable_per_uav.len());
    let mut out = String::from(
        "iteration,hour,requests,stable_total,cache_hits,fronthaul_users,delivered_bits",
    );
    for k in 0..n_uavs {
        let _ = write!(out, ",stable_uav_{k}");
    }
    out.push('\n');
    for r in &result.records {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            r.iteration,
            r.hour,
            r.requests,
            r.stable_total,
            r.cache_hits,
            r.fronthaul_users,
            r.delivered_bits
        );
        for &s in &r.stable_per_uav {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
    }
    out
}

/// Empirical CDF of mean delivered bits per assigned slot across served
/// users: `(bits, cumulative user fraction)` sorted ascending. Users
/// never assigned a slot are excluded.
pub fn rate_cdf(delivered: &[f64], assigned: &[usize]) -> Vec<(f64, f64)> {
    let mut rates: Vec<f64> = delivered
        .iter()
        .zip(assigned)
        .filter(|(_, &s)| s > 0)
        .map(|(&d, &s)| d / s as f64)
        .collect();
    rates.sort_by(|a, b| a.partial_cmp(b).expect("rates are finite"));
    let n = rates.len();
    rates
        .into_iter()
        .enumerate()
        .map(|(i, r)| (r, (i + 1) as f64 / n as f64))
        .collect()
}

pub fn rate_cdf_csv(cdf: &[(f64, f64)]) -> String {
    let mut out = String::from("bits_per_service,cum_fraction\n");
    for (bits, frac) in cdf {
        let _ = writeln!(out, "{bits},{frac}");
    }
    out
}

/// Writes the standard artifact set for one episode into `dir`:
/// `config.toml` (effective config), `seed.txt`, `metrics.csv`,
/// `rate_cdf.csv`, and `summary.json`.
pub fn write_run_dir(dir: &Path, cfg: &SimConfig, result: &EpisodeResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    fs::write(dir.join("seed.txt"), format!("{}\n", result.seed))?;
    fs::write(dir.join("metrics.csv"), records_csv(result))?;
    let cdf = rate_cdf(&result.delivered_user_bits, &result.assigned_slots);
    fs::write(dir.join("rate_cdf.csv"), rate_cdf_csv(&cdf))?;
    let summary = EpisodeSummary::from_result(result);
    let mut json =
        serde_json::to_string_pretty(&summary).map_err(|e| SimError::Serialize(e.to_string()))?;
    json.push('\n');
    fs::write(dir.join("summary.json"), json)?;
    Ok(())
}
