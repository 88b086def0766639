//! Multi-seed parameter sweeps and derived reports.

use crate::allocation::{algorithm1_allocate, allocation_oracle, random_requirements};
use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::exec::map_indexed;
use crate::marl::{run_episode_seeded, Algorithm};
use crate::topology::{compute_network_rates, generate_topology};
use crate::traffic::harmonic_composition;
use std::fmt::Write as _;
use std::str::FromStr;

/// Configuration axis a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Number of UAVs.
    Uavs,
    /// Number of ground users.
    Users,
    /// Contents each UAV caches.
    CacheSize,
    /// Unlicensed duty-cycle override.
    DutyCycle,
    /// Multiplier on the fronthaul bandwidth.
    FronthaulScale,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] = [
        SweepAxis::Uavs,
        SweepAxis::Users,
        SweepAxis::CacheSize,
        SweepAxis::DutyCycle,
        SweepAxis::FronthaulScale,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Uavs => "uavs",
            SweepAxis::Users => "users",
            SweepAxis::CacheSize => "cache-size",
            SweepAxis::DutyCycle => "duty-cycle",
            SweepAxis::FronthaulScale => "fronthaul-scale",
        }
    }

    /// Applies one axis value to a configuration.
    pub fn apply(&self, cfg: &mut SimConfig, value: f64) {
        match self {
            SweepAxis::Uavs => cfg.topology.n_uavs = value.round() as usize,
            SweepAxis::Users => cfg.topology.n_users = value.round() as usize,
            SweepAxis::CacheSize => cfg.cache.cache_size = value.round() as usize,
            SweepAxis::DutyCycle => cfg.wifi.duty_override = Some(value),
            SweepAxis::FronthaulScale => cfg.channel.bw_fronthaul_hz *= value,
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                SimError::config(
                    "sweep.axis",
                    format!(
                        "unknown axis `{s}`; valid: {}",
                        SweepAxis::ALL.map(|a| a.name()).join(", ")
                    ),
                )
            })
    }
}

/// Median of a sample; the midpoint of the two central order statistics
/// for even sizes. Zero for an empty sample.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("median input must not contain NaN"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One swept value with its per-seed converged stable-user counts.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub converged: Vec<f64>,
}

impl SweepPoint {
    pub fn median(&self) -> f64 {
        median(&self.converged)
    }

    pub fn mean(&self) -> f64 {
        if self.converged.is_empty() {
            0.0
        } else {
            self.converged.iter().sum::<f64>() / self.converged.len() as f64
        }
    }
}

/// Outcome of sweeping one axis with one algorithm over several seeds.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn medians(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.median()).collect()
    }

    /// CSV with one row per point: value, median, mean, then one column
    /// per seed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,median_converged,mean_converged");
        for s in &self.seeds {
            let _ = write!(out, ",seed_{s}");
        }
        out.push('\n');
        for p in &self.points {
            let _ = write!(out, "{},{},{}", p.value, p.median(), p.mean());
            for c in &p.converged {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// Runs one learning episode per (axis value, seed) and collects the
/// converged stable-user counts. Seeds fan out in parallel when enabled;
/// every cell is reproducible independently of scheduling.
pub fn run_sweep(
    cfg: &SimConfig,
    axis: SweepAxis,
    values: &[f64],
    seeds: &[u64],
    algorithm: Algorithm,
    parallel: bool,
) -> Result<SweepReport> {
    if values.is_empty() {
        return Err(SimError::Empty("sweep values"));
    }
    if seeds.is_empty() {
        return Err(SimError::Empty("sweep seeds"));
    }
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut point_cfg = cfg.clone();
        axis.apply(&mut point_cfg, value);
        point_cfg.validate()?;
        let converged = map_indexed(seeds.len(), parallel, |i| {
            run_episode_seeded(&point_cfg, seeds[i], algorithm, false).map(|r| r.converged_value)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        points.push(SweepPoint { value, converged });
    }
    Ok(SweepReport {
        axis,
        algorithm,
        seeds: seeds.to_vec(),
        points,
    })
}

/// Mean service rate (bits per slot) per link kind at each fronthaul
/// scale, over all (UAV, user) pairs of one topology.
///
/// Kinds: `[0]` licensed cache hit, `[1]` unlicensed cache hit, `[2]`
/// licensed backed by the fronthaul, `[3]` unlicensed backed by the
/// fronthaul. Cache hits never touch the fronthaul, so their columns are
/// invariant across scales.
#[derive(Debug, Clone)]
pub struct LinkRateReport {
    pub scales: Vec<f64>,
    pub mean_rates: Vec<[f64; 4]>,
}

pub const LINK_KINDS: [&str; 4] = [
    "licensed_cached",
    "unlicensed_cached",
    "licensed_fronthaul",
    "unlicensed_fronthaul",
];

impl LinkRateReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scale");
        for kind in LINK_KINDS {
            let _ = write!(out, ",{kind}");
        }
        out.push('\n');
        for (scale, rates) in self.scales.iter().zip(&self.mean_rates) {
            let _ = write!(out, "{scale}");
            for r in rates {
                let _ = write!(out, ",{r}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn link_rate_report(cfg: &SimConfig, seed: u64, scales: &[f64]) -> Result<LinkRateReport> {
    if scales.is_empty() {
        return Err(SimError::Empty("fronthaul scales"));
    }
    let geom = generate_topology(&cfg.topology, seed)?;
    let mut mean_rates = Vec::with_capacity(scales.len());
    for &scale in scales {
        let mut scaled = cfg.clone();
        scaled.channel.bw_fronthaul_hz *= scale;
        scaled.validate()?;
        let rates = compute_network_rates(&geom, &scaled)?;
        let mut sums = [0.0f64; 4];
        let mut pairs = 0.0;
        for (k, fronthaul) in rates.fronthaul_full.iter().enumerate() {
            for u in 0..cfg.topology.n_users {
                let lic = rates.licensed_full[k][u];
                let unl = rates.unlicensed_full[k][u];
                sums[0] += lic;
                sums[1] += unl;
                sums[2] += harmonic_composition(lic, *fronthaul);
                sums[3] += harmonic_composition(unl, *fronthaul);
                pairs += 1.0;
            }
        }
        mean_rates.push(sums.map(|s| s / pairs));
    }
    Ok(LinkRateReport {
        scales: scales.to_vec(),
        mean_rates,
    })
}

/// Search effort of the band-splitting algorithm against the exhaustive
/// oracle, bucketed by the number of users in the instance.
#[derive(Debug, Clone)]
pub struct SearchCountPoint {
    pub n_users: usize,
    pub instances: usize,
    pub mean_algorithm_candidates: f64,
    pub mean_oracle_assignments: f64,
}

#[derive(Debug, Clone)]
pub struct SearchCountReport {
    pub points: Vec<SearchCountPoint>,
}

impl SearchCountReport {
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("n_users,instances,mean_algorithm_candidates,mean_oracle_assignments\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                p.n_users, p.instances, p.mean_algorithm_candidates, p.mean_oracle_assignments
            );
        }
        out
    }
}

/// Runs both solvers on random instances of up to `max_users` users and
/// averages the candidates each examined, bucketed by instance size.
pub fn search_count_report(
    seed: u64,
    n_instances: usize,
    max_users: usize,
    selection_cap: u64,
) -> Result<SearchCountReport> {
    if n_instances == 0 {
        return Err(SimError::Empty("search-count instances"));
    }
    let mut algo_sums = vec![0.0f64; max_users + 1];
    let mut oracle_sums = vec![0.0f64; max_users + 1];
    let mut counts = vec![0usize; max_users + 1];
    for index in 0..n_instances {
        let req = random_requirements(seed, index as u64, max_users);
        let plan = algorithm1_allocate(&req, selection_cap)?;
        let oracle = allocation_oracle(&req)?;
        let n = req.len();
        algo_sums[n] += plan.candidates_examined as f64;
        oracle_sums[n] += oracle.assignments_examined as f64;
        counts[n] += 1;
    }
    let points = (0..=max_users)
        .filter(|&n| counts[n] > 0)
        .map(|n| SearchCountPoint {
            n_users: n,
            instances: counts[n],
            mean_algorithm_candidates: algo_sums[n] / counts[n] as f64,
            mean_oracle_assignments: oracle_sums[n] / counts[n] as f64,
        })
        .collect();
    Ok(SearchCountReport { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;

    fn tiny_cfg() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.topology.n_uavs = 2;
        cfg.topology.n_users = 6;
        cfg.traffic.n_contents = 8;
        cfg.traffic.clusters = 2;
        cfg.rl.iterations = 40;
        cfg.rl.epoch_iterations = 10;
        cfg.rl.convergence_window = 10;
        cfg.rl.liquid.dims = [4, 4, 8];
        cfg.rl.prediction_days = 1;
        cfg.predictor.training_days = 1;
        cfg.predictor.test_days = 1;
        cfg.predictor.slots_per_hour = 10;
        cfg
    }

    #[test]
    fn axis_apply_touches_the_right_field() {
        let base = SimConfig::default();
        let mut cfg = base.clone();
        SweepAxis::Uavs.apply(&mut cfg, 3.0);
        assert_eq!(cfg.topology.n_uavs, 3);
        let mut cfg = base.clone();
        SweepAxis::CacheSize.apply(&mut cfg, 0.0);
        assert_eq!(cfg.cache.cache_size, 0);
        let mut cfg = base.clone();
        SweepAxis::DutyCycle.apply(&mut cfg, 0.4);
        assert_eq!(cfg.wifi.duty_override, Some(0.4));
        let mut cfg = base.clone();
        SweepAxis::FronthaulScale.apply(&mut cfg, 2.0);
        assert_eq!(
            cfg.channel.bw_fronthaul_hz,
            base.channel.bw_fronthaul_hz * 2.0
        );
        assert_eq!(
            "cache-size".parse::<SweepAxis>().unwrap(),
            SweepAxis::CacheSize
        );
        assert!("bogus".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn median_handles_odd_even_and_empty() {
        assert_eq!(median(&[]), 0.0);
        assert_eq!(median(&[3.0]), 3.0);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn sweep_is_independent_of_execution_mode() {
        let cfg = tiny_cfg();
        let values = [1.0, 2.0];
        let seeds = [0, 1];
        let seq = run_sweep(
            &cfg,
            SweepAxis::Uavs,
            &values,
            &seeds,
            Algorithm::Lsm,
            false,
        )
        .unwrap();
        let par = run_sweep(&cfg, SweepAxis::Uavs, &values, &seeds, Algorithm::Lsm, true).unwrap();
        for (a, b) in seq.points.iter().zip(&par.points) {
            assert_eq!(a.converged, b.converged);
        }
        let csv = seq.to_csv();
        assert!(csv.starts_with("value,median_converged,mean_converged,seed_0,seed_1\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn cached_link_rates_ignore_fronthaul_scale() {
        let cfg = SimConfig::default();
        let report = link_rate_report(&cfg, 11, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        let base = report.mean_rates[0];
        for rates in &report.mean_rates {
            assert_eq!(rates[0], base[0], "licensed cache-hit rate must not move");
            assert_eq!(rates[1], base[1], "unlicensed cache-hit rate must not move");
        }
        for w in report.mean_rates.windows(2) {
            assert!(
                w[1][2] >= w[0][2],
                "licensed fronthaul-backed rate must not drop"
            );
            assert!(
                w[1][3] >= w[0][3],
                "unlicensed fronthaul-backed rate must not drop"
            );
        }
        // The composed rate is strictly below its direct leg.
        assert!(report.mean_rates[1][2] < report.mean_rates[1][0]);
    }

    #[test]
    fn oracle_examines_exponentially_more_assignments() {
        let report = search_count_report(5, 200, 6, 1_000_000).unwrap();
        assert!(!report.points.is_empty());
        for p in &report.points {
            // The oracle walks 3^n assignments of positive-demand users
            // (n counts all users here, an upper bound on the exponent).
            assert!(p.mean_oracle_assignments <= 3f64.powi(p.n_users as i32));
            if p.n_users >= 4 {
                assert!(
                    p.mean_algorithm_candidates < p.mean_oracle_assignments,
                    "n={}: algorithm should examine fewer candidates",
                    p.n_users
                );
            }
        }
        let csv = report.to_csv();
        assert!(csv.starts_with("n_users,instances,"));
    }
}
