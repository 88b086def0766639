//! Acceptance gate: ten system-level criteria, one test each, every
//! tolerance pinned in code. Each prints a single PASS/FAIL line directly
//! to the process stdout so plain `cargo test` runs show all ten verdicts.
//! All inputs are seeded, so outcomes replay exactly.

use std::sync::OnceLock;
use std::time::Instant;
use uavsim_core::allocation::{build_action_space, verify_allocation, ActionSpaceParams};
use uavsim_core::cache::verify_cache;
use uavsim_core::config::SimConfig;
use uavsim_core::marl::{run_comparison, run_episode_seeded, Algorithm};
use uavsim_core::metrics::{rate_cdf, records_csv, EpisodeSummary};
use uavsim_core::predictor::run_prediction_benchmark;
use uavsim_core::reservoir::{train_ridge, LiquidParams, Readout, Reservoir};
use uavsim_core::sweep::{link_rate_report, median, run_sweep, SweepAxis};
use uavsim_core::topology::{compute_network_rates, generate_topology};
use uavsim_core::wifi::{
    bianchi_tau, max_duty_fraction, per_wifi_user_rate, saturation_throughput, WifiParams,
};

#[cfg(unix)]
fn report(criterion: &str, pass: bool) {
    use std::io::Write;
    use std::mem::ManuallyDrop;
    use std::os::unix::io::FromRawFd;
    // The harness captures the `print!` macros on passing tests; write the
    // verdict straight to the stdout descriptor so every run shows it.
    let mut out = ManuallyDrop::new(unsafe { std::fs::File::from_raw_fd(1) });
    let _ = writeln!(out, "{criterion}: {}", if pass { "PASS" } else { "FAIL" });
}

#[cfg(not(unix))]
fn report(criterion: &str, pass: bool) {
    println!("{criterion}: {}", if pass { "PASS" } else { "FAIL" });
}

/// Small but complete configuration for the byte-stability check.
fn tiny_cfg() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.topology.n_uavs = 2;
    cfg.topology.n_users = 6;
    cfg.traffic.n_contents = 8;
    cfg.traffic.clusters = 2;
    cfg.rl.iterations = 60;
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
fn criterion_01_cache_planner_matches_exhaustive_oracle() {
    let start = Instant::now();
    let report_out = verify_cache(1000, 6, 12, 41, true).expect("verification must run");
    let elapsed = start.elapsed().as_secs_f64();
    let pass = report_out.exact == 1000 && elapsed < 10.0;
    report(
        "criterion 01: cache planner equals exhaustive oracle on 1000 instances in <10s",
        pass,
    );
    if !report_out.mismatches.is_empty() {
        println!(
            "mismatches: {}",
            serde_json::to_string_pretty(&report_out.mismatches).unwrap()
        );
    }
    assert_eq!(report_out.exact, 1000, "all instances must agree exactly");
    assert!(elapsed < 10.0, "took {elapsed:.1}s, budget 10s");
}

#[test]
fn criterion_02_band_split_allocator_matches_oracle() {
    let start = Instant::now();
    let v = verify_allocation(10_000, 8, 42, true).expect("verification must run");
    let elapsed = start.elapsed().as_secs_f64();
    let both_fit_exact = v.both_fit_exact == v.both_fit_instances;
    let traversal_ok = v.traversal_match_rate() >= 0.99;
    let pass = both_fit_exact && traversal_ok && elapsed < 120.0;
    report(
        "criterion 02: allocator matches oracle (both-fit exact, traversal >=99%) on 10000 instances in <2min",
        pass,
    );
    println!(
        "  both-fit {}/{}, traversal {}/{} ({:.4})",
        v.both_fit_exact,
        v.both_fit_instances,
        v.traversal_exact,
        v.traversal_instances,
        v.traversal_match_rate()
    );
    if !v.mismatches.is_empty() {
        let dump: Vec<_> = v.mismatches.iter().take(5).collect();
        println!(
            "first mismatches: {}",
            serde_json::to_string_pretty(&dump).unwrap()
        );
    }
    assert!(both_fit_exact, "both-budgets-fit instances must be exact");
    assert!(
        traversal_ok,
        "traversal match rate {:.4} below 0.99",
        v.traversal_match_rate()
    );
    assert!(elapsed < 120.0, "took {elapsed:.1}s, budget 120s");
}

#[test]
fn criterion_03_action_spaces_are_powersets_of_feasible_users() {
    let cfg = SimConfig::default();
    let params = ActionSpaceParams {
        user_cap: cfg.topology.n_users,
        dominance_factor: 100.0,
    };
    let content_bits = cfg.traffic.content_bits;
    let mut checked = 0;
    for seed in 0..100 {
        let geom = generate_topology(&cfg.topology, seed).unwrap();
        let rates = compute_network_rates(&geom, &cfg).unwrap();
        for k in 0..cfg.topology.n_uavs {
            let fronthaul = rates.fronthaul_full[k];
            let space = build_action_space(
                &rates.licensed_full[k],
                &rates.unlicensed_full[k],
                fronthaul,
                content_bits,
                &params,
            )
            .unwrap();
            // Scratch re-derivation of candidacy: a user is actionable
            // when either band can deliver one content in a slot, with
            // the two-hop rate written as 1/(1/r + 1/R).
            let two_hop = |direct: f64| {
                if direct <= 0.0 || fronthaul <= 0.0 {
                    0.0
                } else {
                    1.0 / (1.0 / direct + 1.0 / fronthaul)
                }
            };
            let scratch: Vec<usize> = (0..cfg.topology.n_users)
                .filter(|&u| {
                    let rl = rates.licensed_full[k][u];
                    let ru = rates.unlicensed_full[k][u];
                    let dominant = fronthaul > 100.0 * rl && fronthaul > 100.0 * ru;
                    if dominant {
                        rl >= content_bits || ru >= content_bits
                    } else {
                        two_hop(rl) >= content_bits || two_hop(ru) >= content_bits
                    }
                })
                .collect();
            assert_eq!(space.candidates, scratch, "seed {seed} uav {k}");
            assert_eq!(space.n_actions(), 1u64 << scratch.len());
            // In the fronthaul-dominant regime candidacy must depend on
            // the direct rates alone.
            let dominant_space = build_action_space(
                &rates.licensed_full[k],
                &rates.unlicensed_full[k],
                1.0e18,
                content_bits,
                &params,
            )
            .unwrap();
            let direct_only: Vec<usize> = (0..cfg.topology.n_users)
                .filter(|&u| {
                    rates.licensed_full[k][u] >= content_bits
                        || rates.unlicensed_full[k][u] >= content_bits
                })
                .collect();
            assert_eq!(
                dominant_space.candidates, direct_only,
                "seed {seed} uav {k}"
            );
            checked += 1;
        }
    }
    report(
        "criterion 03: action spaces are 2^|feasible users| with dominant-regime reduction on 100 topologies",
        checked == 100 * cfg.topology.n_uavs,
    );
    assert_eq!(checked, 100 * cfg.topology.n_uavs);
}

#[test]
fn criterion_04_reservoir_dynamics_and_readouts_match_closed_forms() {
    // Membrane relaxation: under constant sub-threshold current I the
    // update v += (rest + Z I - v) / (Z rho) contracts toward
    // v* = rest + Z I with per-step factor (1 - 1/(Z rho)).
    let params = LiquidParams::default();
    let mut liquid = Reservoir::build(1, &params, 77).unwrap();
    let n = liquid.n_neurons();
    let rest = params.resting_potential_mv;
    let z: f64 = 10f64.powf(params.resistance_db / 10.0);
    let z_rho = z * params.membrane_tau_ms;
    let current = 0.008;
    let v_star = rest + z * current;
    assert!(
        v_star < params.threshold_mv,
        "drive must stay sub-threshold"
    );
    let contraction = 1.0 - 1.0 / z_rho;
    let mut worst: f64 = 0.0;
    // Charge for 100 steps, then decay for 100 steps with zero drive.
    let drive = vec![current; n];
    let mut expected = rest;
    for _ in 0..100 {
        liquid.step_with_drive(&drive);
        expected = v_star + (expected - v_star) * contraction;
    }
    for &v in liquid.membrane() {
        worst = worst.max((v - expected).abs());
    }
    let zero = vec![0.0; n];
    for _ in 0..100 {
        liquid.step_with_drive(&zero);
        expected = rest + (expected - rest) * contraction;
    }
    for &v in liquid.membrane() {
        worst = worst.max((v - expected).abs());
    }
    let membrane_ok = worst < 1e-9;

    // Ridge regression recovers a planted linear map from exact data.
    let n_feat = 12;
    let n_out = 3;
    let t = 48;
    let mut rng = uavsim_core::rng::stream(4, uavsim_core::rng::STREAM_VERIFY, 99);
    use rand::Rng;
    let features = nalgebra::DMatrix::from_fn(n_feat, t, |_, _| rng.gen_range(-1.0..1.0));
    let planted = nalgebra::DMatrix::from_fn(n_out, n_feat, |_, _| rng.gen_range(-1.0..1.0));
    let targets = &planted * &features;
    let readout = train_ridge(&features, &targets, 1e-10).unwrap();
    let probe: Vec<f64> = (0..n_feat).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y = readout.predict(&probe).unwrap();
    let mut ridge_err: f64 = 0.0;
    for r in 0..n_out {
        let want: f64 = (0..n_feat).map(|c| planted[(r, c)] * probe[c]).sum();
        ridge_err = ridge_err.max((y[r] - want).abs());
    }
    let ridge_ok = ridge_err < 1e-6;

    // One LMS step on unit-norm features contracts the error by exactly
    // (1 - rate).
    let mut lms = Readout::zeros(1, 4);
    let x = [0.5, 0.5, 0.5, 0.5];
    let target = 2.0;
    let before = target - lms.predict_row(0, &x).unwrap();
    let est = lms.predict_row(0, &x).unwrap();
    lms.lms_update(0, target, est, &x, 0.05).unwrap();
    let after = target - lms.predict_row(0, &x).unwrap();
    let lms_ok = (after - before * 0.95).abs() < 1e-12;

    let pass = membrane_ok && ridge_ok && lms_ok;
    report(
        "criterion 04: membrane relaxation (1e-9), ridge planted-map recovery (1e-6), LMS contraction (1e-12)",
        pass,
    );
    assert!(membrane_ok, "worst membrane deviation {worst:.2e}");
    assert!(ridge_ok, "worst ridge deviation {ridge_err:.2e}");
    assert!(
        lms_ok,
        "LMS error after step {after}, expected {}",
        before * 0.95
    );
}

#[test]
fn criterion_05_spiking_predictor_beats_echo_state_baseline() {
    let cfg = SimConfig::default();
    let start = Instant::now();
    let first = run_prediction_benchmark(&cfg, 0, true).unwrap();
    let accuracy_ok = first.frac_within_tenth >= 0.90;
    let top_ok = first.top_set_recovered == first.n_users;
    let mut wins = 0;
    for run in 0..50 {
        let out = run_prediction_benchmark(&cfg, run, true).unwrap();
        if out.liquid_mse <= out.echo_mse {
            wins += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let wins_ok = wins >= 35;
    let pass = accuracy_ok && top_ok && wins_ok && elapsed < 300.0;
    report(
        "criterion 05: >=90% cells within 0.10, all top sets recovered, spiking MSE <= baseline in >=70% of 50 runs, <5min",
        pass,
    );
    println!(
        "  within 0.10: {:.4}, top sets {}/{}, wins {wins}/50, {elapsed:.0}s",
        first.frac_within_tenth, first.top_set_recovered, first.n_users
    );
    assert!(
        accuracy_ok,
        "within-0.10 fraction {:.4} < 0.90",
        first.frac_within_tenth
    );
    assert!(
        top_ok,
        "top sets {}/{}",
        first.top_set_recovered, first.n_users
    );
    assert!(
        wins_ok,
        "spiking predictor won only {wins}/50 runs, need 35"
    );
    assert!(elapsed < 300.0, "took {elapsed:.0}s, budget 300s");
}

/// Converged stable-user count and convergence slot per algorithm for the
/// 50-seed campaign shared by criteria 06 and 07.
struct Campaign {
    lsm: Vec<f64>,
    q_cache: Vec<f64>,
    q_nocache: Vec<f64>,
    lsm_conv: Vec<Option<usize>>,
    q_cache_conv: Vec<Option<usize>>,
    elapsed_s: f64,
}

fn campaign() -> &'static Campaign {
    static CAMPAIGN: OnceLock<Campaign> = OnceLock::new();
    CAMPAIGN.get_or_init(|| {
        let cfg = SimConfig::default();
        let start = Instant::now();
        let mut c = Campaign {
            lsm: vec![],
            q_cache: vec![],
            q_nocache: vec![],
            lsm_conv: vec![],
            q_cache_conv: vec![],
            elapsed_s: 0.0,
        };
        for seed in 0..50 {
            let out = run_comparison(&cfg, seed, true).expect("comparison must run");
            c.lsm.push(out.lsm.converged_value);
            c.q_cache.push(out.q_cache.converged_value);
            c.q_nocache.push(out.q_nocache.converged_value);
            c.lsm_conv.push(out.lsm.converged_iteration);
            c.q_cache_conv.push(out.q_cache.converged_iteration);
        }
        c.elapsed_s = start.elapsed().as_secs_f64();
        c
    })
}

#[test]
fn criterion_06_stable_user_medians_order_by_algorithm() {
    let c = campaign();
    let (m_lsm, m_qc, m_qn) = (median(&c.lsm), median(&c.q_cache), median(&c.q_nocache));
    let ordered = m_lsm >= m_qc && m_qc >= m_qn;
    let cache_helps = m_qc > m_qn;
    let pass = ordered && cache_helps && c.elapsed_s < 1800.0;
    report(
        "criterion 06: median converged stable users order spiking >= tabular-cache >= tabular-nocache (cache strictly helps) over 50 seeds in <30min",
        pass,
    );
    println!(
        "  medians: spiking {m_lsm:.2}, tabular+cache {m_qc:.2}, tabular-nocache {m_qn:.2}, campaign {:.0}s",
        c.elapsed_s
    );
    assert!(
        ordered,
        "medians out of order: {m_lsm:.2}, {m_qc:.2}, {m_qn:.2}"
    );
    assert!(
        cache_helps,
        "cache did not strictly help: {m_qc:.2} vs {m_qn:.2}"
    );
    assert!(
        c.elapsed_s < 1800.0,
        "campaign took {:.0}s, budget 1800s",
        c.elapsed_s
    );
}

#[test]
fn criterion_07_spiking_agents_converge_no_later() {
    let c = campaign();
    let cfg = SimConfig::default();
    let horizon = cfg.rl.iterations;
    let no_later = c
        .lsm_conv
        .iter()
        .zip(&c.q_cache_conv)
        .filter(|(a, b)| a.unwrap_or(horizon) <= b.unwrap_or(horizon))
        .count();
    let pass = no_later >= 35;
    report(
        "criterion 07: spiking agents converge no later than tabular agents in >=70% of 50 seeds",
        pass,
    );
    println!("  no-later count: {no_later}/50");
    assert!(
        pass,
        "spiking converged no later in only {no_later}/50 seeds, need 35"
    );
}

#[test]
fn criterion_08_capacity_axes_trend_monotonically() {
    let cfg = SimConfig::default();
    let seeds: Vec<u64> = (0..20).collect();

    let uavs = run_sweep(
        &cfg,
        SweepAxis::Uavs,
        &[1.0, 2.0, 3.0, 4.0, 5.0],
        &seeds,
        Algorithm::Lsm,
        true,
    )
    .unwrap()
    .medians();
    let cache = run_sweep(
        &cfg,
        SweepAxis::CacheSize,
        &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
        &seeds,
        Algorithm::Lsm,
        true,
    )
    .unwrap()
    .medians();
    let duty = run_sweep(
        &cfg,
        SweepAxis::DutyCycle,
        &[0.1, 0.3, 0.5, 0.7, 0.9],
        &seeds,
        Algorithm::Lsm,
        true,
    )
    .unwrap()
    .medians();
    let non_decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0] - 1e-9);
    let uavs_ok = non_decreasing(&uavs);
    let cache_ok = non_decreasing(&cache);
    let duty_ok = non_decreasing(&duty);

    let link = link_rate_report(&cfg, 11, &[0.5, 1.0, 2.0, 4.0]).unwrap();
    let cached_invariant = link
        .mean_rates
        .iter()
        .all(|r| r[0] == link.mean_rates[0][0] && r[1] == link.mean_rates[0][1]);
    let fronthaul_monotone = link
        .mean_rates
        .windows(2)
        .all(|w| w[1][2] >= w[0][2] && w[1][3] >= w[0][3]);

    let episode = run_episode_seeded(&cfg, 0, Algorithm::Lsm, true).unwrap();
    let cdf = rate_cdf(&episode.delivered_user_bits, &episode.assigned_slots);
    let cdf_saturates = !cdf.is_empty()
        && cdf
            .iter()
            .all(|&(bits, _)| bits <= cfg.traffic.content_bits + 1e-6)
        && (cdf.last().unwrap().1 - 1.0).abs() < 1e-12;

    let pass =
        uavs_ok && cache_ok && duty_ok && cached_invariant && fronthaul_monotone && cdf_saturates;
    report(
        "criterion 08: stable users non-decreasing in UAVs/cache/duty; cached link rates invariant and fronthaul-backed monotone in fronthaul bandwidth; per-service rate CDF saturates at the content size",
        pass,
    );
    println!("  uav medians {uavs:?}");
    println!("  cache medians {cache:?}");
    println!("  duty medians {duty:?}");
    assert!(uavs_ok, "UAV-count medians not monotone: {uavs:?}");
    assert!(cache_ok, "cache-size medians not monotone: {cache:?}");
    assert!(duty_ok, "duty-cycle medians not monotone: {duty:?}");
    assert!(
        cached_invariant,
        "cache-hit link rates moved with fronthaul scale"
    );
    assert!(fronthaul_monotone, "fronthaul-backed link rates dropped");
    assert!(cdf_saturates, "per-service CDF invalid: {cdf:?}");
}

#[test]
fn criterion_09_saturation_throughput_matches_scratch_evaluation() {
    use rand::Rng;
    let mut rng = uavsim_core::rng::stream(9, uavsim_core::rng::STREAM_VERIFY, 0);
    let mut worst_rel: f64 = 0.0;
    for _ in 0..100 {
        let cw_min = *[8u32, 16, 32, 64, 128, 256]
            .get(rng.gen_range(0..6))
            .unwrap();
        let p = WifiParams {
            n_wifi: rng.gen_range(1..=40),
            cw_min,
            backoff_stages: rng.gen_range(0..=6),
            payload_bits: rng.gen_range(2_000.0..20_000.0),
            phy_rate_bps: rng.gen_range(6.0e6..100.0e6),
            slot_s: rng.gen_range(9.0e-6..20.0e-6),
            difs_s: rng.gen_range(28.0e-6..50.0e-6),
            sifs_s: rng.gen_range(10.0e-6..16.0e-6),
            rts_s: rng.gen_range(100.0e-6..400.0e-6),
            cts_s: rng.gen_range(100.0e-6..400.0e-6),
            ack_s: rng.gen_range(100.0e-6..400.0e-6),
            per_user_rate_bps: 0.0,
            duty_override: None,
        };
        let got = saturation_throughput(&p).unwrap();

        // Scratch evaluation, arranged independently: verify the fixed
        // point algebraically, then assemble the throughput from raw
        // timing fields.
        let tau = bianchi_tau(p.cw_min, p.backoff_stages, p.n_wifi).unwrap();
        let n = p.n_wifi as f64;
        let pc = 1.0 - (1.0 - tau).powf(n - 1.0);
        let w = p.cw_min as f64;
        let m = p.backoff_stages as f64;
        let tau_check = if (1.0 - 2.0 * pc).abs() < 1e-9 {
            4.0 / (2.0 * w + 2.0 + m * w)
        } else {
            2.0 * (1.0 - 2.0 * pc)
                / ((1.0 - 2.0 * pc) * (w + 1.0) + pc * w * (1.0 - (2.0 * pc).powf(m)))
        };
        assert!(
            (tau - tau_check).abs() < 1e-9,
            "fixed point inconsistent: tau {tau} vs {tau_check}"
        );
        let p_tr = 1.0 - (1.0 - tau).powf(n);
        let p_s = n * tau * (1.0 - tau).powf(n - 1.0) / p_tr;
        let t_s = p.rts_s
            + p.cts_s
            + p.ack_s
            + 3.0 * p.sifs_s
            + p.difs_s
            + p.payload_bits / p.phy_rate_bps;
        let t_c = p.rts_s + p.difs_s;
        let scratch = p_s * p_tr * p.payload_bits
            / ((1.0 - p_tr) * p.slot_s + p_tr * p_s * t_s + p_tr * (1.0 - p_s) * t_c);
        let rel = (got - scratch).abs() / scratch.abs().max(1e-300);
        worst_rel = worst_rel.max(rel);

        // The protective duty bound leaves each station exactly the
        // required rate whenever it is interior.
        let gamma = rng.gen_range(0.0..1.5 * got / n);
        let bound = max_duty_fraction(got, gamma, p.n_wifi).unwrap();
        if bound > 0.0 && bound < 1.0 {
            let residual = per_wifi_user_rate(got, bound, p.n_wifi).unwrap();
            assert!(
                (residual - gamma).abs() <= 1e-9 * gamma.max(1.0),
                "duty bound leaves {residual}, required {gamma}"
            );
        }
    }
    // Consistency against an independently computed default-cell value.
    let defaults = WifiParams::default();
    let r_sat = saturation_throughput(&defaults).unwrap();
    let theta_max = max_duty_fraction(r_sat, defaults.per_user_rate_bps, defaults.n_wifi).unwrap();
    let default_ok = (r_sat - 8_779_838.138398658).abs() < 1e-3
        && (theta_max - 0.08882147097769755).abs() < 1e-12;

    let pass = worst_rel < 1e-9 && default_ok;
    report(
        "criterion 09: saturation throughput matches a scratch evaluation to 1e-9 on 100 random cells; duty bound exact",
        pass,
    );
    println!("  worst relative deviation {worst_rel:.2e}");
    assert!(worst_rel < 1e-9, "worst relative deviation {worst_rel:.2e}");
    assert!(default_ok, "default cell drifted: {r_sat}, {theta_max}");
}

#[test]
fn criterion_10_identical_runs_produce_identical_artifacts() {
    let cfg = tiny_cfg();
    let a = run_episode_seeded(&cfg, 12, Algorithm::Lsm, true).unwrap();
    let b = run_episode_seeded(&cfg, 12, Algorithm::Lsm, true).unwrap();
    let c = run_episode_seeded(&cfg, 12, Algorithm::Lsm, false).unwrap();
    let csv_a = records_csv(&a);
    let same_rerun = csv_a == records_csv(&b);
    let same_mode = csv_a == records_csv(&c);
    let summary_a = serde_json::to_string(&EpisodeSummary::from_result(&a)).unwrap();
    let summary_same = summary_a
        == serde_json::to_string(&EpisodeSummary::from_result(&b)).unwrap()
        && summary_a == serde_json::to_string(&EpisodeSummary::from_result(&c)).unwrap();
    let cdf_a = rate_cdf(&a.delivered_user_bits, &a.assigned_slots);
    let cdf_same = cdf_a == rate_cdf(&b.delivered_user_bits, &b.assigned_slots)
        && cdf_a == rate_cdf(&c.delivered_user_bits, &c.assigned_slots);
    let pass = same_rerun && same_mode && summary_same && cdf_same;
    report(
        "criterion 10: identical config+seed reruns and both execution modes produce byte-identical artifacts",
        pass,
    );
    assert!(same_rerun, "rerun produced different metrics CSV");
    assert!(same_mode, "parallel and sequential runs diverged");
    assert!(summary_same, "summaries diverged");
    assert!(cdf_same, "rate CDFs diverged");
}
