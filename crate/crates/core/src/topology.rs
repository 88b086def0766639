//! Scenario geometry and the per-topology rate tables.
//!
//! UAVs hover at a common altitude over a disk of users; the cloud ground
//! station sits at the disk center on a mast. All SINR tables are computed
//! once per topology: who interferes with whom never changes within an
//! episode, only the spectrum fractions do.
//!
//! Rate tables are in bits per slot at full allocation:
//!
//! * licensed: `u = 1`, interference from other UAVs plus the cloud's
//!   fronthaul transmissions scaled by the configured factor.
//! * unlicensed: `e = 1` including the duty-cycle fraction; interference
//!   from other UAVs only.
//! * fronthaul: single served miss (the per-miss share divides this), with
//!   the other UAVs' licensed downlink as interference.

use crate::channel::{
    self, average_air_ground_pathloss_db, db_to_linear, dbm_to_mw, free_space_pathloss_db,
    fronthaul_gain, licensed_rate, los_probability, unlicensed_rate, ChannelParams, LinkBudget,
};
use crate::config::{SimConfig, TopologyConfig};
use crate::error::{Result, SimError};
use crate::rng::{self, STREAM_TOPOLOGY};
use crate::traffic::harmonic_composition;
use crate::wifi;
use rand::Rng;

/// Positions of everything in the scenario, meters.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub uav_xy: Vec<[f64; 2]>,
    pub uav_altitude_m: f64,
    pub user_xy: Vec<[f64; 2]>,
    pub cloud: [f64; 3],
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Elevation angle in degrees of the higher endpoint seen from the lower.
fn elevation_deg(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = dist3(a, b);
    if d == 0.0 {
        return 90.0;
    }
    let ratio = ((a[2] - b[2]).abs() / d).clamp(0.0, 1.0);
    ratio.asin().to_degrees()
}

impl Geometry {
    pub fn n_uavs(&self) -> usize {
        self.uav_xy.len()
    }

    pub fn n_users(&self) -> usize {
        self.user_xy.len()
    }

    pub fn uav_pos(&self, k: usize) -> [f64; 3] {
        [self.uav_xy[k][0], self.uav_xy[k][1], self.uav_altitude_m]
    }

    pub fn user_pos(&self, i: usize) -> [f64; 3] {
        [self.user_xy[i][0], self.user_xy[i][1], 0.0]
    }

    pub fn uav_user_distance(&self, k: usize, i: usize) -> f64 {
        dist3(self.uav_pos(k), self.user_pos(i))
    }

    pub fn uav_user_elevation_deg(&self, k: usize, i: usize) -> f64 {
        elevation_deg(self.uav_pos(k), self.user_pos(i))
    }

    pub fn cloud_uav_distance(&self, k: usize) -> f64 {
        dist3(self.cloud, self.uav_pos(k))
    }

    pub fn cloud_uav_elevation_deg(&self, k: usize) -> f64 {
        elevation_deg(self.cloud, self.uav_pos(k))
    }

    pub fn cloud_user_distance(&self, i: usize) -> f64 {
        dist3(self.cloud, self.user_pos(i))
    }

    pub fn uav_uav_distance(&self, j: usize, k: usize) -> f64 {
        dist3(self.uav_pos(j), self.uav_pos(k))
    }
}

/// Draws UAV and user positions uniformly on the deployment disk.
/// Draw order (UAVs first, then users) is part of the replay contract.
pub fn generate_topology(cfg: &TopologyConfig, seed: u64) -> Result<Geometry> {
    cfg.validate()?;
    let mut rng = rng::stream(seed, STREAM_TOPOLOGY, 0);
    let mut draw_disk = |radius: f64| -> [f64; 2] {
        let r = radius * rng.gen::<f64>().sqrt();
        let phi = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
        [r * phi.cos(), r * phi.sin()]
    };
    let uav_xy: Vec<[f64; 2]> = (0..cfg.n_uavs).map(|_| draw_disk(cfg.radius_m)).collect();
    let user_xy: Vec<[f64; 2]> = (0..cfg.n_users).map(|_| draw_disk(cfg.radius_m)).collect();
    Ok(Geometry {
        uav_xy,
        uav_altitude_m: cfg.uav_altitude_m,
        user_xy,
        cloud: [0.0, 0.0, cfg.cloud_height_m],
    })
}

/// Full-allocation rate tables for one topology, bits per slot.
#[derive(Debug, Clone)]
pub struct NetworkRates {
    pub licensed_full: Vec<Vec<f64>>,
    pub unlicensed_full: Vec<Vec<f64>>,
    /// Fronthaul bits per slot per UAV at a single served miss.
    pub fronthaul_full: Vec<f64>,
    /// Association preference: best end-to-end rate over both bands with
    /// the full fronthaul behind them.
    pub preference: Vec<Vec<f64>>,
    /// Duty-cycle fraction the unlicensed rates already include.
    pub theta: f64,
}

/// Computes all rate tables for `geom` under `cfg`.
pub fn compute_network_rates(geom: &Geometry, cfg: &SimConfig) -> Result<NetworkRates> {
    let ch: &ChannelParams = &cfg.channel;
    ch.validate()?;
    let theta = wifi::resolve_duty_cycle(&cfg.wifi)?;
    let slot = cfg.run.slot_s;
    let n_uavs = geom.n_uavs();
    let n_users = geom.n_users();
    if n_uavs == 0 || n_users == 0 {
        return Err(SimError::Empty("topology"));
    }

    let p_uav = dbm_to_mw(ch.uav_power_dbm);
    let p_cloud = dbm_to_mw(ch.cloud_power_dbm);
    let noise = dbm_to_mw(ch.noise_dbm);

    // Received power per (uav, user) on each band.
    let mut rx_l = vec![vec![0.0; n_users]; n_uavs];
    let mut rx_u = vec![vec![0.0; n_users]; n_uavs];
    for k in 0..n_uavs {
        for i in 0..n_users {
            let d = geom.uav_user_distance(k, i).max(1.0);
            let phi = geom.uav_user_elevation_deg(k, i);
            let p_los = los_probability(phi, ch.los_x, ch.los_y)?;
            let pl_l = average_air_ground_pathloss_db(
                d,
                ch.f_licensed_hz,
                ch.eta_licensed_los_db,
                ch.eta_licensed_nlos_db,
                p_los,
            )?;
            let pl_u = average_air_ground_pathloss_db(
                d,
                ch.f_unlicensed_hz,
                ch.eta_unlicensed_los_db,
                ch.eta_unlicensed_nlos_db,
                p_los,
            )?;
            rx_l[k][i] = p_uav * db_to_linear(-pl_l);
            rx_u[k][i] = p_uav * db_to_linear(-pl_u);
        }
    }

    // Cloud-to-user interference gain on the licensed band.
    let cloud_gain: Vec<f64> = (0..n_users)
        .map(|i| {
            let d = geom.cloud_user_distance(i).max(1.0);
            free_space_pathloss_db(d, ch.f_licensed_hz)
                .map(|pl| db_to_linear(-pl) * ch.cloud_interference_scale)
        })
        .collect::<Result<_>>()?;

    let mut licensed_full = vec![vec![0.0; n_users]; n_uavs];
    let mut unlicensed_full = vec![vec![0.0; n_users]; n_uavs];
    for k in 0..n_uavs {
        for i in 0..n_users {
            let other_l: f64 = (0..n_uavs).filter(|&j| j != k).map(|j| rx_l[j][i]).sum();
            let other_u: f64 = (0..n_uavs).filter(|&j| j != k).map(|j| rx_u[j][i]).sum();
            let budget_l = LinkBudget {
                signal_mw: rx_l[k][i],
                interference_mw: other_l + p_cloud * cloud_gain[i],
                noise_mw: noise,
            };
            let budget_u = LinkBudget {
                signal_mw: rx_u[k][i],
                interference_mw: other_u,
                noise_mw: noise,
            };
            licensed_full[k][i] = licensed_rate(1.0, ch.bw_licensed_hz, budget_l.sinr())? * slot;
            unlicensed_full[k][i] =
                unlicensed_rate(1.0, theta, ch.bw_unlicensed_hz, budget_u.sinr())? * slot;
        }
    }

    // Fronthaul: cloud to UAV, interfered by the other UAVs' licensed
    // downlinks (free-space with the licensed LoS excess; UAV-to-UAV links
    // are unobstructed).
    let ref_gain = db_to_linear(ch.fronthaul_ref_gain_db);
    let mut fronthaul_full = vec![0.0; n_uavs];
    for k in 0..n_uavs {
        let d = geom.cloud_uav_distance(k).max(1.0);
        let phi = geom.cloud_uav_elevation_deg(k);
        let p_los = los_probability(phi, ch.los_x, ch.los_y)?;
        let gain =
            fronthaul_gain(d, ch.fronthaul_beta, ch.fronthaul_nlos_extra_db, p_los)? * ref_gain;
        let mut interference = 0.0;
        for j in 0..n_uavs {
            if j == k {
                continue;
            }
            let d_jk = geom.uav_uav_distance(j, k).max(1.0);
            let pl = free_space_pathloss_db(d_jk, ch.f_licensed_hz)? + ch.eta_licensed_los_db;
            interference += p_uav * db_to_linear(-pl);
        }
        let budget = LinkBudget {
            signal_mw: p_cloud * gain,
            interference_mw: interference,
            noise_mw: noise,
        };
        fronthaul_full[k] = channel::fronthaul_rate(1, ch.bw_fronthaul_hz, budget.sinr())? * slot;
    }

    let preference = (0..n_uavs)
        .map(|k| {
            (0..n_users)
                .map(|i| {
                    harmonic_composition(licensed_full[k][i], fronthaul_full[k]).max(
                        harmonic_composition(unlicensed_full[k][i], fronthaul_full[k]),
                    )
                })
                .collect()
        })
        .collect();

    Ok(NetworkRates {
        licensed_full,
        unlicensed_full,
        fronthaul_full,
        preference,
        theta,
    })
}
