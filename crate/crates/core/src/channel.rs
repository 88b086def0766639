//! Air-to-ground and fronthaul link models.
//!
//! Distances are meters, frequencies Hz, bandwidths Hz, rates bits/s.
//! Powers cross the API boundary in dBm and are converted to linear mW
//! before any SINR arithmetic. Pathloss mixtures for air-to-ground links
//! average in the dB domain; the fronthaul power-law mixture averages in
//! the linear domain because its two states are plain gain factors.
//!
//! # Elevation-dependent line of sight
//!
//! The probability that a ground user sees an aerial transmitter without
//! blockage follows a logistic curve in the elevation angle. At 90 degrees
//! (directly overhead) it approaches 1; at low angles it collapses toward
//! the environment-dependent floor.

use crate::error::{Result, SimError};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Converts a dB quantity to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Converts transmit power in dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Line-of-sight probability at elevation angle `phi_deg` (degrees).
///
/// `x` and `y` are the environment constants of the logistic model.
pub fn los_probability(phi_deg: f64, x: f64, y: f64) -> Result<f64> {
    if !(0.0..=90.0).contains(&phi_deg) {
        return Err(SimError::InvalidInput {
            name: "phi_deg",
            value: phi_deg,
            reason: "elevation angle must lie in [0, 90] degrees",
        });
    }
    if x <= 0.0 || y <= 0.0 {
        return Err(SimError::InvalidInput {
            name: "los constants",
            value: if x <= 0.0 { x } else { y },
            reason: "environment constants must be positive",
        });
    }
    Ok(1.0 / (1.0 + x * f64::exp(-y * (phi_deg - x))))
}

/// Free-space pathloss in dB at distance `d_m` and carrier `f_hz`.
pub fn free_space_pathloss_db(d_m: f64, f_hz: f64) -> Result<f64> {
    if d_m <= 0.0 {
        return Err(SimError::InvalidInput {
            name: "d_m",
            value: d_m,
            reason: "distance must be positive",
        });
    }
    if f_hz <= 0.0 {
        return Err(SimError::InvalidInput {
            name: "f_hz",
            value: f_hz,
            reason: "carrier frequency must be positive",
        });
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * d_m * f_hz / SPEED_OF_LIGHT).log10())
}

/// Expected air-to-ground pathloss in dB.
///
/// Free-space loss plus the LoS/NLoS excess terms weighted by `p_los`,
/// averaged in the dB domain.
pub fn average_air_ground_pathloss_db(
    d_m: f64,
    f_hz: f64,
    eta_los_db: f64,
    eta_nlos_db: f64,
    p_los: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_los) {
        return Err(SimError::InvalidInput {
            name: "p_los",
            value: p_los,
            reason: "probability must lie in [0, 1]",
        });
    }
    let fspl = free_space_pathloss_db(d_m, f_hz)?;
    Ok(fspl + p_los * eta_los_db + (1.0 - p_los) * eta_nlos_db)
}

/// Expected fronthaul power gain (linear) over distance `d_m`.
///
/// LoS attenuates as `d^-beta`; NLoS carries the extra factor
/// `varsigma_nlos_db`. The two states mix in the linear domain.
pub fn fronthaul_gain(d_m: f64, beta: f64, varsigma_nlos_db: f64, p_los: f64) -> Result<f64> {
    if d_m <= 0.0 {
        return Err(SimError::InvalidInput {
            name: "d_m",
            value: d_m,
            reason: "distance must be positive",
        });
    }
    if beta <= 0.0 {
        return Err(SimError::InvalidInput {
            name: "beta",
            value: beta,
            reason: "pathloss exponent must be positive",
        });
    }
    if !(0.0..=1.0).contains(&p_los) {
        return Err(SimError::InvalidInput {
            name: "p_los",
            value: p_los,
            reason: "probability must lie in [0, 1]",
        });
    }
    let g_los = d_m.powf(-beta);
    let g_nlos = g_los / db_to_linear(varsigma_nlos_db);
    Ok(p_los * g_los + (1.0 - p_los) * g_nlos)
}

/// SINR ingredients for one link, all in linear mW.
#[derive(Debug, Clone, Copy)]
pub struct LinkBudget {
    pub signal_mw: f64,
    pub interference_mw: f64,
    pub noise_mw: f64,
}

impl LinkBudget {
    pub fn sinr(&self) -> f64 {
        self.signal_mw / (self.interference_mw + self.noise_mw)
    }
}

/// Licensed downlink rate in bits/s for spectrum fraction `u`.
pub fn licensed_rate(u: f64, bandwidth_hz: f64, sinr: f64) -> Result<f64> {
    check_fraction("u", u)?;
    Ok(u * bandwidth_hz * (1.0 + sinr).log2())
}

/// Unlicensed downlink rate in bits/s for spectrum fraction `e` under
/// duty-cycle fraction `theta`.
pub fn unlicensed_rate(e: f64, theta: f64, bandwidth_hz: f64, sinr: f64) -> Result<f64> {
    check_fraction("e", e)?;
    check_fraction("theta", theta)?;
    Ok(e * theta * bandwidth_hz * (1.0 + sinr).log2())
}

/// Fronthaul rate in bits/s when the cloud serves `n_users` concurrent
/// cache misses over a band of `bandwidth_hz`.
pub fn fronthaul_rate(n_users: usize, bandwidth_hz: f64, sinr: f64) -> Result<f64> {
    if n_users == 0 {
        return Err(SimError::InvalidInput {
            name: "n_users",
            value: 0.0,
            reason: "fronthaul rate needs at least one served user",
        });
    }
    Ok(bandwidth_hz / n_users as f64 * (1.0 + sinr).log2())
}

fn check_fraction(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(SimError::InvalidInput {
            name,
            value: v,
            reason: "fraction must lie in [0, 1]",
        });
    }
    Ok(())
}

/// Physical constants of the radio environment.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    /// Licensed carrier, Hz.
    pub f_licensed_hz: f64,
    /// Unlicensed carrier, Hz.
    pub f_unlicensed_hz: f64,
    /// Licensed band LoS/NLoS excess loss, dB.
    pub eta_licensed_los_db: f64,
    pub eta_licensed_nlos_db: f64,
    /// Unlicensed band LoS/NLoS excess loss, dB.
    pub eta_unlicensed_los_db: f64,
    pub eta_unlicensed_nlos_db: f64,
    /// Logistic LoS-probability constants.
    pub los_x: f64,
    pub los_y: f64,
    /// Fronthaul power-law exponent.
    pub fronthaul_beta: f64,
    /// Fronthaul NLoS extra attenuation, dB.
    pub fronthaul_nlos_extra_db: f64,
    /// Reference gain applied to the fronthaul power law, dB. The power law
    /// is normalized to distance 1 m; this anchors it to a physical link
    /// budget (default: free-space gain at 1 m, 2 GHz).
    pub fronthaul_ref_gain_db: f64,
    /// UAV transmit power, dBm.
    pub uav_power_dbm: f64,
    /// Cloud ground-station transmit power, dBm.
    pub cloud_power_dbm: f64,
    /// Noise floor, dBm.
    pub noise_dbm: f64,
    /// Band widths, Hz.
    pub bw_licensed_hz: f64,
    pub bw_unlicensed_hz: f64,
    pub bw_fronthaul_hz: f64,
    /// Scale on the cloud-to-user interference gain seen on the licensed
    /// band (the fronthaul reuses licensed spectrum).
    pub cloud_interference_scale: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            f_licensed_hz: 2.0e9,
            f_unlicensed_hz: 5.18e9,
            eta_licensed_los_db: 1.0,
            eta_licensed_nlos_db: 20.0,
            eta_unlicensed_los_db: 1.2,
            eta_unlicensed_nlos_db: 23.0,
            los_x: 11.9,
            los_y: 0.13,
            fronthaul_beta: 2.0,
            fronthaul_nlos_extra_db: 20.0,
            fronthaul_ref_gain_db: -38.46,
            uav_power_dbm: 15.0,
            cloud_power_dbm: 20.0,
            noise_dbm: -94.0,
            bw_licensed_hz: 10.0e6,
            bw_unlicensed_hz: 20.0e6,
            bw_fronthaul_hz: 100.0e6,
            cloud_interference_scale: 0.1,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, f64); 8] = [
            ("channel.f_licensed_hz", self.f_licensed_hz),
            ("channel.f_unlicensed_hz", self.f_unlicensed_hz),
            ("channel.los_x", self.los_x),
            ("channel.los_y", self.los_y),
            ("channel.fronthaul_beta", self.fronthaul_beta),
            ("channel.bw_licensed_hz", self.bw_licensed_hz),
            ("channel.bw_unlicensed_hz", self.bw_unlicensed_hz),
            ("channel.bw_fronthaul_hz", self.bw_fronthaul_hz),
        ];
        for (field, v) in positive {
            if !(v > 0.0) {
                return Err(SimError::config(
                    field,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if self.cloud_interference_scale < 0.0 {
            return Err(SimError::config(
                "channel.cloud_interference_scale",
                "must be non-negative",
            ));
        }
        Ok(())
    }
}
