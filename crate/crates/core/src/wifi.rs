//! WiFi coexistence: DCF saturation throughput and the duty-cycle bound.
//!
//! The unlicensed band is shared with WiFi access points running RTS/CTS
//! DCF. Saturation throughput comes from the classic two-state fixed point:
//! each station attempts transmission in a slot with probability tau, tau
//! depends on the conditional collision probability p, and p depends back
//! on tau. The UAVs may occupy at most a fraction theta of airtime such
//! that each WiFi user still gets its required rate.

use crate::error::{Result, SimError};

/// Contention and timing parameters of the WiFi cell.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WifiParams {
    /// Saturated WiFi stations sharing the band.
    pub n_wifi: usize,
    /// Minimum contention window W.
    pub cw_min: u32,
    /// Backoff stages m (window doubles up to 2^m W).
    pub backoff_stages: u32,
    /// Mean payload per successful transmission, bits.
    pub payload_bits: f64,
    /// PHY rate carrying the payload, bits/s.
    pub phy_rate_bps: f64,
    /// Idle slot, seconds.
    pub slot_s: f64,
    pub difs_s: f64,
    pub sifs_s: f64,
    pub rts_s: f64,
    pub cts_s: f64,
    pub ack_s: f64,
    /// Required per-WiFi-user rate, bits/s.
    pub per_user_rate_bps: f64,
    /// Fixed duty-cycle fraction; `None` resolves to the tightest bound
    /// that still protects the WiFi users.
    pub duty_override: Option<f64>,
}

impl Default for WifiParams {
    fn default() -> Self {
        WifiParams {
            n_wifi: 2,
            cw_min: 32,
            backoff_stages: 5,
            payload_bits: 1500.0 * 8.0,
            phy_rate_bps: 54.0e6,
            slot_s: 9.0e-6,
            difs_s: 50.0e-6,
            sifs_s: 16.0e-6,
            rts_s: 352.0e-6,
            cts_s: 304.0e-6,
            ack_s: 304.0e-6,
            per_user_rate_bps: 4.0e6,
            duty_override: None,
        }
    }
}

impl WifiParams {
    /// Duration of a successful RTS/CTS exchange, seconds.
    pub fn t_success(&self) -> f64 {
        self.rts_s
            + self.sifs_s
            + self.cts_s
            + self.sifs_s
            + self.payload_bits / self.phy_rate_bps
            + self.sifs_s
            + self.ack_s
            + self.difs_s
    }

    /// Duration of a collision (RTS lost), seconds.
    pub fn t_collision(&self) -> f64 {
        self.rts_s + self.difs_s
    }

    pub fn validate(&self) -> Result<()> {
        if self.cw_min < 2 {
            return Err(SimError::config("wifi.cw_min", "must be at least 2"));
        }
        let positive = [
            ("wifi.payload_bits", self.payload_bits),
            ("wifi.phy_rate_bps", self.phy_rate_bps),
            ("wifi.slot_s", self.slot_s),
        ];
        for (field, v) in positive {
            if !(v > 0.0) {
                return Err(SimError::config(
                    field,
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if let Some(d) = self.duty_override {
            if !(0.0..=1.0).contains(&d) {
                return Err(SimError::config(
                    "wifi.duty_override",
                    format!("must lie in [0, 1], got {d}"),
                ));
            }
        }
        if self.per_user_rate_bps < 0.0 {
            return Err(SimError::config(
                "wifi.per_user_rate_bps",
                "must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Attempt probability given the conditional collision probability `p`.
///
/// The expression has a removable singularity at p = 1/2 where both the
/// numerator and denominator vanish; the limit is 4 / (2W + 2 + mW).
pub fn attempt_probability_given_collision(cw_min: u32, backoff_stages: u32, p: f64) -> f64 {
    let w = cw_min as f64;
    let m = backoff_stages as f64;
    let one_minus_2p = 1.0 - 2.0 * p;
    if one_minus_2p.abs() < 1e-12 {
        return 4.0 / (2.0 * w + 2.0 + m * w);
    }
    2.0 * one_minus_2p / (one_minus_2p * (w + 1.0) + p * w * (1.0 - (2.0 * p).powf(m)))
}

/// Solves the DCF fixed point for `n_wifi` saturated stations.
///
/// Returns the per-slot attempt probability tau. The residual
/// tau - f(p(tau)) is strictly increasing in tau, so bisection finds the
/// unique root.
pub fn bianchi_tau(cw_min: u32, backoff_stages: u32, n_wifi: usize) -> Result<f64> {
    if cw_min < 2 {
        return Err(SimError::InvalidInput {
            name: "cw_min",
            value: cw_min as f64,
            reason: "contention window must be at least 2",
        });
    }
    if n_wifi == 0 {
        return Err(SimError::InvalidInput {
            name: "n_wifi",
            value: 0.0,
            reason: "fixed point needs at least one station",
        });
    }
    if n_wifi == 1 {
        // No collisions: p = 0.
        return Ok(attempt_probability_given_collision(
            cw_min,
            backoff_stages,
            0.0,
        ));
    }
    let residual = |tau: f64| {
        let p = 1.0 - (1.0 - tau).powi(n_wifi as i32 - 1);
        tau - attempt_probability_given_collision(cw_min, backoff_stages, p)
    };
    let mut lo = 1e-12;
    let mut hi = 1.0 - 1e-12;
    if residual(lo) > 0.0 || residual(hi) < 0.0 {
        return Err(SimError::NoConvergence { iterations: 0 });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Saturation throughput in bits/s for `n_wifi` stations all attempting
/// with probability `tau`.
pub fn throughput_given_tau(n_wifi: usize, tau: f64, p: &WifiParams) -> Result<f64> {
    if n_wifi == 0 {
        return Ok(0.0);
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(SimError::InvalidInput {
            name: "tau",
            value: tau,
            reason: "attempt probability must lie in [0, 1]",
        });
    }
    let n = n_wifi as f64;
    let p_tr = 1.0 - (1.0 - tau).powi(n_wifi as i32);
    if p_tr == 0.0 {
        return Ok(0.0);
    }
    let p_s = n * tau * (1.0 - tau).powi(n_wifi as i32 - 1) / p_tr;
    let denom =
        (1.0 - p_tr) * p.slot_s + p_tr * p_s * p.t_success() + p_tr * (1.0 - p_s) * p.t_collision();
    Ok(p_s * p_tr * p.payload_bits / denom)
}

/// Saturation throughput in bits/s of the WiFi cell described by `p`.
pub fn saturation_throughput(p: &WifiParams) -> Result<f64> {
    if p.n_wifi == 0 {
        return Ok(0.0);
    }
    let tau = bianchi_tau(p.cw_min, p.backoff_stages, p.n_wifi)?;
    throughput_given_tau(p.n_wifi, tau, p)
}

/// Rate each WiFi user sees when the UAVs occupy fraction `theta` of
/// airtime.
pub fn per_wifi_user_rate(r_sat: f64, theta: f64, n_wifi: usize) -> Result<f64> {
    if n_wifi == 0 {
        return Err(SimError::InvalidInput {
            name: "n_wifi",
            value: 0.0,
            reason: "per-user rate needs at least one station",
        });
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(SimError::InvalidInput {
            name: "theta",
            value: theta,
            reason: "duty fraction must lie in [0, 1]",
        });
    }
    Ok(r_sat * (1.0 - theta) / n_wifi as f64)
}

/// Largest duty-cycle fraction that still leaves every WiFi user at least
/// `gamma_bps`, clamped to [0, 1]. With no WiFi stations the band is free.
pub fn max_duty_fraction(r_sat: f64, gamma_bps: f64, n_wifi: usize) -> Result<f64> {
    if n_wifi == 0 {
        return Ok(1.0);
    }
    if r_sat <= 0.0 {
        return Ok(0.0);
    }
    if gamma_bps < 0.0 {
        return Err(SimError::InvalidInput {
            name: "gamma_bps",
            value: gamma_bps,
            reason: "required rate must be non-negative",
        });
    }
    Ok((1.0 - n_wifi as f64 * gamma_bps / r_sat).clamp(0.0, 1.0))
}

/// Duty cycle actually used by a run: the override if set, otherwise the
/// tightest protective bound at the configured cell parameters.
pub fn resolve_duty_cycle(p: &WifiParams) -> Result<f64> {
    if let Some(d) = p.duty_override {
        if !(0.0..=1.0).contains(&d) {
            return Err(SimError::InvalidInput {
                name: "duty_override",
                value: d,
                reason: "duty fraction must lie in [0, 1]",
            });
        }
        return Ok(d);
    }
    let r_sat = saturation_throughput(p)?;
    max_duty_fraction(r_sat, p.per_user_rate_bps, p.n_wifi)
}
