//! Run configuration: TOML in, validated struct out, effective echo back.
//!
//! Every tunable lives here with the defaults used throughout the test
//! suite. Unknown fields are rejected so typos fail loudly; every
//! validation error names the offending field.

use crate::allocation::ActionSpaceParams;
use crate::channel::ChannelParams;
use crate::error::{Result, SimError};
use crate::reservoir::{EsnParams, LiquidParams};
use crate::traffic::TrafficConfig;
use crate::wifi::WifiParams;
use std::path::Path;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    /// Deployment disk radius, meters.
    pub radius_m: f64,
    pub n_users: usize,
    pub n_uavs: usize,
    pub uav_altitude_m: f64,
    /// Cloud ground-station antenna height, meters.
    pub cloud_height_m: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            radius_m: 200.0,
            n_users: 20,
            n_uavs: 5,
            uav_altitude_m: 100.0,
            cloud_height_m: 30.0,
        }
    }
}

impl TopologyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > 0.0) {
            return Err(SimError::config("topology.radius_m", "must be positive"));
        }
        if self.n_users == 0 {
            return Err(SimError::config("topology.n_users", "must be positive"));
        }
        if self.n_uavs == 0 {
            return Err(SimError::config("topology.n_uavs", "must be positive"));
        }
        if !(self.uav_altitude_m > 0.0) {
            return Err(SimError::config(
                "topology.uav_altitude_m",
                "must be positive",
            ));
        }
        if !(self.cloud_height_m > 0.0) {
            return Err(SimError::config(
                "topology.cloud_height_m",
                "must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CacheConfig {
    /// Contents each UAV can hold.
    pub cache_size: usize,
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig { cache_size: 3 }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorConfig {
    pub liquid: LiquidParams,
    pub esn: EsnParams,
    /// Ridge regularizer for readout training.
    pub ridge_delta: f64,
    /// Days of history used to fit readouts.
    pub training_days: usize,
    /// Held-out days for benchmark evaluation.
    pub test_days: usize,
    /// Request slots drawn per (user, hour) epoch.
    pub slots_per_hour: usize,
    /// Additive smoothing mass spread over the catalog in each empirical
    /// histogram.
    pub smoothing: f64,
    /// Scale applied to liquid observables before the readout. Smaller
    /// values shrink the feature norm, raising the readout's effective
    /// ridge regularization at a fixed `ridge_delta`.
    pub liquid_feature_scale: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            liquid: LiquidParams::default(),
            esn: EsnParams::default(),
            ridge_delta: 0.1,
            training_days: 5,
            test_days: 2,
            slots_per_hour: 40,
            smoothing: 1.0,
            liquid_feature_scale: 0.01,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        self.liquid.validate()?;
        self.esn.validate()?;
        if self.ridge_delta < 0.0 {
            return Err(SimError::config(
                "predictor.ridge_delta",
                "must be non-negative",
            ));
        }
        if self.training_days == 0 {
            return Err(SimError::config(
                "predictor.training_days",
                "must be positive",
            ));
        }
        if self.test_days == 0 {
            return Err(SimError::config("predictor.test_days", "must be positive"));
        }
        if self.slots_per_hour == 0 {
            return Err(SimError::config(
                "predictor.slots_per_hour",
                "must be positive",
            ));
        }
        if self.smoothing < 0.0 {
            return Err(SimError::config(
                "predictor.smoothing",
                "must be non-negative",
            ));
        }
        if self.liquid_feature_scale <= 0.0 {
            return Err(SimError::config(
                "predictor.liquid_feature_scale",
                "must be positive",
            ));
        }
        Ok(())
    }
}

fn default_rl_liquid() -> LiquidParams {
    LiquidParams {
        dims: [5, 5, 30],
        steps_per_input: 10,
        ..LiquidParams::default()
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlConfig {
    pub liquid: LiquidParams,
    /// LMS step for readout adaptation.
    pub learning_rate: f64,
    /// Exploration probability.
    pub epsilon: f64,
    /// Episode length in slots.
    pub iterations: usize,
    /// Slots per epoch; the hour of day advances each epoch and caches
    /// and predictions refresh with it.
    pub epoch_iterations: usize,
    /// Candidate cap per UAV; the action space is 2^cap at most.
    pub action_user_cap: usize,
    /// Fronthaul dominance threshold for the candidate rule.
    pub dominance_factor: f64,
    /// Days of warmup history for the episode request predictors.
    pub prediction_days: usize,
    /// Tabular baseline: learning rate, discount, and state-table cap.
    pub q_learning_rate: f64,
    pub q_discount: f64,
    pub q_table_cap: usize,
    /// Convergence detector: window length and relative tolerance on the
    /// running mean of the stable-user count.
    pub convergence_window: usize,
    pub convergence_tol: f64,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            liquid: default_rl_liquid(),
            learning_rate: 0.05,
            epsilon: 0.1,
            iterations: 400,
            epoch_iterations: 100,
            action_user_cap: 4,
            dominance_factor: 100.0,
            prediction_days: 3,
            q_learning_rate: 0.3,
            q_discount: 0.9,
            q_table_cap: 100_000,
            convergence_window: 50,
            convergence_tol: 0.1,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<()> {
        self.liquid.validate()?;
        for (field, v) in [
            ("rl.learning_rate", self.learning_rate),
            ("rl.q_learning_rate", self.q_learning_rate),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(SimError::config(
                    field,
                    format!("must lie in (0, 1], got {v}"),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(SimError::config("rl.epsilon", "must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.q_discount) {
            return Err(SimError::config("rl.q_discount", "must lie in [0, 1)"));
        }
        if self.iterations == 0 {
            return Err(SimError::config("rl.iterations", "must be positive"));
        }
        if self.epoch_iterations == 0 {
            return Err(SimError::config("rl.epoch_iterations", "must be positive"));
        }
        if self.action_user_cap == 0 || self.action_user_cap > 12 {
            return Err(SimError::config(
                "rl.action_user_cap",
                "must lie in 1..=12 (the action space is 2^cap)",
            ));
        }
        if self.prediction_days == 0 {
            return Err(SimError::config("rl.prediction_days", "must be positive"));
        }
        if self.convergence_window < 2 {
            return Err(SimError::config(
                "rl.convergence_window",
                "must be at least 2",
            ));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(SimError::config("rl.convergence_tol", "must be positive"));
        }
        Ok(())
    }

    pub fn action_params(&self) -> ActionSpaceParams {
        ActionSpaceParams {
            user_cap: self.action_user_cap,
            dominance_factor: self.dominance_factor,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Slot duration, seconds; converts rates to bits per slot.
    pub slot_s: f64,
    /// Cap on enumerated maximum-cardinality selections.
    pub selection_cap: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            slot_s: 1.0,
            selection_cap: 4096,
        }
    }
}

/// Complete run configuration.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub topology: TopologyConfig,
    pub channel: ChannelParams,
    pub wifi: WifiParams,
    pub traffic: TrafficConfig,
    pub cache: CacheConfig,
    pub predictor: PredictorConfig,
    pub rl: RlConfig,
    pub run: RunConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        self.channel.validate()?;
        self.wifi.validate()?;
        self.traffic.validate()?;
        self.predictor.validate()?;
        self.rl.validate()?;
        if !(self.run.slot_s > 0.0) {
            return Err(SimError::config("run.slot_s", "must be positive"));
        }
        if self.run.selection_cap == 0 {
            return Err(SimError::config("run.selection_cap", "must be positive"));
        }
        Ok(())
    }

    /// Serializes the effective configuration (defaults filled in).
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SimError::ConfigParse(e.to_string()))
    }
}

/// Parses and validates a TOML config file. Missing fields take defaults;
/// unknown fields are errors.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<SimConfig> {
    let cfg: SimConfig = toml::from_str(text).map_err(|e| SimError::ConfigParse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip_preserves_defaults() {
        let cfg = SimConfig::default();
        let text = cfg.to_toml().unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(back.topology.n_users, cfg.topology.n_users);
        assert_eq!(back.rl.liquid.dims, cfg.rl.liquid.dims);
        assert_eq!(back.wifi.duty_override, cfg.wifi.duty_override);
        assert_eq!(back.channel.noise_dbm, cfg.channel.noise_dbm);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg = parse_config("[topology]\nn_users = 7\n").unwrap();
        assert_eq!(cfg.topology.n_users, 7);
        assert_eq!(cfg.topology.n_uavs, 5);
        assert_eq!(cfg.cache.cache_size, 3);
    }

    #[test]
    fn unknown_field_is_rejected_by_name() {
        let err = parse_config("[topology]\nn_userz = 7\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n_userz"), "{msg}");
    }

    #[test]
    fn invalid_value_names_field() {
        let err = parse_config("[rl]\nepsilon = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("rl.epsilon"), "{err}");
    }

    #[test]
    fn rl_liquid_default_differs_from_predictor() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.predictor.liquid.dims, [5, 5, 20]);
        assert_eq!(cfg.rl.liquid.dims, [5, 5, 30]);
    }

    #[test]
    fn duty_override_parses() {
        let cfg = parse_config("[wifi]\nduty_override = 0.3\n").unwrap();
        assert_eq!(cfg.wifi.duty_override, Some(0.3));
        let err = parse_config("[wifi]\nduty_override = 1.3\n");
        assert!(err.is_err());
    }
}
