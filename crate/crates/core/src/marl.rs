//! Distributed agents learning which users to propose serving.
//!
//! One agent per UAV picks a subset of its candidate users each slot; the
//! joint proposal is scored by the slot evaluator and every agent is
//! rewarded with its own count of rate-stable users. Agents observe only
//! the other agents' broadcast policies (reduced to per-user proposal
//! probabilities) plus the current arrival pattern, so coordination has to
//! emerge through the reward.
//!
//! Two learners share this interface: a reservoir agent (stateful liquid
//! feeding a per-action linear readout adapted by least-mean-squares) and
//! a tabular Q baseline over a hashed, coarsely quantized observation.

use crate::allocation::{build_action_space, evaluate_joint_action, ActionSpace, SlotContext};
use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::predictor::{train_episode_predictions, EpisodePredictions};
use crate::reservoir::{Readout, Reservoir};
use crate::rng::{stream, STREAM_AGENT};
use crate::topology::{compute_network_rates, generate_topology, Geometry, NetworkRates};
use crate::traffic::{generate_requests, TrafficModel, HOURS_PER_DAY};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

/// Episode request slots live in their own index range so they never
/// replay the warmup history the predictors were trained on.
const EPISODE_SLOT_BASE: u64 = 1 << 32;

/// Per-visit decay of the optimistic value bonus; a few visits are enough
/// to dismiss an arm whose learned value stays low.
const OPTIMISM_DECAY: f64 = 0.5;

/// Learner selection for an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Reservoir agents with cache planning.
    Lsm,
    /// Tabular Q agents with cache planning.
    QCache,
    /// Tabular Q agents with caching disabled.
    QNoCache,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Lsm, Algorithm::QCache, Algorithm::QNoCache];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Lsm => "lsm",
            Algorithm::QCache => "q-cache",
            Algorithm::QNoCache => "q-nocache",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsm" => Ok(Algorithm::Lsm),
            "q-cache" => Ok(Algorithm::QCache),
            "q-nocache" => Ok(Algorithm::QNoCache),
            other => Err(SimError::config(
                "algorithm",
                format!("unknown algorithm {other:?}; expected lsm, q-cache, or q-nocache"),
            )),
        }
    }
}

/// Per-user proposal probabilities implied by an epsilon-greedy policy:
/// the uniform branch proposes each candidate in half of all actions, the
/// greedy branch adds its own users outright.
fn policy_marginals(space: &ActionSpace, greedy: u64, epsilon: f64, n_users: usize) -> Vec<f64> {
    let mut m = vec![0.0; n_users];
    if space.candidates.is_empty() {
        return m;
    }
    for &u in &space.candidates {
        m[u] = epsilon / 2.0;
    }
    for u in space.decode(greedy) {
        m[u] += 1.0 - epsilon;
    }
    m
}

/// Reservoir learner: the observation drives a persistent liquid, and a
/// per-action readout row over the liquid state and the raw observation is
/// nudged toward each observed reward.
pub struct LsmAgent {
    reservoir: Reservoir,
    readout: Readout,
    space: ActionSpace,
    learning_rate: f64,
    epsilon: f64,
    /// Optimistic initial value per action. Without it the greedy arm
    /// locks in on the first action that ever pays out; decaying it much
    /// faster than the readout adapts keeps the initial sweep short so
    /// the policy can settle.
    optimism: f64,
    visits: Vec<u64>,
    rng: ChaCha8Rng,
    last_features: Vec<f64>,
    last_action: u64,
    last_greedy: u64,
}

impl LsmAgent {
    pub fn new(
        space: ActionSpace,
        n_inputs: usize,
        cfg: &SimConfig,
        build_seed: u64,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let reservoir = Reservoir::build(n_inputs, &cfg.rl.liquid, build_seed)?;
        let n_features = 2 * reservoir.n_neurons() + n_inputs;
        let n_actions = space.n_actions() as usize;
        Ok(LsmAgent {
            reservoir,
            readout: Readout::zeros(n_actions, n_features),
            optimism: space.candidates.len() as f64,
            visits: vec![0; n_actions],
            space,
            learning_rate: cfg.rl.learning_rate,
            epsilon: cfg.rl.epsilon,
            rng,
            last_features: vec![0.0; n_features],
            last_action: 0,
            last_greedy: 0,
        })
    }

    /// Liquid observables and raw observation, normalized to a unit
    /// vector so one update moves the row estimate by `learning_rate` of
    /// the error.
    fn features(&mut self, observation: &[f64]) -> Result<Vec<f64>> {
        self.reservoir.present(observation)?;
        let mut f = self.reservoir.observables();
        f.extend_from_slice(observation);
        let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut f {
                *v /= norm;
            }
        }
        Ok(f)
    }

    pub fn act(&mut self, observation: &[f64]) -> Result<u64> {
        let features = self.features(observation)?;
        let n_actions = self.space.n_actions();
        let mut greedy = 0u64;
        let mut best = f64::NEG_INFINITY;
        for a in 0..n_actions {
            let q = self.readout.predict_row(a as usize, &features)?
                + self.optimism * OPTIMISM_DECAY.powi(self.visits[a as usize] as i32);
            if q > best {
                best = q;
                greedy = a;
            }
        }
        let action = if self.rng.gen::<f64>() < self.epsilon {
            self.rng.gen_range(0..n_actions)
        } else {
            greedy
        };
        self.last_features = features;
        self.last_action = action;
        self.last_greedy = greedy;
        Ok(action)
    }

    pub fn learn(&mut self, reward: f64) -> Result<()> {
        let estimate = self
            .readout
            .predict_row(self.last_action as usize, &self.last_features)?;
        self.visits[self.last_action as usize] += 1;
        self.readout.lms_update(
            self.last_action as usize,
            reward,
            estimate,
            &self.last_features,
            self.learning_rate,
        )
    }

    pub fn marginals(&self, n_users: usize) -> Vec<f64> {
        policy_marginals(&self.space, self.last_greedy, self.epsilon, n_users)
    }
}

/// Tabular state: arrival bits over the agent's own candidates plus the
/// mean opponent coverage of those candidates, quantized to four levels.
/// A table over the raw observation would almost never revisit a state,
/// so the baseline discretizes to what its proposals can react to.
fn observation_key(observation: &[f64], n_users: usize, candidates: &[usize]) -> u64 {
    let arrivals_at = observation.len() - n_users;
    let mut bits = 0u64;
    let mut coverage = 0.0;
    for (i, &u) in candidates.iter().enumerate() {
        if observation[arrivals_at + u] > 0.5 {
            bits |= 1 << i;
        }
        let mut offset = 0;
        while offset < arrivals_at {
            coverage += observation[offset + u];
            offset += n_users;
        }
    }
    let level = if candidates.is_empty() {
        0
    } else {
        ((coverage / candidates.len() as f64) * 4.0).clamp(0.0, 3.0) as u64
    };
    // FNV-1a over the two fields.
    let mut h: u64 = 0xcbf29ce484222325;
    for byte in bits.to_le_bytes().into_iter().chain([level as u8]) {
        h ^= byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Tabular Q learner over hashed observations, with one-step bootstrapped
/// updates completed when the next observation arrives.
pub struct QAgent {
    space: ActionSpace,
    n_users: usize,
    q: HashMap<u64, Vec<f64>>,
    insertion: VecDeque<u64>,
    table_cap: usize,
    alpha: f64,
    gamma: f64,
    epsilon: f64,
    rng: ChaCha8Rng,
    pending: Option<(u64, u64, f64)>,
    current: Option<(u64, u64)>,
    last_greedy: u64,
}

impl QAgent {
    pub fn new(space: ActionSpace, n_users: usize, cfg: &SimConfig, rng: ChaCha8Rng) -> Self {
        QAgent {
            space,
            n_users,
            q: HashMap::new(),
            insertion: VecDeque::new(),
            table_cap: cfg.rl.q_table_cap,
            alpha: cfg.rl.q_learning_rate,
            gamma: cfg.rl.q_discount,
            epsilon: cfg.rl.epsilon,
            rng,
            pending: None,
            current: None,
            last_greedy: 0,
        }
    }

    fn row(&mut self, key: u64) -> &mut Vec<f64> {
        let n_actions = self.space.n_actions() as usize;
        if !self.q.contains_key(&key) {
            if self.q.len() >= self.table_cap {
                if let Some(oldest) = self.insertion.pop_front() {
                    self.q.remove(&oldest);
                }
            }
            // Optimistic initialization, mirroring the reservoir agent.
            let init = self.space.candidates.len() as f64;
            self.q.insert(key, vec![init; n_actions]);
            self.insertion.push_back(key);
        }
        self.q.get_mut(&key).unwrap()
    }

    fn greedy_of(row: &[f64]) -> (u64, f64) {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0u64;
        for (a, &v) in row.iter().enumerate() {
            if v > best {
                best = v;
                arg = a as u64;
            }
        }
        (arg, best)
    }

    pub fn act(&mut self, observation: &[f64]) -> u64 {
        let key = observation_key(observation, self.n_users, &self.space.candidates);
        if let Some((s, a, r)) = self.pending.take() {
            let boot = Self::greedy_of(self.row(key)).1;
            let (alpha, gamma) = (self.alpha, self.gamma);
            let row = self.row(s);
            let old = row[a as usize];
            row[a as usize] = old + alpha * (r + gamma * boot - old);
        }
        let (greedy, _) = Self::greedy_of(self.row(key));
        let n_actions = self.space.n_actions();
        let action = if self.rng.gen::<f64>() < self.epsilon {
            self.rng.gen_range(0..n_actions)
        } else {
            greedy
        };
        self.last_greedy = greedy;
        self.current = Some((key, action));
        action
    }

    pub fn learn(&mut self, reward: f64) {
        if let Some((s, a)) = self.current.take() {
            self.pending = Some((s, a, reward));
        }
    }

    pub fn marginals(&self, n_users: usize) -> Vec<f64> {
        policy_marginals(&self.space, self.last_greedy, self.epsilon, n_users)
    }

    pub fn states_seen(&self) -> usize {
        self.q.len()
    }
}

enum AgentImpl {
    Lsm(Box<LsmAgent>),
    Q(QAgent),
}

impl AgentImpl {
    fn act(&mut self, observation: &[f64]) -> Result<u64> {
        match self {
            AgentImpl::Lsm(a) => a.act(observation),
            AgentImpl::Q(a) => Ok(a.act(observation)),
        }
    }

    fn learn(&mut self, reward: f64) -> Result<()> {
        match self {
            AgentImpl::Lsm(a) => a.learn(reward),
            AgentImpl::Q(a) => {
                a.learn(reward);
                Ok(())
            }
        }
    }

    fn marginals(&self, n_users: usize) -> Vec<f64> {
        match self {
            AgentImpl::Lsm(a) => a.marginals(n_users),
            AgentImpl::Q(a) => a.marginals(n_users),
        }
    }

    fn space(&self) -> &ActionSpace {
        match self {
            AgentImpl::Lsm(a) => &a.space,
            AgentImpl::Q(a) => &a.space,
        }
    }
}

/// Everything an episode shares regardless of learner: placement, rate
/// tables, traffic model, prediction tables, and per-UAV action spaces.
pub struct EpisodeWorld {
    pub geometry: Geometry,
    pub rates: NetworkRates,
    pub model: TrafficModel,
    pub predictions: EpisodePredictions,
    pub spaces: Vec<ActionSpace>,
}

/// Builds the shared episode state for one seed. `learned_predictions`
/// selects trained forecasts (used by the caching learners) over the true
/// profiles.
pub fn build_world(
    cfg: &SimConfig,
    seed: u64,
    learned_predictions: bool,
    parallel: bool,
) -> Result<EpisodeWorld> {
    cfg.validate()?;
    let geometry = generate_topology(&cfg.topology, seed)?;
    let rates = compute_network_rates(&geometry, cfg)?;
    let model = TrafficModel::synthetic(&cfg.traffic, cfg.topology.n_users, seed)?;
    let predictions = if learned_predictions {
        train_episode_predictions(&model, cfg, seed, parallel)?
    } else {
        EpisodePredictions::from_truth(&model, cfg.rl.epoch_iterations)
    };
    let params = cfg.rl.action_params();
    let spaces = (0..cfg.topology.n_uavs)
        .map(|k| {
            build_action_space(
                &rates.licensed_full[k],
                &rates.unlicensed_full[k],
                rates.fronthaul_full[k],
                cfg.traffic.content_bits,
                &params,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EpisodeWorld {
        geometry,
        rates,
        model,
        predictions,
        spaces,
    })
}

/// One slot of an episode trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub hour: usize,
    pub requests: usize,
    pub stable_total: usize,
    pub cache_hits: usize,
    pub fronthaul_users: usize,
    pub delivered_bits: f64,
    pub stable_per_uav: Vec<usize>,
}

/// Outcome of one learning episode.
#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
    /// First slot from which the trailing window mean of the stable-user
    /// count stays inside the tolerance band around the final level.
    pub converged_iteration: Option<usize>,
    /// Mean stable-user count over the final tenth of the episode.
    pub converged_value: f64,
    /// Cumulative delivered bits per user.
    pub delivered_user_bits: Vec<f64>,
    /// Slots each user was proposed and assigned.
    pub assigned_slots: Vec<usize>,
    pub theta: f64,
    pub action_space_sizes: Vec<u64>,
}

impl EpisodeResult {
    /// Mean stable-user count over the whole trace.
    pub fn mean_stable(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records
            .iter()
            .map(|r| r.stable_total as f64)
            .sum::<f64>()
            / self.records.len() as f64
    }

    /// Fraction of requests answered from cache.
    pub fn cache_hit_fraction(&self) -> f64 {
        let hits: usize = self.records.iter().map(|r| r.cache_hits).sum();
        let requests: usize = self.records.iter().map(|r| r.requests).sum();
        if requests == 0 {
            0.0
        } else {
            hits as f64 / requests as f64
        }
    }
}

/// First slot from which the trailing window mean stays inside a
/// tolerance band around the final level for the rest of the trace.
/// Noisy traces that merely brush the band keep their convergence point
/// pushed out; the earliest possible answer is `window`.
pub fn convergence_iteration(trace: &[f64], window: usize, tol: f64) -> Option<usize> {
    if window < 1 || trace.len() < 2 * window {
        return None;
    }
    let mut prefix = vec![0.0; trace.len() + 1];
    for (i, &v) in trace.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    let mean = |a: usize, b: usize| (prefix[b] - prefix[a]) / (b - a) as f64;
    let final_level = mean(trace.len() - window, trace.len());
    let band = tol * final_level.abs().max(1.0);
    let mut converged_at = None;
    for t in window..=trace.len() {
        if (mean(t - window, t) - final_level).abs() <= band {
            if converged_at.is_none() {
                converged_at = Some(t);
            }
        } else {
            converged_at = None;
        }
    }
    converged_at
}

/// Runs one learning episode in a prepared world.
pub fn run_episode(
    world: &EpisodeWorld,
    cfg: &SimConfig,
    seed: u64,
    algorithm: Algorithm,
) -> Result<EpisodeResult> {
    let n_uavs = cfg.topology.n_uavs;
    let n_users = cfg.topology.n_users;
    let cache_size = match algorithm {
        Algorithm::QNoCache => 0,
        _ => cfg.cache.cache_size,
    };
    let n_inputs = n_uavs * n_users;

    let mut agents: Vec<AgentImpl> = Vec::with_capacity(n_uavs);
    for k in 0..n_uavs {
        let rng = stream(seed, STREAM_AGENT, k as u64);
        let space = world.spaces[k].clone();
        agents.push(match algorithm {
            Algorithm::Lsm => AgentImpl::Lsm(Box::new(LsmAgent::new(
                space,
                n_inputs,
                cfg,
                seed ^ ((k as u64 + 1) << 40),
                rng,
            )?)),
            Algorithm::QCache | Algorithm::QNoCache => {
                AgentImpl::Q(QAgent::new(space, n_users, cfg, rng))
            }
        });
    }

    let mut marginals: Vec<Vec<f64>> = agents.iter().map(|a| a.marginals(n_users)).collect();
    let mut records = Vec::with_capacity(cfg.rl.iterations);
    let mut delivered_user_bits = vec![0.0; n_users];
    let mut assigned_slots = vec![0usize; n_users];
    let mut pred_rows: Vec<Vec<f64>> = Vec::new();
    let mut pred_hour = usize::MAX;

    for t in 0..cfg.rl.iterations {
        let hour = (t / cfg.rl.epoch_iterations) % HOURS_PER_DAY;
        if hour != pred_hour {
            pred_rows = (0..n_users)
                .map(|u| world.predictions.hourly[u][hour].clone())
                .collect();
            pred_hour = hour;
        }
        let requested = generate_requests(&world.model, hour, seed, EPISODE_SLOT_BASE + t as u64);
        let demands: Vec<f64> = requested
            .iter()
            .map(|r| {
                if r.is_some() {
                    cfg.traffic.content_bits
                } else {
                    0.0
                }
            })
            .collect();

        // Observation for agent k: opponents' proposal marginals in id
        // order, then the arrival indicators.
        let mut proposals: Vec<Vec<usize>> = Vec::with_capacity(n_uavs);
        let mut actions: Vec<u64> = Vec::with_capacity(n_uavs);
        for k in 0..n_uavs {
            let mut obs = Vec::with_capacity(n_inputs);
            for (j, m) in marginals.iter().enumerate() {
                if j != k {
                    obs.extend_from_slice(m);
                }
            }
            obs.extend(demands.iter().map(|&d| if d > 0.0 { 1.0 } else { 0.0 }));
            let action = agents[k].act(&obs)?;
            proposals.push(agents[k].space().decode(action));
            actions.push(action);
        }

        let ctx = SlotContext {
            licensed_full: &world.rates.licensed_full,
            unlicensed_full: &world.rates.unlicensed_full,
            fronthaul_full: &world.rates.fronthaul_full,
            preference: &world.rates.preference,
            demands: &demands,
            requested: &requested,
            predicted: &pred_rows,
            request_weight: &world.predictions.request_weight,
            cache_size,
            n_contents: cfg.traffic.n_contents,
            selection_cap: cfg.run.selection_cap,
        };
        let outcome = evaluate_joint_action(&proposals, &ctx)?;

        for k in 0..n_uavs {
            agents[k].learn(outcome.stable_per_uav[k] as f64)?;
            marginals[k] = agents[k].marginals(n_users);
        }
        for (u, d) in outcome.delivered_bits.iter().enumerate() {
            delivered_user_bits[u] += d;
            if outcome.assigned[u].is_some() {
                assigned_slots[u] += 1;
            }
        }
        records.push(IterationRecord {
            iteration: t,
            hour,
            requests: requested.iter().filter(|r| r.is_some()).count(),
            stable_total: outcome.stable_total,
            cache_hits: outcome.cache_hits,
            fronthaul_users: outcome.fronthaul_users,
            delivered_bits: outcome.delivered_bits.iter().sum(),
            stable_per_uav: outcome.stable_per_uav,
        });
    }

    let trace: Vec<f64> = records.iter().map(|r| r.stable_total as f64).collect();
    let converged_iteration =
        convergence_iteration(&trace, cfg.rl.convergence_window, cfg.rl.convergence_tol);
    let tail = (trace.len() / 10).max(1);
    let converged_value = trace[trace.len() - tail..].iter().sum::<f64>() / tail as f64;

    Ok(EpisodeResult {
        algorithm,
        seed,
        records,
        converged_iteration,
        converged_value,
        delivered_user_bits,
        assigned_slots,
        theta: world.rates.theta,
        action_space_sizes: world.spaces.iter().map(|s| s.n_actions()).collect(),
    })
}

/// Builds a world for the seed and runs one episode in it.
pub fn run_episode_seeded(
    cfg: &SimConfig,
    seed: u64,
    algorithm: Algorithm,
    parallel: bool,
) -> Result<EpisodeResult> {
    // The no-cache ablation never touches the forecasts, so skip training.
    let learned = algorithm != Algorithm::QNoCache;
    let world = build_world(cfg, seed, learned, parallel)?;
    run_episode(&world, cfg, seed, algorithm)
}

/// All three learners on the same world.
#[derive(Debug, Clone)]
pub struct ComparisonOutcome {
    pub lsm: EpisodeResult,
    pub q_cache: EpisodeResult,
    pub q_nocache: EpisodeResult,
}

pub fn run_comparison(cfg: &SimConfig, seed: u64, parallel: bool) -> Result<ComparisonOutcome> {
    let world = build_world(cfg, seed, true, parallel)?;
    Ok(ComparisonOutcome {
        lsm: run_episode(&world, cfg, seed, Algorithm::Lsm)?,
        q_cache: run_episode(&world, cfg, seed, Algorithm::QCache)?,
        q_nocache: run_episode(&world, cfg, seed, Algorithm::QNoCache)?,
    })
}
