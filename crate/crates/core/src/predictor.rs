//! Per-user content-request prediction.
//!
//! Each user gets its own reservoir plus linear readout. The input is a
//! one-hot encoding of the user's categorical context concatenated with a
//! one-hot hour of day; the training targets are smoothed empirical
//! request histograms per (day, hour) epoch. Each day is presented as a
//! chronological sequence from a midnight reset, so the state at hour h
//! integrates the morning that led up to it and repeats exactly across
//! days. That gives the readout correlated features over adjacent hours
//! to pool noisy histograms with, while keeping every day's trajectory
//! reproducible.
//!
//! Predicted distributions are the raw readout clipped at zero and
//! renormalized (uniform if everything clips). Hourly tables replay one
//! canonical day under the same midnight-reset protocol. The echo-state
//! network trained identically is the comparison baseline.

use crate::config::SimConfig;
use crate::error::{Result, SimError};
use crate::exec::map_indexed;
use crate::reservoir::{train_ridge, EchoState, Readout, Reservoir};
use crate::traffic::{generate_requests, TrafficModel, CONTEXT_CARDINALITIES, HOURS_PER_DAY};
use nalgebra::DMatrix;

/// One-hot encoder over categorical context features plus hour of day.
#[derive(Debug, Clone)]
pub struct Encoder {
    cardinalities: Vec<usize>,
    hours: usize,
}

impl Encoder {
    pub fn new(cardinalities: &[usize], hours: usize) -> Self {
        Encoder {
            cardinalities: cardinalities.to_vec(),
            hours,
        }
    }

    pub fn standard() -> Self {
        Self::new(&CONTEXT_CARDINALITIES, HOURS_PER_DAY)
    }

    pub fn input_len(&self) -> usize {
        self.cardinalities.iter().sum::<usize>() + self.hours
    }

    pub fn encode(&self, context: &[usize], hour: usize) -> Result<Vec<f64>> {
        if context.len() != self.cardinalities.len() {
            return Err(SimError::DimensionMismatch {
                context: "encoder context",
                expected: self.cardinalities.len(),
                got: context.len(),
            });
        }
        let mut out = vec![0.0; self.input_len()];
        let mut offset = 0;
        for (f, (&value, &card)) in context.iter().zip(self.cardinalities.iter()).enumerate() {
            if value >= card {
                return Err(SimError::DimensionMismatch {
                    context: "encoder feature value",
                    expected: card,
                    got: f,
                });
            }
            out[offset + value] = 1.0;
            offset += card;
        }
        if hour >= self.hours {
            return Err(SimError::DimensionMismatch {
                context: "encoder hour",
                expected: self.hours,
                got: hour,
            });
        }
        out[offset + hour] = 1.0;
        Ok(out)
    }
}

/// Reservoir backend behind a common present-and-read interface.
pub enum Backend {
    /// Spiking liquid plus the scale applied to its observables before
    /// the readout. Smaller scales shrink the feature norm, which raises
    /// the effective ridge regularization of the readout at a fixed
    /// regularization constant.
    Liquid(Reservoir, f64),
    Echo(EchoState),
}

impl Backend {
    /// Presents one input to the current state and reads the features.
    /// The liquid exposes normalized membrane potentials plus
    /// per-presentation spike fractions (scaled), the echo network its
    /// tanh activations.
    fn features(&mut self, input: &[f64]) -> Result<Vec<f64>> {
        match self {
            Backend::Liquid(r, scale) => {
                r.present(input)?;
                let mut f = r.observables();
                for v in &mut f {
                    *v *= *scale;
                }
                Ok(f)
            }
            Backend::Echo(e) => {
                e.present(input)?;
                Ok(e.state().to_vec())
            }
        }
    }

    fn reset(&mut self) {
        match self {
            Backend::Liquid(r, _) => r.reset(),
            Backend::Echo(e) => e.reset(),
        }
    }

    fn n_state(&self) -> usize {
        match self {
            Backend::Liquid(r, _) => 2 * r.n_neurons(),
            Backend::Echo(e) => e.n_neurons(),
        }
    }
}

/// A trained per-user predictor.
pub struct Predictor {
    backend: Backend,
    readout: Readout,
    n_contents: usize,
}

impl Predictor {
    /// Advances the state with one encoded input and reads a distribution
    /// over contents: readout output clipped at zero and renormalized;
    /// uniform when everything clips.
    pub fn predict(&mut self, encoded: &[f64]) -> Result<Vec<f64>> {
        let features = self.backend.features(encoded)?;
        let mut raw = self.readout.predict(&features)?;
        let mut sum = 0.0;
        for v in &mut raw {
            if *v < 0.0 {
                *v = 0.0;
            }
            sum += *v;
        }
        if sum <= 0.0 {
            return Ok(vec![1.0 / self.n_contents as f64; self.n_contents]);
        }
        for v in &mut raw {
            *v /= sum;
        }
        Ok(raw)
    }

    /// Predicted distribution for every hour of a canonical day, replayed
    /// from a midnight reset exactly as in training.
    pub fn hourly_table(&mut self, encoder: &Encoder, context: &[usize]) -> Result<Vec<Vec<f64>>> {
        self.backend.reset();
        (0..HOURS_PER_DAY)
            .map(|h| self.predict(&encoder.encode(context, h)?))
            .collect()
    }
}

/// Trains one predictor on chronological (hour-encoded input, histogram
/// target) pairs, resetting the state every `reset_every` inputs (0 to
/// never reset).
pub fn train_predictor(
    mut backend: Backend,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    ridge_delta: f64,
    reset_every: usize,
) -> Result<Predictor> {
    if inputs.is_empty() || inputs.len() != targets.len() {
        return Err(SimError::DimensionMismatch {
            context: "predictor training pairs",
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    let n_contents = targets[0].len();
    let n_state = backend.n_state();
    let mut states = DMatrix::zeros(n_state, inputs.len());
    backend.reset();
    for (t, input) in inputs.iter().enumerate() {
        if reset_every > 0 && t > 0 && t % reset_every == 0 {
            backend.reset();
        }
        let f = backend.features(input)?;
        for (j, &v) in f.iter().enumerate() {
            states[(j, t)] = v;
        }
    }
    let mut target_m = DMatrix::zeros(n_contents, targets.len());
    for (t, row) in targets.iter().enumerate() {
        if row.len() != n_contents {
            return Err(SimError::DimensionMismatch {
                context: "predictor target row",
                expected: n_contents,
                got: row.len(),
            });
        }
        for (n, &v) in row.iter().enumerate() {
            target_m[(n, t)] = v;
        }
    }
    let readout = train_ridge(&states, &target_m, ridge_delta)?;
    Ok(Predictor {
        backend,
        readout,
        n_contents,
    })
}

/// Smoothed per-epoch request histograms for every user.
///
/// Epoch `e = day * 24 + hour` draws `slots_per_hour` request slots; the
/// histogram gets `smoothing / n_contents` pseudo-mass per content.
pub fn empirical_histories(
    model: &TrafficModel,
    days: usize,
    slots_per_hour: usize,
    smoothing: f64,
    seed: u64,
) -> Vec<Vec<Vec<f64>>> {
    let n_users = model.users.len();
    let n = model.n_contents;
    let epochs = days * HOURS_PER_DAY;
    let mut counts = vec![vec![vec![0.0f64; n]; epochs]; n_users];
    for epoch in 0..epochs {
        let hour = epoch % HOURS_PER_DAY;
        for s in 0..slots_per_hour {
            let t = (epoch * slots_per_hour + s) as u64;
            let requests = generate_requests(model, hour, seed, t);
            for (i, req) in requests.iter().enumerate() {
                if let Some(c) = req {
                    counts[i][epoch][*c] += 1.0;
                }
            }
        }
    }
    for user in &mut counts {
        for hist in user.iter_mut() {
            let total: f64 = hist.iter().sum();
            let denom = total + smoothing;
            for v in hist.iter_mut() {
                *v = (*v + smoothing / n as f64) / denom;
            }
        }
    }
    counts
}

/// Backend selector for training runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendKind {
    Liquid,
    Echo,
}

fn build_backend(
    kind: BackendKind,
    cfg: &SimConfig,
    n_inputs: usize,
    seed: u64,
) -> Result<Backend> {
    Ok(match kind {
        BackendKind::Liquid => Backend::Liquid(
            Reservoir::build(n_inputs, &cfg.predictor.liquid, seed)?,
            cfg.predictor.liquid_feature_scale,
        ),
        BackendKind::Echo => Backend::Echo(EchoState::build(n_inputs, &cfg.predictor.esn, seed)?),
    })
}

/// Trains a predictor for one user from its epoch histograms.
pub fn train_user_predictor(
    kind: BackendKind,
    cfg: &SimConfig,
    model: &TrafficModel,
    user: usize,
    history: &[Vec<f64>],
    seed: u64,
) -> Result<Predictor> {
    let encoder = Encoder::standard();
    let context = &model.users[user].context;
    let inputs: Vec<Vec<f64>> = (0..history.len())
        .map(|epoch| encoder.encode(context, epoch % HOURS_PER_DAY))
        .collect::<Result<_>>()?;
    let backend = build_backend(kind, cfg, encoder.input_len(), seed)?;
    train_predictor(
        backend,
        &inputs,
        history,
        cfg.predictor.ridge_delta,
        HOURS_PER_DAY,
    )
}

/// Reservoir-construction seed for one user's predictor.
fn user_build_seed(seed: u64, user: usize) -> u64 {
    seed ^ ((user as u64 + 1) << 20)
}

/// Per-user hourly prediction tables driving episode cache planning.
#[derive(Debug, Clone)]
pub struct EpisodePredictions {
    /// `[user][hour][content]`.
    pub hourly: Vec<Vec<Vec<f64>>>,
    /// Cache scoring weight: expected requests per epoch.
    pub request_weight: Vec<f64>,
}

impl EpisodePredictions {
    /// Ground-truth tables (no learning), for ablations.
    pub fn from_truth(model: &TrafficModel, epoch_slots: usize) -> Self {
        EpisodePredictions {
            hourly: model.users.iter().map(|u| u.hourly.clone()).collect(),
            request_weight: model
                .users
                .iter()
                .map(|u| u.expected_requests(epoch_slots))
                .collect(),
        }
    }
}

/// Trains liquid predictors for every user and tabulates their hourly
/// forecasts.
pub fn train_episode_predictions(
    model: &TrafficModel,
    cfg: &SimConfig,
    seed: u64,
    parallel: bool,
) -> Result<EpisodePredictions> {
    let histories = empirical_histories(
        model,
        cfg.rl.prediction_days,
        cfg.predictor.slots_per_hour,
        cfg.predictor.smoothing,
        seed,
    );
    let encoder = Encoder::standard();
    let tables = map_indexed(
        model.users.len(),
        parallel,
        |user| -> Result<Vec<Vec<f64>>> {
            let mut p = train_user_predictor(
                BackendKind::Liquid,
                cfg,
                model,
                user,
                &histories[user],
                user_build_seed(seed, user),
            )?;
            p.hourly_table(&encoder, &model.users[user].context)
        },
    );
    let mut hourly = Vec::with_capacity(model.users.len());
    for t in tables {
        hourly.push(t?);
    }
    Ok(EpisodePredictions {
        hourly,
        request_weight: model
            .users
            .iter()
            .map(|u| u.expected_requests(cfg.rl.epoch_iterations))
            .collect(),
    })
}

/// One benchmark cell: prediction vs truth for (user, content, hour).
#[derive(Debug, Clone, serde::Serialize)]
pub struct BenchmarkCell {
    pub user: usize,
    pub hour: usize,
    pub content: usize,
    pub p_true: f64,
    pub p_liquid: f64,
    pub p_echo: f64,
}

/// Outcome of one prediction benchmark run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BenchmarkOutcome {
    pub liquid_mse: f64,
    pub echo_mse: f64,
    /// Fraction of cells with liquid error below 0.10.
    pub frac_within_tenth: f64,
    /// Users whose true top-C set was recovered exactly by the liquid.
    pub top_set_recovered: usize,
    pub n_users: usize,
    #[serde(skip)]
    pub cells: Vec<BenchmarkCell>,
}

fn top_set(scores: &[f64], c: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let mut top: Vec<usize> = idx[..c.min(scores.len())].to_vec();
    top.sort_unstable();
    top
}

/// Trains both backends for every user on the training days and scores
/// them against the true hourly profiles.
pub fn run_prediction_benchmark(
    cfg: &SimConfig,
    seed: u64,
    parallel: bool,
) -> Result<BenchmarkOutcome> {
    cfg.validate()?;
    let model = TrafficModel::synthetic(&cfg.traffic, cfg.topology.n_users, seed)?;
    let histories = empirical_histories(
        &model,
        cfg.predictor.training_days,
        cfg.predictor.slots_per_hour,
        cfg.predictor.smoothing,
        seed,
    );
    let encoder = Encoder::standard();
    let n = model.n_contents;
    let c = cfg.cache.cache_size;

    struct UserResult {
        cells: Vec<BenchmarkCell>,
        liquid_se: f64,
        echo_se: f64,
        within: usize,
        top_ok: bool,
    }
    let per_user = map_indexed(model.users.len(), parallel, |user| -> Result<UserResult> {
        let user_seed = user_build_seed(seed, user);
        let mut liquid = train_user_predictor(
            BackendKind::Liquid,
            cfg,
            &model,
            user,
            &histories[user],
            user_seed,
        )?;
        let mut echo = train_user_predictor(
            BackendKind::Echo,
            cfg,
            &model,
            user,
            &histories[user],
            user_seed,
        )?;
        let table_l = liquid.hourly_table(&encoder, &model.users[user].context)?;
        let table_e = echo.hourly_table(&encoder, &model.users[user].context)?;
        let truth = &model.users[user].hourly;
        let mut cells = Vec::with_capacity(HOURS_PER_DAY * n);
        let (mut se_l, mut se_e) = (0.0, 0.0);
        let mut within = 0usize;
        let mut mean_true = vec![0.0; n];
        let mut mean_pred = vec![0.0; n];
        for h in 0..HOURS_PER_DAY {
            for content in 0..n {
                let p_true = truth[h][content];
                let p_l = table_l[h][content];
                let p_e = table_e[h][content];
                se_l += (p_l - p_true) * (p_l - p_true);
                se_e += (p_e - p_true) * (p_e - p_true);
                if (p_l - p_true).abs() < 0.10 {
                    within += 1;
                }
                mean_true[content] += p_true;
                mean_pred[content] += p_l;
                cells.push(BenchmarkCell {
                    user,
                    hour: h,
                    content,
                    p_true,
                    p_liquid: p_l,
                    p_echo: p_e,
                });
            }
        }
        let top_ok = top_set(&mean_true, c) == top_set(&mean_pred, c);
        Ok(UserResult {
            cells,
            liquid_se: se_l,
            echo_se: se_e,
            within,
            top_ok,
        })
    });

    let mut outcome = BenchmarkOutcome {
        liquid_mse: 0.0,
        echo_mse: 0.0,
        frac_within_tenth: 0.0,
        top_set_recovered: 0,
        n_users: model.users.len(),
        cells: Vec::new(),
    };
    let mut total_cells = 0usize;
    let mut within = 0usize;
    for r in per_user {
        let r = r?;
        outcome.liquid_mse += r.liquid_se;
        outcome.echo_mse += r.echo_se;
        within += r.within;
        total_cells += r.cells.len();
        if r.top_ok {
            outcome.top_set_recovered += 1;
        }
        outcome.cells.extend(r.cells);
    }
    outcome.liquid_mse /= total_cells as f64;
    outcome.echo_mse /= total_cells as f64;
    outcome.frac_within_tenth = within as f64 / total_cells as f64;
    Ok(outcome)
}
