//! Spiking liquid, echo-state baseline, and linear readouts.
//!
//! The liquid is a 3D grid of leaky integrate-and-fire neurons. Membrane
//! update per 1 ms step:
//!
//! ```text
//! v += (v_rest + Z * I - v) / (Z * rho)
//! ```
//!
//! where `I` sums external input drive and recurrent spike current, `Z` is
//! the membrane resistance and `rho` the time constant. Crossing the
//! threshold emits a spike, resets `v` to rest, and holds the neuron
//! refractory for a fixed number of steps. Spikes reach their targets one
//! step later (synchronous update).
//!
//! Wiring is random but distance-local: a synapse from neuron `a` to `b`
//! exists with probability `varsigma(kind_a, kind_b) * exp(-(d/lambda)^2)`
//! over grid distance `d`. Excitatory sources drive positive current,
//! inhibitory negative. Input channels attach to random neurons with a
//! fixed connection probability.
//!
//! Readouts are linear maps over reservoir state trained in closed form
//! (ridge regression) or online (per-row LMS). The echo-state reservoir is
//! the conventional leaky-tanh alternative used as a comparison baseline.

use crate::channel::db_to_linear;
use crate::error::{Result, SimError};
use crate::rng::{self, STREAM_RESERVOIR};
use nalgebra::DMatrix;
use rand::Rng;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Synapse existence probability at grid distance `d`.
pub fn connection_probability(d: f64, varsigma: f64, lambda: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(SimError::InvalidInput {
            name: "lambda",
            value: lambda,
            reason: "locality constant must be positive",
        });
    }
    if !(0.0..=1.0).contains(&varsigma) {
        return Err(SimError::InvalidInput {
            name: "varsigma",
            value: varsigma,
            reason: "base probability must lie in [0, 1]",
        });
    }
    Ok(varsigma * f64::exp(-(d / lambda) * (d / lambda)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeuronKind {
    Excitatory,
    Inhibitory,
}

/// Liquid construction and dynamics parameters.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiquidParams {
    /// Grid extents; the neuron count is their product.
    pub dims: [usize; 3],
    /// Resting (and reset) potential, mV.
    pub resting_potential_mv: f64,
    /// Absolute firing threshold, mV.
    pub threshold_mv: f64,
    /// Membrane resistance, dB.
    pub resistance_db: f64,
    /// Membrane time constant, ms.
    pub membrane_tau_ms: f64,
    /// Refractory period, steps (1 step = 1 ms).
    pub refractory_steps: u32,
    /// Probability an input channel attaches to a given neuron.
    pub input_connection_prob: f64,
    /// Base synapse probabilities by (source, target) kind.
    pub conn_ee: f64,
    pub conn_ei: f64,
    pub conn_ie: f64,
    pub conn_ii: f64,
    /// Locality constant of the distance kernel.
    pub lambda: f64,
    pub excitatory_fraction: f64,
    /// Synapse magnitude range before normalization.
    pub weight_low: f64,
    pub weight_high: f64,
    /// Recurrent weights are rescaled to this spectral radius estimate;
    /// 0 disables the normalization.
    pub spectral_radius: f64,
    /// Scale on input synapse weights.
    pub input_gain: f64,
    /// Liquid steps per presented input.
    pub steps_per_input: usize,
}

impl Default for LiquidParams {
    fn default() -> Self {
        LiquidParams {
            dims: [5, 5, 20],
            resting_potential_mv: 13.5,
            threshold_mv: 15.0,
            resistance_db: 20.0,
            membrane_tau_ms: 30.0,
            refractory_steps: 2,
            input_connection_prob: 0.3,
            conn_ee: 0.3,
            conn_ei: 0.4,
            conn_ie: 0.2,
            conn_ii: 0.1,
            lambda: 2.0,
            excitatory_fraction: 0.8,
            weight_low: 0.1,
            weight_high: 1.0,
            spectral_radius: 0.9,
            input_gain: 4.0,
            steps_per_input: 20,
        }
    }
}

impl LiquidParams {
    pub fn n_neurons(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d == 0) {
            return Err(SimError::config(
                "liquid.dims",
                "all grid extents must be positive",
            ));
        }
        if self.threshold_mv <= self.resting_potential_mv {
            return Err(SimError::config(
                "liquid.threshold_mv",
                "threshold must exceed the resting potential",
            ));
        }
        if !(self.membrane_tau_ms > 0.0) {
            return Err(SimError::config(
                "liquid.membrane_tau_ms",
                "must be positive",
            ));
        }
        for (field, v) in [
            ("liquid.input_connection_prob", self.input_connection_prob),
            ("liquid.conn_ee", self.conn_ee),
            ("liquid.conn_ei", self.conn_ei),
            ("liquid.conn_ie", self.conn_ie),
            ("liquid.conn_ii", self.conn_ii),
            ("liquid.excitatory_fraction", self.excitatory_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::config(
                    field,
                    format!("must lie in [0, 1], got {v}"),
                ));
            }
        }
        if !(self.lambda > 0.0) {
            return Err(SimError::config("liquid.lambda", "must be positive"));
        }
        if self.weight_low < 0.0 || self.weight_high < self.weight_low {
            return Err(SimError::config(
                "liquid.weight_low/high",
                "need 0 <= weight_low <= weight_high",
            ));
        }
        if self.steps_per_input == 0 {
            return Err(SimError::config(
                "liquid.steps_per_input",
                "must be positive",
            ));
        }
        Ok(())
    }
}

/// Euclidean distance between two grid cells.
pub fn grid_distance(dims: [usize; 3], a: usize, b: usize) -> f64 {
    let coord = |n: usize| {
        let x = n % dims[0];
        let y = (n / dims[0]) % dims[1];
        let z = n / (dims[0] * dims[1]);
        [x as f64, y as f64, z as f64]
    };
    let pa = coord(a);
    let pb = coord(b);
    ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2) + (pa[2] - pb[2]).powi(2)).sqrt()
}

/// Spectral-radius estimate of a sparse matrix via normalized power
/// iteration; the growth rate of the iterate norm converges to the radius
/// even when the dominant eigenvalue is complex.
fn spectral_radius_sparse(out_edges: &[Vec<(u32, f64)>], n: usize, seed: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut rng = rng::stream(seed, STREAM_RESERVOIR, u64::MAX);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = norm(&v);
    if nv == 0.0 {
        return 0.0;
    }
    for x in &mut v {
        *x /= nv;
    }
    let mut log_growth_sum = 0.0;
    let mut samples = 0u32;
    for iter in 0..200 {
        let mut w = vec![0.0; n];
        for (src, edges) in out_edges.iter().enumerate() {
            let vs = v[src];
            if vs == 0.0 {
                continue;
            }
            for &(tgt, weight) in edges {
                w[tgt as usize] += weight * vs;
            }
        }
        let g = norm(&w);
        if g < 1e-300 {
            return 0.0;
        }
        for x in &mut w {
            *x /= g;
        }
        v = w;
        if iter >= 150 {
            log_growth_sum += g.ln();
            samples += 1;
        }
    }
    (log_growth_sum / samples as f64).exp()
}

/// A wired liquid with its dynamic state.
#[derive(Debug, Clone)]
pub struct Reservoir {
    resting_mv: f64,
    threshold_mv: f64,
    z_rho: f64,
    z_linear: f64,
    refractory_steps: u32,
    steps_per_input: usize,
    n_inputs: usize,
    kinds: Vec<NeuronKind>,
    /// Per input channel: (target neuron, weight).
    in_edges: Vec<Vec<(u32, f64)>>,
    /// Per source neuron: (target neuron, signed weight).
    out_edges: Vec<Vec<(u32, f64)>>,
    v: Vec<f64>,
    refractory: Vec<u32>,
    fired: Vec<bool>,
    /// Spikes per neuron within the current presentation.
    fired_counts: Vec<u32>,
}

impl Reservoir {
    /// Wires a liquid from `params` using the stream keyed by `seed`.
    pub fn build(n_inputs: usize, params: &LiquidParams, seed: u64) -> Result<Self> {
        params.validate()?;
        if n_inputs == 0 {
            return Err(SimError::Empty("reservoir input channels"));
        }
        let n = params.n_neurons();
        let mut rng = rng::stream(seed, STREAM_RESERVOIR, 0);

        let kinds: Vec<NeuronKind> = (0..n)
            .map(|_| {
                if rng.gen::<f64>() < params.excitatory_fraction {
                    NeuronKind::Excitatory
                } else {
                    NeuronKind::Inhibitory
                }
            })
            .collect();

        let base_prob = |a: NeuronKind, b: NeuronKind| match (a, b) {
            (NeuronKind::Excitatory, NeuronKind::Excitatory) => params.conn_ee,
            (NeuronKind::Excitatory, NeuronKind::Inhibitory) => params.conn_ei,
            (NeuronKind::Inhibitory, NeuronKind::Excitatory) => params.conn_ie,
            (NeuronKind::Inhibitory, NeuronKind::Inhibitory) => params.conn_ii,
        };

        let mut out_edges: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for src in 0..n {
            for tgt in 0..n {
                if src == tgt {
                    continue;
                }
                let d = grid_distance(params.dims, src, tgt);
                let p =
                    connection_probability(d, base_prob(kinds[src], kinds[tgt]), params.lambda)?;
                if rng.gen::<f64>() < p {
                    let magnitude = rng.gen_range(params.weight_low..=params.weight_high);
                    let w = match kinds[src] {
                        NeuronKind::Excitatory => magnitude,
                        NeuronKind::Inhibitory => -magnitude,
                    };
                    out_edges[src].push((tgt as u32, w));
                }
            }
        }

        if params.spectral_radius > 0.0 {
            let radius = spectral_radius_sparse(&out_edges, n, seed);
            if radius > 0.0 {
                let scale = params.spectral_radius / radius;
                for edges in &mut out_edges {
                    for e in edges.iter_mut() {
                        e.1 *= scale;
                    }
                }
            }
        }

        let mut in_edges: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_inputs];
        for channel in in_edges.iter_mut() {
            for tgt in 0..n {
                if rng.gen::<f64>() < params.input_connection_prob {
                    let w =
                        rng.gen_range(params.weight_low..=params.weight_high) * params.input_gain;
                    channel.push((tgt as u32, w));
                }
            }
        }

        Ok(Reservoir {
            resting_mv: params.resting_potential_mv,
            threshold_mv: params.threshold_mv,
            z_rho: db_to_linear(params.resistance_db) * params.membrane_tau_ms,
            z_linear: db_to_linear(params.resistance_db),
            refractory_steps: params.refractory_steps,
            steps_per_input: params.steps_per_input,
            n_inputs,
            kinds,
            in_edges,
            out_edges,
            v: vec![params.resting_potential_mv; n],
            refractory: vec![0; n],
            fired: vec![false; n],
            fired_counts: vec![0; n],
        })
    }

    pub fn n_neurons(&self) -> usize {
        self.v.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn kinds(&self) -> &[NeuronKind] {
        &self.kinds
    }

    pub fn recurrent_edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    /// Returns all membranes to rest and clears spikes and refractory state.
    pub fn reset(&mut self) {
        self.v.fill(self.resting_mv);
        self.refractory.fill(0);
        self.fired.fill(false);
        self.fired_counts.fill(0);
    }

    /// External per-neuron current induced by an input vector.
    pub fn input_drive(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.n_inputs {
            return Err(SimError::DimensionMismatch {
                context: "reservoir input",
                expected: self.n_inputs,
                got: input.len(),
            });
        }
        let mut drive = vec![0.0; self.n_neurons()];
        for (channel, &value) in self.in_edges.iter().zip(input.iter()) {
            if value == 0.0 {
                continue;
            }
            for &(tgt, w) in channel {
                drive[tgt as usize] += w * value;
            }
        }
        Ok(drive)
    }

    /// Advances one step under a fixed per-neuron external current.
    pub fn step_with_drive(&mut self, drive: &[f64]) {
        let n = self.n_neurons();
        debug_assert_eq!(drive.len(), n);
        let mut recurrent = vec![0.0; n];
        for (src, edges) in self.out_edges.iter().enumerate() {
            if self.fired[src] {
                for &(tgt, w) in edges {
                    recurrent[tgt as usize] += w;
                }
            }
        }
        for j in 0..n {
            if self.refractory[j] > 0 {
                self.refractory[j] -= 1;
                self.v[j] = self.resting_mv;
                self.fired[j] = false;
                continue;
            }
            let current = drive[j] + recurrent[j];
            self.v[j] += (self.resting_mv + self.z_linear * current - self.v[j]) / self.z_rho;
            if self.v[j] >= self.threshold_mv {
                self.fired[j] = true;
                self.fired_counts[j] += 1;
                self.v[j] = self.resting_mv;
                self.refractory[j] = self.refractory_steps;
            } else {
                self.fired[j] = false;
            }
        }
    }

    /// One step driven by an input vector.
    pub fn step(&mut self, input: &[f64]) -> Result<()> {
        let drive = self.input_drive(input)?;
        self.step_with_drive(&drive);
        Ok(())
    }

    /// Presents one input for the configured number of steps. The drive is
    /// computed once; the liquid keeps evolving through its own spikes.
    /// Spike counts restart with each presentation.
    pub fn present(&mut self, input: &[f64]) -> Result<()> {
        let drive = self.input_drive(input)?;
        self.fired_counts.fill(0);
        for _ in 0..self.steps_per_input {
            self.step_with_drive(&drive);
        }
        Ok(())
    }

    pub fn membrane(&self) -> &[f64] {
        &self.v
    }

    pub fn last_fired(&self) -> &[bool] {
        &self.fired
    }

    /// Membrane state mapped to [0, 1] between rest and threshold.
    pub fn normalized_state(&self) -> Vec<f64> {
        let span = self.threshold_mv - self.resting_mv;
        self.v
            .iter()
            .map(|&v| (v - self.resting_mv) / span)
            .collect()
    }

    /// Fraction of the last presentation's steps on which each neuron
    /// spiked.
    pub fn spike_fractions(&self) -> Vec<f64> {
        self.fired_counts
            .iter()
            .map(|&c| c as f64 / self.steps_per_input as f64)
            .collect()
    }

    /// The full readout view of the liquid: normalized membranes followed
    /// by spike fractions, `2 * n_neurons` values in [0, 1].
    pub fn observables(&self) -> Vec<f64> {
        let mut out = self.normalized_state();
        out.extend(self.spike_fractions());
        out
    }

    /// Resets, presents each input in turn, and returns the state matrix
    /// (neurons x inputs) of normalized membranes after each presentation.
    pub fn collect_states(&mut self, inputs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if inputs.is_empty() {
            return Err(SimError::Empty("reservoir input sequence"));
        }
        self.reset();
        let n = self.n_neurons();
        let mut states = DMatrix::zeros(n, inputs.len());
        for (t, input) in inputs.iter().enumerate() {
            self.present(input)?;
            let s = self.normalized_state();
            for (j, &val) in s.iter().enumerate() {
                states[(j, t)] = val;
            }
        }
        Ok(states)
    }
}

/// Linear readout: one weight row per output.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub weights: DMatrix<f64>,
}

impl Readout {
    pub fn zeros(n_outputs: usize, n_features: usize) -> Self {
        Readout {
            weights: DMatrix::zeros(n_outputs, n_features),
        }
    }

    pub fn n_outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.weights.ncols()
    }

    fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.n_features() {
            return Err(SimError::DimensionMismatch {
                context: "readout features",
                expected: self.n_features(),
                got: features.len(),
            });
        }
        Ok(())
    }

    /// All outputs for one feature vector.
    pub fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_features(features)?;
        Ok((0..self.n_outputs())
            .map(|row| self.dot_row(row, features))
            .collect())
    }

    /// A single output row.
    pub fn predict_row(&self, row: usize, features: &[f64]) -> Result<f64> {
        self.check_features(features)?;
        if row >= self.n_outputs() {
            return Err(SimError::DimensionMismatch {
                context: "readout row",
                expected: self.n_outputs(),
                got: row,
            });
        }
        Ok(self.dot_row(row, features))
    }

    fn dot_row(&self, row: usize, features: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, &x) in features.iter().enumerate() {
            acc += self.weights[(row, c)] * x;
        }
        acc
    }

    /// One LMS step on a single row:
    /// `w += rate * (observed - estimate) * features`.
    pub fn lms_update(
        &mut self,
        row: usize,
        observed: f64,
        estimate: f64,
        features: &[f64],
        rate: f64,
    ) -> Result<()> {
        self.check_features(features)?;
        if row >= self.n_outputs() {
            return Err(SimError::DimensionMismatch {
                context: "readout row",
                expected: self.n_outputs(),
                got: row,
            });
        }
        let err = rate * (observed - estimate);
        for (c, &x) in features.iter().enumerate() {
            self.weights[(row, c)] += err * x;
        }
        Ok(())
    }

    /// Writes `rows,cols` then one comma-separated line per row, full f64
    /// precision.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "{},{}", self.n_outputs(), self.n_features())?;
        for r in 0..self.n_outputs() {
            let row: Vec<String> = (0..self.n_features())
                .map(|c| format!("{:.17e}", self.weights[(r, c)]))
                .collect();
            writeln!(f, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let f = BufReader::new(std::fs::File::open(path)?);
        let mut lines = f.lines();
        let header = lines.next().ok_or(SimError::Empty("readout file"))??;
        let mut parts = header.split(',');
        let parse_dim = |s: Option<&str>| -> Result<usize> {
            s.and_then(|v| v.trim().parse::<usize>().ok())
                .ok_or(SimError::ConfigParse("bad readout header".into()))
        };
        let rows = parse_dim(parts.next())?;
        let cols = parse_dim(parts.next())?;
        let mut weights = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            let line = lines.next().ok_or(SimError::Empty("readout row"))??;
            let values: Vec<&str> = line.split(',').collect();
            if values.len() != cols {
                return Err(SimError::DimensionMismatch {
                    context: "readout csv row",
                    expected: cols,
                    got: values.len(),
                });
            }
            for (c, v) in values.iter().enumerate() {
                weights[(r, c)] = v
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| SimError::ConfigParse(format!("bad readout value: {e}")))?;
            }
        }
        Ok(Readout { weights })
    }
}

/// Ridge-regression readout fit.
///
/// `states` is features x samples, `targets` outputs x samples. Solves the
/// smaller of the primal (feature-space) and dual (sample-space) normal
/// equations; the two agree for any positive ridge term, and the dual also
/// covers `delta = 0` when the sample Gram matrix is invertible.
pub fn train_ridge(states: &DMatrix<f64>, targets: &DMatrix<f64>, delta: f64) -> Result<Readout> {
    if states.ncols() == 0 {
        return Err(SimError::Empty("ridge training set"));
    }
    if targets.ncols() != states.ncols() {
        return Err(SimError::DimensionMismatch {
            context: "ridge targets",
            expected: states.ncols(),
            got: targets.ncols(),
        });
    }
    if delta < 0.0 {
        return Err(SimError::InvalidInput {
            name: "delta",
            value: delta,
            reason: "ridge term must be non-negative",
        });
    }
    let n_features = states.nrows();
    let n_samples = states.ncols();
    let d2 = delta * delta;

    let solve_spd = |a: DMatrix<f64>, b: DMatrix<f64>| -> Result<DMatrix<f64>> {
        if let Some(chol) = a.clone().cholesky() {
            return Ok(chol.solve(&b));
        }
        a.lu()
            .solve(&b)
            .ok_or(SimError::SingularSystem("ridge normal equations"))
    };

    let weights = if n_features <= n_samples {
        // Primal: F = Y V^T (V V^T + d2 I)^-1.
        let mut a = states * states.transpose();
        for i in 0..n_features {
            a[(i, i)] += d2;
        }
        let rhs = states * targets.transpose();
        solve_spd(a, rhs)?.transpose()
    } else {
        // Dual: F = Y (V^T V + d2 I)^-1 V^T.
        let mut a = states.transpose() * states;
        for i in 0..n_samples {
            a[(i, i)] += d2;
        }
        let rhs = targets.transpose();
        let x = solve_spd(a, rhs)?;
        (states * x).transpose()
    };
    Ok(Readout { weights })
}

/// Echo-state (leaky tanh) reservoir parameters.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EsnParams {
    pub n_neurons: usize,
    pub spectral_radius: f64,
    pub leak_rate: f64,
    pub input_scale: f64,
    pub connectivity: f64,
    pub steps_per_input: usize,
}

impl Default for EsnParams {
    fn default() -> Self {
        EsnParams {
            n_neurons: 500,
            spectral_radius: 0.9,
            leak_rate: 0.3,
            input_scale: 1.0,
            connectivity: 0.1,
            steps_per_input: 3,
        }
    }
}

impl EsnParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_neurons == 0 {
            return Err(SimError::config("esn.n_neurons", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.leak_rate) || self.leak_rate == 0.0 {
            return Err(SimError::config("esn.leak_rate", "must lie in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.connectivity) {
            return Err(SimError::config("esn.connectivity", "must lie in [0, 1]"));
        }
        if self.steps_per_input == 0 {
            return Err(SimError::config("esn.steps_per_input", "must be positive"));
        }
        Ok(())
    }
}

/// Leaky-tanh echo-state reservoir.
#[derive(Debug, Clone)]
pub struct EchoState {
    leak: f64,
    steps_per_input: usize,
    n_inputs: usize,
    in_weights: Vec<Vec<f64>>,
    out_edges: Vec<Vec<(u32, f64)>>,
    state: Vec<f64>,
}

impl EchoState {
    pub fn build(n_inputs: usize, params: &EsnParams, seed: u64) -> Result<Self> {
        params.validate()?;
        if n_inputs == 0 {
            return Err(SimError::Empty("echo-state input channels"));
        }
        let n = params.n_neurons;
        let mut rng = rng::stream(seed, STREAM_RESERVOIR, 1);
        let mut out_edges: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for src in 0..n {
            for tgt in 0..n {
                if rng.gen::<f64>() < params.connectivity {
                    out_edges[src].push((tgt as u32, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        let radius = spectral_radius_sparse(&out_edges, n, seed);
        if radius > 0.0 {
            let scale = params.spectral_radius / radius;
            for edges in &mut out_edges {
                for e in edges.iter_mut() {
                    e.1 *= scale;
                }
            }
        }
        let in_weights = (0..n_inputs)
            .map(|_| {
                (0..n)
                    .map(|_| rng.gen_range(-1.0..1.0) * params.input_scale)
                    .collect()
            })
            .collect();
        Ok(EchoState {
            leak: params.leak_rate,
            steps_per_input: params.steps_per_input,
            n_inputs,
            in_weights,
            out_edges,
            state: vec![0.0; n],
        })
    }

    pub fn n_neurons(&self) -> usize {
        self.state.len()
    }

    pub fn reset(&mut self) {
        self.state.fill(0.0);
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    fn step(&mut self, input: &[f64]) {
        let n = self.n_neurons();
        let mut pre = vec![0.0; n];
        for (src, edges) in self.out_edges.iter().enumerate() {
            let s = self.state[src];
            if s == 0.0 {
                continue;
            }
            for &(tgt, w) in edges {
                pre[tgt as usize] += w * s;
            }
        }
        for (channel, &value) in self.in_weights.iter().zip(input.iter()) {
            if value == 0.0 {
                continue;
            }
            for (j, w) in channel.iter().enumerate() {
                pre[j] += w * value;
            }
        }
        for j in 0..n {
            self.state[j] = (1.0 - self.leak) * self.state[j] + self.leak * pre[j].tanh();
        }
    }

    pub fn present(&mut self, input: &[f64]) -> Result<()> {
        if input.len() != self.n_inputs {
            return Err(SimError::DimensionMismatch {
                context: "echo-state input",
                expected: self.n_inputs,
                got: input.len(),
            });
        }
        for _ in 0..self.steps_per_input {
            self.step(input);
        }
        Ok(())
    }

    /// Same contract as [`Reservoir::collect_states`].
    pub fn collect_states(&mut self, inputs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if inputs.is_empty() {
            return Err(SimError::Empty("echo-state input sequence"));
        }
        self.reset();
        let n = self.n_neurons();
        let mut states = DMatrix::zeros(n, inputs.len());
        for (t, input) in inputs.iter().enumerate() {
            self.present(input)?;
            for j in 0..n {
                states[(j, t)] = self.state[j];
            }
        }
        Ok(states)
    }
}
