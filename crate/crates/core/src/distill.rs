//! Supervised distillation of archive elites into a small MLP policy θ → x.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::archive::{Archive, Elite};
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::engine::Evaluation;
use crate::metrics::Rearchiver;
use crate::seed::{derive_seed, rng_from_seed, RunRng, Stream};

pub const HIDDEN_UNITS: usize = 64;
pub const ACTIVATION: &str = "tanh";

/// Fully connected network with tanh hidden layers and a linear output.
///
/// Parameters live in one flat vector, layer by layer: the row-major weight
/// matrix (`out × in`) followed by the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPolicy {
    dims: Vec<usize>,
    params: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerDoc {
    #[serde(rename = "W")]
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PolicyDoc {
    dims: Vec<usize>,
    activation: String,
    layers: Vec<LayerDoc>,
}

fn parameter_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

impl MlpPolicy {
    /// All-zero network with the given layer widths (input first, output last).
    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::invalid(format!("invalid layer widths {dims:?}")));
        }
        let params = vec![0.0; parameter_count(&dims)];
        Ok(MlpPolicy { dims, params })
    }

    /// `input → 64 → 64 → output`, weights and biases drawn from
    /// U(-1/√fan_in, 1/√fan_in).
    pub fn new(input_dim: usize, output_dim: usize, rng: &mut RunRng) -> Result<Self> {
        Self::with_dims(vec![input_dim, HIDDEN_UNITS, HIDDEN_UNITS, output_dim], rng)
    }

    pub fn with_dims(dims: Vec<usize>, rng: &mut RunRng) -> Result<Self> {
        let mut policy = Self::zeros(dims)?;
        let mut offset = 0;
        for l in 0..policy.dims.len() - 1 {
            let (fan_in, fan_out) = (policy.dims[l], policy.dims[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in &mut policy.params[offset..offset + fan_out * (fan_in + 1)] {
                *p = rng.random_range(-bound..bound);
            }
            offset += fan_out * (fan_in + 1);
        }
        Ok(policy)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two layers")
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.dims.windows(2).map(move |w| {
            let start = offset;
            offset += w[1] * (w[0] + 1);
            (start, w[0], w[1])
        })
    }

    /// Unclipped network output.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut scratch = Scratch::new(&self.dims);
        self.forward_into(input, &mut scratch);
        Ok(scratch.activations.last().expect("output layer").clone())
    }

    /// Network output clipped to the unit box.
    pub fn infer(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.forward(theta)?;
        for v in &mut out {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(out)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "policy expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        Ok(())
    }

    fn forward_into(&self, input: &[f64], scratch: &mut Scratch) {
        scratch.activations[0].copy_from_slice(input);
        let last = self.dims.len() - 2;
        for (l, (offset, fan_in, fan_out)) in self.layers().enumerate() {
            let (done, rest) = scratch.activations.split_at_mut(l + 1);
            let (prev, next) = (&done[l], &mut rest[0]);
            let weights = &self.params[offset..offset + fan_out * fan_in];
            let bias = &self.params[offset + fan_out * fan_in..offset + fan_out * (fan_in + 1)];
            for (o, row) in weights.chunks_exact(fan_in).enumerate() {
                let z = bias[o] + row.iter().zip(prev).map(|(w, a)| w * a).sum::<f64>();
                next[o] = if l == last { z } else { z.tanh() };
            }
        }
    }

    /// Accumulates the gradient of `scale · ‖output − target‖²` into `grad`
    /// and returns the squared error.
    fn backprop(&self, input: &[f64], target: &[f64], scale: f64, scratch: &mut Scratch, grad: &mut [f64]) -> f64 {
        self.forward_into(input, scratch);
        let layers: Vec<_> = self.layers().collect();
        let output = scratch.activations.last().expect("output layer");
        let mut sq = 0.0;
        {
            let delta = scratch.deltas.last_mut().expect("output delta");
            for ((d, y), t) in delta.iter_mut().zip(output).zip(target) {
                let e = y - t;
                sq += e * e;
                *d = 2.0 * scale * e;
            }
        }
        for l in (0..layers.len()).rev() {
            let (offset, fan_in, fan_out) = layers[l];
            let prev = &scratch.activations[l];
            let (lower, upper) = scratch.deltas.split_at_mut(l);
            let delta = &upper[0];
            let (gw, gb) = grad[offset..offset + fan_out * (fan_in + 1)].split_at_mut(fan_out * fan_in);
            for (o, row) in gw.chunks_exact_mut(fan_in).enumerate() {
                let d = delta[o];
                gb[o] += d;
                for (g, a) in row.iter_mut().zip(prev) {
                    *g += d * a;
                }
            }
            if l > 0 {
                let below = &mut lower[l - 1];
                below.iter_mut().for_each(|v| *v = 0.0);
                let weights = &self.params[offset..offset + fan_out * fan_in];
                for (o, row) in weights.chunks_exact(fan_in).enumerate() {
                    let d = delta[o];
                    for (b, w) in below.iter_mut().zip(row) {
                        *b += d * w;
                    }
                }
                for (b, a) in below.iter_mut().zip(prev) {
                    *b *= 1.0 - a * a;
                }
            }
        }
        sq
    }

    /// Mean squared error over every output coordinate of every sample.
    pub fn mse(&self, data: &Dataset) -> Result<f64> {
        self.check_dataset(data)?;
        let mut scratch = Scratch::new(&self.dims);
        let mut total = 0.0;
        for i in 0..data.len() {
            self.forward_into(data.input(i), &mut scratch);
            let out = scratch.activations.last().expect("output layer");
            total += out.iter().zip(data.target(i)).map(|(y, t)| (y - t) * (y - t)).sum::<f64>();
        }
        Ok(total / (data.len() * data.output_dim) as f64)
    }

    /// Mean squared error and its gradient with respect to [`Self::parameters`].
    pub fn loss_and_gradient(&self, data: &Dataset) -> Result<(f64, Vec<f64>)> {
        self.check_dataset(data)?;
        let indices: Vec<usize> = (0..data.len()).collect();
        let mut grad = vec![0.0; self.params.len()];
        let mut scratch = Scratch::new(&self.dims);
        let loss = self.batch_gradient(data, &indices, &mut scratch, &mut grad);
        Ok((loss, grad))
    }

    fn batch_gradient(&self, data: &Dataset, batch: &[usize], scratch: &mut Scratch, grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let scale = 1.0 / (batch.len() * data.output_dim) as f64;
        let mut sq = 0.0;
        for &i in batch {
            sq += self.backprop(data.input(i), data.target(i), scale, scratch, grad);
        }
        sq * scale
    }

    fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.input_dim != self.input_dim() || data.output_dim != self.output_dim() {
            return Err(Error::invalid(format!(
                "dataset is {}→{}, policy is {}→{}",
                data.input_dim,
                data.output_dim,
                self.input_dim(),
                self.output_dim()
            )));
        }
        Ok(())
    }

    /// Mean fitness of the clipped policy outputs over `probes`.
    pub fn inference_score<P: Problem + ?Sized>(&self, problem: &P, probes: &[Vec<f64>]) -> Result<f64> {
        if problem.task_dim() != self.input_dim() || problem.solution_dim() != self.output_dim() {
            return Err(Error::invalid(format!(
                "policy is {}→{} but {} is {}→{}",
                self.input_dim(),
                self.output_dim(),
                problem.name(),
                problem.task_dim(),
                problem.solution_dim()
            )));
        }
        if let Some(bad) = probes.iter().find(|p| p.len() != self.input_dim()) {
            return Err(Error::invalid(format!("probe task has dimension {}", bad.len())));
        }
        crate::metrics::inference_score(|t| self.infer(t).expect("dimension checked"), problem, probes)
    }

    pub fn to_json(&self) -> Result<String> {
        let layers = self
            .layers()
            .map(|(offset, fan_in, fan_out)| {
                let w = self.params[offset..offset + fan_out * fan_in]
                    .chunks_exact(fan_in)
                    .map(<[f64]>::to_vec)
                    .collect();
                let b = self.params[offset + fan_out * fan_in..offset + fan_out * (fan_in + 1)].to_vec();
                LayerDoc { w, b }
            })
            .collect();
        let doc = PolicyDoc {
            dims: self.dims.clone(),
            activation: ACTIVATION.to_string(),
            layers,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PolicyDoc = serde_json::from_str(text)?;
        if doc.activation != ACTIVATION {
            return Err(Error::invalid(format!("unsupported activation '{}'", doc.activation)));
        }
        let mut policy = Self::zeros(doc.dims)?;
        if doc.layers.len() != policy.dims.len() - 1 {
            return Err(Error::invalid("layer count does not match dims"));
        }
        let mut params = Vec::with_capacity(policy.params.len());
        for (l, layer) in doc.layers.iter().enumerate() {
            let (fan_in, fan_out) = (policy.dims[l], policy.dims[l + 1]);
            if layer.w.len() != fan_out || layer.w.iter().any(|r| r.len() != fan_in) || layer.b.len() != fan_out {
                return Err(Error::invalid(format!("layer {l} does not have shape {fan_out}×{fan_in}")));
            }
            layer.w.iter().for_each(|r| params.extend_from_slice(r));
            params.extend_from_slice(&layer.b);
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("policy weights must be finite"));
        }
        policy.params = params;
        Ok(policy)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

struct Scratch {
    activations: Vec<Vec<f64>>,
    // deltas[l] is the error signal at the output of layer l (activations[l + 1])
    deltas: Vec<Vec<f64>>,
}

impl Scratch {
    fn new(dims: &[usize]) -> Self {
        Scratch {
            activations: dims.iter().map(|&d| vec![0.0; d]).collect(),
            deltas: dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
        }
    }
}

/// Paired inputs and targets stored row-major.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    input_dim: usize,
    output_dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(input_dim: usize, output_dim: usize) -> Self {
        Dataset {
            input_dim,
            output_dim,
            inputs: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn push(&mut self, input: &[f64], target: &[f64]) -> Result<()> {
        if input.len() != self.input_dim || target.len() != self.output_dim {
            return Err(Error::invalid(format!(
                "pair is {}→{}, dataset is {}→{}",
                input.len(),
                target.len(),
                self.input_dim,
                self.output_dim
            )));
        }
        self.inputs.extend_from_slice(input);
        self.targets.extend_from_slice(target);
        Ok(())
    }

    /// `(θ, x)` pairs of the given elites. Dimensions come from the first one.
    pub fn from_elites<'a>(elites: impl IntoIterator<Item = &'a Elite>) -> Result<Self> {
        let mut data: Option<Dataset> = None;
        for e in elites {
            data.get_or_insert_with(|| Dataset::new(e.theta.len(), e.x.len()))
                .push(&e.theta, &e.x)?;
        }
        Ok(data.unwrap_or_default())
    }

    pub fn from_archive(archive: &Archive) -> Result<Self> {
        Self::from_elites(archive.elites())
    }

    pub fn len(&self) -> usize {
        if self.input_dim == 0 {
            0
        } else {
            self.inputs.len() / self.input_dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.output_dim..(i + 1) * self.output_dim]
    }

    fn subset(&self, indices: &[usize]) -> Dataset {
        let mut out = Dataset::new(self.input_dim, self.output_dim);
        for &i in indices {
            out.inputs.extend_from_slice(self.input(i));
            out.targets.extend_from_slice(self.target(i));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            hidden: vec![HIDDEN_UNITS, HIDDEN_UNITS],
            learning_rate: 1e-3,
            batch_size: 64,
            max_epochs: 2000,
            patience: 50,
            validation_fraction: 0.1,
        }
    }
}

impl TrainSettings {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.hidden.contains(&0) {
            problems.push("hidden: widths must be positive".to_string());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            problems.push("learning_rate: must be positive".to_string());
        }
        if self.batch_size == 0 {
            problems.push("batch_size: must be positive".to_string());
        }
        if self.max_epochs == 0 {
            problems.push("max_epochs: must be positive".to_string());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            problems.push("validation_fraction: must lie in (0, 1)".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean of the minibatch losses seen during the epoch.
    pub train_loss: f64,
    pub validation_loss: f64,
    pub best_validation_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_size: usize,
    pub validation_size: usize,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub history: Vec<EpochRecord>,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.history.len()
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, lr: f64) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
            lr,
        }
    }

    fn apply(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// Fits a fresh policy to `data` by minibatch Adam on the MSE loss and
/// returns the weights with the lowest validation loss.
pub fn train_distillation(data: &Dataset, settings: &TrainSettings, rng: &mut RunRng) -> Result<(MlpPolicy, TrainReport)> {
    settings.validate()?;
    if data.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "distillation needs at least 2 elites, got {}",
            data.len()
        )));
    }
    let mut dims = vec![data.input_dim()];
    dims.extend(&settings.hidden);
    dims.push(data.output_dim());
    let mut policy = MlpPolicy::with_dims(dims, rng)?;

    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    let n_val = ((data.len() as f64 * settings.validation_fraction).round() as usize).clamp(1, data.len() - 1);
    let validation = data.subset(&order[..n_val]);
    let train = data.subset(&order[n_val..]);

    let mut adam = Adam::new(policy.parameter_count(), settings.learning_rate);
    let mut grad = vec![0.0; policy.parameter_count()];
    let mut scratch = Scratch::new(policy.dims());
    let mut best = policy.clone();
    let mut best_loss = policy.mse(&validation)?;
    let mut best_epoch = 0;
    let mut history = Vec::new();
    let mut indices: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=settings.max_epochs {
        indices.shuffle(rng);
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for batch in indices.chunks(settings.batch_size) {
            loss_sum += policy.batch_gradient(&train, batch, &mut scratch, &mut grad);
            batches += 1;
            adam.apply(&mut policy.params, &grad);
        }
        if policy.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerical(format!("non-finite weights after epoch {epoch}")));
        }
        let val_loss = policy.mse(&validation)?;
        if val_loss < best_loss {
            best_loss = val_loss;
            best_epoch = epoch;
            best.params.copy_from_slice(&policy.params);
        }
        history.push(EpochRecord {
            epoch,
            train_loss: loss_sum / batches as f64,
            validation_loss: val_loss,
            best_validation_loss: best_loss,
        });
        if epoch - best_epoch >= settings.patience {
            break;
        }
    }

    let report = TrainReport {
        train_size: train.len(),
        validation_size: validation.len(),
        best_epoch,
        best_validation_loss: best_loss,
        history,
    };
    Ok((best, report))
}

/// Trained policy together with how it was obtained.
#[derive(Debug, Clone)]
pub struct Distillation {
    pub policy: MlpPolicy,
    pub report: TrainReport,
    pub resolution: usize,
    pub elites: usize,
}

/// Re-archives `records` at `resolution` cells and distills the elites.
/// Training randomness is derived from `seed` and the resolution.
pub fn distill_records(
    records: &[Evaluation],
    rearchiver: &Rearchiver<'_>,
    resolution: usize,
    settings: &TrainSettings,
    seed: u64,
) -> Result<Distillation> {
    if resolution < 2 {
        return Err(Error::invalid(format!(
            "distillation resolution must be at least 2, got {resolution}"
        )));
    }
    let archive = rearchiver.rearchive(records, resolution)?;
    let data = Dataset::from_archive(&archive)?;
    let mut rng = rng_from_seed(derive_seed(seed, Stream::Training, resolution as u64));
    let (policy, report) = train_distillation(&data, settings, &mut rng)?;
    Ok(Distillation {
        policy,
        report,
        resolution,
        elites: data.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{LinearToy, Problem};

    fn toy_dataset(n: usize, seed: u64) -> (LinearToy, Dataset) {
        let toy = LinearToy::new(seed);
        let mut rng = rng_from_seed(seed);
        let mut data = Dataset::new(toy.task_dim(), toy.solution_dim());
        for _ in 0..n {
            let theta: Vec<f64> = (0..toy.task_dim()).map(|_| rng.random::<f64>()).collect();
            data.push(&theta, &toy.optimum(&theta)).unwrap();
        }
        (toy, data)
    }

    #[test]
    fn zero_network_outputs_clipped_bias() {
        let mut p = MlpPolicy::zeros(vec![2, 3, 3]).unwrap();
        let n = p.parameter_count();
        p.parameters_mut()[n - 3..].copy_from_slice(&[-0.5, 0.25, 1.5]);
        assert_eq!(p.infer(&[0.3, 0.9]).unwrap(), vec![0.0, 0.25, 1.0]);
        assert_eq!(p.infer(&[0.0, 0.0]).unwrap(), vec![0.0, 0.25, 1.0]);
    }

    #[test]
    fn default_shape_and_dimension_check() {
        let p = MlpPolicy::new(2, 3, &mut rng_from_seed(1)).unwrap();
        assert_eq!(p.dims(), &[2, 64, 64, 3]);
        assert_eq!(p.parameter_count(), 64 * 3 + 64 * 65 + 3 * 65);
        assert!(matches!(p.infer(&[0.1]), Err(Error::InvalidArgument(_))));
        let a = p.infer(&[0.2, 0.7]).unwrap();
        assert_eq!(a, p.infer(&[0.2, 0.7]).unwrap());
        assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn initialisation_respects_fan_in_bound() {
        let p = MlpPolicy::new(4, 2, &mut rng_from_seed(2)).unwrap();
        for (offset, fan_in, fan_out) in p.layers() {
            let bound = 1.0 / (fan_in as f64).sqrt();
            assert!(p.params[offset..offset + fan_out * (fan_in + 1)].iter().all(|w| w.abs() <= bound));
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rng_from_seed(3);
        let policy = MlpPolicy::with_dims(vec![3, 7, 5, 2], &mut rng).unwrap();
        let mut data = Dataset::new(3, 2);
        for _ in 0..6 {
            let a: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            let b: Vec<f64> = (0..2).map(|_| rng.random()).collect();
            data.push(&a, &b).unwrap();
        }
        let (_, grad) = policy.loss_and_gradient(&data).unwrap();
        let h = 1e-5;
        for k in 0..policy.parameter_count() {
            let mut plus = policy.clone();
            plus.params[k] += h;
            let mut minus = policy.clone();
            minus.params[k] -= h;
            let fd = (plus.mse(&data).unwrap() - minus.mse(&data).unwrap()) / (2.0 * h);
            let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-8);
            assert!(rel < 1e-4, "param {k}: analytic {} vs fd {fd}", grad[k]);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let p = MlpPolicy::new(2, 4, &mut rng_from_seed(4)).unwrap();
        let q = MlpPolicy::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(p, q);
        let doc: serde_json::Value = serde_json::from_str(&p.to_json().unwrap()).unwrap();
        assert_eq!(doc["activation"], "tanh");
        assert_eq!(doc["layers"][0]["W"].as_array().unwrap().len(), 64);
        assert_eq!(doc["layers"][2]["b"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn json_rejects_shape_mismatch() {
        let text = r#"{"dims":[1,2],"activation":"tanh","layers":[{"W":[[1.0]],"b":[0.0,0.0]}]}"#;
        assert!(MlpPolicy::from_json(text).is_err());
        let relu = r#"{"dims":[1,1],"activation":"relu","layers":[{"W":[[1.0]],"b":[0.0]}]}"#;
        assert!(MlpPolicy::from_json(relu).is_err());
    }

    #[test]
    fn too_few_elites() {
        let mut data = Dataset::new(1, 1);
        data.push(&[0.5], &[0.5]).unwrap();
        let err = train_distillation(&data, &TrainSettings::default(), &mut rng_from_seed(0));
        assert!(matches!(err, Err(Error::InsufficientData(_))));
        let empty = Dataset::from_elites(std::iter::empty()).unwrap();
        assert!(train_distillation(&empty, &TrainSettings::default(), &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn constant_target_is_fitted() {
        let mut data = Dataset::new(2, 3);
        for _ in 0..101 {
            data.push(&[0.4, 0.6], &[0.2, 0.5, 0.8]).unwrap();
        }
        let (p, _) = train_distillation(&data, &TrainSettings::default(), &mut rng_from_seed(5)).unwrap();
        let out = p.infer(&[0.4, 0.6]).unwrap();
        for (o, t) in out.iter().zip([0.2, 0.5, 0.8]) {
            assert!((o - t).abs() < 1e-3, "{out:?}");
        }
    }

    #[test]
    fn affine_map_is_learned() {
        let (toy, data) = toy_dataset(1000, 6);
        let (p, report) = train_distillation(&data, &TrainSettings::default(), &mut rng_from_seed(6)).unwrap();
        let mse = p.mse(&data).unwrap();
        assert!(mse < 1e-4, "mse {mse}");
        assert!(report
            .history
            .windows(2)
            .all(|w| w[1].best_validation_loss <= w[0].best_validation_loss));
        assert_eq!(report.train_size + report.validation_size, 1000);
        let probes: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 / 49.0, 1.0 - i as f64 / 49.0]).collect();
        assert!(p.inference_score(&toy, &probes).unwrap() > 0.95);
    }

    #[test]
    fn training_is_deterministic() {
        let (_, data) = toy_dataset(100, 7);
        let settings = TrainSettings {
            max_epochs: 20,
            ..TrainSettings::default()
        };
        let a = train_distillation(&data, &settings, &mut rng_from_seed(9)).unwrap().0;
        let b = train_distillation(&data, &settings, &mut rng_from_seed(9)).unwrap().0;
        assert_eq!(a, b);
    }
}
