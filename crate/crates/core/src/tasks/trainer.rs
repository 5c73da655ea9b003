use std::time::Instant;

use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::Domain;
use crate::mask::Neighbor;
use crate::nn::{mse_loss, AdamConfig, AdamState, OutputActivation};
use crate::tasks::model::{rows_of, Model};
use crate::tasks::{TrainConfig, TrainReport};
use crate::{Error, Result};

/// Loss evaluated on one batch of network outputs.
pub struct ObjectiveEval {
    /// Scalar batch loss (what the gradient differentiates).
    pub loss: f64,
    /// Loss attributed to each batch row, fed back to the mask grid.
    pub per_sample: Array1<f64>,
    /// `∂loss/∂outputs`.
    pub grad: Array2<f64>,
}

pub trait Objective {
    /// `ids` are rows of the trainer's sample table, in batch order.
    fn evaluate(&mut self, ids: &[usize], outputs: &Array2<f64>) -> Result<ObjectiveEval>;
}

/// Mean squared error against fixed targets (one row per sample).
pub struct MseObjective {
    pub targets: Array2<f64>,
}

impl Objective for MseObjective {
    fn evaluate(&mut self, ids: &[usize], outputs: &Array2<f64>) -> Result<ObjectiveEval> {
        let targets = self.targets.select(Axis(0), ids);
        let (loss, per_sample, grad) = mse_loss(outputs, &targets);
        Ok(ObjectiveEval { loss, per_sample, grad })
    }
}

/// Owns a [`Model`] plus optimizer state and runs training iterations.
///
/// One iteration: pick a batch, encode and mask it, forward, evaluate the
/// objective, scatter per-sample losses to the mask grid, backpropagate,
/// take an Adam step and, every `feedback_interval` iterations, advance the
/// grid clocks.
pub struct Trainer {
    model: Model,
    adam: AdamState,
    features: Array2<f64>,
    neighbors: Vec<Vec<Neighbor>>,
    feedback: bool,
    rng: ChaCha8Rng,
    iteration: usize,
    loss_trace: Vec<f64>,
    clocks_at_half: Option<Vec<f64>>,
}

impl Trainer {
    /// `coords` is the sample table; objectives refer to its rows.
    pub fn new(model: Model, coords: &Array2<f64>) -> Result<Self> {
        let features = model.basis.encode_batch(coords)?;
        let neighbors = model.neighbors(coords);
        let adam = AdamState::new(
            &model.params,
            AdamConfig {
                lr: model.config.lr,
                ..AdamConfig::default()
            },
        );
        let rng = ChaCha8Rng::seed_from_u64(model.config.batch_seed());
        Ok(Self {
            model,
            adam,
            features,
            neighbors,
            feedback: true,
            rng,
            iteration: 0,
            loss_trace: Vec::new(),
            clocks_at_half: None,
        })
    }

    /// With feedback off the mask is applied but the grid never changes.
    pub fn set_feedback(&mut self, on: bool) {
        self.feedback = on;
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn into_model(self) -> Model {
        self.model
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn loss_trace(&self) -> &[f64] {
        &self.loss_trace
    }

    pub fn clocks_at_half(&self) -> Option<&[f64]> {
        self.clocks_at_half.as_deref()
    }

    fn num_samples(&self) -> usize {
        self.features.nrows()
    }

    fn next_batch(&mut self) -> Vec<usize> {
        let n = self.num_samples();
        match self.model.config.batch_size {
            Some(b) if b < n => rand::seq::index::sample(&mut self.rng, n, b).into_vec(),
            _ => (0..n).collect(),
        }
    }

    /// Masked encoded inputs for the given sample rows.
    pub fn masked_batch(&self, ids: &[usize]) -> Array2<f64> {
        let mut x = rows_of(&self.features, ids);
        if self.model.is_masked() {
            let nb: Vec<&[Neighbor]> = ids.iter().map(|&i| self.neighbors[i].as_slice()).collect();
            self.model.apply_mask(&mut x, &nb);
        }
        x
    }

    /// Runs one iteration and returns its batch loss.
    pub fn step(&mut self, objective: &mut dyn Objective) -> Result<f64> {
        let ids = self.next_batch();
        let x = self.masked_batch(&ids);
        let (outputs, cache) = self.model.params.forward(&x)?;
        let eval = objective.evaluate(&ids, &outputs)?;
        if !eval.loss.is_finite() {
            return Err(Error::Diverged {
                iteration: self.iteration,
            });
        }
        let feedback = self.feedback;
        if let (true, Some((_, grid))) = (feedback, self.model.mask.as_mut()) {
            for (k, &id) in ids.iter().enumerate() {
                grid.accumulate(&self.neighbors[id], eval.per_sample[k])?;
            }
        }
        let grads = self.model.params.backward(&cache, &eval.grad)?;
        self.adam.step(&mut self.model.params, &grads).map_err(|e| match e {
            Error::Diverged { .. } => Error::Diverged {
                iteration: self.iteration,
            },
            other => other,
        })?;
        self.iteration += 1;
        if let (true, Some((_, grid))) = (feedback, self.model.mask.as_mut()) {
            if self.iteration.is_multiple_of(grid.feedback_interval()) {
                grid.advance();
            }
        }
        if self.iteration == self.model.config.iterations / 2 {
            self.clocks_at_half = self.model.grid().map(|g| g.clocks().to_vec());
        }
        self.loss_trace.push(eval.loss);
        Ok(eval.loss)
    }

    /// Runs the configured number of iterations.
    pub fn run(&mut self, objective: &mut dyn Objective) -> Result<()> {
        let total = self.model.config.iterations;
        while self.iteration < total {
            let loss = self.step(objective)?;
            if self.iteration.is_multiple_of(500) {
                log::debug!("iteration {}/{}: loss {loss:.3e}", self.iteration, total);
            }
        }
        Ok(())
    }

    /// Report skeleton with the loss trace; callers add metrics.
    pub fn report(&self, started: Instant) -> TrainReport {
        TrainReport {
            config: self.model.config.clone(),
            metrics: Vec::new(),
            loss_trace: self.loss_trace.clone(),
            wall_time_s: started.elapsed().as_secs_f64(),
            clocks_at_half: self.clocks_at_half.clone(),
            heatmap: self.model.heatmap(),
        }
    }
}

/// Trains a coordinate network by MSE regression on `(coords, targets)`.
pub fn train(
    config: &TrainConfig,
    coords: &Array2<f64>,
    targets: &Array2<f64>,
    domain: &Domain,
    output_activation: OutputActivation,
) -> Result<(Model, TrainReport)> {
    if coords.nrows() != targets.nrows() || coords.ncols() != domain.dim() {
        return Err(Error::invalid("training coordinates and targets disagree"));
    }
    let started = Instant::now();
    let config = config.normalized(domain.dim())?;
    let model = Model::new(&config, domain, targets.ncols(), output_activation)?;
    let mut trainer = Trainer::new(model, coords)?;
    let mut objective = MseObjective {
        targets: targets.clone(),
    };
    trainer.run(&mut objective)?;
    let report = trainer.report(started);
    Ok((trainer.into_model(), report))
}
