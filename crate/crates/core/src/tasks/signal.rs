use ndarray::Array2;

use crate::domain::Domain;
use crate::metrics::{mse, MetricResult};
use crate::nn::OutputActivation;
use crate::tasks::model::Model;
use crate::tasks::{train, TaskKind, TrainConfig, TrainReport};
use crate::{Error, Result};

/// 1D regression data on `p ∈ [0, 1]`: a sparse training set and a dense
/// evaluation set, with a split point separating the two reported halves.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalDataset {
    pub train_coords: Array2<f64>,
    pub train_targets: Array2<f64>,
    pub dense_coords: Array2<f64>,
    pub dense_targets: Array2<f64>,
    pub split: f64,
}

fn column(values: impl Iterator<Item = f64>) -> Array2<f64> {
    let v: Vec<f64> = values.collect();
    let n = v.len();
    Array2::from_shape_vec((n, 1), v).expect("column vector")
}

fn even_grid(count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |k| if count == 1 { 0.5 } else { k as f64 / (count - 1) as f64 })
}

impl SignalDataset {
    /// Samples `f` at `train_count` and `dense_count` evenly spaced points
    /// of `[0, 1]`, endpoints included.
    pub fn from_fn(f: impl Fn(f64) -> f64, train_count: usize, dense_count: usize) -> Result<Self> {
        if train_count < 2 || dense_count < 2 {
            return Err(Error::invalid("need at least two train and dense samples"));
        }
        let train_coords = column(even_grid(train_count));
        let dense_coords = column(even_grid(dense_count));
        let train_targets = train_coords.mapv(&f);
        let dense_targets = dense_coords.mapv(&f);
        Ok(Self {
            train_coords,
            train_targets,
            dense_coords,
            dense_targets,
            split: 0.5,
        })
    }

    /// Rows `p y₁ … y_k`. Every row is used for evaluation; even-indexed rows
    /// (after sorting by `p`) are used for training.
    pub fn from_rows(mut rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() < 4 || rows[0].len() < 2 {
            return Err(Error::invalid("signal needs at least 4 rows of `p y`"));
        }
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let out = rows[0].len() - 1;
        let to_arrays = |sel: &[&Vec<f64>]| {
            let coords = column(sel.iter().map(|r| r[0]));
            let targets = Array2::from_shape_fn((sel.len(), out), |(i, j)| sel[i][j + 1]);
            (coords, targets)
        };
        let all: Vec<&Vec<f64>> = rows.iter().collect();
        let train: Vec<&Vec<f64>> = rows.iter().step_by(2).collect();
        let (dense_coords, dense_targets) = to_arrays(&all);
        let (train_coords, train_targets) = to_arrays(&train);
        Ok(Self {
            train_coords,
            train_targets,
            dense_coords,
            dense_targets,
            split: 0.5,
        })
    }

    pub fn out_dim(&self) -> usize {
        self.train_targets.ncols()
    }
}

fn region_mse(pred: &Array2<f64>, data: &SignalDataset, keep: impl Fn(f64) -> bool) -> Result<f64> {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (k, p) in data.dense_coords.column(0).iter().enumerate() {
        if keep(*p) {
            a.extend(pred.row(k).iter().copied());
            b.extend(data.dense_targets.row(k).iter().copied());
        }
    }
    mse(&a, &b)
}

/// Dense MSE overall and on either side of the split point.
pub fn evaluate_signal(model: &Model, data: &SignalDataset) -> Result<Vec<MetricResult>> {
    let pred = model.predict(&data.dense_coords)?;
    let s = data.split;
    Ok(vec![
        MetricResult::new("mse", region_mse(&pred, data, |_| true)?, "dense samples"),
        MetricResult::new(
            "mse_left",
            region_mse(&pred, data, |p| p < s)?,
            format!("dense samples p < {s}"),
        ),
        MetricResult::new(
            "mse_right",
            region_mse(&pred, data, |p| p >= s)?,
            format!("dense samples p >= {s}"),
        ),
    ])
}

pub fn fit_signal_1d(config: &TrainConfig, data: &SignalDataset) -> Result<(Model, TrainReport)> {
    let mut config = config.clone();
    config.task = TaskKind::Signal1d;
    let (model, mut report) = train(
        &config,
        &data.train_coords,
        &data.train_targets,
        &Domain::unit(1),
        OutputActivation::Linear,
    )?;
    report.metrics = evaluate_signal(&model, data)?;
    Ok((model, report))
}
