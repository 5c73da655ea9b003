use std::f64::consts::TAU;
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;

use crate::domain::Domain;
use crate::geometry::{rasterize_polygon, sample_boundary_uniform, Polygon};
use crate::io::points;
use crate::metrics::{chamfer_symmetric, iou, nearest, MetricResult};
use crate::nn::OutputActivation;
use crate::tasks::model::Model;
use crate::tasks::trainer::{MseObjective, Objective, ObjectiveEval, Trainer};
use crate::tasks::{TaskKind, TrainConfig, TrainReport};
use crate::{Error, Result};

/// Calibration stops once the circle fit reaches this MSE.
pub const CALIBRATION_MSE: f64 = 1e-4;
/// Curve parameters used to trace the output contour for evaluation.
const DENSE_CURVE: usize = 2048;

/// Closed target contour. Self-intersecting input is accepted with a warning
/// and still rasterized even-odd.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteTarget {
    pub vertices: Vec<[f64; 2]>,
}

impl SilhouetteTarget {
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let polygon = Polygon::new(vertices).map_err(|e| Error::invalid(e.to_string()))?;
        if polygon.self_intersects() {
            log::warn!("silhouette target is self-intersecting; IoU uses even-odd fill");
        }
        Ok(Self {
            vertices: polygon.vertices,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(points::load_2d(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        points::save(path, &self.vertices)
    }

    /// Points evenly spaced by arc length along the contour.
    pub fn samples(&self, count: usize) -> Vec<[f64; 2]> {
        sample_boundary_uniform(&self.vertices, count)
    }
}

/// Evenly spaced curve parameters in `[0, 1)`, one per row.
pub fn curve_parameters(count: usize) -> Array2<f64> {
    Array2::from_shape_fn((count, 1), |(k, _)| k as f64 / count as f64)
}

fn circle_targets(params: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_fn((params.nrows(), 2), |(k, j)| {
        let t = TAU * params[[k, 0]];
        if j == 0 {
            t.cos()
        } else {
            t.sin()
        }
    })
}

fn rows_as_points(outputs: &Array2<f64>) -> Vec<[f64; 2]> {
    outputs.rows().into_iter().map(|r| [r[0], r[1]]).collect()
}

/// Symmetric Chamfer against a fixed point set. The per-sample loss is the
/// squared distance from each output point to its nearest target point.
pub struct ChamferObjective {
    pub targets: Vec<[f64; 2]>,
}

impl Objective for ChamferObjective {
    fn evaluate(&mut self, _ids: &[usize], outputs: &Array2<f64>) -> Result<ObjectiveEval> {
        let out = rows_as_points(outputs);
        let (n, m) = (out.len() as f64, self.targets.len() as f64);
        let forward = nearest(&out, &self.targets);
        let backward = nearest(&self.targets, &out);
        let mut grad = Array2::zeros(outputs.raw_dim());
        for (i, &(j, _)) in forward.iter().enumerate() {
            for c in 0..2 {
                grad[[i, c]] += 2.0 * (out[i][c] - self.targets[j][c]) / n;
            }
        }
        for (j, &(i, _)) in backward.iter().enumerate() {
            for c in 0..2 {
                grad[[i, c]] += 2.0 * (out[i][c] - self.targets[j][c]) / m;
            }
        }
        let per_sample: ndarray::Array1<f64> = forward.iter().map(|x| x.1).collect();
        let loss = per_sample.sum() / n + backward.iter().map(|x| x.1).sum::<f64>() / m;
        Ok(ObjectiveEval { loss, per_sample, grad })
    }
}

/// Fits the map `p ↦ (cos 2πp, sin 2πp)` with the mask held at its initial
/// state. Returns the model and the final calibration MSE.
pub fn calibrate_circle(config: &TrainConfig) -> Result<(Model, f64)> {
    let config = config.normalized(1)?;
    let params = curve_parameters(config.silhouette.curve_samples);
    let model = Model::new(&config, &Domain::unit(1), 2, OutputActivation::Linear)?;
    let mut trainer = Trainer::new(model, &params)?;
    trainer.set_feedback(false);
    let mut objective = MseObjective {
        targets: circle_targets(&params),
    };
    let mut loss = f64::INFINITY;
    for _ in 0..config.silhouette.calibration_iterations {
        loss = trainer.step(&mut objective)?;
        if loss < CALIBRATION_MSE {
            break;
        }
    }
    log::info!(
        "circle calibration: mse {loss:.3e} after {} iterations",
        trainer.iteration()
    );
    Ok((trainer.into_model(), loss))
}

/// Output contour traced at `count` evenly spaced curve parameters.
pub fn trace_contour(model: &Model, count: usize) -> Result<Vec<[f64; 2]>> {
    Ok(rows_as_points(&model.predict(&curve_parameters(count))?))
}

/// IoU of the rasterized output contour against the target, and symmetric
/// Chamfer between the traced contour and boundary samples of the target.
pub fn evaluate_silhouette(model: &Model, target: &SilhouetteTarget) -> Result<Vec<MetricResult>> {
    let opts = &model.config.silhouette;
    let contour = trace_contour(model, DENSE_CURVE)?;
    let e = opts.raster_extent;
    let window = Domain::new(vec![-e, -e], vec![e, e])?;
    let res = opts.raster_resolution;
    let predicted = rasterize_polygon(&contour, res, &window)?;
    let reference = rasterize_polygon(&target.vertices, res, &window)?;
    let chamfer = chamfer_symmetric(&contour, &target.samples(opts.target_samples))?;
    Ok(vec![
        MetricResult::new(
            "iou",
            iou(&predicted.cells, &reference.cells)?,
            format!("{res}x{res} raster over [-{e}, {e}]^2"),
        ),
        MetricResult::new(
            "chamfer",
            chamfer,
            format!("{DENSE_CURVE} contour points vs {} target points", opts.target_samples),
        ),
    ])
}

/// Deforms a unit circle into the target contour: circle calibration with
/// the mask frozen, then symmetric Chamfer minimization with feedback on.
/// The loss trace covers the second phase only.
pub fn fit_silhouette(config: &TrainConfig, target: &SilhouetteTarget) -> Result<(Model, TrainReport)> {
    let started = Instant::now();
    let mut config = config.normalized(1)?;
    config.task = TaskKind::Silhouette2d;
    let (model, _) = calibrate_circle(&config)?;
    let params = curve_parameters(config.silhouette.curve_samples);
    let mut trainer = Trainer::new(model, &params)?;
    let mut objective = ChamferObjective {
        targets: target.samples(config.silhouette.target_samples),
    };
    trainer.run(&mut objective)?;
    let mut report = trainer.report(started);
    let model = trainer.into_model();
    report.metrics = evaluate_silhouette(&model, target)?;
    report.wall_time_s = started.elapsed().as_secs_f64();
    Ok((model, report))
}
