use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::Domain;
use crate::geometry::{jitter, MeshShape, Polygon, Shape};
use crate::io::mesh::TriangleMesh;
use crate::io::{atomic_write, points};
use crate::metrics::{iou, MetricResult};
use crate::nn::OutputActivation;
use crate::tasks::model::Model;
use crate::tasks::{train, OccupancyOptions, TaskKind, TrainConfig, TrainReport};
use crate::{Error, Result};

/// Points, one per row, with their inside/outside labels.
pub type LabeledPoints = (Array2<f64>, Vec<bool>);

/// Watertight shape with an inside/outside oracle.
#[derive(Debug, Clone)]
pub enum OccupancyShape {
    Polygon(Polygon),
    Mesh(MeshShape),
}

impl OccupancyShape {
    /// `.off`/`.obj` load as meshes, anything else as a polygon point list.
    pub fn load(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        if ext == "off" || ext == "obj" {
            Ok(Self::Mesh(MeshShape::new(TriangleMesh::load(path)?)?))
        } else {
            Ok(Self::Polygon(Polygon::new(points::load_2d(path)?)?))
        }
    }

    /// Polygons save as point lists, meshes as OFF.
    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            Self::Polygon(p) => points::save(path, &p.vertices),
            Self::Mesh(m) => atomic_write(path, m.mesh().to_off().as_bytes()),
        }
    }

    /// Conventional file name inside a run directory.
    pub fn file_name(&self) -> &'static str {
        match self {
            Self::Polygon(_) => "target.txt",
            Self::Mesh(_) => "target.off",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Polygon(p) => p.dim(),
            Self::Mesh(m) => m.dim(),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Self::Polygon(s) => s.contains(p),
            Self::Mesh(s) => s.contains(p),
        }
    }

    pub fn sample_surface<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
        match self {
            Self::Polygon(s) => s.sample_surface(count, rng),
            Self::Mesh(s) => s.sample_surface(count, rng),
        }
    }

    fn labeled(&self, pts: &[Vec<f64>]) -> (Array2<f64>, Vec<bool>) {
        let d = self.dim();
        let coords = Array2::from_shape_fn((pts.len(), d), |(i, j)| pts[i][j]);
        let labels = pts.iter().map(|p| self.contains(p)).collect();
        (coords, labels)
    }
}

fn uniform<R: Rng + ?Sized>(count: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

fn near_surface<R: Rng + ?Sized>(shape: &OccupancyShape, count: usize, sigma: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let mut pts = shape.sample_surface(count, rng);
    jitter(&mut pts, sigma, rng);
    pts
}

/// Three equal groups: uniform in `[-1, 1]^d`, and surface samples jittered
/// by each of the two near-surface deviations.
pub fn training_samples(shape: &OccupancyShape, opts: &OccupancyOptions, seed: u64) -> LabeledPoints {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = opts.points_per_group;
    let mut pts = uniform(n, shape.dim(), &mut rng);
    pts.extend(near_surface(shape, n, opts.near_sigma.0, &mut rng));
    pts.extend(near_surface(shape, n, opts.near_sigma.1, &mut rng));
    shape.labeled(&pts)
}

/// Fresh uniform and near-surface evaluation sets, disjoint in stream from
/// the training samples.
pub fn evaluation_samples(
    shape: &OccupancyShape,
    opts: &OccupancyOptions,
    seed: u64,
) -> (LabeledPoints, LabeledPoints) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995_0000_0001);
    let uni = uniform(opts.eval_points, shape.dim(), &mut rng);
    let near = near_surface(shape, opts.eval_points, opts.eval_sigma, &mut rng);
    (shape.labeled(&uni), shape.labeled(&near))
}

fn occupied(model: &Model, coords: &Array2<f64>) -> Result<Vec<bool>> {
    Ok(model.predict(coords)?.column(0).iter().map(|&v| v > 0.5).collect())
}

/// IoU on uniform and near-surface samples (and their mean), plus the share
/// of outside uniform samples predicted inside.
pub fn evaluate_occupancy(model: &Model, shape: &OccupancyShape) -> Result<Vec<MetricResult>> {
    let opts = &model.config.occupancy;
    let ((uni_x, uni_y), (near_x, near_y)) = evaluation_samples(shape, opts, model.config.data_seed());
    let uni_pred = occupied(model, &uni_x)?;
    let near_pred = occupied(model, &near_x)?;
    let iou_uniform = iou(&uni_pred, &uni_y)?;
    let iou_surface = iou(&near_pred, &near_y)?;
    let outside = uni_y.iter().filter(|&&inside| !inside).count();
    let false_pos = uni_pred.iter().zip(&uni_y).filter(|&(&p, &y)| p && !y).count();
    let fpr = if outside == 0 {
        0.0
    } else {
        false_pos as f64 / outside as f64
    };
    let n = opts.eval_points;
    Ok(vec![
        MetricResult::new(
            "iou",
            0.5 * (iou_uniform + iou_surface),
            format!("mean of {n} uniform and {n} near-surface IoU"),
        ),
        MetricResult::new("iou_uniform", iou_uniform, format!("{n} uniform samples")),
        MetricResult::new(
            "iou_surface",
            iou_surface,
            format!("{n} near-surface samples (sigma {})", opts.eval_sigma),
        ),
        MetricResult::new(
            "uniform_false_positive_rate",
            fpr,
            "outside points among the uniform samples",
        ),
    ])
}

/// Trains a binary occupancy classifier by MSE on sigmoid outputs.
pub fn fit_occupancy(config: &TrainConfig, shape: &OccupancyShape) -> Result<(Model, TrainReport)> {
    let d = shape.dim();
    if d != 2 && d != 3 {
        return Err(Error::invalid(format!("occupancy needs a 2D or 3D shape, got {d}D")));
    }
    let mut config = config.clone();
    config.task = TaskKind::Occupancy;
    let (coords, labels) = training_samples(shape, &config.occupancy, config.data_seed());
    let targets = Array2::from_shape_fn((labels.len(), 1), |(i, _)| f64::from(u8::from(labels[i])));
    let (model, mut report) = train(
        &config,
        &coords,
        &targets,
        &Domain::symmetric(d),
        OutputActivation::Sigmoid,
    )?;
    report.metrics = evaluate_occupancy(&model, shape)?;
    Ok((model, report))
}
