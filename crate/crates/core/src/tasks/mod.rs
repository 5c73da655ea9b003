//! End-to-end training: encoder → mask → MLP → loss → feedback.
//!
//! [`Trainer`] runs the shared loop; the task modules supply datasets,
//! objectives and metrics. [`TrainConfig`] carries every knob and is echoed
//! into each [`TrainReport`].

mod artifact;
pub mod fixtures;
mod image;
mod model;
mod occupancy;
mod signal;
mod silhouette;
mod sweep;
mod trainer;

use serde::{Deserialize, Serialize};

use crate::metrics::MetricResult;
use crate::{Error, Result};

pub use self::artifact::{evaluate_run, load_run, write_run, RunData, RunOutput};
pub use self::image::{evaluate_image, fit_image, predict_image, ImageDataset};
pub use self::model::Model;
pub use self::occupancy::{
    evaluate_occupancy, evaluation_samples, fit_occupancy, training_samples, LabeledPoints, OccupancyShape,
};
pub use self::signal::{evaluate_signal, fit_signal_1d, SignalDataset};
pub use self::silhouette::{
    calibrate_circle, evaluate_silhouette, fit_silhouette, trace_contour, ChamferObjective, SilhouetteTarget,
};
pub use self::sweep::{sweep_grid, sweep_sigma, GridSweep, SigmaSweep, SweepEntry};
pub use self::trainer::{train, MseObjective, Objective, ObjectiveEval, Trainer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Image2d,
    Signal1d,
    Silhouette2d,
    Occupancy,
}

impl TaskKind {
    /// Regression tasks are directly supervised; geometric tasks are not.
    pub fn is_geometric(self) -> bool {
        matches!(self, TaskKind::Silhouette2d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    None,
    Fourier,
    #[serde(alias = "rbf")]
    RbfGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub task: TaskKind,
    pub encoding: EncodingKind,
    pub sape_enabled: bool,
    pub spatial_enabled: bool,
    pub sigma: f64,
    pub num_frequencies: usize,
    /// Total optimization iterations `T`.
    pub iterations: usize,
    pub epsilon: f64,
    /// Mask grid nodes per axis; forced to 1 when `spatial_enabled` is false.
    pub grid_resolution: Vec<usize>,
    /// `None` trains full-batch.
    pub batch_size: Option<usize>,
    pub lr: f64,
    pub seed: u64,
    pub hidden_width: usize,
    pub depth: usize,
    /// Iterations between feedback rounds.
    pub feedback_interval: usize,
    /// `(grid_per_axis, bandwidth)` tiers; defaults depend on the domain.
    #[serde(default)]
    pub rbf_tiers: Option<Vec<(usize, f64)>>,
    #[serde(default)]
    pub silhouette: SilhouetteOptions,
    #[serde(default)]
    pub occupancy: OccupancyOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SilhouetteOptions {
    /// Curve parameters sampled from `[0, 1)` during optimization.
    pub curve_samples: usize,
    /// Points sampled along the target boundary for the Chamfer term.
    pub target_samples: usize,
    /// Maximum calibration iterations (stops early at MSE < 1e-4).
    pub calibration_iterations: usize,
    /// Square raster size for IoU.
    pub raster_resolution: usize,
    /// Rasterization window half-width, centered at the origin.
    pub raster_extent: f64,
}

impl Default for SilhouetteOptions {
    fn default() -> Self {
        Self {
            curve_samples: 512,
            target_samples: 1024,
            calibration_iterations: 3000,
            raster_resolution: 512,
            raster_extent: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OccupancyOptions {
    /// Training points per sampling group (uniform, σ=0.1 and σ=0.01 near-surface).
    pub points_per_group: usize,
    /// Evaluation points per set (uniform and near-surface).
    pub eval_points: usize,
    pub near_sigma: (f64, f64),
    pub eval_sigma: f64,
}

impl Default for OccupancyOptions {
    fn default() -> Self {
        Self {
            points_per_group: 10_000,
            eval_points: 10_000,
            near_sigma: (0.1, 0.01),
            eval_sigma: 0.01,
        }
    }
}

impl TrainConfig {
    /// Declared defaults per task (network size, budget, threshold).
    pub fn for_task(task: TaskKind) -> Self {
        let (width, depth, iterations, d, res) = match task {
            TaskKind::Image2d => (256, 4, 2000, 2, 32),
            TaskKind::Signal1d => (128, 3, 3000, 1, 128),
            TaskKind::Silhouette2d => (128, 3, 5000, 1, 64),
            TaskKind::Occupancy => (256, 4, 5000, 2, 32),
        };
        Self {
            task,
            encoding: EncodingKind::Fourier,
            sape_enabled: true,
            spatial_enabled: true,
            sigma: 10.0,
            num_frequencies: 128,
            iterations,
            epsilon: if task.is_geometric() { 1e-2 } else { 1e-3 },
            grid_resolution: vec![res; d],
            batch_size: match task {
                TaskKind::Occupancy => Some(4096),
                _ => None,
            },
            lr: 1e-3,
            seed: 0,
            hidden_width: width,
            depth,
            feedback_interval: 1,
            rbf_tiers: None,
            silhouette: SilhouetteOptions::default(),
            occupancy: OccupancyOptions::default(),
        }
    }

    /// Checks invariants and applies the ablation switches: spatial off
    /// collapses the grid to a single node.
    pub fn normalized(&self, input_dim: usize) -> Result<Self> {
        let mut c = self.clone();
        if !(c.epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive, got {}", c.epsilon)));
        }
        if c.iterations == 0 {
            return Err(Error::invalid("iterations must be >= 1"));
        }
        if c.encoding == EncodingKind::Fourier && (!(c.sigma > 0.0) || c.num_frequencies == 0) {
            return Err(Error::invalid(
                "fourier encoding needs sigma > 0 and at least one frequency",
            ));
        }
        if !(c.lr > 0.0) || c.hidden_width == 0 || c.depth == 0 || c.feedback_interval == 0 {
            return Err(Error::invalid(
                "lr, width, depth and feedback interval must be positive",
            ));
        }
        if c.batch_size == Some(0) {
            return Err(Error::invalid("batch size must be >= 1"));
        }
        if c.grid_resolution.len() == 1 && input_dim > 1 {
            c.grid_resolution = vec![c.grid_resolution[0]; input_dim];
        }
        if c.grid_resolution.len() != input_dim || c.grid_resolution.contains(&0) {
            return Err(Error::invalid(format!(
                "grid resolution {:?} does not fit input dimension {input_dim}",
                c.grid_resolution
            )));
        }
        if !c.spatial_enabled {
            c.grid_resolution = vec![1; input_dim];
        }
        Ok(c)
    }

    pub fn basis_seed(&self) -> u64 {
        self.seed
    }

    pub fn init_seed(&self) -> u64 {
        self.seed.wrapping_add(0x9e37_79b9_7f4a_7c15)
    }

    pub fn batch_seed(&self) -> u64 {
        self.seed.wrapping_add(0x6a09_e667_f3bc_c909)
    }

    pub fn data_seed(&self) -> u64 {
        self.seed.wrapping_add(0xbb67_ae85_84ca_a73b)
    }
}

/// Outcome of one run. `report.json` holds exactly the serialized fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub metrics: Vec<MetricResult>,
    pub loss_trace: Vec<f64>,
    pub wall_time_s: f64,
    /// Mask grid clocks after `T/2` iterations (masked runs only).
    #[serde(skip)]
    pub clocks_at_half: Option<Vec<f64>>,
    /// Largest exposed Lipschitz key per grid node at the end of training.
    #[serde(skip)]
    pub heatmap: Option<Vec<f64>>,
}

impl TrainReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.name == name).map(|m| m.value)
    }
}
