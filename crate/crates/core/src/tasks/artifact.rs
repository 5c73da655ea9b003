//! Run directories: everything needed to re-evaluate a run without
//! retraining.
//!
//! ```text
//! config.json     TrainConfig
//! report.json     {config, metrics, loss_trace, wall_time_s}
//! checkpoint.bin  network weights
//! basis.bin       encoding basis
//! grid.bin        mask grid clocks (masked runs only)
//! target.*        training target (bin for images/signals, txt/off for shapes)
//! output.*        reconstruction (png for 2D outputs, txt for curves/signals)
//! heatmap.*       exposed-frequency map (masked runs only)
//! ```

use std::path::Path;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::geometry::rasterize_polygon;
use crate::io::{blob, points, read_json, write_json, Image};
use crate::metrics::MetricResult;
use crate::tasks::image::predict_image;
use crate::tasks::silhouette::trace_contour;
use crate::tasks::{
    evaluate_image, evaluate_occupancy, evaluate_signal, evaluate_silhouette, ImageDataset, Model, OccupancyShape,
    SignalDataset, SilhouetteTarget, TaskKind, TrainConfig, TrainReport,
};
use crate::{Error, Result};

const OUTPUT_RASTER: usize = 256;

/// Task target kept alongside a run.
#[derive(Debug, Clone)]
pub enum RunData {
    Image(ImageDataset),
    Signal(SignalDataset),
    Silhouette(SilhouetteTarget),
    Occupancy(OccupancyShape),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub model: Model,
    pub report: TrainReport,
    pub data: RunData,
}

#[derive(Serialize, Deserialize)]
struct ImageHeader {
    width: usize,
    height: usize,
    channels: usize,
    stride: usize,
}

#[derive(Serialize, Deserialize)]
struct SignalHeader {
    train: usize,
    dense: usize,
    out_dim: usize,
    split: f64,
}

fn write_signal(path: &Path, d: &SignalDataset) -> Result<()> {
    let header = SignalHeader {
        train: d.train_coords.nrows(),
        dense: d.dense_coords.nrows(),
        out_dim: d.out_dim(),
        split: d.split,
    };
    let data: Vec<f64> = [&d.train_coords, &d.train_targets, &d.dense_coords, &d.dense_targets]
        .iter()
        .flat_map(|a| a.iter().copied())
        .collect();
    blob::write(path, &header, &data)
}

fn read_signal(path: &Path) -> Result<SignalDataset> {
    let (h, data): (SignalHeader, Vec<f64>) = blob::read(path)?;
    let shapes = [(h.train, 1), (h.train, h.out_dim), (h.dense, 1), (h.dense, h.out_dim)];
    if data.len() != shapes.iter().map(|(r, c)| r * c).sum::<usize>() {
        return Err(Error::format("signal target", "payload does not match header"));
    }
    let mut offset = 0;
    let mut parts = shapes.iter().map(|&(r, c)| {
        let a = Array2::from_shape_vec((r, c), data[offset..offset + r * c].to_vec()).expect("sized");
        offset += r * c;
        a
    });
    Ok(SignalDataset {
        train_coords: parts.next().expect("four parts"),
        train_targets: parts.next().expect("four parts"),
        dense_coords: parts.next().expect("four parts"),
        dense_targets: parts.next().expect("four parts"),
        split: h.split,
    })
}

fn lattice_coords(domain: &Domain, res: usize) -> Array2<f64> {
    let axis = domain.lattice(0, res);
    let axis_y = domain.lattice(1, res);
    // top image row is the largest y
    Array2::from_shape_fn((res * res, 2), |(k, j)| {
        let (x, y) = (k % res, k / res);
        if j == 0 {
            axis[x]
        } else {
            axis_y[res - 1 - y]
        }
    })
}

fn write_output(dir: &Path, run: &RunOutput) -> Result<()> {
    match &run.data {
        RunData::Image(d) => predict_image(&run.model, d)?.save(&dir.join("output.png")),
        RunData::Signal(d) => {
            let pred = run.model.predict(&d.dense_coords)?;
            let rows: Vec<Vec<f64>> = (0..pred.nrows())
                .map(|k| {
                    std::iter::once(d.dense_coords[[k, 0]])
                        .chain(pred.row(k).iter().copied())
                        .collect()
                })
                .collect();
            points::save(&dir.join("output.txt"), &rows)
        }
        RunData::Silhouette(_) => {
            let contour = trace_contour(&run.model, 2048)?;
            points::save(&dir.join("output.txt"), &contour)?;
            let e = run.model.config.silhouette.raster_extent;
            let raster = rasterize_polygon(&contour, OUTPUT_RASTER, &Domain::new(vec![-e, -e], vec![e, e])?)?;
            let mut pixels = Vec::with_capacity(raster.cells.len());
            for j in (0..raster.height).rev() {
                pixels.extend((0..raster.width).map(|i| f64::from(u8::from(raster.get(i, j)))));
            }
            Image::new(raster.width, raster.height, 1, pixels)?.save(&dir.join("output.png"))
        }
        RunData::Occupancy(shape) => {
            let coords = lattice_coords(&Domain::symmetric(2), OUTPUT_RASTER);
            let coords = if shape.dim() == 3 {
                // slice through z = 0
                let mut c = Array2::zeros((coords.nrows(), 3));
                c.slice_mut(s![.., 0..2]).assign(&coords);
                c
            } else {
                coords
            };
            let pred = run.model.predict(&coords)?;
            Image::new(OUTPUT_RASTER, OUTPUT_RASTER, 1, pred.column(0).to_vec())?.save(&dir.join("output.png"))
        }
    }
}

/// Writes the run directory (created if missing). Every file is written
/// atomically.
pub fn write_run(dir: &Path, run: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("config.json"), &run.model.config)?;
    write_json(&dir.join("report.json"), &run.report)?;
    run.model.save(dir)?;
    match &run.data {
        RunData::Image(d) => {
            let header = ImageHeader {
                width: d.image.width,
                height: d.image.height,
                channels: d.image.channels,
                stride: d.stride,
            };
            blob::write(&dir.join("target.bin"), &header, &d.image.data)?;
        }
        RunData::Signal(d) => write_signal(&dir.join("target.bin"), d)?,
        RunData::Silhouette(t) => t.save(&dir.join("target.txt"))?,
        RunData::Occupancy(shape) => shape.save(&dir.join(shape.file_name()))?,
    }
    write_output(dir, run)?;
    if let Some((schedule, grid)) = &run.model.mask {
        let image = (grid.resolution().len() <= 2).then(|| dir.join("heatmap.png"));
        grid.export_heatmap(schedule, &run.model.basis, &dir.join("heatmap.bin"), image.as_deref())?;
    }
    Ok(())
}

/// Loads model and target from a run directory.
pub fn load_run(dir: &Path) -> Result<(Model, RunData)> {
    let config: TrainConfig = read_json(&dir.join("config.json"))?;
    let task = config.task;
    let model = Model::load(dir, config)?;
    let data = match task {
        TaskKind::Image2d => {
            let (h, data): (ImageHeader, Vec<f64>) = blob::read(&dir.join("target.bin"))?;
            let image = Image::new(h.width, h.height, h.channels, data)?;
            RunData::Image(ImageDataset::new(image, h.stride)?)
        }
        TaskKind::Signal1d => RunData::Signal(read_signal(&dir.join("target.bin"))?),
        TaskKind::Silhouette2d => RunData::Silhouette(SilhouetteTarget::load(&dir.join("target.txt"))?),
        TaskKind::Occupancy => {
            let off = dir.join("target.off");
            let path = if off.exists() { off } else { dir.join("target.txt") };
            RunData::Occupancy(OccupancyShape::load(&path)?)
        }
    };
    Ok((model, data))
}

/// Recomputes the task metrics from a run directory.
pub fn evaluate_run(dir: &Path) -> Result<Vec<MetricResult>> {
    let (model, data) = load_run(dir)?;
    match &data {
        RunData::Image(d) => evaluate_image(&model, d),
        RunData::Signal(d) => evaluate_signal(&model, d),
        RunData::Silhouette(t) => evaluate_silhouette(&model, t),
        RunData::Occupancy(shape) => evaluate_occupancy(&model, shape),
    }
}
