use ndarray::Array2;

use crate::domain::Domain;
use crate::io::Image;
use crate::metrics::{mse, psnr, psnr_from_mse, MetricResult};
use crate::nn::OutputActivation;
use crate::tasks::model::{rows_of, Model};
use crate::tasks::{train, TaskKind, TrainConfig, TrainReport};
use crate::{Error, Result};

/// Full-batch up to this many pixels, minibatches above.
const FULL_BATCH_PIXELS: usize = 64 * 64;
const MINIBATCH: usize = 8192;

/// Pixels of an image as coordinate samples in `[-1, 1]²`.
///
/// The training subset is the regular lattice of every `stride`-th pixel
/// along both axes (stride 2 keeps 25% of the pixels).
#[derive(Debug, Clone)]
pub struct ImageDataset {
    pub image: Image,
    /// One row per pixel, row-major over the image (x fastest).
    pub coords: Array2<f64>,
    pub targets: Array2<f64>,
    pub train_ids: Vec<usize>,
    pub stride: usize,
}

/// Pixel index `i` of `n` mapped to `[-1, 1]`, endpoints inclusive.
pub fn pixel_coordinate(i: usize, n: usize) -> f64 {
    if n == 1 {
        0.0
    } else {
        -1.0 + 2.0 * i as f64 / (n - 1) as f64
    }
}

impl ImageDataset {
    pub fn new(image: Image, stride: usize) -> Result<Self> {
        if image.width < 8 || image.height < 8 {
            return Err(Error::invalid(format!(
                "image must be at least 8x8, got {}x{}",
                image.width, image.height
            )));
        }
        if stride == 0 {
            return Err(Error::invalid("training stride must be >= 1"));
        }
        let (w, h, c) = (image.width, image.height, image.channels);
        let mut coords = Array2::zeros((w * h, 2));
        let targets =
            Array2::from_shape_vec((w * h, c), image.data.clone()).map_err(|e| Error::invalid(e.to_string()))?;
        let mut train_ids = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let k = y * w + x;
                coords[[k, 0]] = pixel_coordinate(x, w);
                coords[[k, 1]] = pixel_coordinate(y, h);
                if x % stride == 0 && y % stride == 0 {
                    train_ids.push(k);
                }
            }
        }
        Ok(Self {
            image,
            coords,
            targets,
            train_ids,
            stride,
        })
    }

    pub fn train_coords(&self) -> Array2<f64> {
        rows_of(&self.coords, &self.train_ids)
    }

    pub fn train_targets(&self) -> Array2<f64> {
        rows_of(&self.targets, &self.train_ids)
    }

    /// Pixel ids with `x < width / 2`.
    pub fn left_half(&self) -> Vec<usize> {
        (0..self.coords.nrows())
            .filter(|k| k % self.image.width < self.image.width / 2)
            .collect()
    }

    pub fn right_half(&self) -> Vec<usize> {
        (0..self.coords.nrows())
            .filter(|k| k % self.image.width >= self.image.width / 2)
            .collect()
    }
}

/// Reconstructs the full image from a trained model.
pub fn predict_image(model: &Model, data: &ImageDataset) -> Result<Image> {
    let out = model.predict(&data.coords)?;
    Image::new(
        data.image.width,
        data.image.height,
        data.image.channels,
        out.iter().copied().collect(),
    )
}

fn region_psnr(pred: &Image, reference: &Image, ids: &[usize]) -> Result<f64> {
    let c = reference.channels;
    let gather = |img: &Image| -> Vec<f64> {
        ids.iter()
            .flat_map(|&k| img.data[k * c..(k + 1) * c].iter().copied())
            .collect()
    };
    Ok(psnr_from_mse(mse(&gather(pred), &gather(reference))?))
}

/// PSNR over the entire image, plus held-out pixels and the two halves.
pub fn evaluate_image(model: &Model, data: &ImageDataset) -> Result<Vec<MetricResult>> {
    let pred = predict_image(model, data)?;
    let train: std::collections::HashSet<usize> = data.train_ids.iter().copied().collect();
    let held_out: Vec<usize> = (0..data.coords.nrows()).filter(|k| !train.contains(k)).collect();
    let mut metrics = vec![MetricResult::new("psnr", psnr(&pred, &data.image)?, "entire image")];
    if !held_out.is_empty() {
        metrics.push(MetricResult::new(
            "psnr_held_out",
            region_psnr(&pred, &data.image, &held_out)?,
            "pixels not used for training",
        ));
    }
    metrics.push(MetricResult::new(
        "psnr_left",
        region_psnr(&pred, &data.image, &data.left_half())?,
        "left half of the image",
    ));
    metrics.push(MetricResult::new(
        "psnr_right",
        region_psnr(&pred, &data.image, &data.right_half())?,
        "right half of the image",
    ));
    Ok(metrics)
}

/// Regresses RGB (or gray) values from pixel coordinates on the stride-2
/// subsample and evaluates on every pixel.
pub fn fit_image(config: &TrainConfig, image: &Image) -> Result<(Model, TrainReport, ImageDataset)> {
    let data = ImageDataset::new(image.clone(), 2)?;
    let mut config = config.clone();
    config.task = TaskKind::Image2d;
    if config.batch_size.is_none() && image.width * image.height > FULL_BATCH_PIXELS {
        config.batch_size = Some(MINIBATCH);
    }
    let (model, mut report) = train(
        &config,
        &data.train_coords(),
        &data.train_targets(),
        &Domain::symmetric(2),
        OutputActivation::Sigmoid,
    )?;
    report.metrics = evaluate_image(&model, &data)?;
    Ok((model, report, data))
}
