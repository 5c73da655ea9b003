use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::Image;
use crate::tasks::{fit_image, TrainConfig, TrainReport};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    /// `sape` or `static`.
    pub method: String,
    /// The swept value (σ or grid resolution).
    pub param: f64,
    pub psnr: f64,
    #[serde(skip)]
    pub report: Option<TrainReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSweep {
    pub base_config: TrainConfig,
    pub entries: Vec<SweepEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSweep {
    pub base_config: TrainConfig,
    pub entries: Vec<SweepEntry>,
}

fn method_name(sape: bool) -> &'static str {
    if sape {
        "sape"
    } else {
        "static"
    }
}

fn spread(entries: &[SweepEntry], method: &str) -> Option<f64> {
    let values: Vec<f64> = entries.iter().filter(|e| e.method == method).map(|e| e.psnr).collect();
    if values.is_empty() {
        return None;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Some(max - min)
}

fn find<'a>(entries: &'a [SweepEntry], method: &str, param: f64) -> Option<&'a SweepEntry> {
    entries.iter().find(|e| e.method == method && e.param == param)
}

impl SigmaSweep {
    /// `max − min` PSNR across σ for one method.
    pub fn spread(&self, method: &str) -> Option<f64> {
        spread(&self.entries, method)
    }

    pub fn entry(&self, method: &str, sigma: f64) -> Option<&SweepEntry> {
        find(&self.entries, method, sigma)
    }
}

impl GridSweep {
    pub fn entry(&self, resolution: usize) -> Option<&SweepEntry> {
        find(&self.entries, "sape", resolution as f64)
    }
}

fn run_all(jobs: Vec<(TrainConfig, &'static str, f64)>, image: &Image) -> Result<Vec<SweepEntry>> {
    jobs.into_par_iter()
        .map(|(config, method, param)| {
            let (_, report, _) = fit_image(&config, image)?;
            let psnr = report
                .metric("psnr")
                .ok_or_else(|| Error::invalid("image run reported no psnr"))?;
            log::info!("{method} @ {param}: {psnr:.2} dB");
            Ok(SweepEntry {
                method: method.to_string(),
                param,
                psnr,
                report: Some(report),
            })
        })
        .collect()
}

/// Fits the image at every σ, with SAPE on and off.
pub fn sweep_sigma(base: &TrainConfig, image: &Image, sigmas: &[f64]) -> Result<SigmaSweep> {
    if sigmas.is_empty() {
        return Err(Error::invalid("sigma sweep needs at least one value"));
    }
    let mut jobs = Vec::new();
    for sape in [true, false] {
        for &sigma in sigmas {
            let mut c = base.clone();
            c.sape_enabled = sape;
            c.sigma = sigma;
            jobs.push((c, method_name(sape), sigma));
        }
    }
    Ok(SigmaSweep {
        base_config: base.clone(),
        entries: run_all(jobs, image)?,
    })
}

/// Fits the image with SAPE at every square grid resolution.
pub fn sweep_grid(base: &TrainConfig, image: &Image, resolutions: &[usize]) -> Result<GridSweep> {
    if resolutions.is_empty() {
        return Err(Error::invalid("grid sweep needs at least one resolution"));
    }
    let jobs = resolutions
        .iter()
        .map(|&r| {
            let mut c = base.clone();
            c.sape_enabled = true;
            c.spatial_enabled = true;
            c.grid_resolution = vec![r, r];
            (c, "sape", r as f64)
        })
        .collect();
    Ok(GridSweep {
        base_config: base.clone(),
        entries: run_all(jobs, image)?,
    })
}
