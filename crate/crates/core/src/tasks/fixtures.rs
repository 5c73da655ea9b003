//! Synthetic targets used by the tests, the CLI `--fixture` flag and the
//! examples in the README.

use std::f64::consts::{PI, TAU};

use crate::geometry::{circle_polygon, Polygon};
use crate::io::Image;
use crate::tasks::{OccupancyShape, SignalDataset, SilhouetteTarget};
use crate::{Error, Result};

/// Checkerboard cell size of the two-tone image, in pixels.
pub const CHECKER_CELL: usize = 4;

/// Checkerboard deviation from mid-gray.
pub const CHECKER_AMPLITUDE: f64 = 0.15;

/// RGB image whose left half is a smooth color gradient and whose right half
/// is a fine gray checkerboard with sinusoidal cells.
pub fn two_tone_image(size: usize) -> Result<Image> {
    two_tone_image_with_cell(size, CHECKER_CELL)
}

pub fn two_tone_image_with_cell(size: usize, cell: usize) -> Result<Image> {
    if cell == 0 {
        return Err(Error::invalid("checker cell must be >= 1 pixel"));
    }
    let half = size / 2;
    let wave = |i: usize| (PI * (i as f64 + 0.5) / cell as f64).sin();
    Image::from_fn(size, size, 3, |x, y| {
        if x < half {
            let u = x as f64 / half.max(1) as f64;
            let v = y as f64 / size as f64;
            vec![0.2 + 0.5 * u, 0.3 + 0.4 * v, 0.6 - 0.3 * u * v]
        } else {
            vec![0.5 + CHECKER_AMPLITUDE * wave(x - half) * wave(y); 3]
        }
    })
}

pub fn constant_image(size: usize, color: [f64; 3]) -> Result<Image> {
    Image::filled(size, size, &color)
}

/// One slow cycle on `[0, 0.5)`, then a chirp whose frequency climbs
/// linearly to about 38 cycles per unit at `p = 1`.
pub fn chirp(p: f64) -> f64 {
    let phase = if p < 0.5 {
        2.0 * p
    } else {
        let q = p - 0.5;
        1.0 + 2.0 * q + 36.0 * q * q
    };
    0.5 * (TAU * phase).sin()
}

/// 512 training and 4096 evaluation samples of [`chirp`].
pub fn chirp_signal() -> Result<SignalDataset> {
    SignalDataset::from_fn(chirp, 512, 4096)
}

pub fn sine_signal(cycles: f64) -> Result<SignalDataset> {
    SignalDataset::from_fn(move |p| (TAU * cycles * p).sin(), 256, 2048)
}

pub fn square(half_side: f64) -> Vec<[f64; 2]> {
    let h = half_side;
    vec![[-h, -h], [h, -h], [h, h], [-h, h]]
}

/// Star with `points` tips alternating between the two radii.
pub fn star(points: usize, outer: f64, inner: f64) -> Vec<[f64; 2]> {
    (0..2 * points)
        .map(|k| {
            let r = if k % 2 == 0 { outer } else { inner };
            let t = PI / 2.0 + PI * k as f64 / points as f64;
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

/// Gear with trapezoidal teeth between the root and tip radii.
pub fn gear(teeth: usize, root: f64, tip: f64) -> Vec<[f64; 2]> {
    let period = TAU / teeth as f64;
    let polar = |r: f64, t: f64| [r * t.cos(), r * t.sin()];
    (0..teeth)
        .flat_map(|k| {
            let t = period * k as f64;
            [
                polar(root, t),
                polar(tip, t + 0.1 * period),
                polar(tip, t + 0.4 * period),
                polar(root, t + 0.5 * period),
            ]
        })
        .collect()
}

/// Named silhouette fixtures: `circle`, `square`, `star`, `gear`.
pub fn silhouette(name: &str) -> Result<SilhouetteTarget> {
    let vertices = match name {
        "circle" => circle_polygon([0.0, 0.0], 1.0, 256),
        "square" => square(0.7),
        "star" => star(5, 0.9, 0.4),
        "gear" => gear(12, 0.7, 0.85),
        _ => return Err(Error::invalid(format!("unknown silhouette fixture {name:?}"))),
    };
    SilhouetteTarget::new(vertices)
}

/// Named 2D occupancy fixtures: `disk`, `gear`.
pub fn occupancy_shape(name: &str) -> Result<OccupancyShape> {
    let vertices = match name {
        "disk" => circle_polygon([0.0, 0.0], 0.6, 256),
        "gear" => gear(16, 0.55, 0.7),
        _ => return Err(Error::invalid(format!("unknown occupancy fixture {name:?}"))),
    };
    Ok(OccupancyShape::Polygon(Polygon::new(vertices)?))
}
