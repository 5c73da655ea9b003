//! Float images plus PNG and binary PNM (P5/P6) codecs.
//!
//! Pixels are stored row-major with interleaved channels as `f64` in
//! `[0, 1]`. Only gray (1 channel) and RGB (3 channels) are represented;
//! alpha is dropped on load. 8-bit files round-trip exactly.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::invalid(format!(
                "{}x{}x{} image needs {} values, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, color: &[f64]) -> Result<Self> {
        let data = (0..width * height).flat_map(|_| color.iter().copied()).collect();
        Self::new(width, height, color.len(), data)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                if px.len() != channels {
                    return Err(Error::invalid("pixel function returned wrong channel count"));
                }
                data.extend(px);
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let o = (y * self.width + x) * self.channels;
        &self.data[o..o + self.channels]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Gray image from a scalar field, linearly rescaled so the maximum maps to 1.
    pub fn from_field(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        let max = values.iter().copied().fold(0.0f64, f64::max);
        let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
        Self::new(
            width,
            height,
            1,
            values.iter().map(|v| (v * scale).clamp(0.0, 1.0)).collect(),
        )
    }

    fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    /// Loads PNG, PGM or PPM based on the file extension.
    pub fn load(path: &Path) -> Result<Self> {
        match extension(path).as_str() {
            "png" => read_png(path),
            "pgm" | "ppm" | "pnm" => {
                let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
                decode_pnm(&bytes)
            }
            other => Err(Error::invalid(format!("unsupported image extension {other:?}"))),
        }
    }

    /// Saves as PNG, or binary PGM/PPM (8-bit), based on the extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        match extension(path).as_str() {
            "png" => {
                let mut bytes = Vec::new();
                self.encode_png(&mut bytes)?;
                super::atomic_write(path, &bytes)
            }
            "pgm" | "ppm" | "pnm" => super::atomic_write(path, &self.encode_pnm()),
            other => Err(Error::invalid(format!("unsupported image extension {other:?}"))),
        }
    }

    pub fn encode_png(&self, out: &mut Vec<u8>) -> Result<()> {
        let mut enc = png::Encoder::new(BufWriter::new(out), self.width as u32, self.height as u32);
        enc.set_color(if self.channels == 1 {
            png::ColorType::Grayscale
        } else {
            png::ColorType::Rgb
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(|e| Error::format("png", e.to_string()))?;
        writer
            .write_image_data(&self.to_u8())
            .map_err(|e| Error::format("png", e.to_string()))?;
        Ok(())
    }

    /// Binary P5 (gray) or P6 (RGB), maxval 255.
    pub fn encode_pnm(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.to_u8());
        out
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn read_png(path: &Path) -> Result<Image> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_png(std::io::BufReader::new(file))
}

pub fn decode_png<R: std::io::Read>(reader: R) -> Result<Image> {
    let bad = |e: png::DecodingError| Error::format("png", e.to_string());
    let mut decoder = png::Decoder::new(reader);
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(bad)?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(bad)?;
    let buf = &buf[..info.buffer_size()];
    let (color, depth) = (info.color_type, info.bit_depth);
    let samples: Vec<f64> = match depth {
        png::BitDepth::Sixteen => buf
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
            .collect(),
        _ => buf.iter().map(|&b| b as f64 / 255.0).collect(),
    };
    let (stride, keep) = match color {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => {
            return Err(Error::format("png", "palette was not expanded"));
        }
    };
    let data = samples
        .chunks_exact(stride)
        .flat_map(|px| px[..keep].iter().copied())
        .collect();
    Image::new(info.width as usize, info.height as usize, keep, data)
}

/// Parses binary P5/P6 with 8- or 16-bit samples.
pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format("pnm", "truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates header from raster
    pos += 1;
    let channels = match fields[0].as_str() {
        "P5" => 1,
        "P6" => 3,
        m => return Err(Error::format("pnm", format!("unsupported magic {m:?}"))),
    };
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::format("pnm", format!("bad header field {s:?}")))
    };
    let (width, height, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format("pnm", format!("maxval {maxval} out of range")));
    }
    let n = width * height * channels;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    let data: Vec<f64> = if maxval < 256 {
        if raster.len() < n {
            return Err(Error::format("pnm", "truncated raster"));
        }
        raster[..n].iter().map(|&b| b as f64 / maxval as f64).collect()
    } else {
        if raster.len() < 2 * n {
            return Err(Error::format("pnm", "truncated raster"));
        }
        raster[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / maxval as f64)
            .collect()
    };
    Image::new(width, height, channels, data)
}
