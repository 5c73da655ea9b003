use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Axis-aligned box `[lo, hi]` per input dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::invalid("domain bounds must be non-empty and equally sized"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(Error::invalid(format!("empty domain {lo:?}..{hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    /// `[-1, 1]^d`, used for images and occupancy.
    pub fn symmetric(d: usize) -> Self {
        Self {
            lo: vec![-1.0; d],
            hi: vec![1.0; d],
        }
    }

    /// `[0, 1]^d`, used for 1D signals and curve parameters.
    pub fn unit(d: usize) -> Self {
        Self {
            lo: vec![0.0; d],
            hi: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Evenly spaced coordinates along `axis`, endpoints included. A single
    /// sample sits at the midpoint.
    pub fn lattice(&self, axis: usize, count: usize) -> Vec<f64> {
        let (lo, hi) = (self.lo[axis], self.hi[axis]);
        if count == 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect()
    }
}
