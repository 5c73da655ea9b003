//! Progressive, spatially-adaptive encoding masks.
//!
//! [`MaskSchedule`] is the time law: group `g ≥ 1` ramps linearly from 0 to 1
//! over `[τ(g-1), τg]` with `τ = T / (2·n_groups)`, so every group is fully
//! revealed once the clock reaches `T/2`. Identity dimensions are always 1.
//!
//! [`MaskGrid`] keeps one progression clock per node of a regular lattice over
//! the input domain. A sample's mask is the multilinear blend of its
//! neighboring nodes' mask vectors; its loss is scattered back to the same
//! nodes with the same weights. Every `feedback_interval` iterations a node
//! whose weighted mean loss is at least `ε` advances its clock by the
//! interval; otherwise it holds (is frozen) until its loss rises again.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::encoding::EncodingBasis;
use crate::io::{blob, Image};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSchedule {
    iterations: usize,
    n_groups: usize,
    identity_dims: usize,
    tau: f64,
}

impl MaskSchedule {
    pub fn new(iterations: usize, n_groups: usize, identity_dims: usize) -> Result<Self> {
        if iterations == 0 || n_groups == 0 {
            return Err(Error::invalid(format!(
                "schedule needs T >= 1 and at least one group (T={iterations}, groups={n_groups})"
            )));
        }
        Ok(Self {
            iterations,
            n_groups,
            identity_dims,
            tau: iterations as f64 / (2.0 * n_groups as f64),
        })
    }

    pub fn for_basis(iterations: usize, basis: &EncodingBasis) -> Result<Self> {
        Self::new(iterations, basis.n_groups(), basis.input_dim())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn identity_dims(&self) -> usize {
        self.identity_dims
    }

    /// Clock value at which the last group is fully revealed (`T/2`).
    pub fn saturation_clock(&self) -> f64 {
        self.iterations as f64 / 2.0
    }

    /// `clamp((clock - τ(g-1)) / τ, 0, 1)` for group `g ≥ 1`.
    pub fn schedule_alpha(&self, clock: f64, group: usize) -> Result<f64> {
        if group == 0 {
            return Err(Error::invalid("group index must be >= 1 (group 0 is the identity)"));
        }
        if !(clock >= 0.0) {
            return Err(Error::invalid(format!("clock must be non-negative, got {clock}")));
        }
        Ok(self.ramp(clock, group))
    }

    #[inline]
    fn ramp(&self, clock: f64, group: usize) -> f64 {
        // clock / τ written as clock·2n / T so that T/2 maps to exactly n
        let progress = clock * (2 * self.n_groups) as f64 / self.iterations as f64;
        (progress - (group - 1) as f64).clamp(0.0, 1.0)
    }

    /// Per-group values `[1, α_1, …, α_n]`, index 0 being the identity group.
    pub fn group_alphas(&self, clock: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_groups + 1);
        out.push(1.0);
        out.extend((1..=self.n_groups).map(|g| self.ramp(clock, g)));
        out
    }

    /// Full per-dimension mask of a node with the given clock.
    pub fn node_alpha(&self, basis: &EncodingBasis, clock: f64) -> InterpolatedMask {
        InterpolatedMask::from_groups(basis, &self.group_alphas(clock))
    }
}

/// Mask aligned with the basis output dimensions; identity prefix is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatedMask {
    pub alpha: Vec<f64>,
}

impl InterpolatedMask {
    pub fn from_groups(basis: &EncodingBasis, group_alphas: &[f64]) -> Self {
        Self {
            alpha: basis.group_ids().iter().map(|&g| group_alphas[g]).collect(),
        }
    }
}

/// Grid node and its interpolation weight for one query point.
pub type Neighbor = (usize, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct MaskGrid {
    resolution: Vec<usize>,
    domain: Domain,
    clocks: Vec<f64>,
    frozen: Vec<bool>,
    loss_num: Vec<f64>,
    loss_den: Vec<f64>,
    epsilon: f64,
    feedback_interval: usize,
}

impl MaskGrid {
    pub fn new(resolution: Vec<usize>, domain: Domain, epsilon: f64, feedback_interval: usize) -> Result<Self> {
        if resolution.len() != domain.dim() {
            return Err(Error::invalid(format!(
                "grid resolution has {} axes, domain has {}",
                resolution.len(),
                domain.dim()
            )));
        }
        if resolution.contains(&0) {
            return Err(Error::invalid("grid resolution must be >= 1 per axis"));
        }
        if !(epsilon > 0.0) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        if feedback_interval == 0 {
            return Err(Error::invalid("feedback interval must be >= 1"));
        }
        let nodes = resolution.iter().product();
        Ok(Self {
            resolution,
            domain,
            clocks: vec![0.0; nodes],
            frozen: vec![false; nodes],
            loss_num: vec![0.0; nodes],
            loss_den: vec![0.0; nodes],
            epsilon,
            feedback_interval,
        })
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn num_nodes(&self) -> usize {
        self.clocks.len()
    }

    pub fn clocks(&self) -> &[f64] {
        &self.clocks
    }

    /// Overrides every clock; used to force a static (fully revealed) mask
    /// or to restore state.
    pub fn set_clocks(&mut self, clocks: Vec<f64>) -> Result<()> {
        if clocks.len() != self.clocks.len() || clocks.iter().any(|c| !(*c >= 0.0)) {
            return Err(Error::invalid("clock array must match the grid and be non-negative"));
        }
        self.clocks = clocks;
        Ok(())
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn feedback_interval(&self) -> usize {
        self.feedback_interval
    }

    pub fn loss_den(&self) -> &[f64] {
        &self.loss_den
    }

    /// Weighted mean loss of node `u` over the current window, if any
    /// sample touched it.
    pub fn node_loss(&self, u: usize) -> Option<f64> {
        (self.loss_den[u] > 0.0).then(|| self.loss_num[u] / self.loss_den[u])
    }

    /// Coordinates of node `u` (axis 0 varies fastest).
    pub fn node_position(&self, u: usize) -> Vec<f64> {
        let mut rest = u;
        (0..self.resolution.len())
            .map(|a| {
                let r = self.resolution[a];
                let i = rest % r;
                rest /= r;
                self.domain.lattice(a, r)[i]
            })
            .collect()
    }

    /// Multilinear neighbors of `p`: `2^d` nodes (fewer along axes of
    /// resolution 1) with weights summing to 1. Points outside the domain
    /// are clamped to the boundary.
    pub fn neighbors(&self, p: &[f64]) -> Vec<Neighbor> {
        let mut out: Vec<Neighbor> = vec![(0, 1.0)];
        let mut stride = 1;
        for (a, &r) in self.resolution.iter().enumerate() {
            let axis: [(usize, f64); 2];
            let taps: &[(usize, f64)] = if r == 1 {
                &[(0, 1.0)]
            } else {
                let (lo, hi) = (self.domain.lo[a], self.domain.hi[a]);
                let x = ((p[a] - lo) / (hi - lo) * (r - 1) as f64).clamp(0.0, (r - 1) as f64);
                let i0 = (x.floor() as usize).min(r - 2);
                let f = x - i0 as f64;
                axis = [(i0, 1.0 - f), (i0 + 1, f)];
                &axis
            };
            let mut next = Vec::with_capacity(out.len() * taps.len());
            for &(node, w) in &out {
                for &(i, wa) in taps {
                    next.push((node + i * stride, w * wa));
                }
            }
            out = next;
            stride *= r;
        }
        out
    }

    /// Per-group blended mask values `Σ_u w_u α(clock_u)`; index 0 is 1.
    pub fn blend_groups(&self, schedule: &MaskSchedule, neighbors: &[Neighbor], out: &mut Vec<f64>) {
        out.clear();
        out.resize(schedule.n_groups + 1, 0.0);
        out[0] = 1.0;
        for &(u, w) in neighbors {
            let clock = self.clocks[u];
            for (g, slot) in out.iter_mut().enumerate().skip(1) {
                *slot += w * schedule.ramp(clock, g);
            }
        }
    }

    /// Interpolated mask at an arbitrary point.
    pub fn interp_alpha(&self, schedule: &MaskSchedule, basis: &EncodingBasis, p: &[f64]) -> InterpolatedMask {
        let mut groups = Vec::new();
        self.blend_groups(schedule, &self.neighbors(p), &mut groups);
        InterpolatedMask::from_groups(basis, &groups)
    }

    /// Scatters one sample's loss onto its neighbors.
    pub fn accumulate(&mut self, neighbors: &[Neighbor], loss: f64) -> Result<()> {
        if !(loss >= 0.0) {
            return Err(Error::invalid(format!("per-sample loss must be >= 0, got {loss}")));
        }
        for &(u, w) in neighbors {
            self.loss_num[u] += w * loss;
            self.loss_den[u] += w;
        }
        Ok(())
    }

    pub fn accumulate_loss(&mut self, p: &[f64], loss: f64) -> Result<()> {
        let nb = self.neighbors(p);
        self.accumulate(&nb, loss)
    }

    /// Feedback round: nodes whose window loss is `>= ε` advance by the
    /// feedback interval, others freeze. Untouched nodes keep their state.
    /// Accumulators are cleared.
    pub fn advance(&mut self) {
        let step = self.feedback_interval as f64;
        for u in 0..self.clocks.len() {
            if let Some(loss) = self.node_loss(u) {
                if loss >= self.epsilon {
                    self.frozen[u] = false;
                    self.clocks[u] += step;
                } else {
                    self.frozen[u] = true;
                }
            }
        }
        self.loss_num.iter_mut().for_each(|v| *v = 0.0);
        self.loss_den.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Per node, the largest Lipschitz key among groups with mask > 0.5,
    /// or 0 when only the identity is exposed.
    pub fn heatmap(&self, schedule: &MaskSchedule, basis: &EncodingBasis) -> Vec<f64> {
        let keys = basis.lipschitz_keys();
        self.clocks
            .iter()
            .map(|&clock| {
                (1..=schedule.n_groups.min(keys.len()))
                    .rev()
                    .find(|&g| schedule.ramp(clock, g) > 0.5)
                    .map_or(0.0, |g| keys[g - 1])
            })
            .collect()
    }

    pub fn save(&self, path: &Path, schedule: &MaskSchedule) -> Result<()> {
        let header = GridHeader {
            format: GRID_FORMAT.to_string(),
            resolution: self.resolution.clone(),
            domain: self.domain.clone(),
            epsilon: self.epsilon,
            feedback_interval: self.feedback_interval,
            schedule: schedule.clone(),
        };
        blob::write(path, &header, &self.clocks)
    }

    pub fn load(path: &Path) -> Result<(Self, MaskSchedule)> {
        let (h, clocks): (GridHeader, Vec<f64>) = blob::read(path)?;
        if h.format != GRID_FORMAT {
            return Err(Error::format("grid", format!("unknown format {:?}", h.format)));
        }
        let mut grid = Self::new(h.resolution, h.domain, h.epsilon, h.feedback_interval)?;
        grid.set_clocks(clocks)
            .map_err(|_| Error::format("grid", "clock array does not match resolution"))?;
        let schedule = MaskSchedule::new(h.schedule.iterations, h.schedule.n_groups, h.schedule.identity_dims)?;
        Ok((grid, schedule))
    }

    /// Writes the heatmap as a raw float blob and, for 1D/2D grids, an image
    /// scaled so the largest key is white. Image format follows the extension.
    pub fn export_heatmap(
        &self,
        schedule: &MaskSchedule,
        basis: &EncodingBasis,
        raw_path: &Path,
        image_path: Option<&Path>,
    ) -> Result<Vec<f64>> {
        let values = self.heatmap(schedule, basis);
        let header = serde_json::json!({ "resolution": self.resolution });
        blob::write(raw_path, &header, &values)?;
        if let Some(path) = image_path {
            let (w, h) = match self.resolution.as_slice() {
                [w] => (*w, 1),
                [w, h] => (*w, *h),
                _ => return Ok(values),
            };
            // lattice axis 1 grows with y; images store the top row first
            let mut flipped = Vec::with_capacity(values.len());
            for row in (0..h).rev() {
                flipped.extend_from_slice(&values[row * w..(row + 1) * w]);
            }
            let max_key = basis.lipschitz_keys().last().copied().unwrap_or(0.0);
            let scaled: Vec<f64> = flipped
                .iter()
                .map(|v| if max_key > 0.0 { v / max_key } else { 0.0 })
                .collect();
            Image::new(w, h, 1, scaled)?.save(path)?;
        }
        Ok(values)
    }
}

const GRID_FORMAT: &str = "sape-grid-v1";

#[derive(Debug, Serialize, Deserialize)]
struct GridHeader {
    format: String,
    resolution: Vec<usize>,
    domain: Domain,
    epsilon: f64,
    feedback_interval: usize,
    schedule: MaskSchedule,
}
