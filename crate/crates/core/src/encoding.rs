//! Positional encodings ordered by Lipschitz constant.
//!
//! Every basis starts with the `d` identity functionals `e_i(p) = p_i`
//! (group 0). The remaining output dimensions are partitioned into
//! progression groups `1..=n_groups` whose Lipschitz keys are non-decreasing:
//!
//! - Fourier features: one group per frequency `b`, contributing the pair
//!   `(cos 2π bᵀp, sin 2π bᵀp)`; key `‖b‖`.
//! - RBF grid: one group per bandwidth tier of Gaussian bumps on a regular
//!   lattice; key `1 / h`.

use std::path::Path;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use crate::domain::Domain;
use crate::io::blob;
use crate::{Error, Result};

use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    IdentityOnly,
    Fourier,
    RbfGrid,
}

/// Gaussian bumps `exp(-‖p - c‖² / 2h²)` sharing one bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfTier {
    /// One center per row.
    pub centers: Array2<f64>,
    pub bandwidth: f64,
    pub grid_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingBasis {
    kind: BasisKind,
    d: usize,
    /// Fourier frequencies, one per row, in group order.
    frequencies: Array2<f64>,
    tiers: Vec<RbfTier>,
    sigma: Option<f64>,
    seed: Option<u64>,
    group_ids: Vec<usize>,
    lipschitz_keys: Vec<f64>,
}

/// Stable permutation sorting `keys` ascending. Ties keep their input order.
pub fn lipschitz_order_of(keys: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
    idx
}

/// Permutation of the basis' non-identity groups into ascending key order.
/// Identity for any basis produced by the public constructors.
pub fn lipschitz_order(basis: &EncodingBasis) -> Vec<usize> {
    lipschitz_order_of(&basis.lipschitz_keys)
}

/// Draws `num_frequencies` vectors with i.i.d. `N(0, σ²)` components and
/// sorts them by Euclidean norm.
pub fn sample_fourier_basis(d: usize, num_frequencies: usize, sigma: f64, seed: u64) -> Result<EncodingBasis> {
    if d == 0 {
        return Err(Error::invalid("input dimension must be >= 1"));
    }
    if num_frequencies == 0 {
        return Err(Error::invalid("need at least one frequency"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = Array2::from_shape_simple_fn((num_frequencies, d), || normal.sample(&mut rng));
    let mut basis = EncodingBasis::fourier_unsorted(raw)?;
    basis.sigma = Some(sigma);
    basis.seed = Some(seed);
    Ok(basis.sorted())
}

/// Single-tier RBF grid with `grid_per_axis^d` centers spanning `domain`.
pub fn build_rbf_grid_basis(d: usize, grid_per_axis: usize, bandwidth: f64, domain: &Domain) -> Result<EncodingBasis> {
    build_rbf_tiers(d, &[(grid_per_axis, bandwidth)], domain)
}

/// RBF grid with several `(grid_per_axis, bandwidth)` tiers, ordered by
/// ascending key `1/h` (widest bumps first).
pub fn build_rbf_tiers(d: usize, tiers: &[(usize, f64)], domain: &Domain) -> Result<EncodingBasis> {
    if domain.dim() != d {
        return Err(Error::invalid("domain dimension does not match d"));
    }
    if tiers.is_empty() {
        return Err(Error::invalid("need at least one RBF tier"));
    }
    let mut built = Vec::with_capacity(tiers.len());
    for &(grid, bandwidth) in tiers {
        if grid == 0 {
            return Err(Error::invalid("grid_per_axis must be >= 1"));
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
        }
        let axes: Vec<Vec<f64>> = (0..d).map(|a| domain.lattice(a, grid)).collect();
        let count = grid.pow(d as u32);
        let mut centers = Array2::zeros((count, d));
        for k in 0..count {
            let mut rest = k;
            for a in 0..d {
                centers[[k, a]] = axes[a][rest % grid];
                rest /= grid;
            }
        }
        built.push(RbfTier {
            centers,
            bandwidth,
            grid_per_axis: grid,
        });
    }
    let keys: Vec<f64> = built.iter().map(|t| 1.0 / t.bandwidth).collect();
    let order = lipschitz_order_of(&keys);
    let tiers: Vec<RbfTier> = order.iter().map(|&i| built[i].clone()).collect();
    Ok(EncodingBasis::from_rbf_tiers(d, tiers))
}

/// Default tier set: lattices of increasing density whose bandwidth equals
/// the lattice spacing.
pub fn default_rbf_tiers(domain: &Domain) -> Vec<(usize, f64)> {
    let grids: &[usize] = match domain.dim() {
        1 => &[8, 16, 32, 64, 128],
        2 => &[4, 8, 16, 32],
        _ => &[4, 8, 12],
    };
    let extent = (0..domain.dim())
        .map(|a| domain.hi[a] - domain.lo[a])
        .fold(0.0, f64::max);
    grids.iter().map(|&g| (g, extent / (g - 1) as f64)).collect()
}

impl EncodingBasis {
    pub fn identity(d: usize) -> Self {
        Self {
            kind: BasisKind::IdentityOnly,
            d,
            frequencies: Array2::zeros((0, d)),
            tiers: Vec::new(),
            sigma: None,
            seed: None,
            group_ids: vec![0; d],
            lipschitz_keys: Vec::new(),
        }
    }

    /// Fourier basis from explicit frequencies (one per row), sorted by norm.
    pub fn fourier(frequencies: Array2<f64>) -> Result<Self> {
        Ok(Self::fourier_unsorted(frequencies)?.sorted())
    }

    /// Fourier basis keeping the given frequency order, which need not be
    /// sorted. Use [`EncodingBasis::sorted`] before training.
    pub fn fourier_unsorted(frequencies: Array2<f64>) -> Result<Self> {
        let d = frequencies.ncols();
        if d == 0 {
            return Err(Error::invalid("frequencies must have at least one column"));
        }
        if frequencies.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("frequencies must be finite"));
        }
        let m = frequencies.nrows();
        let mut group_ids = vec![0; d];
        for g in 1..=m {
            group_ids.push(g);
            group_ids.push(g);
        }
        let lipschitz_keys = frequencies
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        Ok(Self {
            kind: BasisKind::Fourier,
            d,
            frequencies,
            tiers: Vec::new(),
            sigma: None,
            seed: None,
            group_ids,
            lipschitz_keys,
        })
    }

    fn from_rbf_tiers(d: usize, tiers: Vec<RbfTier>) -> Self {
        let mut group_ids = vec![0; d];
        for (g, t) in tiers.iter().enumerate() {
            group_ids.extend(std::iter::repeat_n(g + 1, t.centers.nrows()));
        }
        let lipschitz_keys = tiers.iter().map(|t| 1.0 / t.bandwidth).collect();
        Self {
            kind: BasisKind::RbfGrid,
            d,
            frequencies: Array2::zeros((0, d)),
            tiers,
            sigma: None,
            seed: None,
            group_ids,
            lipschitz_keys,
        }
    }

    /// Reorders groups by ascending Lipschitz key (stable).
    pub fn sorted(self) -> Self {
        let order = lipschitz_order(&self);
        if order.iter().enumerate().all(|(i, &j)| i == j) {
            return self;
        }
        match self.kind {
            BasisKind::Fourier => {
                let freqs = self.frequencies.select(ndarray::Axis(0), &order);
                let mut out = Self::fourier_unsorted(freqs).expect("already validated");
                out.sigma = self.sigma;
                out.seed = self.seed;
                out
            }
            BasisKind::RbfGrid => {
                let tiers = order.iter().map(|&i| self.tiers[i].clone()).collect();
                Self::from_rbf_tiers(self.d, tiers)
            }
            BasisKind::IdentityOnly => self,
        }
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.d
    }

    pub fn output_dim(&self) -> usize {
        self.group_ids.len()
    }

    pub fn n_groups(&self) -> usize {
        self.lipschitz_keys.len()
    }

    /// Progression group of each output dimension; 0 is the identity group.
    pub fn group_ids(&self) -> &[usize] {
        &self.group_ids
    }

    /// Key of group `g` is `lipschitz_keys()[g - 1]`.
    pub fn lipschitz_keys(&self) -> &[f64] {
        &self.lipschitz_keys
    }

    pub fn frequencies(&self) -> &Array2<f64> {
        &self.frequencies
    }

    pub fn tiers(&self) -> &[RbfTier] {
        &self.tiers
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn encode(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.d {
            return Err(Error::invalid(format!(
                "point has {} coordinates, basis expects {}",
                p.len(),
                self.d
            )));
        }
        let mut out = vec![0.0; self.output_dim()];
        self.encode_into(p, &mut out);
        Ok(out)
    }

    fn encode_into(&self, p: &[f64], out: &mut [f64]) {
        out[..self.d].copy_from_slice(p);
        let mut k = self.d;
        match self.kind {
            BasisKind::IdentityOnly => {}
            BasisKind::Fourier => {
                for b in self.frequencies.rows() {
                    let phase = TAU * b.iter().zip(p).map(|(bi, pi)| bi * pi).sum::<f64>();
                    let (s, c) = phase.sin_cos();
                    out[k] = c;
                    out[k + 1] = s;
                    k += 2;
                }
            }
            BasisKind::RbfGrid => {
                for tier in &self.tiers {
                    let inv = 1.0 / (2.0 * tier.bandwidth * tier.bandwidth);
                    for c in tier.centers.rows() {
                        let r2: f64 = c.iter().zip(p).map(|(ci, pi)| (pi - ci) * (pi - ci)).sum();
                        out[k] = (-r2 * inv).exp();
                        k += 1;
                    }
                }
            }
        }
    }

    /// Encodes every row of `coords`.
    pub fn encode_batch(&self, coords: &Array2<f64>) -> Result<Array2<f64>> {
        if coords.ncols() != self.d {
            return Err(Error::invalid(format!(
                "coordinates have {} columns, basis expects {}",
                coords.ncols(),
                self.d
            )));
        }
        let mut out = Array2::zeros((coords.nrows(), self.output_dim()));
        let mut scratch = vec![0.0; self.d];
        for (row, mut dst) in coords.rows().into_iter().zip(out.rows_mut()) {
            scratch.iter_mut().zip(row.iter()).for_each(|(s, v)| *s = *v);
            self.encode_into(&scratch, dst.as_slice_mut().expect("standard layout"));
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = BasisHeader {
            kind: self.kind,
            d: self.d,
            n: self.output_dim(),
            sigma: self.sigma,
            seed: self.seed,
            tiers: self
                .tiers
                .iter()
                .map(|t| (t.grid_per_axis, t.bandwidth, t.centers.nrows()))
                .collect(),
        };
        let data: Vec<f64> = match self.kind {
            BasisKind::Fourier => self.frequencies.iter().copied().collect(),
            BasisKind::RbfGrid => self.tiers.iter().flat_map(|t| t.centers.iter().copied()).collect(),
            BasisKind::IdentityOnly => Vec::new(),
        };
        blob::write(path, &header, &data)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (h, data): (BasisHeader, Vec<f64>) = blob::read(path)?;
        let bad = |msg: &str| Error::format("basis", msg.to_string());
        let basis = match h.kind {
            BasisKind::IdentityOnly => Self::identity(h.d),
            BasisKind::Fourier => {
                if h.d == 0 || data.len() % h.d != 0 {
                    return Err(bad("frequency table size"));
                }
                let freqs = Array2::from_shape_vec((data.len() / h.d, h.d), data).map_err(|e| bad(&e.to_string()))?;
                let mut b = Self::fourier_unsorted(freqs)?;
                b.sigma = h.sigma;
                b.seed = h.seed;
                b
            }
            BasisKind::RbfGrid => {
                let mut offset = 0;
                let mut tiers = Vec::new();
                for (grid, bandwidth, count) in h.tiers {
                    let len = count * h.d;
                    let slice = data.get(offset..offset + len).ok_or_else(|| bad("center table size"))?;
                    offset += len;
                    tiers.push(RbfTier {
                        centers: Array2::from_shape_vec((count, h.d), slice.to_vec())
                            .map_err(|e| bad(&e.to_string()))?,
                        bandwidth,
                        grid_per_axis: grid,
                    });
                }
                Self::from_rbf_tiers(h.d, tiers)
            }
        };
        if basis.output_dim() != h.n {
            return Err(bad("output dimension disagrees with header"));
        }
        Ok(basis)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BasisHeader {
    kind: BasisKind,
    d: usize,
    n: usize,
    sigma: Option<f64>,
    seed: Option<u64>,
    /// `(grid_per_axis, bandwidth, center_count)` per RBF tier.
    #[serde(default)]
    tiers: Vec<(usize, f64, usize)>,
}
