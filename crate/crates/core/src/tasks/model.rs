use std::path::Path;

use ndarray::{Array2, Axis};

use crate::domain::Domain;
use crate::encoding::{build_rbf_tiers, default_rbf_tiers, sample_fourier_basis, EncodingBasis};
use crate::mask::{MaskGrid, MaskSchedule, Neighbor};
use crate::nn::{init_params, MlpParams, OutputActivation};
use crate::tasks::{EncodingKind, TrainConfig};
use crate::Result;

/// Everything needed to evaluate a trained coordinate network.
///
/// `mask` is `None` for static encodings (mask ≡ 1), which includes runs
/// with SAPE disabled and bases without progression groups.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: TrainConfig,
    pub basis: EncodingBasis,
    pub params: MlpParams,
    pub mask: Option<(MaskSchedule, MaskGrid)>,
}

const PREDICT_CHUNK: usize = 4096;

impl Model {
    /// Fresh model: samples the basis and initializes the network from the
    /// config seed. `config` must already be normalized.
    pub fn new(
        config: &TrainConfig,
        domain: &Domain,
        output_dim: usize,
        output_activation: OutputActivation,
    ) -> Result<Self> {
        let d = domain.dim();
        let basis = match config.encoding {
            EncodingKind::None => EncodingBasis::identity(d),
            EncodingKind::Fourier => {
                sample_fourier_basis(d, config.num_frequencies, config.sigma, config.basis_seed())?
            }
            EncodingKind::RbfGrid => {
                let tiers = config.rbf_tiers.clone().unwrap_or_else(|| default_rbf_tiers(domain));
                build_rbf_tiers(d, &tiers, domain)?
            }
        };
        let params = init_params(
            basis.output_dim(),
            config.hidden_width,
            config.depth,
            output_dim,
            output_activation,
            config.init_seed(),
        )?;
        let mask = if config.sape_enabled && basis.n_groups() > 0 {
            let schedule = MaskSchedule::for_basis(config.iterations, &basis)?;
            let grid = MaskGrid::new(
                config.grid_resolution.clone(),
                domain.clone(),
                config.epsilon,
                config.feedback_interval,
            )?;
            Some((schedule, grid))
        } else {
            None
        };
        Ok(Self {
            config: config.clone(),
            basis,
            params,
            mask,
        })
    }

    pub fn is_masked(&self) -> bool {
        self.mask.is_some()
    }

    pub fn grid(&self) -> Option<&MaskGrid> {
        self.mask.as_ref().map(|(_, g)| g)
    }

    pub fn schedule(&self) -> Option<&MaskSchedule> {
        self.mask.as_ref().map(|(s, _)| s)
    }

    pub fn neighbors(&self, coords: &Array2<f64>) -> Vec<Vec<Neighbor>> {
        match &self.mask {
            Some((_, grid)) => coords.rows().into_iter().map(|r| grid.neighbors(&r.to_vec())).collect(),
            None => Vec::new(),
        }
    }

    /// Multiplies each row of encoded features by its interpolated mask.
    pub(crate) fn apply_mask(&self, features: &mut Array2<f64>, neighbors: &[&[Neighbor]]) {
        let Some((schedule, grid)) = &self.mask else {
            return;
        };
        let group_ids = self.basis.group_ids();
        let mut groups = Vec::with_capacity(schedule.n_groups() + 1);
        for (mut row, nb) in features.rows_mut().into_iter().zip(neighbors) {
            grid.blend_groups(schedule, nb, &mut groups);
            for (v, &g) in row.iter_mut().zip(group_ids) {
                *v *= groups[g];
            }
        }
    }

    /// Masked encoding of arbitrary coordinates, one point per row.
    pub fn encode(&self, coords: &Array2<f64>) -> Result<Array2<f64>> {
        let mut features = self.basis.encode_batch(coords)?;
        let neighbors = self.neighbors(coords);
        let refs: Vec<&[Neighbor]> = neighbors.iter().map(Vec::as_slice).collect();
        self.apply_mask(&mut features, &refs);
        Ok(features)
    }

    /// Network output at each coordinate row.
    pub fn predict(&self, coords: &Array2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((coords.nrows(), self.params.out_dim()));
        let mut start = 0;
        while start < coords.nrows() {
            let end = (start + PREDICT_CHUNK).min(coords.nrows());
            let chunk = coords.slice(ndarray::s![start..end, ..]).to_owned();
            let y = self.params.predict(&self.encode(&chunk)?)?;
            out.slice_mut(ndarray::s![start..end, ..]).assign(&y);
            start = end;
        }
        Ok(out)
    }

    /// Heatmap of the final grid, if masked.
    pub fn heatmap(&self) -> Option<Vec<f64>> {
        self.mask
            .as_ref()
            .map(|(schedule, grid)| grid.heatmap(schedule, &self.basis))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        self.params.save(&dir.join("checkpoint.bin"))?;
        self.basis.save(&dir.join("basis.bin"))?;
        if let Some((schedule, grid)) = &self.mask {
            grid.save(&dir.join("grid.bin"), schedule)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path, config: TrainConfig) -> Result<Self> {
        let params = MlpParams::load(&dir.join("checkpoint.bin"))?;
        let basis = EncodingBasis::load(&dir.join("basis.bin"))?;
        let grid_path = dir.join("grid.bin");
        let mask = if grid_path.exists() {
            Some(MaskGrid::load(&grid_path).map(|(g, s)| (s, g))?)
        } else {
            None
        };
        Ok(Self {
            config,
            basis,
            params,
            mask,
        })
    }
}

pub(crate) fn rows_of(coords: &Array2<f64>, ids: &[usize]) -> Array2<f64> {
    coords.select(Axis(0), ids)
}
