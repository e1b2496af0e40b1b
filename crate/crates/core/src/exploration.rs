//! Exploration map: a weighted sum of isotropic Gaussian densities centered on
//! the fixations made so far.
//!
//! ```text
//! E[x] = sum_{i=0..t} phi(i) * N(x; x_i, sigma^2 I)
//! ```
//!
//! Positive weights attract gaze back to visited locations, negative weights
//! inhibit returns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Dims, Grid, PixelCoord};
use crate::io::{ModelParams, PhiIndexing};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationParams {
    pub phis: Vec<f64>,
    pub sigma: f64,
    pub indexing: PhiIndexing,
}

impl ExplorationParams {
    pub fn new(phis: Vec<f64>, sigma: f64, indexing: PhiIndexing) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::NonPositiveSigma(sigma));
        }
        if phis.is_empty() {
            return Err(Error::SchemaViolation("phis must not be empty".into()));
        }
        Ok(Self {
            phis,
            sigma,
            indexing,
        })
    }

    /// Weight of fixation `i` when the history ends at fixation `t`.
    ///
    /// Indices past the table reuse its last entry.
    pub fn weight(&self, i: usize, t: usize) -> f64 {
        let k = match self.indexing {
            PhiIndexing::Lag => t - i,
            PhiIndexing::Absolute => i,
        };
        self.phis[k.min(self.phis.len() - 1)]
    }
}

impl From<&ModelParams> for ExplorationParams {
    fn from(p: &ModelParams) -> Self {
        Self {
            phis: p.phis.clone(),
            sigma: p.sigma,
            indexing: p.phi_indexing,
        }
    }
}

/// exp(-d^2 / (2 sigma^2)) for each pixel offset along one axis.
pub(crate) fn axis_factors(n: usize, center: f64, sigma: f64) -> impl Iterator<Item = f64> {
    let denom = 2.0 * sigma * sigma;
    (0..n).map(move |i| {
        let d = i as f64 - center;
        (-(d * d) / denom).exp()
    })
}

pub(crate) fn normalizer(sigma: f64) -> f64 {
    1.0 / (2.0 * std::f64::consts::PI * sigma * sigma)
}

/// Adds `weight * N(.; center, sigma^2 I)` into a row-major buffer.
fn accumulate_gaussian(out: &mut [f64], dims: Dims, center: PixelCoord, sigma: f64, weight: f64) {
    let cols: Vec<f64> = axis_factors(dims.width, center.x, sigma).collect();
    let scale = weight * normalizer(sigma);
    for (row, ry) in out
        .chunks_exact_mut(dims.width)
        .zip(axis_factors(dims.height, center.y, sigma))
    {
        let r = scale * ry;
        for (o, cx) in row.iter_mut().zip(&cols) {
            *o += r * cx;
        }
    }
}

/// Normalized 2-D isotropic Gaussian density sampled at pixel centers.
pub fn gaussian_at(dims: Dims, center: PixelCoord, sigma: f64) -> Result<Grid> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let mut values = vec![0.0; dims.len()];
    accumulate_gaussian(&mut values, dims, center, sigma, 1.0);
    Grid::new(dims.width, dims.height, values)
}

/// Exploration map for `history = [x_0, ..., x_t]`; an empty history gives zeros.
pub fn exploration_map(
    dims: Dims,
    history: &[PixelCoord],
    params: &ExplorationParams,
) -> Result<Grid> {
    if !(params.sigma > 0.0) || !params.sigma.is_finite() {
        return Err(Error::NonPositiveSigma(params.sigma));
    }
    for &p in history {
        dims.check_inside(p)?;
    }
    let mut values = vec![0.0; dims.len()];
    if let Some(t) = history.len().checked_sub(1) {
        for (i, &x) in history.iter().enumerate() {
            accumulate_gaussian(&mut values, dims, x, params.sigma, params.weight(i, t));
        }
    }
    Grid::new(dims.width, dims.height, values)
}
