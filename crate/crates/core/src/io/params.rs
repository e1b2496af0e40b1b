//! Model parameter and cost profile JSON files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which exploration weight a past fixation receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiIndexing {
    /// `phis[k]` weights the fixation made `k` fixations before the current one.
    #[default]
    Lag,
    /// `phis[i]` weights the `i`-th fixation of the scanpath.
    Absolute,
}

/// Weights of the value map `V = w0*S + w1*C + w2*E` and the exploration kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(default = "one")]
    pub w0: f64,
    pub w1: f64,
    pub w2: f64,
    /// Exploration kernel width in working-resolution pixels.
    pub sigma: f64,
    pub phis: Vec<f64>,
    #[serde(default)]
    pub phi_indexing: PhiIndexing,
}

fn one() -> f64 {
    1.0
}

impl ModelParams {
    pub fn new(w1: f64, w2: f64, sigma: f64, phis: Vec<f64>) -> Self {
        Self {
            w0: 1.0,
            w1,
            w2,
            sigma,
            phis,
            phi_indexing: PhiIndexing::Lag,
        }
    }

    pub fn with_indexing(mut self, indexing: PhiIndexing) -> Self {
        self.phi_indexing = indexing;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.w0 != 1.0 {
            return Err(Error::SchemaViolation(format!(
                "w0 is fixed to 1.0, got {}",
                self.w0
            )));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::NonPositiveSigma(self.sigma));
        }
        if self.phis.is_empty() {
            return Err(Error::SchemaViolation("phis must not be empty".into()));
        }
        let all = [self.w1, self.w2].into_iter().chain(self.phis.iter().copied());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::SchemaViolation("parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: ModelParams =
            serde_json::from_str(text).map_err(|e| Error::SchemaViolation(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }

    pub fn to_json(&self) -> String {
        super::json::to_string_pretty(self)
    }
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ModelParams::from_json(&text)
}

/// Tabulated amplitude value function: one value per bin, `bin_edges.len() == values.len() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeTable {
    pub bin_edges: Vec<f64>,
    pub values: Vec<f64>,
}

impl AmplitudeTable {
    /// Piecewise-linear interpolation between bin midpoints, held constant
    /// beyond the first and last midpoint.
    pub fn eval(&self, amplitude: f64) -> f64 {
        let n = self.values.len();
        let mid = |i: usize| 0.5 * (self.bin_edges[i] + self.bin_edges[i + 1]);
        if n == 1 || amplitude <= mid(0) {
            return self.values[0];
        }
        if amplitude >= mid(n - 1) {
            return self.values[n - 1];
        }
        // first midpoint strictly above the amplitude
        let hi = (1..n).find(|&i| mid(i) > amplitude).unwrap_or(n - 1);
        let (a, b) = (mid(hi - 1), mid(hi));
        let t = (amplitude - a) / (b - a);
        self.values[hi - 1] + t * (self.values[hi] - self.values[hi - 1])
    }
}

/// Oculomotor preference parameters for the cost map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostProfile {
    #[serde(default = "one")]
    pub pixels_per_degree: f64,
    pub amplitude: AmplitudeTable,
    /// Weight per radian of angle relative to the previous saccade.
    pub psi1: f64,
    /// Weight per radian of angle against the rightward horizontal.
    pub psi2: f64,
}

impl CostProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::SchemaViolation(m.to_string()));
        if !(self.pixels_per_degree > 0.0) || !self.pixels_per_degree.is_finite() {
            return bad("pixels_per_degree must be positive");
        }
        let t = &self.amplitude;
        if t.values.is_empty() {
            return bad("amplitude table needs at least one bin");
        }
        if t.bin_edges.len() != t.values.len() + 1 {
            return bad("amplitude table needs exactly one more edge than values");
        }
        if t.bin_edges.iter().chain(&t.values).any(|v| !v.is_finite()) {
            return bad("amplitude table must be finite");
        }
        if t.bin_edges.windows(2).any(|w| w[0] >= w[1]) {
            return bad("amplitude bin edges must be strictly ascending");
        }
        if !self.psi1.is_finite() || !self.psi2.is_finite() {
            return bad("psi weights must be finite");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let profile: CostProfile =
            serde_json::from_str(text).map_err(|e| Error::SchemaViolation(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_json(&self) -> String {
        super::json::to_string_pretty(self)
    }

    /// ψ0 at an amplitude given in working-resolution pixels.
    pub fn amplitude_value(&self, amplitude_px: f64) -> f64 {
        self.amplitude.eval(amplitude_px / self.pixels_per_degree)
    }
}

pub fn load_profile(path: impl AsRef<Path>) -> Result<CostProfile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CostProfile::from_json(&text)
}
