//! Published parameter sets and the bundled illustrative cost profile.
//!
//! The two tables hold the values fitted on MIT1003 at one tenth of the
//! original resolution: one with exploration weights fitted per saliency model,
//! one with those weights fixed to their cross-model average while `w1`, `w2`
//! and `sigma` are refitted.

use crate::io::{AmplitudeTable, CostProfile, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct NamedParams {
    pub model: &'static str,
    pub params: ModelParams,
}

/// Exploration weights shared by every row of [`fixed_phis`].
pub const AVERAGED_PHIS: [f64; 10] = [0.720, 1.095, 0.906, 1.198, 1.633, 1.581, 2.298, 1.737, 2.977, 3.014];

/// Parameters with exploration weights fitted per saliency model.
pub fn individual_phis() -> Vec<NamedParams> {
    let row = |model, w1, w2, sigma, phis: [f64; 10]| NamedParams {
        model,
        params: ModelParams::new(w1, w2, sigma, phis.to_vec()),
    };
    vec![
        row("DeepGaze II", 0.345, 2.893, 34.158,
            [1.737, 2.087, 2.022, 2.462, 3.319, 3.376, 4.744, 5.219, 5.218, 4.374]),
        row("SAM-ResNet", 0.007, 0.003, 93.337,
            [0.410, 0.097, 0.031, 0.165, 0.201, 0.237, 0.407, 0.333, 0.952, -2.17]),
        row("EML-NET", 0.095, 0.481, 18.296,
            [0.155, 0.790, 0.427, 0.748, 1.081, 1.104, 1.449, -0.22, 2.553, 4.523]),
        row("CASNet II", 0.157, 0.851, 22.328,
            [0.580, 1.408, 1.142, 1.419, 1.930, 1.608, 2.592, 1.616, 3.185, 5.331]),
    ]
}

/// Parameters refitted with the exploration weights fixed to [`AVERAGED_PHIS`].
pub fn fixed_phis() -> Vec<NamedParams> {
    let row = |model, w1, w2, sigma| NamedParams {
        model,
        params: ModelParams::new(w1, w2, sigma, AVERAGED_PHIS.to_vec()),
    };
    vec![
        row("DeepGaze II", 0.351, 1.989, 33.632),
        row("SAM-ResNet", 0.110, 0.510, 26.742),
        row("EML-NET", 0.095, 0.619, 21.553),
        row("CASNet II", 0.160, 1.134, 25.961),
        row("UNISAL", 0.061, 0.483, 12.643),
    ]
}

/// The DeepGaze II row of [`individual_phis`].
pub fn deepgaze_ii() -> ModelParams {
    individual_phis().swap_remove(0).params
}

/// How per-model exploration weights are pooled into one curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiAveraging {
    /// Plain mean of `phi_k` across models.
    Plain,
    /// Mean of `phi_k` weighted by each model's `w2`.
    WeightedByW2,
}

/// Pools exploration weights across parameter sets, position by position.
///
/// Returns `None` when the sets have different lengths or there are none.
pub fn average_phis(sets: &[ModelParams], recipe: PhiAveraging) -> Option<Vec<f64>> {
    let k = sets.first()?.phis.len();
    if sets.iter().any(|p| p.phis.len() != k) {
        return None;
    }
    let weight = |p: &ModelParams| match recipe {
        PhiAveraging::Plain => 1.0,
        PhiAveraging::WeightedByW2 => p.w2,
    };
    let total: f64 = sets.iter().map(weight).sum();
    Some(
        (0..k)
            .map(|i| sets.iter().map(|p| weight(p) * p.phis[i]).sum::<f64>() / total)
            .collect(),
    )
}

/// A placeholder oculomotor profile for working-resolution pixels.
///
/// Not a measured human profile: utilities fall monotonically with saccade
/// amplitude, and turning away from the previous saccade direction or
/// aiming away from the rightward horizontal costs a little. Penalties are
/// stored as negative values because profile values are added to the value
/// map as they are.
pub fn illustrative_profile() -> CostProfile {
    CostProfile {
        pixels_per_degree: 1.0,
        amplitude: AmplitudeTable {
            bin_edges: vec![0.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0],
            values: vec![0.0, -0.2, -0.5, -1.0, -1.6, -2.2, -2.8],
        },
        psi1: -0.15,
        psi2: -0.05,
    }
}
