//! History-dependent value maps and greedy next-fixation prediction.
//!
//! For a history `x_0 .. x_t` over saliency map `S`:
//!
//! ```text
//! for every pixel x:
//!     C[x] = cost of a saccade x_t -> x given the previous saccade x_{t-1} -> x_t
//!     E[x] = sum_i phi(i) N(x; x_i, sigma^2 I)
//!     V[x] = w0 S[x] + w1 C[x] + w2 E[x]
//! ```
//!
//! With no history the value map is `S` itself. With a single fixation the
//! previous fixation is taken to be the grid center.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cost::cost_map;
use crate::error::{Error, Result};
use crate::exploration::{exploration_map, ExplorationParams};
use crate::grid::{argmax, Dims, Grid, PixelCoord};
use crate::io::{CostProfile, ModelParams};

/// The component maps behind one value map.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueMaps {
    pub cost: Grid,
    pub exploration: Grid,
    pub value: Grid,
}

/// The fixation pair that drives the cost map, if the history has one.
pub fn cost_anchor(dims: Dims, history: &[PixelCoord]) -> Option<(PixelCoord, PixelCoord)> {
    match history {
        [] => None,
        [only] => Some((dims.center(), *only)),
        [.., prev, cur] => Some((*prev, *cur)),
    }
}

/// Cost map for a history; zeros when the history is empty.
pub fn history_cost_map(dims: Dims, history: &[PixelCoord], profile: &CostProfile) -> Result<Grid> {
    match cost_anchor(dims, history) {
        None => Ok(Grid::zeros(dims)),
        Some((prev, cur)) => cost_map(dims, prev, cur, profile),
    }
}

/// `w0*S + w1*C + w2*E` given a precomputed cost map; returns `S` unchanged
/// for an empty history.
pub fn compose_value_map(
    saliency: &Grid,
    cost: &Grid,
    history: &[PixelCoord],
    params: &ModelParams,
) -> Result<Grid> {
    if history.is_empty() {
        return Ok(saliency.clone());
    }
    let dims = saliency.dims();
    if cost.dims() != dims {
        return Err(Error::DimensionMismatch {
            left: (dims.width, dims.height),
            right: (cost.width(), cost.height()),
        });
    }
    let e = exploration_map(dims, history, &ExplorationParams::from(params))?;
    let values = saliency
        .values()
        .iter()
        .zip(cost.values())
        .zip(e.values())
        .map(|((s, c), e)| params.w0 * s + params.w1 * c + params.w2 * e)
        .collect();
    Grid::new(dims.width, dims.height, values)
}

/// Saliency map, fixation history and model: everything a value map depends on.
#[derive(Debug, Clone)]
pub struct PredictionContext {
    pub saliency: Arc<Grid>,
    pub history: Vec<PixelCoord>,
    pub params: ModelParams,
    pub profile: CostProfile,
}

impl PredictionContext {
    pub fn new(
        saliency: Arc<Grid>,
        history: Vec<PixelCoord>,
        params: ModelParams,
        profile: CostProfile,
    ) -> Result<Self> {
        params.validate()?;
        profile.validate()?;
        let dims = saliency.dims();
        for &p in &history {
            dims.check_inside(p)?;
        }
        Ok(Self {
            saliency,
            history,
            params,
            profile,
        })
    }

    pub fn dims(&self) -> Dims {
        self.saliency.dims()
    }

    /// All component maps; cost and exploration are zero for an empty history.
    pub fn maps(&self) -> Result<ValueMaps> {
        let dims = self.dims();
        let cost = history_cost_map(dims, &self.history, &self.profile)?;
        let exploration = exploration_map(dims, &self.history, &ExplorationParams::from(&self.params))?;
        let value = compose_value_map(&self.saliency, &cost, &self.history, &self.params)?;
        Ok(ValueMaps {
            cost,
            exploration,
            value,
        })
    }

    pub fn value_map(&self) -> Result<Grid> {
        let cost = history_cost_map(self.dims(), &self.history, &self.profile)?;
        compose_value_map(&self.saliency, &cost, &self.history, &self.params)
    }

    /// Greedy next fixation: the argmax of the value map.
    pub fn predict_next(&self) -> Result<PixelCoord> {
        Ok(argmax(&self.value_map()?))
    }

    pub fn with_history(&self, history: Vec<PixelCoord>) -> Result<Self> {
        Self::new(
            self.saliency.clone(),
            history,
            self.params.clone(),
            self.profile.clone(),
        )
    }
}

/// How a context `n` fixations ahead of its history is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NStepMode {
    /// Keep only the real fixations that precede the target by `n`.
    #[default]
    Truncate,
    /// Truncate, then append `n - 1` greedy predictions.
    Rollout,
}

impl std::fmt::Display for NStepMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NStepMode::Truncate => "truncate",
            NStepMode::Rollout => "rollout",
        })
    }
}

impl std::str::FromStr for NStepMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "truncate" => Ok(NStepMode::Truncate),
            "rollout" => Ok(NStepMode::Rollout),
            other => Err(format!("unknown n-step mode `{other}`")),
        }
    }
}

/// Context whose value map scores fixation number `target` (1-based) of
/// `scanpath` using only the first `target - n` real fixations.
pub fn nstep_context(
    scanpath: &[PixelCoord],
    target: usize,
    n: usize,
    mode: NStepMode,
    saliency: Arc<Grid>,
    params: &ModelParams,
    profile: &CostProfile,
) -> Result<PredictionContext> {
    if n == 0 {
        return Err(Error::InsufficientHistory { target, needed: 0 });
    }
    if target == 0 || target > scanpath.len() || target < n {
        return Err(Error::InsufficientHistory {
            target,
            needed: n.saturating_sub(1),
        });
    }
    let history = scanpath[..target - n].to_vec();
    let mut ctx = PredictionContext::new(saliency, history, params.clone(), profile.clone())?;
    if mode == NStepMode::Rollout {
        for _ in 1..n {
            let next = ctx.predict_next()?;
            ctx.history.push(next);
        }
    }
    Ok(ctx)
}
