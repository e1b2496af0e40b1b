//! Fitting `w1`, `w2`, `sigma` and the exploration weights by maximizing mean
//! one-step NSS over a sample of real fixations.
//!
//! The objective is `-mean NSS`, minimized with [`crate::optim::minimize`]
//! using forward-difference gradients. Parameter vectors are
//! `[w1, w2, sigma, phi_1 .. phi_k]`, or just `[w1, w2, sigma]` when the
//! exploration weights are held fixed.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exploration::{axis_factors, normalizer, ExplorationParams};
use crate::grid::{Grid, PixelCoord};
use crate::io::{CostProfile, Dataset, ModelParams};
use crate::metrics::nss_at;
use crate::optim::{finite_diff_gradient, minimize, Bounds, LbfgsbOptions, MinimizeError, StopReason};
use crate::value::{history_cost_map, PredictionContext};

/// One fixation to predict from the fixations before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub image_id: String,
    /// Position of the image in [`Dataset::images`].
    pub image_index: usize,
    pub subject_id: String,
    /// 1-based position of `target` in its scanpath.
    pub position: usize,
    pub history: Vec<PixelCoord>,
    pub target: PixelCoord,
}

/// Closed intervals for each kind of parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamBounds {
    pub w1: [f64; 2],
    pub w2: [f64; 2],
    pub sigma: [f64; 2],
    pub phi: [f64; 2],
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            w1: [-100.0, 100.0],
            w2: [-100.0, 100.0],
            sigma: [0.5, 500.0],
            phi: [-100.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub sample_count: usize,
    pub seed: u64,
    /// Fit the exploration weights too; otherwise they stay at `init.phis`.
    pub free_phis: bool,
    /// Inclusive range of 1-based target positions the sampler draws from.
    pub target_positions: [usize; 2],
    pub init: ModelParams,
    pub bounds: ParamBounds,
    pub optimizer: LbfgsbOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            sample_count: 10_000,
            seed: 0,
            free_phis: true,
            target_positions: [3, 11],
            init: ModelParams::new(0.1, 0.5, 20.0, vec![1.0; 10]),
            bounds: ParamBounds::default(),
            optimizer: LbfgsbOptions::default(),
        }
    }
}

impl FitConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: FitConfig = serde_json::from_str(text).map_err(|e| Error::SchemaViolation(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::SchemaViolation(msg.to_string()));
        if self.sample_count == 0 {
            return bad("sample_count must be at least 1");
        }
        let [first, last] = self.target_positions;
        if first == 0 || first > last {
            return bad("target_positions must be 1-based and ordered");
        }
        let b = &self.bounds;
        for [lo, hi] in [b.w1, b.w2, b.sigma, b.phi] {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return bad("every bound must be an ordered interval");
            }
        }
        if !(b.sigma[0] > 0.0) {
            return bad("the sigma lower bound must be positive");
        }
        if !(self.optimizer.eps > 0.0) || self.optimizer.maxls == 0 {
            return bad("optimizer eps must be positive and maxls at least 1");
        }
        self.init.validate()
    }

    /// Box for the parameter vector.
    pub fn parameter_bounds(&self) -> Bounds {
        let b = &self.bounds;
        let mut lower = vec![b.w1[0], b.w2[0], b.sigma[0]];
        let mut upper = vec![b.w1[1], b.w2[1], b.sigma[1]];
        if self.free_phis {
            lower.extend(std::iter::repeat(b.phi[0]).take(self.init.phis.len()));
            upper.extend(std::iter::repeat(b.phi[1]).take(self.init.phis.len()));
        }
        Bounds::new(lower, upper)
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    /// Starting point, recorded for reproducibility.
    pub init: ModelParams,
    /// `(iteration, objective)` for the start and every accepted iterate.
    pub objective_trace: Vec<(usize, f64)>,
    /// Objective evaluations, including finite-difference probes.
    pub evaluations: usize,
    pub iterations: usize,
    pub converged_by: StopReason,
    pub sample_count: usize,
}

impl FitResult {
    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().map_or(f64::NAN, |&(_, f)| f)
    }

    pub fn initial_objective(&self) -> f64 {
        self.objective_trace.first().map_or(f64::NAN, |&(_, f)| f)
    }
}

pub fn encode(params: &ModelParams, free_phis: bool) -> Vec<f64> {
    let mut theta = vec![params.w1, params.w2, params.sigma];
    if free_phis {
        theta.extend_from_slice(&params.phis);
    }
    theta
}

/// Inverse of [`encode`]; fields not in `theta` come from `template`.
pub fn decode(theta: &[f64], template: &ModelParams, free_phis: bool) -> Result<ModelParams> {
    let expected = 3 + if free_phis { template.phis.len() } else { 0 };
    if theta.len() != expected {
        return Err(Error::DecodeError(format!(
            "expected {expected} entries, got {}",
            theta.len()
        )));
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::DecodeError("non-finite entry".into()));
    }
    if !(theta[2] > 0.0) {
        return Err(Error::DecodeError(format!("sigma must be positive, got {}", theta[2])));
    }
    let mut p = template.clone();
    p.w1 = theta[0];
    p.w2 = theta[1];
    p.sigma = theta[2];
    if free_phis {
        p.phis.copy_from_slice(&theta[3..]);
    }
    Ok(p)
}

/// Draws up to `config.sample_count` fixations at eligible positions, uniformly
/// without replacement across the whole dataset.
pub fn sample_training_set(dataset: &Dataset, config: &FitConfig) -> Result<Vec<TrainingSample>> {
    let [first, last] = config.target_positions;
    let mut eligible = Vec::new();
    for (image_index, image) in dataset.images.iter().enumerate() {
        for sp in &image.scanpaths {
            for position in first..=last.min(sp.len()) {
                eligible.push(TrainingSample {
                    image_id: image.image_id.clone(),
                    image_index,
                    subject_id: sp.subject_id.clone(),
                    position,
                    history: sp.fixations[..position - 1].to_vec(),
                    target: sp.fixations[position - 1],
                });
            }
        }
    }
    if eligible.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if eligible.len() < config.sample_count {
        log::warn!(
            "only {} eligible fixations, fewer than the requested {}",
            eligible.len(),
            config.sample_count
        );
    }
    eligible.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    eligible.truncate(config.sample_count);
    Ok(eligible)
}

/// `-mean NSS` of the value maps at the sample targets, computed map by map.
///
/// A sample whose value map is constant contributes an NSS of zero.
pub fn objective(
    params: &ModelParams,
    samples: &[TrainingSample],
    dataset: &Dataset,
    profile: &CostProfile,
) -> Result<f64> {
    params.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let scores: Vec<Result<f64>> = samples
        .par_iter()
        .map(|s| {
            let saliency = Arc::clone(&dataset.images[s.image_index].saliency);
            let ctx = PredictionContext::new(saliency, s.history.clone(), params.clone(), profile.clone())?;
            match nss_at(&ctx.value_map()?, s.target) {
                Err(Error::ConstantMap) => Ok(0.0),
                other => other,
            }
        })
        .collect();
    let mut sum = 0.0;
    for s in scores {
        sum += s?;
    }
    let f = -sum / samples.len() as f64;
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::NonFiniteObjective)
    }
}

/// Centered copy of a map. A constant map centers to exact zeros.
fn centered(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return vec![0.0; values.len()];
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| v - mean).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sum_{row,col} m[row, col] gy[row] gx[col]`.
fn weighted_sum(m: &[f64], gx: &[f64], gy: &[f64]) -> f64 {
    m.chunks_exact(gx.len()).zip(gy).map(|(row, y)| y * dot(row, gx)).sum()
}

/// Per-sample quantities that do not depend on the parameters.
struct Prepared {
    image: usize,
    target: usize,
    history: Vec<PixelCoord>,
    /// Centered cost map; `None` when it is recomputed on demand.
    cost: Option<Vec<f64>>,
    s_sum: f64,
    c_sum: f64,
    s_t: f64,
    c_t: f64,
    ss: f64,
    cc: f64,
    sc: f64,
}

/// Inner products of each history Gaussian with the fixed maps, at one sigma.
struct GaussTerms {
    sum: Vec<f64>,
    at_target: Vec<f64>,
    with_s: Vec<f64>,
    with_c: Vec<f64>,
    /// Row-major `k x k` Gram matrix of the Gaussians.
    gram: Vec<f64>,
}

/// Cached-moment evaluation of [`objective`].
///
/// Cost maps are fixed per sample and the Gaussians are separable, so every
/// quantity NSS needs is a quadratic form in `(1, w1, w2 * phi)` over inner
/// products that change only with `sigma`. Agrees with [`objective`] up to
/// rounding.
pub struct NssObjective {
    saliency: Vec<Arc<Grid>>,
    centered_saliency: Vec<Vec<f64>>,
    profile: CostProfile,
    samples: Vec<Prepared>,
    cache: Vec<(u64, Arc<Vec<GaussTerms>>)>,
    evaluations: usize,
}

/// Above this many bytes of cached cost maps, they are recomputed per sigma.
const COST_CACHE_BYTES: usize = 1 << 30;

impl NssObjective {
    pub fn new(dataset: &Dataset, profile: &CostProfile, samples: &[TrainingSample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        profile.validate()?;
        let saliency: Vec<Arc<Grid>> = dataset.images.iter().map(|i| Arc::clone(&i.saliency)).collect();
        let centered_saliency: Vec<Vec<f64>> = saliency.iter().map(|g| centered(g.values())).collect();
        let bytes: usize = samples
            .iter()
            .map(|s| saliency[s.image_index].values().len() * 8)
            .sum();
        let keep_cost = bytes <= COST_CACHE_BYTES;
        let prepared = samples
            .par_iter()
            .map(|s| {
                let sal = &saliency[s.image_index];
                let dims = sal.dims();
                dims.check_inside(s.target)?;
                let (col, row) = dims.nearest_pixel(s.target);
                let target = row * dims.width + col;
                let c = centered(history_cost_map(dims, &s.history, profile)?.values());
                let sp = &centered_saliency[s.image_index];
                Ok(Prepared {
                    image: s.image_index,
                    target,
                    history: s.history.clone(),
                    s_sum: sp.iter().sum(),
                    c_sum: c.iter().sum(),
                    s_t: sp[target],
                    c_t: c[target],
                    ss: dot(sp, sp),
                    cc: dot(&c, &c),
                    sc: dot(sp, &c),
                    cost: keep_cost.then_some(c),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            saliency,
            centered_saliency,
            profile: profile.clone(),
            samples: prepared,
            cache: Vec::new(),
            evaluations: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of calls to [`NssObjective::eval`] so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    fn terms_for(&mut self, sigma: f64) -> Result<Arc<Vec<GaussTerms>>> {
        let key = sigma.to_bits();
        if let Some(pos) = self.cache.iter().position(|(k, _)| *k == key) {
            let entry = self.cache.remove(pos);
            let terms = Arc::clone(&entry.1);
            self.cache.push(entry);
            return Ok(terms);
        }
        let norm = normalizer(sigma);
        let terms = self
            .samples
            .par_iter()
            .map(|p| {
                let dims = self.saliency[p.image].dims();
                let recomputed;
                let cost: &[f64] = match &p.cost {
                    Some(c) => c,
                    None => {
                        recomputed = centered(history_cost_map(dims, &p.history, &self.profile)?.values());
                        &recomputed
                    }
                };
                let sal = &self.centered_saliency[p.image];
                let (tc, tr) = (p.target % dims.width, p.target / dims.width);
                let axes: Vec<(Vec<f64>, Vec<f64>)> = p
                    .history
                    .iter()
                    .map(|x| {
                        (
                            axis_factors(dims.width, x.x, sigma).collect(),
                            axis_factors(dims.height, x.y, sigma).collect(),
                        )
                    })
                    .collect();
                let k = axes.len();
                let mut gram = vec![0.0; k * k];
                for i in 0..k {
                    for j in i..k {
                        let v = norm * norm * dot(&axes[i].0, &axes[j].0) * dot(&axes[i].1, &axes[j].1);
                        gram[i * k + j] = v;
                        gram[j * k + i] = v;
                    }
                }
                Ok(GaussTerms {
                    sum: axes
                        .iter()
                        .map(|(gx, gy)| norm * gx.iter().sum::<f64>() * gy.iter().sum::<f64>())
                        .collect(),
                    at_target: axes.iter().map(|(gx, gy)| norm * gy[tr] * gx[tc]).collect(),
                    with_s: axes.iter().map(|(gx, gy)| norm * weighted_sum(sal, gx, gy)).collect(),
                    with_c: axes.iter().map(|(gx, gy)| norm * weighted_sum(cost, gx, gy)).collect(),
                    gram,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let terms = Arc::new(terms);
        if self.cache.len() == 3 {
            self.cache.remove(0);
        }
        self.cache.push((key, Arc::clone(&terms)));
        Ok(terms)
    }

    /// `-mean NSS` at `params`.
    pub fn eval(&mut self, params: &ModelParams) -> Result<f64> {
        params.validate()?;
        self.evaluations += 1;
        let terms = self.terms_for(params.sigma)?;
        let explore = ExplorationParams::from(params);
        let (w1, w2) = (params.w1, params.w2);
        let scores: Vec<f64> = self
            .samples
            .par_iter()
            .zip(terms.par_iter())
            .map(|(p, g)| {
                let n = self.saliency[p.image].values().len() as f64;
                let k = p.history.len();
                let a: Vec<f64> = (0..k).map(|i| explore.weight(i, k - 1)).collect();
                let e_sum = dot(&a, &g.sum);
                let e_t = dot(&a, &g.at_target);
                let se = dot(&a, &g.with_s);
                let ce = dot(&a, &g.with_c);
                let ee: f64 = (0..k).map(|i| a[i] * dot(&a, &g.gram[i * k..(i + 1) * k])).sum();
                let u_sum = p.s_sum + w1 * p.c_sum + w2 * e_sum;
                let u2 = p.ss
                    + w1 * w1 * p.cc
                    + w2 * w2 * ee
                    + 2.0 * w1 * p.sc
                    + 2.0 * w2 * se
                    + 2.0 * w1 * w2 * ce;
                let mean = u_sum / n;
                let var = u2 / n - mean * mean;
                if !(var > 0.0) {
                    return 0.0;
                }
                (p.s_t + w1 * p.c_t + w2 * e_t - mean) / var.sqrt()
            })
            .collect();
        let f = -scores.iter().sum::<f64>() / scores.len() as f64;
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::NonFiniteObjective)
        }
    }
}

/// Samples a training set and fits.
pub fn fit(dataset: &Dataset, profile: &CostProfile, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let samples = sample_training_set(dataset, config)?;
    fit_samples(dataset, profile, &samples, config)
}

/// Fits on a given training set; `config.sample_count` and `config.seed` are
/// not used.
pub fn fit_samples(
    dataset: &Dataset,
    profile: &CostProfile,
    samples: &[TrainingSample],
    config: &FitConfig,
) -> Result<FitResult> {
    config.validate()?;
    let mut obj = NssObjective::new(dataset, profile, samples)?;
    let template = config.init.clone();
    let free = config.free_phis;
    let bounds = config.parameter_bounds();
    let eps = config.optimizer.eps;
    log::info!(
        "fitting {} parameters on {} samples",
        bounds.len(),
        samples.len()
    );

    let outcome = minimize(
        |theta| {
            let f0 = obj.eval(&decode(theta, &template, free)?)?;
            let g = finite_diff_gradient(|p| obj.eval(&decode(p, &template, free)?), theta, f0, eps, &bounds)?;
            log::debug!("objective {f0:.9} at {theta:?}");
            Ok((f0, g))
        },
        &encode(&template, free),
        &bounds,
        &config.optimizer,
    );
    let evaluations = obj.evaluations();
    let result = |m: crate::optim::Minimum| -> Result<FitResult> {
        Ok(FitResult {
            params: decode(&m.x, &template, free)?,
            init: template.clone(),
            objective_trace: m.trace,
            evaluations,
            iterations: m.iterations,
            converged_by: m.stop,
            sample_count: samples.len(),
        })
    };
    match outcome {
        Ok(m) => {
            let r = result(m)?;
            log::info!(
                "stopped by {:?} after {} iterations, objective {}",
                r.converged_by,
                r.iterations,
                r.final_objective()
            );
            Ok(r)
        }
        Err(MinimizeError::LineSearch(m)) => Err(Error::LineSearchFailure {
            best: Box::new(result(m)?),
        }),
        Err(MinimizeError::Objective(e)) => Err(e),
    }
}
