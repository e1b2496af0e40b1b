//! Batch n-step evaluation against the saliency-only baseline.
//!
//! Every eligible fixation of every scanpath is predicted from the fixations
//! at least `n` steps before it and scored with NSS and AUC. The raw saliency
//! map is scored at the same targets as the baseline. With `n = 1` all
//! fixations are eligible: the first is scored on the saliency map itself and
//! the second uses the center of the grid as the previous fixation. With
//! `n >= 2` targets start at position `n + 1`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io::{json, CostProfile, Dataset, ModelParams};
use crate::metrics::{auc_at, nss_at, ScoreSample};
use crate::value::{nstep_context, NStepMode};

/// Positions reported individually; later ones only enter the aggregates.
pub const MAX_REPORTED_POSITION: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionRow {
    pub position: usize,
    pub mean_nss: f64,
    /// Model minus baseline mean NSS at this position.
    pub delta_nss: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub dataset_id: String,
    pub model_id: String,
    pub step_n: usize,
    pub mode: NStepMode,
    pub mean_nss: f64,
    pub mean_auc: f64,
    pub baseline_nss: f64,
    pub baseline_auc: f64,
    /// Samples dropped because the model or baseline map was constant.
    pub excluded: usize,
    pub per_position: Vec<PositionRow>,
    pub sample_count: usize,
    pub config_fingerprint: String,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::SchemaViolation(e.to_string()))
    }

    /// The baseline columns presented as a model, so [`compare`] can diff a
    /// model against its own baseline.
    pub fn baseline_view(&self) -> EvalReport {
        EvalReport {
            model_id: "baseline".into(),
            mean_nss: self.baseline_nss,
            mean_auc: self.baseline_auc,
            per_position: self
                .per_position
                .iter()
                .map(|r| PositionRow {
                    mean_nss: r.mean_nss - r.delta_nss,
                    delta_nss: 0.0,
                    ..r.clone()
                })
                .collect(),
            ..self.clone()
        }
    }

    /// Per-position rows as CSV.
    pub fn write_position_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "position,mean_nss,delta_nss,count")?;
        for r in &self.per_position {
            writeln!(
                out,
                "{},{},{},{}",
                r.position,
                json::format_g17(r.mean_nss),
                json::format_g17(r.delta_nss),
                r.count
            )?;
        }
        Ok(())
    }
}

/// Scores for one target under the model and under the baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub model: ScoreSample,
    pub baseline_nss: f64,
    pub baseline_auc: f64,
}

/// Result of scoring every eligible target.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scores {
    pub pairs: Vec<ScoredPair>,
    pub excluded: usize,
}

/// Targets (1-based) scored for a scanpath of length `len`.
pub fn eligible_targets(len: usize, n: usize) -> std::ops::RangeInclusive<usize> {
    let first = if n <= 1 { 1 } else { n + 1 };
    first..=len
}

/// Scores every eligible target in the dataset, in dataset order.
pub fn score_dataset(
    dataset: &Dataset,
    params: &ModelParams,
    profile: &CostProfile,
    n: usize,
    mode: NStepMode,
) -> Result<Scores> {
    if n == 0 {
        return Err(Error::InsufficientHistory { target: 0, needed: 0 });
    }
    if n > 3 {
        log::warn!("{n}-step evaluation is experimental");
    }
    params.validate()?;
    profile.validate()?;
    let jobs: Vec<_> = dataset
        .images
        .iter()
        .flat_map(|img| img.scanpaths.iter().map(move |sp| (img, sp)))
        .collect();
    let per_scanpath: Vec<Result<Scores>> = jobs
        .par_iter()
        .map(|(img, sp)| {
            let mut out = Scores::default();
            for target in eligible_targets(sp.len(), n) {
                let fix = sp.fixations[target - 1];
                let ctx = nstep_context(&sp.fixations, target, n, mode, img.saliency.clone(), params, profile)?;
                let v = ctx.value_map()?;
                let scored = nss_at(&v, fix).and_then(|m| Ok((m, nss_at(&img.saliency, fix)?)));
                match scored {
                    Ok((nss, base)) => out.pairs.push(ScoredPair {
                        model: ScoreSample {
                            image_id: img.image_id.clone(),
                            subject_id: sp.subject_id.clone(),
                            ordinal_position: target,
                            nss,
                            auc: auc_at(&v, fix),
                        },
                        baseline_nss: base,
                        baseline_auc: auc_at(&img.saliency, fix),
                    }),
                    Err(Error::ConstantMap) => out.excluded += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok(out)
        })
        .collect();
    let mut all = Scores::default();
    for s in per_scanpath {
        let s = s?;
        all.pairs.extend(s.pairs);
        all.excluded += s.excluded;
    }
    Ok(all)
}

/// Hash of everything a report depends on.
pub fn config_fingerprint(
    dataset: &Dataset,
    params: &ModelParams,
    profile: &CostProfile,
    n: usize,
    mode: NStepMode,
) -> String {
    let mut h = Sha256::new();
    h.update(params.to_json().as_bytes());
    h.update([0]);
    h.update(profile.to_json().as_bytes());
    h.update([0]);
    h.update(dataset.digest().as_bytes());
    h.update([0]);
    h.update(format!("{n}/{mode}").as_bytes());
    hex::encode(h.finalize())
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

/// Runs an n-step evaluation and summarizes it.
pub fn evaluate(
    dataset: &Dataset,
    params: &ModelParams,
    profile: &CostProfile,
    n: usize,
    mode: NStepMode,
    model_id: &str,
) -> Result<EvalReport> {
    let scores = score_dataset(dataset, params, profile, n, mode)?;
    if scores.pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if scores.excluded > 0 {
        log::warn!("{} samples excluded for constant maps", scores.excluded);
    }
    let pairs = &scores.pairs;
    let per_position = (1..=MAX_REPORTED_POSITION)
        .filter_map(|position| {
            let group: Vec<_> = pairs.iter().filter(|p| p.model.ordinal_position == position).collect();
            if group.is_empty() {
                return None;
            }
            let mean_nss = mean(group.iter().map(|p| p.model.nss));
            let base = mean(group.iter().map(|p| p.baseline_nss));
            Some(PositionRow {
                position,
                mean_nss,
                delta_nss: mean_nss - base,
                count: group.len(),
            })
        })
        .collect();
    Ok(EvalReport {
        dataset_id: dataset.id.clone(),
        model_id: model_id.to_string(),
        step_n: n,
        mode,
        mean_nss: mean(pairs.iter().map(|p| p.model.nss)),
        mean_auc: mean(pairs.iter().map(|p| p.model.auc)),
        baseline_nss: mean(pairs.iter().map(|p| p.baseline_nss)),
        baseline_auc: mean(pairs.iter().map(|p| p.baseline_auc)),
        excluded: scores.excluded,
        per_position,
        sample_count: pairs.len(),
        config_fingerprint: config_fingerprint(dataset, params, profile, n, mode),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionDelta {
    pub position: usize,
    pub delta_nss: f64,
}

/// Differences `a - b` between two reports on the same data and step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDelta {
    pub mean_nss: f64,
    pub mean_auc: f64,
    /// Positions present in both reports.
    pub per_position: Vec<PositionDelta>,
}

pub fn compare(a: &EvalReport, b: &EvalReport) -> Result<ReportDelta> {
    if a.dataset_id != b.dataset_id {
        return Err(Error::MismatchedConfig(format!(
            "datasets differ: {} vs {}",
            a.dataset_id, b.dataset_id
        )));
    }
    if a.step_n != b.step_n || a.mode != b.mode {
        return Err(Error::MismatchedConfig(format!(
            "steps differ: {} {} vs {} {}",
            a.step_n, a.mode, b.step_n, b.mode
        )));
    }
    Ok(ReportDelta {
        mean_nss: a.mean_nss - b.mean_nss,
        mean_auc: a.mean_auc - b.mean_auc,
        per_position: a
            .per_position
            .iter()
            .filter_map(|ra| {
                let rb = b.per_position.iter().find(|r| r.position == ra.position)?;
                Some(PositionDelta {
                    position: ra.position,
                    delta_nss: ra.mean_nss - rb.mean_nss,
                })
            })
            .collect(),
    })
}
