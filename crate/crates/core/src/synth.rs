//! Synthetic datasets drawn from the model itself.
//!
//! Saliency maps are sums of random Gaussian blobs scaled to `[0, 1]`.
//! Scanpaths are sampled one fixation at a time from `softmax(V / T)` over the
//! current value map, so the generating parameters are known exactly.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Dims, Grid, PixelCoord};
use crate::io::{json, CostProfile, Dataset, DatasetManifest, ImageData, ManifestEntry, ModelParams, Scanpath};
use crate::value::PredictionContext;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub images: usize,
    pub scanpaths_per_image: usize,
    pub scanpath_length: usize,
    /// Softmax temperature; lower values follow the value map more closely.
    pub temperature: f64,
    pub blobs: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 48,
            images: 100,
            scanpaths_per_image: 20,
            scanpath_length: 8,
            temperature: 0.1,
            blobs: 6,
            seed: 0,
        }
    }
}

/// Sum of `blobs` Gaussian bumps with random centers, widths and heights,
/// rescaled to span `[0, 1]`. Values are rounded to `f32` so the map survives
/// a raster round trip unchanged.
pub fn random_blob_saliency(dims: Dims, blobs: usize, rng: &mut impl Rng) -> Grid {
    let bumps: Vec<(f64, f64, f64, f64)> = (0..blobs.max(1))
        .map(|_| {
            let scale = dims.width.min(dims.height) as f64;
            (
                rng.gen_range(0.0..dims.width as f64),
                rng.gen_range(0.0..dims.height as f64),
                rng.gen_range(0.04..0.2) * scale,
                rng.gen_range(0.2..1.0),
            )
        })
        .collect();
    let raw = Grid::from_fn(dims, |col, row| {
        bumps
            .iter()
            .map(|&(cx, cy, s, a)| {
                let d2 = (col as f64 - cx).powi(2) + (row as f64 - cy).powi(2);
                a * (-d2 / (2.0 * s * s)).exp()
            })
            .sum()
    });
    let (lo, hi) = (raw.min(), raw.max());
    Grid::from_fn(dims, |col, row| ((raw.get(col, row) - lo) / (hi - lo)) as f32 as f64)
}

/// Draws a pixel with probability proportional to `exp(v / temperature)`.
pub fn softmax_sample(map: &Grid, temperature: f64, rng: &mut impl Rng) -> PixelCoord {
    let max = map.max();
    let weights: Vec<f64> = map.values().iter().map(|v| ((v - max) / temperature).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut index = weights.len() - 1;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            index = i;
            break;
        }
        u -= w;
    }
    PixelCoord::new((index % map.width()) as f64, (index / map.width()) as f64)
}

/// One scanpath sampled from the model's value maps.
pub fn sample_scanpath(
    saliency: &Arc<Grid>,
    params: &ModelParams,
    profile: &CostProfile,
    length: usize,
    temperature: f64,
    rng: &mut impl Rng,
) -> Result<Vec<PixelCoord>> {
    let mut ctx = PredictionContext::new(Arc::clone(saliency), Vec::new(), params.clone(), profile.clone())?;
    for _ in 0..length {
        let next = softmax_sample(&ctx.value_map()?, temperature, rng);
        ctx.history.push(next);
    }
    Ok(ctx.history)
}

/// A dataset of random-blob saliency maps with model-sampled scanpaths.
pub fn synthetic_dataset(
    config: &SynthConfig,
    params: &ModelParams,
    profile: &CostProfile,
) -> Result<Dataset> {
    if !(config.temperature > 0.0) {
        return Err(Error::SchemaViolation("temperature must be positive".into()));
    }
    let dims = Dims::new(config.width, config.height);
    if dims.is_empty() {
        return Err(Error::ZeroDimension);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let images = (0..config.images)
        .map(|i| {
            let saliency = Arc::new(random_blob_saliency(dims, config.blobs, &mut rng));
            let image_id = format!("synth{i:04}");
            let scanpaths = (0..config.scanpaths_per_image)
                .map(|s| {
                    Ok(Scanpath {
                        image_id: image_id.clone(),
                        subject_id: format!("obs{s:03}"),
                        fixations: sample_scanpath(
                            &saliency,
                            params,
                            profile,
                            config.scanpath_length,
                            config.temperature,
                            &mut rng,
                        )?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ImageData {
                image_id,
                saliency,
                scanpaths,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        id: format!("synthetic-{}", config.seed),
        images,
    })
}

/// Writes `dataset` as SMR rasters, one scanpath CSV and a manifest with
/// downscale factor 1. Returns the manifest path.
pub fn write_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    let mut scanpaths = Vec::new();
    for img in &dataset.images {
        let name = format!("{}.smr", img.image_id);
        crate::io::write_raster(&img.saliency, dir.join(&name))?;
        entries.push(ManifestEntry {
            image_id: img.image_id.clone(),
            saliency_path: name.into(),
            image_width: img.saliency.width(),
            image_height: img.saliency.height(),
            scanpath_source: "scanpaths.csv".into(),
        });
        scanpaths.extend(img.scanpaths.iter().cloned());
    }
    let csv_path = dir.join("scanpaths.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    crate::io::scanpath::write_scanpaths(&scanpaths, std::io::BufWriter::new(file))?;
    let manifest = DatasetManifest {
        downscale_factor: 1,
        entries,
    };
    let path = dir.join(format!("{}.json", dataset.id));
    std::fs::write(&path, json::to_string_pretty(&manifest)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
