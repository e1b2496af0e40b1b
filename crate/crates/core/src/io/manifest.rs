//! Dataset manifests and loading a dataset at working resolution.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::scanpath::{read_scanpaths, Scanpath};
use super::{import_pgm, read_raster};
use crate::error::{Error, Result};
use crate::grid::{downscale_bilinear, Dims, Grid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub image_id: String,
    pub saliency_path: PathBuf,
    pub image_width: usize,
    pub image_height: usize,
    pub scanpath_source: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub downscale_factor: usize,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: DatasetManifest =
            serde_json::from_str(text).map_err(|e| Error::SchemaViolation(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.downscale_factor == 0 {
            return Err(Error::SchemaViolation(
                "downscale_factor must be at least 1".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.image_id.as_str()) {
                return Err(Error::SchemaViolation(format!(
                    "duplicate image_id `{}`",
                    e.image_id
                )));
            }
            if e.image_width == 0 || e.image_height == 0 {
                return Err(Error::SchemaViolation(format!(
                    "image `{}` has a zero dimension",
                    e.image_id
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Reject fixations outside the declared image bounds instead of clamping.
    pub strict: bool,
}

/// One image at working resolution with its observers' scanpaths.
#[derive(Debug, Clone)]
pub struct ImageData {
    pub image_id: String,
    pub saliency: Arc<Grid>,
    pub scanpaths: Vec<Scanpath>,
}

/// A dataset with saliency maps and scanpaths mapped onto the working grid.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub id: String,
    pub images: Vec<ImageData>,
}

impl Dataset {
    /// Loads every manifest entry. Relative paths resolve against the manifest's directory.
    ///
    /// A saliency raster at the declared image size is downscaled by the
    /// manifest factor; one already at working size is used as is.
    pub fn load(manifest_path: impl AsRef<Path>, options: LoadOptions) -> Result<Self> {
        let manifest_path = manifest_path.as_ref();
        let manifest = DatasetManifest::load(manifest_path)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let id = manifest_path
            .file_stem()
            .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
        Self::from_manifest(id, &manifest, base, options)
    }

    pub fn from_manifest(
        id: impl Into<String>,
        manifest: &DatasetManifest,
        base: &Path,
        options: LoadOptions,
    ) -> Result<Self> {
        manifest.validate()?;
        let factor = manifest.downscale_factor;
        let mut csv_cache: BTreeMap<PathBuf, Vec<Scanpath>> = BTreeMap::new();
        let mut images = Vec::with_capacity(manifest.entries.len());
        for entry in &manifest.entries {
            let sal_path = base.join(&entry.saliency_path);
            let raw = if sal_path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
            {
                import_pgm(&sal_path)?
            } else {
                read_raster(&sal_path)?
            };
            let working = Dims::new(entry.image_width / factor, entry.image_height / factor);
            if working.is_empty() {
                return Err(Error::ZeroDimension);
            }
            let saliency = if raw.dims() == Dims::new(entry.image_width, entry.image_height) {
                downscale_bilinear(&raw, factor)?
            } else if raw.dims() == working {
                raw
            } else {
                return Err(Error::DimensionMismatch {
                    left: (raw.width(), raw.height()),
                    right: (entry.image_width, entry.image_height),
                });
            };

            let csv_path = base.join(&entry.scanpath_source);
            if !csv_cache.contains_key(&csv_path) {
                let parsed = read_scanpaths(&csv_path)?;
                csv_cache.insert(csv_path.clone(), parsed);
            }
            let image = (entry.image_width as f64, entry.image_height as f64);
            let scanpaths = csv_cache[&csv_path]
                .iter()
                .filter(|sp| sp.image_id == entry.image_id)
                .map(|sp| sp.to_working(image, factor, working, options.strict))
                .collect::<Result<Vec<_>>>()?;
            images.push(ImageData {
                image_id: entry.image_id.clone(),
                saliency: Arc::new(saliency),
                scanpaths,
            });
        }
        Ok(Self {
            id: id.into(),
            images,
        })
    }

    pub fn scanpath_count(&self) -> usize {
        self.images.iter().map(|i| i.scanpaths.len()).sum()
    }

    /// SHA-256 over the loaded content: ids, map values and working coordinates.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for img in &self.images {
            h.update(img.image_id.as_bytes());
            h.update([0]);
            h.update((img.saliency.width() as u64).to_le_bytes());
            h.update((img.saliency.height() as u64).to_le_bytes());
            for v in img.saliency.values() {
                h.update(v.to_le_bytes());
            }
            for sp in &img.scanpaths {
                h.update(sp.subject_id.as_bytes());
                h.update([0]);
                for p in &sp.fixations {
                    h.update(p.x.to_le_bytes());
                    h.update(p.y.to_le_bytes());
                }
            }
        }
        hex::encode(h.finalize())
    }
}
