//! Scanpath CSV: `image_id,subject_id,fixation_index,x,y`, one fixation per row.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Dims, PixelCoord};

pub const COLUMNS: [&str; 5] = ["image_id", "subject_id", "fixation_index", "x", "y"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanpathRecord {
    pub image_id: String,
    pub subject_id: String,
    /// 1-based ordinal position within the scanpath.
    pub fixation_index: usize,
    pub x: f64,
    pub y: f64,
}

/// One observer's ordered fixations on one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scanpath {
    pub image_id: String,
    pub subject_id: String,
    pub fixations: Vec<PixelCoord>,
}

impl Scanpath {
    pub fn len(&self) -> usize {
        self.fixations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixations.is_empty()
    }

    /// Maps original-resolution coordinates onto the working grid.
    ///
    /// Fixations outside `image` (original pixels) are an error when `strict`,
    /// otherwise clamped. Coordinates are then divided by `factor` and clamped
    /// to `[0, dim - 1]` of `working`.
    pub fn to_working(
        &self,
        image: (f64, f64),
        factor: usize,
        working: Dims,
        strict: bool,
    ) -> Result<Scanpath> {
        let (iw, ih) = image;
        let f = factor as f64;
        let fixations = self
            .fixations
            .iter()
            .map(|p| {
                let inside = p.x >= 0.0 && p.y >= 0.0 && p.x < iw && p.y < ih;
                if strict && !inside {
                    return Err(Error::OutOfBounds {
                        image_id: self.image_id.clone(),
                        x: p.x,
                        y: p.y,
                        width: iw,
                        height: ih,
                    });
                }
                Ok(PixelCoord::new(
                    (p.x / f).clamp(0.0, (working.width - 1) as f64),
                    (p.y / f).clamp(0.0, (working.height - 1) as f64),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Scanpath {
            fixations,
            ..self.clone()
        })
    }
}

/// Parses scanpath CSV and groups rows by `(image_id, subject_id)`.
///
/// Groups come back sorted by key, each ordered by `fixation_index`, which must
/// run contiguously from 1.
pub fn parse_scanpaths(source: impl Read) -> Result<Vec<Scanpath>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    for column in COLUMNS {
        if !headers.iter().any(|h| h == column) {
            return Err(Error::MissingColumn(column.to_string()));
        }
    }

    let mut groups: BTreeMap<(String, String), Vec<(usize, PixelCoord)>> = BTreeMap::new();
    for row in reader.deserialize::<ScanpathRecord>() {
        let r = row.map_err(|e| Error::Csv(e.to_string()))?;
        if !r.x.is_finite() || !r.y.is_finite() {
            return Err(Error::Csv(format!(
                "non-finite coordinate for image `{}`",
                r.image_id
            )));
        }
        groups
            .entry((r.image_id, r.subject_id))
            .or_default()
            .push((r.fixation_index, PixelCoord::new(r.x, r.y)));
    }

    groups
        .into_iter()
        .map(|((image_id, subject_id), mut rows)| {
            rows.sort_by_key(|&(i, _)| i);
            if rows.iter().enumerate().any(|(k, &(i, _))| i != k + 1) {
                return Err(Error::NonContiguousIndices {
                    image_id,
                    subject_id,
                });
            }
            Ok(Scanpath {
                image_id,
                subject_id,
                fixations: rows.into_iter().map(|(_, p)| p).collect(),
            })
        })
        .collect()
}

pub fn read_scanpaths(path: impl AsRef<Path>) -> Result<Vec<Scanpath>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_scanpaths(std::io::BufReader::new(file))
}

/// Writes scanpaths back out in the CSV layout `parse_scanpaths` reads.
pub fn write_scanpaths(scanpaths: &[Scanpath], out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for sp in scanpaths {
        for (k, p) in sp.fixations.iter().enumerate() {
            w.serialize(ScanpathRecord {
                image_id: sp.image_id.clone(),
                subject_id: sp.subject_id.clone(),
                fixation_index: k + 1,
                x: p.x,
                y: p.y,
            })
            .map_err(|e| Error::Csv(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}
