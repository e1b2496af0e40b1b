//! SMR raster files.
//!
//! ```text
//! SMR1\n
//! <width> <height>\n
//! width*height little-endian binary32 values, row-major from the top-left
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

const MAGIC: &[u8] = b"SMR1\n";

/// Serializes a grid; values are narrowed to binary32.
pub fn encode_raster(g: &Grid) -> Result<Vec<u8>> {
    let header = format!("{} {}\n", g.width(), g.height());
    let mut out = Vec::with_capacity(MAGIC.len() + header.len() + 4 * g.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(header.as_bytes());
    for (index, &v) in g.values().iter().enumerate() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(Error::NonFiniteValue { index });
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_raster(bytes: &[u8]) -> Result<Grid> {
    let rest = bytes
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::MalformedHeader("missing SMR1 magic line".into()))?;
    let eol = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MalformedHeader("missing dimension line".into()))?;
    let line = std::str::from_utf8(&rest[..eol])
        .map_err(|_| Error::MalformedHeader("dimension line is not ASCII".into()))?;
    let mut parts = line.split(' ');
    let mut dim = |name: &str| -> Result<usize> {
        parts
            .next()
            .and_then(|p| p.parse::<usize>().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::MalformedHeader(format!("bad {name} in `{line}`")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    if parts.next().is_some() {
        return Err(Error::MalformedHeader(format!(
            "unexpected fields in `{line}`"
        )));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    let payload = &rest[eol + 1..];
    if payload.len() < 4 * expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len() / 4,
        });
    }
    if payload.len() > 4 * expected {
        return Err(Error::MalformedHeader(format!(
            "{} trailing bytes after payload",
            payload.len() - 4 * expected
        )));
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .enumerate()
        .map(|(index, v)| {
            if v.is_finite() {
                Ok(f64::from(v))
            } else {
                Err(Error::NonFiniteValue { index })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Grid::new(width, height, values)
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_raster(&bytes)
}

pub fn write_raster(g: &Grid, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_raster(g)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
