//! Binary grayscale PGM (`P5`) import.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Decodes an 8- or 16-bit `P5` image; pixel `p` becomes `p / maxval`.
pub fn decode_pgm(bytes: &[u8]) -> Result<Grid> {
    let unsupported = |why: &str| Error::UnsupportedFormat(why.to_string());
    if !bytes.starts_with(b"P5") {
        return Err(unsupported("only binary PGM (P5) is supported"));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments between header tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| unsupported("malformed PGM header"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(unsupported("malformed PGM header"));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(unsupported("PGM dimensions or maxval out of range"));
    }
    let n = width * height;
    let data = &bytes[pos..];
    let scale = maxval as f64;
    let values: Vec<f64> = if maxval < 256 {
        if data.len() < n {
            return Err(unsupported("PGM pixel data truncated"));
        }
        data[..n].iter().map(|&p| f64::from(p) / scale).collect()
    } else {
        if data.len() < 2 * n {
            return Err(unsupported("PGM pixel data truncated"));
        }
        data[..2 * n]
            .chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])) / scale)
            .collect()
    };
    Grid::new(width, height, values)
}

pub fn import_pgm(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}
