//! Dense row-major rasters and the pixel primitives shared by every map.
//!
//! Pixel `(col, row)` has its center at the real coordinate `(col, row)`;
//! `x` grows to the right and `y` grows downward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location on a grid in pixel units, origin at the top-left pixel center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelCoord {
    pub x: f64,
    pub y: f64,
}

impl PixelCoord {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

impl From<(f64, f64)> for PixelCoord {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Width and height of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub width: usize,
    pub height: usize,
}

impl Dims {
    pub const fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub const fn len(&self) -> usize {
        self.width * self.height
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when `floor(x) < width` and `floor(y) < height` with both non-negative.
    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x >= 0.0
            && p.y >= 0.0
            && p.x.floor() < self.width as f64
            && p.y.floor() < self.height as f64
    }

    pub fn check_inside(&self, p: PixelCoord) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfBoundsFixation {
                x: p.x,
                y: p.y,
                width: self.width,
                height: self.height,
            })
        }
    }

    /// Geometric center, `((w-1)/2, (h-1)/2)`.
    pub fn center(&self) -> PixelCoord {
        PixelCoord::new(
            (self.width as f64 - 1.0) / 2.0,
            (self.height as f64 - 1.0) / 2.0,
        )
    }

    /// Nearest pixel to `p`: round half up, then clamp into the grid.
    pub fn nearest_pixel(&self, p: PixelCoord) -> (usize, usize) {
        let snap = |v: f64, n: usize| -> usize {
            let r = (v + 0.5).floor();
            if r <= 0.0 || r.is_nan() {
                0
            } else {
                (r as usize).min(n - 1)
            }
        };
        (snap(p.x, self.width), snap(p.y, self.height))
    }
}

/// A dense 2-D raster of finite `f64` values stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: Dims,
    values: Vec<f64>,
}

impl Grid {
    /// Builds a grid, checking the payload length and that every value is finite.
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension);
        }
        if values.len() != width * height {
            return Err(Error::BadPayloadLength {
                expected: width * height,
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self {
            dims: Dims::new(width, height),
            values,
        })
    }

    pub fn filled(dims: Dims, value: f64) -> Self {
        assert!(!dims.is_empty() && value.is_finite());
        Self {
            dims,
            values: vec![value; dims.len()],
        }
    }

    pub fn zeros(dims: Dims) -> Self {
        Self::filled(dims, 0.0)
    }

    /// Evaluates `f(col, row)` at every pixel.
    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(!dims.is_empty());
        let mut values = Vec::with_capacity(dims.len());
        for row in 0..dims.height {
            for col in 0..dims.width {
                values.push(f(col, row));
            }
        }
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { dims, values }
    }

    /// Builds a grid from nested rows, mostly for tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::BadPayloadLength {
                expected: width * height,
                found: rows.iter().map(|r| r.len()).sum(),
            });
        }
        Self::new(width, height, rows.concat())
    }

    pub(crate) fn from_raw(dims: Dims, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), dims.len());
        Self { dims, values }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn width(&self) -> usize {
        self.dims.width
    }

    pub fn height(&self) -> usize {
        self.dims.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.dims.width + col]
    }

    /// Value at the pixel nearest to `p` (round half up, clamped).
    pub fn sample_nearest(&self, p: PixelCoord) -> f64 {
        let (c, r) = self.dims.nearest_pixel(p);
        self.get(c, r)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies `f` to every value, rejecting non-finite results.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Grid> {
        Grid::new(
            self.width(),
            self.height(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Bilinear sample at a real source position, clamped to the border.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let (w, h) = (self.width(), self.height());
        let x = x.clamp(0.0, (w - 1) as f64);
        let y = y.clamp(0.0, (h - 1) as f64);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(w - 1);
        let y1 = (y0 + 1).min(h - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

/// Shrinks `g` by an integer factor in both dimensions.
///
/// Output pixel `(i, j)` is the bilinear sample of `g` at the center of its
/// `factor x factor` source block, `((i + 0.5) * factor - 0.5, (j + 0.5) * factor - 0.5)`.
/// Output dimensions use floor division.
pub fn downscale_bilinear(g: &Grid, factor: usize) -> Result<Grid> {
    if factor == 0 {
        return Err(Error::ZeroDimension);
    }
    if factor == 1 {
        return Ok(g.clone());
    }
    let dims = Dims::new(g.width() / factor, g.height() / factor);
    if dims.is_empty() {
        return Err(Error::ZeroDimension);
    }
    let f = factor as f64;
    Ok(Grid::from_fn(dims, |i, j| {
        g.sample_bilinear((i as f64 + 0.5) * f - 0.5, (j as f64 + 0.5) * f - 0.5)
    }))
}

/// Mean and population standard deviation, computed in two passes.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Mean and standard deviation, failing with [`Error::ConstantMap`] on zero spread.
pub(crate) fn moments_checked(g: &Grid) -> Result<(f64, f64)> {
    let values = g.values();
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Err(Error::ConstantMap);
    }
    let (mean, std) = mean_std(values);
    if std == 0.0 || !std.is_finite() {
        return Err(Error::ConstantMap);
    }
    Ok((mean, std))
}

/// `(g - mean) / std` with the population standard deviation.
pub fn standardize(g: &Grid) -> Result<Grid> {
    if g.dims().len() < 2 {
        return Err(Error::ConstantMap);
    }
    let (mean, std) = moments_checked(g)?;
    Ok(Grid::from_raw(
        g.dims(),
        g.values().iter().map(|v| (v - mean) / std).collect(),
    ))
}

/// Coordinate of the largest value; ties go to the first cell in row-major order.
pub fn argmax(g: &Grid) -> PixelCoord {
    let mut best = 0;
    for (i, &v) in g.values().iter().enumerate() {
        if v > g.values()[best] {
            best = i;
        }
    }
    PixelCoord::new((best % g.width()) as f64, (best / g.width()) as f64)
}

/// Pointwise `sum_k coeff_k * grid_k`, accumulated in the given term order.
pub fn lincomb(terms: &[(f64, &Grid)]) -> Result<Grid> {
    let (first_coeff, first) = terms.first().ok_or(Error::EmptyCombination)?;
    let dims = first.dims();
    for (_, g) in &terms[1..] {
        if g.dims() != dims {
            return Err(Error::DimensionMismatch {
                left: (dims.width, dims.height),
                right: (g.width(), g.height()),
            });
        }
    }
    let mut out: Vec<f64> = first.values().iter().map(|v| first_coeff * v).collect();
    for (c, g) in &terms[1..] {
        for (o, v) in out.iter_mut().zip(g.values()) {
            *o += c * v;
        }
    }
    Grid::new(dims.width, dims.height, out)
}
