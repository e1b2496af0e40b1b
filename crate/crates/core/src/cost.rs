//! Saccade geometry and the oculomotor cost map.
//!
//! For a candidate target `x` given the previous fixation `p` and the current
//! fixation `c`:
//!
//! ```text
//! C[x] = psi0(|x - c| / ppd) + psi1 * angle(x - c, c - p) + psi2 * angle(x - c, [1, 0])
//! ```
//!
//! Degenerate vectors (zero-length candidate or previous saccade) contribute
//! an angle of 0.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{Dims, Grid, PixelCoord};
use crate::io::CostProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaccadeGeometry {
    pub amplitude: f64,
    pub relative_angle: f64,
    pub absolute_angle: f64,
}

impl SaccadeGeometry {
    pub fn new(prev: PixelCoord, current: PixelCoord, next: PixelCoord) -> Self {
        Self {
            amplitude: amplitude(current, next),
            relative_angle: relative_angle(prev, current, next),
            absolute_angle: absolute_angle(current, next),
        }
    }

    pub fn value(&self, profile: &CostProfile) -> f64 {
        profile.amplitude_value(self.amplitude)
            + profile.psi1 * self.relative_angle
            + profile.psi2 * self.absolute_angle
    }
}

pub fn amplitude(from: PixelCoord, to: PixelCoord) -> f64 {
    (to.x - from.x).hypot(to.y - from.y)
}

fn angle_between(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let na = ax.hypot(ay);
    let nb = bx.hypot(by);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    ((ax * bx + ay * by) / (na * nb)).clamp(-1.0, 1.0).acos()
}

/// Angle in `[0, pi]` between the previous saccade `prev -> current` and the
/// candidate saccade `current -> next`.
pub fn relative_angle(prev: PixelCoord, current: PixelCoord, next: PixelCoord) -> f64 {
    angle_between(
        next.x - current.x,
        next.y - current.y,
        current.x - prev.x,
        current.y - prev.y,
    )
}

/// Angle in `[0, pi]` between the candidate saccade and the rightward axis;
/// upward and downward saccades of the same slant fold together.
pub fn absolute_angle(current: PixelCoord, next: PixelCoord) -> f64 {
    angle_between(next.x - current.x, next.y - current.y, 1.0, 0.0)
}

/// Cost map over every pixel of `dims` for the fixation pair `(prev, current)`.
pub fn cost_map(
    dims: Dims,
    prev: PixelCoord,
    current: PixelCoord,
    profile: &CostProfile,
) -> Result<Grid> {
    dims.check_inside(prev)?;
    dims.check_inside(current)?;
    let (sx, sy) = (current.x - prev.x, current.y - prev.y);
    let prev_norm = sx.hypot(sy);
    let mut values = Vec::with_capacity(dims.len());
    for row in 0..dims.height {
        let dy = row as f64 - current.y;
        for col in 0..dims.width {
            let dx = col as f64 - current.x;
            let amp = dx.hypot(dy);
            let (rel, abs) = if amp == 0.0 {
                (0.0, 0.0)
            } else {
                let rel = if prev_norm == 0.0 {
                    0.0
                } else {
                    ((dx * sx + dy * sy) / (amp * prev_norm)).clamp(-1.0, 1.0).acos()
                };
                (rel, (dx / amp).clamp(-1.0, 1.0).acos())
            };
            values.push(profile.amplitude_value(amp) + profile.psi1 * rel + profile.psi2 * abs);
        }
    }
    Grid::new(dims.width, dims.height, values)
}
