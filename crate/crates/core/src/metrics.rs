//! Fixation-level scoring of a map: normalized scanpath saliency (NSS) and
//! single-positive ROC area (AUC).
//!
//! Fixations are mapped to the nearest pixel (round half up, clamped).

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{moments_checked, Grid, PixelCoord};

/// One scored prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSample {
    pub image_id: String,
    pub subject_id: String,
    /// 1-based position of the predicted fixation in its scanpath.
    pub ordinal_position: usize,
    pub nss: f64,
    pub auc: f64,
}

/// Mean and standard deviation of a map, reused across many fixations.
#[derive(Debug, Clone, Copy)]
pub struct Standardizer {
    mean: f64,
    std: f64,
}

impl Standardizer {
    pub fn new(map: &Grid) -> Result<Self> {
        let (mean, std) = moments_checked(map)?;
        Ok(Self { mean, std })
    }

    pub fn z(&self, value: f64) -> f64 {
        (value - self.mean) / self.std
    }
}

/// Standardized map value at the fixation.
pub fn nss_at(map: &Grid, fix: PixelCoord) -> Result<f64> {
    Ok(Standardizer::new(map)?.z(map.sample_nearest(fix)))
}

/// Mean NSS over `fixations`, standardizing the map once.
///
/// # Panics
///
/// If `fixations` is empty.
pub fn nss_set(map: &Grid, fixations: &[PixelCoord]) -> Result<f64> {
    assert!(!fixations.is_empty(), "nss_set needs at least one fixation");
    let z = Standardizer::new(map)?;
    let sum: f64 = fixations.iter().map(|&f| z.z(map.sample_nearest(f))).sum();
    Ok(sum / fixations.len() as f64)
}

/// ROC area with the fixated pixel as the only positive and every other pixel
/// as a negative; ties with negatives count one half.
///
/// # Panics
///
/// If the map has a single pixel.
pub fn auc_at(map: &Grid, fix: PixelCoord) -> f64 {
    let n = map.values().len();
    assert!(n >= 2, "auc_at needs at least two pixels");
    let (col, row) = map.dims().nearest_pixel(fix);
    let target = row * map.width() + col;
    let v = map.values()[target];
    let mut below = 0usize;
    let mut ties = 0usize;
    for (i, &x) in map.values().iter().enumerate() {
        if x < v {
            below += 1;
        } else if x == v && i != target {
            ties += 1;
        }
    }
    (below as f64 + 0.5 * ties as f64) / (n - 1) as f64
}

/// Mean of [`auc_at`] over the fixations.
///
/// # Panics
///
/// If `fixations` is empty.
pub fn auc_set(map: &Grid, fixations: &[PixelCoord]) -> f64 {
    assert!(!fixations.is_empty(), "auc_set needs at least one fixation");
    fixations.iter().map(|&f| auc_at(map, f)).sum::<f64>() / fixations.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::grid::{standardize, Dims};
    use rand::{Rng, SeedableRng};

    fn at(c: usize, r: usize) -> PixelCoord {
        PixelCoord::new(c as f64, r as f64)
    }

    #[test]
    fn nss_examples() {
        let g = Grid::new(3, 3, (1..=9).map(f64::from).collect()).unwrap();
        let nss = nss_at(&g, at(2, 2)).unwrap();
        assert!((nss - 4.0 / (60.0f64 / 9.0).sqrt()).abs() < 1e-12);
        let moved = g.map(|v| 2.5 * v - 7.0).unwrap();
        assert!((nss_at(&moved, at(2, 2)).unwrap() - nss).abs() < 1e-12);
        assert!(matches!(
            nss_at(&Grid::filled(Dims::new(3, 3), 4.0), at(0, 0)),
            Err(Error::ConstantMap)
        ));
    }

    #[test]
    fn nss_set_examples() {
        let g = Grid::new(3, 3, (1..=9).map(f64::from).collect()).unwrap();
        assert_eq!(nss_set(&g, &[at(1, 1)]).unwrap(), nss_at(&g, at(1, 1)).unwrap());
        let sym = nss_set(&g, &[at(0, 0), at(2, 2)]).unwrap();
        assert!(sym.abs() < 1e-15);

        let all: Vec<_> = (0..3).flat_map(|r| (0..3).map(move |c| at(c, r))).collect();
        assert!(nss_set(&g, &all).unwrap().abs() < 1e-12);
    }

    #[test]
    fn nss_set_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let g = Grid::from_fn(Dims::new(16, 16), |_, _| rng.gen_range(-3.0..3.0));
            let fixes: Vec<_> = (0..10)
                .map(|_| PixelCoord::new(rng.gen_range(0.0..15.5), rng.gen_range(0.0..15.5)))
                .collect();
            let z = standardize(&g).unwrap();
            let oracle = fixes
                .iter()
                .map(|f| {
                    let (c, r) = ((f.x + 0.5).floor() as usize, (f.y + 0.5).floor() as usize);
                    z.get(c.min(15), r.min(15))
                })
                .sum::<f64>()
                / 10.0;
            assert!((nss_set(&g, &fixes).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn auc_examples() {
        let mut values = vec![0.0; 16];
        values[5] = 1.0;
        let g = Grid::new(4, 4, values).unwrap();
        assert_eq!(auc_at(&g, at(1, 1)), 1.0);
        assert_eq!(auc_at(&Grid::filled(Dims::new(4, 4), 3.0), at(2, 2)), 0.5);
        let g = g.map(|v| 1.0 - v).unwrap();
        assert_eq!(auc_at(&g, at(1, 1)), 0.0);
        assert_eq!(auc_set(&g, &[at(1, 1)]), auc_at(&g, at(1, 1)));
    }

    #[test]
    fn auc_set_on_joint_maxima() {
        let mut values = vec![0.0; 25];
        values[3] = 5.0;
        values[17] = 5.0;
        let g = Grid::new(5, 5, values).unwrap();
        // each fixated cell ties with the other maximum
        let both = auc_set(&g, &[at(3, 0), at(2, 3)]);
        assert!((both - (23.0 + 0.5) / 24.0).abs() < 1e-15);
        let mut values = vec![0.0; 25];
        values[3] = 5.0;
        let g = Grid::new(5, 5, values).unwrap();
        assert_eq!(auc_set(&g, &[at(3, 0), at(3, 0)]), 1.0);
    }

    #[test]
    fn auc_invariant_under_monotone_transforms() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let g = Grid::from_fn(Dims::new(16, 16), |_, _| (rng.gen_range(0..12) as f64) * 0.25);
            let f = PixelCoord::new(rng.gen_range(0.0..15.0), rng.gen_range(0.0..15.0));
            let base = auc_at(&g, f);
            assert!((0.0..=1.0).contains(&base));
            let e = g.map(f64::exp).unwrap();
            let a = g.map(|v| 3.0 * v + 2.0).unwrap();
            assert!((auc_at(&e, f) - base).abs() < 1e-12);
            assert!((auc_at(&a, f) - base).abs() < 1e-12);
        }
    }

    /// ROC built by sweeping every distinct map value as a threshold and
    /// integrating with the trapezoid rule.
    fn sweep_auc(values: &[f64], target: usize) -> f64 {
        let mut thresholds: Vec<f64> = values.to_vec();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let negatives = (values.len() - 1) as f64;
        let mut points = vec![(0.0, 0.0)];
        for thr in thresholds {
            let tpr = if values[target] >= thr { 1.0 } else { 0.0 };
            let fp = values
                .iter()
                .enumerate()
                .filter(|&(i, &v)| i != target && v >= thr)
                .count();
            points.push((fp as f64 / negatives, tpr));
        }
        points.push((1.0, 1.0));
        points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
            .sum()
    }

    #[test]
    fn auc_matches_threshold_sweep() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for case in 0..40 {
            let g = if case % 2 == 0 {
                Grid::from_fn(Dims::new(16, 16), |_, _| rng.gen_range(-1.0..1.0))
            } else {
                Grid::from_fn(Dims::new(16, 16), |_, _| rng.gen_range(0..5) as f64)
            };
            let (c, r) = (rng.gen_range(0..16), rng.gen_range(0..16));
            let oracle = sweep_auc(g.values(), r * 16 + c);
            assert!((auc_at(&g, at(c, r)) - oracle).abs() < 1e-9);
        }
    }
}
