//! Acceptance gate. Every criterion runs in sequence and reports one line on
//! stderr; the test fails if any of them fails.
//!
//! Run with `cargo test -p gazeval-cli --test acceptance -- --nocapture`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::panic::AssertUnwindSafe;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gazeval_core::cost::{absolute_angle, amplitude, cost_map, relative_angle};
use gazeval_core::exploration::{exploration_map, gaussian_at, ExplorationParams};
use gazeval_core::io::{decode_raster, encode_raster, AmplitudeTable, Dataset};
use gazeval_core::optim::{minimize, Bounds, LbfgsbOptions};
use gazeval_core::synth::{synthetic_dataset, write_dataset, SynthConfig};
use gazeval_core::{
    auc_at, evaluate, fitting, nss_at, presets, CostProfile, Dims, Error, FitConfig, Grid, ModelParams, NStepMode,
    PhiIndexing, PixelCoord, PredictionContext,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(label: &str, elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{label} took {elapsed:.2?}, limit {limit:.0?}"))
}

fn p(x: f64, y: f64) -> PixelCoord {
    PixelCoord::new(x, y)
}

fn random_point(rng: &mut impl Rng, dims: Dims) -> PixelCoord {
    p(rng.gen_range(0.0..dims.width as f64 - 1.0), rng.gen_range(0.0..dims.height as f64 - 1.0))
}

// ---- oracles, written without touching the library's internals ----

fn oracle_pixel(dims: Dims, f: PixelCoord) -> usize {
    let col = ((f.x + 0.5).floor().max(0.0) as usize).min(dims.width - 1);
    let row = ((f.y + 0.5).floor().max(0.0) as usize).min(dims.height - 1);
    row * dims.width + col
}

fn oracle_nss(map: &Grid, f: PixelCoord) -> f64 {
    let v = map.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    let standardized: Vec<f64> = v.iter().map(|x| (x - mean) / std).collect();
    standardized[oracle_pixel(map.dims(), f)]
}

/// ROC area from a full threshold sweep: one positive, every other pixel a
/// negative, trapezoids between consecutive operating points.
fn oracle_auc(map: &Grid, f: PixelCoord) -> f64 {
    let v = map.values();
    let pos = oracle_pixel(map.dims(), f);
    let positive = v[pos];
    let negatives: Vec<f64> = v.iter().enumerate().filter(|(i, _)| *i != pos).map(|(_, x)| *x).collect();
    let mut thresholds: Vec<f64> = v.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut points = vec![(0.0, 0.0)];
    for t in thresholds {
        let fpr = negatives.iter().filter(|&&x| x >= t).count() as f64 / negatives.len() as f64;
        let tpr = if positive >= t { 1.0 } else { 0.0 };
        points.push((fpr, tpr));
    }
    points.push((1.0, 1.0));
    points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
}

fn oracle_psi0(profile: &CostProfile, amp_px: f64) -> f64 {
    let t = &profile.amplitude;
    let a = amp_px / profile.pixels_per_degree;
    let mids: Vec<f64> = t.bin_edges.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    if a <= mids[0] {
        return t.values[0];
    }
    if a >= *mids.last().unwrap() {
        return *t.values.last().unwrap();
    }
    for i in 0..mids.len() - 1 {
        if a >= mids[i] && a <= mids[i + 1] {
            let s = (a - mids[i]) / (mids[i + 1] - mids[i]);
            return t.values[i] * (1.0 - s) + t.values[i + 1] * s;
        }
    }
    unreachable!()
}

/// Unsigned angle between two vectors via atan2, 0 if either is zero.
fn oracle_angle(a: (f64, f64), b: (f64, f64)) -> f64 {
    if (a.0 == 0.0 && a.1 == 0.0) || (b.0 == 0.0 && b.1 == 0.0) {
        return 0.0;
    }
    let cross = a.0 * b.1 - a.1 * b.0;
    let dot = a.0 * b.0 + a.1 * b.1;
    cross.abs().atan2(dot)
}

fn oracle_value(s: &Grid, history: &[PixelCoord], params: &ModelParams, profile: &CostProfile, col: usize, row: usize) -> f64 {
    let x = p(col as f64, row as f64);
    let t = history.len() - 1;
    let cur = history[t];
    let prev = if t == 0 { s.dims().center() } else { history[t - 1] };
    let d = (x.x - cur.x, x.y - cur.y);
    let amp = (d.0 * d.0 + d.1 * d.1).sqrt();
    let c = oracle_psi0(profile, amp)
        + profile.psi1 * oracle_angle(d, (cur.x - prev.x, cur.y - prev.y))
        + profile.psi2 * oracle_angle(d, (1.0, 0.0));
    let var = params.sigma * params.sigma;
    let e: f64 = history
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let phi = params.phis[(t - i).min(params.phis.len() - 1)];
            let r2 = (x.x - h.x).powi(2) + (x.y - h.y).powi(2);
            phi * (-r2 / (2.0 * var)).exp() / (2.0 * PI * var)
        })
        .sum();
    params.w0 * s.get(col, row) + params.w1 * c + params.w2 * e
}

fn random_profile(rng: &mut impl Rng) -> CostProfile {
    let bins = rng.gen_range(1..8);
    let mut edge = 0.0;
    let mut bin_edges = vec![edge];
    for _ in 0..bins {
        edge += rng.gen_range(0.2..3.0);
        bin_edges.push(edge);
    }
    CostProfile {
        pixels_per_degree: rng.gen_range(0.5..3.0),
        amplitude: AmplitudeTable {
            bin_edges,
            values: (0..bins).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        },
        psi1: rng.gen_range(-1.0..1.0),
        psi2: rng.gen_range(-1.0..1.0),
    }
}

// ---- criteria ----

fn metric_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let dims = Dims::new(16, 16);
    let (mut worst_nss, mut worst_auc, mut tied) = (0.0f64, 0.0f64, 0);
    for case in 0..200 {
        let map = if case % 2 == 0 {
            Grid::from_fn(dims, |_, _| rng.gen_range(-3.0..3.0))
        } else {
            // a handful of levels, so ties are everywhere
            tied += 1;
            Grid::from_fn(dims, |_, _| rng.gen_range(0..4) as f64 * 0.5)
        };
        for _ in 0..5 {
            let f = p(rng.gen_range(-0.4..15.4), rng.gen_range(-0.4..15.4));
            let nss = nss_at(&map, f).map_err(|e| e.to_string())?;
            worst_nss = worst_nss.max((nss - oracle_nss(&map, f)).abs());
            worst_auc = worst_auc.max((auc_at(&map, f) - oracle_auc(&map, f)).abs());
        }
    }
    ensure(worst_nss <= 1e-12, || format!("nss off by {worst_nss:e}"))?;
    ensure(worst_auc <= 1e-9, || format!("auc off by {worst_auc:e}"))?;
    within_time("metric oracle", t0.elapsed(), Duration::from_secs(5))?;
    Ok(format!("200 grids ({tied} tied), max |dNSS| {worst_nss:.1e}, max |dAUC| {worst_auc:.1e}, {:.2?}", t0.elapsed()))
}

fn value_map_oracle() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let dims = Dims::new(8, 8);
    let params = presets::deepgaze_ii();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let s = Arc::new(Grid::from_fn(dims, |_, _| rng.gen_range(0.0..1.0)));
        let history: Vec<PixelCoord> = (0..3).map(|_| random_point(&mut rng, dims)).collect();
        let profile = random_profile(&mut rng);
        let ctx = PredictionContext::new(Arc::clone(&s), history.clone(), params.clone(), profile.clone())
            .map_err(|e| e.to_string())?;
        let v = ctx.value_map().map_err(|e| e.to_string())?;
        for row in 0..8 {
            for col in 0..8 {
                let want = oracle_value(&s, &history, &params, &profile, col, row);
                worst = worst.max((v.get(col, row) - want).abs());
            }
        }
    }
    ensure(worst <= 1e-10, || format!("value map off by {worst:e}"))?;
    within_time("value-map oracle", t0.elapsed(), Duration::from_secs(5))?;
    Ok(format!("50 contexts, max |dV| {worst:.1e}, {:.2?}", t0.elapsed()))
}

fn geometry() -> Outcome {
    let exact = |label: &str, got: f64, want: f64| ensure(got == want, || format!("{label}: got {got}, want {want}"));
    exact("amp (0,0)->(3,4)", amplitude(p(0.0, 0.0), p(3.0, 4.0)), 5.0)?;
    exact("amp (7,7)->(7,7)", amplitude(p(7.0, 7.0), p(7.0, 7.0)), 0.0)?;
    exact("amp (1,1)->(2,3)", amplitude(p(1.0, 1.0), p(2.0, 3.0)), 5f64.sqrt())?;
    exact("rel straight", relative_angle(p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0)), 0.0)?;
    exact("rel return", relative_angle(p(0.0, 0.0), p(1.0, 0.0), p(0.0, 0.0)), PI)?;
    exact("rel perpendicular", relative_angle(p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0)), FRAC_PI_2)?;
    exact("abs right", absolute_angle(p(0.0, 0.0), p(5.0, 0.0)), 0.0)?;
    exact("abs left", absolute_angle(p(0.0, 0.0), p(-3.0, 0.0)), PI)?;
    exact("abs down", absolute_angle(p(0.0, 0.0), p(0.0, 5.0)), FRAC_PI_2)?;
    exact("abs up", absolute_angle(p(0.0, 0.0), p(0.0, -5.0)), FRAC_PI_2)?;

    let dims = Dims::new(11, 9);
    let zero = CostProfile {
        pixels_per_degree: 1.0,
        amplitude: AmplitudeTable { bin_edges: vec![0.0, 50.0], values: vec![0.0] },
        psi1: 0.0,
        psi2: 0.0,
    };
    let c = cost_map(dims, p(2.0, 3.0), p(6.0, 5.0), &zero).map_err(|e| e.to_string())?;
    ensure(c.values().iter().all(|&v| v == 0.0), || "zero profile gave a nonzero cost".into())?;
    let absolute_only = CostProfile { psi2: 1.0, ..zero };
    let center = dims.center();
    let c = cost_map(dims, p(1.0, 1.0), center, &absolute_only).map_err(|e| e.to_string())?;
    for row in 0..dims.height {
        for col in 0..dims.width {
            let want = absolute_angle(center, p(col as f64, row as f64));
            exact("absolute-only map", c.get(col, row), want)?;
        }
    }
    exact("right of center", c.get(center.x as usize + 1, center.y as usize), 0.0)?;

    // collinear triples whose cosine rounds past 1
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let a = p(rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3));
        let (dx, dy) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let (s, t) = (rng.gen_range(1e-9..10.0), rng.gen_range(1e-9..10.0));
        let b = p(a.x + s * dx, a.y + s * dy);
        let c = p(b.x + t * dx, b.y + t * dy);
        let forward = relative_angle(a, b, c);
        let back = relative_angle(c, b, a);
        ensure(forward.is_finite() && back.is_finite(), || format!("non-finite angle at {a:?} {b:?} {c:?}"))?;
        worst = worst.max(forward.min(PI - back));
    }
    let big = Dims::new(64, 64);
    let c = cost_map(big, p(0.1, 0.1), p(0.1 + 1e-12, 0.1 + 1e-12), &presets::illustrative_profile())
        .map_err(|e| e.to_string())?;
    ensure(c.values().iter().all(|v| v.is_finite()), || "cost map not finite for a tiny saccade".into())?;
    Ok(format!("examples exact, 10000 collinear triples finite (max residual {worst:.1e} rad)"))
}

fn gaussian() -> Outcome {
    let g = gaussian_at(Dims::new(64, 64), p(32.0, 32.0), 2.0).map_err(|e| e.to_string())?;
    let total: f64 = g.values().iter().sum();
    ensure((0.995..=1.0001).contains(&total), || format!("sigma 2 density sums to {total}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut worst_scale, mut worst_add) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let dims = Dims::new(rng.gen_range(4..40), rng.gen_range(4..40));
        let sigma = rng.gen_range(0.5..15.0);
        let phis: Vec<f64> = (0..rng.gen_range(1..11)).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let h1: Vec<PixelCoord> = (0..rng.gen_range(1..6)).map(|_| random_point(&mut rng, dims)).collect();
        let h2: Vec<PixelCoord> = (0..rng.gen_range(1..6)).map(|_| random_point(&mut rng, dims)).collect();
        let a = rng.gen_range(0.1..10.0);

        let base = ExplorationParams::new(phis.clone(), sigma, PhiIndexing::Lag).map_err(|e| e.to_string())?;
        let scaled = ExplorationParams::new(phis.iter().map(|f| a * f).collect(), sigma, PhiIndexing::Lag)
            .map_err(|e| e.to_string())?;
        let e1 = exploration_map(dims, &h1, &base).map_err(|e| e.to_string())?;
        let ea = exploration_map(dims, &h1, &scaled).map_err(|e| e.to_string())?;
        for (x, y) in e1.values().iter().zip(ea.values()) {
            worst_scale = worst_scale.max((a * x - y).abs());
        }

        let constant = ExplorationParams::new(vec![phis[0]], sigma, PhiIndexing::Lag).map_err(|e| e.to_string())?;
        let joined: Vec<PixelCoord> = h1.iter().chain(&h2).copied().collect();
        let ej = exploration_map(dims, &joined, &constant).map_err(|e| e.to_string())?;
        let ea = exploration_map(dims, &h1, &constant).map_err(|e| e.to_string())?;
        let eb = exploration_map(dims, &h2, &constant).map_err(|e| e.to_string())?;
        for ((j, x), y) in ej.values().iter().zip(ea.values()).zip(eb.values()) {
            worst_add = worst_add.max((j - x - y).abs());
        }
    }
    ensure(worst_scale <= 1e-12, || format!("scaling off by {worst_scale:e}"))?;
    ensure(worst_add <= 1e-12, || format!("additivity off by {worst_add:e}"))?;
    Ok(format!("sum {total:.6}, scaling {worst_scale:.1e}, additivity {worst_add:.1e}"))
}

fn parameter_io() -> Outcome {
    let bits = |p: &ModelParams| {
        let mut v: Vec<u64> = [p.w0, p.w1, p.w2, p.sigma].iter().map(|x| x.to_bits()).collect();
        v.extend(p.phis.iter().map(|x| x.to_bits()));
        v
    };
    let rows: Vec<_> = presets::individual_phis().into_iter().chain(presets::fixed_phis()).collect();
    for row in &rows {
        let text = row.params.to_json();
        let back = ModelParams::from_json(&text).map_err(|e| format!("{}: {e}", row.model))?;
        ensure(bits(&back) == bits(&row.params) && back == row.params, || format!("{} changed in a round trip", row.model))?;
        ensure(back.to_json() == text, || format!("{} reserializes differently", row.model))?;
    }
    Ok(format!("{} rows bit-exact", rows.len()))
}

fn optimizer() -> Outcome {
    // separable in (w1, w2, sigma), minimizer inside the fitting box
    let scale = [3.0, 0.5, 0.02];
    let center = [0.345, 2.893, 34.158];
    let bounds = Bounds::new(vec![-100.0, -100.0, 0.5], vec![100.0, 100.0, 500.0]);
    let mut visited = Vec::new();
    let result = minimize(
        |x| {
            visited.push(x.to_vec());
            let f = (0..3).map(|i| scale[i] * (x[i] - center[i]).powi(2)).sum();
            let g = (0..3).map(|i| 2.0 * scale[i] * (x[i] - center[i])).collect();
            Ok((f, g))
        },
        &[0.1, 0.5, 20.0],
        &bounds,
        &LbfgsbOptions::default(),
    )
    .map_err(|e| format!("{e:?}"))?;
    let err = (0..3).map(|i| (result.x[i] - center[i]).abs()).fold(0.0, f64::max);
    ensure(err <= 1e-5, || format!("minimizer off by {err:e}: {:?}", result.x))?;
    ensure(result.iterations <= 50, || format!("{} iterations", result.iterations))?;
    ensure(visited.iter().all(|x| bounds.contains(x)), || "an iterate left the box".into())?;
    ensure(result.trace.windows(2).all(|w| w[1].1 <= w[0].1), || "objective increased".into())?;
    Ok(format!("error {err:.1e} in {} iterations, stop {:?}", result.iterations, result.stop))
}

struct Synthetic {
    train: Dataset,
    held_out: Dataset,
}

fn synthetic() -> Result<Synthetic, String> {
    let truth = presets::deepgaze_ii();
    let profile = presets::illustrative_profile();
    let train = synthetic_dataset(&SynthConfig { seed: 1, ..Default::default() }, &truth, &profile)
        .map_err(|e| e.to_string())?;
    let held_out = synthetic_dataset(&SynthConfig { seed: 2, images: 50, ..Default::default() }, &truth, &profile)
        .map_err(|e| e.to_string())?;
    Ok(Synthetic { train, held_out })
}

fn recovery(data: &Synthetic) -> Outcome {
    let t0 = Instant::now();
    let truth = presets::deepgaze_ii();
    let profile = presets::illustrative_profile();
    ensure(data.train.scanpath_count() == 2000, || format!("{} scanpaths", data.train.scanpath_count()))?;
    let config = FitConfig::default();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let (star, fitted) = pool.install(|| -> Result<_, String> {
        let samples = fitting::sample_training_set(&data.train, &config).map_err(|e| e.to_string())?;
        let star = fitting::objective(&truth, &samples, &data.train, &profile).map_err(|e| e.to_string())?;
        let fitted = match fitting::fit_samples(&data.train, &profile, &samples, &config) {
            Ok(r) => r,
            Err(Error::LineSearchFailure { best }) => *best,
            Err(e) => return Err(e.to_string()),
        };
        Ok((star, fitted))
    })?;
    let fit_time = t0.elapsed();
    let objective = fitted.final_objective();
    ensure(objective <= star + 0.02, || format!("(a) fitted objective {objective:.4} vs {star:.4} at the truth"))?;
    let report = evaluate(&data.held_out, &fitted.params, &profile, 1, NStepMode::Truncate, "fitted")
        .map_err(|e| e.to_string())?;
    let gain = report.mean_nss - report.baseline_nss;
    ensure(gain >= 0.1, || format!("(b) held-out gain {gain:.4}"))?;
    let deltas: Vec<(usize, f64)> = report.per_position.iter().map(|r| (r.position, r.delta_nss)).collect();
    for position in 2..=8 {
        let d = deltas.iter().find(|(q, _)| *q == position).map(|(_, d)| *d);
        ensure(d.is_some_and(|d| d > 0.0), || format!("(c) position {position} delta {d:?}"))?;
    }
    within_time("recovery", t0.elapsed(), Duration::from_secs(600))?;
    let smallest = deltas.iter().filter(|(q, _)| (2..=8).contains(q)).map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
    Ok(format!(
        "objective {objective:.4} <= {star:.4}+0.02, held-out gain {gain:.3}, min delta 2..8 {smallest:.3}, fit {fit_time:.1?} ({} iters, {:?})",
        fitted.iterations, fitted.converged_by
    ))
}

fn nstep(data: &Synthetic) -> Outcome {
    let truth = presets::deepgaze_ii();
    let profile = presets::illustrative_profile();
    let nss: Vec<f64> = (1..=3)
        .map(|n| evaluate(&data.held_out, &truth, &profile, n, NStepMode::Truncate, "truth").map(|r| r.mean_nss))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    ensure(nss.windows(2).all(|w| w[1] <= w[0]), || format!("NSS by n: {nss:?}"))?;
    Ok(format!("NSS n=1 {:.4}, n=2 {:.4}, n=3 {:.4}", nss[0], nss[1], nss[2]))
}

fn run_eval(manifest: &Path, params: &Path, report: &Path) -> Result<Duration, String> {
    let t0 = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_gazeval"))
        .arg("eval")
        .arg("--manifest")
        .arg(manifest)
        .arg("--params")
        .arg(params)
        .arg("--report")
        .arg(report)
        .args(["--seed", "7"])
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = t0.elapsed();
    ensure(out.status.success(), || format!("eval failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok(elapsed)
}

fn determinism(dir: &Path) -> Outcome {
    let config = SynthConfig { width: 32, height: 24, images: 10, scanpaths_per_image: 5, seed: 9, ..Default::default() };
    let ds = synthetic_dataset(&config, &presets::deepgaze_ii(), &presets::illustrative_profile())
        .map_err(|e| e.to_string())?;
    let manifest = write_dataset(&ds, dir.join("small")).map_err(|e| e.to_string())?;
    let params = dir.join("truth.json");
    std::fs::write(&params, presets::deepgaze_ii().to_json()).map_err(|e| e.to_string())?;
    let (a, b) = (dir.join("a.json"), dir.join("b.json"));
    run_eval(&manifest, &params, &a)?;
    run_eval(&manifest, &params, &b)?;
    let (ra, rb) = (std::fs::read(&a).map_err(|e| e.to_string())?, std::fs::read(&b).map_err(|e| e.to_string())?);
    ensure(!ra.is_empty() && ra == rb, || "reports differ".into())?;

    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let values: Vec<f64> = (0..100_000)
        .map(|_| loop {
            let x = f32::from_bits(rng.gen());
            if x.is_finite() {
                break x as f64;
            }
        })
        .collect();
    let g = Grid::new(400, 250, values).map_err(|e| e.to_string())?;
    let back = decode_raster(&encode_raster(&g).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let same = g.values().iter().zip(back.values()).all(|(x, y)| x.to_bits() == y.to_bits());
    ensure(same && back.dims() == g.dims(), || "raster round trip changed a value".into())?;
    Ok(format!("reports byte-identical ({} bytes), 100000 raster values bit-exact", ra.len()))
}

fn performance(data: &Synthetic, dir: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let dims = Dims::new(128, 128);
    let s = Arc::new(Grid::from_fn(dims, |_, _| rng.gen_range(0.0..1.0)));
    let history: Vec<PixelCoord> = (0..10).map(|_| random_point(&mut rng, dims)).collect();
    let ctx = PredictionContext::new(s, history, presets::deepgaze_ii(), presets::illustrative_profile())
        .map_err(|e| e.to_string())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let best = pool.install(|| {
        (0..5)
            .map(|_| {
                let t0 = Instant::now();
                let v = ctx.value_map();
                (t0.elapsed(), v.is_ok())
            })
            .collect::<Vec<_>>()
    });
    ensure(best.iter().all(|(_, ok)| *ok), || "value map failed".into())?;
    let first = best[0].0;
    within_time("128x128 value map", first, Duration::from_millis(50))?;

    let manifest = write_dataset(&data.train, dir.join("train")).map_err(|e| e.to_string())?;
    let params = dir.join("truth.json");
    std::fs::write(&params, presets::deepgaze_ii().to_json()).map_err(|e| e.to_string())?;
    let elapsed = run_eval(&manifest, &params, &dir.join("train-report.json"))?;
    within_time("eval over 2000 scanpaths", elapsed, Duration::from_secs(60))?;
    let report = std::fs::read_to_string(dir.join("train-report.json")).map_err(|e| e.to_string())?;
    let parsed: serde_json::Value = serde_json::from_str(&report).map_err(|e| e.to_string())?;
    ensure(parsed["sample_count"] == 16000, || format!("scored {} samples", parsed["sample_count"]))?;
    Ok(format!("value map {first:.2?}, eval of 2000 scanpaths {elapsed:.2?}"))
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let mut stderr = std::io::stderr();
    let mut failed = Vec::new();
    let mut report = |name: &str, outcome: std::thread::Result<Outcome>| {
        let line = match outcome {
            Ok(Ok(detail)) => format!("PASS  {name}: {detail}"),
            Ok(Err(why)) => {
                failed.push(name.to_string());
                format!("FAIL  {name}: {why}")
            }
            Err(_) => {
                failed.push(name.to_string());
                format!("FAIL  {name}: panicked")
            }
        };
        writeln!(stderr, "{line}").unwrap();
    };
    let run = |f: &dyn Fn() -> Outcome| std::panic::catch_unwind(AssertUnwindSafe(f));

    report("metric oracle", run(&metric_oracle));
    report("value-map oracle", run(&value_map_oracle));
    report("geometry", run(&geometry));
    report("gaussian normalization", run(&gaussian));
    report("parameter i/o", run(&parameter_io));
    report("optimizer sanity", run(&optimizer));
    let data = synthetic();
    match &data {
        Ok(data) => {
            report("synthetic recovery", run(&|| recovery(data)));
            report("n-step degradation", run(&|| nstep(data)));
        }
        Err(e) => {
            report("synthetic recovery", Ok(Err(format!("dataset: {e}"))));
            report("n-step degradation", Ok(Err(format!("dataset: {e}"))));
        }
    }
    report("determinism", run(&|| determinism(dir.path())));
    match &data {
        Ok(data) => report("performance", run(&|| performance(data, dir.path()))),
        Err(e) => report("performance", Ok(Err(format!("dataset: {e}")))),
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
