//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Extra arguments filter criteria by substring.

use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use trajdiff_cli::commands::pipeline::{self, PipelineArgs};
use trajdiff_cli::experiment::{run_trend, TrendConfig};
use trajdiff_core::cond::{assign_palette, draw_object_id, draw_sparse_pose, gaussian_blur};
use trajdiff_core::eval::{extract_trajectories_toy, fill_gaps, hungarian, mtem_score, CostMatrix};
use trajdiff_core::geom::{Dims, Point, Trajectory, TrajectorySet, Velocity};
use trajdiff_core::sim::{render_scene, simulate, simulate_with_audit, Scenario, Scene, SceneConfig};
use trajdiff_dit::model::{condition_tokens, spatial_block, temporal_block, Bound};
use trajdiff_dit::train::loss_and_grads;
use trajdiff_dit::{
    add_noise, bind, dit_forward, init_params, CondLatents, ConditionMode, DitConfig, Example, Graph, NoiseSchedule,
    Tensor, Var,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn randn(rng: &mut ChaCha8Rng, shape: &[usize], scale: f64) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

// ---------------------------------------------------------------- matching

/// Exhaustive minimum over injective maps from the smaller side into the
/// larger, summed in row order like the solver.
fn brute_force(c: &CostMatrix) -> f64 {
    let transpose = c.rows > c.cols;
    let (small, large) = if transpose { (c.cols, c.rows) } else { (c.rows, c.cols) };
    fn rec(k: usize, small: usize, large: usize, used: &mut [bool], cur: &mut Vec<usize>, best: &mut Vec<Vec<usize>>) {
        if k == small {
            best.push(cur.clone());
            return;
        }
        for o in 0..large {
            if !used[o] {
                used[o] = true;
                cur.push(o);
                rec(k + 1, small, large, used, cur, best);
                cur.pop();
                used[o] = false;
            }
        }
    }
    let mut all = Vec::new();
    rec(0, small, large, &mut vec![false; large], &mut Vec::new(), &mut all);
    all.iter()
        .map(|m| {
            let mut pairs: Vec<(usize, usize)> = m
                .iter()
                .enumerate()
                .map(|(k, &o)| if transpose { (o, k) } else { (k, o) })
                .collect();
            pairs.sort();
            pairs.iter().map(|&(i, j)| c.get(i, j)).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn hungarian_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut shapes = vec![(5, 7), (7, 5), (7, 7)];
    while shapes.len() < 500 {
        shapes.push((rng.random_range(1..=7), rng.random_range(1..=7)));
    }
    for (case, &(r, c)) in shapes.iter().enumerate() {
        let entries = (0..r * c)
            .map(|_| {
                if case % 2 == 0 {
                    rng.random_range(0..20) as f64
                } else {
                    rng.random_range(0.0..100.0)
                }
            })
            .collect();
        let m = CostMatrix::new(r, c, entries).unwrap();
        let got = hungarian(&m).map_err(|e| e.to_string())?;
        let want = brute_force(&m);
        ensure(got.total_cost == want, || {
            format!("case {case} ({r}x{c}): {} vs {want}", got.total_cost)
        })?;
        ensure(got.pairs.len() == r.min(c), || {
            format!("case {case}: {} pairs", got.pairs.len())
        })?;
    }
    let entries = (0..500 * 500).map(|_| rng.random_range(0.0..100.0)).collect();
    let big = CostMatrix::new(500, 500, entries).unwrap();
    let start = Instant::now();
    let m = hungarian(&big).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(m.pairs.len() == 500 && secs < 5.0, || format!("n=500 took {secs:.2}s"))?;
    Ok(format!("500 matrices exact; n=500 in {secs:.3}s"))
}

// ---------------------------------------------------------------- MTEM

fn random_set(rng: &mut ChaCha8Rng, n: usize, frames: usize, dims: Dims) -> TrajectorySet {
    let ts = (0..n as u32)
        .map(|id| {
            let pts = (0..frames)
                .map(|_| {
                    Point::new(
                        rng.random_range(0.0..dims.width as f64),
                        rng.random_range(0.0..dims.height as f64),
                    )
                })
                .collect();
            Trajectory::new(id, pts)
        })
        .collect();
    TrajectorySet::new(ts, frames, dims).unwrap()
}

fn mtem_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dims = Dims::new(30, 40);
    let err = |e: trajdiff_core::Error| e.to_string();
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let n = rng.random_range(1..=6);
        let frames = rng.random_range(2..30);
        let a = random_set(&mut rng, n, frames, dims);
        let m = rng.random_range(1..=6);
        let b = random_set(&mut rng, m, frames, dims);
        let own = mtem_score(&a, &a).map_err(err)?;
        ensure(own.raw_total == 0.0 && own.normalized_percent == 0.0, || {
            format!("case {case}: self-score {}", own.raw_total)
        })?;

        let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let offset = Velocity::new(5.0 * angle.cos(), 5.0 * angle.sin());
        let shifted = TrajectorySet::new(a.iter().map(|t| t.translated(offset)).collect(), frames, dims).unwrap();
        let off = mtem_score(&a, &shifted).map_err(err)?;
        worst = worst.max((off.normalized_percent - 10.0).abs());

        let mut permuted = b.clone();
        let k = permuted.trajectories.len() as u32;
        for (i, t) in permuted.trajectories.iter_mut().enumerate() {
            t.object_id = (i as u32 * 7 + 3) % k + 100;
        }
        permuted.trajectories.reverse();
        let ab = mtem_score(&a, &b).map_err(err)?;
        let ap = mtem_score(&a, &permuted).map_err(err)?;
        let ba = mtem_score(&b, &a).map_err(err)?;
        let scale = 1e-9 * ab.raw_total.max(1.0);
        ensure((ab.raw_total - ap.raw_total).abs() <= scale, || {
            format!("case {case}: permutation {} vs {}", ab.raw_total, ap.raw_total)
        })?;
        ensure((ab.raw_total - ba.raw_total).abs() <= scale, || {
            format!("case {case}: symmetry {} vs {}", ab.raw_total, ba.raw_total)
        })?;

        let mut gappy = a.clone();
        for t in &mut gappy.trajectories {
            for f in 1..frames {
                if rng.random_bool(0.3) {
                    t.visible[f] = false;
                }
            }
        }
        let once = fill_gaps(&gappy).map_err(err)?;
        let twice = fill_gaps(&once).map_err(err)?;
        ensure(once == twice, || format!("case {case}: gap fill not idempotent"))?;
    }
    ensure(worst <= 1e-9, || format!("offset closed form off by {worst:e}"))?;
    Ok(format!("50 cases; offset error {worst:.1e}"))
}

// ---------------------------------------------------------------- round trip

/// No visible disc touches another within one pixel or crosses the border.
fn occlusion_free(scene: &Scene) -> bool {
    let ts = &scene.trajectories.trajectories;
    let (w, h) = (
        scene.trajectories.dims.width as f64,
        scene.trajectories.dims.height as f64,
    );
    let inside = ts.iter().zip(&scene.objects).all(|(t, o)| {
        t.points.iter().zip(&t.visible).all(|(p, &v)| {
            !v || (p.x - o.radius >= 0.0
                && p.y - o.radius >= 0.0
                && p.x + o.radius <= w - 1.0
                && p.y + o.radius <= h - 1.0)
        })
    });
    inside
        && (0..scene.trajectories.frame_count).all(|f| {
            (0..ts.len()).all(|i| {
                (i + 1..ts.len()).all(|j| {
                    !(ts[i].visible[f] && ts[j].visible[f])
                        || ts[i].points[f].distance(ts[j].points[f])
                            > scene.objects[i].radius + scene.objects[j].radius + 1.0
                })
            })
        })
}

fn round_trip_scores(scenario: Scenario, objects: usize) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for seed in 0..500 {
        let scene =
            simulate(&SceneConfig::new(scenario, Dims::new(64, 64), 16, objects, seed)).map_err(|e| e.to_string())?;
        if !occlusion_free(&scene) {
            continue;
        }
        let video = render_scene(&scene, scene.trajectories.dims);
        let palette = assign_palette(scene.trajectories.len()).unwrap();
        let extracted = fill_gaps(&extract_trajectories_toy(&video, &palette).unwrap()).unwrap();
        out.push(mtem_score(&scene.trajectories, &extracted).unwrap().normalized_percent);
        if out.len() == 10 {
            return Ok(out);
        }
    }
    Err(format!("only {} occlusion-free seeds for {scenario}", out.len()))
}

fn round_trip_fidelity() -> Outcome {
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let single_pool = round_trip_scores(Scenario::Pool, 1)?;
    let single_movi = round_trip_scores(Scenario::Movi2d, 1)?;
    let eight = round_trip_scores(Scenario::Pool, 8)?;
    let single = max(&single_pool).max(max(&single_movi));
    ensure(single < 1.0, || format!("single-object max {single:.3}%"))?;
    ensure(max(&eight) < 3.0, || format!("8-ball max {:.3}%", max(&eight)))?;
    Ok(format!(
        "single-object max {single:.3}%, 8-ball max {:.3}%",
        max(&eight)
    ))
}

// ---------------------------------------------------------------- physics

fn physics_conservation() -> Outcome {
    let (mut worst_p, mut worst_e, mut collisions) = (0.0f64, 0.0f64, 0);
    for seed in 0..20 {
        let mut cfg = SceneConfig::new(Scenario::Pool, Dims::new(96, 64), 80, 8, seed);
        cfg.restitution = 1.0;
        cfg.friction = 0.0;
        let out = simulate_with_audit(&cfg).map_err(|e| e.to_string())?;
        for rec in &out.audit {
            let dp = (rec.momentum_after.0 - rec.momentum_before.0).hypot(rec.momentum_after.1 - rec.momentum_before.1);
            worst_p = worst_p.max(dp / rec.momentum_scale.max(f64::MIN_POSITIVE));
            worst_e = worst_e.max((rec.energy_after - rec.energy_before).abs() / rec.energy_before);
        }
        collisions += out.audit.len();
    }
    ensure(collisions > 0, || "no collisions to audit".into())?;
    ensure(worst_p <= 1e-9 && worst_e <= 1e-6, || {
        format!("momentum {worst_p:.2e}, energy {worst_e:.2e}")
    })?;
    for scenario in [Scenario::Pool, Scenario::Domino, Scenario::Movi2d] {
        let cfg = SceneConfig::new(scenario, Dims::new(64, 48), 40, scenario.max_objects().min(10), 99);
        let (a, b) = (simulate(&cfg).unwrap(), simulate(&cfg).unwrap());
        let bits = |s: &Scene| -> Vec<u64> {
            s.trajectories
                .iter()
                .flat_map(|t| t.points.iter().flat_map(|p| [p.x.to_bits(), p.y.to_bits()]))
                .collect()
        };
        ensure(bits(&a) == bits(&b) && a == b, || {
            format!("{scenario} not bitwise deterministic")
        })?;
    }
    Ok(format!(
        "{collisions} collisions; momentum {worst_p:.1e}, energy {worst_e:.1e}; bitwise repeatable"
    ))
}

// ---------------------------------------------------------------- conditioning

fn conditioning_contracts() -> Outcome {
    let key = |px: &[f64]| [px[0].to_bits(), px[1].to_bits(), px[2].to_bits()];
    let mut worst_mass: f64 = 0.0;
    for seed in 0..20u64 {
        let scenario = [Scenario::Pool, Scenario::Movi2d, Scenario::Domino][seed as usize % 3];
        let set = simulate(&SceneConfig::new(
            scenario,
            Dims::new(40, 32),
            12,
            2 + seed as usize % 5,
            seed,
        ))
        .unwrap()
        .trajectories;
        let (w, h) = (set.dims.width as usize, set.dims.height as usize);

        let palette = assign_palette(set.len()).unwrap();
        let radius = 1.0;
        let ids = draw_object_id(&set, &palette, radius).unwrap();
        let mut seen: HashMap<u32, BTreeSet<[u64; 3]>> = HashMap::new();
        for f in 0..set.frame_count {
            for t in set.iter().filter(|t| t.visible[f]) {
                let p = t.points[f];
                let covered = set.iter().any(|o| {
                    o.object_id > t.object_id && o.visible[f] && o.points[f].distance(p) <= 2.0 * radius + 1.5
                });
                let (x, y) = ((p.x.round() as usize).min(w - 1), (p.y.round() as usize).min(h - 1));
                if !covered && (x as f64 - p.x).hypot(y as f64 - p.y) <= radius {
                    seen.entry(t.object_id)
                        .or_default()
                        .insert(key(ids.frames.pixel(f, y, x)));
                }
            }
        }
        for (id, colors) in &seen {
            let want = key(&palette.colors[*id as usize]);
            ensure(colors.len() == 1 && colors.contains(&want), || {
                format!("seed {seed}: object {id} shows {} colors", colors.len())
            })?;
        }

        let mut frozen = set.clone();
        for t in &mut frozen.trajectories {
            let p0 = t.points[0];
            t.points.iter_mut().for_each(|p| *p = p0);
        }
        let still = draw_sparse_pose(&frozen, 1.0, 2.0, 2.0).unwrap();
        ensure(still.frames.data.iter().all(|&x| x == 0.0), || {
            format!("seed {seed}: static scene lights pixels")
        })?;

        let sharp = draw_sparse_pose(&set, 1.0, 2.0, 0.0).unwrap();
        for f in 0..set.frame_count {
            let blurred = gaussian_blur(sharp.frames.frame(f), w, h, 3, 2.0);
            for c in 0..3 {
                let before: f64 = sharp.frames.frame(f).iter().skip(c).step_by(3).sum();
                let after: f64 = blurred.iter().skip(c).step_by(3).sum();
                if before > 0.0 {
                    worst_mass = worst_mass.max((before - after).abs() / before);
                }
            }
        }
    }
    ensure(worst_mass <= 1e-6, || format!("blur mass error {worst_mass:.2e}"))?;
    Ok(format!("20 scenes; blur mass error {worst_mass:.1e}"))
}

// ---------------------------------------------------------------- autodiff

const FD_STEP: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-4;
const ZERO_NORM: f64 = 1e-6;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / norm(a).max(norm(b)).max(ZERO_NORM)
}

fn miniature(cond: ConditionMode) -> DitConfig {
    DitConfig {
        frames: 2,
        height: 4,
        width: 4,
        channels: 3,
        pool: 1,
        patch: 2,
        dim: 8,
        blocks: 1,
        heads: 2,
        mlp_ratio: 2,
        steps: 10,
        cond,
        seed: 11,
        ..DitConfig::default()
    }
}

/// Largest relative error per parameter tensor of the full model loss.
fn model_gradient_errors(cond: ConditionMode) -> Vec<(String, f64)> {
    let cfg = miniature(cond);
    let mut params = init_params::<f64>(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for t in params.tensors.values_mut() {
        *t = randn(&mut rng, &t.shape.clone(), 0.5);
    }
    let names: Vec<String> = params.names().cloned().collect();
    let (lh, lw) = cfg.latent_dims();
    let shape = [2, cfg.frames, lh, lw, cfg.channels];
    let noisy = randn(&mut rng, &shape, 1.0);
    let target = randn(&mut rng, &shape, 1.0);
    let cond_latents = cond.uses_pose().then(|| CondLatents {
        pose: randn(&mut rng, &shape, 1.0),
        id: cond.uses_id().then(|| randn(&mut rng, &shape, 1.0)),
    });
    let build = |g: &mut Graph<f64>, vals: &[Tensor<f64>]| {
        let vars: Vec<Var> = vals.iter().map(|t| g.param(t.clone())).collect();
        let bound = Bound {
            vars: names.iter().cloned().zip(vars.iter().copied()).collect(),
        };
        let c = condition_tokens(g, &bound, &cfg, cond_latents.as_ref()).unwrap();
        let x = g.constant(noisy.clone());
        let f = dit_forward(g, &bound, &cfg, x, &[3, 8], c).unwrap();
        let t = g.constant(target.clone());
        (g.mse(f.prediction, t).unwrap(), vars)
    };
    let leaves: Vec<Tensor<f64>> = names.iter().map(|n| params.tensors[n].clone()).collect();
    let mut g = Graph::new();
    let (loss, vars) = build(&mut g, &leaves);
    g.backward(loss).unwrap();
    let eval = |vals: &[Tensor<f64>]| {
        let mut g = Graph::new();
        let (loss, _) = build(&mut g, vals);
        g.value(loss).data[0]
    };
    names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let analytic = g.grad(vars[i]).data;
            let numeric: Vec<f64> = (0..analytic.len())
                .map(|j| {
                    let mut vals = leaves.clone();
                    vals[i].data[j] += FD_STEP;
                    let up = eval(&vals);
                    vals[i].data[j] -= 2.0 * FD_STEP;
                    (up - eval(&vals)) / (2.0 * FD_STEP)
                })
                .collect();
            (name.clone(), rel_err(&analytic, &numeric))
        })
        .collect()
}

fn token_layout_identity() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..20 {
        let k = [1usize, 2, 4][rng.random_range(0..3)];
        let (n, h, w, c) = (
            rng.random_range(1..=6),
            k * rng.random_range(1..=5),
            k * rng.random_range(1..=5),
            rng.random_range(1..=4),
        );
        let cfg = DitConfig {
            frames: n,
            height: h,
            width: w,
            channels: c,
            pool: 1,
            patch: k,
            dim: 4,
            heads: 1,
            blocks: 1,
            steps: 5,
            cond: ConditionMode::None,
            ..DitConfig::default()
        };
        let p = init_params::<f64>(&cfg).unwrap();
        let mut g = Graph::new();
        let bound = bind(&mut g, &p, false);
        let z = g.constant(randn(&mut rng, &[1, n, h, w, c], 1.0));
        let f = dit_forward(&mut g, &bound, &cfg, z, &[1], None).map_err(|e| e.to_string())?;
        let s = g.shape(f.tokens).to_vec();
        ensure(s[1] * s[2] == n * h * w / (k * k), || format!("config {case}: {s:?}"))?;
    }
    Ok(())
}

type Block = fn(&mut Graph<f64>, &Bound, &DitConfig, usize, Var) -> trajdiff_dit::Result<(Var, Var)>;

/// Perturbs one token and reports, for every token, whether its output changed.
fn changed_tokens(block: Block, b0: usize, f0: usize, s0: usize) -> (Vec<usize>, Vec<bool>) {
    let cfg = DitConfig {
        frames: 3,
        height: 8,
        width: 8,
        pool: 1,
        patch: 2,
        dim: 8,
        blocks: 1,
        heads: 2,
        steps: 10,
        cond: ConditionMode::None,
        ..DitConfig::default()
    };
    let shape = vec![2, cfg.frames, cfg.tokens_per_frame(), cfg.dim];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut p = init_params::<f64>(&cfg).unwrap();
    for t in p.tensors.values_mut() {
        *t = randn(&mut rng, &t.shape.clone(), 1.0);
    }
    let x = randn(&mut rng, &shape, 1.0);
    let run = |x: &Tensor<f64>| {
        let mut g = Graph::new();
        let bound = bind(&mut g, &p, false);
        let xv = g.constant(x.clone());
        let (y, _) = block(&mut g, &bound, &cfg, 0, xv).unwrap();
        g.value(y).clone()
    };
    let base = run(&x);
    let l = shape[3];
    let at = |b: usize, f: usize, s: usize| ((b * shape[1] + f) * shape[2] + s) * l;
    let mut moved = x.clone();
    for i in at(b0, f0, s0)..at(b0, f0, s0) + l {
        moved.data[i] += rng.random_range(-2.0..2.0);
    }
    let out = run(&moved);
    let flags = (0..shape[0] * shape[1] * shape[2])
        .map(|t| out.data[t * l..(t + 1) * l] != base.data[t * l..(t + 1) * l])
        .collect();
    (shape, flags)
}

fn attention_locality() -> Result<(), String> {
    let (shape, flags) = changed_tokens(spatial_block, 0, 1, 2);
    for (t, &changed) in flags.iter().enumerate() {
        let (b, f) = (t / (shape[1] * shape[2]), (t / shape[2]) % shape[1]);
        ensure(changed == (b == 0 && f == 1), || {
            format!("spatial block: token {t} changed={changed}")
        })?;
    }
    let (shape, flags) = changed_tokens(temporal_block, 1, 2, 5);
    for (t, &changed) in flags.iter().enumerate() {
        let (b, s) = (t / (shape[1] * shape[2]), t % shape[2]);
        ensure(changed == (b == 1 && s == 5), || {
            format!("temporal block: token {t} changed={changed}")
        })?;
    }
    Ok(())
}

fn autodiff_checks() -> Outcome {
    let mut worst = (String::new(), 0.0f64);
    let mut tensors = 0;
    for cond in [
        ConditionMode::None,
        ConditionMode::SparsePose,
        ConditionMode::SparsePoseAndId,
    ] {
        for (name, e) in model_gradient_errors(cond) {
            tensors += 1;
            if e > worst.1 {
                worst = (format!("{cond}:{name}"), e);
            }
        }
    }
    ensure(worst.1 <= GRAD_TOL, || {
        format!("{} relative error {:.2e}", worst.0, worst.1)
    })?;
    token_layout_identity()?;
    attention_locality()?;
    Ok(format!(
        "{tensors} tensors, worst {:.1e} ({}); 20 token layouts; locality exact",
        worst.1, worst.0
    ))
}

// ---------------------------------------------------------------- noising

fn noising_contracts() -> Outcome {
    let sched = NoiseSchedule::linear(200).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let z = randn(&mut rng, &[3, 4, 4, 3], 1.0);
    let eps = randn(&mut rng, &[3, 4, 4, 3], 1.0);
    ensure(add_noise(&z, 0, &eps, &sched).unwrap() == z, || {
        "t=0 is not the identity".into()
    })?;

    let n = 200_000;
    let z = Tensor::<f64>::full(&[n], 0.6);
    let mut ratios = Vec::new();
    for t in [20, 100, 180] {
        let eps = randn(&mut rng, &[n], 1.0);
        let x = add_noise(&z, t, &eps, &sched).unwrap();
        let mean = x.data.iter().sum::<f64>() / n as f64;
        let var = x.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let ratio = var / (1.0 - sched.alpha_bar[t]);
        ensure((ratio - 1.0).abs() <= 0.05, || {
            format!("t={t}: variance ratio {ratio:.4}")
        })?;
        ratios.push(ratio);
    }

    let cfg = DitConfig {
        frames: 4,
        height: 16,
        width: 16,
        dim: 16,
        blocks: 2,
        heads: 2,
        steps: 50,
        cond: ConditionMode::None,
        ..DitConfig::default()
    };
    let sched = NoiseSchedule::linear(cfg.steps).unwrap();
    let params = init_params::<f64>(&cfg).unwrap();
    let (lh, lw) = cfg.latent_dims();
    let shape = [cfg.frames, lh, lw, cfg.channels];
    let data: Vec<Example<f64>> = (0..4)
        .map(|_| Example {
            latent: randn(&mut rng, &shape, 1.0),
            cond: None,
        })
        .collect();
    let batch: Vec<&Example<f64>> = data.iter().collect();
    let noise: Vec<Tensor<f64>> = (0..4).map(|_| randn(&mut rng, &shape, 1.0)).collect();
    let (loss, _) =
        loss_and_grads(&params, &cfg, &sched, &batch, &[1, 10, 30, 50], &noise).map_err(|e| e.to_string())?;
    ensure((loss - 1.0).abs() <= 0.2, || format!("initial loss {loss:.3}"))?;
    Ok(format!("variance ratios {ratios:.4?}; initial loss {loss:.3}"))
}

// ---------------------------------------------------------------- experiments

const TREND_BUDGET_S: f64 = 30.0 * 60.0;

fn conditioning_trend() -> Outcome {
    let cfg = TrendConfig::default();
    let start = Instant::now();
    let report = run_trend(&cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    for m in &report.modes {
        let medians: Vec<String> = m.group_medians.iter().map(|x| format!("{x:.2}")).collect();
        println!(
            "      {:<9} train {:>5.0}s loss {:.4} medians [{}]",
            m.mode,
            m.train_seconds,
            m.final_loss,
            medians.join(", ")
        );
    }
    let control: Vec<String> = report
        .control
        .iter()
        .map(|c| format!("{:.2}/{:.2}", c[0], c[1]))
        .collect();
    println!("      control true/shuffled [{}]", control.join(", "));
    let need = (cfg.groups * 4).div_ceil(5);
    let detail = format!(
        "ordering in {}/{} groups, control wins {}/{}, {secs:.0}s",
        report.ordered_groups, cfg.groups, report.control_wins, cfg.groups
    );
    ensure(
        report.ordered_groups >= need && report.control_wins >= need && secs <= TREND_BUDGET_S,
        || detail.clone(),
    )?;
    Ok(detail)
}

fn pipeline_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("e2e.cfg");
    std::fs::write(
        &cfg,
        "scenario = crossing\nframes = 8\nwidth = 32\nheight = 32\ndim = 16\nblocks = 1\nheads = 2\nsteps = 20\ntrain_steps = 20\ntrain_scenes = 8\n",
    )
    .unwrap();
    let run = |name: &str| {
        pipeline::execute(&PipelineArgs {
            config: Some(cfg.clone()),
            seed: Some(7),
            sets: Vec::new(),
            out_dir: dir.path().join(name),
        })
        .map_err(|e| e.to_string())
    };
    let (a, b) = (run("a")?, run("b")?);
    let read = |name: &str| std::fs::read(dir.path().join(name).join(pipeline::SUMMARY_NAME)).unwrap();
    ensure(a == b && read("a") == read("b"), || "summaries differ".into())?;
    Ok(format!("summary identical (mtem {:.2}%)", a.mtem_percent))
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 9] = [
        ("hungarian_optimality", hungarian_optimality),
        ("mtem_correctness", mtem_suite),
        ("round_trip_fidelity", round_trip_fidelity),
        ("physics_conservation", physics_conservation),
        ("conditioning_contracts", conditioning_contracts),
        ("autodiff_gradients", autodiff_checks),
        ("noising_contracts", noising_contracts),
        ("conditioning_trend", conditioning_trend),
        ("pipeline_determinism", pipeline_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
