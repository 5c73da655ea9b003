//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

// loops walk several parallel arrays by index
#![allow(clippy::needless_range_loop)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sape::domain::Domain;
use sape::encoding::sample_fourier_basis;
use sape::io::Image;
use sape::mask::{MaskGrid, MaskSchedule};
use sape::metrics::{chamfer_symmetric, iou, psnr};
use sape::nn::{init_params, mse_loss, AdamConfig, AdamState, MlpParams, OutputActivation};
use sape::tasks::{
    fit_image, fit_occupancy, fit_signal_1d, fit_silhouette, fixtures, sweep_grid, sweep_sigma, train, EncodingKind,
    GridSweep, SigmaSweep, TaskKind, TrainConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

// ---------------------------------------------------------------- 1

fn scalar_loss(params: &MlpParams, x: &Array2<f64>, r: &Array2<f64>) -> f64 {
    let y = params.predict(x).unwrap();
    (&y * r).sum()
}

fn gradient_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for net in 0..20 {
        let in_dim = rng.gen_range(1..=4);
        let width = rng.gen_range(2..=16);
        let depth = rng.gen_range(1..=2);
        let out_dim = rng.gen_range(1..=3);
        let act = if net % 2 == 0 {
            OutputActivation::Linear
        } else {
            OutputActivation::Sigmoid
        };
        let mut params = init_params(in_dim, width, depth, out_dim, act, rng.gen()).unwrap();
        let x = Array2::from_shape_simple_fn((6, in_dim), || rng.gen_range(-1.0..1.0));
        // loss = Σ y ⊙ r, so ∂loss/∂y = r
        let r = Array2::from_shape_simple_fn((6, out_dim), || rng.gen_range(-1.0..1.0));
        let (_, cache) = params.forward(&x).unwrap();
        let grads = params.backward(&cache, &r).unwrap();
        for k in 0..params.layers().len() {
            let n_w = params.layers()[k].weight.len();
            let n_b = params.layers()[k].bias.len();
            let cols = params.layers()[k].weight.ncols();
            for i in 0..n_w + n_b {
                let analytic = if i < n_w {
                    grads[k].weight[[i / cols, i % cols]]
                } else {
                    grads[k].bias[i - n_w]
                };
                let nudge = |params: &mut MlpParams, delta: f64| {
                    let layer = &mut params.layers_mut()[k];
                    if i < n_w {
                        layer.weight[[i / cols, i % cols]] += delta;
                    } else {
                        layer.bias[i - n_w] += delta;
                    }
                };
                let orig = params.clone();
                nudge(&mut params, h);
                let plus = scalar_loss(&params, &x, &r);
                params = orig.clone();
                nudge(&mut params, -h);
                let minus = scalar_loss(&params, &x, &r);
                params = orig;
                let numeric = (plus - minus) / (2.0 * h);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    Outcome::new(
        worst < 1e-4,
        format!("{checked} parameters, worst relative error {worst:.2e} (< 1e-4)"),
    )
}

// ---------------------------------------------------------------- 2

fn degeneracy() -> Outcome {
    // (a) SAPE off against a hand-written static Fourier-feature loop
    let data = fixtures::chirp_signal().unwrap();
    let mut c = TrainConfig::for_task(TaskKind::Signal1d);
    c.hidden_width = 64;
    c.depth = 3;
    c.num_frequencies = 64;
    c.sigma = 8.0;
    c.iterations = 200;
    c.sape_enabled = false;
    let (model, report) = train(
        &c,
        &data.train_coords,
        &data.train_targets,
        &Domain::unit(1),
        OutputActivation::Linear,
    )
    .unwrap();
    let basis = sample_fourier_basis(1, c.num_frequencies, c.sigma, c.basis_seed()).unwrap();
    let features = basis.encode_batch(&data.train_coords).unwrap();
    let mut params = init_params(
        basis.output_dim(),
        c.hidden_width,
        c.depth,
        1,
        OutputActivation::Linear,
        c.init_seed(),
    )
    .unwrap();
    let mut adam = AdamState::new(
        &params,
        AdamConfig {
            lr: c.lr,
            ..AdamConfig::default()
        },
    );
    let mut trace = Vec::new();
    for _ in 0..c.iterations {
        let (y, cache) = params.forward(&features).unwrap();
        let (loss, _, grad) = mse_loss(&y, &data.train_targets);
        let grads = params.backward(&cache, &grad).unwrap();
        adam.step(&mut params, &grads).unwrap();
        trace.push(loss);
    }
    let a = trace == report.loss_trace && params == model.params;

    // (b) spatial off against a 1x1 grid
    let image = fixtures::two_tone_image(16).unwrap();
    let mut c = TrainConfig::for_task(TaskKind::Image2d);
    c.hidden_width = 64;
    c.depth = 3;
    c.num_frequencies = 64;
    c.iterations = 200;
    c.spatial_enabled = false;
    let (m_off, r_off, _) = fit_image(&c, &image).unwrap();
    c.spatial_enabled = true;
    c.grid_resolution = vec![1, 1];
    let (m_one, r_one, _) = fit_image(&c, &image).unwrap();
    let b = r_off.loss_trace == r_one.loss_trace
        && m_off.params == m_one.params
        && m_off.grid().unwrap().clocks() == m_one.grid().unwrap().clocks();

    Outcome::new(
        a && b,
        format!("(a) static bit-identical over 200 iterations: {a}; (b) spatial off == 1x1 grid: {b}"),
    )
}

// ---------------------------------------------------------------- 3

fn mask_laws() -> Outcome {
    let mut failures = Vec::new();
    for &(t, n, d) in &[(2000, 128, 2), (3000, 64, 1), (100, 7, 3), (10, 10, 1)] {
        let schedule = MaskSchedule::new(t, n, d).unwrap();
        let half = t as f64 / 2.0;
        for g in 1..=n {
            let mut last = 0.0;
            for step in 0..=4 * t {
                let clock = step as f64 / 4.0;
                let a = schedule.schedule_alpha(clock, g).unwrap();
                if !(0.0..=1.0).contains(&a) || a < last {
                    failures.push(format!("T={t} n={n} group {g}: alpha {a} at {clock}"));
                    break;
                }
                last = a;
            }
            if schedule.schedule_alpha(half, g).unwrap() != 1.0 {
                failures.push(format!("T={t} n={n} group {g} unsaturated at T/2"));
            }
        }
        if schedule.group_alphas(0.0)[0] != 1.0 || schedule.group_alphas(half)[0] != 1.0 {
            failures.push(format!("T={t}: identity group not pinned"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = MaskGrid::new(vec![5, 7, 3], Domain::symmetric(3), 1e-3, 1).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sum: f64 = grid.neighbors(&p).iter().map(|n| n.1).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    if worst > 1e-12 {
        failures.push(format!("partition of unity off by {worst:e}"));
    }

    let mut grid = MaskGrid::new(vec![6], Domain::unit(1), 0.1, 1).unwrap();
    for round in 0..30 {
        for k in 0..60 {
            let p = k as f64 / 59.0;
            grid.accumulate_loss(&[p], if p < 0.5 { 0.01 } else { 1.0 }).unwrap();
        }
        let before = grid.clocks().to_vec();
        grid.advance();
        for u in 0..grid.num_nodes() {
            if grid.frozen()[u] && grid.clocks()[u] != before[u] {
                failures.push(format!("round {round}: frozen node {u} moved"));
            }
        }
    }
    if grid.frozen().iter().filter(|&&f| f).count() == 0 {
        failures.push("no node ever froze".into());
    }

    let detail = if failures.is_empty() {
        format!("schedules monotone/bounded/pinned/saturated; unity error {worst:.1e}; frozen nodes hold")
    } else {
        failures.join("; ")
    };
    Outcome::new(failures.is_empty(), detail)
}

// ---------------------------------------------------------------- 4, 6, 9

const TWO_TONE_SIZE: usize = 64;
const SIGMAS: [f64; 5] = [1.0, 10.0, 20.0, 30.0, 40.0];
/// The 25% training subset is a 32x32 lattice.
const STRIDE_RESOLUTION: usize = 32;

fn two_tone_config() -> TrainConfig {
    let mut c = TrainConfig::for_task(TaskKind::Image2d);
    c.hidden_width = 128;
    c.depth = 3;
    c.lr = 2e-3;
    c.iterations = 2000;
    c.num_frequencies = 128;
    c.sigma = 40.0;
    c.grid_resolution = vec![STRIDE_RESOLUTION; 2];
    c
}

fn two_tone_sweep() -> &'static SigmaSweep {
    static SWEEP: OnceLock<SigmaSweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let image = fixtures::two_tone_image(TWO_TONE_SIZE).unwrap();
        sweep_sigma(&two_tone_config(), &image, &SIGMAS).unwrap()
    })
}

fn two_tone_trend() -> Outcome {
    let sweep = two_tone_sweep();
    let sape = sweep.entry("sape", 40.0).unwrap().psnr;
    let stat = sweep.entry("static", 40.0).unwrap().psnr;
    let (s_sape, s_stat) = (sweep.spread("sape").unwrap(), sweep.spread("static").unwrap());
    Outcome::new(
        sape >= stat + 1.0 && s_sape < s_stat,
        format!(
            "sigma 40: SAPE {sape:.2} dB vs static {stat:.2} dB (need +1); spread SAPE {s_sape:.2} vs static {s_stat:.2}"
        ),
    )
}

fn heatmap_correlation() -> Outcome {
    let report = two_tone_sweep().entry("sape", 40.0).unwrap().report.as_ref().unwrap();
    let clocks = report.clocks_at_half.as_ref().unwrap();
    let r = STRIDE_RESOLUTION;
    let (mut smooth, mut checker) = (Vec::new(), Vec::new());
    for (u, &clock) in clocks.iter().enumerate() {
        // even resolution: no node column sits on x = 0
        if u % r < r / 2 {
            smooth.push(clock);
        } else {
            checker.push(clock);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (smooth, checker) = (mean(&smooth), mean(&checker));
    Outcome::new(
        checker >= 1.25 * smooth,
        format!(
            "mean clock at T/2: checkerboard {checker:.1} vs smooth {smooth:.1} (ratio {:.2}, need >= 1.25)",
            checker / smooth
        ),
    )
}

fn grid_resolution() -> Outcome {
    let image = fixtures::two_tone_image(TWO_TONE_SIZE).unwrap();
    let sweep: GridSweep = sweep_grid(&two_tone_config(), &image, &[1, 4 * STRIDE_RESOLUTION]).unwrap();
    let at_stride = two_tone_sweep().entry("sape", 40.0).unwrap().psnr;
    let coarse = sweep.entry(1).unwrap().psnr;
    let fine = sweep.entry(4 * STRIDE_RESOLUTION).unwrap().psnr;
    Outcome::new(
        at_stride >= coarse && at_stride >= fine,
        format!(
            "grid {STRIDE_RESOLUTION}: {at_stride:.2} dB; grid 1: {coarse:.2} dB; grid {}: {fine:.2} dB",
            4 * STRIDE_RESOLUTION
        ),
    )
}

// ---------------------------------------------------------------- 5

fn signal_trend() -> Outcome {
    let data = fixtures::chirp_signal().unwrap();
    let base = {
        // high enough that a static basis adds noise between samples
        let mut c = TrainConfig::for_task(TaskKind::Signal1d);
        c.sigma = 60.0;
        c
    };
    let fit = |c: &TrainConfig| {
        let (_, r) = fit_signal_1d(c, &data).unwrap();
        (r.metric("mse_left").unwrap(), r.metric("mse_right").unwrap())
    };
    let sape = fit(&base);
    let mut c = base.clone();
    c.sape_enabled = false;
    let stat = fit(&c);
    let mut c = base.clone();
    c.encoding = EncodingKind::None;
    let plain = fit(&c);
    let pass = sape.0 < 1e-3 && sape.1 < 1e-3 && stat.0 > sape.0 && plain.1 >= 10.0 * sape.1;
    Outcome::new(
        pass,
        format!(
            "SAPE mse left {:.1e} right {:.1e}; static left {:.1e}; no-encoding right {:.1e}",
            sape.0, sape.1, stat.0, plain.1
        ),
    )
}

// ---------------------------------------------------------------- 7

fn silhouette_trend() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut sape_total = 0.0;
    for name in ["square", "star", "gear"] {
        let target = fixtures::silhouette(name).unwrap();
        // an expressive basis, where static features distort early
        let mut c = TrainConfig::for_task(TaskKind::Silhouette2d);
        c.sigma = 30.0;
        let (_, r) = fit_silhouette(&c, &target).unwrap();
        let sape = r.metric("iou").unwrap();
        c.sape_enabled = false;
        let (_, r) = fit_silhouette(&c, &target).unwrap();
        let stat = r.metric("iou").unwrap();
        pass &= sape >= stat;
        sape_total += sape;
        lines.push(format!("{name} {sape:.3}/{stat:.3}"));
    }
    let mean = sape_total / 3.0;
    pass &= mean >= 0.90;
    Outcome::new(
        pass,
        format!("IoU SAPE/static: {}; SAPE mean {mean:.3} (>= 0.90)", lines.join(", ")),
    )
}

// ---------------------------------------------------------------- 8

fn occupancy_trend() -> Outcome {
    let shape = fixtures::occupancy_shape("gear").unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    let mut fpr = (0.0, 0.0);
    for (label, sigma) in [("low", 4.0), ("high", 12.0)] {
        let mut c = TrainConfig::for_task(TaskKind::Occupancy);
        c.hidden_width = 128;
        c.depth = 3;
        c.iterations = 2000;
        c.batch_size = Some(2048);
        c.sigma = sigma;
        let (_, sape) = fit_occupancy(&c, &shape).unwrap();
        c.sape_enabled = false;
        let (_, stat) = fit_occupancy(&c, &shape).unwrap();
        let (a, b) = (sape.metric("iou").unwrap(), stat.metric("iou").unwrap());
        pass &= a >= b;
        lines.push(format!("{label} sigma {sigma}: IoU {a:.3}/{b:.3}"));
        fpr = (
            sape.metric("uniform_false_positive_rate").unwrap(),
            stat.metric("uniform_false_positive_rate").unwrap(),
        );
    }
    pass &= fpr.0 <= fpr.1;
    Outcome::new(
        pass,
        format!(
            "SAPE/static {}; high-sigma false positives {:.4}/{:.4}",
            lines.join(", "),
            fpr.0,
            fpr.1
        ),
    )
}

// ---------------------------------------------------------------- 10

fn brute_chamfer(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let one_way = |from: &[Vec<f64>], to: &[Vec<f64>]| {
        let mut total = 0.0;
        for p in from {
            let mut best = f64::INFINITY;
            for q in to {
                let mut d = 0.0;
                for k in 0..p.len() {
                    d += (p[k] - q[k]) * (p[k] - q[k]);
                }
                if d < best {
                    best = d;
                }
            }
            total += best;
        }
        total / from.len() as f64
    };
    one_way(a, b) + one_way(b, a)
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut chamfer_exact = 0;
    for _ in 0..50 {
        let d = rng.gen_range(1..=3);
        let (na, nb) = (rng.gen_range(1..=100), rng.gen_range(1..=100));
        let mut cloud = |n: usize| -> Vec<Vec<f64>> {
            (0..n)
                .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect()
        };
        let a = cloud(na);
        let b = cloud(nb);
        if chamfer_symmetric(&a, &b).unwrap() == brute_chamfer(&a, &b) {
            chamfer_exact += 1;
        }
    }
    let hand_chamfer = chamfer_symmetric(&[[0.0]], &[[1.0]]).unwrap() == 2.0;

    let square = |x0: usize| -> Vec<bool> { (0..16).map(|k| (x0..x0 + 2).contains(&(k % 4)) && k / 4 < 2).collect() };
    let iou_ok = iou(&square(0), &square(0)).unwrap() == 1.0
        && iou(&square(0), &square(2)).unwrap() == 0.0
        && (iou(&square(0), &square(1)).unwrap() - 1.0 / 3.0).abs() < 1e-15
        && iou(&[false; 16], &[false; 16]).unwrap() == 1.0;

    let gray = Image::filled(8, 8, &[0.5; 3]).unwrap();
    let shifted = Image::filled(8, 8, &[0.6; 3]).unwrap();
    let checker = Image::from_fn(8, 8, 1, |x, y| vec![((x + y) % 2) as f64]).unwrap();
    let inverse = Image::from_fn(8, 8, 1, |x, y| vec![((x + y + 1) % 2) as f64]).unwrap();
    let psnr_ok = psnr(&gray, &gray).unwrap() == 100.0
        && (psnr(&gray, &shifted).unwrap() - 20.0).abs() < 1e-9
        && psnr(&checker, &inverse).unwrap() == 0.0;

    Outcome::new(
        chamfer_exact == 50 && hand_chamfer && iou_ok && psnr_ok,
        format!("chamfer exact on {chamfer_exact}/50 pairs, hand case {hand_chamfer}; IoU cases {iou_ok}; PSNR cases {psnr_ok}"),
    )
}

// ----------------------------------------------------------------

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("gradient oracle", gradient_oracle),
        ("exact degeneracy", degeneracy),
        ("mask laws", mask_laws),
        ("two-tone image trend", two_tone_trend),
        ("1D regression trend", signal_trend),
        ("heatmap correlation", heatmap_correlation),
        ("silhouette trend", silhouette_trend),
        ("occupancy trend", occupancy_trend),
        ("grid-resolution property", grid_resolution),
        ("metric oracles", metric_oracles),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<26} {}  {} [{:.1} s]",
            k + 1,
            name,
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            started.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
