//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use implosion::cfrac::GOLDEN;
use implosion::circlemap::{self, PartitionSet, RigidRotation};
use implosion::fatou::{sample_petal_points, AtlasOptions, End, FatouAtlas};
use implosion::hypgeo::{self, koebe_bounds};
use implosion::lavaurs::{solve_sigma, LavaursSystem};
use implosion::parabolic::ParabolicPolynomial;
use implosion::raster::{self, RasterConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ABEL_TOL: f64 = 1e-8;
const ABEL_TIME: Duration = Duration::from_secs(60);
const PSI_TOL: f64 = 1e-8;
/// Relative bound for `ψ₊(w+1)` at depth 4x against `P^q(ψ₊(w))`.
const PSI_CROSS_TOL: f64 = 1e-6;
const LAVAURS_TOL: f64 = 1e-6;
const LAVAURS_SAMPLES: usize = 50;
const SHIFT_TOL: f64 = 1e-4;
/// Relative agreement of `m₊m₋` at two phases.
const PRODUCT_TOL: f64 = 1e-3;
const ROUND_TRIP_TOL: f64 = 1e-4;
const TUNE_TOL: f64 = 1e-8;
const ORDER_POINTS: usize = 21;
const MAX_LEVEL: usize = 10;
const UNIFORMITY: f64 = 0.25;
const SCALE_SAMPLES: usize = 100;
const SCALE_LEVELS: usize = 16;
const BALL_R2: f64 = 0.02;
const BALL_M2: f64 = 4.0;
const CONE_K: f64 = 2.0;
const CONE_SAMPLES: usize = 1000;
const CONE_TIME: Duration = Duration::from_secs(120);
const COVER_STEP_TOL: f64 = 0.05;
const COVER_TIME: Duration = Duration::from_secs(15 * 60);
const KOEBE_ROTATIONS: usize = 8;
const KOEBE_POINTS: usize = 1000;
const SEED: u64 = 0xacce_97;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn atlas(p: i64, q: u32, tol: f64) -> FatouAtlas {
    let poly = ParabolicPolynomial::new(p, q).unwrap();
    FatouAtlas::new(&poly, AtlasOptions::default().with_tol(tol)).unwrap()
}

fn golden_system() -> LavaursSystem {
    let atlas = atlas(1, 2, AtlasOptions::default().tol);
    let sigma = solve_sigma(&atlas, GOLDEN, End::Upper).unwrap();
    LavaursSystem::new(atlas, sigma)
}

fn abel_residual() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (p, q) in [(1, 2), (1, 3), (2, 5)] {
        let a = atlas(p, q, 1e-10);
        let poly = *a.poly();
        let mut w: f64 = 0.0;
        for z in sample_petal_points(&a, 100, SEED).unwrap() {
            let r = a.phi_attracting(poly.eval_q(z)).unwrap() - a.phi_attracting(z).unwrap() - 1.0;
            w = w.max(r.norm());
        }
        parts.push(format!("{p}/{q}: {w:.2e}"));
        worst = worst.max(w);
    }
    let t = start.elapsed();
    outcome(worst < ABEL_TOL && t < ABEL_TIME, format!("max residual {} in {t:.1?}", parts.join(", ")))
}

fn repelling_equation() -> Outcome {
    let start = Instant::now();
    let a = atlas(1, 2, 1e-10);
    let poly = *a.poly();
    let mut deeper = a.clone();
    deeper.deep_re *= 4.0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst, mut cross): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let w = Complex64::new(rng.gen_range(0.0..1.0), rng.gen_range(-3.0..3.0));
        let image = poly.eval_q(a.psi_repelling(w).unwrap());
        worst = worst.max((a.psi_repelling(w + 1.0).unwrap() - image).norm());
        let other = deeper.psi_repelling(w + 1.0).unwrap();
        cross = cross.max((other - image).norm() / image.norm().max(1.0));
    }
    let t = start.elapsed();
    outcome(
        worst < PSI_TOL && cross < PSI_CROSS_TOL && t < ABEL_TIME,
        format!("max residual {worst:.2e}; against 4x depth {cross:.2e} relative; {t:.1?}"),
    )
}

fn lavaurs_relations(sys: &LavaursSystem) -> Outcome {
    let poly = *sys.atlas.poly();
    let shifted = sys.with_sigma(sys.sigma + 1.0);
    let mut worst = [0.0_f64; 4];
    let mut counts = [0usize; 4];
    let points = sample_petal_points(&sys.atlas, 4 * LAVAURS_SAMPLES, SEED).unwrap();
    for &z in &points {
        let (Ok(g), Ok(g1), Ok(gq)) = (sys.lavaurs_map(z), shifted.lavaurs_map(z), sys.lavaurs_map(poly.eval_q(z))) else {
            continue;
        };
        if counts[0] < LAVAURS_SAMPLES {
            worst[0] = worst[0].max((g1 - poly.eval_q(g)).norm());
            worst[1] = worst[1].max((gq - poly.eval_q(g)).norm());
            counts[0] += 1;
            counts[1] += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for _ in 0..20 * LAVAURS_SAMPLES {
        if counts[2] >= LAVAURS_SAMPLES && counts[3] >= LAVAURS_SAMPLES {
            break;
        }
        let w = Complex64::new(rng.gen_range(0.0..1.0), rng.gen_range(-4.0..4.0));
        let (Ok(h), Ok(z)) = (sys.horn_map(w), sys.atlas.psi_repelling(w)) else { continue };
        if counts[2] < LAVAURS_SAMPLES {
            if let (Ok(lhs), Ok(rhs)) = (sys.atlas.psi_repelling(h), sys.lavaurs_map(z)) {
                worst[2] = worst[2].max((lhs - rhs).norm());
                counts[2] += 1;
            }
        }
        if counts[3] < LAVAURS_SAMPLES {
            if let Ok(h1) = sys.horn_map(w + 1.0) {
                worst[3] = worst[3].max((h1 - h - 1.0).norm());
                counts[3] += 1;
            }
        }
    }
    let pass = counts.iter().all(|&c| c == LAVAURS_SAMPLES) && worst.iter().all(|&r| r < LAVAURS_TOL);
    outcome(
        pass,
        format!(
            "g(σ+1) = P^q∘g {:.2e}, g∘P^q = P^q∘g {:.2e}, ψ∘h = g∘ψ {:.2e}, h(w+1) = h(w)+1 {:.2e}; samples {counts:?}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn shift_law(sys: &LavaursSystem) -> Outcome {
    let mut worst: f64 = 0.0;
    for end in [End::Upper, End::Lower] {
        let m0 = sys.end_translation(end).unwrap().m;
        for t in [Complex64::new(0.1, 0.0), Complex64::new(0.3, 0.2)] {
            let m = sys.with_sigma(sys.sigma + t).end_translation(end).unwrap().m;
            let expected = (Complex64::new(0.0, TAU * end.sign()) * t).exp();
            worst = worst.max((m / m0 - expected).norm());
        }
    }
    outcome(worst < SHIFT_TOL, format!("max |ratio - e^(±2πit)| {worst:.2e}"))
}

fn multiplier_product(sys: &LavaursSystem) -> Outcome {
    let product = |s: &LavaursSystem| s.end_translation(End::Upper).unwrap().m * s.end_translation(End::Lower).unwrap().m;
    let p1 = product(sys);
    let p2 = product(&sys.with_sigma(sys.sigma + Complex64::new(0.25, 0.1)));
    let rel = (p1 - p2).norm() / p1.norm();
    outcome(
        p1.norm() > 1.0 && p2.norm() > 1.0 && rel < PRODUCT_TOL,
        format!("|m₊m₋| = {:.4e}, {:.4e}; relative gap {rel:.2e}", p1.norm(), p2.norm()),
    )
}

fn sigma_round_trip(sys: &LavaursSystem) -> Outcome {
    let m = sys.end_translation(End::Upper).unwrap().m;
    let err = (m - Complex64::from_polar(1.0, TAU * GOLDEN)).norm();
    outcome(err < ROUND_TRIP_TOL, format!("σ = {:.6}{:+.6}i, |m - e^(2πiω)| {err:.2e}", sys.sigma.re, sys.sigma.im))
}

fn circle_tuning() -> Outcome {
    let f = circlemap::tune_rotation(GOLDEN, 1e-9).unwrap();
    let rho = circlemap::rotation_number(&f, circlemap::DEFAULT_BUDGET, 1e-11).unwrap();
    let same = circlemap::orbit_order_type(&f, ORDER_POINTS)
        == circlemap::orbit_order_type(&RigidRotation { rho: GOLDEN }, ORDER_POINTS);
    let err = (rho - GOLDEN).abs();
    outcome(err < TUNE_TOL && same, format!("t = {:.12}, |ρ - ω| {err:.2e}, order type of {ORDER_POINTS} points matches: {same}", f.t))
}

fn partition_counts(set: &PartitionSet) -> Outcome {
    // Fibonacci denominators of the golden mean, q_0 = q_1 = 1
    let mut fib = vec![1u64, 1];
    while fib.len() < MAX_LEVEL + 2 {
        fib.push(fib[fib.len() - 1] + fib[fib.len() - 2]);
    }
    let mut ok = true;
    for n in 0..=MAX_LEVEL {
        let part = set.level(n).unwrap();
        let distinct = part.points.windows(2).all(|w| w[1].x > w[0].x);
        ok &= part.len() as u64 == fib[n] + fib[n + 1] && distinct;
    }
    let l2 = set.level(2).unwrap().len();
    outcome(ok && l2 == 5, format!("levels 0..={MAX_LEVEL} match q_n + q_(n+1) with distinct points: {ok}; level 2 has {l2}"))
}

fn real_bounds(set: &PartitionSet) -> Outcome {
    let rep = set.real_bounds();
    let window: Vec<f64> = rep.levels[6..=MAX_LEVEL].iter().map(|l| l.max_adjacent_ratio).collect();
    let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = window.iter().copied().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    let bounded = rep.levels.iter().all(|l| l.max_adjacent_ratio <= rep.k);
    outcome(bounded && spread <= UNIFORMITY, format!("K = {:.4}, levels 6..=10 max ratio in [{lo:.4}, {hi:.4}], spread {:.1}%", rep.k, 100.0 * spread))
}

fn scale_matching(deep: &PartitionSet) -> Outcome {
    let rep = deep.real_bounds();
    let floor = rep.levels[SCALE_LEVELS].max_interval;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut lo, mut hi): (f64, f64) = (f64::INFINITY, 0.0);
    let mut inside = 0;
    for _ in 0..SCALE_SAMPLES {
        let x: f64 = rng.gen_range(0.0..1.0);
        let ell = rng.gen_range(floor.ln()..0.5_f64.ln()).exp();
        let m = deep.scale_match(x, ell).unwrap();
        lo = lo.min(m.ratio);
        hi = hi.max(m.ratio);
        if m.ratio >= 1.0 / rep.k_prime && m.ratio <= rep.k_prime {
            inside += 1;
        }
    }
    outcome(
        inside == SCALE_SAMPLES,
        format!("K' = {:.4}; ratios in [{lo:.4}, {hi:.4}]; {inside}/{SCALE_SAMPLES} inside [1/K', K']", rep.k_prime),
    )
}

fn ball_sweep(lift: &circlemap::CircleMapLift, set: &PartitionSet) -> Outcome {
    let balls = circlemap::ball_sweep(lift, set, 2..=6, 0.2).unwrap();
    let r2 = balls.iter().map(|b| b.radius_ratio).fold(f64::INFINITY, f64::min);
    let m2 = balls.iter().map(|b| b.distance_ratio).fold(0.0, f64::max);
    let placed = balls.iter().all(|b| b.below_real && b.image_in_cone);
    outcome(
        r2 > BALL_R2 && m2 < BALL_M2 && placed,
        format!(
            "{} balls; min r/|I| {r2:.4} (> {BALL_R2}), max d/|I| {m2:.4} (< {BALL_M2}); below ℝ with F^m-image in cone: {placed}",
            balls.len()
        ),
    )
}

fn cone_constants() -> Outcome {
    let start = Instant::now();
    let consts = hypgeo::cone_search(CONE_K, SEED).unwrap();
    let fresh_seed = SEED + 1;
    let v = hypgeo::validate_cone_constants(&consts, CONE_SAMPLES, fresh_seed).unwrap();
    let t = start.elapsed();
    outcome(
        v.failures == 0 && v.samples == CONE_SAMPLES && t < CONE_TIME,
        format!(
            "K = {CONE_K}: M0 = {:.4}, r0 = {}; {} failures on {} fresh triples (seed {fresh_seed}); {t:.1?}",
            consts.m0, consts.r0, v.failures, v.samples
        ),
    )
}

fn shrinking_cover(sys: &LavaursSystem) -> Outcome {
    let start = Instant::now();
    let resolutions = [256, 512, 1024, 2048];
    let mut pass = true;
    let mut parts = Vec::new();
    for depth in [RasterConfig::default().lavaurs_depth, 0] {
        let cfg = RasterConfig { lavaurs_depth: depth, ..RasterConfig::default() };
        let report = raster::area_scan(sys, &cfg, &resolutions).unwrap();
        let areas: Vec<f64> = report.rows.iter().map(|r| r.cover_area).collect();
        let steps = areas.windows(2).all(|w| w[1] <= w[0] * (1.0 + COVER_STEP_TOL));
        pass &= steps && areas[3] < areas[0];
        parts.push(format!("depth {depth}: {}", areas.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>().join(" > ")));
    }
    let t = start.elapsed();
    outcome(pass && t < COVER_TIME, format!("{}; {t:.1?}", parts.join("; ")))
}

fn koebe() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = 0;
    for i in 0..KOEBE_ROTATIONS {
        let e = Complex64::from_polar(1.0, TAU * i as f64 / KOEBE_ROTATIONS as f64 + 0.1);
        for _ in 0..KOEBE_POINTS {
            let z = Complex64::from_polar(rng.gen_range(0.0..1.0), rng.gen_range(0.0..TAU));
            let dk = (1.0 + e * z) / (1.0 - e * z).powi(3);
            let (lo, hi) = koebe_bounds(z.norm()).unwrap();
            if !(dk.norm() >= lo && dk.norm() <= hi) {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{KOEBE_ROTATIONS} rotations x {KOEBE_POINTS} points, {violations} violations"))
}

fn main() {
    // `cargo test` passes harness flags; a name filter other than ours skips the suite
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !filters.is_empty() && !filters.iter().any(|f| "acceptance".contains(f.as_str())) {
        return;
    }
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |n: usize, o: Outcome| {
        println!("criterion {n:>2} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, o));
    };
    report(1, abel_residual());
    report(2, repelling_equation());
    let sys = golden_system();
    report(3, lavaurs_relations(&sys));
    report(4, shift_law(&sys));
    report(5, multiplier_product(&sys));
    report(6, sigma_round_trip(&sys));
    report(7, circle_tuning());
    let lift = circlemap::tune_rotation(GOLDEN, 1e-10).unwrap();
    let deep = PartitionSet::build(&lift, SCALE_LEVELS).unwrap();
    report(8, partition_counts(&deep));
    report(9, real_bounds(&deep));
    report(10, scale_matching(&deep));
    report(11, ball_sweep(&lift, &deep));
    report(12, cone_constants());
    report(13, shrinking_cover(&sys));
    report(14, koebe());
    let failed: Vec<usize> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
