//! End-to-end acceptance criteria. Prints one line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::{FRAC_PI_4, PI};
use std::time::{Duration, Instant};

use brodylab::curve_space::{
    metric_comparison_check, tame_growth_profile, CurveEnsemble, DistanceMatrix, DynMetricSpec, MetricKind,
    DEFAULT_LADDER,
};
use brodylab::curves::{
    certify_brody, energy_integral, evaluate, glue, local_lipschitz, model_sup, psi, rescale, translate,
    AmplitudeNorm, BrodyConfig, CurveRep, GlueConfig, Polynomial, Square, Verdict,
};
use brodylab::information::{
    channel_information, dynamical_rd_ladder, kawabata_dembo_probe, mutual_information, rate_at_distortion,
    rd_brute_force, BaConfig, Channel, DistortionMatrix, JointPmf, Pmf, QuantizerSpec,
};
use brodylab::measures::{
    ergodic_average_check, expectation, Design, ErgodicConfig, FamilyParams, MeasureSampler,
};
use brodylab::numeric::linear_fit;
use brodylab::projective::{fs_distance, ProjectivePoint};
use brodylab::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PERIOD: f64 = 100.0;
const AREA: f64 = PERIOD * PERIOD;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn family(seed: u64) -> MeasureSampler {
    MeasureSampler::lattice_family(FamilyParams::new(PERIOD, 2.0, 3, seed).unwrap()).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ladder_pow2(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|k| 2f64.powi(-k)).collect()
}

/// Fubini–Study normalisation and the infinitesimal distance ratio.
fn c1() -> Outcome {
    let e0 = ProjectivePoint::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    let e1 = ProjectivePoint::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let diam = fs_distance(&e0, &e1);
    let diam_ok = (diam - PI.sqrt() / 2.0).abs() <= 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let curves = [CurveRep::line(), family(11).sample(0)];
    let mut worst: f64 = 0.0;
    for f in &curves {
        for k in 0..200 {
            let z = if k == 0 { c(0.0, 0.0) } else { c(rng.gen_range(-60.0..60.0), rng.gen_range(-60.0..60.0)) };
            let lip = local_lipschitz(f, z);
            if lip < 1e-3 {
                continue;
            }
            let h = 1e-6;
            let dir = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
            let ratio = fs_distance(&evaluate(f, z), &evaluate(f, z + dir * h)) / h;
            worst = worst.max((ratio / lip - 1.0).abs());
        }
    }
    outcome(diam_ok && worst <= 1e-3, format!("diameter {diam:.15} vs √π/2; worst ratio error {worst:.2e} (≤ 1e-3)"))
}

/// `(1/2π)∫ r(θ)²/(1+r(θ)²) dθ` for the square of half-side `half`, by
/// composite Simpson over one octant.
fn line_energy_oracle(half: f64) -> f64 {
    let n = 20_000;
    let h = FRAC_PI_4 / n as f64;
    let g = |t: f64| {
        let r = half / t.cos();
        r * r / (1.0 + r * r)
    };
    let mut s = g(0.0) + g(FRAC_PI_4);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
    }
    8.0 * s * h / 3.0 / (2.0 * PI)
}

/// Degree-energy identity for `[1:z]` and additivity over quadrants.
fn c2() -> Outcome {
    let line = CurveRep::line();
    let sq = Square::centered(c(0.0, 0.0), 50.0).unwrap();
    let e = energy_integral(&line, sq, 2048).unwrap();
    let oracle = line_energy_oracle(50.0);
    let total_ok = (e.value - 1.0).abs() <= 1e-3 && (e.value - oracle).abs() <= e.error.max(1e-9);
    let mut sum = 0.0;
    let mut err = e.error;
    for corner in [c(-50.0, -50.0), c(0.0, -50.0), c(-50.0, 0.0), c(0.0, 0.0)] {
        let q = energy_integral(&line, Square::new(corner, 50.0).unwrap(), 1024).unwrap();
        sum += q.value;
        err += q.error;
    }
    let additive = (e.value - sum).abs() <= err;
    outcome(
        total_ok && additive,
        format!(
            "energy {:.7} ± {:.1e}, oracle {oracle:.7}; quadrant sum differs by {:.1e} (allowed {err:.1e})",
            e.value,
            e.error,
            (e.value - sum).abs()
        ),
    )
}

/// `E[ψ]·L² = 12` for the lattice family.
fn c3() -> Outcome {
    let n = 1_000_000;
    let e = expectation(&family(2024), "psi", psi, n, Design::Stratified).unwrap();
    let (m, ci) = (e.mean * AREA, e.ci * AREA);
    let ok = (m - 12.0).abs() <= ci && (m - 12.0).abs() <= 0.6 && ci <= 0.6;
    outcome(ok, format!("E[ψ]·L² = {m:.4} ± {ci:.4} (n = {n}, stratified offsets; interval must contain 12 within 5%)"))
}

fn rd_slope(sampler: &MeasureSampler) -> (f64, bool) {
    let window = Square::new(c(0.0, 0.0), PERIOD).unwrap();
    let q = QuantizerSpec { cells_per_epsilon: 1.0, ..QuantizerSpec::default() };
    let l = dynamical_rd_ladder(sampler, window, &ladder_pow2(4, 8), &q).unwrap();
    (l.estimate.slope, l.estimate.converged)
}

/// Rate-dimension proxy `= 2/L²`.
fn c4() -> Outcome {
    let (slope, converged) = rd_slope(&family(2024));
    let s = slope * AREA;
    outcome(
        converged && (s - 2.0).abs() <= 0.2,
        format!("slope·L² = {s:.4} over ε = 2⁻⁴…2⁻⁸ (within 10% of 2; solver converged: {converged})"),
    )
}

/// Ruelle inequality for the family and three rescalings.
fn c5() -> Outcome {
    let base = family(2024);
    let n = 100_000;
    let mut rows = Vec::new();
    for lambda in [1.0, 0.5f64.sqrt(), 0.5] {
        let sampler = if lambda == 1.0 {
            base.clone()
        } else {
            MeasureSampler::Rescaled { base: Box::new(base.clone()), factor: lambda }
        };
        let e = expectation(&sampler, "psi", psi, n, Design::Stratified).unwrap();
        let (rdim, converged) = rd_slope(&sampler);
        rows.push((lambda, e.mean, e.ci, rdim, converged));
    }
    let (_, psi0, _, rd0, _) = rows[0];
    let mut ok = true;
    let mut detail = Vec::new();
    for &(lambda, m, ci, rdim, converged) in &rows {
        let s = lambda * lambda;
        ok &= converged && rdim <= m - ci;
        ok &= (m / (psi0 * s) - 1.0).abs() <= 0.05 && (rdim / (rd0 * s) - 1.0).abs() <= 0.05;
        detail.push(format!("λ={lambda:.3}: rdim·L² {:.3} ≤ E[ψ]·L² {:.2}±{:.2}", rdim * AREA, m * AREA, ci * AREA));
    }
    outcome(ok, format!("{}; both sides scale by λ² within 5%", detail.join(", ")))
}

/// Brody certification of 100 family draws.
fn c6() -> Outcome {
    let sampler = family(606);
    let cfg = BrodyConfig::default();
    let certs: Vec<_> = (0..100).map(|i| certify_brody(&sampler.sample(i), &cfg).unwrap()).collect();
    let passed = certs.iter().filter(|c| c.verdict == Verdict::Pass && c.max_df <= 1.0 + 1e-6).count();
    let worst = certs.iter().map(|c| c.max_df).fold(0.0, f64::max);
    let spread = certs.iter().map(|c| c.uncertainty).fold(0.0, f64::max);
    outcome(
        passed == 100,
        format!("{passed}/100 certified; largest max|df| {worst:.6}, largest refinement change {spread:.1e}"),
    )
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-12..1.0f64).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn random_joint(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> JointPmf {
    JointPmf::new(rows, cols, random_simplex(rng, rows * cols)).unwrap()
}

fn random_channel(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Channel {
    let rows: Vec<Vec<f64>> = (0..inputs).map(|_| random_simplex(rng, outputs)).collect();
    Channel::from_rows(&rows).unwrap()
}

/// Information-theory property suite, solver agreement and dimension probes.
fn c7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 1000;
    let mut failures = Vec::new();
    let mut sym: f64 = 0.0;
    let mut neg: f64 = 0.0;
    for _ in 0..trials {
        let (r, k) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let j = random_joint(&mut rng, r, k);
        let i = mutual_information(&j);
        neg = neg.min(i);
        sym = sym.max((i - mutual_information(&j.transpose())).abs());
    }
    if neg < -1e-12 || sym > 1e-12 {
        failures.push(format!("nonnegativity/symmetry ({neg:.1e}, {sym:.1e})"));
    }
    let mut excess: f64 = f64::NEG_INFINITY;
    for _ in 0..trials {
        let (r, k) = (rng.gen_range(2..7), rng.gen_range(2..7));
        let j = random_joint(&mut rng, r, k);
        let f: Vec<usize> = (0..r).map(|_| rng.gen_range(0..r - 1)).collect();
        let g: Vec<usize> = (0..k).map(|_| rng.gen_range(0..k - 1)).collect();
        excess = excess.max(mutual_information(&j.push_forward(&f, &g).unwrap()) - mutual_information(&j));
    }
    if excess > 1e-12 {
        failures.push(format!("data processing ({excess:.1e})"));
    }
    let mut sub_excess: f64 = f64::NEG_INFINITY;
    for _ in 0..trials {
        let (nz, nx, ny) = (rng.gen_range(2..5), rng.gen_range(2..5), rng.gen_range(2..5));
        let z = random_simplex(&mut rng, nz);
        let cx = random_channel(&mut rng, nz, nx);
        let cy = random_channel(&mut rng, nz, ny);
        let mut xy_z = vec![0.0; nx * ny * nz];
        let mut x_z = vec![0.0; nx * nz];
        let mut y_z = vec![0.0; ny * nz];
        for (k, &pz) in z.iter().enumerate() {
            for x in 0..nx {
                for y in 0..ny {
                    let p = pz * cx.get(k, x) * cy.get(k, y);
                    xy_z[(x * ny + y) * nz + k] += p;
                    x_z[x * nz + k] += p;
                    y_z[y * nz + k] += p;
                }
            }
        }
        let i = |rows, p| mutual_information(&JointPmf::new(rows, nz, p).unwrap());
        sub_excess = sub_excess.max(i(nx * ny, xy_z) - i(nx, x_z) - i(ny, y_z));
    }
    if sub_excess > 1e-12 {
        failures.push(format!("subadditivity ({sub_excess:.1e})"));
    }
    let mut concave: f64 = f64::NEG_INFINITY;
    let mut convex: f64 = f64::NEG_INFINITY;
    for _ in 0..trials {
        let (nx, ny) = (rng.gen_range(2..5), rng.gen_range(2..5));
        let w: f64 = rng.gen_range(0.0..1.0);
        let weights = Pmf::new(vec![w, 1.0 - w]).unwrap();
        let a = random_simplex(&mut rng, nx);
        let b = random_simplex(&mut rng, nx);
        let q = random_channel(&mut rng, nx, ny);
        let mix = Pmf::new(a.iter().zip(&b).map(|(x, y)| w * x + (1.0 - w) * y).collect()).unwrap();
        let (a, b) = (Pmf::new(a).unwrap(), Pmf::new(b).unwrap());
        let ci = |p: &Pmf, q: &Channel| channel_information(p, q).unwrap();
        concave = concave.max(w * ci(&a, &q) + (1.0 - w) * ci(&b, &q) - ci(&mix, &q));
        let q2 = random_channel(&mut rng, nx, ny);
        let qmix = Channel::mixture(&[q.clone(), q2.clone()], &weights).unwrap();
        convex = convex.max(ci(&a, &qmix) - w * ci(&a, &q) - (1.0 - w) * ci(&a, &q2));
    }
    if concave > 1e-12 || convex > 1e-12 {
        failures.push(format!("concavity/convexity ({concave:.1e}, {convex:.1e})"));
    }
    let mut gap: f64 = 0.0;
    for _ in 0..50 {
        let (nx, ny) = (rng.gen_range(2..4), rng.gen_range(2..4));
        let p = Pmf::new(random_simplex(&mut rng, nx)).unwrap();
        let d = DistortionMatrix::new(nx, ny, (0..nx * ny).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap();
        let dmin: f64 = (0..nx).map(|x| p.probs()[x] * (0..ny).map(|y| d.get(x, y)).fold(f64::INFINITY, f64::min)).sum();
        let dmax = (0..ny).map(|y| (0..nx).map(|x| p.probs()[x] * d.get(x, y)).sum::<f64>()).fold(f64::INFINITY, f64::min);
        let target = dmin + rng.gen_range(0.1..0.9) * (dmax - dmin);
        let ba = rate_at_distortion(&p, &d, target, &BaConfig::default()).unwrap();
        let bf = rd_brute_force(&p, &d, target, 1e-4).unwrap();
        gap = gap.max((ba.rate - bf).abs());
    }
    if gap > 1e-3 {
        failures.push(format!("BA vs brute force ({gap:.1e} bits)"));
    }
    let one = kawabata_dembo_probe(1, &ladder_pow2(3, 6), 4.0).unwrap();
    let two = kawabata_dembo_probe(2, &ladder_pow2(3, 6), 2.0).unwrap();
    if !(one.estimate.slope >= 0.9 && two.estimate.slope >= 1.9) {
        failures.push("dimension probes".into());
    }
    let detail = format!(
        "{trials} trials per law; BA vs brute force max gap {gap:.1e} bits on 50 instances; probe slopes {:.3} (s=1), {:.3} (s=2); fitted K {:.2}, {:.2}",
        one.estimate.slope, two.estimate.slope, one.constant, two.constant
    );
    if failures.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; failed: {}", failures.join(", ")))
    }
}

/// Metric-comparison inequality on random certified pairs.
fn c8() -> Outcome {
    let sampler = family(808);
    let cfg = BrodyConfig::default();
    let pairs: Vec<(CurveRep, CurveRep)> = (0..100).map(|k| (sampler.sample(2 * k), sampler.sample(2 * k + 1))).collect();
    let certified = pairs
        .iter()
        .filter(|(f, g)| {
            certify_brody(f, &cfg).unwrap().verdict == Verdict::Pass && certify_brody(g, &cfg).unwrap().verdict == Verdict::Pass
        })
        .count();
    let mut holding = 0;
    let mut worst: f64 = 0.0;
    for side in [1, 2, 4] {
        for (f, g) in &pairs {
            let r = metric_comparison_check(f, g, side, 0.0625).unwrap();
            holding += r.holds as usize;
            worst = worst.max(r.left.upper / (4.0 * r.right.lower + r.slack));
        }
    }
    outcome(
        certified == 100 && holding == 300,
        format!("{certified}/100 pairs certified; {holding}/300 comparisons hold for L ∈ {{1,2,4}}; worst upper/(4·lower) {worst:.3}"),
    )
}

/// Tame growth of covering numbers under `d̄₁` for a family that is spread
/// out at unit scale.
fn c9() -> Outcome {
    let sampler = MeasureSampler::lattice_family(FamilyParams::new(10.0, 4.0, 3, 909).unwrap()).unwrap();
    let cfg = BrodyConfig::default();
    let spot = (0..20).map(|k| certify_brody(&sampler.sample(k), &cfg).unwrap()).collect::<Vec<_>>();
    let brody = spot.iter().all(|c| c.verdict == Verdict::Pass);
    let worst = spot.iter().map(|c| c.max_df).fold(0.0, f64::max);
    let ensemble = CurveEnsemble::from_sampler(&sampler, 1000).unwrap();
    let spec = DynMetricSpec::new(MetricKind::Average { side: 1 }, 0.125).unwrap();
    let (dm, _) = DistanceMatrix::from_ensemble(&ensemble, &spec).unwrap();
    let p = tame_growth_profile(&dm, &DEFAULT_LADDER, 0.5).unwrap();
    let rows: Vec<String> = p.rows.iter().map(|r| format!("{}:{} ({:.3})", r.epsilon, r.count, r.profile)).collect();
    outcome(
        brody && p.monotone,
        format!(
            "L = 10 family, first 20 draws Brody (max |df| {worst:.3}); ε:#(ε^½·log₂#) = {}; nonincreasing {}",
            rows.join(", "),
            p.monotone
        ),
    )
}

/// Normalised characteristic against `E[ψ]`.
fn c10() -> Outcome {
    let cfg = ErgodicConfig {
        radii: vec![25.0, 50.0, 100.0],
        n: 1000,
        design: Design::Stratified,
        resolution: 8,
        rel_tol: 1e-4,
        target: None,
        target_samples: 1_000_000,
    };
    let r = ergodic_average_check(&family(1010), &cfg).unwrap();
    let rows: Vec<String> =
        r.rows.iter().map(|w| format!("R={}: gap≤{:.2e} (rel {:.3})", w.radius, w.gap_bound, w.relative_gap)).collect();
    outcome(
        r.monotone && r.final_relative_gap < 0.1,
        format!("E[ψ] = {:.3e} ± {:.1e}; {}", r.target, r.target_ci, rows.join(", ")),
    )
}

/// Decay of the gluing perturbation and calibration of the model tail.
fn c11() -> Outcome {
    let gc = GlueConfig::default();
    let lattice = family(1111).sample(0);
    let CurveRep::LatticeSum(l) = &lattice else { unreachable!() };
    let cell_center = -l.offset() + c(0.5 * l.period(), 0.5 * l.period());
    let cases = [(CurveRep::Constant(ProjectivePoint::origin(1)), c(0.0, 0.0)), (lattice.clone(), cell_center)];
    let mut slopes = Vec::new();
    let mut calibration: f64 = 0.0;
    for (f, p) in &cases {
        let q = evaluate(f, *p);
        let glued = glue(f, *p, &q, &gc).unwrap();
        let CurveRep::Glued(g) = &glued else { unreachable!() };
        calibration = calibration.max((model_sup(1, g.amplitude(), AmplitudeNorm::Distance) - gc.level).abs());
        let dir = Complex64::from_polar(1.0, 0.3);
        let (xs, ys): (Vec<f64>, Vec<f64>) = (0..50)
            .map(|i| {
                let r = 50f64.powf(i as f64 / 49.0);
                let z = p + dir * r;
                (r.ln(), fs_distance(&evaluate(f, z), &evaluate(&glued, z)).ln())
            })
            .unzip();
        slopes.push(linear_fit(&xs, &ys).unwrap().0);
    }
    outcome(
        slopes.iter().all(|s| (s + 3.0).abs() <= 0.3) && calibration <= 1e-6,
        format!("slopes {:.4} (constant), {:.4} (lattice draw); |sup − 1/10| = {calibration:.1e} (distance norm outside the unit disk)", slopes[0], slopes[1]),
    )
}

/// Exact algebraic laws on random probes.
fn c12() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let sampler = family(1212);
    let mut worst = [0.0f64; 3];
    for k in 0..1000 {
        let f = if k % 2 == 0 {
            sampler.sample(k)
        } else {
            let coeffs = (0..4).map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
            CurveRep::rational(vec![Polynomial::constant(c(1.0, 0.0)), Polynomial::new(coeffs)]).unwrap()
        };
        let mut z = || c(rng.gen_range(-150.0..150.0), rng.gen_range(-150.0..150.0));
        let (a, b, w) = (z(), z(), z());
        let lambda = rng.gen_range(0.05..3.0);
        let composed = translate(&translate(&f, a), b);
        worst[0] = worst[0].max(fs_distance(&evaluate(&composed, w), &evaluate(&f, w + a + b)));
        worst[1] = worst[1].max((local_lipschitz(&translate(&f, a), w) - local_lipschitz(&f, w + a)).abs());
        let scaled = rescale(&f, lambda).unwrap();
        worst[2] = worst[2].max((local_lipschitz(&scaled, w) - lambda * local_lipschitz(&f, lambda * w)).abs());
    }
    outcome(
        worst.iter().all(|&e| e <= 1e-10),
        format!("composition {:.1e}, translation equivariance {:.1e}, chain rule {:.1e} (≤ 1e-10)", worst[0], worst[1], worst[2]),
    )
}

type Criterion = (&'static str, &'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 12] = [
        ("C1", "Fubini-Study normalisation", c1, Duration::from_secs(1)),
        ("C2", "degree-energy identity", c2, Duration::from_secs(10)),
        ("C3", "potential integral", c3, Duration::from_secs(300)),
        ("C4", "rate dimension", c4, Duration::from_secs(120)),
        ("C5", "inequality at desk scale", c5, Duration::MAX),
        ("C6", "Brody certification", c6, Duration::from_secs(300)),
        ("C7", "information properties", c7, Duration::from_secs(120)),
        ("C8", "metric comparison", c8, Duration::from_secs(300)),
        ("C9", "tame growth", c9, Duration::from_secs(600)),
        ("C10", "characteristic vs potential", c10, Duration::MAX),
        ("C11", "gluing decay", c11, Duration::MAX),
        ("C12", "algebraic laws", c12, Duration::from_secs(30)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('C')).collect();
    let mut failed = 0;
    for (id, title, run, limit) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = o.pass && in_time;
        failed += !pass as usize;
        let budget = if limit == Duration::MAX { String::new() } else { format!(" / {} s", limit.as_secs()) };
        println!(
            "{id:<4} {} {title}: {} [{:.1} s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
