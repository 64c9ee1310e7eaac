//! The experiment registry.

use std::io;

use brodylab::curve_space::{
    metric_comparison_check, tame_growth_profile, CurveEnsemble, DistanceMatrix, DynMetricSpec, MetricKind,
};
use brodylab::curves::{
    certify_brody, energy_density, evaluate, glue, model_sup, rescale, AmplitudeNorm, BrodyCertificate, BrodyConfig,
    CurveRep, DensitySearch, GlueConfig, Square, Verdict,
};
use brodylab::information::{dynamical_rd_ladder, DynamicalRdLadder, QuantizerSpec};
use brodylab::measures::{expectation, ergodic_average_check, rescaling_for_density, Design, ErgodicConfig, FamilyParams, MeasureSampler};
use brodylab::numeric::linear_fit;
use brodylab::projective::fs_distance;
use brodylab::{Complex64, ProjectivePoint};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{complex, int, real, string, ConfigError, ExperimentConfig, ParamSpec};
use crate::report::{write_csv, ExperimentReport};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] brodylab::Error),
    #[error("writing artifacts: {0}")]
    Io(#[from] io::Error),
}

type Run = fn(&ExperimentConfig, &mut ExperimentReport) -> Result<(), RunError>;

pub struct Experiment {
    pub name: &'static str,
    /// The statement the experiment reproduces.
    pub anchor: &'static str,
    pub summary: &'static str,
    pub params: fn() -> Vec<ParamSpec>,
    pub run: Run,
}

pub const REGISTRY: &[Experiment] = &[
    Experiment {
        name: "example-random-family",
        anchor: "E[ψ] = 12/L², rdim = 2/L²",
        summary: "potential integral and rate-dimension slope of the lattice-sum family",
        params: random_family_params,
        run: run_random_family,
    },
    Experiment {
        name: "ruelle-check",
        anchor: "urdim(B^N, T, d, μ) ≤ ∫ ψ dμ",
        summary: "rate-dimension proxy against E[ψ] for the family and its rescalings",
        params: ruelle_params,
        run: run_ruelle,
    },
    Experiment {
        name: "brody-bound",
        anchor: "|df|(z) ≤ 1 for all z",
        summary: "grid certification of the Brody bound",
        params: brody_params,
        run: run_brody,
    },
    Experiment {
        name: "metric-lemma",
        anchor: "d_{a+[0,L]²}(f, g) ≤ 4(d̄₁)ᶻ_{L+1}(f, g)",
        summary: "window metric against averaged metrics on random certified pairs",
        params: metric_lemma_params,
        run: run_metric_lemma,
    },
    Experiment {
        name: "tame-growth",
        anchor: "lim ε^δ log #(X, d, ε) = 0",
        summary: "covering-number profile of a sampled ensemble",
        params: tame_growth_params,
        run: run_tame_growth,
    },
    Experiment {
        name: "nsa-ergodic",
        anchor: "T(R, f) = (πR²/4(N+1))∫ψ dμ + o(R²)",
        summary: "normalised Nevanlinna-Shimizu-Ahlfors characteristic against E[ψ]",
        params: nsa_params,
        run: run_nsa,
    },
    Experiment {
        name: "rescale-family",
        anchor: "λ = √(c/(2(N+1)ρ(g)))",
        summary: "rescaling a Brody curve to a prescribed energy density",
        params: rescale_params,
        run: run_rescale,
    },
    Experiment {
        name: "glue-decay",
        anchor: "d(f(z), Ψ(f)(z)) ≤ C₄/|z−p|³",
        summary: "decay of the gluing perturbation and calibration of the model tail",
        params: glue_params,
        run: run_glue,
    },
];

pub fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}

fn family_params() -> Vec<ParamSpec> {
    family_params_with(100.0, 2.0)
}

fn family_params_with(period: f64, a_center: f64) -> Vec<ParamSpec> {
    vec![
        real("period", period, "lattice period L"),
        real("a_center", a_center, "centre of the coefficient disk"),
        int("cells", 3, "explicit coefficient window, cells per side"),
    ]
}

fn family(cfg: &ExperimentConfig) -> Result<MeasureSampler, RunError> {
    let cells = cfg.count("cells")?;
    Ok(MeasureSampler::lattice_family(FamilyParams::new(cfg.real("period"), cfg.real("a_center"), cells, cfg.seed)?)?)
}

fn design(cfg: &ExperimentConfig) -> Result<Design, RunError> {
    Ok(match cfg.choice("design", &["iid", "stratified"])? {
        "iid" => Design::Iid,
        _ => Design::Stratified,
    })
}

fn ladder_params() -> Vec<ParamSpec> {
    vec![
        real("eps_coarse", 0.0625, "coarsest distortion level"),
        real("eps_fine", 0.00390625, "finest distortion level"),
        int("rungs", 5, "geometric ladder size"),
        real("cells_per_epsilon", 1.0, "quantiser cells per ε along each axis"),
    ]
}

fn ladder(cfg: &ExperimentConfig) -> Result<Vec<f64>, RunError> {
    let (hi, lo, k) = (cfg.real("eps_coarse"), cfg.real("eps_fine"), cfg.count("rungs")?);
    if !(lo > 0.0 && hi > lo) || k < 3 {
        return Err(ConfigError::Invalid { key: "eps_fine".into(), reason: "need 0 < eps_fine < eps_coarse and ≥ 3 rungs".into() }.into());
    }
    Ok((0..k).map(|i| hi * (lo / hi).powf(i as f64 / (k - 1) as f64)).collect())
}

fn quantizer(cfg: &ExperimentConfig) -> QuantizerSpec {
    QuantizerSpec { cells_per_epsilon: cfg.real("cells_per_epsilon"), ..QuantizerSpec::default() }
}

fn rd_ladder(sampler: &MeasureSampler, period: f64, cfg: &ExperimentConfig) -> Result<DynamicalRdLadder, RunError> {
    let window = Square::new(Complex64::new(0.0, 0.0), period)?;
    Ok(dynamical_rd_ladder(sampler, window, &ladder(cfg)?, &quantizer(cfg))?)
}

fn rd_rows(l: &DynamicalRdLadder) -> Vec<Vec<f64>> {
    l.reports.iter().map(|r| vec![r.epsilon, r.distortion, r.rate_per_parameter, r.rate_per_area]).collect()
}

const RD_HEADER: [&str; 4] = ["epsilon", "distortion", "rate_per_parameter_bits", "rate_per_area_bits"];

/// Pass when the interval contains the target and both the interval and the
/// error are within `tol·|target|`; fail when the interval excludes it.
fn interval_verdict(mean: f64, ci: f64, target: f64, tol: f64) -> Verdict {
    let err = (mean - target).abs();
    let allowed = tol * target.abs();
    if err > ci {
        Verdict::Fail
    } else if err <= allowed && ci <= allowed {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    }
}

fn pass_if(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn unconverged(v: Verdict, converged: bool) -> Verdict {
    if converged {
        v
    } else {
        v.and(Verdict::Inconclusive)
    }
}

fn random_family_params() -> Vec<ParamSpec> {
    let mut p = family_params();
    p.extend([
        int("n", 1_000_000, "Monte Carlo samples for E[ψ]"),
        string("design", "stratified", "iid or stratified offsets"),
        real("psi_target", 12.0, "expected E[ψ]·L²"),
        real("psi_tolerance", 0.05, "relative tolerance on E[ψ]·L²"),
        real("rd_target", 2.0, "expected slope·L²"),
        real("rd_tolerance", 0.1, "relative tolerance on slope·L²"),
    ]);
    p.extend(ladder_params());
    p
}

fn run_random_family(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<(), RunError> {
    let sampler = family(cfg)?;
    let l = cfg.real("period");
    let area = l * l;
    let e = expectation(&sampler, "psi", brodylab::curves::psi, cfg.count("n")?, design(cfg)?)?;
    rep.metric("psi", e.mean, e.ci);
    rep.metric("psi_scaled", e.mean * area, e.ci * area);
    let target = cfg.real("psi_target");
    rep.verdict(
        "psi_scaled",
        "psi_scaled",
        interval_verdict(e.mean * area, e.ci * area, target, cfg.real("psi_tolerance")),
        format!("95% interval of E[ψ]·L² contains {target} and lies within the relative tolerance"),
    );
    let rd = rd_ladder(&sampler, l, cfg)?;
    let est = &rd.estimate;
    rep.metric("rd_slope", est.slope, est.fit_residual);
    rep.metric("rd_slope_scaled", est.slope * area, est.fit_residual * area);
    let rd_target = cfg.real("rd_target");
    let ok = (est.slope * area - rd_target).abs() <= cfg.real("rd_tolerance") * rd_target;
    rep.verdict(
        "rd_slope_scaled",
        "rd_slope_scaled",
        unconverged(pass_if(ok), est.converged),
        format!("slope·L² within the relative tolerance of {rd_target}"),
    );
    rep.assumptions = rd.reports[0].assumptions.clone();
    rep.artifacts.push(write_csv(&cfg.output_dir, &cfg.name, "rd", &RD_HEADER, &rd_rows(&rd))?);
    Ok(())
}

fn ruelle_params() -> Vec<ParamSpec> {
    let mut p = family_params();
    p.extend([
        int("n", 100_000, "Monte Carlo samples per measure"),
        string("design", "stratified", "iid or stratified offsets"),
        string("factors", "1, 0.7071067811865476, 0.5", "rescaling factors λ"),
        real("scaling_tolerance", 0.05, "relative tolerance of the λ² laws"),
    ]);
    p.extend(ladder_params());
    p
}

fn run_ruelle(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<(), RunError> {
    let base = family(cfg)?;
    let l = cfg.real("period");
    let n = cfg.count("n")?;
    let design = design(cfg)?;
    let tol = cfg.real("scaling_tolerance");
    let factors = cfg.reals("factors")?;
    let mut rows = Vec::new();
    let mut reference: Option<(f64, f64, f64)> = None;
    for (k, &lambda) in factors.iter().enumerate() {
        let sampler = if lambda == 1.0 {
            base.clone()
        } else {
            MeasureSampler::Rescaled { base: Box::new(base.clone()), factor: lambda }
        };
        let e = expectation(&sampler, "psi", brodylab::curves::psi, n, design)?;
        let rd = rd_ladder(&sampler, l, cfg)?;
        let rdim = rd.estimate.slope;
        let tag = format!("lambda_{k}");
        rep.metric(&tag, lambda, 0.0);
        rep.metric(&format!("psi_{k}"), e.mean, e.ci);
        rep.metric(&format!("rdim_{k}"), rdim, rd.estimate.fit_residual);
        rep.metric(&format!("margin_{k}"), e.mean / rdim, e.ci / rdim);
        let status = if rdim <= e.mean - e.ci {
            Verdict::Pass
        } else if rdim > e.mean + e.ci {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        rep.verdict(
            &format!("ruelle_{k}"),
            &format!("margin_{k}"),
            unconverged(status, rd.estimate.converged),
            "rate-dimension proxy below the 95% interval of E[ψ]",
        );
        match reference {
            None => reference = Some((lambda, e.mean, rdim)),
            Some((l0, psi0, rdim0)) => {
                let s = (lambda / l0).powi(2);
                let psi_ratio = e.mean / (psi0 * s);
                let rd_ratio = rdim / (rdim0 * s);
                rep.metric(&format!("psi_scaling_{k}"), psi_ratio, 0.0);
                rep.metric(&format!("rdim_scaling_{k}"), rd_ratio, 0.0);
                rep.verdict(
                    &format!("psi_scaling_{k}"),
                    &format!("psi_scaling_{k}"),
                    pass_if((psi_ratio - 1.0).abs() <= tol),
                    "E[ψ] scales by λ²",
                );
                rep.verdict(
                    &format!("rdim_scaling_{k}"),
                    &format!("rdim_scaling_{k}"),
                    pass_if((rd_ratio - 1.0).abs() <= tol),
                    "rate-dimension proxy scales by λ²",
                );
            }
        }
        rows.push(vec![lambda, e.mean, e.ci, rdim]);
        if rep.assumptions.is_empty() {
            rep.assumptions = rd.reports[0].assumptions.clone();
        }
    }
    rep.artifacts.push(write_csv(&cfg.output_dir, &cfg.name, "inequality", &["lambda", "psi", "psi_ci", "rdim"], &rows)?);
    Ok(())
}

fn brody_params() -> Vec<ParamSpec> {
    let mut p = family_params();
    p.extend([
        string("curve", "lattice", "constant, line, lattice or file"),
        string("path", "", "curve JSON document, for curve = file"),
        int("samples", 100, "family draws to certify, for curve = lattice"),
        int("resolution", 32, "initial grid resolution"),
        real("margin", 1e-6, "allowed excess over 1"),
    ]);
    p
}

fn verdict_code(v: Verdict) -> f64 {
    match v {
        Verdict::Pass => 1.0,
        Verdict::Inconclusive => 0.0,
        Verdict::Fail => -1.0,
    }
}

fn run_brody(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<(), RunError> {
    let curves: Vec<CurveRep> = match cfg.choice("curve", &["constant", "line", "lattice", "file"])? {
        "constant" => vec![CurveRep::Constant(ProjectivePoint::origin(1))],
        "line" => vec![CurveRep::line()],
        "lattice" => {
            let sampler = family(cfg)?;
            (0..cfg.count("samples")? as u64).map(|i| sampler.sample(i)).collect()
        }
        _ => {
            let text = std::fs::read_to_string(cfg.string("path"))?;
            let curve: CurveRep = serde_json::from_str(&text).map_err(|e| brodylab::Error::Parse(e.to_string()))?;
            vec![curve]
        }
    };
    let bc = BrodyConfig { resolution: cfg.count("resolution")?, margin: cfg.real("margin"), ..BrodyConfig::default() };
    let certs: Vec<BrodyCertificate> =
        curves.par_iter().map(|c| certify_brody(c, &bc)).collect::<brodylab::Result<_>>()?;
    let worst = certs.iter().map(|c| c.max_df).fold(0.0, f64::max);
    let spread = certs.iter().map(|c| c.uncertainty).fold(0.0, f64::max);
    let passed = certs.iter().filter(|c| c.verdict == Verdict::Pass).count();
    let overall = certs.iter().fold(Verdict::Pass, |acc, c| acc.and(c.verdict));
    rep.metric("max_df", worst, spread);
    rep.metric("certified", passed as f64, 0.0);
    rep.metric("curves", certs.len() as f64, 0.0);
    rep.verdict("brody", "max_df", overall, format!("every max |df| ≤ 1 + {} with stable refinement", bc.margin));
    let rows: Vec<Vec<f64>> =
        certs.iter().enumerate().map(|(i, c)| vec![i as f64, c.max_df, c.uncertainty, verdict_code(c.verdict)]).collect();
    rep.artifacts.push(write_csv(&cfg.output_dir, &cfg.name, "certificates", &["index", "max_df", "uncertainty", "verdict"], &rows)?);
    Ok(())
}

fn metric_lemma_params() -> Vec<ParamSpec> {
    let mut p = family_params();
    p.extend([
        int("pairs", 100, "independent pairs of family draws"),
        string("sides", "1, 2, 4", "window sides L"),
        real("grid_spacing", 0.0625, "sampling step; must divide 1"),
    ]);
    p
}

fn run_metric_lemma(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<(), RunError> {
    let sampler = family(cfg)?;
    let pairs = cfg.count("pairs")?;
    let h = cfg.real("grid_spacing");
    let sides: Vec<usize> = cfg
        .reals("sides")?
        .into_iter()
        .map(|s| if s >= 1.0 && s.fract() == 0.0 { Ok(s as usize) } else { Err(ConfigError::Invalid { key: "sides".into(), reason: format!("{s} is not a positive integer") }) })
        .collect::<Result<_, _>>()?;
    let curves: Vec<(CurveRep, CurveRep)> = (0..pairs as u64).map(|k| (sampler.sample(2 * k), sampler.sample(2 * k + 1))).collect();
    let bc = BrodyConfig::default();
    let certified: Vec<bool> = curves
        .par_iter()
        .map(|(f, g)| Ok(certify_brody(f, &bc)?.verdict == Verdict::Pass && certify_brody(g, &bc)?.verdict == Verdict::Pass))
        .collect::<brodylab::Result<_>>()?;
    let n_cert = certified.iter().filter(|&&c| c).count();
    rep.metric("certified_pairs", n_cert as f64, 0.0);
    rep.verdict("certified", "certified_pairs", pass_if(n_cert == pairs), "both curves of every pair certified Brody");
    let mut rows = Vec::new();
    for &side in &sides {
        let reports = curves
            .par_iter()
            .map(|(f, g)| metric_comparison_check(f, g, side, h))
            .collect::<brodylab::Result<Vec<_>>>()?;
        let ratio = |r: &brodylab::curve_space::ComparisonReport| r.left.upper / (4.0 * r.right.lower + r.slack);
        let worst = reports.iter().map(ratio).fold(0.0, f64::max);
        let holding = reports.iter().filter(|r| r.holds).count();
        rep.metric(&format!("worst_ratio_L{side}"), worst, 0.0);
        rep.metric(&format!("holding_L{side}"), holding as f64, 0.0);
        rep.verdict(
            &format!("lemma_L{side}"),
            &format!("holding_L{side}"),
            pass_if(holding == reports.len()),
            "certified left upper bound ≤ 4 × certified right lower bound on every pair",
        );
        for (k, r) in reports.iter().enumerate() {
            rows.push(vec![side as f64, k as f64, r.left.upper, r.right.lower, ratio(r)]);
        }
    }
    rep.artifacts.push(write_csv(
        &cfg.output_dir,
        &cfg.name,
        "brackets",
        &["side", "pair", "left_upper", "right_lower", "ratio"],
        &rows,
    )?);
    Ok(())
}

// A short period keeps the ensemble spread out at unit scale.
fn tame_growth_params() -> Vec<ParamSpec> {
    let mut p = family_params_with(10.0, 4.0);
    p.extend([
        int("count", 1000, "ensemble size"),
        string("metric", "average", "unit, average or average-max"),
        int("side", 1, "window side of the averaged metric"),
        real("grid_spacing", 0.125, "sampling step; must divide 1"),
        real("delta", 0.5, "exponent δ"),
        string("ladder", "0.2, 0.1, 0.05, 0.025", "decreasing scales ε"),
    ]);
    p
}

fn run_tame_growth(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<(), RunError> {
    let sampler = family(cfg)?;
    let ensemble = CurveEnsemble::from_sampler(&sampler, cfg.count("count")?)?;
    let side = cfg.count("side")?;
    let kind = match cfg.choice("metric", &["unit", "average", "average-max"])? {
        "unit" => MetricKind::Unit,
        "average" => MetricKind::Average { side },
        _ => MetricKind::AverageMax { side },
    };
    let spec = DynMetricSpec::new(kind, cfg.real("grid_spacing"))?;
    let (dm, wide) = DistanceMatrix::from_ensemble(&ensemble, &spec)?;
    let report = tame_growth_profile(&dm, &cfg.reals("ladder")?, cfg.real("delta"))?;
    for (k, r) in report.rows.iter().enumerate() {
        rep.metric(&format!("count_{k}"), r.count as f64, 0.0);
        rep.metric(&format!("profile_{k}"), r.profile, 0.0);
    }
    let last = report.rows.len() - 1;
    rep.verdict(
        "nonincreasing",
        &format!("profile_{last}"),
        pass_if(report.monotone),
        "ε^δ log₂ # nonincreasing along the ladder",
    );
    if wide {
        rep.assumptions.push("some distances used a sampled Lipschitz estimate instead of an analytic bound".into());
    }
    let rows: Vec<Vec<f64>> = report.rows.iter().map(|r| vec![r.epsilon, r.count as f64, r.log_count, r.profile]).collect();
    rep.artifacts.push(write_csv(&cfg.output_dir, &cfg.name, "profile", &["epsilon", "count", "log2_count", "profile"], &rows)?);
    Ok(())
}

fn nsa_params() -> Vec<ParamSpec> {
    let mut p = family_params();
    p.extend([
        int("n", 1000, "draws per radius"),
        string("design", "stratified", "iid or stratified offsets"),
        string("radii", "25, 50, 100", "increasing radii R"),
        int("resolution", 8, "initial cubature cells per side"),
        real("rel_tol", 1e-4, "relative tolerance of each T(R)"),
        int("target_samples", 1_000_000, "draws for the reference E[ψ]"),
        real("gap_tolerance", 0.1, "allowed final relative gap"),
    ]);
    p
}

fn run_nsa(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<(), RunError> {
    let sampler = family(cfg)?;
    let ec = ErgodicConfig {
        radii: cfg.reals("radii")?,
        n: cfg.count("n")?,
        design: design(cfg)?,
        resolution: cfg.count("resolution")?,
        rel_tol: cfg.real("rel_tol"),
        target: None,
        target_samples: cfg.count("target_samples")?,
    };
    let r = ergodic_average_check(&sampler, &ec)?;
    rep.metric("target_psi", r.target, r.target_ci);
    for (k, row) in r.rows.iter().enumerate() {
        rep.metric(&format!("normalised_T_{k}"), row.mean, row.ci);
        rep.metric(&format!("gap_bound_{k}"), row.gap_bound, 0.0);
    }
    rep.metric("final_relative_gap", r.final_relative_gap, 0.0);
    let last = r.rows.len() - 1;
    rep.verdict("shrinking", &format!("gap_bound_{last}"), pass_if(r.monotone), "gap bound nonincreasing in R");
    let tol = cfg.real("gap_tolerance");
    rep.verdict("final_gap", "final_relative_gap", pass_if(r.final_relative_gap < tol), format!("final relative gap < {tol}"));
    let rows: Vec<Vec<f64>> = r.rows.iter().map(|w| vec![w.radius, w.mean, w.ci, w.gap, w.gap_bound]).collect();
    rep.artifacts.push(write_csv(&cfg.output_dir, &cfg.name, "radii", &["radius", "mean", "ci", "gap", "gap_bound"], &rows)?);
    Ok(())
}

fn rescale_params() -> Vec<ParamSpec> {
    let mut p = family_params();
    p.extend([
        int("index", 0, "family draw to rescale"),
        real("target", 1e-3, "prescribed 2(N+1)ρ of the rescaled curve"),
        real("side", 200.0, "square side for the density estimate"),
        int("samples_per_side", 512, "density quadrature samples per side"),
        real("tolerance", 0.05, "relative tolerance on the achieved density"),
    ]);
    p
}

fn run_rescale(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<(), RunError> {
    let g = family(cfg)?.sample(cfg.int("index").max(0) as u64);
    let side = cfg.real("side");
    let spp = cfg.count("samples_per_side")?;
    let fine = DensitySearch { samples_per_side: spp, domain: None };
    let coarse = DensitySearch { samples_per_side: (spp / 2).max(16), domain: None };
    let rho_g = energy_density(&g, side, &fine)?.value;
    let rho_g_coarse = energy_density(&g, side, &coarse)?.value;
    let c = cfg.real("target");
    let lambda = rescaling_for_density(g.dim(), rho_g, c)?;
    let f = rescale(&g, lambda)?;
    let top = 2.0 * (g.dim() as f64 + 1.0);
    let rho_f = energy_density(&f, side / lambda, &fine)?.value;
    let achieved = top * rho_f;
    rep.metric("rho_g", rho_g, (rho_g - rho_g_coarse).abs());
    rep.metric("lambda", lambda, 0.0);
    rep.metric("achieved", achieved, top * lambda * lambda * (rho_g - rho_g_coarse).abs());
    let tol = cfg.real("tolerance");
    rep.verdict(
        "density",
        "achieved",
        pass_if((achieved - c).abs() <= tol * c),
        format!("2(N+1)ρ of the rescaled curve within relative {tol} of {c}"),
    );
    let cert = certify_brody(&f, &BrodyConfig::default())?;
    rep.metric("max_df", cert.max_df, cert.uncertainty);
    rep.verdict("brody", "max_df", cert.verdict, "rescaled curve certified Brody");
    rep.verdict("contraction", "lambda", pass_if(lambda <= 1.0), "λ ≤ 1");
    rep.artifacts.push(write_csv(
        &cfg.output_dir,
        &cfg.name,
        "density",
        &["lambda", "rho_g", "rho_f", "achieved", "target"],
        &[vec![lambda, rho_g, rho_f, achieved, c]],
    )?);
    Ok(())
}

fn glue_params() -> Vec<ParamSpec> {
    let mut p = family_params();
    p.extend([
        string("curve", "constant", "constant or lattice"),
        string("norm", "distance", "distance or derivative calibration"),
        real("level", 0.1, "calibration level of the model tail"),
        complex("center", Complex64::new(0.0, 0.0), "gluing point p, for curve = constant"),
        real("r_min", 1.0, "smallest |z − p|"),
        real("r_max", 50.0, "largest |z − p|"),
        int("points", 50, "log-spaced radii"),
        real("angle", std::f64::consts::FRAC_PI_4, "direction of the probe ray"),
        real("slope_target", -3.0, "expected log-log slope"),
        real("slope_tolerance", 0.3, "allowed slope deviation"),
        real("calibration_tolerance", 1e-6, "allowed deviation of the model sup"),
    ]);
    p
}

fn run_glue(cfg: &ExperimentConfig, rep: &mut ExperimentReport) -> Result<(), RunError> {
    let norm = match cfg.choice("norm", &["distance", "derivative"])? {
        "distance" => AmplitudeNorm::Distance,
        _ => AmplitudeNorm::Derivative,
    };
    let (f, p) = match cfg.choice("curve", &["constant", "lattice"])? {
        "constant" => (CurveRep::Constant(ProjectivePoint::origin(1)), cfg.complex("center")),
        _ => {
            let f = family(cfg)?.sample(0);
            let CurveRep::LatticeSum(l) = &f else { unreachable!("family draws are lattice sums") };
            // Centre of the cell around the origin, far from every pole.
            let half = 0.5 * l.period();
            let p = -l.offset() + Complex64::new(half, half);
            (f, p)
        }
    };
    let q = evaluate(&f, p);
    let gc = GlueConfig { norm, level: cfg.real("level"), ..GlueConfig::default() };
    let glued = glue(&f, p, &q, &gc)?;
    let CurveRep::Glued(gd) = &glued else { unreachable!("glue returns a glued curve") };
    let sup = model_sup(f.dim(), gd.amplitude(), norm);
    rep.metric("amplitude", gd.amplitude(), 0.0);
    rep.metric("model_sup", sup, (sup - gc.level).abs());
    rep.verdict(
        "calibration",
        "model_sup",
        pass_if((sup - gc.level).abs() <= cfg.real("calibration_tolerance")),
        "model tail supremum at the calibration level",
    );
    let (r0, r1, k) = (cfg.real("r_min"), cfg.real("r_max"), cfg.count("points")?);
    if !(r0 > 0.0 && r1 > r0) || k < 3 {
        return Err(ConfigError::Invalid { key: "r_max".into(), reason: "need 0 < r_min < r_max and ≥ 3 points".into() }.into());
    }
    let dir = Complex64::from_polar(1.0, cfg.real("angle"));
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let r = r0 * (r1 / r0).powf(i as f64 / (k - 1) as f64);
            let z = p + dir * r;
            vec![r, fs_distance(&evaluate(&f, z), &evaluate(&glued, z))]
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r[0].ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r[1].ln()).collect();
    let (slope, _, rms) = linear_fit(&xs, &ys)
        .filter(|(s, _, _)| s.is_finite())
        .ok_or_else(|| brodylab::Error::Numeric("degenerate decay fit".into()))?;
    rep.metric("decay_slope", slope, rms);
    let target = cfg.real("slope_target");
    rep.verdict(
        "decay",
        "decay_slope",
        pass_if((slope - target).abs() <= cfg.real("slope_tolerance")),
        format!("log-log slope of the perturbation within tolerance of {target}"),
    );
    rep.artifacts.push(write_csv(&cfg.output_dir, &cfg.name, "decay", &["radius", "distance"], &rows)?);
    Ok(())
}
