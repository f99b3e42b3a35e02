use std::io::Write;

use brwre_core::rng::{derived_rng, LIMIT_STREAM_OFFSET};
use brwre_core::{
    check_assumptions, constant_c, count_distribution_tv, diagnostics_report, joint_min_max_cdf,
    ks_distance, laplace_estimate, limit_max_cdf, sample_limit_pp, sample_q_batch, simulate_batch,
    BrwOutcome, Constant, DependenceMode, DiagnosticsReport, EnvPrime, LimitDraw, PointMeasure, QSample,
    SeriesValue, StatsError, TestFunction, Verdict,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{fmt_f64, fmt_opt, OutDir};

/// Streams for limit point-process draws and for the constants report, kept
/// clear of the `Q` sample streams.
const PP_STREAM_OFFSET: u64 = 2 * LIMIT_STREAM_OFFSET;
const CONSTANTS_STREAM: u64 = 3 * LIMIT_STREAM_OFFSET;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

pub fn check(cfg: &ExperimentConfig, out: &OutDir, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let report = check_assumptions(&cfg.environment);
    writeln!(stdout, "E log m(Y)            {}", report.e_log_mean)?;
    writeln!(stdout, "E |log P(xi > 1 | Y)| {}", report.e_abs_log_p_gt1)?;
    writeln!(
        stdout,
        "xlogx moment          {} (tail <= {:e}, {} terms)",
        report.kesten_stigum_term, report.kesten_stigum_tail_bound, report.n_samples
    )?;
    match &report.verdict {
        Verdict::SupercriticalOK => writeln!(stdout, "verdict               SupercriticalOK")?,
        Verdict::Violated(why) => writeln!(stdout, "verdict               Violated: {why}")?,
    }
    writeln!(stdout, "{}", serde_json::to_string(&report).expect("plain report"))?;
    out.json("check.json", &report)?;
    Ok(match report.verdict {
        Verdict::SupercriticalOK => Outcome::Pass,
        Verdict::Violated(_) => Outcome::Fail,
    })
}

pub struct Horizon {
    pub n: usize,
    pub outcomes: Vec<BrwOutcome>,
}

fn run_horizons(cfg: &ExperimentConfig) -> Result<Vec<Horizon>, CliError> {
    let mut horizons = Vec::new();
    for &n in &cfg.simulation.n {
        let sim = cfg.sim_config(n)?;
        let outcomes = simulate_batch(&sim, cfg.simulation.replications).into_iter().collect::<Result<Vec<_>, _>>()?;
        horizons.push(Horizon { n, outcomes });
    }
    Ok(horizons)
}

pub fn simulate(cfg: &ExperimentConfig, out: &OutDir) -> Result<Vec<Horizon>, CliError> {
    let horizons = run_horizons(cfg)?;
    let k = cfg.simulation.top_k;
    let mut header: Vec<String> = ["rep", "n", "Z_n", "pi_n", "B_n"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=k).map(|i| format!("M{i}")));
    header.extend((1..=k).map(|i| format!("min{i}")));
    header.extend(["W_n", "two_big_jump_flag", "restarts"].iter().map(|s| s.to_string()));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    for h in &horizons {
        let mut rows = out.csv(&format!("simulate_n{}.csv", h.n), &header)?;
        let mut atoms = out.csv(&format!("atoms_n{}.csv", h.n), &["rep", "location", "multiplicity"])?;
        for (rep, o) in h.outcomes.iter().enumerate() {
            let mut row = vec![rep.to_string(), h.n.to_string(), o.z_n().to_string(), fmt_f64(o.pi_n()), fmt_f64(o.b_n)];
            row.extend((0..k).map(|i| fmt_opt(o.top.get(i).copied())));
            row.extend((0..k).map(|i| fmt_opt(o.bottom.get(i).copied())));
            row.push(fmt_f64(o.w_n));
            row.push(u8::from(o.diagnostics.paths_with_two_big_jumps > 0).to_string());
            row.push(o.restarts.to_string());
            rows.write_record(&row)?;
            for &(x, m) in o.atoms.atoms() {
                atoms.write_record([rep.to_string(), fmt_f64(x), m.to_string()])?;
            }
        }
        rows.flush()?;
        atoms.flush()?;
    }
    Ok(horizons)
}

pub struct LimitArtifacts {
    pub qs: Vec<QSample>,
    pub draws: Vec<LimitDraw>,
}

#[derive(Serialize)]
struct ConstantsReport {
    /// Support indices of the first realised generations of `Y'`.
    env_prime_prefix: Vec<usize>,
    constants: Vec<NamedConstant>,
    /// Averages over the `Q` samples.
    mean_q: f64,
    mean_c: f64,
    mean_w: f64,
    samples: usize,
}

#[derive(Serialize)]
struct NamedConstant {
    name: &'static str,
    #[serde(flatten)]
    value: SeriesValue,
}

pub fn limit(cfg: &ExperimentConfig, out: &OutDir) -> Result<LimitArtifacts, CliError> {
    let disp = cfg.displacement()?;
    let params = &cfg.limit.params;
    let qs = sample_q_batch(&disp, &cfg.environment, cfg.limit.q_mode, params, cfg.seed, params.n_limit_samples)
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let draws = (0..cfg.limit.pp_draws as u64)
        .into_par_iter()
        .map(|i| sample_limit_pp(&disp, &cfg.environment, params, &mut derived_rng(cfg.seed, PP_STREAM_OFFSET + i)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut env = EnvPrime::draw(&cfg.environment, params.degree_cap, &mut derived_rng(cfg.seed, CONSTANTS_STREAM));
    let mut constants = Vec::new();
    for (name, which) in [("C0", Constant::C0), ("C1", Constant::C1), ("C2", Constant::C2), ("C3", Constant::C3)] {
        constants.push(NamedConstant { name, value: constant_c(which, &mut env, params)? });
    }
    let mean = |f: fn(&QSample) -> f64| qs.iter().map(f).sum::<f64>() / qs.len().max(1) as f64;
    let report = ConstantsReport {
        env_prime_prefix: env.indices().iter().take(32).copied().collect(),
        constants,
        mean_q: mean(|s| s.q),
        mean_c: mean(|s| s.c),
        mean_w: mean(|s| s.w),
        samples: qs.len(),
    };
    out.json("constants.json", &report)?;

    let mut q_csv = out.csv(
        "q_samples.csv",
        &["sample", "q", "w", "c", "c3", "unit_cluster_prob", "tail_bound", "terms_used", "w_bias_proxy"],
    )?;
    for (i, s) in qs.iter().enumerate() {
        q_csv.write_record([
            i.to_string(),
            fmt_f64(s.q),
            fmt_f64(s.w),
            fmt_f64(s.c),
            fmt_opt(s.c3),
            fmt_opt(s.unit_cluster_prob),
            fmt_f64(s.tail_bound),
            s.terms_used.to_string(),
            fmt_opt(s.w_bias_proxy),
        ])?;
    }
    q_csv.flush()?;

    let iid = matches!(disp.mode(), DependenceMode::Iid);
    let mut header = vec!["x", "max_cdf"];
    if iid {
        header.push("min_max_cdf");
    }
    let mut cdf_csv = out.csv("limit_cdf.csv", &header)?;
    for &x in &cfg.comparison.grid {
        let mut row = vec![fmt_f64(x), fmt_f64(limit_max_cdf(&qs, disp.alpha(), x)?)];
        if iid {
            row.push(fmt_f64(joint_min_max_cdf(&qs, disp.alpha(), disp.p(), x, x)?));
        }
        cdf_csv.write_record(&row)?;
    }
    cdf_csv.flush()?;

    let mut pp_csv = out.csv("limit_pp.csv", &["draw", "location", "multiplicity", "floor"])?;
    for (i, d) in draws.iter().enumerate() {
        if d.measure.is_empty() {
            pp_csv.write_record([i.to_string(), String::new(), "0".into(), fmt_f64(d.floor)])?;
        }
        for &(x, m) in d.measure.atoms() {
            pp_csv.write_record([i.to_string(), fmt_f64(x), m.to_string(), fmt_f64(d.floor)])?;
        }
    }
    pp_csv.flush()?;
    Ok(LimitArtifacts { qs, draws })
}

#[derive(Debug, Serialize)]
pub struct GridRow {
    pub x: f64,
    pub finite_ecdf: f64,
    pub reference_cdf: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Serialize)]
pub struct LaplaceRow {
    pub function: TestFunction,
    pub finite: f64,
    pub reference: f64,
    pub abs_diff: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct HorizonReport {
    pub n: usize,
    pub replications: usize,
    pub grid: Vec<GridRow>,
    pub ks_distance: f64,
    pub ks_pass: bool,
    pub count_threshold: f64,
    pub count_tv: f64,
    pub tv_pass: bool,
    pub laplace: Vec<LaplaceRow>,
    pub diagnostics: DiagnosticsReport,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    /// `limit` or `self`.
    pub reference: &'static str,
    pub ks_tol: f64,
    pub tv_tol: f64,
    pub laplace_tol: f64,
    pub horizons: Vec<HorizonReport>,
    pub two_jump_fraction_trend: Vec<f64>,
    pub early_jump_fraction_trend: Vec<f64>,
    pub verdict: &'static str,
}

/// What the finite-`n` sample is compared against.
enum Reference<'a> {
    Limit { alpha: f64, artifacts: &'a LimitArtifacts },
    SelfSample,
}

type CdfFn<'a> = Box<dyn Fn(f64) -> f64 + 'a>;

fn normalized_max(o: &BrwOutcome) -> f64 {
    o.top.first().map_or(f64::NEG_INFINITY, |m| m / o.b_n)
}

fn horizon_report(cfg: &ExperimentConfig, h: &Horizon, reference: &Reference) -> Result<HorizonReport, CliError> {
    let cmp = &cfg.comparison;
    let maxima = brwre_core::Ecdf::new(h.outcomes.iter().map(normalized_max).collect());
    let finite_measures: Vec<PointMeasure> = h.outcomes.iter().map(|o| o.atoms.clone()).collect();
    let delta = cfg.simulation.retain_delta;
    if cmp.count_threshold < delta {
        return Err(StatsError::SupportBelowRetention { support: cmp.count_threshold, threshold: delta }.into());
    }
    let finite_counts: Vec<u64> = finite_measures.iter().map(|m| m.count_above(cmp.count_threshold)).collect();

    let (reference_cdf, ref_measures, ref_floor): (CdfFn<'_>, Vec<PointMeasure>, f64) = match reference {
        Reference::Limit { alpha, artifacts } => {
            let alpha = *alpha;
            let qs = &artifacts.qs;
            let floor = artifacts.draws.iter().map(|d| d.floor).fold(0.0, f64::max);
            (
                Box::new(move |x| limit_max_cdf(qs, alpha, x).unwrap_or(f64::NAN)),
                artifacts.draws.iter().map(|d| d.measure.clone()).collect(),
                floor,
            )
        }
        Reference::SelfSample => {
            let ecdf = maxima.clone();
            (Box::new(move |x| ecdf.eval(x)), finite_measures.clone(), delta)
        }
    };
    if cmp.count_threshold < ref_floor {
        return Err(StatsError::SupportBelowRetention { support: cmp.count_threshold, threshold: ref_floor }.into());
    }
    let ref_counts: Vec<u64> = ref_measures.iter().map(|m| m.count_above(cmp.count_threshold)).collect();

    let grid: Vec<GridRow> = cmp
        .grid
        .iter()
        .map(|&x| {
            let (f, r) = (maxima.eval(x), reference_cdf(x));
            GridRow { x, finite_ecdf: f, reference_cdf: r, abs_diff: (f - r).abs() }
        })
        .collect();
    let ks = ks_distance(&maxima, &reference_cdf, &cmp.grid)?;
    let tv = count_distribution_tv(&finite_counts, &ref_counts)?;
    let mut laplace = Vec::new();
    for f in &cmp.laplace {
        let finite = laplace_estimate(&finite_measures, f, delta)?;
        let reference = laplace_estimate(&ref_measures, f, ref_floor)?;
        let diff = (finite - reference).abs();
        laplace.push(LaplaceRow { function: *f, finite, reference, abs_diff: diff, pass: diff <= cmp.laplace_tol });
    }
    let ks_pass = ks <= cmp.ks_tol;
    let tv_pass = tv <= cmp.tv_tol;
    let pass = ks_pass && tv_pass && laplace.iter().all(|l| l.pass);
    Ok(HorizonReport {
        n: h.n,
        replications: h.outcomes.len(),
        grid,
        ks_distance: ks,
        ks_pass,
        count_threshold: cmp.count_threshold,
        count_tv: tv,
        tv_pass,
        laplace,
        diagnostics: diagnostics_report(&h.outcomes, cmp.rho),
        pass,
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn compare(
    cfg: &ExperimentConfig,
    out: &OutDir,
    against_self: bool,
    stdout: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let horizons = simulate(cfg, out)?;
    let artifacts;
    let reference = if against_self {
        Reference::SelfSample
    } else {
        artifacts = limit(cfg, out)?;
        Reference::Limit { alpha: cfg.displacement.alpha, artifacts: &artifacts }
    };
    let reports = horizons.iter().map(|h| horizon_report(cfg, h, &reference)).collect::<Result<Vec<_>, _>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let report = CompareReport {
        reference: if against_self { "self" } else { "limit" },
        ks_tol: cfg.comparison.ks_tol,
        tv_tol: cfg.comparison.tv_tol,
        laplace_tol: cfg.comparison.laplace_tol,
        two_jump_fraction_trend: reports.iter().map(|r| r.diagnostics.two_jump_fraction).collect(),
        early_jump_fraction_trend: reports.iter().map(|r| r.diagnostics.early_jump_fraction).collect(),
        horizons: reports,
        verdict: verdict(pass),
    };
    out.json("compare.json", &report)?;
    print_compare(&report, stdout)?;
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

fn print_compare(report: &CompareReport, w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "reference: {}", report.reference)?;
    for h in &report.horizons {
        writeln!(w, "\nn = {} ({} replications)", h.n, h.replications)?;
        writeln!(w, "{:>10} {:>12} {:>12} {:>10}", "x", "finite", "reference", "|diff|")?;
        for g in &h.grid {
            writeln!(w, "{:>10.4} {:>12.6} {:>12.6} {:>10.6}", g.x, g.finite_ecdf, g.reference_cdf, g.abs_diff)?;
        }
        writeln!(w, "KS distance {:.6} (tol {}) {}", h.ks_distance, report.ks_tol, verdict(h.ks_pass))?;
        writeln!(
            w,
            "count TV above {} {:.6} (tol {}) {}",
            h.count_threshold,
            h.count_tv,
            report.tv_tol,
            verdict(h.tv_pass)
        )?;
        for l in &h.laplace {
            writeln!(
                w,
                "Laplace {:?}: finite {:.6} reference {:.6} |diff| {:.6} {}",
                l.function,
                l.finite,
                l.reference,
                l.abs_diff,
                verdict(l.pass)
            )?;
        }
        let d = &h.diagnostics;
        writeln!(
            w,
            "two-jump fraction {:.4}, per-leaf {:.6}, early-jump fraction (rho={}) {:.4}",
            d.two_jump_fraction, d.two_jump_path_fraction, d.rho, d.early_jump_fraction
        )?;
    }
    writeln!(w, "\n{}", report.verdict)
}

#[derive(Serialize)]
struct DiagnosticsFile {
    horizons: Vec<HorizonDiagnostics>,
}

#[derive(Serialize)]
struct HorizonDiagnostics {
    n: usize,
    #[serde(flatten)]
    report: DiagnosticsReport,
}

pub fn diagnostics(cfg: &ExperimentConfig, out: &OutDir, stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let horizons = run_horizons(cfg)?;
    let mut summary = Vec::new();
    writeln!(stdout, "{:>6} {:>12} {:>14} {:>12}", "n", "two_jump", "per_leaf", "early_jump")?;
    for h in &horizons {
        let mut csv = out.csv(
            &format!("diagnostics_n{}.csv", h.n),
            &["rep", "Z_n", "paths_with_two_big_jumps", "max_jump", "max_jump_generation"],
        )?;
        for (rep, o) in h.outcomes.iter().enumerate() {
            let d = &o.diagnostics;
            csv.write_record([
                rep.to_string(),
                o.z_n().to_string(),
                d.paths_with_two_big_jumps.to_string(),
                fmt_f64(d.max_jump),
                d.max_jump_generation.map(|g| g.to_string()).unwrap_or_default(),
            ])?;
        }
        csv.flush()?;
        let report = diagnostics_report(&h.outcomes, cfg.comparison.rho);
        writeln!(
            stdout,
            "{:>6} {:>12.4} {:>14.6} {:>12.4}",
            h.n, report.two_jump_fraction, report.two_jump_path_fraction, report.early_jump_fraction
        )?;
        summary.push(HorizonDiagnostics { n: h.n, report });
    }
    out.json("diagnostics.json", &DiagnosticsFile { horizons: summary })?;
    Ok(Outcome::Pass)
}
