//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the verdict lines are always printed; the
//! process exits nonzero when any criterion fails.

mod common;

use std::time::Instant;

use brwre_core::rng::{derived_rng, LIMIT_STREAM_OFFSET};
use brwre_core::stats::chi_square_gof;
use brwre_core::{
    count_distribution_tv, diagnostics_report, extinct_prob_by_gen, joint_min_max_cdf, ks_distance,
    laplace_estimate,
    limit_max_cdf, sample_limit_pp, sample_q, sample_q_batch, simulate, simulate_batch, top_two_cdf,
    top_two_cdf_clustered, BrwOutcome, DisplacementModel, Ecdf, EnvPrime, EnvironmentModel,
    LimitConfig, OffspringLaw, PointMeasure, QMode, QSample, SimConfig, SimError, TestFunction,
    DEFAULT_GRID,
};
use common::{naive_simulate, NaiveError};

const KS_TOL_BINARY: f64 = 0.05;
const KS_TOL_RANDOM_ENV: f64 = 0.07;
const JOINT_TOL: f64 = 0.05;
const Q_ABS_TOL: f64 = 1e-6;
const CHI_SQUARE_LEVEL: f64 = 0.01;
const COUNT_TV_TOL: f64 = 0.05;
const EARLY_JUMP_TOL: f64 = 0.05;
const EXTINCTION_EXACT_TOL: f64 = 1e-12;
const SIGMAS: f64 = 3.0;

const BINARY_REPS: u64 = 2000;
const RANDOM_ENV_REPS: u64 = 1500;
const Q_SAMPLES: usize = 10_000;

struct Verdict {
    pass: bool,
    detail: String,
}

fn binary() -> EnvironmentModel {
    EnvironmentModel::fixed(OffspringLaw::deterministic(2).unwrap())
}

fn poisson_mixture() -> EnvironmentModel {
    EnvironmentModel::new(
        vec![OffspringLaw::poisson(2.0).unwrap(), OffspringLaw::poisson(3.0).unwrap()],
        vec![0.5, 0.5],
    )
    .unwrap()
}

fn run_batch(cfg: &SimConfig, reps: u64) -> Vec<BrwOutcome> {
    simulate_batch(cfg, reps).into_iter().collect::<Result<_, SimError>>().expect("simulation")
}

fn binary_config(n: usize, disp: DisplacementModel, seed: u64) -> SimConfig {
    let mut cfg = SimConfig::new(n, binary(), disp);
    cfg.seed = seed;
    cfg
}

fn max_ecdf(outcomes: &[BrwOutcome]) -> Ecdf {
    Ecdf::new(outcomes.iter().map(|o| o.top[0] / o.b_n).collect())
}

fn frechet(scale_power: f64, alpha: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| (-scale_power * x.powf(-alpha)).exp()
}

fn criterion_1() -> Verdict {
    let cfg = binary_config(14, DisplacementModel::iid(2.0, 1.0).unwrap(), 101);
    let outs = run_batch(&cfg, BINARY_REPS);
    let ks = ks_distance(&max_ecdf(&outs), frechet(2.0, 2.0), &DEFAULT_GRID).unwrap();
    Verdict { pass: ks < KS_TOL_BINARY, detail: format!("grid KS = {ks:.4} (tol {KS_TOL_BINARY})") }
}

fn criterion_2() -> Verdict {
    let n = 14;
    let cfg = binary_config(n, DisplacementModel::full_dep(2.0, 1.0).unwrap(), 102);
    let outs = run_batch(&cfg, BINARY_REPS);
    let ks = ks_distance(&max_ecdf(&outs), frechet(1.0, 2.0), &DEFAULT_GRID).unwrap();
    let early: Vec<&BrwOutcome> = outs
        .iter()
        .filter(|o| o.diagnostics.max_jump_generation.is_some_and(|g| g + 1 < n))
        .collect();
    let missing = early.iter().filter(|o| !o.atoms.atoms().iter().any(|a| a.1 >= 2)).count();
    Verdict {
        pass: ks < KS_TOL_BINARY && missing == 0,
        detail: format!(
            "grid KS = {ks:.4} (tol {KS_TOL_BINARY}); {missing} of {} early-jump replications lack a multiple atom",
            early.len()
        ),
    }
}

fn criterion_3() -> Verdict {
    let cfg = LimitConfig::default();
    let a = 1.0 / 2f64.sqrt();
    let diag = DisplacementModel::discrete_angular(2.0, vec![vec![a, a]], vec![1.0]).unwrap();
    let cases = [
        ("iid p=0.7", DisplacementModel::iid(2.0, 0.7).unwrap(), DisplacementModel::iid(2.0, 0.7).unwrap(), 1.4),
        ("full p=0.7", DisplacementModel::full_dep(2.0, 0.7).unwrap(), DisplacementModel::full_dep(2.0, 0.7).unwrap(), 0.7),
        ("diagonal", diag, DisplacementModel::full_dep(2.0, 1.0).unwrap(), 1.0),
    ];
    let mut worst = 0.0f64;
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, general_model, shortcut_model, exact) in cases {
        let mut case_worst = 0.0f64;
        for i in 0..Q_SAMPLES as u64 {
            let g = sample_q(&general_model, &binary(), QMode::General, &cfg, &mut derived_rng(103, i)).unwrap();
            let s = sample_q(&shortcut_model, &binary(), QMode::Shortcut, &cfg, &mut derived_rng(103, i)).unwrap();
            let dev = (g.q - s.q).abs().max((g.q - exact).abs());
            if dev >= Q_ABS_TOL + cfg.series_tol * exact {
                pass = false;
            }
            case_worst = case_worst.max(dev);
        }
        worst = worst.max(case_worst);
        parts.push(format!("{label}: {case_worst:.2e}"));
    }
    Verdict { pass, detail: format!("max |general - shortcut|, |Q - exact|: {} (worst {worst:.2e})", parts.join(", ")) }
}

fn criterion_4() -> Verdict {
    let mut cfg = SimConfig::new(16, poisson_mixture(), DisplacementModel::iid(2.0, 1.0).unwrap());
    cfg.seed = 104;
    cfg.population_cap = 1 << 26;
    let outs = run_batch(&cfg, RANDOM_ENV_REPS);
    let lcfg = LimitConfig { w_horizon: 30, ..LimitConfig::default() };
    let qs: Vec<QSample> = sample_q_batch(&cfg.disp, &cfg.env, QMode::Shortcut, &lcfg, 104, Q_SAMPLES)
        .into_iter()
        .collect::<Result<_, _>>()
        .unwrap();
    let ks = ks_distance(&max_ecdf(&outs), |x| limit_max_cdf(&qs, 2.0, x).unwrap(), &DEFAULT_GRID).unwrap();
    let bias: f64 = qs.iter().filter_map(|q| q.w_bias_proxy).sum::<f64>() / qs.len() as f64;
    let restarts: u64 = outs.iter().map(|o| o.restarts).sum();
    Verdict {
        pass: ks < KS_TOL_RANDOM_ENV,
        detail: format!(
            "grid KS = {ks:.4} (tol {KS_TOL_RANDOM_ENV}); mean W bias proxy {bias:.4}; {restarts} restarts"
        ),
    }
}

fn criterion_5() -> Verdict {
    let (alpha, p) = (2.0, 0.5);
    let cfg = binary_config(14, DisplacementModel::iid(alpha, p).unwrap(), 105);
    let outs = run_batch(&cfg, BINARY_REPS);
    let reps = outs.len() as f64;
    let exact = vec![QSample {
        q: p * 2.0,
        w: 1.0,
        c: p * 2.0,
        c3: Some(2.0),
        unit_cluster_prob: Some(0.5),
        tail_bound: 0.0,
        terms_used: 0,
        w_bias_proxy: None,
        env_prime_summary: vec![],
    }];

    let (x, y) = (1.0, 1.0);
    let joint_emp = outs
        .iter()
        .filter(|o| o.bottom[0] > -y * o.b_n && o.top[0] <= x * o.b_n)
        .count() as f64
        / reps;
    let joint_lim = joint_min_max_cdf(&exact, alpha, p, x, y).unwrap();

    let (x, y) = (1.0, 2.0);
    let top_emp = outs.iter().filter(|o| o.top[0] <= y * o.b_n && o.top[1] <= x * o.b_n).count() as f64 / reps;
    let top_lim = top_two_cdf(&exact, alpha, p, x, y).unwrap();
    let top_clustered = top_two_cdf_clustered(&exact, alpha, p, x, y).unwrap();

    let pass = (joint_emp - joint_lim).abs() < JOINT_TOL && (top_emp - top_lim).abs() < JOINT_TOL;
    Verdict {
        pass,
        detail: format!(
            "min/max {joint_emp:.4} vs {joint_lim:.4}; top two {top_emp:.4} vs {top_lim:.4} \
             (cluster-aware form {top_clustered:.4}); tol {JOINT_TOL}"
        ),
    }
}

fn criterion_6() -> Verdict {
    let cfg = LimitConfig::default();
    let mut env = EnvPrime::draw(&binary(), cfg.degree_cap, &mut derived_rng(106, 0));
    let mut rng = derived_rng(106, 1);
    let bins = 20;
    let mut observed = vec![0u64; bins];
    let mut overflow = 0u64;
    let mut off_support = 0u64;
    for _ in 0..100_000 {
        let r = env.sample_cluster_r(&cfg, &mut rng).unwrap();
        if !r.is_power_of_two() {
            off_support += 1;
        } else if (r.trailing_zeros() as usize) < bins {
            observed[r.trailing_zeros() as usize] += 1;
        } else {
            overflow += 1;
        }
    }
    let probs: Vec<f64> = (0..bins).map(|i| 0.5f64.powi(i as i32 + 1)).collect();
    let test = chi_square_gof(&observed, &probs, overflow).unwrap();
    Verdict {
        pass: off_support == 0 && test.p_value > CHI_SQUARE_LEVEL,
        detail: format!(
            "chi2 = {:.3}, dof = {}, p = {:.4} (level {CHI_SQUARE_LEVEL}); {off_support} draws off support",
            test.statistic, test.dof, test.p_value
        ),
    }
}

fn criterion_7() -> Verdict {
    let disp = DisplacementModel::iid(2.0, 1.0).unwrap();
    let cfg = binary_config(14, disp.clone(), 107);
    let outs = run_batch(&cfg, BINARY_REPS);
    let finite: Vec<u64> = outs.iter().map(|o| o.atoms.count_above(1.0)).collect();
    let lcfg = LimitConfig::default();
    let draws: Vec<_> = (0..Q_SAMPLES as u64)
        .map(|i| sample_limit_pp(&disp, &binary(), &lcfg, &mut derived_rng(107, LIMIT_STREAM_OFFSET + i)).unwrap())
        .collect();
    let floor = draws.iter().map(|d| d.floor).fold(0.0, f64::max);
    assert!(floor < 1.0);
    let limit: Vec<u64> = draws.iter().map(|d| d.measure.count_above(1.0)).collect();
    let tv = count_distribution_tv(&finite, &limit).unwrap();
    let mean = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len() as f64;
    // reported alongside, not part of the verdict
    let f = TestFunction::IndicatorAbove { x: 1.0, theta: 1.0 };
    let finite_measures: Vec<PointMeasure> = outs.iter().map(|o| o.atoms.clone()).collect();
    let limit_measures: Vec<PointMeasure> = draws.iter().map(|d| d.measure.clone()).collect();
    let lap_finite = laplace_estimate(&finite_measures, &f, cfg.retain_delta).unwrap();
    let lap_limit = laplace_estimate(&limit_measures, &f, floor).unwrap();
    Verdict {
        pass: tv < COUNT_TV_TOL,
        detail: format!(
            "TV = {tv:.4} (tol {COUNT_TV_TOL}); mean count {:.3} finite vs {:.3} limit; \
             Laplace 1(x > 1): {lap_finite:.4} finite vs {lap_limit:.4} limit",
            mean(&finite),
            mean(&limit)
        ),
    }
}

fn criterion_8() -> Verdict {
    let mut fractions = Vec::new();
    let mut path_fractions = Vec::new();
    let mut early = 0.0;
    for n in [8usize, 11, 14] {
        let mut cfg = binary_config(n, DisplacementModel::iid(2.0, 1.0).unwrap(), 108);
        cfg.jump_eta = 0.1;
        let outs = run_batch(&cfg, BINARY_REPS);
        let rep = diagnostics_report(&outs, 10);
        fractions.push(rep.two_jump_fraction);
        path_fractions.push(rep.two_jump_path_fraction);
        if n == 14 {
            early = rep.early_jump_fraction;
        }
    }
    let decreasing = fractions.windows(2).all(|w| w[1] < w[0]);
    Verdict {
        pass: decreasing && early < EARLY_JUMP_TOL,
        detail: format!(
            "two_jump_fraction {fractions:?}; per-leaf fraction {:?}; early_jump_fraction(10) = {early:.4} (tol {EARLY_JUMP_TOL})",
            path_fractions.iter().map(|f| format!("{f:.4}")).collect::<Vec<_>>()
        ),
    }
}

fn random_config(i: u64) -> SimConfig {
    use rand::Rng;
    let mut rng = derived_rng(109, i);
    let n = rng.random_range(1..=8);
    let laws = [
        OffspringLaw::deterministic(2).unwrap(),
        OffspringLaw::poisson(rng.random_range(0.8..2.5)).unwrap(),
        OffspringLaw::geometric(rng.random_range(0.3..0.65)).unwrap(),
        OffspringLaw::binomial(3, rng.random_range(0.3..0.9)).unwrap(),
        OffspringLaw::finite(vec![0.2, 0.3, 0.5]).unwrap(),
    ];
    let bounded = rng.random_bool(0.5);
    let env = if bounded {
        EnvironmentModel::new(vec![laws[0].clone(), laws[3].clone(), laws[4].clone()], vec![0.3, 0.4, 0.3]).unwrap()
    } else {
        let a = rng.random_range(0..laws.len());
        let b = rng.random_range(0..laws.len());
        EnvironmentModel::new(vec![laws[a].clone(), laws[b].clone()], vec![0.5, 0.5]).unwrap()
    };
    let alpha = rng.random_range(0.5..3.0);
    let p = rng.random_range(0.0..=1.0);
    let disp = match (bounded, rng.random_range(0..3)) {
        (_, 0) => DisplacementModel::iid(alpha, p).unwrap(),
        (_, 1) | (false, _) => DisplacementModel::full_dep(alpha, p).unwrap(),
        (true, _) => {
            // all coordinate permutations of one direction in R^3
            let raw: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
            let d: Vec<f64> = raw.iter().map(|x| x / norm).collect();
            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let atoms = perms.iter().map(|q| q.iter().map(|&j| d[j]).collect()).collect();
            DisplacementModel::discrete_angular(alpha, atoms, vec![1.0; 6]).unwrap()
        }
    };
    let mut cfg = SimConfig::new(n, env, disp);
    cfg.retain_delta = rng.random_range(0.05..0.5);
    cfg.top_k = rng.random_range(2..8);
    cfg.condition_on_survival = rng.random_bool(0.5);
    cfg.population_cap = 10_000;
    cfg.seed = rng.random();
    cfg
}

fn criterion_9() -> Verdict {
    let mut mismatches = Vec::new();
    let mut capped = 0;
    for i in 0..100 {
        let cfg = random_config(i);
        let streamed = simulate(&cfg, &mut derived_rng(cfg.seed, 0));
        let naive = naive_simulate(&cfg, &mut derived_rng(cfg.seed, 0));
        let same = match (&streamed, &naive) {
            (Ok(s), Ok(o)) => {
                s.z == o.z && s.top == o.top && s.bottom == o.bottom && s.atoms == o.atoms && s.restarts == o.restarts
            }
            (Err(SimError::PopulationCapExceeded { .. }), Err(NaiveError::CapExceeded)) => {
                capped += 1;
                true
            }
            _ => false,
        };
        if !same {
            mismatches.push(i);
        }
    }
    Verdict {
        pass: mismatches.is_empty(),
        detail: format!("100 configs, {capped} hit the population cap in both; mismatches: {mismatches:?}"),
    }
}

fn criterion_10() -> Verdict {
    let p2 = OffspringLaw::poisson(2.0).unwrap();
    let p3 = OffspringLaw::poisson(3.0).unwrap();
    let exact = (2.0 * ((-3.0f64).exp() - 1.0)).exp();
    let computed = extinct_prob_by_gen(&[p2.clone(), p3.clone()]);
    let exact_ok = (computed - exact).abs() < EXTINCTION_EXACT_TOL;

    let mut rng = derived_rng(110, 0);
    let draws = 1_000_000;
    let extinct = (0..draws).filter(|_| p3.sample_sum(p2.sample(&mut rng), &mut rng) == 0).count();
    let freq = extinct as f64 / draws as f64;
    let sigma = (exact * (1.0 - exact) / draws as f64).sqrt();
    let freq_ok = (freq - exact).abs() < SIGMAS * sigma;

    let mut cfg = SimConfig::new(10, EnvironmentModel::fixed(p2), DisplacementModel::iid(2.0, 1.0).unwrap());
    cfg.condition_on_survival = false;
    cfg.seed = 110;
    let reps = 100_000;
    let ws: Vec<f64> = run_batch(&cfg, reps).iter().map(|o| o.w_n).collect();
    let mean = ws.iter().sum::<f64>() / reps as f64;
    let var = ws.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let w_sigma = (var / reps as f64).sqrt();
    let w_ok = (mean - 1.0).abs() < SIGMAS * w_sigma;
    Verdict {
        pass: exact_ok && freq_ok && w_ok,
        detail: format!(
            "|pgf - exact| = {:.1e}; empirical {freq:.5} vs {exact:.5} ({:.2} sigma); mean W_n = {mean:.5} ({:.2} sigma)",
            (computed - exact).abs(),
            (freq - exact).abs() / sigma,
            (mean - 1.0).abs() / w_sigma
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("binary tree, independent displacements", criterion_1),
        ("binary tree, fully dependent displacements", criterion_2),
        ("general Q equals shortcuts", criterion_3),
        ("random environment maximum", criterion_4),
        ("joint min/max and top-two laws", criterion_5),
        ("cluster law chi-square", criterion_6),
        ("count process", criterion_7),
        ("big-jump diagnostics", criterion_8),
        ("streaming vs full-tree oracle", criterion_9),
        ("quenched pgf machinery and martingale mean", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion_{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let verdict = if v.pass { "PASS" } else { "FAIL" };
        println!("{id} [{name}]: {verdict} ({}; {:.1}s)", v.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
