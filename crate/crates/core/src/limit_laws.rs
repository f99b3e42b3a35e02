//! Limit objects of the normalised extremes.
//!
//! Quantities indexed by a reversed environment `Y' = (Y'_0, Y'_1, ...)` are
//! computed through [`EnvPrime`], which draws `Y'` lazily and caches the
//! generation-size data. For `Z_i` given `Y'_{i-1:0}` the law of generation
//! 0 is `Y'_{i-1}` and the law of the last generation is `Y'_0`, so every
//! quantity extends from `i` to `i + 1` by composing with `f_{Y'_i}` on the
//! outside:
//!
//! * `pi[i + 1] = pi[i] * m(Y'_i)`;
//! * `e[i + 1] = f_{Y'_i}(e[i])` with `e[0] = 0`, the extinction probability;
//! * `d[i + 1] = f'_{Y'_i}(e[i]) d[i]` with `d[0] = 1`, the probability of a
//!   single particle.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brw_sim::PointMeasure;
use crate::displacement::{DependenceMode, DisplacementModel};
use crate::environment::{EnvSampler, EnvironmentModel};
use crate::error::ModelError;
use crate::offspring::{OffspringLaw, TruncatedPmf};
use crate::rng::{derived_rng, SimRng, LIMIT_STREAM_OFFSET};

const MAX_REJECTIONS: u64 = 1_000_000;
/// Window of realised means used when no uniform growth bound is available.
const GROWTH_WINDOW: usize = 10;
const W_BIAS_LAG: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimitConfig {
    /// Relative tolerance on the neglected tail of the generation series.
    pub series_tol: f64,
    pub max_terms: usize,
    /// `W` is approximated by `Z_m / pi_m` with `m = w_horizon`.
    pub w_horizon: usize,
    pub degree_cap: usize,
    /// Smallest radial Poisson point kept in limit point-process draws.
    pub poisson_floor: f64,
    pub n_limit_samples: usize,
}

impl Default for LimitConfig {
    fn default() -> Self {
        LimitConfig {
            series_tol: 1e-9,
            max_terms: 10_000,
            w_horizon: 30,
            degree_cap: crate::offspring::DEFAULT_DEGREE_CAP,
            poisson_floor: 0.05,
            n_limit_samples: 10_000,
        }
    }
}

impl LimitConfig {
    pub fn validate(&self) -> Result<(), LimitError> {
        let bad = |m: String| Err(LimitError::InvalidConfig(m));
        if !(self.series_tol > 0.0 && self.series_tol < 1.0) {
            return bad(format!("series_tol = {} outside (0, 1)", self.series_tol));
        }
        if self.w_horizon == 0 {
            return bad("w_horizon must be at least 1".into());
        }
        if !(self.poisson_floor > 0.0) {
            return bad(format!("poisson_floor = {} must be positive", self.poisson_floor));
        }
        if self.degree_cap == 0 || self.max_terms == 0 {
            return bad("degree_cap and max_terms must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error("series tail could not be certified within {0} terms")]
    NonGeometricGrowth(usize),
    #[error("general Q needs bounded progeny")]
    UnboundedProgenyInGeneralMode,
    #[error("top-two law needs x <= y, got x = {x}, y = {y}")]
    ArgumentOrder { x: f64, y: f64 },
    #[error("no sample accepted after {0} attempts")]
    RejectionCapReached(u64),
    #[error("sample is empty")]
    EmptySample,
    #[error("sample lacks the constant {0}")]
    MissingConstant(&'static str),
    #[error("invalid limit config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constant {
    C0,
    C1,
    C2,
    C3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms_used: usize,
}

/// Weights of a generation index choice and the constant they sum to.
#[derive(Debug, Clone)]
struct IndexLaw {
    cumulative: Vec<f64>,
    series: SeriesValue,
}

impl IndexLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// Lazily drawn reversed environment with cached generation-size data.
#[derive(Debug, Clone)]
pub struct EnvPrime {
    model: EnvironmentModel,
    sampler: EnvSampler,
    rng: SimRng,
    degree_cap: usize,
    indices: Vec<usize>,
    pi: Vec<f64>,
    extinct: Vec<f64>,
    single: Vec<f64>,
    pmfs: Vec<TruncatedPmf>,
    r_law: Option<IndexLaw>,
    unit_cluster_prob: Option<f64>,
    vr_law: Option<IndexLaw>,
}

impl EnvPrime {
    /// A fresh `Y'`, independent of everything drawn from `rng` later.
    pub fn draw<R: Rng + ?Sized>(model: &EnvironmentModel, degree_cap: usize, rng: &mut R) -> Self {
        EnvPrime::from_rng(model, degree_cap, SimRng::seed_from_u64(rng.random()))
    }

    pub fn from_rng(model: &EnvironmentModel, degree_cap: usize, rng: SimRng) -> Self {
        EnvPrime {
            model: model.clone(),
            sampler: model.sampler(),
            rng,
            degree_cap,
            indices: Vec::new(),
            pi: vec![1.0],
            extinct: vec![0.0],
            single: vec![1.0],
            pmfs: vec![TruncatedPmf::point_mass_one(degree_cap.max(1))],
            r_law: None,
            unit_cluster_prob: None,
            vr_law: None,
        }
    }

    pub fn model(&self) -> &EnvironmentModel {
        &self.model
    }

    /// Makes `Y'_0 .. Y'_{len-1}` available.
    fn ensure(&mut self, len: usize) {
        while self.indices.len() < len {
            let idx = self.sampler.sample_index(&mut self.rng);
            let law = &self.model.support[idx];
            let j = self.indices.len();
            let e = self.extinct[j];
            self.pi.push(self.pi[j] * law.mean());
            self.extinct.push(law.pgf(e));
            self.single.push(law.pgf_derivative(e) * self.single[j]);
            self.indices.push(idx);
        }
    }

    /// Support indices of `Y'_0 ..` drawn so far.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn law(&mut self, j: usize) -> &OffspringLaw {
        self.ensure(j + 1);
        &self.model.support[self.indices[j]]
    }

    /// `E(Z_i | Y'_{i-1:0})`.
    pub fn pi(&mut self, i: usize) -> f64 {
        self.ensure(i);
        self.pi[i]
    }

    /// `P(Z_i = 0 | Y'_{i-1:0})`.
    pub fn extinct(&mut self, i: usize) -> f64 {
        self.ensure(i);
        self.extinct[i]
    }

    /// `P(Z_i = 1 | Y'_{i-1:0})`.
    pub fn single(&mut self, i: usize) -> f64 {
        self.ensure(i);
        self.single[i]
    }

    /// Truncated pmf of `Z_i` given `Y'_{i-1:0}`.
    pub fn pmf(&mut self, i: usize) -> &TruncatedPmf {
        self.ensure(i);
        while self.pmfs.len() <= i {
            let j = self.pmfs.len() - 1;
            let next = self.model.support[self.indices[j]].compose_pmf(&self.pmfs[j]);
            self.pmfs.push(next);
        }
        &self.pmfs[i]
    }

    /// Lower bound on `pi[j + 1] / pi[j]` for all `j >= i`, when one is
    /// available: the smallest mean of the environment when it exceeds 1,
    /// otherwise the geometric mean growth over the last realised window.
    fn growth_bound(&mut self, i: usize) -> Option<f64> {
        let min_mean = self.model.min_mean();
        if min_mean > 1.0 {
            return Some(min_mean);
        }
        self.ensure(i);
        let w = i.min(GROWTH_WINDOW);
        if w == 0 {
            return None;
        }
        let g = (self.pi[i] / self.pi[i - w]).powf(1.0 / w as f64);
        (g > 1.0).then_some(g)
    }

    /// Sums `term(self, i)` over `i >= 0`, where each term is at most
    /// `scale / pi[k]` for the returned index `k`, until the tail is
    /// certified below `series_tol * value`.
    fn certified_sum<F>(&mut self, cfg: &LimitConfig, scale: f64, mut term: F) -> Result<(Vec<f64>, SeriesValue), LimitError>
    where
        F: FnMut(&mut EnvPrime, usize) -> Result<(f64, usize), LimitError>,
    {
        let mut terms = Vec::new();
        let mut value = 0.0;
        for i in 0..cfg.max_terms {
            let (t, k) = term(self, i)?;
            value += t;
            terms.push(t);
            if let Some(g) = self.growth_bound(k) {
                let tail = scale / self.pi(k) / (g - 1.0);
                // an identically zero series certifies with a zero bound
                if tail < cfg.series_tol * value || (value == 0.0 && tail == 0.0) {
                    return Ok((terms, SeriesValue { value, tail_bound: tail, terms_used: i + 1 }));
                }
            }
        }
        Err(LimitError::NonGeometricGrowth(cfg.max_terms))
    }

    fn index_law(terms: Vec<f64>, series: SeriesValue) -> IndexLaw {
        let mut acc = 0.0;
        let cumulative = terms
            .iter()
            .map(|t| {
                acc += t;
                acc
            })
            .collect();
        IndexLaw { cumulative, series }
    }

    fn r_law(&mut self, cfg: &LimitConfig) -> Result<&IndexLaw, LimitError> {
        if self.r_law.is_none() {
            let (terms, series) = self.certified_sum(cfg, 1.0, |env, i| {
                Ok(((1.0 - env.extinct(i)) / env.pi(i), i))
            })?;
            let unit: f64 = (0..terms.len()).map(|i| self.single(i) / self.pi(i)).sum();
            self.unit_cluster_prob = Some(unit / series.value);
            self.r_law = Some(Self::index_law(terms, series));
        }
        Ok(self.r_law.as_ref().unwrap())
    }

    fn vr_law(&mut self, cfg: &LimitConfig) -> Result<&IndexLaw, LimitError> {
        if self.vr_law.is_none() {
            let (terms, series) = self.certified_sum(cfg, 1.0, |env, i| {
                Ok(((1.0 - env.extinct(i + 1)) / env.pi(i + 1), i + 1))
            })?;
            self.vr_law = Some(Self::index_law(terms, series));
        }
        Ok(self.vr_law.as_ref().unwrap())
    }

    /// `P(R = 1 | Y')` for the single-displacement cluster law.
    pub fn unit_cluster_prob(&mut self, cfg: &LimitConfig) -> Result<f64, LimitError> {
        self.r_law(cfg)?;
        Ok(self.unit_cluster_prob.unwrap())
    }

    /// Forward simulation of `Z_i` given `Y'_{i-1:0}`, conditioned on
    /// exceeding the degree cap.
    fn sample_z_beyond_cap<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> Result<u64, LimitError> {
        self.ensure(i);
        let laws: Vec<&OffspringLaw> =
            self.indices[..i].iter().rev().map(|&j| &self.model.support[j]).collect();
        for _ in 0..MAX_REJECTIONS {
            let z = laws.iter().fold(1u64, |z, law| law.sample_sum(z, rng));
            if z as usize > self.degree_cap {
                return Ok(z);
            }
        }
        Err(LimitError::RejectionCapReached(MAX_REJECTIONS))
    }

    /// Draws `Z_i` from its quenched law, restricted to `Z_i >= min`.
    fn sample_z<R: Rng + ?Sized>(&mut self, i: usize, min: usize, rng: &mut R) -> Result<u64, LimitError> {
        let pmf = self.pmf(i);
        let inside: f64 = pmf.probs.iter().skip(min).sum();
        let total = inside + pmf.mass_beyond;
        let mut u = rng.random::<f64>() * total;
        if u < inside {
            for (r, &p) in pmf.probs.iter().enumerate().skip(min) {
                if u < p {
                    return Ok(r as u64);
                }
                u -= p;
            }
            // rounding at the top of the retained range
            let last = pmf.probs.iter().rposition(|&p| p > 0.0).unwrap_or(min);
            return Ok(last.max(min) as u64);
        }
        self.sample_z_beyond_cap(i, rng)
    }

    /// One draw of the cluster size `R`.
    pub fn sample_cluster_r<R: Rng + ?Sized>(&mut self, cfg: &LimitConfig, rng: &mut R) -> Result<u64, LimitError> {
        let i = self.r_law(cfg)?.sample(rng);
        self.sample_z(i, 1, rng)
    }

    /// One draw of `(V, R_1..R_V)`, never all zero.
    pub fn sample_cluster_vr<R: Rng + ?Sized>(
        &mut self,
        cfg: &LimitConfig,
        rng: &mut R,
    ) -> Result<(u64, Vec<u64>), LimitError> {
        let i = self.vr_law(cfg)?.sample(rng);
        let sampler = self.law(i).sampler();
        for _ in 0..MAX_REJECTIONS {
            let v = sampler.sample(rng);
            let mut rs = Vec::with_capacity(v as usize);
            for _ in 0..v {
                rs.push(self.sample_z(i, 0, rng)?);
            }
            if rs.iter().any(|&r| r > 0) {
                return Ok((v, rs));
            }
        }
        Err(LimitError::RejectionCapReached(MAX_REJECTIONS))
    }
}

/// Evaluates one of the generation series for the realised `Y'`.
pub fn constant_c(which: Constant, env: &mut EnvPrime, cfg: &LimitConfig) -> Result<SeriesValue, LimitError> {
    match which {
        Constant::C0 => env.certified_sum(cfg, 1.0, |e, i| Ok((1.0 / e.pi(i), i))).map(|r| r.1),
        Constant::C3 => env.r_law(cfg).map(|l| l.series),
        Constant::C1 => env.vr_law(cfg).map(|l| l.series),
        Constant::C2 => env
            .certified_sum(cfg, 1.0, |e, i| {
                let p0 = e.law(i).pmf(0);
                Ok(((1.0 - p0) / e.pi(i + 1), i + 1))
            })
            .map(|r| r.1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WEstimate {
    /// `Z_m / pi_m`.
    pub value: f64,
    /// `Z_{m-5} / pi_{m-5}`, when `m > 5`.
    pub lagged: Option<f64>,
    pub restarts: u64,
}

impl WEstimate {
    pub fn bias_proxy(&self) -> Option<f64> {
        self.lagged.map(|l| (self.value - l).abs())
    }
}

/// `Z_m / pi_m` for a branching process in a fresh environment.
pub fn estimate_w<R: Rng + ?Sized>(
    model: &EnvironmentModel,
    m: usize,
    condition_on_survival: bool,
    rng: &mut R,
) -> Result<WEstimate, LimitError> {
    let sampler = model.sampler();
    for restarts in 0..MAX_REJECTIONS {
        let mut z = 1u64;
        let mut pi = 1.0;
        let mut lagged = None;
        for g in 0..m {
            let law = &model.support[sampler.sample_index(rng)];
            z = law.sample_sum(z, rng);
            pi *= law.mean();
            if g + 1 + W_BIAS_LAG == m {
                lagged = Some(z as f64 / pi);
            }
        }
        if z > 0 || !condition_on_survival {
            return Ok(WEstimate { value: z as f64 / pi, lagged, restarts });
        }
    }
    Err(LimitError::RejectionCapReached(MAX_REJECTIONS))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QMode {
    /// Pattern enumeration over bounded broods.
    General,
    /// `p C3` for independent and `p C1` for fully dependent displacements.
    Shortcut,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QSample {
    pub q: f64,
    pub w: f64,
    /// `Q / W`.
    pub c: f64,
    /// `C3(Y')`, kept for the joint extreme laws of independent displacements.
    pub c3: Option<f64>,
    /// `P(R = 1 | Y')`.
    pub unit_cluster_prob: Option<f64>,
    pub tail_bound: f64,
    pub terms_used: usize,
    pub w_bias_proxy: Option<f64>,
    pub env_prime_summary: Vec<usize>,
}

pub fn sample_q<R: Rng + ?Sized>(
    disp: &DisplacementModel,
    env_model: &EnvironmentModel,
    mode: QMode,
    cfg: &LimitConfig,
    rng: &mut R,
) -> Result<QSample, LimitError> {
    cfg.validate()?;
    let w = estimate_w(env_model, cfg.w_horizon, true, rng)?;
    let mut env = EnvPrime::draw(env_model, cfg.degree_cap, rng);
    let p = disp.p();
    let mut c3 = None;
    let mut unit = None;
    if matches!(disp.mode(), DependenceMode::Iid) {
        c3 = Some(constant_c(Constant::C3, &mut env, cfg)?.value);
        unit = Some(env.unit_cluster_prob(cfg)?);
    }
    let series = match (mode, disp.mode()) {
        (QMode::Shortcut, DependenceMode::Iid) => constant_c(Constant::C3, &mut env, cfg)?,
        (QMode::Shortcut, DependenceMode::FullDep) => constant_c(Constant::C1, &mut env, cfg)?,
        _ => general_q_series(disp, &mut env, cfg)?,
    };
    let c = match (mode, disp.mode()) {
        (QMode::Shortcut, DependenceMode::Iid | DependenceMode::FullDep) => p * series.value,
        _ => series.value,
    };
    Ok(QSample {
        q: w.value * c,
        w: w.value,
        c,
        c3,
        unit_cluster_prob: unit,
        tail_bound: series.tail_bound,
        terms_used: series.terms_used,
        w_bias_proxy: w.bias_proxy(),
        env_prime_summary: env.indices().to_vec(),
    })
}

/// `sum_j pi_{j+1}^{-1} sum_v P(Z_1 = v | Y'_j) sum_k (1 - e_j^k) S_k(v)`,
/// where `S_k(v)` is the total pattern mass over broods of `v` children
/// with exactly `k` exceedances.
fn general_q_series(
    disp: &DisplacementModel,
    env: &mut EnvPrime,
    cfg: &LimitConfig,
) -> Result<SeriesValue, LimitError> {
    let max_v = env.model().max_progeny().ok_or(LimitError::UnboundedProgenyInGeneralMode)? as usize;
    let sums: Vec<Vec<f64>> = (0..=max_v).map(|v| disp.pattern_sums(v)).collect::<Result<_, _>>()?;
    // term_j <= scale * m_j / pi_{j+1} = scale / pi_j
    let scale = (1..=max_v)
        .map(|v| sums[v].iter().sum::<f64>() / v as f64)
        .fold(0.0, f64::max);
    env.certified_sum(cfg, scale, |e, j| {
        let ext = e.extinct(j);
        let pi_next = e.pi(j + 1);
        let law = e.law(j).clone();
        let mut t = 0.0;
        for (v, s) in sums.iter().enumerate().skip(1) {
            let pv = law.pmf(v as u64);
            if pv == 0.0 {
                continue;
            }
            let inner: f64 = (1..=v).map(|k| (1.0 - ext.powi(k as i32)) * s[k]).sum();
            t += pv * inner;
        }
        Ok((t / pi_next, j))
    })
    .map(|r| r.1)
}

/// `count` independent draws of `Q`, sample `i` on stream
/// `LIMIT_STREAM_OFFSET + i` of `seed`.
pub fn sample_q_batch(
    disp: &DisplacementModel,
    env_model: &EnvironmentModel,
    mode: QMode,
    cfg: &LimitConfig,
    seed: u64,
    count: usize,
) -> Vec<Result<QSample, LimitError>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_q(disp, env_model, mode, cfg, &mut derived_rng(seed, LIMIT_STREAM_OFFSET + i)))
        .collect()
}

fn mean_over<F: Fn(&QSample) -> Result<f64, LimitError>>(samples: &[QSample], f: F) -> Result<f64, LimitError> {
    if samples.is_empty() {
        return Err(LimitError::EmptySample);
    }
    let mut total = 0.0;
    for s in samples {
        total += f(s)?;
    }
    Ok(total / samples.len() as f64)
}

/// `E exp(-x^{-alpha} Q)`.
pub fn limit_max_cdf(samples: &[QSample], alpha: f64, x: f64) -> Result<f64, LimitError> {
    let t = x.powf(-alpha);
    mean_over(samples, |s| Ok((-t * s.q).exp()))
}

fn wc3(s: &QSample) -> Result<f64, LimitError> {
    s.c3.map(|c| s.w * c).ok_or(LimitError::MissingConstant("C3"))
}

/// `P(min > -y, max <= x)` in the limit, independent displacements.
pub fn joint_min_max_cdf(samples: &[QSample], alpha: f64, p: f64, x: f64, y: f64) -> Result<f64, LimitError> {
    let rate = p * x.powf(-alpha) + (1.0 - p) * y.powf(-alpha);
    mean_over(samples, |s| Ok((-wc3(s)? * rate).exp()))
}

/// `P(M1 <= y, M2 <= x)` for `x <= y` by the closed form that treats every
/// Poisson point as a single particle.
pub fn top_two_cdf(samples: &[QSample], alpha: f64, p: f64, x: f64, y: f64) -> Result<f64, LimitError> {
    top_two(samples, alpha, p, x, y, |_| Ok(1.0))
}

/// `P(M1 <= y, M2 <= x)` for `x <= y` accounting for cluster sizes: a single
/// point in `(x, y]` leaves the second maximum below `x` only if its cluster
/// has size one.
pub fn top_two_cdf_clustered(samples: &[QSample], alpha: f64, p: f64, x: f64, y: f64) -> Result<f64, LimitError> {
    top_two(samples, alpha, p, x, y, |s| {
        s.unit_cluster_prob.ok_or(LimitError::MissingConstant("P(R = 1)"))
    })
}

fn top_two<F>(samples: &[QSample], alpha: f64, p: f64, x: f64, y: f64, unit: F) -> Result<f64, LimitError>
where
    F: Fn(&QSample) -> Result<f64, LimitError>,
{
    if !(x > 0.0 && y > 0.0) || x > y {
        return Err(LimitError::ArgumentOrder { x, y });
    }
    let (tx, ty) = (x.powf(-alpha), y.powf(-alpha));
    mean_over(samples, |s| {
        let lam = p * wc3(s)?;
        Ok((-lam * tx).exp() * (1.0 + unit(s)? * lam * (tx - ty)))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitDraw {
    pub measure: PointMeasure,
    /// `[C W]^{1/alpha}`.
    pub scale: f64,
    /// Atoms below this magnitude are not represented.
    pub floor: f64,
    pub w: f64,
    pub constant: f64,
}

/// One draw of the limiting extremal process, restricted to radial points
/// above `poisson_floor`.
pub fn sample_limit_pp<R: Rng + ?Sized>(
    disp: &DisplacementModel,
    env_model: &EnvironmentModel,
    cfg: &LimitConfig,
    rng: &mut R,
) -> Result<LimitDraw, LimitError> {
    cfg.validate()?;
    let w = estimate_w(env_model, cfg.w_horizon, true, rng)?.value;
    let mut env = EnvPrime::draw(env_model, cfg.degree_cap, rng);
    let alpha = disp.alpha();
    let which = match disp.mode() {
        DependenceMode::Iid => Constant::C3,
        _ => Constant::C1,
    };
    let constant = constant_c(which, &mut env, cfg)?.value;
    let scale = (constant * w).powf(1.0 / alpha);
    let u_min = cfg.poisson_floor;
    let rate = disp.angular_mass() * u_min.powf(-alpha);
    let count = if rate > 0.0 { Poisson::new(rate).expect("positive rate").sample(rng) as u64 } else { 0 };
    let mut atoms = Vec::new();
    let sign = |rng: &mut R| if rng.random::<f64>() < disp.p() { 1.0 } else { -1.0 };
    for _ in 0..count {
        let zeta = u_min * (1.0 - rng.random::<f64>()).powf(-1.0 / alpha);
        match disp.mode() {
            DependenceMode::Iid => {
                let e = sign(rng);
                let r = env.sample_cluster_r(cfg, rng)?;
                atoms.push((scale * e * zeta, r));
            }
            DependenceMode::FullDep => {
                let e = sign(rng);
                let (_, rs) = env.sample_cluster_vr(cfg, rng)?;
                atoms.push((scale * e * zeta, rs.iter().sum()));
            }
            DependenceMode::DiscreteAngular { atoms: dirs, .. } => {
                let dir = &dirs[disp.sample_atom(rng)];
                let (v, rs) = env.sample_cluster_vr(cfg, rng)?;
                if v as usize > dir.len() {
                    return Err(ModelError::BroodTooLarge { v: v as usize, k: dir.len() }.into());
                }
                for (&a, &r) in dir.iter().zip(&rs) {
                    if r > 0 && a != 0.0 {
                        atoms.push((scale * zeta * a, r));
                    }
                }
            }
        }
    }
    let min_component = match disp.mode() {
        DependenceMode::DiscreteAngular { atoms, .. } => atoms
            .iter()
            .flat_map(|a| a.iter().map(|x| x.abs()))
            .filter(|&x| x > 0.0)
            .fold(f64::INFINITY, f64::min),
        _ => 1.0,
    };
    Ok(LimitDraw {
        measure: PointMeasure::from_atoms(atoms),
        scale,
        floor: scale * u_min * min_component,
        w,
        constant,
    })
}
