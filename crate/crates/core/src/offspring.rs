//! Progeny laws and quenched generation sizes.
//!
//! Generation sizes under a (reversed) environment are obtained by composing
//! probability generating functions: with `env_rev[0]` governing generation
//! 0, the pgf of `Z_i` is `f_0(f_1(...f_{i-1}(s)))`.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::series;

/// Default degree cap for truncated generation-size pmfs.
pub const DEFAULT_DEGREE_CAP: usize = 4096;

const FINITE_PMF_TOL: f64 = 1e-12;

/// A progeny distribution on the nonnegative integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OffspringLaw {
    Deterministic { k: u64 },
    Poisson { lambda: f64 },
    /// `P(xi = k) = (1 - q) q^k`, `k >= 0`.
    Geometric { q: f64 },
    Binomial { m: u64, q: f64 },
    Finite { pmf: Vec<f64> },
}

impl OffspringLaw {
    pub fn deterministic(k: u64) -> Result<Self, ModelError> {
        Self::checked(OffspringLaw::Deterministic { k })
    }

    pub fn poisson(lambda: f64) -> Result<Self, ModelError> {
        Self::checked(OffspringLaw::Poisson { lambda })
    }

    pub fn geometric(q: f64) -> Result<Self, ModelError> {
        Self::checked(OffspringLaw::Geometric { q })
    }

    pub fn binomial(m: u64, q: f64) -> Result<Self, ModelError> {
        Self::checked(OffspringLaw::Binomial { m, q })
    }

    pub fn finite(pmf: Vec<f64>) -> Result<Self, ModelError> {
        Self::checked(OffspringLaw::Finite { pmf })
    }

    fn checked(law: Self) -> Result<Self, ModelError> {
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidOffspring(msg));
        match *self {
            OffspringLaw::Deterministic { k: 0 } => bad("deterministic law needs k >= 1".into()),
            OffspringLaw::Poisson { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                bad(format!("poisson rate {lambda} must be positive"))
            }
            OffspringLaw::Geometric { q } if !(q > 0.0 && q < 1.0) => {
                bad(format!("geometric parameter {q} outside (0, 1)"))
            }
            OffspringLaw::Binomial { m, q } if m == 0 || !(q > 0.0 && q < 1.0) => {
                bad(format!("binomial parameters m={m}, q={q} out of range"))
            }
            OffspringLaw::Finite { ref pmf } => {
                if pmf.is_empty() {
                    return bad("empty pmf".into());
                }
                if pmf.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                    return bad("pmf entries must be finite and nonnegative".into());
                }
                let total: f64 = pmf.iter().sum();
                if (total - 1.0).abs() > FINITE_PMF_TOL {
                    return bad(format!("pmf sums to {total}"));
                }
                if self.mean() <= 0.0 {
                    return bad("mean must be positive".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            OffspringLaw::Deterministic { k } => k as f64,
            OffspringLaw::Poisson { lambda } => lambda,
            OffspringLaw::Geometric { q } => q / (1.0 - q),
            OffspringLaw::Binomial { m, q } => m as f64 * q,
            OffspringLaw::Finite { ref pmf } => {
                pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
            }
        }
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match *self {
            OffspringLaw::Deterministic { k: d } => f64::from(u8::from(k == d)),
            OffspringLaw::Poisson { lambda } => {
                (-lambda + k as f64 * lambda.ln() - ln_factorial(k)).exp()
            }
            OffspringLaw::Geometric { q } => (1.0 - q) * q.powf(k as f64),
            OffspringLaw::Binomial { m, q } => {
                if k > m {
                    return 0.0;
                }
                let ln_choose = ln_factorial(m) - ln_factorial(k) - ln_factorial(m - k);
                (ln_choose + k as f64 * q.ln() + (m - k) as f64 * (1.0 - q).ln()).exp()
            }
            OffspringLaw::Finite { ref pmf } => pmf.get(k as usize).copied().unwrap_or(0.0),
        }
    }

    /// Probability generating function; `s` must lie in `[0, 1]`.
    pub fn pgf_eval(&self, s: f64) -> Result<f64, ModelError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(ModelError::PgfDomain(s));
        }
        Ok(self.pgf(s))
    }

    pub(crate) fn pgf(&self, s: f64) -> f64 {
        match *self {
            OffspringLaw::Deterministic { k } => s.powf(k as f64),
            OffspringLaw::Poisson { lambda } => (lambda * (s - 1.0)).exp(),
            OffspringLaw::Geometric { q } => (1.0 - q) / (1.0 - q * s),
            OffspringLaw::Binomial { m, q } => (1.0 - q + q * s).powf(m as f64),
            OffspringLaw::Finite { ref pmf } => pmf.iter().rev().fold(0.0, |acc, &p| acc * s + p),
        }
    }

    /// Derivative of the pgf at `s`.
    pub(crate) fn pgf_derivative(&self, s: f64) -> f64 {
        match *self {
            OffspringLaw::Deterministic { k } => k as f64 * s.powf(k as f64 - 1.0),
            OffspringLaw::Poisson { lambda } => lambda * (lambda * (s - 1.0)).exp(),
            OffspringLaw::Geometric { q } => (1.0 - q) * q / (1.0 - q * s).powi(2),
            OffspringLaw::Binomial { m, q } => m as f64 * q * (1.0 - q + q * s).powf(m as f64 - 1.0),
            OffspringLaw::Finite { ref pmf } => pmf
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &p)| acc * s + k as f64 * p),
        }
    }

    /// `P(xi > 1)`.
    pub fn prob_gt1(&self) -> f64 {
        match *self {
            OffspringLaw::Deterministic { k } => f64::from(u8::from(k > 1)),
            OffspringLaw::Finite { ref pmf } => pmf.iter().skip(2).sum(),
            _ => (1.0 - self.pmf(0) - self.pmf(1)).max(0.0),
        }
    }

    /// Largest possible progeny, `None` for unbounded families.
    pub fn max_support(&self) -> Option<u64> {
        match *self {
            OffspringLaw::Deterministic { k } => Some(k),
            OffspringLaw::Binomial { m, .. } => Some(m),
            OffspringLaw::Finite { ref pmf } => {
                Some(pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u64)
            }
            OffspringLaw::Poisson { .. } | OffspringLaw::Geometric { .. } => None,
        }
    }

    pub fn is_leafless(&self) -> bool {
        self.pmf(0) == 0.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sampler().sample(rng)
    }

    /// Precomputed sampler, for drawing many progeny counts from one law.
    pub fn sampler(&self) -> OffspringSampler {
        match *self {
            OffspringLaw::Deterministic { k } => OffspringSampler::Constant(k),
            OffspringLaw::Poisson { lambda } => {
                OffspringSampler::Poisson(Poisson::new(lambda).expect("validated rate"))
            }
            OffspringLaw::Geometric { q } => OffspringSampler::Geometric { ln_q: q.ln() },
            OffspringLaw::Binomial { m, q } => {
                OffspringSampler::Binomial(Binomial::new(m, q).expect("validated parameters"))
            }
            OffspringLaw::Finite { ref pmf } => {
                let mut acc = 0.0;
                let cumulative: Vec<f64> = pmf
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                let last = pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0);
                OffspringSampler::Finite { cumulative, last }
            }
        }
    }

    /// Total progeny of `count` independent individuals.
    ///
    /// Uses the closure of each family under convolution, so the cost does
    /// not depend on `count`.
    pub fn sample_sum<R: Rng + ?Sized>(&self, count: u64, rng: &mut R) -> u64 {
        if count == 0 {
            return 0;
        }
        match *self {
            OffspringLaw::Deterministic { k } => count.saturating_mul(k),
            OffspringLaw::Poisson { lambda } => poisson_draw(count as f64 * lambda, rng),
            OffspringLaw::Geometric { q } => {
                // negative binomial as a gamma-mixed Poisson
                let gamma = Gamma::new(count as f64, q / (1.0 - q)).expect("positive shape");
                poisson_draw(gamma.sample(rng), rng)
            }
            OffspringLaw::Binomial { m, q } => Binomial::new(count.saturating_mul(m), q)
                .expect("validated parameters")
                .sample(rng),
            OffspringLaw::Finite { ref pmf } => {
                let mut remaining = count;
                let mut mass_left = 1.0;
                let mut total = 0u64;
                for (k, &p) in pmf.iter().enumerate() {
                    if remaining == 0 || mass_left <= 0.0 {
                        break;
                    }
                    let take = if p >= mass_left {
                        remaining
                    } else {
                        Binomial::new(remaining, (p / mass_left).clamp(0.0, 1.0))
                            .expect("probability in range")
                            .sample(rng)
                    };
                    total = total.saturating_add(take.saturating_mul(k as u64));
                    remaining -= take;
                    mass_left -= p;
                }
                total
            }
        }
    }

    /// Pmf of `sum_{j <= xi} Y_j` where the `Y_j` are i.i.d. with the given
    /// truncated pmf, i.e. the pgf of this law composed with `inner`.
    ///
    /// Coefficients up to the degree cap are exact: mass of `inner` beyond
    /// the cap only feeds totals beyond the cap.
    pub fn compose_pmf(&self, inner: &TruncatedPmf) -> TruncatedPmf {
        let cap = inner.degree_cap;
        let h = &inner.probs;
        let probs = match *self {
            OffspringLaw::Deterministic { k } => series::pow(h, k, cap),
            OffspringLaw::Poisson { lambda } => series::poisson_compose(lambda, h, cap),
            OffspringLaw::Geometric { q } => series::geometric_compose(q, h, cap),
            OffspringLaw::Binomial { m, q } => {
                let mut base = h.iter().map(|c| q * c).collect::<Vec<_>>();
                base[0] += 1.0 - q;
                series::pow(&base, m, cap)
            }
            OffspringLaw::Finite { ref pmf } => series::poly_compose(pmf, h, cap),
        };
        TruncatedPmf::from_probs(probs, cap)
    }

    /// `E(xi log xi 1(xi >= 2))`, with a bound on the neglected tail and the
    /// number of summed terms.
    pub(crate) fn xlogx_moment(&self) -> (f64, f64, usize) {
        let term = |k: u64, p: f64| if k >= 2 { p * k as f64 * (k as f64).ln() } else { 0.0 };
        if let Some(max) = self.max_support() {
            let value = (2..=max).map(|k| term(k, self.pmf(k))).sum();
            return (value, 0.0, max.saturating_sub(1) as usize);
        }
        let mean = self.mean();
        let mut value = 0.0;
        let mut k = 2u64;
        loop {
            let p = self.pmf(k);
            value += term(k, p);
            // the pmf ratio bound below needs k past the mode
            if (k as f64) > 2.0 * mean + 10.0 && p < 1e-14 {
                break;
            }
            k += 1;
        }
        let ratio = match *self {
            OffspringLaw::Poisson { lambda } => lambda / (k as f64 + 1.0),
            OffspringLaw::Geometric { q } => q,
            _ => unreachable!("bounded families handled above"),
        };
        // k ln k <= k^2 and pmf(k + j) <= pmf(k) ratio^j
        let (kf, r) = (k as f64, ratio);
        let tail = self.pmf(k)
            * (kf * kf * r / (1.0 - r) + 2.0 * kf * r / (1.0 - r).powi(2)
                + r * (1.0 + r) / (1.0 - r).powi(3));
        (value, tail, (k - 1) as usize)
    }
}

fn poisson_draw<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("finite positive rate").sample(rng) as u64
}

pub(crate) fn ln_factorial(k: u64) -> f64 {
    if k < 256 {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64 + 1.0;
    // Stirling series for ln Gamma(x)
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
}

/// Sampler with per-law setup done once.
#[derive(Debug, Clone)]
pub enum OffspringSampler {
    Constant(u64),
    Poisson(Poisson<f64>),
    Geometric { ln_q: f64 },
    Binomial(Binomial),
    Finite { cumulative: Vec<f64>, last: usize },
}

impl OffspringSampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            OffspringSampler::Constant(k) => *k,
            OffspringSampler::Poisson(d) => d.sample(rng) as u64,
            OffspringSampler::Geometric { ln_q } => {
                // inversion: floor(ln U / ln q) with U in (0, 1]
                let u: f64 = 1.0 - rng.random::<f64>();
                (u.ln() / ln_q).floor() as u64
            }
            OffspringSampler::Binomial(d) => d.sample(rng),
            OffspringSampler::Finite { cumulative, last } => {
                let u: f64 = rng.random();
                cumulative
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(*last)
                    .min(*last) as u64
            }
        }
    }
}

/// Pmf of a nonnegative integer variable known up to a degree cap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedPmf {
    /// `probs[r] = P(Z = r)` for `r <= degree_cap`; trailing zeros trimmed.
    pub probs: Vec<f64>,
    /// Mass on values beyond the cap.
    pub mass_beyond: f64,
    pub degree_cap: usize,
}

impl TruncatedPmf {
    /// The law of `Z_0 = 1`.
    pub fn point_mass_one(degree_cap: usize) -> Self {
        assert!(degree_cap >= 1, "degree cap must be at least 1");
        TruncatedPmf { probs: vec![0.0, 1.0], mass_beyond: 0.0, degree_cap }
    }

    fn from_probs(probs: Vec<f64>, degree_cap: usize) -> Self {
        let total: f64 = probs.iter().sum();
        TruncatedPmf { probs, mass_beyond: (1.0 - total).max(0.0), degree_cap }
    }

    pub fn prob(&self, r: usize) -> f64 {
        self.probs.get(r).copied().unwrap_or(0.0)
    }

    /// `sum_r r P(Z = r)` over the retained range.
    pub fn truncated_mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(r, p)| r as f64 * p).sum()
    }
}

/// `P(Z_i = 0)` given the reversed environment, by pgf composition.
///
/// `env_rev[0]` is the law of generation 0. The empty environment stands for
/// `Z_0 = 1`, which never vanishes.
pub fn extinct_prob_by_gen(env_rev: &[OffspringLaw]) -> f64 {
    if env_rev.is_empty() {
        return 0.0;
    }
    env_rev.iter().rev().fold(0.0, |s, law| law.pgf(s))
}

/// Truncated pmf of `Z_i` given the reversed environment.
pub fn pmf_zi(env_rev: &[OffspringLaw], degree_cap: usize) -> TruncatedPmf {
    env_rev
        .iter()
        .rev()
        .fold(TruncatedPmf::point_mass_one(degree_cap), |inner, law| law.compose_pmf(&inner))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(OffspringLaw::poisson(0.0).is_err());
        assert!(OffspringLaw::geometric(1.0).is_err());
        assert!(OffspringLaw::binomial(0, 0.5).is_err());
        assert!(OffspringLaw::finite(vec![0.5, 0.4]).is_err());
        assert!(OffspringLaw::finite(vec![1.0]).is_err(), "zero mean");
        assert!(OffspringLaw::deterministic(0).is_err());
        assert!(OffspringLaw::finite(vec![0.5, 0.0, 0.5]).is_ok());
    }

    #[test]
    fn deterministic_always_returns_k() {
        let law = OffspringLaw::deterministic(2).unwrap();
        let mut r = rng(1);
        assert!((0..1000).all(|_| law.sample(&mut r) == 2));
        assert_eq!(law.mean(), 2.0);
        for s in [0.0, 0.3, 0.7, 1.0] {
            assert_abs_diff_eq!(law.pgf_eval(s).unwrap(), s * s, epsilon = 1e-15);
        }
    }

    #[test]
    fn poisson_sample_mean_within_three_sigma() {
        let law = OffspringLaw::poisson(2.0).unwrap();
        let mut r = rng(2);
        let n = 100_000;
        let mean = (0..n).map(|_| law.sample(&mut r) as f64).sum::<f64>() / n as f64;
        let sigma = (2.0 / n as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn finite_sample_frequencies() {
        let law = OffspringLaw::finite(vec![0.5, 0.0, 0.5]).unwrap();
        let mut r = rng(3);
        let n = 100_000;
        let mut twos = 0;
        for _ in 0..n {
            match law.sample(&mut r) {
                0 => {}
                2 => twos += 1,
                other => panic!("impossible value {other}"),
            }
        }
        let freq = twos as f64 / n as f64;
        assert!((freq - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn geometric_sampler_matches_pmf() {
        let law = OffspringLaw::geometric(0.6).unwrap();
        let mut r = rng(4);
        let n = 100_000;
        let zeros = (0..n).filter(|_| law.sample(&mut r) == 0).count();
        let freq = zeros as f64 / n as f64;
        assert!((freq - 0.4).abs() < 3.0 * (0.24 / n as f64).sqrt());
    }

    #[test]
    fn closed_form_pgf_values() {
        let law = OffspringLaw::poisson(2.0).unwrap();
        assert_abs_diff_eq!(law.pgf_eval(0.0).unwrap(), 0.135_335_283_236_612_7, epsilon = 1e-15);
        assert!(law.pgf_eval(-0.1).is_err());
        assert!(law.pgf_eval(1.5).is_err());
        let sym = OffspringLaw::finite(vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(sym.mean(), 1.0);
    }

    #[test]
    fn pgf_derivative_at_one_is_mean() {
        let laws = [
            OffspringLaw::poisson(2.5).unwrap(),
            OffspringLaw::geometric(0.7).unwrap(),
            OffspringLaw::binomial(5, 0.3).unwrap(),
            OffspringLaw::finite(vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
            OffspringLaw::deterministic(3).unwrap(),
        ];
        for law in &laws {
            assert_abs_diff_eq!(law.pgf_derivative(1.0), law.mean(), epsilon = 1e-12);
            // finite-difference check away from the boundary
            let h = 1e-6;
            let fd = (law.pgf(0.5 + h) - law.pgf(0.5 - h)) / (2.0 * h);
            assert_abs_diff_eq!(law.pgf_derivative(0.5), fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn extinction_examples() {
        let two = OffspringLaw::deterministic(2).unwrap();
        assert_eq!(extinct_prob_by_gen(&[two.clone(), two.clone(), two]), 0.0);
        let p2 = OffspringLaw::poisson(2.0).unwrap();
        let p3 = OffspringLaw::poisson(3.0).unwrap();
        assert_abs_diff_eq!(extinct_prob_by_gen(std::slice::from_ref(&p2)), (-2.0f64).exp(), epsilon = 1e-15);
        let expected = (2.0 * ((-3.0f64).exp() - 1.0)).exp();
        assert_abs_diff_eq!(extinct_prob_by_gen(&[p2, p3]), expected, epsilon = 1e-12);
        assert_eq!(extinct_prob_by_gen(&[]), 0.0);
    }

    #[test]
    fn pmf_zi_examples() {
        let two = OffspringLaw::deterministic(2).unwrap();
        let pm = pmf_zi(&[two.clone(), two.clone(), two], 64);
        assert_eq!(pm.prob(8), 1.0);
        assert_eq!(pm.mass_beyond, 0.0);
        assert_eq!(pm.probs.iter().filter(|&&p| p > 0.0).count(), 1);

        let fin = OffspringLaw::finite(vec![0.5, 0.0, 0.5]).unwrap();
        let pm = pmf_zi(&[fin], 16);
        assert_eq!((pm.prob(0), pm.prob(1), pm.prob(2)), (0.5, 0.0, 0.5));

        let pois = OffspringLaw::poisson(2.0).unwrap();
        let pm = pmf_zi(&[pois], 50);
        let mut expected = (-2.0f64).exp();
        for k in 0..=50 {
            assert_abs_diff_eq!(pm.prob(k), expected, epsilon = 1e-15);
            expected *= 2.0 / (k as f64 + 1.0);
        }
        assert!(pm.mass_beyond < 1e-12);

        let empty = pmf_zi(&[], 4);
        assert_eq!(empty.prob(1), 1.0);
    }

    #[test]
    fn deterministic_growth_beyond_cap_goes_to_tail_bucket() {
        let two = OffspringLaw::deterministic(2).unwrap();
        let pm = pmf_zi(&vec![two; 5], 16);
        assert_eq!(pm.mass_beyond, 1.0);
        assert!(pm.probs.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn pmf_zi_agrees_with_direct_simulation() {
        let env = [
            OffspringLaw::poisson(1.5).unwrap(),
            OffspringLaw::geometric(0.6).unwrap(),
            OffspringLaw::binomial(3, 0.5).unwrap(),
        ];
        let pm = pmf_zi(&env, 256);
        let mut r = rng(9);
        let reps = 100_000;
        let mut counts = [0u64; 8];
        for _ in 0..reps {
            let mut z = 1u64;
            for law in &env {
                z = (0..z).map(|_| law.sample(&mut r)).sum();
            }
            if (z as usize) < counts.len() {
                counts[z as usize] += 1;
            }
        }
        for (k, &c) in counts.iter().enumerate() {
            let p = pm.prob(k);
            let freq = c as f64 / reps as f64;
            let sigma = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((freq - p).abs() < 3.0 * sigma + 1e-4, "k={k}: {freq} vs {p}");
        }
    }

    #[test]
    fn sample_sum_matches_mean() {
        let laws = [
            OffspringLaw::poisson(2.0).unwrap(),
            OffspringLaw::geometric(0.5).unwrap(),
            OffspringLaw::binomial(4, 0.4).unwrap(),
            OffspringLaw::finite(vec![0.2, 0.3, 0.5]).unwrap(),
        ];
        let mut r = rng(11);
        for law in &laws {
            let count = 10_000u64;
            let reps = 400;
            let total: f64 = (0..reps).map(|_| law.sample_sum(count, &mut r) as f64).sum();
            let mean = total / (reps as f64 * count as f64);
            assert!((mean - law.mean()).abs() < 0.01, "{law:?}: {mean}");
        }
    }

    #[test]
    fn xlogx_moment_of_poisson_has_small_tail() {
        let law = OffspringLaw::poisson(3.0).unwrap();
        let (value, tail, _) = law.xlogx_moment();
        // brute force with many terms
        let brute: f64 = (2..200u64).map(|k| law.pmf(k) * k as f64 * (k as f64).ln()).sum();
        assert_abs_diff_eq!(value, brute, epsilon = 1e-10);
        assert!(tail < 1e-10);
    }

    fn arb_law() -> impl Strategy<Value = OffspringLaw> {
        prop_oneof![
            (1u64..4).prop_map(|k| OffspringLaw::Deterministic { k }),
            (0.2f64..4.0).prop_map(|lambda| OffspringLaw::Poisson { lambda }),
            (0.1f64..0.8).prop_map(|q| OffspringLaw::Geometric { q }),
            (1u64..5, 0.1f64..0.9).prop_map(|(m, q)| OffspringLaw::Binomial { m, q }),
            proptest::collection::vec(0.01f64..1.0, 2..5).prop_map(|w| {
                let t: f64 = w.iter().sum();
                OffspringLaw::Finite { pmf: w.iter().map(|x| x / t).collect() }
            }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pgf_is_monotone_and_normalised(law in arb_law(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(law.pgf(lo) <= law.pgf(hi) + 1e-15);
            prop_assert!((law.pgf(1.0) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn composition_consistency(env in proptest::collection::vec(arb_law(), 1..4)) {
            let pm = pmf_zi(&env, 512);
            if pm.mass_beyond < 1e-9 {
                prop_assert!((extinct_prob_by_gen(&env) - pm.prob(0)).abs() < 1e-9);
            }
            let total: f64 = pm.probs.iter().sum::<f64>() + pm.mass_beyond;
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(pm.probs.iter().all(|&p| p >= 0.0));
        }

        #[test]
        fn extinction_is_monotone_in_generations(env in proptest::collection::vec(arb_law(), 1..6)) {
            // appending generations nests the extinction events
            for i in 1..env.len() {
                prop_assert!(extinct_prob_by_gen(&env[..i]) <= extinct_prob_by_gen(&env[..=i]) + 1e-15);
            }
        }

        #[test]
        fn truncated_mean_approaches_product_of_means(env in proptest::collection::vec(arb_law(), 1..3)) {
            let product: f64 = env.iter().map(OffspringLaw::mean).product();
            let small = pmf_zi(&env, 16).truncated_mean();
            let large = pmf_zi(&env, 1024).truncated_mean();
            prop_assert!(small <= large + 1e-9);
            prop_assert!(large <= product * (1.0 + 1e-9));
            prop_assert!((large - product).abs() < 1e-6 * product.max(1.0));
        }
    }
}
