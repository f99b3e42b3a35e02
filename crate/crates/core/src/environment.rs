//! The i.i.d. random environment.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::offspring::OffspringLaw;

const WEIGHT_TOL: f64 = 1e-12;

/// Finite mixture over offspring laws: each generation's law is drawn
/// independently with probability `weights[j]` of being `support[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentModel {
    pub support: Vec<OffspringLaw>,
    pub weights: Vec<f64>,
}

impl EnvironmentModel {
    pub fn new(support: Vec<OffspringLaw>, weights: Vec<f64>) -> Result<Self, ModelError> {
        let model = EnvironmentModel { support, weights };
        model.validate()?;
        Ok(model)
    }

    /// A degenerate environment: every generation uses `law`.
    pub fn fixed(law: OffspringLaw) -> Self {
        EnvironmentModel { support: vec![law], weights: vec![1.0] }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidEnvironment(msg));
        if self.support.is_empty() {
            return bad("empty support".into());
        }
        if self.support.len() != self.weights.len() {
            return bad(format!(
                "{} laws but {} weights",
                self.support.len(),
                self.weights.len()
            ));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return bad("weights must be finite and nonnegative".into());
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return bad(format!("weights sum to {total}"));
        }
        self.support.iter().try_for_each(OffspringLaw::validate)
    }

    fn active(&self) -> impl Iterator<Item = (&OffspringLaw, f64)> {
        self.support.iter().zip(self.weights.iter().copied()).filter(|(_, w)| *w > 0.0)
    }

    /// Smallest conditional mean among laws with positive weight.
    pub fn min_mean(&self) -> f64 {
        self.active().map(|(l, _)| l.mean()).fold(f64::INFINITY, f64::min)
    }

    /// Largest progeny over the support, `None` if some law is unbounded.
    pub fn max_progeny(&self) -> Option<u64> {
        self.active().try_fold(0, |acc, (l, _)| l.max_support().map(|m| acc.max(m)))
    }

    pub fn is_leafless(&self) -> bool {
        self.active().all(|(l, _)| l.is_leafless())
    }

    pub fn sampler(&self) -> EnvSampler {
        EnvSampler {
            index: WeightedIndex::new(&self.weights).expect("validated weights"),
            single: self.support.len() == 1,
        }
    }
}

/// Draws law indices from an [`EnvironmentModel`].
#[derive(Debug, Clone)]
pub struct EnvSampler {
    index: WeightedIndex<f64>,
    single: bool,
}

impl EnvSampler {
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.single {
            0
        } else {
            self.index.sample(rng)
        }
    }
}

/// A realised environment `(Y_0, ..., Y_{n-1})` together with the partial
/// products `pi[i] = prod_{j < i} E(xi | Y_j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvSequence {
    pub laws: Vec<OffspringLaw>,
    /// Index into the model support for each generation.
    pub indices: Vec<usize>,
    pub pi: Vec<f64>,
}

impl EnvSequence {
    pub fn from_laws(laws: Vec<OffspringLaw>, indices: Vec<usize>) -> Self {
        let mut pi = Vec::with_capacity(laws.len() + 1);
        pi.push(1.0);
        for law in &laws {
            let last = *pi.last().unwrap();
            pi.push(last * law.mean());
        }
        EnvSequence { laws, indices, pi }
    }

    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    pub fn pi_n(&self) -> f64 {
        *self.pi.last().unwrap()
    }

    pub fn reversed(&self) -> EnvSequence {
        let laws = self.laws.iter().rev().cloned().collect();
        let indices = self.indices.iter().rev().copied().collect();
        EnvSequence::from_laws(laws, indices)
    }
}

pub fn sample_env<R: Rng + ?Sized>(model: &EnvironmentModel, n: usize, rng: &mut R) -> EnvSequence {
    let sampler = model.sampler();
    let indices: Vec<usize> = (0..n).map(|_| sampler.sample_index(rng)).collect();
    let laws = indices.iter().map(|&i| model.support[i].clone()).collect();
    EnvSequence::from_laws(laws, indices)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "reason")]
pub enum Verdict {
    SupercriticalOK,
    Violated(String),
}

/// Numerical check of the supercriticality, nondegeneracy and
/// Kesten–Stigum type conditions on the environment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// `E log E(xi | Y_0)`.
    pub e_log_mean: f64,
    /// `E |log P(xi > 1 | Y_0)|`.
    pub e_abs_log_p_gt1: f64,
    /// `E[ E(xi log xi 1(xi >= 2) | Y_0) / E(xi | Y_0) ]`.
    pub kesten_stigum_term: f64,
    /// Bound on the truncated tail of `kesten_stigum_term`.
    pub kesten_stigum_tail_bound: f64,
    /// Number of pmf terms summed across the support.
    pub n_samples: usize,
    pub verdict: Verdict,
}

/// Evaluates the environment assumptions in closed form.
///
/// Bounded families are summed exactly; Poisson and geometric laws are summed
/// until the pmf drops below `1e-14`, with the neglected tail bounded through
/// the geometric decay of the pmf ratio.
pub fn check_assumptions(model: &EnvironmentModel) -> AssumptionReport {
    let mut e_log_mean = 0.0;
    let mut e_abs_log_p_gt1 = 0.0;
    let mut ks = 0.0;
    let mut ks_tail = 0.0;
    let mut terms = 0;
    let mut reasons = Vec::new();
    for (law, w) in model.active() {
        let mean = law.mean();
        e_log_mean += w * mean.ln();
        let p_gt1 = law.prob_gt1();
        if p_gt1 <= 0.0 {
            reasons.push(format!("P(xi > 1) = 0 under {law:?}"));
            e_abs_log_p_gt1 = f64::INFINITY;
        } else {
            e_abs_log_p_gt1 += w * p_gt1.ln().abs();
        }
        let (moment, tail, used) = law.xlogx_moment();
        ks += w * moment / mean;
        ks_tail += w * tail / mean;
        terms += used;
    }
    if e_log_mean <= 0.0 {
        reasons.insert(0, format!("E log E(xi|Y0) = {e_log_mean} is not positive"));
    }
    if !ks.is_finite() {
        reasons.push("Kesten-Stigum moment is infinite".into());
    }
    let verdict = if reasons.is_empty() {
        Verdict::SupercriticalOK
    } else {
        Verdict::Violated(reasons.join("; "))
    };
    AssumptionReport {
        e_log_mean,
        e_abs_log_p_gt1,
        kesten_stigum_term: ks,
        kesten_stigum_tail_bound: ks_tail,
        n_samples: terms,
        verdict,
    }
}
