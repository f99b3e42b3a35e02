//! Comparison of finite-n samples with limit laws.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::brw_sim::PointMeasure;

/// Evaluation grid used when none is configured.
pub const DEFAULT_GRID: [f64; 6] = [0.5, 0.75, 1.0, 1.5, 2.0, 3.0];

/// Counts above this value share one overflow bucket in
/// [`count_distribution_tv`].
pub const COUNT_CAP: u64 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("evaluation grid is empty")]
    EmptyGrid,
    #[error("sample is empty")]
    EmptySample,
    #[error("test function support starts at {support} but atoms are only retained beyond {threshold}")]
    SupportBelowRetention { support: f64, threshold: f64 },
    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),
    #[error("observed and expected bins differ in length ({0} vs {1})")]
    BinMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted_values: Vec<f64>,
}

impl Ecdf {
    /// NaNs are dropped.
    pub fn new(mut values: Vec<f64>) -> Self {
        values.retain(|v| !v.is_nan());
        values.sort_by(f64::total_cmp);
        Ecdf { sorted_values: values }
    }

    pub fn n(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    /// Fraction of values `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.sorted_values.is_empty() {
            return 0.0;
        }
        let below = self.sorted_values.partition_point(|&v| v <= x);
        below as f64 / self.n() as f64
    }
}

/// `sup` over the grid of `|ecdf(x) - cdf(x)|`.
pub fn ks_distance<F: Fn(f64) -> f64>(ecdf: &Ecdf, cdf: F, grid: &[f64]) -> Result<f64, StatsError> {
    if grid.is_empty() {
        return Err(StatsError::EmptyGrid);
    }
    Ok(grid.iter().map(|&x| (ecdf.eval(x) - cdf(x)).abs()).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsTest {
    pub statistic: f64,
    /// Asymptotic Kolmogorov p-value.
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test over the full real line.
pub fn ks_two_sample(a: &Ecdf, b: &Ecdf) -> Result<KsTest, StatsError> {
    if a.n() == 0 || b.n() == 0 {
        return Err(StatsError::EmptySample);
    }
    let (xs, ys) = (a.sorted_values(), b.sorted_values());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / xs.len() as f64 - j as f64 / ys.len() as f64).abs());
    }
    let ne = (xs.len() * ys.len()) as f64 / (xs.len() + ys.len()) as f64;
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsTest { statistic: d, p_value: kolmogorov_survival(lambda) })
}

/// `P(K > lambda)` for the Kolmogorov distribution.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Total-variation distance between the empirical pmfs of two count
/// samples, with counts above [`COUNT_CAP`] pooled.
pub fn count_distribution_tv(a: &[u64], b: &[u64]) -> Result<f64, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let pmf = |xs: &[u64]| {
        let mut p = vec![0.0; COUNT_CAP as usize + 2];
        for &x in xs {
            p[x.min(COUNT_CAP + 1) as usize] += 1.0;
        }
        p.iter_mut().for_each(|v| *v /= xs.len() as f64);
        p
    };
    let (pa, pb) = (pmf(a), pmf(b));
    Ok(0.5 * pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of observed counts against cell probabilities.
///
/// Mass not covered by `probs` forms an extra cell; cells with expected
/// count below 5 are pooled from the right.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], overflow: u64) -> Result<ChiSquareTest, StatsError> {
    if observed.len() != probs.len() {
        return Err(StatsError::BinMismatch(observed.len(), probs.len()));
    }
    let total = observed.iter().sum::<u64>() + overflow;
    if total == 0 {
        return Err(StatsError::EmptySample);
    }
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> =
        observed.iter().zip(probs).map(|(&o, &p)| (o as f64, n * p)).collect();
    let rest = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    cells.push((overflow as f64, n * rest));
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for &(o, e) in cells.iter().rev() {
        acc = (acc.0 + o, acc.1 + e);
        if acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    match pooled.last_mut() {
        Some(last) => {
            last.0 += acc.0;
            last.1 += acc.1;
        }
        None => pooled.push(acc),
    }
    let statistic: f64 = pooled
        .iter()
        .map(|&(o, e)| if e > 0.0 { (o - e).powi(2) / e } else if o > 0.0 { f64::INFINITY } else { 0.0 })
        .sum();
    let dof = pooled.len().saturating_sub(1).max(1);
    let p_value = if statistic.is_finite() {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic)
    } else {
        0.0
    };
    Ok(ChiSquareTest { statistic, dof, p_value })
}

/// Nonnegative test functions supported away from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `theta * 1(t > x)`.
    IndicatorAbove { x: f64, theta: f64 },
    /// `theta * 1(t < -y)`.
    IndicatorBelow { y: f64, theta: f64 },
    /// `theta * clamp((|t| - a) / (b - a), 0, 1)`.
    Bump { a: f64, b: f64, theta: f64 },
}

impl TestFunction {
    pub fn validate(&self) -> Result<(), StatsError> {
        let bad = |m: &str| Err(StatsError::InvalidTestFunction(m.into()));
        match *self {
            TestFunction::IndicatorAbove { x, theta } if !(x > 0.0) || !(theta >= 0.0) => {
                bad("indicator needs x > 0 and theta >= 0")
            }
            TestFunction::IndicatorBelow { y, theta } if !(y > 0.0) || !(theta >= 0.0) => {
                bad("indicator needs y > 0 and theta >= 0")
            }
            TestFunction::Bump { a, b, theta } if !(a > 0.0) || !(b > a) || !(theta >= 0.0) => {
                bad("bump needs 0 < a < b and theta >= 0")
            }
            _ => Ok(()),
        }
    }

    /// Smallest `|t|` where the function can be nonzero.
    pub fn support_start(&self) -> f64 {
        match *self {
            TestFunction::IndicatorAbove { x, .. } => x,
            TestFunction::IndicatorBelow { y, .. } => y,
            TestFunction::Bump { a, .. } => a,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TestFunction::IndicatorAbove { x, theta } => {
                if t > x {
                    theta
                } else {
                    0.0
                }
            }
            TestFunction::IndicatorBelow { y, theta } => {
                if t < -y {
                    theta
                } else {
                    0.0
                }
            }
            TestFunction::Bump { a, b, theta } => theta * ((t.abs() - a) / (b - a)).clamp(0.0, 1.0),
        }
    }

    /// `sum_atoms multiplicity * f(location)`.
    pub fn integrate(&self, measure: &PointMeasure) -> f64 {
        measure.atoms().iter().map(|&(loc, m)| m as f64 * self.eval(loc)).sum()
    }
}

/// Mean over `measures` of `exp(-N(f))`.
///
/// `threshold` is the level below which the measures are incomplete
/// (retention level of simulated atoms, or floor of limit draws); `f` must
/// vanish there.
pub fn laplace_estimate(
    measures: &[PointMeasure],
    f: &TestFunction,
    threshold: f64,
) -> Result<f64, StatsError> {
    f.validate()?;
    if f.support_start() < threshold {
        return Err(StatsError::SupportBelowRetention { support: f.support_start(), threshold });
    }
    if measures.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let total: f64 = measures.iter().map(|m| (-f.integrate(m)).exp()).sum();
    Ok(total / measures.len() as f64)
}
