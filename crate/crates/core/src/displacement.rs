//! Heavy-tailed displacements with exact Pareto tails.
//!
//! Every marginal satisfies `P(|X| > t) = t^{-alpha}` above its support floor,
//! so the normalisation `B_n` is exactly `pi_n^{1/alpha}`. Children of one
//! parent receive a displacement vector whose joint tail is one of:
//!
//! * `Iid` – independent coordinates, limit measure concentrated on the axes;
//! * `FullDep` – one value shared by all children;
//! * `DiscreteAngular` – a radius times one of finitely many unit directions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

const MARGINAL_TOL: f64 = 1e-9;
const UNIT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DependenceMode {
    Iid,
    FullDep,
    /// Discrete angular measure `sum_m weights[m] delta_{atoms[m]}` on the
    /// unit sphere of `R^K`.
    DiscreteAngular { atoms: Vec<Vec<f64>>, weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplacementModel {
    alpha: f64,
    p: f64,
    mode: DependenceMode,
    /// Radius floor `r0 = c0^{1/alpha}` of the angular mode.
    #[serde(skip)]
    radius_floor: f64,
    #[serde(skip)]
    atom_cumulative: Vec<f64>,
}

impl DisplacementModel {
    pub fn iid(alpha: f64, p: f64) -> Result<Self, ModelError> {
        Self::scalar(alpha, p, DependenceMode::Iid)
    }

    pub fn full_dep(alpha: f64, p: f64) -> Result<Self, ModelError> {
        Self::scalar(alpha, p, DependenceMode::FullDep)
    }

    fn scalar(alpha: f64, p: f64, mode: DependenceMode) -> Result<Self, ModelError> {
        check_alpha(alpha)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::InvalidDisplacement(format!("balance p = {p} outside [0, 1]")));
        }
        Ok(DisplacementModel { alpha, p, mode, radius_floor: 1.0, atom_cumulative: Vec::new() })
    }

    /// Angular model; weights are rescaled so that `nu(|x_1| > 1) = 1`.
    ///
    /// Atoms must be unit vectors of a common dimension `K`, and the rescaled
    /// measure must give every coordinate the same tail mass and the same
    /// positive-tail share `p`, which is derived here.
    pub fn discrete_angular(
        alpha: f64,
        atoms: Vec<Vec<f64>>,
        weights: Vec<f64>,
    ) -> Result<Self, ModelError> {
        check_alpha(alpha)?;
        let bad = |msg: String| Err(ModelError::InvalidDisplacement(msg));
        if atoms.is_empty() || atoms.len() != weights.len() {
            return bad("need one positive weight per atom".into());
        }
        let k = atoms[0].len();
        if k == 0 || atoms.iter().any(|a| a.len() != k) {
            return bad("atoms must share a positive dimension".into());
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return bad("atom weights must be positive".into());
        }
        for a in &atoms {
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return bad(format!("atom {a:?} has norm {norm}"));
            }
        }
        let coord_mass = |j: usize, w: &[f64]| -> f64 {
            atoms.iter().zip(w).map(|(a, w)| w * a[j].abs().powf(alpha)).sum()
        };
        let first = coord_mass(0, &weights);
        if first <= 0.0 {
            return bad("first coordinate carries no tail mass".into());
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / first).collect();
        let positive_mass = |j: usize| -> f64 {
            atoms.iter().zip(&weights).map(|(a, w)| w * a[j].max(0.0).powf(alpha)).sum()
        };
        let p = positive_mass(0);
        for j in 1..k {
            let mass = coord_mass(j, &weights);
            if (mass - 1.0).abs() > MARGINAL_TOL {
                return bad(format!("coordinate {j} has tail mass {mass}, coordinate 0 has 1"));
            }
            let pj = positive_mass(j);
            if (pj - p).abs() > MARGINAL_TOL {
                return bad(format!("coordinate {j} has balance {pj}, coordinate 0 has {p}"));
            }
        }
        let c0: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let atom_cumulative = weights
            .iter()
            .map(|w| {
                acc += w / c0;
                acc
            })
            .collect();
        Ok(DisplacementModel {
            alpha,
            p,
            mode: DependenceMode::DiscreteAngular { atoms, weights },
            radius_floor: c0.powf(1.0 / alpha),
            atom_cumulative,
        })
    }

    /// Builds a model from its serialised parts. `p` is ignored (and must be
    /// consistent if given) in angular mode.
    pub fn from_parts(alpha: f64, p: Option<f64>, mode: DependenceMode) -> Result<Self, ModelError> {
        match mode {
            DependenceMode::Iid => Self::iid(alpha, p.unwrap_or(1.0)),
            DependenceMode::FullDep => Self::full_dep(alpha, p.unwrap_or(1.0)),
            DependenceMode::DiscreteAngular { atoms, weights } => {
                let model = Self::discrete_angular(alpha, atoms, weights)?;
                match p {
                    Some(p) if (p - model.p).abs() > MARGINAL_TOL => {
                        Err(ModelError::InvalidDisplacement(format!(
                            "configured p = {p} but the angular measure implies {}",
                            model.p
                        )))
                    }
                    _ => Ok(model),
                }
            }
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mode(&self) -> &DependenceMode {
        &self.mode
    }

    /// Angular dimension `K`, if any.
    pub fn dimension(&self) -> Option<usize> {
        match &self.mode {
            DependenceMode::DiscreteAngular { atoms, .. } => Some(atoms[0].len()),
            _ => None,
        }
    }

    /// Total mass `c0` of the angular measure (1 for the scalar modes).
    pub fn angular_mass(&self) -> f64 {
        match &self.mode {
            DependenceMode::DiscreteAngular { weights, .. } => weights.iter().sum(),
            _ => 1.0,
        }
    }

    /// Smallest possible `|X_j|` over coordinates with a nonzero component.
    pub fn support_floor(&self) -> f64 {
        match &self.mode {
            DependenceMode::DiscreteAngular { atoms, .. } => {
                let min = atoms
                    .iter()
                    .flat_map(|a| a.iter().map(|x| x.abs()))
                    .filter(|&x| x > 0.0)
                    .fold(f64::INFINITY, f64::min);
                self.radius_floor * min
            }
            _ => 1.0,
        }
    }

    #[inline]
    fn pareto<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> f64 {
        // U in (0, 1] keeps the draw finite
        let u: f64 = 1.0 - rng.random::<f64>();
        if self.alpha == 2.0 {
            scale / u.sqrt()
        } else {
            scale * u.powf(-1.0 / self.alpha)
        }
    }

    #[inline]
    fn signed_pareto<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let magnitude = self.pareto(1.0, rng);
        let positive = if self.p >= 1.0 {
            true
        } else if self.p <= 0.0 {
            false
        } else {
            rng.random::<f64>() < self.p
        };
        if positive {
            magnitude
        } else {
            -magnitude
        }
    }

    /// Pick an atom index with probability `w_m / c0`.
    pub(crate) fn sample_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.atom_cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.atom_cumulative.len() - 1)
    }

    /// Displacements of the `v` children of one parent, written to `out`.
    pub fn sample_brood_into<R: Rng + ?Sized>(
        &self,
        v: usize,
        rng: &mut R,
        out: &mut Vec<f64>,
    ) -> Result<(), ModelError> {
        out.clear();
        match &self.mode {
            DependenceMode::Iid => out.extend((0..v).map(|_| self.signed_pareto(rng))),
            DependenceMode::FullDep => {
                let x = self.signed_pareto(rng);
                out.resize(v, x);
            }
            DependenceMode::DiscreteAngular { atoms, .. } => {
                let k = atoms[0].len();
                if v > k {
                    return Err(ModelError::BroodTooLarge { v, k });
                }
                let atom = &atoms[self.sample_atom(rng)];
                let r = self.pareto(self.radius_floor, rng);
                out.extend(atom[..v].iter().map(|a| r * a));
            }
        }
        Ok(())
    }

    pub fn sample_brood<R: Rng + ?Sized>(&self, v: usize, rng: &mut R) -> Result<Vec<f64>, ModelError> {
        let mut out = Vec::with_capacity(v);
        self.sample_brood_into(v, rng, &mut out)?;
        Ok(out)
    }

    /// Mass `nu(H_pattern)` of the set where coordinate `j` lies in
    /// `(1, inf]` when `pattern[j]` is set and in `(-inf, 1]` otherwise, the
    /// remaining coordinates being free.
    ///
    /// The all-zero pattern contains a neighbourhood of the origin and has
    /// infinite mass.
    pub fn nu_h(&self, pattern: &Pattern) -> Result<f64, ModelError> {
        let bits = pattern.bits();
        let ones = pattern.ones();
        if ones == 0 {
            return Ok(f64::INFINITY);
        }
        Ok(match &self.mode {
            DependenceMode::Iid => {
                if ones == 1 {
                    self.p
                } else {
                    0.0
                }
            }
            DependenceMode::FullDep => {
                if ones == bits.len() {
                    self.p
                } else {
                    0.0
                }
            }
            DependenceMode::DiscreteAngular { atoms, weights } => {
                let k = atoms[0].len();
                if bits.len() > k {
                    return Err(ModelError::BroodTooLarge { v: bits.len(), k });
                }
                atoms
                    .iter()
                    .zip(weights)
                    .map(|(a, w)| w * self.radial_interval_mass(a, bits))
                    .sum()
            }
        })
    }

    /// `int alpha r^{-alpha-1} 1(r a_j in G_{bits_j} for all j) dr`.
    fn radial_interval_mass(&self, atom: &[f64], bits: &[bool]) -> f64 {
        let mut lo: f64 = 0.0;
        let mut hi = f64::INFINITY;
        for (&a, &bit) in atom.iter().zip(bits) {
            if bit {
                if a <= 0.0 {
                    return 0.0;
                }
                lo = lo.max(1.0 / a);
            } else if a > 0.0 {
                hi = hi.min(1.0 / a);
            }
        }
        if hi > lo && lo > 0.0 {
            lo.powf(-self.alpha) - if hi.is_finite() { hi.powf(-self.alpha) } else { 0.0 }
        } else {
            0.0
        }
    }

    /// `sums[k] = sum of nu_h over patterns of length v with k ones`, for
    /// `k = 1..=v` (`sums[0]` is left at 0).
    pub fn pattern_sums(&self, v: usize) -> Result<Vec<f64>, ModelError> {
        const MAX_ENUMERATED: usize = 24;
        let mut sums = vec![0.0; v + 1];
        if v == 0 {
            return Ok(sums);
        }
        if v > MAX_ENUMERATED {
            return Err(ModelError::InvalidDisplacement(format!(
                "pattern enumeration over {v} coordinates is not supported"
            )));
        }
        for mask in 1u32..(1u32 << v) {
            let pattern = Pattern::from_mask(mask, v);
            sums[pattern.ones()] += self.nu_h(&pattern)?;
        }
        Ok(sums)
    }
}

fn check_alpha(alpha: f64) -> Result<(), ModelError> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidDisplacement(format!("tail index {alpha} must be positive")))
    }
}

/// Exceedance pattern over the first `v` coordinates of a brood.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern(Vec<bool>);

impl Pattern {
    pub fn new(bits: Vec<bool>) -> Result<Self, ModelError> {
        if bits.is_empty() {
            return Err(ModelError::InvalidDisplacement("empty pattern".into()));
        }
        Ok(Pattern(bits))
    }

    /// Bit `j` of `mask` becomes coordinate `j`.
    pub fn from_mask(mask: u32, v: usize) -> Self {
        Pattern((0..v).map(|j| mask >> j & 1 == 1).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `B_n = inf{s >= 1 : P(|X| > s) < 1/pi_n}`, which is
/// `max(1, pi_n^{1/alpha})` for exact Pareto tails.
pub fn b_n(pi_n: f64, alpha: f64) -> f64 {
    pi_n.powf(1.0 / alpha).max(1.0)
}
