//! Generation-by-generation simulation of the branching random walk.
//!
//! Only one generation of positions is held in memory. The last generation
//! is never stored: its positions are streamed into the top/bottom order
//! statistics and the retained extremal atoms as they are produced.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::displacement::{b_n, DisplacementModel};
use crate::environment::{sample_env, EnvSequence, EnvironmentModel};
use crate::error::ModelError;
use crate::offspring::OffspringSampler;
use crate::rng::derived_rng;

pub const DEFAULT_POPULATION_CAP: u64 = 1 << 24;
pub const DEFAULT_MAX_RESTARTS: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n: usize,
    pub env: EnvironmentModel,
    pub disp: DisplacementModel,
    /// Leaves with `|S(v)| / B_n > retain_delta` become atoms.
    pub retain_delta: f64,
    pub top_k: usize,
    pub population_cap: u64,
    pub condition_on_survival: bool,
    /// Displacements with `|X| > jump_eta * B_n` count as big jumps on a path.
    pub jump_eta: f64,
    pub seed: u64,
    pub max_restarts: u64,
}

impl SimConfig {
    pub fn new(n: usize, env: EnvironmentModel, disp: DisplacementModel) -> Self {
        SimConfig {
            n,
            env,
            disp,
            retain_delta: 0.25,
            top_k: 5,
            population_cap: DEFAULT_POPULATION_CAP,
            condition_on_survival: true,
            jump_eta: 0.1,
            seed: 0,
            max_restarts: DEFAULT_MAX_RESTARTS,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(self.retain_delta > 0.0) {
            return bad(format!("retain_delta = {} must be positive", self.retain_delta));
        }
        if !(self.jump_eta > 0.0) {
            return bad(format!("jump_eta = {} must be positive", self.jump_eta));
        }
        if self.top_k < 2 {
            return bad("top_k must be at least 2".into());
        }
        if self.population_cap == 0 {
            return bad("population_cap must be at least 1".into());
        }
        self.env.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("generation {generation} reached {size} particles, above the cap {cap}")]
    PopulationCapExceeded { generation: usize, size: u64, cap: u64 },
    #[error("no surviving population after {0} restarts")]
    TooManyRestarts(u64),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Finite point measure on `R \ {0}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PointMeasure {
    atoms: Vec<(f64, u64)>,
}

impl PointMeasure {
    /// Atoms with zero multiplicity or location 0 are dropped.
    pub fn from_atoms(mut atoms: Vec<(f64, u64)>) -> Self {
        atoms.retain(|&(loc, m)| m > 0 && loc != 0.0);
        PointMeasure { atoms }
    }

    /// Groups exactly coinciding locations into atoms, sorted by location.
    pub fn from_locations(mut locations: Vec<f64>) -> Self {
        locations.sort_by(f64::total_cmp);
        let mut atoms: Vec<(f64, u64)> = Vec::new();
        for loc in locations {
            match atoms.last_mut() {
                Some((last, m)) if *last == loc => *m += 1,
                _ => atoms.push((loc, 1)),
            }
        }
        PointMeasure::from_atoms(atoms)
    }

    pub fn atoms(&self) -> &[(f64, u64)] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> u64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `N(x, inf)`.
    pub fn count_above(&self, x: f64) -> u64 {
        self.atoms.iter().filter(|a| a.0 > x).map(|a| a.1).sum()
    }

    /// `N(-inf, -y)`.
    pub fn count_below(&self, y: f64) -> u64 {
        self.atoms.iter().filter(|a| a.0 < -y).map(|a| a.1).sum()
    }

    pub fn max_location(&self) -> Option<f64> {
        self.atoms.iter().map(|a| a.0).max_by(f64::total_cmp)
    }

    pub fn scaled(&self, s: f64) -> PointMeasure {
        PointMeasure::from_atoms(self.atoms.iter().map(|&(l, m)| (l * s, m)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Survived,
    /// Only produced when survival is not conditioned on.
    ExtinctionUnconditioned,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpDiagnostics {
    /// Leaves whose ancestral path carries at least two big jumps.
    pub paths_with_two_big_jumps: u64,
    /// `big_jump_generations[i]`: displacements from generation-i parents
    /// with `|X| > retain_delta * B_n`.
    pub big_jump_generations: Vec<u64>,
    /// Largest `|X|` anywhere in the tree and the generation of its parent.
    pub max_jump: f64,
    pub max_jump_generation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrwOutcome {
    pub env_seq: EnvSequence,
    pub z: Vec<u64>,
    pub b_n: f64,
    /// Normalised positions `S(v) / B_n` beyond `retain_delta`.
    pub atoms: PointMeasure,
    /// Largest positions, descending (unnormalised).
    pub top: Vec<f64>,
    /// Smallest positions, ascending (unnormalised).
    pub bottom: Vec<f64>,
    pub w_n: f64,
    pub diagnostics: JumpDiagnostics,
    pub restarts: u64,
    pub status: Status,
}

impl BrwOutcome {
    pub fn z_n(&self) -> u64 {
        *self.z.last().unwrap()
    }

    pub fn pi_n(&self) -> f64 {
        self.env_seq.pi_n()
    }

    /// `M_n^{(i)} / B_n` for `i = 1..`.
    pub fn normalized_top(&self) -> Vec<f64> {
        self.top.iter().map(|x| x / self.b_n).collect()
    }

    pub fn normalized_bottom(&self) -> Vec<f64> {
        self.bottom.iter().map(|x| x / self.b_n).collect()
    }
}

/// Keeps the `k` most extreme values seen, most extreme first.
struct Extremes {
    k: usize,
    values: Vec<f64>,
    descending: bool,
}

impl Extremes {
    fn new(k: usize, descending: bool) -> Self {
        Extremes { k, values: Vec::with_capacity(k + 1), descending }
    }

    #[inline]
    fn offer(&mut self, x: f64) {
        let beats = |a: f64, b: f64| if self.descending { a > b } else { a < b };
        if self.values.len() == self.k && !beats(x, *self.values.last().unwrap()) {
            return;
        }
        let at = self.values.partition_point(|&v| !beats(x, v));
        self.values.insert(at, x);
        self.values.truncate(self.k);
    }
}

pub fn simulate<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<BrwOutcome, SimError> {
    config.validate()?;
    let mut restarts = 0;
    loop {
        let outcome = simulate_once(config, restarts, rng)?;
        if outcome.status == Status::Survived || !config.condition_on_survival {
            return Ok(outcome);
        }
        restarts += 1;
        if restarts > config.max_restarts {
            return Err(SimError::TooManyRestarts(config.max_restarts));
        }
    }
}

fn simulate_once<R: Rng + ?Sized>(
    config: &SimConfig,
    restarts: u64,
    rng: &mut R,
) -> Result<BrwOutcome, SimError> {
    let n = config.n;
    let env_seq = sample_env(&config.env, n, rng);
    let bn = b_n(env_seq.pi_n(), config.disp.alpha());
    let jump_level = config.jump_eta * bn;
    let retain_jump_level = config.retain_delta * bn;
    let samplers: Vec<OffspringSampler> = env_seq.laws.iter().map(|l| l.sampler()).collect();

    let mut positions = vec![0.0f64];
    let mut counters = vec![0u8];
    let mut next_positions = Vec::new();
    let mut next_counters = Vec::new();
    let mut brood = Vec::new();
    let mut z = Vec::with_capacity(n + 1);
    z.push(1u64);

    let mut diagnostics = JumpDiagnostics {
        paths_with_two_big_jumps: 0,
        big_jump_generations: vec![0; n],
        max_jump: 0.0,
        max_jump_generation: None,
    };
    let mut top = Extremes::new(config.top_k, true);
    let mut bottom = Extremes::new(config.top_k, false);
    let mut retained = Vec::new();
    let mut leaves = 0u64;

    for (i, sampler) in samplers.iter().enumerate() {
        let last = i + 1 == n;
        next_positions.clear();
        next_counters.clear();
        let mut size = 0u64;
        for (&pos, &count) in positions.iter().zip(&counters) {
            let v = sampler.sample(rng);
            if v == 0 {
                continue;
            }
            size += v;
            if size > config.population_cap {
                return Err(SimError::PopulationCapExceeded {
                    generation: i + 1,
                    size,
                    cap: config.population_cap,
                });
            }
            config.disp.sample_brood_into(v as usize, rng, &mut brood)?;
            for &x in &brood {
                let ax = x.abs();
                if ax > diagnostics.max_jump {
                    diagnostics.max_jump = ax;
                    diagnostics.max_jump_generation = Some(i);
                }
                if ax > retain_jump_level {
                    diagnostics.big_jump_generations[i] += 1;
                }
                let child_count = count.saturating_add(u8::from(ax > jump_level)).min(2);
                let child = pos + x;
                if last {
                    top.offer(child);
                    bottom.offer(child);
                    let normalized = child / bn;
                    if normalized.abs() > config.retain_delta {
                        retained.push(normalized);
                    }
                    if child_count >= 2 {
                        diagnostics.paths_with_two_big_jumps += 1;
                    }
                } else {
                    next_positions.push(child);
                    next_counters.push(child_count);
                }
            }
        }
        z.push(size);
        if last {
            leaves = size;
        } else {
            std::mem::swap(&mut positions, &mut next_positions);
            std::mem::swap(&mut counters, &mut next_counters);
        }
        if size == 0 {
            z.resize(n + 1, 0);
            break;
        }
    }

    let w_n = leaves as f64 / env_seq.pi_n();
    let status = if leaves > 0 { Status::Survived } else { Status::ExtinctionUnconditioned };
    Ok(BrwOutcome {
        env_seq,
        z,
        b_n: bn,
        atoms: PointMeasure::from_locations(retained),
        top: top.values,
        bottom: bottom.values,
        w_n,
        diagnostics,
        restarts,
        status,
    })
}

/// Replication `rep` of an experiment, on its own random stream.
pub fn simulate_replication(config: &SimConfig, rep: u64) -> Result<BrwOutcome, SimError> {
    simulate(config, &mut derived_rng(config.seed, rep))
}

/// Replications `0..reps`, run in parallel; results are in replication order
/// and independent of the thread count.
pub fn simulate_batch(config: &SimConfig, reps: u64) -> Vec<Result<BrwOutcome, SimError>> {
    (0..reps).into_par_iter().map(|r| simulate_replication(config, r)).collect()
}

pub fn extremal_process(outcome: &BrwOutcome) -> PointMeasure {
    outcome.atoms.clone()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub replications: usize,
    /// Fraction of replications with some leaf carrying two big jumps.
    pub two_jump_fraction: f64,
    /// Mean over surviving replications of the fraction of leaves carrying
    /// two big jumps.
    pub two_jump_path_fraction: f64,
    pub rho: usize,
    /// Share of big displacements made by parents in generations `< n - rho`.
    pub early_jump_fraction: f64,
}

pub fn diagnostics_report(outcomes: &[BrwOutcome], rho: usize) -> DiagnosticsReport {
    let reps = outcomes.len();
    let flagged = outcomes.iter().filter(|o| o.diagnostics.paths_with_two_big_jumps > 0).count();
    let surviving: Vec<&BrwOutcome> = outcomes.iter().filter(|o| o.z_n() > 0).collect();
    let path_fraction = if surviving.is_empty() {
        0.0
    } else {
        surviving
            .iter()
            .map(|o| o.diagnostics.paths_with_two_big_jumps as f64 / o.z_n() as f64)
            .sum::<f64>()
            / surviving.len() as f64
    };
    let (mut early, mut total) = (0u64, 0u64);
    for o in outcomes {
        let hist = &o.diagnostics.big_jump_generations;
        let cut = hist.len().saturating_sub(rho);
        early += hist[..cut].iter().sum::<u64>();
        total += hist.iter().sum::<u64>();
    }
    DiagnosticsReport {
        replications: reps,
        two_jump_fraction: if reps == 0 { 0.0 } else { flagged as f64 / reps as f64 },
        two_jump_path_fraction: path_fraction,
        rho,
        early_jump_fraction: if total == 0 { 0.0 } else { early as f64 / total as f64 },
    }
}
