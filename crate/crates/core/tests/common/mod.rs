//! Reference simulator that materialises the whole labelled tree.
//!
//! It consumes random numbers in the same order as the streaming simulator
//! (environment first, then per parent its progeny count followed by its
//! brood) but keeps every node and recomputes leaf positions by walking the
//! ancestral line from the root.

#![allow(dead_code)]

use brwre_core::{b_n, PointMeasure, SimConfig};
use rand::Rng;

pub struct Node {
    pub parent: Option<usize>,
    pub displacement: f64,
}

#[derive(Debug, PartialEq)]
pub struct NaiveOutcome {
    pub z: Vec<u64>,
    pub top: Vec<f64>,
    pub bottom: Vec<f64>,
    pub atoms: PointMeasure,
    pub restarts: u64,
}

#[derive(Debug, PartialEq)]
pub enum NaiveError {
    CapExceeded,
}

pub fn naive_simulate<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Result<NaiveOutcome, NaiveError> {
    let mut restarts = 0;
    loop {
        let sampler = cfg.env.sampler();
        let laws: Vec<_> = (0..cfg.n).map(|_| cfg.env.support[sampler.sample_index(rng)].clone()).collect();
        let pi_n: f64 = {
            let mut pi = 1.0;
            for law in &laws {
                pi *= law.mean();
            }
            pi
        };
        let bn = b_n(pi_n, cfg.disp.alpha());

        let mut nodes = vec![Node { parent: None, displacement: 0.0 }];
        let mut generation: Vec<usize> = vec![0];
        let mut z = vec![1u64];
        for law in &laws {
            let mut next = Vec::new();
            for &parent in &generation {
                let v = law.sample(rng);
                if v == 0 {
                    continue;
                }
                let brood = cfg.disp.sample_brood(v as usize, rng).expect("brood fits");
                for x in brood {
                    nodes.push(Node { parent: Some(parent), displacement: x });
                    next.push(nodes.len() - 1);
                }
            }
            if next.len() as u64 > cfg.population_cap {
                return Err(NaiveError::CapExceeded);
            }
            z.push(next.len() as u64);
            generation = next;
            if generation.is_empty() {
                break;
            }
        }
        z.resize(cfg.n + 1, 0);

        if generation.is_empty() && cfg.condition_on_survival {
            restarts += 1;
            continue;
        }

        let mut positions: Vec<f64> = generation
            .iter()
            .map(|&leaf| {
                let mut path = Vec::new();
                let mut at = leaf;
                while let Some(p) = nodes[at].parent {
                    path.push(nodes[at].displacement);
                    at = p;
                }
                path.iter().rev().fold(0.0, |s, x| s + x)
            })
            .collect();
        let retained: Vec<f64> = positions
            .iter()
            .map(|p| p / bn)
            .filter(|x| x.abs() > cfg.retain_delta)
            .collect();
        positions.sort_by(|a, b| b.total_cmp(a));
        let top: Vec<f64> = positions.iter().take(cfg.top_k).copied().collect();
        let bottom: Vec<f64> = positions.iter().rev().take(cfg.top_k).copied().collect();
        return Ok(NaiveOutcome {
            z,
            top,
            bottom,
            atoms: PointMeasure::from_locations(retained),
            restarts,
        });
    }
}
