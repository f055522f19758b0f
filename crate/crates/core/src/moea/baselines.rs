//! Comparison baselines: a particle-swarm search on the linear
//! scalarization `alpha * QLoss - (1 - alpha) * ExpErr`, and a
//! single-objective per-cell search under the strict budget rule with
//! cell-local reporting ranges.
//!
//! Partitions have no natural velocity, so a particle "moves" per cell by
//! regrowing from the centers of its own (perturbed), personal-best, or
//! global-best partition, chosen with probability proportional to the
//! inertia, `c1 * r1` and `c2 * r2` weights.

use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{initial_population, medoids, planner, rebuild_cell, Individual, MoeaConfig};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::grid::PartitionTree;
use crate::mechanism::mechanism_row;
use crate::pls::{Feasibility, Pls, PlsPartition, PrivacyConfig, RetC};
use crate::rng::{self, Rng};

/// `{0, 0.1, ..., 1}`.
pub const DEFAULT_ALPHAS: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// `alpha * qloss - (1 - alpha) * exp_err`.
pub fn scalarized(alpha: f64, qloss: f64, exp_err: f64) -> f64 {
    alpha * qloss - (1.0 - alpha) * exp_err
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    /// Swarm iterations per alpha. `None` matches the evaluation count of
    /// `max_generations` generations, split evenly across the alphas.
    pub iterations: Option<usize>,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        PsoConfig {
            iterations: None,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoSolution {
    pub alpha: f64,
    pub score: f64,
    pub best: Individual,
}

/// Swarm iterations per alpha that spend about as many evaluations as
/// `generations` generations of the evolutionary search (n offspring per
/// generation against n particles per iteration).
pub fn matched_iterations(generations: usize, alphas: usize) -> usize {
    generations.div_ceil(alphas.max(1)).max(1)
}

const STREAM_PSO: u64 = 0x50;
const STREAM_DPIVE: u64 = 0x44;

/// Best partition found for each alpha. The swarm starts from the same
/// initial population the evolutionary search would use with `mcfg`.
pub fn pso_baseline(
    domain: &Domain,
    tree: &PartitionTree,
    cfg: &PrivacyConfig,
    mcfg: &MoeaConfig,
    pso: &PsoConfig,
    alphas: &[f64],
) -> Result<Vec<PsoSolution>> {
    mcfg.validate()?;
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidConfig(format!("alpha {a} outside [0, 1]")));
    }
    if alphas.is_empty() {
        return Ok(Vec::new());
    }
    let planner = planner(domain, tree, cfg, mcfg.seed)?;
    let init = initial_population(&planner, mcfg.population, mcfg.seed)?;
    let iterations = pso
        .iterations
        .unwrap_or_else(|| matched_iterations(mcfg.max_generations, alphas.len()))
        .max(1);

    alphas
        .iter()
        .enumerate()
        .map(|(ai, &alpha)| {
            let score = |i: &Individual| scalarized(alpha, i.qloss(), i.exp_err());
            let mut particles = init.clone();
            let mut pbest = init.clone();
            let mut gbest = argmin(&pbest, score).clone();
            for it in 0..iterations {
                particles = (0..particles.len())
                    .into_par_iter()
                    .map(|p| {
                        let mut r = rng::stream(mcfg.seed, &[STREAM_PSO, ai as u64, it as u64, p as u64]);
                        let next = fly(&planner, pso, &particles[p], &pbest[p], &gbest, &mut r)?;
                        Individual::evaluate(next, domain)
                    })
                    .collect::<Result<Vec<_>>>()?;
                for (pb, cur) in pbest.iter_mut().zip(&particles) {
                    if score(cur) < score(pb) {
                        *pb = cur.clone();
                    }
                }
                let best = argmin(&pbest, score);
                if score(best) < score(&gbest) {
                    gbest = best.clone();
                }
            }
            Ok(PsoSolution {
                alpha,
                score: score(&gbest),
                best: gbest,
            })
        })
        .collect()
}

fn argmin(pop: &[Individual], score: impl Fn(&Individual) -> f64) -> &Individual {
    pop.iter()
        .reduce(|a, b| if score(b) < score(a) { b } else { a })
        .expect("nonempty swarm")
}

fn fly(
    planner: &RetC,
    pso: &PsoConfig,
    current: &Individual,
    pbest: &Individual,
    gbest: &Individual,
    rng: &mut Rng,
) -> Result<PlsPartition> {
    let mut cells = Vec::with_capacity(planner.tree.cells.len());
    for cell in 0..planner.tree.cells.len() {
        let w = [
            pso.inertia,
            pso.cognitive * rng.gen::<f64>(),
            pso.social * rng.gen::<f64>(),
        ];
        let total: f64 = w.iter().sum();
        let u = rng.gen::<f64>() * total;
        let source = if u < w[0] {
            0
        } else if u < w[0] + w[1] {
            1
        } else {
            2
        };
        let from = [current, pbest, gbest][source];
        let mut centers = medoids(&RetC::cell_plss(&from.partition, cell), planner.domain);
        if source == 0 && !centers.is_empty() {
            let others: Vec<usize> = planner.tree.cells[cell]
                .members
                .iter()
                .copied()
                .filter(|m| !centers.contains(m))
                .collect();
            if let Some(&new) = others.choose(rng) {
                let slot = rng.gen_range(0..centers.len());
                centers[slot] = new;
            }
        }
        cells.push(rebuild_cell(planner, cell, &centers, rng)?);
    }
    Ok(planner.assemble(cells))
}

/// Per cell, the lowest-QLoss of `restarts` strict randomized constructions
/// and the deterministic fallback, with every PLS reporting over its own
/// cell only.
pub fn dpive_baseline(
    domain: &Domain,
    tree: &PartitionTree,
    cfg: &PrivacyConfig,
    restarts: usize,
    rng: &mut impl RngCore,
) -> Result<Individual> {
    let seed = rng.next_u64();
    let planner = RetC::new(domain, tree, cfg, rng::derive_key(seed, &[STREAM_DPIVE]))?;
    let mut plss = Vec::new();
    let mut ranges = Vec::new();
    for cell in &tree.cells {
        let mut best: Option<(f64, Vec<Pls>)> = None;
        let candidates = (0..restarts.max(1))
            .map(|r| planner.build_cell(cell.id, rng::derive_key(seed, &[STREAM_DPIVE, cell.id as u64, r as u64]), Feasibility::Strict))
            .chain(std::iter::once(planner.fallback_cell(cell.id, Feasibility::Strict)));
        for cand in candidates {
            let cand = cand?;
            let loss = cell_qloss(&cand, &cell.members, domain)?;
            if best.as_ref().is_none_or(|b| loss < b.0) {
                best = Some((loss, cand));
            }
        }
        let (_, chosen) = best.expect("at least one candidate");
        for p in chosen {
            plss.push(p);
            ranges.push(cell.members.clone());
        }
    }
    let partition = PlsPartition {
        plss,
        reporting_ranges: ranges,
        objectives: None,
    };
    partition.validate(domain, cfg, Some(tree), false)?;
    Individual::evaluate(partition, domain)
}

fn cell_qloss(plss: &[Pls], range: &[usize], domain: &Domain) -> Result<f64> {
    let mut total = 0.0;
    for p in plss {
        for &x in &p.members {
            let row = mechanism_row(domain, x, p, range)?;
            let ql: f64 = row.support.iter().zip(&row.probs).map(|(&o, &q)| q * domain.dist(x, o)).sum();
            total += domain.prior()[x] * ql;
        }
    }
    Ok(total)
}
